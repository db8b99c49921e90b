"""Simulated quantum device and acquisition chain.

Qubits are classical outcome generators: a measurement draws a Bernoulli bit
from a seeded SplitMix64 stream and becomes readable after the readout pulse
plus acquisition latency. Gate durations only matter for occupancy tracking
(collision detection); no quantum state is simulated.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "SplitMix64", "QpuConfig", "IssueEvent", "Collision", "QpuState",
    "channel_for", "CHANNELS_PER_QUBIT",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# per-qubit analog channel triplet: microwave, flux, readout
CHANNELS_PER_QUBIT = 3
_CH_MICROWAVE = 0
_CH_FLUX = 1
_CH_READOUT = 2


class SplitMix64:
    """SplitMix64 stream; bit-exact across platforms and languages."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def next_below(self, n: int) -> int:
        return self.next_u64() % n


def _qubit_stream(seed: int, qubit: int) -> SplitMix64:
    # One independent stream per qubit: outcome sequences depend only on the
    # seed and how often that particular qubit was measured, never on the
    # interleaving of measurements across qubits or cores.
    return SplitMix64((seed ^ ((qubit + 1) * _GOLDEN)) & _MASK64)


@dataclass
class QpuConfig:
    qubit_count: int = 0             # 0 = size from the program
    single_gate_ns: int = 20
    two_gate_ns: int = 40
    meas_pulse_ns: int = 300
    daq_ns: int = 150
    jitter_ns: int = 0
    clock_period_ns: int = 10
    # probability of reading 1; either one number or {program point: p}
    outcome_bias: float | dict[int, float] = 0.0

    def bias_at(self, program_point: int) -> float:
        if isinstance(self.outcome_bias, dict):
            return self.outcome_bias.get(program_point, 0.0)
        return self.outcome_bias

    def duration_of(self, gate_name: str) -> int:
        if gate_name in ("CNOT", "CZ"):
            return self.two_gate_ns
        if gate_name == "MEAS":
            return self.meas_pulse_ns
        return self.single_gate_ns


@dataclass(frozen=True)
class IssueEvent:
    """Ground truth for one operation delivered to the device."""

    time_ns: int           # actual issue time
    scheduled_ns: int      # program-defined timing point (width-independent)
    gate: str
    qubits: tuple[int, ...]
    channel: int
    duration_ns: int
    core: int


@dataclass(frozen=True)
class Collision:
    qubit: int
    time_ns: int
    busy_until_ns: int
    gate: str


def channel_for(gate_name: str, qubit: int) -> int:
    if gate_name in ("CNOT", "CZ"):
        return CHANNELS_PER_QUBIT * qubit + _CH_FLUX
    if gate_name == "MEAS":
        return CHANNELS_PER_QUBIT * qubit + _CH_READOUT
    return CHANNELS_PER_QUBIT * qubit + _CH_MICROWAVE


class QpuState:
    """Device occupancy, issue log, and the seeded measurement model."""

    __slots__ = ("config", "qubit_count", "seed", "collect_events",
                 "busy_until", "events", "collisions", "event_count",
                 "last_event_end_ns", "_streams", "_durations",
                 "_scalar_bias", "_result_latency")

    def __init__(self, config: QpuConfig, qubit_count: int, seed: int,
                 collect_events: bool = True):
        self.config = config
        self.qubit_count = qubit_count
        self.seed = seed
        self.collect_events = collect_events
        self.busy_until = [0] * qubit_count
        self.events: list[IssueEvent] = []
        self.collisions: list[Collision] = []
        self.event_count = 0
        self.last_event_end_ns = 0
        self._streams: dict[int, SplitMix64] = {}
        self._durations = {
            "X": config.single_gate_ns, "Y": config.single_gate_ns,
            "Z": config.single_gate_ns, "H": config.single_gate_ns,
            "RX": config.single_gate_ns, "RY": config.single_gate_ns,
            "RZ": config.single_gate_ns, "CNOT": config.two_gate_ns,
            "CZ": config.two_gate_ns, "MEAS": config.meas_pulse_ns,
        }
        bias = config.outcome_bias
        self._scalar_bias = bias if not isinstance(bias, dict) else None
        self._result_latency = config.meas_pulse_ns + config.daq_ns

    def _stream(self, qubit: int) -> SplitMix64:
        s = self._streams.get(qubit)
        if s is None:
            s = self._streams[qubit] = _qubit_stream(self.seed, qubit)
        return s

    def accept_issue(self, time_ns: int, scheduled_ns: int, gate_name: str,
                     qubits: tuple[int, ...], core: int) -> None:
        """Log one operation and mark its qubits busy for the gate duration.

        Overlapping use of a busy qubit is recorded as a collision; the run
        continues so the full schedule stays inspectable.
        """
        duration = self._durations[gate_name]
        busy = self.busy_until
        end = time_ns + duration
        for q in qubits:
            if q >= self.qubit_count:
                raise ValueError(f"unknown qubit q{q}")
            if time_ns < busy[q]:
                self.collisions.append(
                    Collision(q, time_ns, busy[q], gate_name))
            busy[q] = end
        pair = duration == self.config.two_gate_ns and len(qubits) == 2
        self.event_count += 2 if pair else 1
        if end > self.last_event_end_ns:
            self.last_event_end_ns = end
        if self.collect_events:
            if pair:
                # one flux event per involved qubit, same timestamp
                for q in qubits:
                    self.events.append(IssueEvent(
                        time_ns, scheduled_ns, gate_name, qubits,
                        channel_for(gate_name, q), duration, core))
            else:
                self.events.append(IssueEvent(
                    time_ns, scheduled_ns, gate_name, qubits,
                    channel_for(gate_name, qubits[0]), duration, core))

    def measurement_result(self, qubit: int, issue_time_ns: int,
                           program_point: int) -> tuple[int, int]:
        """Draw the outcome bit and compute when it becomes readable."""
        stream = self._streams.get(qubit)
        if stream is None:
            stream = self._streams[qubit] = _qubit_stream(self.seed, qubit)
        bias = self._scalar_bias
        if bias is None:
            bias = self.config.bias_at(program_point)
        bit = 1 if stream.next_float() < bias else 0
        ready = issue_time_ns + self._result_latency
        if self.config.jitter_ns > 0:
            ready += stream.next_below(self.config.jitter_ns + 1)
        return bit, ready
