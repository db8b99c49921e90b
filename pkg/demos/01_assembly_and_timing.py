# Timed assembly in and issue events out.
#
# Timing labels give the interval, in clock cycles, between a quantum
# instruction's operation and the previous one's. Label 0 means "at the
# same instant". The simulator turns the program into a stream of issue
# events with both the program-defined schedule and the achieved times.

from qcpsim import MachineConfig, parse_program, print_program, run_program

source = """
0 H    q0
0 H    q1
1 CNOT q0, q1
"""

program = parse_program(source)
print("round trip:")
print(print_program(program))

trace = run_program(program, MachineConfig())
for e in trace.events:
    print(f"  t={e.time_ns:>3} ns scheduled={e.scheduled_ns:>3} ns "
          f"{e.gate:<5} qubits={e.qubits} channel={e.channel}")

# Both Hadamards issue at the same instant; the pair gate follows exactly
# one clock period (10 ns) later, as the label says.
hs = [e.time_ns for e in trace.events if e.gate == "H"]
cnot = next(e.time_ns for e in trace.events if e.gate == "CNOT")
assert hs[0] == hs[1] and cnot == hs[0] + 10

# The binary container is a 32-bit word stream behind a magic and a JSON
# block section.
from qcpsim import encode_program

blob = encode_program(program)
print(f"\nbinary: {len(blob)} bytes, magic {blob[:8]!r}")
