# Simple feedback control without stalling the pipeline.
#
# Active reset: measure q0 and, if it read 1, flip it back. Spelled out as
# a read-and-branch sequence, the whole instruction stream stalls behind
# the 450 ns readout. As a single conditional-execution instruction, the
# processor parks the control as a small context, keeps issuing unrelated
# gates, and switches back for three cycles when the result lands.

from qcpsim import MachineConfig, gen_active_reset_plus_rb, run_program


def timeline(mrce: bool):
    cfg = MachineConfig()
    cfg.qpu.outcome_bias = 1.0   # force the reset path
    return run_program(gen_active_reset_plus_rb(20, mrce=mrce), cfg)


fast = timeline(mrce=True)
slow = timeline(mrce=False)

meas = next(e for e in fast.events if e.gate == "MEAS")
rb_last = max(e.time_ns for e in fast.events if e.qubits == (1,))
reset = next(e for e in fast.events if e.gate == "X")
print(f"measurement issued at {meas.time_ns} ns, result at "
      f"{meas.time_ns + 450} ns")
print(f"all 20 unrelated gates done by {rb_last} ns, during the wait")
print(f"conditional reset issued at {reset.time_ns} ns")
print(f"context switch cost: {fast.context_switches[0]} cycles")

print(f"\ntotal time, conditional-execution form: {fast.total_exec_ns} ns")
print(f"total time, read-and-branch form:        {slow.total_exec_ns} ns")

# Same physics either way: the multiset of issued operations is identical.
assert sorted((e.gate, e.qubits) for e in fast.events) == \
       sorted((e.gate, e.qubits) for e in slow.events)
