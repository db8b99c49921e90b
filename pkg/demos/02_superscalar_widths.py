# How issue width changes the control cost of a circuit step.
#
# A dense program has layers of simultaneous single-qubit gates. A scalar
# processor needs one cycle per instruction, so an 8-wide layer costs 8
# cycles (TR 4.0 at a 10 ns clock against a 20 ns gate); an 8-way processor
# dispatches the layer in one cycle and reaches TR 0.5.

from qcpsim import MachineConfig, build_report, gen_dense, run_program

program = gen_dense(qubits=8, steps=100)

for width in (1, 2, 4, 8):
    cfg = MachineConfig(superscalar_width=width)
    report = build_report(run_program(program, cfg), gate_ns=20)
    print(f"width {width}: avg TR {report.avg_tr:<5} max TR {report.max_tr:<5} "
          f"violations {len(report.violations)}")

r1 = build_report(run_program(program, MachineConfig(superscalar_width=1)),
                  gate_ns=20)
r8 = build_report(run_program(program, MachineConfig(superscalar_width=8)),
                  gate_ns=20)
print(f"\nscalar/8-way average-TR ratio: {r1.avg_tr / r8.avg_tr}")

# The schedule itself is a program property: whatever the width, the same
# operations are planned for the same instants. Width only changes whether
# the control side keeps up.
m1 = sorted((e.gate, e.qubits, e.scheduled_ns)
            for e in run_program(program, MachineConfig()).events)
m8 = sorted((e.gate, e.qubits, e.scheduled_ns)
            for e in run_program(program,
                                 MachineConfig(superscalar_width=8)).events)
assert m1 == m8
print("scheduled multisets identical across widths")
