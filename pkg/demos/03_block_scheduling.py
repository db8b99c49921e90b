# Dynamic block scheduling with prefetch across two processors.
#
# Four program blocks: W1 and W2 are independent, W3 needs both, W4 needs
# W3. Watch the scheduler preload the first pair, prefetch W3 into a spare
# cache while its dependencies still run, and switch it in cheaply the
# moment they finish.

from qcpsim import MachineConfig, parse_program, run_program

lines = [".qubits 4"]
spans = []
pc = 0
for i, q in enumerate(range(4)):
    start = pc
    for k in range(5):
        lines.append(f"{0 if k == 0 else 2} H q{q}")
        pc += 1
    spans.append((f"W{i + 1}", start, pc - 1))
for (name, s, e), deps in zip(spans, ("none", "none", "W1+W2", "W3")):
    lines.append(f".block {name} start={s} end={e} deps={deps}")
program = parse_program("\n".join(lines) + "\n")

trace = run_program(program, MachineConfig(cores=2))
names = {i: n for i, (n, _s, _e) in enumerate(spans)}
for ev in trace.scheduler_events:
    print(f"  cycle {ev.cycle:>3}: {ev.action:<8} {names[ev.block]} "
          f"on core {ev.core}")
print(f"two cores, prefetch on : {trace.total_cycles} cycles")

for label, kw in (("two cores, prefetch off", dict(cores=2, prefetch=False)),
                  ("one core,  prefetch off", dict(cores=1, prefetch=False))):
    t = run_program(program, MachineConfig(**kw))
    print(f"{label}: {t.total_cycles} cycles")
