"""Assembly grammar, binary encoding, and static validation."""

import math
import random

import pytest

from qcpsim.isa import (
    BranchCond, ClassicalOp, EncodingError, Gate, Instruction, Kind,
    BINARY_MAGIC, MAX_BLOCKS, ParseError, decode_instruction, decode_program,
    encode_instruction, encode_program, parse_program, print_program,
    quantize_angle, validate_program,
)

THREE_LINER = "0 H q0\n0 H q1\n1 CNOT q0,q1\n"


def test_parse_three_line_program():
    p = parse_program(THREE_LINER)
    assert len(p.instructions) == 3
    assert [i.timing_label for i in p.instructions] == [0, 0, 1]
    assert [i.gate for i in p.instructions] == [Gate.H, Gate.H, Gate.CNOT]
    assert p.instructions[2].qubits == (0, 1)
    assert p.qubit_count == 2


def test_parse_empty_program():
    p = parse_program(".qubits 1\n")
    assert len(p.instructions) == 0
    assert p.qubit_count == 1


def test_parse_meas_then_conditional():
    p = parse_program("0 MEAS q0 -> r0\nMRCE r0, q0, NOP, X\n")
    meas, mrce = p.instructions
    assert meas.gate == Gate.MEAS and meas.result_reg == 0
    assert mrce.kind == Kind.MRCE
    assert mrce.mrce_op0 == Gate.NOP and mrce.mrce_op1 == Gate.X
    assert mrce.mrce_target == 0


def test_parse_print_round_trip():
    src = "\n".join([
        ".qubits 4",
        "0 H q0",
        "0 MEAS q0 -> r3",
        "MRCE r3, q1, NOP, X",
        "2 RX q2, 1.5707963267948966",
        "LDI r5, -17",
        "MOV r6, r5",
        "ADD r7, r5, r6",
        "SUB r8, r7, r5",
        "AND r9, r7, r8",
        "OR r10, r9, r8",
        "CMP r9, r10",
        "BR.le 13",
        "FMR r1, r3",
        "4 CZ q2, q3",
        "JMP 15",
        "END",
    ]) + "\n"
    p = parse_program(src)
    assert parse_program(print_program(p)) == p


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as e:
        parse_program("0 H q0\nBOGUS r1\n")
    assert e.value.line_no == 2
    with pytest.raises(ParseError):
        parse_program("0 FROB q0\n")
    with pytest.raises(ParseError):
        parse_program("BR.eq nowhere\n")
    # mixed dependency styles in a single program
    with pytest.raises(ParseError):
        parse_program("0 H q0\n0 H q1\n"
                      ".block a start=0 end=0 deps=none\n"
                      ".block b start=1 end=1 prio=0\n")


def test_labels_resolve_to_addresses():
    p = parse_program("LDI r1, 1\nloop:\nADD r1, r1, r1\nJMP loop\n")
    assert p.instructions[2].target == 1


def test_mrce_encoding_layout():
    # fixed field order: opcode | result reg | target qubit | op0 | op1
    ins = Instruction(Kind.MRCE, result_reg=0, mrce_target=1,
                      mrce_op0=Gate.NOP, mrce_op1=Gate.X)
    word = encode_instruction(ins)
    assert (word >> 20) & 0x3F == 0
    assert (word >> 14) & 0x3F == 1
    assert (word >> 7) & 0x7F == int(Gate.NOP)
    assert word & 0x7F == int(Gate.X)
    assert decode_instruction(word) == ins


def test_angle_quantization_is_idempotent():
    a = quantize_angle(1.0)
    assert quantize_angle(a) == a
    assert quantize_angle(0.0) == 0.0
    assert abs(a - 1.0) <= math.pi / 1024


def test_field_overflow_rejected():
    ins = Instruction(Kind.QUANTUM, timing_label=0, gate=Gate.H, qubits=(64,))
    with pytest.raises(EncodingError):
        encode_instruction(ins)
    with pytest.raises(EncodingError):
        encode_instruction(Instruction(Kind.QUANTUM, timing_label=1 << 10,
                                       gate=Gate.H, qubits=(0,)))


def _random_instruction(rng: random.Random) -> Instruction:
    kind = rng.choice([Kind.QUANTUM, Kind.CLASSICAL, Kind.MRCE, Kind.END_BLOCK])
    if kind == Kind.QUANTUM:
        gate = rng.choice([Gate.X, Gate.Y, Gate.Z, Gate.H, Gate.RX, Gate.RY,
                           Gate.RZ, Gate.CNOT, Gate.CZ, Gate.MEAS])
        label = rng.randrange(0, 1 << 10)
        if gate in (Gate.CNOT, Gate.CZ):
            a = rng.randrange(64)
            b = (a + 1 + rng.randrange(63)) % 64
            return Instruction(kind, timing_label=label, gate=gate, qubits=(a, b))
        if gate == Gate.MEAS:
            return Instruction(kind, timing_label=label, gate=gate,
                               qubits=(rng.randrange(64),),
                               result_reg=rng.randrange(32))
        angle = 0.0
        if gate in (Gate.RX, Gate.RY, Gate.RZ):
            angle = quantize_angle(rng.uniform(0, 2 * math.pi))
        return Instruction(kind, timing_label=label, gate=gate,
                           qubits=(rng.randrange(64),), angle=angle)
    if kind == Kind.MRCE:
        ops = [Gate.NOP, Gate.X, Gate.Y, Gate.Z, Gate.H]
        return Instruction(kind, result_reg=rng.randrange(32),
                           mrce_target=rng.randrange(64),
                           mrce_op0=rng.choice(ops), mrce_op1=rng.choice(ops))
    if kind == Kind.END_BLOCK:
        return Instruction(kind)
    op = rng.choice(list(ClassicalOp))
    ins = Instruction(kind, classical_op=op)
    if op == ClassicalOp.LDI:
        ins.rd = rng.randrange(32)
        ins.imm = rng.randrange(-(1 << 20), 1 << 20)
    elif op == ClassicalOp.MOV:
        ins.rd, ins.ra = rng.randrange(32), rng.randrange(32)
    elif op in (ClassicalOp.ADD, ClassicalOp.SUB, ClassicalOp.AND, ClassicalOp.OR):
        ins.rd, ins.ra, ins.rb = (rng.randrange(32) for _ in range(3))
    elif op == ClassicalOp.CMP:
        ins.ra, ins.rb = rng.randrange(32), rng.randrange(32)
    elif op == ClassicalOp.FMR:
        ins.rd, ins.result_reg = rng.randrange(32), rng.randrange(32)
    elif op == ClassicalOp.BR:
        ins.cond = rng.choice(list(BranchCond))
        ins.target = rng.randrange(1 << 22)
    elif op == ClassicalOp.JMP:
        ins.target = rng.randrange(1 << 22)
    return ins


def test_encode_decode_round_trip_fuzz():
    rng = random.Random(2024)
    for _ in range(10_000):
        ins = _random_instruction(rng)
        word = encode_instruction(ins)
        assert 0 <= word < (1 << 32)
        assert decode_instruction(word) == ins


def test_timing_labels_survive_encode_decode():
    p = parse_program(THREE_LINER)
    labels = [i.timing_label for i in p.instructions]
    decoded = [decode_instruction(encode_instruction(i)) for i in p.instructions]
    assert [i.timing_label for i in decoded] == labels
    assert parse_program(print_program(p)).instructions == p.instructions


def test_validate_block_capacity():
    lines = [".qubits 1"] + ["0 H q0"] * (MAX_BLOCKS + 1)
    lines += [f".block b{i} start={i} end={i} deps=none"
              for i in range(MAX_BLOCKS + 1)]
    p = parse_program("\n".join(lines) + "\n")
    diags = validate_program(p)
    assert any("capacity exceeded" in d.message for d in diags)


def test_validate_clean_program():
    assert validate_program(parse_program(THREE_LINER)) == []


def test_validate_fmr_never_produced():
    # static def-use oracle: collect measurement destinations, then check
    produced = set()
    p = parse_program("0 MEAS q0 -> r2\nFMR r1, r5\n")
    for ins in p.instructions:
        if ins.is_quantum and ins.gate == Gate.MEAS:
            produced.add(ins.result_reg)
    assert 5 not in produced
    diags = validate_program(p)
    assert any("never produced" in d.message for d in diags)
    assert all(d.where for d in diags)


def test_validate_branch_target_in_block():
    p = parse_program("0 H q0\nJMP 5\n0 H q0\n"
                      ".block a start=0 end=2 deps=none\n")
    diags = validate_program(p)
    assert any("outside block" in d.message for d in diags)


def test_validate_dependency_cycle():
    p = parse_program("0 H q0\n0 H q0\n"
                      ".block a start=0 end=0 deps=b\n"
                      ".block b start=1 end=1 deps=a\n")
    diags = validate_program(p)
    assert any("cycle" in d.message for d in diags)


def test_binary_container_round_trip():
    p = parse_program(THREE_LINER + ".block main start=0 end=2 deps=none\n")
    blob = encode_program(p)
    assert blob[:8] == BINARY_MAGIC
    assert decode_program(blob) == p


def test_binary_container_priority_blocks():
    p = parse_program("0 H q0\n0 H q1\n"
                      ".block a start=0 end=0 prio=0\n"
                      ".block b start=1 end=1 prio=1\n")
    assert decode_program(encode_program(p)) == p
