import random

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from progen import random_source

from uvcark.asm import assemble
from uvcark.bits import BitString
from uvcark.isa import ProgramHeader
from uvcark.machine import (
    CONTINUE,
    Halt,
    Instruction,
    MachineState,
    MachineStopped,
    Trap,
    TrapError,
    TrapReason,
    Yield,
    decode_instruction,
    read_bits,
    run,
    step,
    write_bits,
)

HALT_ONLY, _ = assemble(".rw 4\n.iw 8\nHALT r0\n")


def blank_state():
    return MachineState.load(HALT_ONLY)


# read_bits / write_bits


def test_read_bits_examples():
    s = MachineState.load(HALT_ONLY, [BitString.from_str("10110011")])
    assert read_bits(s, 1, 0, 3) == 5
    assert read_bits(s, 1, 2, 0) == 0
    with pytest.raises(TrapError) as exc:
        read_bits(s, 1, 6, 4)
    assert exc.value.reason is TrapReason.OUT_OF_BOUNDS_READ


def test_read_of_unwritten_segment():
    s = blank_state()
    assert read_bits(s, 5, 0, 0) == 0
    with pytest.raises(TrapError):
        read_bits(s, 5, 0, 1)


def test_write_bits_examples():
    s = blank_state()
    write_bits(s, 1, 0, 4, 9)
    assert s.segments[1] == BitString.from_str("1001")
    write_bits(s, 1, 6, 2, 3)
    assert s.segments[1] == BitString.from_str("10010011")
    with pytest.raises(TrapError) as exc:
        write_bits(s, 1, 0, 2, 5)
    assert exc.value.reason is TrapReason.NEGATIVE_OPERAND


def test_write_to_program_segment_traps():
    with pytest.raises(TrapError) as exc:
        write_bits(blank_state(), 0, 0, 1, 1)
    assert exc.value.reason is TrapReason.WRITE_TO_PROGRAM


def test_write_beyond_host_limit_traps():
    s = MachineState.load(HALT_ONLY, max_segment_bits=64)
    with pytest.raises(TrapError) as exc:
        write_bits(s, 1, 60, 8, 0)
    assert exc.value.reason is TrapReason.RESOURCE_LIMIT


@given(
    st.integers(0, 2000),
    st.integers(0, 256).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1))),
    st.binary(max_size=64),
)
def test_read_after_write_and_locality(off, case, before):
    n, value = case
    s = MachineState.load(HALT_ONLY, [BitString(before)])
    old = s.segments[1].copy()
    write_bits(s, 1, off, n, value)
    assert read_bits(s, 1, off, n) == value
    new = s.segments[1]
    for i in range(len(old)):
        if not off <= i < off + n:
            assert new.read(i, 1) == old.read(i, 1)
    for i in range(len(old), off):
        assert new.read(i, 1) == 0


# decoding


def test_decode_add():
    header = ProgramHeader(4, 8)
    image = header.to_bits()
    image.extend(BitString.from_str("000101" "0001" "0010" "0011"))
    ins, nxt = decode_instruction(image, 40, header)
    assert ins == Instruction(5, (1, 2, 3))
    assert ins.mnemonic == "ADD"
    assert nxt == 58


def test_decode_bad_opcode_and_bad_pc():
    header = ProgramHeader(4, 8)
    image = header.to_bits()
    image.extend(BitString.from_str("111111" "0000"))
    with pytest.raises(TrapError) as exc:
        decode_instruction(image, 40, header)
    assert exc.value.reason is TrapReason.BAD_OPCODE
    with pytest.raises(TrapError) as exc:
        decode_instruction(image, len(image), header)
    assert exc.value.reason is TrapReason.BAD_PC
    with pytest.raises(TrapError) as exc:
        decode_instruction(image, 39, header)
    assert exc.value.reason is TrapReason.BAD_PC


def test_decode_truncated_operand_is_bad_pc():
    header = ProgramHeader(4, 8)
    image = header.to_bits()
    image.extend(BitString.from_str("000101" "0001" "00"))
    with pytest.raises(TrapError) as exc:
        decode_instruction(image, 40, header)
    assert exc.value.reason is TrapReason.BAD_PC


# single steps


def _prepared(source, **regs):
    image, _ = assemble(source)
    s = MachineState.load(image)
    s.registers.update({int(k[1:]): v for k, v in regs.items()})
    return s


def test_step_add():
    s = _prepared("ADD r0, r1, r2\nHALT r0\n", r1=2, r2=3)
    assert step(s) is CONTINUE
    assert s.reg(0) == 5
    assert s.steps_taken == 1


def test_step_div_truncates_toward_zero():
    s = _prepared("DIV r0, r1, r2\nHALT r0\n", r1=-7, r2=2)
    step(s)
    assert s.reg(0) == -3


def test_step_div_by_zero_traps_without_side_effects():
    s = _prepared("DIV r0, r1, r2\nHALT r0\n", r1=9)
    out = step(s)
    assert isinstance(out, Trap) and out.reason is TrapReason.DIVIDE_BY_ZERO
    assert s.pc == 40 and s.steps_taken == 0 and s.status == "trapped"
    with pytest.raises(MachineStopped):
        step(s)


@pytest.mark.parametrize(
    "a,b,q,r", [(7, 2, 3, 1), (-7, 2, -3, -1), (7, -2, -3, 1), (-7, -2, 3, -1), (0, 5, 0, 0)]
)
def test_div_rem_signs(a, b, q, r):
    s = _prepared("DIV r3, r1, r2\nREM r4, r1, r2\nHALT r0\n", r1=a, r2=b)
    step(s)
    step(s)
    assert (s.reg(3), s.reg(4)) == (q, r)


def test_register_default_is_zero():
    s = blank_state()
    assert s.reg(12345) == 0
    s2 = _prepared("MOVE r1, r99\nHALT r1\n", r1=4)
    assert run(s2, 10).outcome == Halt(0)


@pytest.mark.parametrize("source", [
    "AND r0, r1, r2\nHALT r0\n",
    "SHL r0, r2, r1\nHALT r0\n",
    "SHR r0, r1, r2\nHALT r0\n",
    "NOTL r0, r2, r1\nHALT r0\n",
])
def test_negative_operands_trap(source):
    s = _prepared(source, r1=-1, r2=3)
    out = step(s)
    assert isinstance(out, Trap) and out.reason is TrapReason.NEGATIVE_OPERAND


def test_bitwise_and_shifts():
    s = _prepared(
        "AND r3, r1, r2\nOR r4, r1, r2\nXOR r5, r1, r2\nNOTL r6, r1, r7\nSHL r8, r1, r7\nSHR r9, r1, r7\nHALT r0\n",
        r1=0b1100, r2=0b1010, r7=3,
    )
    for _ in range(6):
        step(s)
    assert [s.reg(i) for i in (3, 4, 5, 6, 8, 9)] == [0b1000, 0b1110, 0b0110, 0b011, 0b1100000, 0b1]


def test_loadn_and_segment_ops():
    image, _ = assemble(
        "LOADN r1, 5\nLOADI r2, 1\nSEGLEN r3, r2\nLOADI r4, 4\nLOAD r5, r2, r0, r4\nINCNT r6\nHALT r0\n"
    )
    s = MachineState.load(image, [BitString.from_str("110100")])
    run(s, 100)
    assert (s.reg(1), s.reg(3), s.reg(5), s.reg(6)) == (-5, 6, 0b1101, 1)


def test_load_from_program_segment():
    s = _prepared("LOADI r4, 16\nLOAD r1, r0, r0, r4\nHALT r0\n")
    run(s, 10)
    assert s.reg(1) == 0x5556


def test_yield_captures_value():
    image, _ = assemble("LOADI r1, 2\nLOADI r2, 8\nLOADI r3, 65\nSTORE r3, r1, r0, r2\nYIELD r1, r0, r2\nHALT r0\n")
    res = run(MachineState.load(image), 100)
    assert res.yields == [Yield(2, 0, 8, 65)]
    assert res.yields[0].bits == BitString(b"A")


def test_yield_from_program_segment_traps():
    res = run(_prepared("LOADI r2, 8\nYIELD r0, r0, r2\nHALT r0\n"), 10)
    assert res.outcome.reason is TrapReason.WRITE_TO_PROGRAM


def test_call_ret_and_empty_stack():
    res = run(_prepared("CALL f\nHALT r1\nf: LOADI r1, 9\nRET\n"), 100)
    assert res.outcome == Halt(9)
    res = run(_prepared("RET\n"), 10)
    assert res.outcome.reason is TrapReason.EMPTY_CALL_STACK


def test_running_off_the_end_is_bad_pc():
    res = run(_prepared("NOP\n"), 10)
    assert res.outcome.reason is TrapReason.BAD_PC
    assert res.state.steps_taken == 1


def test_resource_limit_on_huge_register():
    s = _prepared("LOADI r1, 1\nLOADI r2, 200\nSHL r1, r1, r2\nHALT r0\n")
    s.max_register_bits = 100
    res = run(s, 10)
    assert res.outcome.reason is TrapReason.RESOURCE_LIMIT


# run


def test_run_examples():
    image, _ = assemble("LOADI r0, 7\nHALT r0\n")
    s = MachineState.load(image)
    res = run(s, 10)
    assert res.outcome == Halt(7) and s.steps_taken == 2
    loop, _ = assemble("loop: BR loop\n")
    s = MachineState.load(loop)
    res = run(s, 5)
    assert res.outcome.reason is TrapReason.FUEL_EXHAUSTED
    assert s.steps_taken == 5


def test_fuel_exhaustion_is_resumable():
    image, _ = assemble("LOADI r1, 10\nloop: SUB r1, r1, r2\nBNE r1, r0, loop\nHALT r1\n")
    s = MachineState.load(image)
    s.registers[2] = 1
    assert run(s, 7).outcome.reason is TrapReason.FUEL_EXHAUSTED
    assert run(s, 1000).outcome == Halt(0)
    assert s.steps_taken == 22


def test_halting_exactly_on_last_fuel_step():
    image, _ = assemble("LOADI r0, 7\nHALT r0\n")
    s = MachineState.load(image)
    assert run(s, 2).outcome == Halt(7)
    assert s.steps_taken == 2


def test_run_rejects_non_positive_fuel():
    with pytest.raises(ValueError):
        run(blank_state(), 0)


def test_on_yield_callback_sees_every_yield():
    image, _ = assemble("LOADI r1, 1\nLOADI r2, 4\nSTORE r2, r1, r0, r2\nYIELD r1, r0, r2\nYIELD r1, r0, r2\nHALT r0\n")
    seen = []
    res = run(MachineState.load(image), 100, seen.append)
    assert seen == res.yields and len(seen) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 400))
def test_steps_never_exceed_fuel(seed, fuel):
    image, _ = assemble(random_source(random.Random(seed)))
    s = MachineState.load(image, max_register_bits=4096, max_segment_bits=1 << 16)
    res = run(s, fuel)
    assert s.steps_taken <= fuel
    exhausted = isinstance(res.outcome, Trap) and res.outcome.reason is TrapReason.FUEL_EXHAUSTED
    if s.steps_taken == fuel:
        assert exhausted or isinstance(res.outcome, Halt)
    else:
        assert not exhausted


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_run_is_deterministic(seed):
    image, _ = assemble(random_source(random.Random(seed)))
    results = []
    for _ in range(2):
        s = MachineState.load(image, [BitString(b"\x12\x34")], max_register_bits=4096, max_segment_bits=1 << 16)
        res = run(s, 500)
        results.append((res.outcome, res.yields, s.snapshot()))
    assert results[0] == results[1]


def test_clone_is_independent():
    s = _prepared("LOADI r1, 1\nHALT r1\n")
    c = s.clone()
    step(c)
    assert s.reg(1) == 0 and s.pc == 40 and c.reg(1) == 1


# arithmetic against gmpy2


@settings(max_examples=200, deadline=None)
@given(st.integers(-(2**4096), 2**4096), st.integers(-(2**4096), 2**4096))
def test_arithmetic_matches_gmpy2(a, b):
    s = _prepared("ADD r3, r1, r2\nSUB r4, r1, r2\nMUL r5, r1, r2\nHALT r0\n", r1=a, r2=b)
    for _ in range(3):
        step(s)
    ga, gb = gmpy2.mpz(a), gmpy2.mpz(b)
    assert (s.reg(3), s.reg(4), s.reg(5)) == (int(ga + gb), int(ga - gb), int(ga * gb))
    if b:
        s = _prepared("DIV r3, r1, r2\nREM r4, r1, r2\nHALT r0\n", r1=a, r2=b)
        step(s)
        step(s)
        assert s.reg(3) == int(gmpy2.t_div(ga, gb))
        assert s.reg(4) == int(gmpy2.t_mod(ga, gb))
