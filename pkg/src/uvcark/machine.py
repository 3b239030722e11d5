"""The Universal Virtual Computer: state, instruction decoding and execution.

Memory is a sparse map of growable, bit-addressable segments; segment 0
holds the program image and is read-only. Registers are signed integers
of unbounded magnitude, indexed without bound, and read as 0 until first
written. Only one thread of control exists.

Host resource limits (``max_register_bits``, ``max_segment_bits``) and fuel
are imposed by the host, not by the machine definition. Exceeding a limit
traps; nothing ever wraps silently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

from .bits import BitString
from .isa import (
    HEADER_BITS,
    NUM_OPCODES,
    OPCODE_BITS,
    OPCODES,
    ProgramHeader,
    validate_header,
)


class TrapReason(enum.Enum):
    BAD_OPCODE = "BadOpcode"
    BAD_PC = "BadPc"
    OUT_OF_BOUNDS_READ = "OutOfBoundsRead"
    DIVIDE_BY_ZERO = "DivideByZero"
    NEGATIVE_OPERAND = "NegativeOperand"
    EMPTY_CALL_STACK = "EmptyCallStack"
    FUEL_EXHAUSTED = "FuelExhausted"
    RESOURCE_LIMIT = "ResourceLimit"
    WRITE_TO_PROGRAM = "WriteToProgram"


class TrapError(Exception):
    """Raised inside the machine; ``step`` turns it into a ``Trap`` outcome."""

    def __init__(self, reason: TrapReason, detail: str = "", operands: tuple = (), pc: int | None = None):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason
        self.detail = detail
        self.operands = operands
        self.pc = pc


class Instruction(NamedTuple):
    opcode: int
    operands: tuple[int, ...]

    @property
    def mnemonic(self) -> str:
        return OPCODES[self.opcode][0]

    @property
    def kinds(self) -> str:
        return OPCODES[self.opcode][1]


# Step outcomes


@dataclass(frozen=True)
class Continue:
    pass


CONTINUE = Continue()


@dataclass(frozen=True)
class Yield:
    segment: int
    offset: int
    length: int
    value: int  # the yielded window as an unsigned integer, captured at yield time

    @property
    def bits(self) -> BitString:
        return BitString.from_int(self.value, self.length)


@dataclass(frozen=True)
class Halt:
    code: int


@dataclass(frozen=True)
class Trap:
    reason: TrapReason
    pc: int
    detail: str = ""
    operands: tuple = ()


StepOutcome = Union[Continue, Yield, Halt, Trap]

RUNNING, HALTED, TRAPPED = "running", "halted", "trapped"


@dataclass(eq=False)
class MachineState:
    program: BitString
    header: ProgramHeader
    segments: dict[int, BitString] = field(default_factory=dict)
    registers: dict[int, int] = field(default_factory=dict)
    pc: int = HEADER_BITS
    call_stack: list[int] = field(default_factory=list)
    steps_taken: int = 0
    input_count: int = 0
    status: str = RUNNING
    outcome: StepOutcome | None = None
    max_register_bits: int = 1 << 24
    max_segment_bits: int = 1 << 30
    _decoded: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.segments[0] = self.program

    @classmethod
    def load(cls, program: BitString, inputs=(), **limits) -> MachineState:
        header = validate_header(program)
        state = cls(program=program, header=header, input_count=len(inputs), **limits)
        for i, data in enumerate(inputs, start=1):
            state.segments[i] = data.copy()
        return state

    def reg(self, index: int) -> int:
        return self.registers.get(index, 0)

    def clone(self) -> MachineState:
        other = MachineState(
            program=self.program,
            header=self.header,
            segments={k: v.copy() for k, v in self.segments.items() if k != 0},
            registers=dict(self.registers),
            pc=self.pc,
            call_stack=list(self.call_stack),
            steps_taken=self.steps_taken,
            input_count=self.input_count,
            status=self.status,
            outcome=self.outcome,
            max_register_bits=self.max_register_bits,
            max_segment_bits=self.max_segment_bits,
        )
        other._decoded = self._decoded  # the program is immutable
        return other

    def snapshot(self) -> tuple:
        """Comparable view of the architectural state.

        Zero registers and empty segments are dropped, since they are
        indistinguishable from never-touched ones.
        """
        regs = tuple(sorted((k, v) for k, v in self.registers.items() if v))
        segs = tuple(sorted((k, len(v), v.to_bytes()) for k, v in self.segments.items() if len(v)))
        return (self.pc, self.steps_taken, self.status, tuple(self.call_stack), regs, segs, self.input_count)


# Memory access


def read_bits(state: MachineState, seg: int, off: int, length: int) -> int:
    if seg < 0 or off < 0 or length < 0:
        raise TrapError(TrapReason.NEGATIVE_OPERAND, "negative segment, offset or length", (seg, off, length))
    data = state.segments.get(seg)
    size = len(data) if data is not None else 0
    if off + length > size:
        raise TrapError(
            TrapReason.OUT_OF_BOUNDS_READ,
            f"bits [{off}, {off + length}) of segment {seg} (length {size})",
            (seg, off, length),
        )
    if length == 0:
        return 0
    return data.read(off, length)


def write_bits(state: MachineState, seg: int, off: int, length: int, value: int) -> None:
    if seg == 0:
        raise TrapError(TrapReason.WRITE_TO_PROGRAM, "segment 0 is the program", (seg, off, length))
    if seg < 0 or off < 0 or length < 0:
        raise TrapError(TrapReason.NEGATIVE_OPERAND, "negative segment, offset or length", (seg, off, length))
    if value < 0 or value >> length:
        raise TrapError(TrapReason.NEGATIVE_OPERAND, f"value does not fit in {length} bits", (seg, off, length))
    if off + length > state.max_segment_bits:
        raise TrapError(TrapReason.RESOURCE_LIMIT, "segment would exceed host limit", (seg, off, length))
    data = state.segments.get(seg)
    if data is None:
        data = state.segments[seg] = BitString()
    data.write(off, length, value)


# Decoding


def decode_instruction(program: BitString, pc: int, header: ProgramHeader) -> tuple[Instruction, int]:
    end = len(program)
    if pc < HEADER_BITS or pc + OPCODE_BITS > end:
        raise TrapError(TrapReason.BAD_PC, f"pc {pc} outside program body [{HEADER_BITS}, {end})", (), pc)
    opcode = program.read(pc, OPCODE_BITS)
    if opcode >= NUM_OPCODES:
        raise TrapError(TrapReason.BAD_OPCODE, f"opcode {opcode} at bit {pc}", (opcode,), pc)
    pos = pc + OPCODE_BITS
    operands = []
    for kind in OPCODES[opcode][1]:
        width = header.rw if kind == "R" else header.iw
        if pos + width > end:
            raise TrapError(TrapReason.BAD_PC, f"instruction at bit {pc} runs past program end", (opcode,), pc)
        operands.append(program.read(pos, width))
        pos += width
    return Instruction(opcode, tuple(operands)), pos


# Execution


def _checked(state: MachineState, value: int) -> int:
    if value.bit_length() > state.max_register_bits:
        raise TrapError(TrapReason.RESOURCE_LIMIT, "register value exceeds host limit")
    return value


def _tdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _x_halt(s, o, nxt):
    s.status = HALTED
    return Halt(s.registers.get(o[0], 0))


def _x_nop(s, o, nxt):
    s.pc = nxt
    return CONTINUE


def _x_loadi(s, o, nxt):
    s.registers[o[0]] = o[1]
    s.pc = nxt
    return CONTINUE


def _x_loadn(s, o, nxt):
    s.registers[o[0]] = -o[1]
    s.pc = nxt
    return CONTINUE


def _x_move(s, o, nxt):
    s.registers[o[0]] = s.registers.get(o[1], 0)
    s.pc = nxt
    return CONTINUE


def _arith(fn):
    def execute(s, o, nxt):
        r = s.registers
        r[o[0]] = fn(s, r.get(o[1], 0), r.get(o[2], 0))
        s.pc = nxt
        return CONTINUE

    return execute


def _mul(s, a, b):
    if a and b and a.bit_length() + b.bit_length() > s.max_register_bits + 1:
        raise TrapError(TrapReason.RESOURCE_LIMIT, "product exceeds host limit", (a.bit_length(), b.bit_length()))
    return _checked(s, a * b)


def _div(s, a, b):
    if b == 0:
        raise TrapError(TrapReason.DIVIDE_BY_ZERO, "", (a, b))
    return _tdiv(a, b)


def _rem(s, a, b):
    if b == 0:
        raise TrapError(TrapReason.DIVIDE_BY_ZERO, "", (a, b))
    return a - b * _tdiv(a, b)


def _nonneg(a, b):
    if a < 0 or b < 0:
        raise TrapError(TrapReason.NEGATIVE_OPERAND, "bitwise operand is negative", (a, b))


def _and(s, a, b):
    _nonneg(a, b)
    return a & b


def _or(s, a, b):
    _nonneg(a, b)
    return a | b


def _xor(s, a, b):
    _nonneg(a, b)
    return a ^ b


def _notl(s, a, n):
    _nonneg(a, n)
    if n > s.max_register_bits:
        raise TrapError(TrapReason.RESOURCE_LIMIT, "NOTL width exceeds host limit", (n,))
    mask = (1 << n) - 1
    return mask ^ (a & mask)


def _shl(s, a, k):
    if k < 0:
        raise TrapError(TrapReason.NEGATIVE_OPERAND, "negative shift", (a, k))
    if a and a.bit_length() + k > s.max_register_bits:
        raise TrapError(TrapReason.RESOURCE_LIMIT, "shift exceeds host limit", (a.bit_length(), k))
    return a << k


def _shr(s, a, k):
    _nonneg(a, k)
    return a >> k


def _x_load(s, o, nxt):
    r = s.registers
    r[o[0]] = read_bits(s, r.get(o[1], 0), r.get(o[2], 0), r.get(o[3], 0))
    s.pc = nxt
    return CONTINUE


def _x_store(s, o, nxt):
    r = s.registers
    write_bits(s, r.get(o[1], 0), r.get(o[2], 0), r.get(o[3], 0), r.get(o[0], 0))
    s.pc = nxt
    return CONTINUE


def _x_seglen(s, o, nxt):
    seg = s.registers.get(o[1], 0)
    if seg < 0:
        raise TrapError(TrapReason.NEGATIVE_OPERAND, "negative segment", (seg,))
    data = s.segments.get(seg)
    s.registers[o[0]] = len(data) if data is not None else 0
    s.pc = nxt
    return CONTINUE


def _x_br(s, o, nxt):
    s.pc = o[0]
    return CONTINUE


def _branch(test):
    def execute(s, o, nxt):
        r = s.registers
        s.pc = o[2] if test(r.get(o[0], 0), r.get(o[1], 0)) else nxt
        return CONTINUE

    return execute


def _x_call(s, o, nxt):
    s.call_stack.append(nxt)
    s.pc = o[0]
    return CONTINUE


def _x_ret(s, o, nxt):
    if not s.call_stack:
        raise TrapError(TrapReason.EMPTY_CALL_STACK)
    s.pc = s.call_stack.pop()
    return CONTINUE


def _x_yield(s, o, nxt):
    r = s.registers
    seg, off, length = r.get(o[0], 0), r.get(o[1], 0), r.get(o[2], 0)
    if seg == 0:
        raise TrapError(TrapReason.WRITE_TO_PROGRAM, "YIELD of the program segment", (seg, off, length))
    value = read_bits(s, seg, off, length)
    s.pc = nxt
    return Yield(seg, off, length, value)


def _x_incnt(s, o, nxt):
    s.registers[o[0]] = s.input_count
    s.pc = nxt
    return CONTINUE


_EXECUTE: tuple[Callable, ...] = (
    _x_halt,
    _x_nop,
    _x_loadi,
    _x_loadn,
    _x_move,
    _arith(lambda s, a, b: a + b),
    _arith(lambda s, a, b: a - b),
    _arith(_mul),
    _arith(_div),
    _arith(_rem),
    _arith(_and),
    _arith(_or),
    _arith(_xor),
    _arith(_notl),
    _arith(_shl),
    _arith(_shr),
    _x_load,
    _x_store,
    _x_seglen,
    _x_br,
    _branch(lambda a, b: a == b),
    _branch(lambda a, b: a != b),
    _branch(lambda a, b: a < b),
    _branch(lambda a, b: a <= b),
    _x_call,
    _x_ret,
    _x_yield,
    _x_incnt,
)
assert len(_EXECUTE) == NUM_OPCODES


class MachineStopped(RuntimeError):
    pass


def step(state: MachineState) -> StepOutcome:
    """Execute one instruction.

    Trapping steps leave pc, registers and memory as they were and do not
    count towards ``steps_taken``.
    """
    if state.status != RUNNING:
        raise MachineStopped(f"machine is {state.status}")
    pc = state.pc
    try:
        entry = state._decoded.get(pc)
        if entry is None:
            entry = state._decoded[pc] = decode_instruction(state.program, pc, state.header)
        ins, nxt = entry
        outcome = _EXECUTE[ins.opcode](state, ins.operands, nxt)
    except TrapError as exc:
        state.pc = pc
        state.status = TRAPPED
        state.outcome = Trap(exc.reason, pc, exc.detail, exc.operands)
        return state.outcome
    except MemoryError:
        state.pc = pc
        state.status = TRAPPED
        state.outcome = Trap(TrapReason.RESOURCE_LIMIT, pc, "host memory exhausted")
        return state.outcome
    state.steps_taken += 1
    if outcome.__class__ is Halt:
        state.outcome = outcome
    return outcome


@dataclass
class RunResult:
    outcome: Halt | Trap
    state: MachineState
    yields: list[Yield]

    @property
    def halted(self) -> bool:
        return isinstance(self.outcome, Halt)


def run(
    state: MachineState,
    fuel: int,
    on_yield: Callable[[Yield], None] | None = None,
) -> RunResult:
    """Step until the machine halts, traps, or ``steps_taken`` reaches ``fuel``.

    Fuel is absolute: a state that already took ``steps_taken`` steps only
    gets ``fuel - steps_taken`` more. Running out is reported as a
    FuelExhausted trap but leaves the state runnable, so a later call with
    more fuel resumes where this one stopped.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    yields: list[Yield] = []
    if state.status != RUNNING:
        return RunResult(state.outcome, state, yields)
    while True:
        if state.steps_taken >= fuel:
            outcome = Trap(TrapReason.FUEL_EXHAUSTED, state.pc, f"{fuel} steps")
            return RunResult(outcome, state, yields)
        outcome = step(state)
        cls = outcome.__class__
        if cls is Continue:
            continue
        if cls is Yield:
            yields.append(outcome)
            if on_yield is not None:
                on_yield(outcome)
            continue
        return RunResult(outcome, state, yields)
