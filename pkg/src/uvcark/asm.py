"""Two-pass assembler and canonical disassembler for UVC programs.

Source is line-oriented ASCII (grammar in ``docs/uvc_asm.bnf``)::

    .rw 4                 ; optional field widths
    start:  LOADI r0, 7   ; label, mnemonic, operands
            HALT r0

Pass 1 lays the program out and assigns each label the bit offset of the
instruction that follows it; pass 2 emits bits. Without ``.rw``/``.iw``
the smallest widths that hold every operand are chosen. Since label
offsets grow with the immediate width, ``.iw`` is found by searching
upward from the widest numeric immediate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .bits import BitString
from .isa import (
    BRANCH_OPCODES,
    HEADER_BITS,
    MNEMONICS,
    OPCODE_BITS,
    OPCODES,
    HeaderError,
    ProgramHeader,
    instruction_bits,
    validate_header,
)
from .machine import TrapError, decode_instruction

__all__ = [
    "AsmError",
    "DisassemblyError",
    "ListingEntry",
    "assemble",
    "disassemble",
    "validate_header",
]

MAX_WIDTH = 255

_LABEL_DEF = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*:")
_WORD = re.compile(r"\s*(\S+)")
_REGISTER = re.compile(r"[rR]([0-9]+)$")
_NUMBER = re.compile(r"(0[xX][0-9A-Fa-f]+|[0-9]+)$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class AsmError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


class DisassemblyError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"bit {offset}: {message}")
        self.offset = offset


@dataclass
class _Operand:
    kind: str  # "R" or "I"
    value: int | None
    label: str | None
    col: int


@dataclass
class _Statement:
    line: int
    col: int
    opcode: int
    operands: list[_Operand]
    labels: list[str]
    text: str


@dataclass(frozen=True)
class ListingEntry:
    line: int
    offset: int
    labels: tuple[str, ...]
    text: str


def _parse_operand(token: str, kind: str, line: int, col: int) -> _Operand:
    reg = _REGISTER.match(token)
    if kind == "R":
        if not reg:
            raise AsmError(f"expected a register, got {token!r}", line, col)
        return _Operand("R", int(reg.group(1)), None, col)
    if reg:
        raise AsmError(f"expected an immediate, got register {token!r}", line, col)
    if _NUMBER.match(token):
        return _Operand("I", int(token, 0) if not token.isdigit() else int(token), None, col)
    if _NAME.match(token):
        return _Operand("I", None, token, col)
    raise AsmError(f"bad immediate {token!r}", line, col)


def _parse(text: str):
    directives: dict[str, int] = {}
    statements: list[_Statement] = []
    pending_labels: list[str] = []
    seen_labels: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if any(ord(ch) > 127 for ch in raw):
            raise AsmError("non-ASCII character", lineno, 1)
        line = raw.split(";", 1)[0].rstrip()
        pos = 0
        m = _LABEL_DEF.match(line)
        if m:
            name = m.group(1)
            col = m.start(1) + 1
            if _REGISTER.match(name):
                raise AsmError(f"label {name!r} looks like a register", lineno, col)
            if name in seen_labels:
                raise AsmError(f"duplicate label {name!r} (first on line {seen_labels[name]})", lineno, col)
            seen_labels[name] = lineno
            pending_labels.append(name)
            pos = m.end()
        m = _WORD.match(line, pos)
        if not m:
            continue
        word = m.group(1)
        col = m.start(1) + 1
        rest = line[m.end():]
        rest_col = m.end()
        if word.startswith("."):
            key = word.lower()
            if key not in (".rw", ".iw"):
                raise AsmError(f"unknown directive {word!r}", lineno, col)
            arg = rest.strip()
            if not _NUMBER.match(arg):
                raise AsmError(f"{key} needs a number", lineno, rest_col + 1)
            value = int(arg, 0)
            if not 1 <= value <= MAX_WIDTH:
                raise AsmError(f"{key} must be between 1 and {MAX_WIDTH}", lineno, rest_col + 1)
            if key in directives:
                raise AsmError(f"{key} given twice", lineno, col)
            directives[key] = value
            continue
        opcode = MNEMONICS.get(word.upper())
        if opcode is None:
            raise AsmError(f"unknown mnemonic {word!r}", lineno, col)
        kinds = OPCODES[opcode][1]
        tokens: list[tuple[str, int]] = []
        if rest.strip():
            offset = rest_col
            for piece in rest.split(","):
                stripped = piece.strip()
                tcol = offset + (len(piece) - len(piece.lstrip())) + 1
                if not stripped:
                    raise AsmError("empty operand", lineno, tcol)
                if " " in stripped or "\t" in stripped:
                    raise AsmError(f"unexpected text in operand {stripped!r}", lineno, tcol)
                tokens.append((stripped, tcol))
                offset += len(piece) + 1
        if len(tokens) != len(kinds):
            if kinds:
                described = " ".join("register" if k == "R" else "immediate" for k in kinds)
                expected = f"requires {len(kinds)} operand(s) ({described})"
            else:
                expected = "takes no operands"
            raise AsmError(f"{word.upper()} {expected}, got {len(tokens)}", lineno, col)
        operands = [_parse_operand(tok, kind, lineno, tcol) for (tok, tcol), kind in zip(tokens, kinds)]
        statements.append(_Statement(lineno, col, opcode, operands, pending_labels, raw.strip()))
        pending_labels = []
    return directives, statements, pending_labels, seen_labels


def _layout(statements: list[_Statement], trailing: list[str], rw: int, iw: int):
    labels: dict[str, int] = {}
    offsets = []
    pos = HEADER_BITS
    for st in statements:
        for name in st.labels:
            labels[name] = pos
        offsets.append(pos)
        pos += instruction_bits(st.opcode, rw, iw)
    for name in trailing:
        labels[name] = pos
    return offsets, labels, pos


def _immediates(statements: list[_Statement], labels: dict[str, int]):
    for st in statements:
        for op in st.operands:
            if op.kind == "I":
                yield st, op, op.value if op.label is None else labels[op.label]


def assemble(text: str) -> tuple[BitString, list[ListingEntry]]:
    """Assemble source text into a program image plus a per-statement listing."""
    directives, statements, trailing, defined = _parse(text)

    for st in statements:
        for op in st.operands:
            if op.label is not None and op.label not in defined:
                raise AsmError(f"undefined label {op.label!r}", st.line, op.col)

    max_reg = max((op.value for st in statements for op in st.operands if op.kind == "R"), default=0)
    if ".rw" in directives:
        rw = directives[".rw"]
        for st in statements:
            for op in st.operands:
                if op.kind == "R" and op.value >> rw:
                    raise AsmError(f"register r{op.value} does not fit in .rw {rw}", st.line, op.col)
    else:
        rw = max(1, max_reg.bit_length())
        if rw > MAX_WIDTH:
            raise AsmError(f"register index needs {rw} bits, more than {MAX_WIDTH}")

    max_num = max((op.value for st in statements for op in st.operands if op.kind == "I" and op.label is None),
                  default=0)
    if ".iw" in directives:
        iw = directives[".iw"]
        offsets, labels, _ = _layout(statements, trailing, rw, iw)
        for st, op, value in _immediates(statements, labels):
            if value >> iw:
                what = f"label {op.label!r} (offset {value})" if op.label else f"immediate {value}"
                raise AsmError(f"{what} does not fit in .iw {iw}", st.line, op.col)
    else:
        iw = max(1, max_num.bit_length())
        while True:
            if iw > MAX_WIDTH:
                raise AsmError(f"immediates need more than {MAX_WIDTH} bits")
            offsets, labels, _ = _layout(statements, trailing, rw, iw)
            if all(not value >> iw for _, _, value in _immediates(statements, labels)):
                break
            iw += 1

    header = ProgramHeader(rw=rw, iw=iw)
    image = header.to_bits()
    listing = []
    for st, off in zip(statements, offsets):
        assert len(image) == off
        image.append(OPCODE_BITS, st.opcode)
        for op in st.operands:
            if op.kind == "R":
                image.append(rw, op.value)
            else:
                image.append(iw, op.value if op.label is None else labels[op.label])
        listing.append(ListingEntry(st.line, off, tuple(st.labels), st.text))
    return image, listing


def disassemble(image: BitString) -> str:
    """Render an image as canonical source; ``assemble`` of the result gives back the same bits."""
    try:
        header = validate_header(image)
    except HeaderError as exc:
        raise DisassemblyError(str(exc), 0) from exc
    decoded = []
    pc = HEADER_BITS
    while pc < len(image):
        try:
            ins, nxt = decode_instruction(image, pc, header)
        except TrapError as exc:
            if exc.reason.value == "BadOpcode":
                raise DisassemblyError(f"bad opcode {exc.operands[0]}", pc) from exc
            raise DisassemblyError("truncated instruction", pc) from exc
        decoded.append((pc, ins))
        pc = nxt

    starts = {off for off, _ in decoded}
    targets = {ins.operands[-1] for _, ins in decoded if ins.opcode in BRANCH_OPCODES} & starts

    lines = [f".rw {header.rw}", f".iw {header.iw}"]
    for off, ins in decoded:
        if off in targets:
            lines.append(f"L{off}:")
        parts = []
        for kind, value in zip(ins.kinds, ins.operands):
            if kind == "R":
                parts.append(f"r{value}")
            elif ins.opcode in BRANCH_OPCODES and value in targets:
                parts.append(f"L{value}")
            else:
                parts.append(str(value))
        lines.append(f"    {ins.mnemonic} {', '.join(parts)}".rstrip())
    return "\n".join(lines) + "\n"
