"""Random UVC programs for property tests.

``random_source`` writes assembly that mostly keeps running (small
constants, branches to labels, memory blocks that set up their own
operands). ``random_image`` builds raw images instruction by instruction
with arbitrary field widths, bypassing the assembler altogether.
"""

from __future__ import annotations

import random

from uvcark.bits import BitString
from uvcark.isa import HEADER_BITS, OPCODES, ProgramHeader

ARITH = ("ADD", "SUB", "MUL", "DIV", "REM", "AND", "OR", "XOR", "NOTL", "SHL", "SHR")
BRANCH = ("BEQ", "BNE", "BLT", "BLE")


def _reg(rng: random.Random, hi: int = 7) -> str:
    return f"r{rng.randint(0, hi)}"


def random_source(rng: random.Random, blocks: int | None = None) -> str:
    blocks = blocks if blocks is not None else rng.randint(1, 40)
    labels = [f"L{i}" for i in range(blocks)]
    lines = []
    if rng.random() < 0.3:
        lines.append(f".rw {rng.randint(4, 9)}")
    if rng.random() < 0.3:
        lines.append(f".iw {rng.randint(20, 24)}")
    for r in range(1, 8):
        lines.append(f"    LOADI r{r}, {rng.randint(1, 100)}")
    for label in labels:
        lines.append(f"{label}:")
        kind = rng.random()
        if kind < 0.30:
            op = rng.choice(ARITH)
            lines.append(f"    {op} {_reg(rng)}, {_reg(rng)}, {_reg(rng)}")
        elif kind < 0.42:
            op = rng.choice(("LOADI", "LOADN"))
            lines.append(f"    {op} {_reg(rng)}, {rng.choice([0, 1, 2, 3, 7, 255, rng.randrange(4096)])}")
        elif kind < 0.52:
            n = rng.randint(0, 16)
            lines += [
                f"    LOADI r8, {rng.randint(1, 3)}",
                f"    LOADI r9, {rng.randint(0, 64)}",
                f"    LOADI r10, {n}",
                f"    LOADI r11, {rng.randrange(2 ** n)}",
                "    STORE r11, r8, r9, r10",
            ]
            if rng.random() < 0.5:
                lines.append("    YIELD r8, r9, r10")
        elif kind < 0.60:
            lines += [
                f"    LOADI r8, {rng.choice([0, 1, 1, 2])}",
                f"    LOADI r9, {rng.randint(0, 16)}",
                f"    LOADI r10, {rng.randint(0, 16)}",
                f"    LOAD {_reg(rng)}, r8, r9, r10",
            ]
        elif kind < 0.75:
            op = rng.choice(BRANCH)
            lines.append(f"    {op} {_reg(rng)}, {_reg(rng)}, {rng.choice(labels)}")
        elif kind < 0.80:
            lines.append(f"    BR {rng.choice(labels)}")
        elif kind < 0.85:
            lines.append(f"    CALL {rng.choice(labels)}")
        elif kind < 0.86:
            lines.append("    RET")
        elif kind < 0.91:
            lines.append(f"    SEGLEN {_reg(rng)}, {_reg(rng, 3)}")
        elif kind < 0.94:
            lines.append(f"    MOVE {_reg(rng)}, {_reg(rng)}")
        elif kind < 0.96:
            lines.append(f"    INCNT {_reg(rng)}")
        elif kind < 0.98:
            lines.append("    NOP")
        else:
            lines.append(f"    HALT {_reg(rng)}")
    lines.append(f"    BR {labels[0]}")
    return "\n".join(lines) + "\n"


def random_image(rng: random.Random, max_instructions: int = 60) -> BitString:
    """A valid image with random widths and random operand values."""
    rw, iw = rng.randint(1, 12), rng.randint(1, 24)
    image = ProgramHeader(rw, iw).to_bits()
    for _ in range(rng.randint(0, max_instructions)):
        opcode = rng.randrange(len(OPCODES))
        image.append(6, opcode)
        for kind in OPCODES[opcode][1]:
            width = rw if kind == "R" else iw
            image.append(width, rng.randrange(2 ** width))
    assert len(image) >= HEADER_BITS
    return image
