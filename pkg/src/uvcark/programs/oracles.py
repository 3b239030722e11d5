"""Host-side reference implementations of the shipped UVC programs.

These are written directly in Python and share no code with the UVC
assembly they check; differential tests compare the two bit for bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..bits import BitString

# Run-length encoded bilevel images
#
#   width:8  height:8  then runs of  count:8 (> 0)  value:1
#
# Runs cover the image row-major; their counts sum to width * height.
# Fewer than 9 trailing bits (byte padding) are ignored.

RUN_BITS = 9


class RleError(ValueError):
    pass


@dataclass
class RleImage:
    width: int
    height: int
    runs: list[tuple[int, int]] = field(default_factory=list)

    def pixels(self) -> list[int]:
        out = []
        for count, value in self.runs:
            out.extend([value] * count)
        return out


def rle_from_pixels(width: int, height: int, pixels: list[int]) -> RleImage:
    if len(pixels) != width * height:
        raise RleError("pixel count does not match dimensions")
    runs: list[tuple[int, int]] = []
    for px in pixels:
        if runs and runs[-1][1] == px and runs[-1][0] < 255:
            runs[-1] = (runs[-1][0] + 1, px)
        else:
            runs.append((1, px))
    return RleImage(width, height, runs)


def rle_encode(image: RleImage) -> BitString:
    if not (0 <= image.width < 256 and 0 <= image.height < 256):
        raise RleError("dimensions must fit in 8 bits")
    bits = BitString()
    bits.append(8, image.width)
    bits.append(8, image.height)
    for count, value in image.runs:
        if not 0 < count < 256 or value not in (0, 1):
            raise RleError(f"bad run ({count}, {value})")
        bits.append(8, count)
        bits.append(1, value)
    return bits


def rle_parse(encoded: BitString) -> RleImage:
    if len(encoded) < 16:
        raise RleError("malformed header: fewer than 16 bits")
    width, height = encoded.read(0, 8), encoded.read(8, 8)
    runs = []
    pos = 16
    while len(encoded) - pos >= RUN_BITS:
        count = encoded.read(pos, 8)
        value = encoded.read(pos + 8, 1)
        pos += RUN_BITS
        if count == 0:
            raise RleError(f"zero-length run at bit {pos - RUN_BITS}")
        runs.append((count, value))
    total = sum(c for c, _ in runs)
    if total != width * height:
        raise RleError(f"runs cover {total} pixels, image has {width * height}")
    return RleImage(width, height, runs)


def rle_decode_oracle(encoded: BitString) -> str:
    """Render as plain PBM: ``P1``, ``<w> <h>``, then one line of space-separated bits per row."""
    image = rle_parse(encoded)
    px = image.pixels()
    lines = ["P1", f"{image.width} {image.height}"]
    for row in range(image.height):
        cells = px[row * image.width:(row + 1) * image.width]
        lines.append(" ".join(str(c) for c in cells))
    return "\n".join(lines) + "\n"


def random_rle_image(rng: random.Random, max_side: int = 24) -> RleImage:
    width = rng.randint(0, max_side)
    height = rng.randint(0, max_side)
    # mix of noisy and blocky images so both short and long (>255) runs occur
    density = rng.choice([0.02, 0.1, 0.5, 0.9, 0.98])
    pixels = [1 if rng.random() < density else 0 for _ in range(width * height)]
    return rle_from_pixels(width, height, pixels)


# Comma-separated tables (no quoting, no embedded commas or quotes)


class TableError(ValueError):
    pass


def parse_table(csv_text: str) -> list[list[str]]:
    if any(ord(ch) > 127 for ch in csv_text):
        raise TableError("table text must be ASCII")
    if "'" in csv_text or '"' in csv_text:
        raise TableError("quote characters are not supported")
    lines = csv_text.split("\n")
    if lines[-1] == "":
        lines.pop()
    if not lines:
        raise TableError("no header line")
    rows = [line.split(",") for line in lines]
    ncols = len(rows[0])
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != ncols:
            raise TableError(f"ragged row on line {i}: {len(row)} cells, header has {ncols}")
    return rows


def table_render_oracle(csv_text: str, channel: str) -> str:
    rows = parse_table(csv_text)
    if channel == "fixed_width":
        widths = [max(len(row[c]) for row in rows) for c in range(len(rows[0]))]
        return "".join(" ".join(cell.ljust(w) for cell, w in zip(row, widths)) + "\n" for row in rows)
    if channel == "db_load":
        cols = ",".join(rows[0])
        return "".join(
            f"INSERT INTO t ({cols}) VALUES ({','.join(repr_sql(v) for v in row)});\n" for row in rows[1:]
        )
    raise ValueError(f"unknown channel {channel!r}")


def repr_sql(value: str) -> str:
    return f"'{value}'"


# M8: a toy accumulator machine standing in for a present-day computer
#
# 256 bytes of memory, 8-bit accumulator, 8-bit pc; two-byte instructions
# (opcode, operand):
#   0 HLT   1 LDA a   2 STA a   3 ADD a   4 JMP a   5 JZ a   6 OUT
# A step fetches both bytes (pc wraps mod 256); the budget is checked
# before each fetch, and HLT counts as a step.

M8_HALTED = "halted"
M8_BAD_OPCODE = "bad_opcode"
M8_FUEL_EXHAUSTED = "fuel_exhausted"
M8_EXIT_CODES = {M8_HALTED: 0, M8_BAD_OPCODE: 1, M8_FUEL_EXHAUSTED: 2}


@dataclass
class M8Machine:
    memory: bytearray
    acc: int = 0
    pc: int = 0
    output: list[int] = field(default_factory=list)
    halted: bool = False
    steps: int = 0

    @classmethod
    def load(cls, program: bytes) -> M8Machine:
        if len(program) > 256:
            raise ValueError("M8 programs are at most 256 bytes")
        return cls(bytearray(program) + bytearray(256 - len(program)))

    def run(self, fuel: int) -> str:
        mem = self.memory
        while True:
            if self.steps >= fuel:
                return M8_FUEL_EXHAUSTED
            op = mem[self.pc]
            arg = mem[(self.pc + 1) % 256]
            self.pc = (self.pc + 2) % 256
            if op > 6:
                return M8_BAD_OPCODE
            self.steps += 1
            if op == 0:
                self.halted = True
                return M8_HALTED
            if op == 1:
                self.acc = mem[arg]
            elif op == 2:
                mem[arg] = self.acc
            elif op == 3:
                self.acc = (self.acc + mem[arg]) % 256
            elif op == 4:
                self.pc = arg
            elif op == 5:
                if self.acc == 0:
                    self.pc = arg
            else:
                self.output.append(self.acc)


def m8_run_oracle(program: bytes, fuel: int) -> tuple[bytes, str]:
    machine = M8Machine.load(program)
    status = machine.run(fuel)
    return bytes(machine.output), status


def random_m8_program(rng: random.Random, max_len: int = 256) -> bytes:
    """Random bytes with every even-indexed byte folded into a valid opcode."""
    length = rng.randint(1, max_len)
    data = bytearray(rng.randrange(256) for _ in range(length))
    for i in range(0, length, 2):
        data[i] %= 7
    return bytes(data)
