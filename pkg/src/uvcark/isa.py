"""UVC instruction set table and program image format.

A program image is a bit string::

    bits  0-15   magic 0x5556 ("UV")
    bits 16-23   version (1)
    bits 24-31   RW, register field width (1-255)
    bits 32-39   IW, immediate field width (1-255)
    bits 40-     instructions, packed with no alignment

Each instruction is a 6-bit opcode followed by its operand fields, RW bits
for a register index and IW bits for an unsigned immediate.

Standalone ``.uvcp`` files hold the image padded with zero bits to a byte
boundary followed by the true bit length as a 64-bit big-endian integer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bits import BitString

MAGIC = 0x5556
VERSION = 1
HEADER_BITS = 40
OPCODE_BITS = 6

# (mnemonic, operand kinds): "R" register index, "I" immediate.
OPCODES: tuple[tuple[str, str], ...] = (
    ("HALT", "R"),
    ("NOP", ""),
    ("LOADI", "RI"),
    ("LOADN", "RI"),
    ("MOVE", "RR"),
    ("ADD", "RRR"),
    ("SUB", "RRR"),
    ("MUL", "RRR"),
    ("DIV", "RRR"),
    ("REM", "RRR"),
    ("AND", "RRR"),
    ("OR", "RRR"),
    ("XOR", "RRR"),
    ("NOTL", "RRR"),
    ("SHL", "RRR"),
    ("SHR", "RRR"),
    ("LOAD", "RRRR"),
    ("STORE", "RRRR"),
    ("SEGLEN", "RR"),
    ("BR", "I"),
    ("BEQ", "RRI"),
    ("BNE", "RRI"),
    ("BLT", "RRI"),
    ("BLE", "RRI"),
    ("CALL", "I"),
    ("RET", ""),
    ("YIELD", "RRR"),
    ("INCNT", "R"),
)

NUM_OPCODES = len(OPCODES)
MNEMONICS = {name: code for code, (name, _) in enumerate(OPCODES)}

# Opcodes whose immediate is a bit offset into the program segment.
BRANCH_OPCODES = frozenset(MNEMONICS[m] for m in ("BR", "BEQ", "BNE", "BLT", "BLE", "CALL"))


class HeaderError(ValueError):
    pass


class BadMagic(HeaderError):
    pass


class BadVersion(HeaderError):
    pass


class BadWidth(HeaderError):
    pass


class TruncatedHeader(HeaderError):
    pass


@dataclass(frozen=True)
class ProgramHeader:
    rw: int
    iw: int
    magic: int = MAGIC
    version: int = VERSION

    def to_bits(self) -> BitString:
        bs = BitString()
        bs.append(16, self.magic)
        bs.append(8, self.version)
        bs.append(8, self.rw)
        bs.append(8, self.iw)
        return bs


def instruction_bits(opcode: int, rw: int, iw: int) -> int:
    kinds = OPCODES[opcode][1]
    return OPCODE_BITS + rw * kinds.count("R") + iw * kinds.count("I")


def validate_header(image: BitString) -> ProgramHeader:
    if len(image) < HEADER_BITS:
        raise TruncatedHeader(f"image is {len(image)} bits, header needs {HEADER_BITS}")
    magic = image.read(0, 16)
    if magic != MAGIC:
        raise BadMagic(f"bad magic 0x{magic:04x}")
    version = image.read(16, 8)
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    rw = image.read(24, 8)
    iw = image.read(32, 8)
    if rw == 0 or iw == 0:
        raise BadWidth(f"field widths must be at least 1 (rw={rw}, iw={iw})")
    return ProgramHeader(rw=rw, iw=iw, magic=magic, version=version)


def to_uvcp(image: BitString) -> bytes:
    return image.to_bytes() + len(image).to_bytes(8, "big")


def from_uvcp(data: bytes) -> BitString:
    if len(data) < 8:
        raise ValueError("uvcp file too short for its length trailer")
    body, trailer = data[:-8], data[-8:]
    nbits = int.from_bytes(trailer, "big")
    if not (len(body) * 8 - 8 < nbits <= len(body) * 8) and not (nbits == 0 == len(body)):
        raise ValueError(f"uvcp trailer says {nbits} bits but body holds {len(body)} bytes")
    return BitString(body, nbits)
