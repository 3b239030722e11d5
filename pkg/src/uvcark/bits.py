"""Growable bit strings with big-endian bit addressing.

Offset 0 is the most significant bit of the first byte. A window of
``n`` bits starting at ``off`` reads as the unsigned integer whose
big-endian binary expansion is those bits.

The backing ``bytearray`` always holds exactly ``ceil(length / 8)`` bytes
and every bit past ``length`` is zero, so extension zero-fills for free
and byte-level equality is bit-level equality.
"""

from __future__ import annotations


class BitString:
    __slots__ = ("_buf", "_length")

    def __init__(self, data: bytes | bytearray = b"", length: int | None = None):
        if length is None:
            length = len(data) * 8
        if length < 0 or length > len(data) * 8:
            raise ValueError(f"bit length {length} does not fit in {len(data)} bytes")
        nbytes = (length + 7) >> 3
        buf = bytearray(data[:nbytes])
        spare = nbytes * 8 - length
        if spare:
            buf[-1] &= (0xFF << spare) & 0xFF
        self._buf = buf
        self._length = length

    @classmethod
    def from_int(cls, value: int, length: int) -> BitString:
        if value < 0 or value >> length:
            raise ValueError(f"{value} does not fit in {length} bits")
        bs = cls()
        bs.write(0, length, value)
        return bs

    @classmethod
    def from_str(cls, text: str) -> BitString:
        """Parse a string of '0'/'1' characters; spaces and underscores are ignored."""
        digits = "".join(ch for ch in text if ch not in " _")
        if any(ch not in "01" for ch in digits):
            raise ValueError(f"not a bit string: {text!r}")
        return cls.from_int(int(digits, 2) if digits else 0, len(digits))

    def __len__(self) -> int:
        return self._length

    @property
    def length(self) -> int:
        return self._length

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._length == other._length and self._buf == other._buf

    def __hash__(self) -> int:
        return hash((self._length, bytes(self._buf)))

    def __repr__(self) -> str:
        if self._length <= 64:
            return f"BitString('{self}')"
        return f"BitString(<{self._length} bits>)"

    def __str__(self) -> str:
        if not self._length:
            return ""
        return format(self.to_int(), f"0{self._length}b")

    def copy(self) -> BitString:
        bs = BitString()
        bs._buf = bytearray(self._buf)
        bs._length = self._length
        return bs

    def to_bytes(self) -> bytes:
        """The bits padded with trailing zeros to a byte boundary."""
        return bytes(self._buf)

    def to_int(self) -> int:
        return int.from_bytes(self._buf, "big") >> (len(self._buf) * 8 - self._length)

    def read(self, off: int, n: int) -> int:
        if off < 0 or n < 0:
            raise ValueError("negative offset or length")
        end = off + n
        if end > self._length:
            raise IndexError(f"read of bits [{off}, {end}) past length {self._length}")
        if n == 0:
            return 0
        b0 = off >> 3
        b1 = (end + 7) >> 3
        chunk = int.from_bytes(self._buf[b0:b1], "big")
        return (chunk >> (b1 * 8 - end)) & ((1 << n) - 1)

    def write(self, off: int, n: int, value: int) -> None:
        if off < 0 or n < 0:
            raise ValueError("negative offset or length")
        if value < 0 or value >> n:
            raise ValueError(f"{value} does not fit in {n} bits")
        end = off + n
        if end > self._length:
            self._buf.extend(bytes(((end + 7) >> 3) - len(self._buf)))
            self._length = end
        if n == 0:
            return
        b0 = off >> 3
        b1 = (end + 7) >> 3
        shift = b1 * 8 - end
        mask = ((1 << n) - 1) << shift
        chunk = int.from_bytes(self._buf[b0:b1], "big")
        chunk = (chunk & ~mask) | (value << shift)
        self._buf[b0:b1] = chunk.to_bytes(b1 - b0, "big")

    def append(self, n: int, value: int) -> None:
        self.write(self._length, n, value)

    def extend(self, other: BitString) -> None:
        if other._length:
            self.append(other._length, other.to_int())
