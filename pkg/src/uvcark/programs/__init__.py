"""Shipped UVC programs, their documentation items, and demo TDO builders.

Each program lives in ``assets/<name>/`` as assembly source plus the
documents that travel with it: ``itemA.txt`` (alphabets), ``itemB.txt``
(description), ``itemD.bnf`` (input/output schemas) and ``itemE.inv``
(invocation descriptor). The assembled image is item C.
"""

from __future__ import annotations

from datetime import datetime, timezone
from importlib import resources

from ..asm import assemble
from ..bits import BitString
from ..tdo import PartRole, ProvenanceEvent, Relationship, Tdo, TdoPart, pack, sealed
from .oracles import (
    M8_EXIT_CODES,
    M8Machine,
    RleImage,
    m8_run_oracle,
    random_m8_program,
    random_rle_image,
    rle_decode_oracle,
    rle_encode,
    rle_from_pixels,
    table_render_oracle,
)

PROGRAMS = ("rle_decode", "table_render", "m8_emulator")
DEMO_KINDS = {"rle": "rle_decode", "table": "table_render", "m8": "m8_emulator"}

__all__ = [
    "DEMO_KINDS",
    "M8_EXIT_CODES",
    "M8Machine",
    "PROGRAMS",
    "RleImage",
    "asset_text",
    "build_demo_tdo",
    "demo_payload",
    "m8_run_oracle",
    "program_image",
    "random_m8_program",
    "random_rle_image",
    "rle_decode_oracle",
    "rle_encode",
    "rle_from_pixels",
    "table_render_oracle",
]


def asset_text(program: str, filename: str) -> str:
    return resources.files(__package__).joinpath("assets", program, filename).read_text(encoding="ascii")


def program_source(program: str) -> str:
    return asset_text(program, f"{program}.uvca")


def program_image(program: str) -> BitString:
    image, _ = assemble(program_source(program))
    return image


_DEMO_PICTURE = """\
........................
.#...#..#...#...####....
.#...#..#...#..#....#...
.#...#..#...#..#........
.#...#...#.#...#........
.#...#...#.#...#........
.#...#....#....#....#...
..###.....#.....####....
........................
"""

# Prints the Fibonacci numbers below 256 and halts.
DEMO_M8_PROGRAM = bytes([
    1, 30,    # 0   LDA a
    6, 0,     # 2   OUT
    3, 31,    # 4   ADD b
    2, 32,    # 6   STA t
    1, 31,    # 8   LDA b
    2, 30,    # 10  STA a
    1, 32,    # 12  LDA t
    2, 31,    # 14  STA b
    1, 33,    # 16  LDA counter
    3, 34,    # 18  ADD one
    2, 33,    # 20  STA counter
    5, 26,    # 22  JZ 26
    4, 0,     # 24  JMP 0
    0, 0,     # 26  HLT
    0, 0,     # 28
    0, 1, 0,  # 30  a, b, t
    243,      # 33  counter: 13 rounds until it wraps to 0
    1,        # 34  one
])


def demo_payload(kind: str) -> tuple[str, BitString]:
    """Name and bits of the payload preserved in the demo TDO of ``kind``."""
    if kind == "rle":
        rows = _DEMO_PICTURE.splitlines()
        pixels = [1 if ch == "#" else 0 for row in rows for ch in row]
        return "image.rle", rle_encode(rle_from_pixels(len(rows[0]), len(rows), pixels))
    if kind == "table":
        return "table.csv", BitString(asset_text("table_render", "table.csv").encode("ascii"))
    if kind == "m8":
        return "app.m8", BitString(DEMO_M8_PROGRAM)
    raise ValueError(f"unknown demo kind {kind!r}; expected one of {sorted(DEMO_KINDS)}")


_MEDIA = {
    "rle": "application/x-rle-bilevel",
    "table": "text/csv; charset=us-ascii",
    "m8": "application/x-m8-memory-image",
}

_TITLES = {
    "rle": "Bilevel raster image with its UVC rendering program",
    "table": "Statistical table with UVC renderers for print and database load",
    "m8": "M8 application preserved with an M8 emulator written in UVC code",
}


def build_demo_tdo(kind: str, created: str | None = None) -> Tdo:
    """Assemble the program for ``kind`` and package it with payload and documents."""
    program = DEMO_KINDS.get(kind)
    if program is None:
        raise ValueError(f"unknown demo kind {kind!r}; expected one of {sorted(DEMO_KINDS)}")
    if created is None:
        created = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    payload_name, payload = demo_payload(kind)
    image = program_image(program)
    image_name = f"{program}.uvc"
    ascii_doc = "text/plain; charset=us-ascii"

    parts = [
        TdoPart.from_bits(payload_name, PartRole.PAYLOAD, payload, _MEDIA[kind]),
        TdoPart.from_bits(image_name, PartRole.UVC_PROGRAM, image, "application/x-uvc-program"),
        TdoPart(f"{program}.uvca", PartRole.OTHER, program_source(program).encode("ascii"), media=ascii_doc),
        TdoPart("itemA.txt", PartRole.DOC_ALPHABET, asset_text(program, "itemA.txt").encode("ascii"), media=ascii_doc),
        TdoPart("itemB.txt", PartRole.DOC_DESCRIPTION, asset_text(program, "itemB.txt").encode("ascii"),
                media=ascii_doc),
        TdoPart("itemD.bnf", PartRole.DOC_SCHEMA, asset_text(program, "itemD.bnf").encode("ascii"), media=ascii_doc),
        TdoPart("itemE.inv", PartRole.DOC_INVOCATION, asset_text(program, "itemE.inv").encode("ascii"),
                media=ascii_doc),
    ]
    relationships = [
        Relationship(payload_name, image_name, "emulated-by" if kind == "m8" else "rendered-by"),
        Relationship(f"{program}.uvca", image_name, "source-of"),
        Relationship("itemA.txt", image_name, "documents"),
        Relationship("itemB.txt", image_name, "documents"),
        Relationship("itemD.bnf", image_name, "documents"),
        Relationship("itemE.inv", image_name, "invokes"),
    ]
    provenance = [
        ProvenanceEvent("uvcark make-demos", created, f"assembled {program}.uvca and packaged the {kind} demo"),
    ]
    tdo = Tdo(
        id=f"urn:uvcark:demo:{kind}",
        created=created,
        title=_TITLES[kind],
        provenance=provenance,
        parts=parts,
        relationships=relationships,
    )
    return sealed(tdo)


def demo_container(kind: str, created: str | None = None) -> bytes:
    return pack(build_demo_tdo(kind, created))
