"""Durable encoding toolkit.

A Universal Virtual Computer (``machine``), an assembler for it (``asm``),
a restore application that replays preserved programs against preserved
data (``restore``), and self-describing archival containers (``tdo``).
"""

from .asm import assemble, disassemble
from .bits import BitString
from .machine import MachineState, run, step
from .restore import parse_invocation_descriptor, restore_run
from .tdo import pack, restore_from_tdo, unpack, verify

__version__ = "0.1.0"

__all__ = [
    "BitString",
    "MachineState",
    "assemble",
    "disassemble",
    "pack",
    "parse_invocation_descriptor",
    "restore_from_tdo",
    "restore_run",
    "run",
    "step",
    "unpack",
    "verify",
]
