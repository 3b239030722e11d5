"""Restore application: load a UVC program and its inputs, run it, collect renderings.

The invocation descriptor (Item E) is ASCII ``key=value`` lines::

    # comments start with '#'
    program=render.uvcp
    input=data.rle                 ; repeated, in segment order 1..N
    output.pbm=seg:2 PBM text      ; channel name, segment, optional description
    doc.A=itemA.txt
    note=free text about the entry convention

A channel's bits are the concatenation, in execution order, of every
YIELD that targeted its segment.
"""

from __future__ import annotations

import re
import warnings
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .bits import BitString
from .isa import validate_header
from .machine import Halt, MachineState, Trap, TrapReason, Yield, run

DEFAULT_FUEL = 10**8

_CHANNEL = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*$")
_SEG = re.compile(r"seg:([0-9]+)(?:\s+(.*))?$")


class DescriptorError(ValueError):
    pass


class DescriptorWarning(UserWarning):
    pass


class RestoreError(RuntimeError):
    pass


@dataclass
class OutputChannel:
    segment: int
    description: str = ""


@dataclass
class InvocationDescriptor:
    program: str
    inputs: list[str] = field(default_factory=list)
    outputs: dict[str, OutputChannel] = field(default_factory=dict)
    docs: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    unknown: list[str] = field(default_factory=list)  # lines kept verbatim

    def channels_by_segment(self) -> dict[int, list[str]]:
        by_seg: dict[int, list[str]] = {}
        for name, ch in self.outputs.items():
            by_seg.setdefault(ch.segment, []).append(name)
        return by_seg


def parse_invocation_descriptor(text: str) -> InvocationDescriptor:
    program = None
    inputs: list[str] = []
    outputs: dict[str, OutputChannel] = {}
    docs: dict[str, str] = {}
    notes: list[str] = []
    unknown: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DescriptorError(f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "program":
            if program is not None:
                raise DescriptorError(f"line {lineno}: program given twice")
            if not value:
                raise DescriptorError(f"line {lineno}: empty program name")
            program = value
        elif key == "input":
            if not value:
                raise DescriptorError(f"line {lineno}: empty input name")
            inputs.append(value)
        elif key.startswith("output."):
            name = key[len("output."):]
            if not _CHANNEL.match(name):
                raise DescriptorError(f"line {lineno}: bad channel name {name!r}")
            if name in outputs:
                raise DescriptorError(f"line {lineno}: duplicate channel {name!r}")
            m = _SEG.match(value)
            if not m:
                raise DescriptorError(f"line {lineno}: channel value must be seg:<n>")
            seg = int(m.group(1))
            if seg == 0:
                raise DescriptorError(f"line {lineno}: segment 0 is the program, not an output")
            outputs[name] = OutputChannel(seg, m.group(2) or "")
        elif key.startswith("doc.") and len(key) > 4:
            docs[key[4:]] = value
        elif key == "note":
            notes.append(value)
        else:
            warnings.warn(f"line {lineno}: unknown key {key!r} kept verbatim", DescriptorWarning, stacklevel=2)
            unknown.append(raw)
    if program is None:
        raise DescriptorError("missing program")
    return InvocationDescriptor(program, inputs, outputs, docs, notes, unknown)


def init_state(program: BitString, inputs=(), **limits) -> MachineState:
    """Segment 0 gets the program, segment i the i-th input, untransformed."""
    return MachineState.load(program, list(inputs), **limits)


@dataclass
class RestoreResult:
    outcome: Halt | Trap
    outputs: dict[str, BitString]
    trace: list[Yield]
    steps: int

    @property
    def exit_code(self) -> int | None:
        return self.outcome.code if isinstance(self.outcome, Halt) else None

    @property
    def ok(self) -> bool:
        return self.exit_code == 0

    @property
    def fuel_exhausted(self) -> bool:
        return isinstance(self.outcome, Trap) and self.outcome.reason is TrapReason.FUEL_EXHAUSTED


def collect_channels(trace: list[Yield], channels: Mapping[str, int]) -> dict[str, BitString]:
    outputs = {name: BitString() for name in channels}
    by_seg: dict[int, list[BitString]] = {}
    for name, seg in channels.items():
        by_seg.setdefault(seg, []).append(outputs[name])
    for y in trace:
        for out in by_seg.get(y.segment, ()):
            out.append(y.length, y.value)
    return outputs


def restore_run(
    descriptor: InvocationDescriptor,
    parts: Mapping[str, BitString] | Callable[[str], BitString],
    fuel: int = DEFAULT_FUEL,
) -> RestoreResult:
    """Run the described program on its inputs and route yields into named channels.

    Traps and fuel exhaustion are reported in the result, with whatever the
    program yielded before stopping.
    """
    resolve = parts if callable(parts) else parts.__getitem__

    def fetch(name: str) -> BitString:
        try:
            return resolve(name)
        except KeyError:
            raise RestoreError(f"part {name!r} not found") from None

    program = fetch(descriptor.program)
    validate_header(program)
    inputs = [fetch(name) for name in descriptor.inputs]
    state = init_state(program, inputs)
    result = run(state, fuel)
    channels = {name: ch.segment for name, ch in descriptor.outputs.items()}
    return RestoreResult(result.outcome, collect_channels(result.yields, channels), result.yields, state.steps_taken)


def describe_outcome(outcome: Halt | Trap) -> str:
    if isinstance(outcome, Halt):
        return f"halt {outcome.code}"
    return f"trap {outcome.reason.value} pc={outcome.pc}"


def write_outputs(result: RestoreResult, directory: str | Path) -> Path:
    """Write ``<channel>.bits`` files and a ``manifest.txt`` of bit lengths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, bits in result.outputs.items():
        (out / f"{name}.bits").write_bytes(bits.to_bytes())
        lines.append(f"channel {name} {len(bits)}")
    lines.append(f"outcome {describe_outcome(result.outcome)}")
    lines.append(f"steps {result.steps}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="ascii")
    return out
