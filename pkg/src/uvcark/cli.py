"""``uvcark`` command line.

Exit codes: 0 success, 1 usage or input error, 2 verification failure,
3 UVC trap, 4 fuel exhausted, 5 the UVC program halted with a nonzero
code (the code itself is in the output manifest and on stderr).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from datetime import datetime, timezone
from pathlib import Path

from .asm import AsmError, DisassemblyError, assemble, disassemble
from .bits import BitString
from .costmodel import CostParams, cost_counts
from .isa import HeaderError, from_uvcp, to_uvcp
from .machine import Halt, TrapReason
from .machine import run as run_machine
from .restore import (
    DEFAULT_FUEL,
    DescriptorError,
    RestoreError,
    RestoreResult,
    collect_channels,
    describe_outcome,
    init_state,
    write_outputs,
)
from .tdo import (
    Link,
    PartRole,
    ProvenanceEvent,
    Relationship,
    Tdo,
    TdoError,
    TdoPart,
    VerificationError,
    pack,
    restore_from_tdo,
    unpack,
    verify,
)

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_TRAP, EXIT_FUEL, EXIT_PROGRAM = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _created(value: str | None) -> str:
    if value is None:
        return _now()
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise UsageError(f"--created {value!r} is not an ISO 8601 timestamp") from None
    return value


def _read_bits_arg(spec: str) -> BitString:
    """``PATH`` or ``PATH:NBITS``; ``.uvcp`` files are read through their length trailer."""
    path, sep, nbits = spec.rpartition(":")
    if not sep or not nbits.isdigit():
        path, nbits = spec, ""
    data = Path(path).read_bytes()
    if path.endswith(".uvcp"):
        return from_uvcp(data)
    return BitString(data, int(nbits) if nbits else None)


def _outcome_exit(result: RestoreResult) -> int:
    outcome = result.outcome
    if isinstance(outcome, Halt):
        if outcome.code == 0:
            return EXIT_OK
        print(f"UVC program halted with code {outcome.code}", file=sys.stderr)
        return EXIT_PROGRAM
    print(f"UVC {describe_outcome(outcome)}: {outcome.detail}", file=sys.stderr)
    return EXIT_FUEL if outcome.reason is TrapReason.FUEL_EXHAUSTED else EXIT_TRAP


def cmd_asm(args) -> int:
    image, listing = assemble(Path(args.source).read_text(encoding="ascii"))
    out = Path(args.output or Path(args.source).with_suffix(".uvcp"))
    out.write_bytes(to_uvcp(image))
    if args.listing:
        for entry in listing:
            labels = " ".join(f"{name}:" for name in entry.labels)
            print(f"{entry.offset:8d}  {labels:16s} {entry.text}")
    return EXIT_OK


def cmd_dis(args) -> int:
    text = disassemble(from_uvcp(Path(args.image).read_bytes()))
    if args.output:
        Path(args.output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    program = from_uvcp(Path(args.program).read_bytes())
    inputs = [_read_bits_arg(spec) for spec in args.inputs]
    state = init_state(program, inputs)
    res = run_machine(state, args.fuel)
    segments = sorted({y.segment for y in res.yields})
    outputs = collect_channels(res.yields, {f"seg{seg}": seg for seg in segments})
    result = RestoreResult(res.outcome, outputs, res.yields, state.steps_taken)
    write_outputs(result, args.output)
    return _outcome_exit(result)


def cmd_pack(args) -> int:
    bits_override = {name: int(n) for name, n in args.bits}
    parts = []
    for name, role, path in args.part:
        try:
            role = PartRole(role)
        except ValueError:
            raise UsageError(f"unknown role {role!r}; choose from {', '.join(r.value for r in PartRole)}") from None
        if path.endswith(".uvcp"):
            bits = from_uvcp(Path(path).read_bytes())
            parts.append(TdoPart.from_bits(name, role, bits))
        else:
            parts.append(TdoPart(name, role, Path(path).read_bytes(), bits_override.get(name)))
    unknown = set(bits_override) - {p.name for p in parts}
    if unknown:
        raise UsageError(f"--bits names unknown part(s): {', '.join(sorted(unknown))}")
    created = _created(args.created)
    tdo = Tdo(
        id=args.id,
        created=created,
        title=args.title,
        provenance=[ProvenanceEvent(*event) for event in args.event],
        parts=parts,
        relationships=[Relationship(*rel) for rel in args.rel],
        links=[Link(ref, digest) for ref, digest in args.link],
    )
    data = pack(tdo)
    Path(args.output).write_bytes(data)
    sys.stdout.write(verify(unpack(data)).text())
    return EXIT_OK


def cmd_unpack(args) -> int:
    tdo = unpack(Path(args.container).read_bytes())
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    print(f"id {tdo.id}")
    for part in tdo.parts:
        (out / part.name).write_bytes(part.content)
        print(f"part {part.name} {part.role.value} {part.bits} {part.digest}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify(unpack(Path(args.container).read_bytes()))
    sys.stdout.write(report.text())
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_restore(args) -> int:
    tdo = unpack(Path(args.container).read_bytes())
    try:
        result = restore_from_tdo(tdo, args.fuel, force=args.force)
    except VerificationError as exc:
        sys.stdout.write(exc.report.text())
        print("refusing to restore an unverified TDO (use --force to override)", file=sys.stderr)
        return EXIT_VERIFY
    write_outputs(result, args.output)
    return _outcome_exit(result)


def cmd_estimate(args) -> int:
    table = cost_counts(CostParams(args.m, args.n, args.p, args.q, args.k))
    if args.csv:
        sys.stdout.write(table.to_csv())
        return EXIT_OK
    rows = list(table.rows())
    fields = [f.name for f in dataclasses.fields(rows[0][1])]
    print(f"{'':32s}" + "".join(f"{name:>12s}" for name, _ in rows))
    for field in fields:
        print(f"{field:32s}" + "".join(f"{getattr(counts, field):12d}" for _, counts in rows))
    return EXIT_OK


def cmd_make_demos(args) -> int:
    from .programs import DEMO_KINDS, demo_container

    created = _created(args.created)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for kind in DEMO_KINDS:
        path = out / f"demo_{kind}.tdo"
        path.write_bytes(demo_container(kind, created))
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uvcark", description="Durable encoding toolkit: UVC assembler, emulator and TDO packager.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("asm", help="assemble .uvca source into a .uvcp image")
    p.add_argument("source")
    p.add_argument("-o", "--output", help="output .uvcp path (default: source with .uvcp suffix)")
    p.add_argument("--listing", action="store_true", help="print the bit offset of every statement")
    p.set_defaults(func=cmd_asm)

    p = sub.add_parser("dis", help="disassemble a .uvcp image into canonical source")
    p.add_argument("image")
    p.add_argument("-o", "--output", help="write source here instead of standard output")
    p.set_defaults(func=cmd_dis)

    p = sub.add_parser("run", help="run a .uvcp image on raw input files")
    p.add_argument("program", help=".uvcp image")
    p.add_argument("inputs", nargs="*", help="input files, loaded into segments 1..N; PATH:NBITS sets a bit length")
    p.add_argument("-o", "--output", required=True, help="directory for seg<N>.bits files and manifest.txt")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="step limit (default %(default)s)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pack", help="package files into a sealed .tdo container")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--id", required=True, help="unique identifier, e.g. urn:example:object:1")
    p.add_argument("--title", default="")
    p.add_argument("--created", help="ISO 8601 creation time (default: now, UTC)")
    p.add_argument("--part", nargs=3, action="append", default=[], metavar=("NAME", "ROLE", "PATH"),
                   help="add a part; .uvcp files are stored as their exact image bits")
    p.add_argument("--bits", nargs=2, action="append", default=[], metavar=("NAME", "NBITS"),
                   help="true bit length of a part whose last byte is padding")
    p.add_argument("--rel", nargs=3, action="append", default=[], metavar=("FROM", "TO", "LABEL"))
    p.add_argument("--link", nargs=2, action="append", default=[], metavar=("REF", "SHA256"))
    p.add_argument("--event", nargs=3, action="append", default=[], metavar=("WHO", "WHEN", "WHAT"),
                   help="provenance event")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("unpack", help="extract the parts of a .tdo container")
    p.add_argument("container")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_unpack)

    p = sub.add_parser("verify", help="check digests, seal and completeness of a .tdo container")
    p.add_argument("container")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("restore", help="run the UVC program of a .tdo container and write its output channels")
    p.add_argument("container")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="step limit (default %(default)s)")
    p.add_argument("--force", action="store_true", help="restore even if verification fails")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("estimate", help="work counts for migration, emulation and durable encoding")
    p.add_argument("-m", type=int, required=True, help="present-day machine types")
    p.add_argument("-n", type=int, required=True, help="future machine types")
    p.add_argument("-p", type=int, required=True, help="data types")
    p.add_argument("-q", type=int, required=True, help="instances per data type")
    p.add_argument("-k", type=int, required=True, help="forced migrations")
    p.add_argument("--csv", action="store_true", help="one CSV row per strategy")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("make-demos", help="write demo_rle.tdo, demo_table.tdo and demo_m8.tdo")
    p.add_argument("-o", "--output", default=".", help="directory (default: current)")
    p.add_argument("--created", help="ISO 8601 creation time (default: now, UTC)")
    p.set_defaults(func=cmd_make_demos)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "fuel", 1) <= 0:
        print("uvcark: error: --fuel must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, AsmError, DisassemblyError, HeaderError, DescriptorError, RestoreError, TdoError,
            ValueError, OSError) as exc:
        print(f"uvcark {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
