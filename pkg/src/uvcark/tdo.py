"""Trustworthy Digital Object containers.

A TDO is one UTF-8 XML document holding base64 part bodies, a manifest
with per-part SHA-256 digests, provenance metadata, a relationship table,
links to external objects with expected digests, and a seal. The seal is
SHA-256 over the ASCII summary::

    <id>\\n
    <name>:<bits>:<sha256>\\n      one line per part, manifest order
    <ref>:<sha256>\\n              one line per link

Every content bit reaches the seal through its part digest, so no XML
canonicalization is needed. Serialization is fully deterministic: fixed
element and attribute order, two-space indentation, one-line base64.
"""

from __future__ import annotations

import base64
import binascii
import enum
import hashlib
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .bits import BitString
from .restore import DEFAULT_FUEL, RestoreResult, parse_invocation_descriptor, restore_run

FORMAT_VERSION = "1"  # version 1: SHA-256 digests and seal

_PART_NAME = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*$")
_HEX64 = re.compile(r"[0-9a-f]{64}$")
_XML_BAD = re.compile("[\\x00-\\x08\\x0b\\x0c\\x0e-\\x1f\\ufffe\\uffff]")


class PartRole(str, enum.Enum):
    PAYLOAD = "payload"
    PAYLOAD_TRANSFORMED = "payload-transformed"
    UVC_PROGRAM = "uvc-program"
    DOC_ALPHABET = "doc-alphabet"
    DOC_DESCRIPTION = "doc-description"
    DOC_SCHEMA = "doc-schema"
    DOC_INVOCATION = "doc-invocation"
    OTHER = "other"


class TdoError(ValueError):
    pass


class TdoFormatError(TdoError):
    """The bytes are not a well-formed TDO container."""


class VerificationError(TdoError):
    def __init__(self, report: VerifyReport):
        super().__init__("TDO failed verification:\n" + report.text())
        self.report = report


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class TdoPart:
    name: str
    role: PartRole
    content: bytes
    bits: int | None = None
    media: str = ""
    digest: str | None = None

    def __post_init__(self):
        self.role = PartRole(self.role)
        if self.bits is None:
            self.bits = len(self.content) * 8

    def bitstring(self) -> BitString:
        return BitString(self.content, self.bits)

    @classmethod
    def from_bits(cls, name: str, role: PartRole, bits: BitString, media: str = "") -> TdoPart:
        return cls(name, role, bits.to_bytes(), len(bits), media)


@dataclass
class ProvenanceEvent:
    who: str
    when: str
    what: str


@dataclass
class Relationship:
    source: str
    target: str
    label: str


@dataclass
class Link:
    ref: str
    digest: str


@dataclass
class Tdo:
    id: str
    created: str
    title: str = ""
    provenance: list[ProvenanceEvent] = field(default_factory=list)
    parts: list[TdoPart] = field(default_factory=list)
    relationships: list[Relationship] = field(default_factory=list)
    links: list[Link] = field(default_factory=list)
    seal: str | None = None
    signature: str | None = None  # reserved slot, carried but never checked

    def part(self, name: str) -> TdoPart:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    def parts_with_role(self, role: PartRole) -> list[TdoPart]:
        return [p for p in self.parts if p.role is role]


def seal_digest(tdo: Tdo, digests: list[str] | None = None) -> str:
    """Seal over id, part summaries and links; ``digests`` overrides the declared part digests."""
    if digests is None:
        digests = [p.digest for p in tdo.parts]
    lines = [tdo.id]
    lines += [f"{p.name}:{p.bits}:{d}" for p, d in zip(tdo.parts, digests)]
    lines += [f"{link.ref}:{link.digest}" for link in tdo.links]
    return sha256_hex(("\n".join(lines) + "\n").encode("ascii"))


def _check_structure(tdo: Tdo) -> None:
    names = set()
    for p in tdo.parts:
        if not _PART_NAME.match(p.name):
            raise TdoError(f"bad part name {p.name!r}")
        if p.name in names:
            raise TdoError(f"duplicate part name {p.name!r}")
        names.add(p.name)
        if not (p.bits <= 8 * len(p.content) < p.bits + 8) and not (p.bits == 0 == len(p.content)):
            raise TdoError(f"part {p.name!r}: {p.bits} bits do not match {len(p.content)} bytes")
    for rel in tdo.relationships:
        for end in (rel.source, rel.target):
            if end not in names:
                raise TdoError(f"relationship endpoint {end!r} is not a part")
    try:
        tdo.id.encode("ascii")
    except UnicodeEncodeError:
        raise TdoError("TDO id must be ASCII") from None


def sealed(tdo: Tdo) -> Tdo:
    """A copy with fresh part digests and seal."""
    _check_structure(tdo)
    parts = [replace(p, digest=sha256_hex(p.content)) for p in tdo.parts]
    out = replace(tdo, parts=parts, seal=None)
    out.seal = seal_digest(out)
    return out


# Serialization


def _xml_ok(text: str) -> str:
    if _XML_BAD.search(text):
        raise TdoError(f"character not allowed in XML: {text!r}")
    return text


def _attr(value) -> str:
    text = _xml_ok(str(value))
    text = text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    return text.replace("\t", "&#9;").replace("\n", "&#10;").replace("\r", "&#13;")


def _text(value: str) -> str:
    text = _xml_ok(value)
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace("\r", "&#13;")


def _tag(name: str, attrs: list[tuple[str, object]], body: str | None = None) -> str:
    head = name + "".join(f' {k}="{_attr(v)}"' for k, v in attrs)
    if body is None:
        return f"<{head}/>"
    return f"<{head}>{body}</{name}>"


def _block(lines: list[str], name: str, children: list[str], indent: str) -> None:
    if not children:
        lines.append(f"{indent}<{name}/>")
        return
    lines.append(f"{indent}<{name}>")
    lines.extend(f"{indent}  {child}" for child in children)
    lines.append(f"{indent}</{name}>")


def to_xml(tdo: Tdo) -> bytes:
    """Serialize exactly as declared (digests and seal are not recomputed)."""
    if tdo.seal is None or any(p.digest is None for p in tdo.parts):
        raise TdoError("TDO is not sealed; use pack()")
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', f'<tdo id="{_attr(tdo.id)}" version="{FORMAT_VERSION}">']
    lines.append("  <metadata>")
    lines.append(f"    <title>{_text(tdo.title)}</title>")
    lines.append(f"    <created>{_text(tdo.created)}</created>")
    events = [_tag("event", [("who", e.who), ("when", e.when), ("what", e.what)]) for e in tdo.provenance]
    _block(lines, "provenance", events, "    ")
    lines.append("  </metadata>")
    parts = [
        _tag(
            "part",
            [("name", p.name), ("role", p.role.value), ("bits", p.bits), ("sha256", p.digest), ("media", p.media)],
            base64.b64encode(p.content).decode("ascii"),
        )
        for p in tdo.parts
    ]
    _block(lines, "manifest", parts, "  ")
    rels = [_tag("rel", [("from", r.source), ("to", r.target), ("label", r.label)]) for r in tdo.relationships]
    _block(lines, "relationships", rels, "  ")
    links = [_tag("link", [("ref", ln.ref), ("sha256", ln.digest)]) for ln in tdo.links]
    _block(lines, "links", links, "  ")
    lines.append("  " + _tag("seal", [("sha256", tdo.seal)]))
    if tdo.signature is not None:
        lines.append("  " + _tag("signature", [], _text(tdo.signature)))
    lines.append("</tdo>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def pack(tdo: Tdo) -> bytes:
    """Compute digests and seal, then serialize."""
    return to_xml(sealed(tdo))


def _need(elem: ET.Element, attr: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise TdoFormatError(f"<{elem.tag}> lacks attribute {attr!r}")
    return value


def _only(parent: ET.Element, tag: str) -> ET.Element:
    found = parent.findall(tag)
    if len(found) != 1:
        raise TdoFormatError(f"expected exactly one <{tag}> in <{parent.tag}>, found {len(found)}")
    return found[0]


def _children(parent: ET.Element, tag: str) -> list[ET.Element]:
    for child in parent:
        if child.tag != tag:
            raise TdoFormatError(f"unexpected <{child.tag}> in <{parent.tag}>")
    return list(parent)


def unpack(data: bytes) -> Tdo:
    """Parse a container, keeping declared digests and seal verbatim."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise TdoFormatError(f"malformed XML: {exc}") from None
    if root.tag != "tdo":
        raise TdoFormatError(f"root element is <{root.tag}>, not <tdo>")
    if _need(root, "version") != FORMAT_VERSION:
        raise TdoFormatError(f"unsupported TDO version {root.get('version')!r}")
    allowed = ["metadata", "manifest", "relationships", "links", "seal", "signature"]
    for child in root:
        if child.tag not in allowed:
            raise TdoFormatError(f"unexpected <{child.tag}> in <tdo>")

    meta = _only(root, "metadata")
    title = _only(meta, "title").text or ""
    created = _only(meta, "created").text or ""
    events = [
        ProvenanceEvent(_need(e, "who"), _need(e, "when"), _need(e, "what"))
        for e in _children(_only(meta, "provenance"), "event")
    ]

    parts = []
    for e in _children(_only(root, "manifest"), "part"):
        try:
            content = base64.b64decode((e.text or "").strip(), validate=True)
        except binascii.Error as exc:
            raise TdoFormatError(f"part {e.get('name')!r}: bad base64 ({exc})") from None
        bits = _need(e, "bits")
        if not bits.isdigit():
            raise TdoFormatError(f"part {e.get('name')!r}: bits must be a non-negative integer")
        try:
            role = PartRole(_need(e, "role"))
        except ValueError:
            raise TdoFormatError(f"part {e.get('name')!r}: unknown role {e.get('role')!r}") from None
        parts.append(TdoPart(_need(e, "name"), role, content, int(bits), e.get("media", ""), _need(e, "sha256")))

    rels = [
        Relationship(_need(e, "from"), _need(e, "to"), _need(e, "label"))
        for e in _children(_only(root, "relationships"), "rel")
    ]
    links = [Link(_need(e, "ref"), _need(e, "sha256")) for e in _children(_only(root, "links"), "link")]
    seal = _need(_only(root, "seal"), "sha256")
    sig = root.findall("signature")
    if len(sig) > 1:
        raise TdoFormatError("more than one <signature>")
    signature = (sig[0].text or "") if sig else None
    return Tdo(_need(root, "id"), created, title, events, parts, rels, links, seal, signature)


# Verification


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}" + (f" {self.detail}" if self.detail else "")


@dataclass
class VerifyReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def text(self) -> str:
        return "".join(c.line() + "\n" for c in self.checks)


def verify(tdo: Tdo) -> VerifyReport:
    checks = []
    actual = []
    for p in tdo.parts:
        digest = sha256_hex(p.content)
        actual.append(digest)
        if digest == p.digest:
            checks.append(Check(f"digest:{p.name}", True))
        else:
            checks.append(Check(f"digest:{p.name}", False, f"declared={p.digest} actual={digest}"))
        plausible = p.bits <= 8 * len(p.content) < p.bits + 8 or p.bits == 0 == len(p.content)
        detail = "" if plausible else f"{p.bits} bits in {len(p.content)} bytes"
        checks.append(Check(f"bits:{p.name}", plausible, detail))

    names = [p.name for p in tdo.parts]
    dupes = sorted({n for n in names if names.count(n) > 1})
    checks.append(Check("names", not dupes, " ".join(dupes)))
    dangling = sorted({end for r in tdo.relationships for end in (r.source, r.target) if end not in names})
    checks.append(Check("relationships", not dangling, " ".join(dangling)))

    programs = tdo.parts_with_role(PartRole.UVC_PROGRAM)
    invocations = tdo.parts_with_role(PartRole.DOC_INVOCATION)
    if programs and len(invocations) != 1:
        checks.append(Check("roles", False, f"{len(programs)} uvc-program part(s) need exactly one doc-invocation, "
                                            f"found {len(invocations)}"))
    else:
        checks.append(Check("roles", True))

    bad_links = [ln.ref for ln in tdo.links if not _HEX64.match(ln.digest)]
    checks.append(Check("links", not bad_links, " ".join(bad_links)))

    expected = seal_digest(tdo, actual)
    if tdo.seal == expected:
        checks.append(Check("seal", True))
    else:
        checks.append(Check("seal", False, f"declared={tdo.seal} actual={expected}"))
    return VerifyReport(checks)


def restore_from_tdo(tdo: Tdo, fuel: int = DEFAULT_FUEL, force: bool = False) -> RestoreResult:
    """Verify, then run the TDO's UVC program as its invocation descriptor says."""
    report = verify(tdo)
    if not report.ok and not force:
        raise VerificationError(report)
    invocations = tdo.parts_with_role(PartRole.DOC_INVOCATION)
    if len(invocations) != 1:
        raise TdoError(f"need exactly one doc-invocation part, found {len(invocations)}")
    descriptor = parse_invocation_descriptor(invocations[0].content.decode("ascii"))
    return restore_run(descriptor, lambda name: tdo.part(name).bitstring(), fuel)
