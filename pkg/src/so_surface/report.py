"""Findings, text tree and versioned JSON for an :class:`AnalysisReport`.

Findings describe conditions under which another shared object could win
resolution precedence. They carry no severity and no verdict.

String fields are escaped the same way in both renderings: a backslash
becomes ``\\\\`` and every byte that was not valid UTF-8 becomes ``\\xNN``.
:func:`unescape` inverts this exactly, which keeps the JSON lossless.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .closure import AnalysisReport, DependencyNode, ReportWarning
from .elf import ElfClass, ElfIdent, ElfSummary, Endianness, ParseWarning
from .errors import ReportFormatError
from .resolver import Mechanism, MechanismKind, Resolution, SkippedCandidate
from .search_paths import ExpandedPath, PathSource, SearchPathEntry, rpath_suppressed, split_path_list
from .sysroot import SysrootConfig, is_within, normpath, sysroot_relative

SCHEMA_VERSION = "so-surface/1"


class FindingKind(enum.Enum):
    ORIGIN_RELATIVE_SEARCH_PATH = "OriginRelativeSearchPath"
    NON_SYSTEM_EMBEDDED_PATH = "NonSystemEmbeddedPath"
    CWD_RELATIVE_SEARCH_PATH = "CwdRelativeSearchPath"
    UNRESOLVED_DEPENDENCY = "UnresolvedDependency"
    NON_ELF_CANDIDATE_SKIPPED = "NonElfCandidateSkipped"
    PATH_LITERAL_DEPENDENCY = "PathLiteralDependency"
    UNSUPPORTED_TOKEN = "UnsupportedToken"
    DUPLICATE_SEGMENT = "DuplicateSegment"
    PARSE_FAILED = "ParseFailed"
    EMPTY_INTERPRETER = "EmptyInterpreter"


_KIND_ORDER = {k: i for i, k in enumerate(FindingKind)}


class IntroducedBy(enum.Enum):
    ROOT = "root"
    TRANSITIVE = "transitive"


@dataclass(frozen=True)
class Finding:
    kind: FindingKind
    node_path: tuple[str, ...]
    detail: dict = field(default_factory=dict, hash=False)

    @property
    def introduced_by(self) -> IntroducedBy:
        return IntroducedBy.ROOT if len(self.node_path) == 1 else IntroducedBy.TRANSITIVE


# -- escaping --------------------------------------------------------------

_ESCAPE = re.compile(r"[\\\udc80-\udcff]")
_UNESCAPE = re.compile(r"\\(\\|x[0-9a-f]{2})")


def escape(s: str) -> str:
    return _ESCAPE.sub(lambda m: "\\\\" if m.group() == "\\" else f"\\x{ord(m.group()) - 0xDC00:02x}", s)


def unescape(s: str) -> str:
    return _UNESCAPE.sub(lambda m: "\\" if m.group(1) == "\\" else chr(0xDC00 + int(m.group(1)[1:], 16)), s)


# -- findings --------------------------------------------------------------


def _is_system(path: str, dirs: tuple[str, ...]) -> bool:
    return any(path == d or path.startswith(d.rstrip("/") + "/") for d in dirs)


def _node_findings(node: DependencyNode, path: tuple[str, ...], config: SysrootConfig) -> list[Finding]:
    out = []
    s = node.summary
    if s is not None:
        if s.interp == "":
            out.append(Finding(FindingKind.EMPTY_INTERPRETER, path, {"interp": ""}))
        for w in s.warnings:
            if w.kind == "DuplicateSegment":
                out.append(Finding(FindingKind.DUPLICATE_SEGMENT, path, {"detail": w.detail}))
    elif node.resolution is not None and node.resolution.resolved and not node.visited:
        out.append(Finding(FindingKind.PARSE_FAILED, path, {"path": node.resolution.canonical_path}))

    for ep in node.embedded_paths:
        e = ep.entry
        base = {"source": e.source.value, "raw": e.raw, "index": ep.index}
        if e.origin_relative:
            out.append(Finding(FindingKind.ORIGIN_RELATIVE_SEARCH_PATH, path,
                               {**base, "expanded": ep.host_path or ""}))
        if e.cwd_relative:
            out.append(Finding(FindingKind.CWD_RELATIVE_SEARCH_PATH, path, base))
        if e.unsupported_tokens:
            out.append(Finding(FindingKind.UNSUPPORTED_TOKEN, path,
                               {**base, "tokens": ",".join(e.unsupported_tokens)}))
        # origin-relative segments are already reported above
        if not e.origin_relative and not e.cwd_relative:
            target = normpath(e.raw)
            if not _is_system(target, config.standard_dirs):
                out.append(Finding(FindingKind.NON_SYSTEM_EMBEDDED_PATH, path, {**base, "path": target}))

    for child in node.children:
        res = child.resolution
        if "/" in child.name:
            out.append(Finding(FindingKind.PATH_LITERAL_DEPENDENCY, path, {"name": child.name}))
        for skip in res.skipped:
            if skip.reason == "not-elf":
                out.append(Finding(FindingKind.NON_ELF_CANDIDATE_SKIPPED, path,
                                   {"name": child.name, "path": skip.path}))
        if not res.resolved:
            out.append(Finding(FindingKind.UNRESOLVED_DEPENDENCY, path,
                               {"name": child.name, "tried": len(res.tried)}))
    out.sort(key=lambda f: _KIND_ORDER[f.kind])
    return out


def derive_findings(report: AnalysisReport) -> list[Finding]:
    """Findings in tree pre-order, then kind order within a node."""
    out = []
    for path, node in report.root.walk():
        out.extend(_node_findings(node, path, report.sysroot))
    return out


# -- text ------------------------------------------------------------------

_STYLES = {
    "box": ("├── ", "└── ", "│   ", "    "),
    "indent": ("  ", "  ", "  ", "  "),
}
_MECHANISM_LABEL = {
    MechanismKind.STANDARD_DIR: "standard dir",
    MechanismKind.PATH_LITERAL: "path literal",
}


def _display(path: str | None, config: SysrootConfig) -> str:
    if path is None:
        return "-"
    if config.root != "/" and is_within(config.root, path):
        path = "<sysroot>" + (sysroot_relative(path, config) if path != config.root else "")
    return escape(path)


def _node_label(node: DependencyNode, config: SysrootConfig) -> str:
    name = escape(node.name)
    res = node.resolution
    if res is None:
        return f"{name}  {_display(node.host_path, config)}"
    if not res.resolved:
        return f"{name} → UNRESOLVED (tried {len(res.tried)} locations)"
    mech = res.mechanism
    how = f"embedded path #{mech.index}" if mech.kind is MechanismKind.EMBEDDED_PATH else _MECHANISM_LABEL[mech.kind]
    return f"{name} → {_display(res.host_path, config)} ({how})"


def _path_lines(node: DependencyNode, config: SysrootConfig) -> list[str]:
    s = node.summary
    lines = []
    suppressed = rpath_suppressed(s)
    for tag, values in (("RPATH", s.rpath), ("RUNPATH", s.runpath)):
        for raw in values:
            entries = split_path_list(raw, PathSource(tag))
            marks = []
            if any(e.origin_relative for e in entries):
                marks.append("[ORIGIN]")
            if any(e.cwd_relative for e in entries):
                marks.append("[cwd-relative]")
            if tag == "RPATH" and suppressed:
                marks.append("[suppressed by RUNPATH]")
            lines.append(f"{tag}: {escape(raw)}" + "".join(" " + m for m in marks))
    for ep in node.embedded_paths:
        if ep.host_path is None:
            where = "not searched"
        elif ep.escaped:
            where = _display(ep.host_path, config) + " (outside sysroot, not searched)"
        elif not ep.resolvable:
            where = _display(ep.host_path, config) + " (not searched)"
        else:
            where = _display(ep.host_path, config)
        lines.append(f"  #{ep.index} {escape(ep.entry.raw) or '(empty)'} -> {where}")
    return lines


def _detail_lines(node: DependencyNode, config: SysrootConfig) -> list[str]:
    if node.visited:
        return ["(already analyzed above; not expanded again)"]
    s = node.summary
    if s is None:
        if node.resolution is not None and node.resolution.resolved:
            return ["(parse failed)"]
        return []
    lines = []
    if node.depth == 0:
        cls = "ELF64" if s.ident.elf_class is ElfClass.ELF64 else "ELF32"
        end = "little-endian" if s.ident.endianness is Endianness.LITTLE else "big-endian"
        lines.append(f"kind: {s.object_kind.value}, {cls} {end}, machine {s.machine}")
        lines.append(f"interpreter: {escape(s.interp) if s.interp is not None else '(none)'}")
    if not s.has_dynamic:
        lines.append("no dynamic segment")
    lines.append("needed: " + (", ".join(escape(n) for n in s.needed) or "(none)"))
    lines.extend(_path_lines(node, config))
    if not node.expanded:
        lines.append("(children not expanded)")
    return lines


def _render_node(node, config, prefix, style, out):
    _, _, cont, blank = _STYLES[style]
    detail_prefix = prefix + (cont if node.children else blank)
    for line in _detail_lines(node, config):
        out.append((detail_prefix + line).rstrip())
    for i, child in enumerate(node.children):
        last = i == len(node.children) - 1
        tee, elbow, _, _ = _STYLES[style]
        out.append(prefix + (elbow if last else tee) + _node_label(child, config))
        _render_node(child, config, prefix + (blank if last else cont), style, out)


def _finding_text(f: Finding) -> str:
    d = f.detail
    if "raw" in d:
        what = f'{d["source"]} #{d["index"]} "{escape(d["raw"])}"'
        if "tokens" in d:
            what += f' tokens {d["tokens"]}'
    elif "name" in d:
        what = escape(d["name"])
        if "tried" in d:
            what += f' (tried {d["tried"]})'
    elif "path" in d:
        what = escape(d["path"])
    else:
        what = escape(str(d.get("detail", d.get("interp", ""))))
    return f"{f.kind.value} at {' > '.join(escape(p) for p in f.node_path)}: {what}"


def render_text(report: AnalysisReport, findings: list[Finding], style: str = "box") -> str:
    if style not in _STYLES:
        raise ValueError(f"unknown style {style!r}")
    cfg = report.sysroot
    out = [
        f"root: {escape(report.root.name)}",
        f"sysroot: {'<sysroot>' if cfg.root != '/' else '/'}",
        "standard dirs: " + " ".join(cfg.standard_dirs),
        f"max depth: {report.max_depth}",
        f"files analyzed: {report.visited_count}",
        "",
        _node_label(report.root, cfg),
    ]
    _render_node(report.root, cfg, "", style, out)
    out.append("")
    for by in IntroducedBy:
        group = [f for f in findings if f.introduced_by is by]
        out.append(f"findings introduced by {by.value} ({len(group)}):")
        out.extend("  " + _finding_text(f) for f in group)
    out.append(f"unresolved ({len(report.unresolved)}):")
    for path, name in report.unresolved:
        out.append(f"  {escape(name)} needed by {' > '.join(escape(p) for p in path)}")
    out.append(f"warnings ({len(report.warnings)}):")
    for w in report.warnings:
        out.append(f"  {w.kind} at {' > '.join(escape(p) for p in w.node_path)}: {escape(w.detail)}")
    return "\n".join(out) + "\n"


# -- JSON ------------------------------------------------------------------


def _e(s: str | None) -> str | None:
    return None if s is None else escape(s)


def _summary_doc(s: ElfSummary) -> dict:
    return {
        "elf_class": s.ident.elf_class.name,
        "endianness": s.ident.endianness.name.lower(),
        "machine": s.machine,
        "e_type": s.e_type,
        "object_kind": s.object_kind.value,
        "interp": _e(s.interp),
        "needed": [escape(n) for n in s.needed],
        "rpath": [escape(p) for p in s.rpath],
        "runpath": [escape(p) for p in s.runpath],
        "has_dynamic": s.has_dynamic,
        "warnings": [{"kind": w.kind, "detail": escape(w.detail)} for w in s.warnings],
    }


def _resolution_doc(r: Resolution) -> dict:
    mech = None
    if r.mechanism is not None:
        mech = {"kind": r.mechanism.kind.value, "index": r.mechanism.index, "directory": _e(r.mechanism.directory)}
    return {
        "name": escape(r.name),
        "status": "resolved" if r.resolved else "unresolved",
        "host_path": _e(r.host_path),
        "canonical_path": _e(r.canonical_path),
        "mechanism": mech,
        "tried": [escape(t) for t in r.tried],
        "skipped": [{"path": escape(s.path), "reason": s.reason} for s in r.skipped],
    }


def _embedded_doc(ep: ExpandedPath) -> dict:
    e = ep.entry
    return {
        "index": ep.index,
        "raw": escape(e.raw),
        "source": e.source.value,
        "origin_relative": e.origin_relative,
        "empty": e.empty,
        "unsupported_tokens": list(e.unsupported_tokens),
        "host_path": _e(ep.host_path),
        "resolvable": ep.resolvable,
        "escaped": ep.escaped,
        "sysroot_relative": _e(ep.sysroot_relative),
    }


def _node_doc(n: DependencyNode) -> dict:
    return {
        "name": escape(n.name),
        "depth": n.depth,
        "host_path": _e(n.host_path),
        "expanded": n.expanded,
        "visited": n.visited,
        "resolution": None if n.resolution is None else _resolution_doc(n.resolution),
        "summary": None if n.summary is None else _summary_doc(n.summary),
        "embedded_paths": [_embedded_doc(ep) for ep in n.embedded_paths],
        "children": [_node_doc(c) for c in n.children],
    }


def _path_doc(path: tuple[str, ...]) -> list[str]:
    return [escape(p) for p in path]


def to_document(report: AnalysisReport, findings: list[Finding]) -> dict:
    cfg = report.sysroot
    return {
        "schema": SCHEMA_VERSION,
        "sysroot": {
            "root": escape(cfg.root),
            "standard_dirs": list(cfg.standard_dirs),
            "arch_triplet": cfg.arch_triplet,
        },
        "max_depth": report.max_depth,
        "visited_count": report.visited_count,
        "root": _node_doc(report.root),
        "unresolved": [{"node_path": _path_doc(p), "name": escape(n)} for p, n in report.unresolved],
        "warnings": [
            {"kind": w.kind, "node_path": _path_doc(w.node_path), "detail": escape(w.detail)}
            for w in report.warnings
        ],
        "findings": [
            {
                "kind": f.kind.value,
                "introduced_by": f.introduced_by.value,
                "node_path": _path_doc(f.node_path),
                "detail": {k: escape(v) if isinstance(v, str) else v for k, v in f.detail.items()},
            }
            for f in findings
        ],
    }


def render_json(report: AnalysisReport, findings: list[Finding]) -> bytes:
    doc = to_document(report, findings)
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_schema() -> dict:
    text = resources.files(__package__).joinpath("schema/so-surface-1.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_document(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` breaks the schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema(), cls=jsonschema.Draft202012Validator)


# -- JSON back to objects --------------------------------------------------


def _u(s: str | None) -> str | None:
    return None if s is None else unescape(s)


def _summary_from(d: dict) -> ElfSummary:
    return ElfSummary(
        ident=ElfIdent(ElfClass[d["elf_class"]], Endianness[d["endianness"].upper()]),
        machine=d["machine"],
        e_type=d["e_type"],
        interp=_u(d["interp"]),
        needed=tuple(unescape(n) for n in d["needed"]),
        rpath=tuple(unescape(p) for p in d["rpath"]),
        runpath=tuple(unescape(p) for p in d["runpath"]),
        has_dynamic=d["has_dynamic"],
        warnings=tuple(ParseWarning(w["kind"], unescape(w["detail"])) for w in d["warnings"]),
    )


def _resolution_from(d: dict) -> Resolution:
    mech = d["mechanism"]
    return Resolution(
        name=unescape(d["name"]),
        host_path=_u(d["host_path"]),
        canonical_path=_u(d["canonical_path"]),
        mechanism=None if mech is None else Mechanism(MechanismKind(mech["kind"]), mech["index"],
                                                      _u(mech["directory"])),
        tried=tuple(unescape(t) for t in d["tried"]),
        skipped=tuple(SkippedCandidate(unescape(s["path"]), s["reason"]) for s in d["skipped"]),
    )


def _embedded_from(d: dict) -> ExpandedPath:
    entry = SearchPathEntry(
        raw=unescape(d["raw"]),
        source=PathSource(d["source"]),
        origin_relative=d["origin_relative"],
        empty=d["empty"],
        unsupported_tokens=tuple(d["unsupported_tokens"]),
    )
    return ExpandedPath(entry, d["index"], _u(d["host_path"]), d["resolvable"], d["escaped"],
                        _u(d["sysroot_relative"]))


def _node_from(d: dict) -> DependencyNode:
    return DependencyNode(
        name=unescape(d["name"]),
        depth=d["depth"],
        host_path=_u(d["host_path"]),
        resolution=None if d["resolution"] is None else _resolution_from(d["resolution"]),
        summary=None if d["summary"] is None else _summary_from(d["summary"]),
        embedded_paths=[_embedded_from(e) for e in d["embedded_paths"]],
        children=[_node_from(c) for c in d["children"]],
        expanded=d["expanded"],
        visited=d["visited"],
    )


def parse_json(data: bytes | str) -> tuple[AnalysisReport, list[Finding]]:
    """Rebuild the report and findings from :func:`render_json` output."""
    try:
        doc = json.loads(data)
        if not isinstance(doc, dict):
            raise ReportFormatError("top level is not an object")
        if doc.get("schema") != SCHEMA_VERSION:
            raise ReportFormatError(f"unsupported schema {doc.get('schema')!r}")
        s = doc["sysroot"]
        config = SysrootConfig(unescape(s["root"]), tuple(s["standard_dirs"]), s["arch_triplet"])
        report = AnalysisReport(
            root=_node_from(doc["root"]),
            sysroot=config,
            max_depth=doc["max_depth"],
            unresolved=[(tuple(unescape(p) for p in u["node_path"]), unescape(u["name"]))
                        for u in doc["unresolved"]],
            warnings=[ReportWarning(w["kind"], tuple(unescape(p) for p in w["node_path"]), unescape(w["detail"]))
                      for w in doc["warnings"]],
            visited_count=doc["visited_count"],
        )
        findings = [
            Finding(FindingKind(f["kind"]), tuple(unescape(p) for p in f["node_path"]),
                    {k: unescape(v) if isinstance(v, str) else v for k, v in f["detail"].items()})
            for f in doc["findings"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportFormatError(str(exc)) from None
    return report, findings
