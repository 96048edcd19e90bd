"""Bounded transitive dependency closure.

The root sits at depth 0, its DT_NEEDED entries at depth 1, theirs at
depth 2. Expansion is breadth-first; a canonical file path is parsed at
most once per analysis and later edges to it are kept as marker nodes.
"""

from __future__ import annotations

import os
import posixpath
from collections import deque
from dataclasses import dataclass, field

from . import elf
from .elf import ElfSummary
from .errors import ElfError, NotElf, RootNotElf
from .resolver import Resolution, Resolver
from .search_paths import ExpandedPath, effective_embedded_paths
from .sysroot import SysrootConfig, normpath, standard_dirs_for

DEFAULT_MAX_DEPTH = 2


@dataclass
class DependencyNode:
    name: str
    depth: int
    host_path: str | None
    resolution: Resolution | None = None
    summary: ElfSummary | None = None
    embedded_paths: list[ExpandedPath] = field(default_factory=list)
    children: list[DependencyNode] = field(default_factory=list)
    expanded: bool = False
    visited: bool = False

    def walk(self, path: tuple[str, ...] = ()):
        """Yield ``(node_path, node)`` in pre-order."""
        path = path + (self.name,)
        yield path, self
        for child in self.children:
            yield from child.walk(path)


@dataclass(frozen=True)
class ReportWarning:
    kind: str
    node_path: tuple[str, ...]
    detail: str


@dataclass
class AnalysisReport:
    root: DependencyNode
    sysroot: SysrootConfig
    max_depth: int
    unresolved: list[tuple[tuple[str, ...], str]]
    warnings: list[ReportWarning]
    visited_count: int

    def nodes(self) -> list[DependencyNode]:
        return [n for _, n in self.root.walk()]


def _parse_root(root_path: str) -> ElfSummary:
    try:
        return elf.summarize_file(root_path)
    except NotElf as exc:
        raise RootNotElf(f"{root_path}: {exc.detail}") from None


def analyze(
    root_path: str | os.PathLike,
    config: SysrootConfig,
    max_depth: int = DEFAULT_MAX_DEPTH,
    *,
    root_summary: ElfSummary | None = None,
) -> AnalysisReport:
    """Analyze ``root_path`` and its dependencies under ``config``.

    Per-dependency problems never abort the run; they show up as unresolved
    entries or warnings on the returned report.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    # $ORIGIN of the main program is its symlink-free location
    root_host = normpath(os.path.realpath(os.fsdecode(root_path)))
    summary = root_summary if root_summary is not None else _parse_root(root_host)

    resolver = Resolver(config)
    warnings: list[ReportWarning] = []
    unresolved: list[tuple[tuple[str, ...], str]] = []
    visited = {root_host}

    def attach(node: DependencyNode, path: tuple[str, ...], node_summary: ElfSummary, owner: str):
        node.summary = node_summary
        node.embedded_paths = effective_embedded_paths(node_summary, owner, config)
        for w in node_summary.warnings:
            warnings.append(ReportWarning(w.kind, path, w.detail))

    root = DependencyNode(posixpath.basename(root_host), 0, root_host)
    queue: deque[tuple[DependencyNode, tuple[str, ...]]] = deque()
    attach(root, (root.name,), summary, root_host)
    queue.append((root, (root.name,)))

    while queue:
        node, path = queue.popleft()
        if node.depth >= max_depth:
            continue
        node.expanded = True
        for name in node.summary.needed:
            child_path = path + (name,)
            res = resolver.resolve(name, node.embedded_paths)
            child = DependencyNode(name, node.depth + 1, res.host_path, resolution=res)
            node.children.append(child)
            for skip in res.skipped:
                if skip.reason in ("symlink-escape", "symlink-loop", "outside-sysroot"):
                    warnings.append(ReportWarning("SymlinkRejected", child_path, f"{skip.path}: {skip.reason}"))
            if not res.resolved:
                unresolved.append((path, name))
                continue
            if res.canonical_path in visited:
                child.visited = True
                continue
            visited.add(res.canonical_path)
            try:
                child_summary = elf.summarize_file(res.canonical_path)
            except (ElfError, OSError) as exc:
                detail = exc.detail if isinstance(exc, ElfError) else str(exc)
                warnings.append(ReportWarning("ParseFailed", child_path, f"{res.canonical_path}: {detail}"))
                continue
            attach(child, child_path, child_summary, res.host_path)
            queue.append((child, child_path))

    return AnalysisReport(root, config, max_depth, unresolved, warnings, len(visited))


def analyze_path(
    root_path: str | os.PathLike, sysroot: str | os.PathLike = "/", max_depth: int = DEFAULT_MAX_DEPTH
) -> AnalysisReport:
    """Convenience entry point: derive the sysroot config from the root's machine."""
    root_host = os.path.abspath(os.fsdecode(root_path))
    summary = _parse_root(root_host)
    config = standard_dirs_for(summary.machine, sysroot)
    return analyze(root_host, config, max_depth, root_summary=summary)
