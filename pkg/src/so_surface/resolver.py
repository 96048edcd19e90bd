"""Resolve DT_NEEDED names to files inside a sysroot.

Probing follows the heuristic the analyzer models: the owner's effective
embedded search paths first, then the standard library directories under
the sysroot. Every probe walks the candidate path component by component,
following symlinks manually so that each hop stays confined to the sysroot
and names compare byte-wise against real directory listings.
"""

from __future__ import annotations

import enum
import os
import posixpath
import stat
from dataclasses import dataclass

from .elf import ELF_MAGIC, ElfSummary
from .search_paths import ExpandedPath, effective_embedded_paths
from .sysroot import (
    SysrootConfig,
    is_within,
    map_to_sysroot,
    normpath,
    standard_dirs_for,  # noqa: F401  re-exported
)

MAX_SYMLINK_HOPS = 16


class MechanismKind(enum.Enum):
    EMBEDDED_PATH = "embedded-path"
    STANDARD_DIR = "standard-dir"
    PATH_LITERAL = "path-literal"


@dataclass(frozen=True)
class Mechanism:
    kind: MechanismKind
    index: int | None = None
    directory: str | None = None


@dataclass(frozen=True)
class SkippedCandidate:
    path: str
    reason: str


@dataclass(frozen=True)
class Resolution:
    name: str
    host_path: str | None = None
    canonical_path: str | None = None
    mechanism: Mechanism | None = None
    tried: tuple[str, ...] = ()
    skipped: tuple[SkippedCandidate, ...] = ()

    @property
    def resolved(self) -> bool:
        return self.host_path is not None


class _ProbeFailure(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class Resolver:
    """Stateful front end holding per-analysis directory listings.

    The sysroot is assumed not to change while a resolver is alive.
    """

    def __init__(self, config: SysrootConfig):
        self.config = config
        self._listings: dict[str, frozenset[str] | None] = {}

    def _listing(self, directory: str) -> frozenset[str] | None:
        if directory not in self._listings:
            try:
                self._listings[directory] = frozenset(os.listdir(directory))
            except OSError:
                self._listings[directory] = None
        return self._listings[directory]

    def canonicalize(self, host_path: str) -> str | None:
        """Resolve ``host_path`` inside the sysroot.

        Returns the symlink-free host path, or ``None`` if some component is
        missing. Raises ``_ProbeFailure`` for escapes and symlink loops.
        """
        root = self.config.root
        if not is_within(root, host_path):
            raise _ProbeFailure("outside-sysroot")
        rel = host_path[len(root):] if root != "/" else host_path
        pending = [c for c in rel.split("/") if c]
        current: list[str] = []
        hops = 0
        while pending:
            part = pending.pop(0)
            if part == ".":
                continue
            if part == "..":
                if not current:
                    raise _ProbeFailure("symlink-escape")
                current.pop()
                continue
            parent = posixpath.join(root, *current)
            listing = self._listing(parent)
            if listing is None or part not in listing:
                return None
            path = posixpath.join(parent, part)
            try:
                st = os.lstat(path)
            except OSError:
                return None
            if stat.S_ISLNK(st.st_mode):
                hops += 1
                if hops > MAX_SYMLINK_HOPS:
                    raise _ProbeFailure("symlink-loop")
                target = os.readlink(path)
                if target.startswith("/"):
                    current = []
                pending[:0] = [c for c in target.split("/") if c]
            else:
                current.append(part)
        return posixpath.join(root, *current)

    def _probe(self, candidate: str) -> str | None:
        """Canonical path when ``candidate`` is a usable ELF file."""
        real = self.canonicalize(candidate)
        if real is None:
            return None
        try:
            st = os.lstat(real)
            if not stat.S_ISREG(st.st_mode):
                raise _ProbeFailure("not-regular-file")
            with open(real, "rb") as f:
                magic = f.read(4)
        except OSError:
            raise _ProbeFailure("unreadable") from None
        if magic != ELF_MAGIC:
            raise _ProbeFailure("not-elf")
        return real

    def _search(self, name: str, candidates: list[tuple[str, Mechanism]]) -> Resolution:
        tried, skipped = [], []
        for path, mechanism in candidates:
            tried.append(path)
            try:
                real = self._probe(path)
            except _ProbeFailure as exc:
                skipped.append(SkippedCandidate(path, exc.reason))
                continue
            if real is not None:
                return Resolution(name, path, real, mechanism, tuple(tried), tuple(skipped))
        return Resolution(name, tried=tuple(tried), skipped=tuple(skipped))

    def resolve(self, name: str, embedded: list[ExpandedPath]) -> Resolution:
        """Resolve ``name`` given the owner's already-expanded search paths."""
        if not name:
            return Resolution(name)
        if "/" in name:
            if not name.startswith("/"):
                # relative to the process working directory; unknowable statically
                return Resolution(name)
            mapped = map_to_sysroot(name, self.config)
            if mapped.escaped:
                return Resolution(name, tried=(mapped.host_path,),
                                  skipped=(SkippedCandidate(mapped.host_path, "outside-sysroot"),))
            return self._search(name, [(mapped.host_path, Mechanism(MechanismKind.PATH_LITERAL))])

        candidates = []
        for ep in embedded:
            if ep.resolvable:
                mech = Mechanism(MechanismKind.EMBEDDED_PATH, ep.index, ep.host_path)
                candidates.append((normpath(posixpath.join(ep.host_path, name)), mech))
        for d in self.config.standard_dirs:
            mapped = map_to_sysroot(d, self.config)
            mech = Mechanism(MechanismKind.STANDARD_DIR, directory=d)
            candidates.append((posixpath.join(mapped.host_path, name), mech))
        return self._search(name, candidates)


def resolve_needed(
    name: str, owner_summary: ElfSummary, owner_host_path: str, config: SysrootConfig
) -> Resolution:
    embedded = effective_embedded_paths(owner_summary, owner_host_path, config)
    return Resolver(config).resolve(name, embedded)
