"""Embedded search-path decoding: splitting, ``$ORIGIN`` expansion and
the RUNPATH-over-RPATH selection rule."""

from __future__ import annotations

import enum
import posixpath
import re
from dataclasses import dataclass

from .elf import ElfSummary
from .sysroot import SysrootConfig, is_within, map_to_sysroot, normpath, sysroot_relative

ORIGIN_TOKENS = ("${ORIGIN}", "$ORIGIN")
_UNSUPPORTED_TOKEN = re.compile(r"\$(?:\{(LIB|PLATFORM)\}|(LIB|PLATFORM)(?![A-Za-z0-9_]))")


class PathSource(enum.Enum):
    RPATH = "RPATH"
    RUNPATH = "RUNPATH"


@dataclass(frozen=True)
class SearchPathEntry:
    raw: str
    source: PathSource
    origin_relative: bool
    empty: bool
    unsupported_tokens: tuple[str, ...] = ()

    @classmethod
    def from_raw(cls, raw: str, source: PathSource) -> SearchPathEntry:
        tokens = tuple("$" + (m.group(1) or m.group(2)) for m in _UNSUPPORTED_TOKEN.finditer(raw))
        return cls(
            raw=raw,
            source=source,
            origin_relative=any(t in raw for t in ORIGIN_TOKENS),
            empty=raw == "",
            unsupported_tokens=tokens,
        )

    @property
    def cwd_relative(self) -> bool:
        """True when the loader would interpret the segment against the
        working directory: empty segments and plain relative paths."""
        if self.empty:
            return True
        return not self.origin_relative and not self.raw.startswith("/")


@dataclass(frozen=True)
class ExpandedPath:
    entry: SearchPathEntry
    index: int
    host_path: str | None
    resolvable: bool
    escaped: bool = False
    sysroot_relative: str | None = None


def split_path_list(raw: str, source: PathSource) -> list[SearchPathEntry]:
    return [SearchPathEntry.from_raw(part, source) for part in raw.split(":")]


def expand_origin(entry: SearchPathEntry, origin_dir: str) -> str:
    path = entry.raw
    for token in ORIGIN_TOKENS:
        path = path.replace(token, origin_dir)
    return normpath(path) if path else path


def effective_entries(summary: ElfSummary) -> list[SearchPathEntry]:
    """Segments the loader actually consults: RUNPATH if present, else RPATH."""
    if summary.runpath:
        lists, source = summary.runpath, PathSource.RUNPATH
    else:
        lists, source = summary.rpath, PathSource.RPATH
    return [e for raw in lists for e in split_path_list(raw, source)]


def rpath_suppressed(summary: ElfSummary) -> bool:
    return bool(summary.runpath and summary.rpath)


def effective_embedded_paths(
    summary: ElfSummary, owner_host_path: str, sysroot: SysrootConfig
) -> list[ExpandedPath]:
    origin_dir = posixpath.dirname(owner_host_path)
    out = []
    for i, entry in enumerate(effective_entries(summary)):
        if entry.cwd_relative:
            out.append(ExpandedPath(entry, i, None, False))
            continue
        if entry.origin_relative:
            host = expand_origin(entry, origin_dir)
            escaped = not host.startswith("/") or not is_within(sysroot.root, host)
        else:
            mapped = map_to_sysroot(entry.raw, sysroot)
            host, escaped = mapped.host_path, mapped.escaped
        rel = None if escaped else sysroot_relative(host, sysroot)
        resolvable = not escaped and not entry.unsupported_tokens
        out.append(ExpandedPath(entry, i, host, resolvable, escaped, rel))
    return out
