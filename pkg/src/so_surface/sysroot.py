"""Sysroot configuration and lexical path mapping.

All path arithmetic here is purely lexical and POSIX-flavoured; nothing in
this module touches the filesystem except the existence check on the root.
"""

from __future__ import annotations

import os
import posixpath
from dataclasses import dataclass

from .errors import SysrootMissing

BASE_STANDARD_DIRS = ("/lib", "/usr/lib", "/lib64", "/usr/lib64")

# Debian-style multiarch triplets keyed by e_machine
ARCH_TRIPLETS = {
    62: "x86_64-linux-gnu",
    183: "aarch64-linux-gnu",
    40: "arm-linux-gnueabihf",
    3: "i386-linux-gnu",
}


def normpath(path: str) -> str:
    """``posixpath.normpath`` without the POSIX double-slash special case."""
    out = posixpath.normpath(path)
    if out.startswith("//"):
        out = "/" + out.lstrip("/")
    return out


def is_within(root: str, path: str) -> bool:
    if root == "/":
        return path.startswith("/")
    return path == root or path.startswith(root + "/")


@dataclass(frozen=True)
class SysrootConfig:
    root: str
    standard_dirs: tuple[str, ...] = BASE_STANDARD_DIRS
    arch_triplet: str | None = None


@dataclass(frozen=True)
class MappedPath:
    host_path: str
    escaped: bool


def standard_dirs_for(machine: int, sysroot_root: str | os.PathLike) -> SysrootConfig:
    root = os.fsdecode(sysroot_root)
    if not os.path.isdir(root):
        raise SysrootMissing(f"{root} is not a directory")
    triplet = ARCH_TRIPLETS.get(machine)
    dirs = BASE_STANDARD_DIRS
    if triplet:
        dirs += (f"/lib/{triplet}", f"/usr/lib/{triplet}")
    return SysrootConfig(normpath(os.path.realpath(root)), dirs, triplet)


def map_to_sysroot(abs_path: str, config: SysrootConfig) -> MappedPath:
    """Join an in-target absolute path onto the sysroot.

    The result is flagged ``escaped`` when ``..`` components walk out of
    the root; callers must not use escaped paths.
    """
    if not abs_path.startswith("/"):
        raise ValueError(f"not an absolute path: {abs_path!r}")
    host = normpath(config.root.rstrip("/") + "/" + abs_path.lstrip("/"))
    return MappedPath(host, not is_within(config.root, host))


def sysroot_relative(host_path: str, config: SysrootConfig) -> str | None:
    """Inverse of :func:`map_to_sysroot`; ``None`` when outside the root."""
    if not is_within(config.root, host_path):
        return None
    if config.root == "/":
        return host_path
    return "/" + host_path[len(config.root):].lstrip("/")
