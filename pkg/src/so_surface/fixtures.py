"""Synthetic ELF images and sysroot trees for hermetic tests.

Generated images carry no code and no section headers: just an ELF header,
a program header table, an optional interpreter string, a dynamic string
table and a dynamic array, all covered by a single PT_LOAD. They are not
runnable and are never meant to be.
"""

from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .elf import (
    DT_NEEDED,
    DT_NULL,
    DT_RPATH,
    DT_RUNPATH,
    DT_STRSZ,
    DT_STRTAB,
    ET_DYN,
    ET_EXEC,
    PT_DYNAMIC,
    PT_INTERP,
    PT_LOAD,
    ElfClass,
    Endianness,
)
from .errors import DestNotEmpty, SpecInvalid


class Malformation(enum.Enum):
    MISSING_DT_NULL = "MissingDtNull"
    TRUNCATED_PH_TABLE = "TruncatedPhTable"
    OUT_OF_RANGE_STR_OFFSET = "OutOfRangeStrOffset"
    DUPLICATE_INTERP = "DuplicateInterp"


DUPLICATE_INTERP_DECOY = "/decoy/ld.so.1"


@dataclass(frozen=True)
class FixtureSpec:
    elf_class: ElfClass = ElfClass.ELF64
    endianness: Endianness = Endianness.LITTLE
    machine: int = 62
    interp: str | None = None
    needed: tuple[str, ...] = ()
    rpath: str | None = None
    runpath: str | None = None
    strtab_vaddr_bias: int = 0
    malformations: frozenset[Malformation] = frozenset()
    e_type: int | None = None  # defaults to ET_EXEC with an interpreter, else ET_DYN
    static: bool = False  # no PT_DYNAMIC at all


def _encode(s: str) -> bytes:
    return s.encode("utf-8", "surrogateescape")


def _check(spec: FixtureSpec) -> None:
    strings = list(spec.needed) + [s for s in (spec.interp, spec.rpath, spec.runpath) if s is not None]
    for s in strings:
        if "\0" in s:
            raise SpecInvalid(f"string contains NUL: {s!r}")
    if not 0 <= spec.machine <= 0xFFFF:
        raise SpecInvalid(f"machine {spec.machine} does not fit 16 bits")
    m = spec.malformations
    if spec.static and (spec.needed or spec.rpath is not None or spec.runpath is not None
                        or Malformation.MISSING_DT_NULL in m or Malformation.OUT_OF_RANGE_STR_OFFSET in m):
        raise SpecInvalid("a static fixture has no dynamic entries")
    if Malformation.DUPLICATE_INTERP in m and spec.interp is None:
        raise SpecInvalid("DuplicateInterp needs an interpreter")
    if Malformation.OUT_OF_RANGE_STR_OFFSET in m and not (spec.needed or spec.rpath is not None
                                                          or spec.runpath is not None):
        raise SpecInvalid("OutOfRangeStrOffset needs a string-valued dynamic entry")
    limit = 0xFFFFFFFF if spec.elf_class is ElfClass.ELF32 else 0xFFFFFFFFFFFFFFFF
    if not 0 <= spec.strtab_vaddr_bias <= limit // 2:
        raise SpecInvalid(f"strtab_vaddr_bias {spec.strtab_vaddr_bias:#x} out of range")


def _align(n: int, a: int = 8) -> int:
    return (n + a - 1) // a * a


def build_elf(spec: FixtureSpec) -> bytes:
    _check(spec)
    is64 = spec.elf_class is ElfClass.ELF64
    bo = "<" if spec.endianness is Endianness.LITTLE else ">"
    w = "Q" if is64 else "I"
    ehsize, phentsize = (64, 56) if is64 else (52, 32)
    dyn_fmt = bo + ("qQ" if is64 else "iI")
    bias = spec.strtab_vaddr_bias
    m = spec.malformations

    # string table
    strtab = bytearray(b"\0")
    offsets: dict[str, int] = {}

    def intern(s: str) -> int:
        if s not in offsets:
            offsets[s] = len(strtab)
            strtab.extend(_encode(s) + b"\0")
        return offsets[s]

    dyn: list[tuple[int, int]] = [(DT_NEEDED, intern(n)) for n in spec.needed]
    if spec.rpath is not None:
        dyn.append((DT_RPATH, intern(spec.rpath)))
    if spec.runpath is not None:
        dyn.append((DT_RUNPATH, intern(spec.runpath)))
    if Malformation.OUT_OF_RANGE_STR_OFFSET in m:
        tag, _ = dyn[0]
        dyn[0] = (tag, len(strtab) + 0x100)

    interps = []
    if spec.interp is not None:
        interps.append(_encode(spec.interp) + b"\0")
        if Malformation.DUPLICATE_INTERP in m:
            interps.append(_encode(DUPLICATE_INTERP_DECOY) + b"\0")

    phnum = len(interps) + (1 if spec.static else 2)  # interp(s), load, dynamic
    off = ehsize + phnum * phentsize
    interp_offs = []
    for blob in interps:
        interp_offs.append(off)
        off += len(blob)
    if spec.static:
        strtab = bytearray()
    strtab_off = off
    off = _align(off + len(strtab))
    dyn_off = off
    if spec.static:
        dyn_blob = b""
    else:
        dyn.append((DT_STRTAB, strtab_off + bias))
        dyn.append((DT_STRSZ, len(strtab)))
        if Malformation.MISSING_DT_NULL not in m:
            dyn.append((DT_NULL, 0))
        dyn_blob = b"".join(struct.pack(dyn_fmt, t, v) for t, v in dyn)
    total = dyn_off + len(dyn_blob)

    def phdr(p_type: int, offset: int, size: int) -> bytes:
        vaddr = offset + bias
        if is64:
            return struct.pack(bo + "II" + w * 6, p_type, 4, offset, vaddr, vaddr, size, size, 8)
        return struct.pack(bo + "I" + w * 7, p_type, offset, vaddr, vaddr, size, size, 4, 4)

    phdrs = [phdr(PT_INTERP, o, len(b)) for o, b in zip(interp_offs, interps)]
    phdrs.append(phdr(PT_LOAD, 0, total))
    if not spec.static:
        phdrs.append(phdr(PT_DYNAMIC, dyn_off, len(dyn_blob)))

    phoff = ehsize
    if Malformation.TRUNCATED_PH_TABLE in m:
        # table start moved so its last entry hangs past end of file
        phoff = total - phnum * phentsize + phentsize // 2

    e_type = spec.e_type if spec.e_type is not None else (ET_EXEC if spec.interp is not None else ET_DYN)
    ident = b"\x7fELF" + bytes([spec.elf_class.value, spec.endianness.value, 1, 0]) + b"\0" * 8
    header = ident + struct.pack(
        bo + "HHI" + w * 3 + "IHHHHHH",
        e_type, spec.machine, 1, 0, phoff, 0, 0, ehsize, phentsize, phnum, 0, 0, 0,
    )
    assert len(header) == ehsize
    image = bytearray(header)
    image.extend(b"".join(phdrs))
    for blob in interps:
        image.extend(blob)
    image.extend(strtab)
    image.extend(b"\0" * (dyn_off - len(image)))
    image.extend(dyn_blob)
    assert len(image) == total
    return bytes(image)


# -- sysroot trees ---------------------------------------------------------


@dataclass(frozen=True)
class ElfFile:
    spec: FixtureSpec


@dataclass(frozen=True)
class RawBytes:
    data: bytes


@dataclass(frozen=True)
class Symlink:
    target: str


@dataclass(frozen=True)
class Dir:
    pass


@dataclass(frozen=True)
class SysrootSpec:
    entries: tuple[tuple[str, ElfFile | RawBytes | Symlink | Dir], ...] = field(default=())


def _check_relpath(rel: str) -> None:
    if not rel or rel.startswith("/"):
        raise SpecInvalid(f"entry path must be relative: {rel!r}")
    depth = 0
    for part in rel.split("/"):
        if part == "..":
            depth -= 1
        elif part not in ("", "."):
            depth += 1
        if depth < 0:
            raise SpecInvalid(f"entry path escapes the root: {rel!r}")


def build_sysroot(spec: SysrootSpec, dest: str | os.PathLike) -> list[Path]:
    """Materialize ``spec`` under ``dest`` and return created paths in order."""
    dest = Path(dest)
    if dest.exists() and any(dest.iterdir()):
        raise DestNotEmpty(str(dest))
    for rel, _ in spec.entries:
        _check_relpath(rel)
    dest.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []

    def ensure_dir(path: Path) -> None:
        if path == dest or path.is_dir():
            return
        ensure_dir(path.parent)
        path.mkdir()
        created.append(path)

    for rel, content in spec.entries:
        path = dest / rel
        if isinstance(content, Dir):
            ensure_dir(path)
            continue
        ensure_dir(path.parent)
        if isinstance(content, Symlink):
            os.symlink(content.target, path)
        elif isinstance(content, ElfFile):
            path.write_bytes(build_elf(content.spec))
        elif isinstance(content, RawBytes):
            path.write_bytes(content.data)
        else:
            raise SpecInvalid(f"unknown entry content {content!r}")
        created.append(path)
    return created


# -- the worked example ----------------------------------------------------

ILLUSTRATIVE_ROOT = "opt/app/bin/app"


def illustrative_sysroot() -> SysrootSpec:
    """An executable with RUNPATH ``$ORIGIN/lib`` needing a bundled
    ``libhello.so`` and the system ``libc.so.6``."""
    app = FixtureSpec(
        interp="/lib64/ld-linux-x86-64.so.2",
        needed=("libhello.so", "libc.so.6"),
        runpath="$ORIGIN/lib",
    )
    return SysrootSpec((
        (ILLUSTRATIVE_ROOT, ElfFile(app)),
        ("opt/app/bin/lib/libhello.so", ElfFile(FixtureSpec())),
        ("usr/lib/libc.so.6", ElfFile(FixtureSpec())),
    ))
