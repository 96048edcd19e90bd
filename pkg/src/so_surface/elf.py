"""Loader-view ELF parsing straight from file bytes.

Only the identification, the ELF header, the program header table, the
``PT_INTERP`` segment and the ``PT_DYNAMIC`` array are consulted. Section
headers are never read, so stripped and sstripped binaries parse the same
as their unstripped originals.

Strings taken from the image are decoded as UTF-8 with ``surrogateescape``
so arbitrary bytes survive unchanged and re-encode to the original bytes.
"""

from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass, field

from .errors import (
    BadHeader,
    FileTooLarge,
    NoDynamicSegment,
    NotElf,
    StrtabUnmapped,
    Truncated,
    UnmappedAddress,
    UnsupportedClass,
    UnsupportedEndianness,
)

ELF_MAGIC = b"\x7fELF"
EI_NIDENT = 16
MAX_FILE_SIZE = 1 << 30

PT_LOAD = 1
PT_DYNAMIC = 2
PT_INTERP = 3
PT_NOTE = 4

ET_EXEC = 2
ET_DYN = 3

DT_NULL = 0
DT_NEEDED = 1
DT_STRTAB = 5
DT_STRSZ = 10
DT_RPATH = 15
DT_RUNPATH = 29

_STRING_TAGS = (DT_NEEDED, DT_RPATH, DT_RUNPATH)


class ElfClass(enum.Enum):
    ELF32 = 1
    ELF64 = 2


class Endianness(enum.Enum):
    LITTLE = 1
    BIG = 2


class ObjectKind(enum.Enum):
    EXECUTABLE = "executable"
    SHARED_OBJECT = "shared-object"
    OTHER = "other"

    @classmethod
    def from_code(cls, e_type: int) -> ObjectKind:
        return {ET_EXEC: cls.EXECUTABLE, ET_DYN: cls.SHARED_OBJECT}.get(e_type, cls.OTHER)


class SegmentKind(enum.Enum):
    LOAD = "load"
    DYNAMIC = "dynamic"
    INTERP = "interp"
    NOTE = "note"
    OTHER = "other"

    @classmethod
    def from_code(cls, p_type: int) -> SegmentKind:
        return {
            PT_LOAD: cls.LOAD,
            PT_DYNAMIC: cls.DYNAMIC,
            PT_INTERP: cls.INTERP,
            PT_NOTE: cls.NOTE,
        }.get(p_type, cls.OTHER)


@dataclass(frozen=True)
class ElfIdent:
    elf_class: ElfClass
    endianness: Endianness

    @property
    def byte_order(self) -> str:
        return "<" if self.endianness is Endianness.LITTLE else ">"

    @property
    def word(self) -> str:
        """struct code for an address-sized unsigned field."""
        return "I" if self.elf_class is ElfClass.ELF32 else "Q"

    @property
    def phentsize(self) -> int:
        return 32 if self.elf_class is ElfClass.ELF32 else 56

    @property
    def dynentsize(self) -> int:
        return 8 if self.elf_class is ElfClass.ELF32 else 16


@dataclass(frozen=True)
class ElfHeader:
    ident: ElfIdent
    e_type: int
    machine: int
    phoff: int
    phentsize: int
    phnum: int

    @property
    def object_kind(self) -> ObjectKind:
        return ObjectKind.from_code(self.e_type)


@dataclass(frozen=True)
class ProgramHeader:
    p_type: int
    offset: int
    vaddr: int
    filesz: int
    memsz: int

    @property
    def kind(self) -> SegmentKind:
        return SegmentKind.from_code(self.p_type)


@dataclass(frozen=True)
class DynamicEntry:
    tag: int
    value: int


@dataclass(frozen=True)
class ParseWarning:
    """A recoverable oddity found while parsing (the image still summarizes)."""

    kind: str
    detail: str


@dataclass(frozen=True)
class ElfSummary:
    ident: ElfIdent
    machine: int
    e_type: int
    interp: str | None
    needed: tuple[str, ...]
    rpath: tuple[str, ...]
    runpath: tuple[str, ...]
    has_dynamic: bool
    warnings: tuple[ParseWarning, ...] = field(default=())

    @property
    def object_kind(self) -> ObjectKind:
        return ObjectKind.from_code(self.e_type)


def _decode(raw: bytes) -> str:
    return raw.decode("utf-8", "surrogateescape")


def _unpack(data: bytes, fmt: str, offset: int) -> tuple:
    size = struct.calcsize(fmt)
    if offset < 0 or offset + size > len(data):
        raise Truncated(f"{size} bytes at offset {offset:#x} past end of {len(data)}-byte image")
    return struct.unpack_from(fmt, data, offset)


def parse_ident(data: bytes) -> ElfIdent:
    if len(data) < 4 or data[:4] != ELF_MAGIC:
        raise NotElf("missing ELF magic")
    if len(data) < EI_NIDENT:
        raise Truncated(f"identification needs {EI_NIDENT} bytes, have {len(data)}")
    try:
        elf_class = ElfClass(data[4])
    except ValueError:
        raise UnsupportedClass(f"EI_CLASS={data[4]}") from None
    try:
        endianness = Endianness(data[5])
    except ValueError:
        raise UnsupportedEndianness(f"EI_DATA={data[5]}") from None
    return ElfIdent(elf_class, endianness)


def parse_header(data: bytes) -> ElfHeader:
    ident = parse_ident(data)
    bo, w = ident.byte_order, ident.word
    (e_type, machine) = _unpack(data, bo + "HH", 0x10)
    if ident.elf_class is ElfClass.ELF64:
        (phoff,) = _unpack(data, bo + w, 0x20)
        (phentsize, phnum) = _unpack(data, bo + "HH", 0x36)
    else:
        (phoff,) = _unpack(data, bo + w, 0x1C)
        (phentsize, phnum) = _unpack(data, bo + "HH", 0x2A)
    # relocatable objects legitimately carry e_phentsize 0 with no table
    if phnum and phentsize != ident.phentsize:
        raise BadHeader(f"e_phentsize {phentsize}, expected {ident.phentsize}")
    return ElfHeader(ident, e_type, machine, phoff, phentsize, phnum)


def parse_program_headers(data: bytes, header: ElfHeader) -> list[ProgramHeader]:
    if header.phnum == 0:
        return []
    end = header.phoff + header.phnum * header.phentsize
    if end > len(data):
        raise Truncated(f"program header table ends at {end:#x}, image is {len(data):#x} bytes")
    bo, w = header.ident.byte_order, header.ident.word
    if header.ident.elf_class is ElfClass.ELF64:
        # p_type, p_flags, p_offset, p_vaddr, p_paddr, p_filesz, p_memsz
        fmt = bo + "II" + w * 5
        pick = lambda t: (t[0], t[2], t[3], t[5], t[6])  # noqa: E731
    else:
        # p_type, p_offset, p_vaddr, p_paddr, p_filesz, p_memsz, p_flags, p_align
        fmt = bo + "I" + w * 7
        pick = lambda t: (t[0], t[1], t[2], t[4], t[5])  # noqa: E731
    headers = []
    for i in range(header.phnum):
        fields = struct.unpack_from(fmt, data, header.phoff + i * header.phentsize)
        headers.append(ProgramHeader(*pick(fields)))
    return headers


def _segment_bytes(data: bytes, ph: ProgramHeader) -> bytes:
    if ph.offset + ph.filesz > len(data):
        raise Truncated(
            f"{ph.kind.value} segment [{ph.offset:#x}, {ph.offset + ph.filesz:#x}) "
            f"outside {len(data):#x}-byte image"
        )
    return data[ph.offset:ph.offset + ph.filesz]


def _first_of(phdrs: list[ProgramHeader], kind: SegmentKind) -> ProgramHeader | None:
    return next((p for p in phdrs if p.kind is kind), None)


def extract_interp(data: bytes, phdrs: list[ProgramHeader]) -> str | None:
    """Interpreter path from the first PT_INTERP, cut at the first NUL."""
    ph = _first_of(phdrs, SegmentKind.INTERP)
    if ph is None:
        return None
    raw = _segment_bytes(data, ph)
    return _decode(raw.split(b"\0", 1)[0])


def vaddr_to_offset(phdrs: list[ProgramHeader], vaddr: int) -> int:
    for ph in phdrs:
        if ph.kind is SegmentKind.LOAD and ph.vaddr <= vaddr < ph.vaddr + ph.filesz:
            return vaddr - ph.vaddr + ph.offset
    raise UnmappedAddress(f"{vaddr:#x} is not inside any PT_LOAD segment")


def _parse_dynamic(data: bytes, phdrs: list[ProgramHeader]) -> tuple[list[DynamicEntry], bool]:
    ph = _first_of(phdrs, SegmentKind.DYNAMIC)
    if ph is None:
        raise NoDynamicSegment("no PT_DYNAMIC program header")
    raw = _segment_bytes(data, ph)
    ident = parse_ident(data)
    bo = ident.byte_order
    fmt = bo + ("iI" if ident.elf_class is ElfClass.ELF32 else "qQ")
    size = ident.dynentsize
    entries = []
    for off in range(0, len(raw) - size + 1, size):
        tag, value = struct.unpack_from(fmt, raw, off)
        if tag == DT_NULL:
            return entries, True
        entries.append(DynamicEntry(tag, value))
    return entries, False


def parse_dynamic(data: bytes, phdrs: list[ProgramHeader]) -> list[DynamicEntry]:
    """Dynamic entries of the first PT_DYNAMIC, up to (excluding) DT_NULL."""
    return _parse_dynamic(data, phdrs)[0]


def summarize(data: bytes) -> ElfSummary:
    """Extract everything the loader uses to pick shared objects.

    Raises an :class:`~so_surface.errors.ElfError` subclass for images that
    cannot be summarized at all; per-entry problems become warnings.
    """
    if len(data) > MAX_FILE_SIZE:
        raise FileTooLarge(f"{len(data)} bytes exceeds the {MAX_FILE_SIZE}-byte cap")
    header = parse_header(data)
    phdrs = parse_program_headers(data, header)
    warnings: list[ParseWarning] = []
    for kind in (SegmentKind.INTERP, SegmentKind.DYNAMIC):
        count = sum(1 for p in phdrs if p.kind is kind)
        if count > 1:
            warnings.append(ParseWarning("DuplicateSegment", f"{count} PT_{kind.name} segments; using the first"))

    interp = extract_interp(data, phdrs)
    if _first_of(phdrs, SegmentKind.DYNAMIC) is None:
        return ElfSummary(header.ident, header.machine, header.e_type, interp,
                          (), (), (), False, tuple(warnings))

    entries, terminated = _parse_dynamic(data, phdrs)
    if not terminated:
        warnings.append(ParseWarning("MissingTerminator", "dynamic array has no DT_NULL before segment end"))

    strings = {DT_NEEDED: [], DT_RPATH: [], DT_RUNPATH: []}
    string_entries = [e for e in entries if e.tag in _STRING_TAGS]
    if string_entries:
        strtab = next((e.value for e in entries if e.tag == DT_STRTAB), None)
        if strtab is None:
            raise StrtabUnmapped("string-valued dynamic entries without DT_STRTAB")
        try:
            strtab_off = vaddr_to_offset(phdrs, strtab)
        except UnmappedAddress as exc:
            raise StrtabUnmapped(f"DT_STRTAB {strtab:#x}: {exc.detail}") from None
        strsz = next((e.value for e in entries if e.tag == DT_STRSZ), None)
        if strsz is None:
            warnings.append(ParseWarning("MissingStrsz", "no DT_STRSZ; string table bounded by end of file"))
            table = data[strtab_off:]
        else:
            table = data[strtab_off:strtab_off + strsz]
            if strtab_off + strsz > len(data):
                warnings.append(ParseWarning("Truncated", "string table extends past end of file"))
        for e in string_entries:
            if e.value >= len(table):
                warnings.append(ParseWarning(
                    "OutOfRangeString", f"tag {e.tag} offset {e.value:#x} outside {len(table):#x}-byte string table"))
                continue
            end = table.find(b"\0", e.value)
            if end < 0:
                warnings.append(ParseWarning("UnterminatedString", f"tag {e.tag} offset {e.value:#x}"))
                end = len(table)
            strings[e.tag].append(_decode(table[e.value:end]))

    return ElfSummary(
        ident=header.ident,
        machine=header.machine,
        e_type=header.e_type,
        interp=interp,
        needed=tuple(strings[DT_NEEDED]),
        rpath=tuple(strings[DT_RPATH]),
        runpath=tuple(strings[DT_RUNPATH]),
        has_dynamic=True,
        warnings=tuple(warnings),
    )


def read_image(path: str | os.PathLike) -> bytes:
    """Read a file for parsing, refusing anything above the size cap."""
    with open(path, "rb") as f:
        size = os.fstat(f.fileno()).st_size
        if size > MAX_FILE_SIZE:
            raise FileTooLarge(f"{os.fsdecode(path)} is {size} bytes")
        return f.read(MAX_FILE_SIZE + 1)


def summarize_file(path: str | os.PathLike) -> ElfSummary:
    return summarize(read_image(path))
