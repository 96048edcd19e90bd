"""Exception types shared across the analyzer.

Every error carries a short, stable ``code`` that the CLI prints as
``error: <code>: <detail>``.
"""


class SurfaceError(Exception):
    code = "error"

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail


class ElfError(SurfaceError):
    """Base class for anything wrong with the bytes of an ELF image."""

    code = "elf-error"


class NotElf(ElfError):
    code = "not-elf"


class RootNotElf(NotElf):
    """The analysis root itself is not an ELF file."""


class Truncated(ElfError):
    code = "truncated"


class UnsupportedClass(ElfError):
    code = "unsupported-class"


class UnsupportedEndianness(ElfError):
    code = "unsupported-endianness"


class BadHeader(ElfError):
    code = "bad-header"


class NoDynamicSegment(ElfError):
    code = "no-dynamic-segment"


class UnmappedAddress(ElfError):
    code = "unmapped-address"


class StrtabUnmapped(ElfError):
    code = "strtab-unmapped"


class FileTooLarge(ElfError):
    code = "file-too-large"


class SysrootMissing(SurfaceError):
    code = "sysroot-missing"


class SpecInvalid(SurfaceError):
    code = "spec-invalid"


class DestNotEmpty(SurfaceError):
    code = "dest-not-empty"


class ReportFormatError(SurfaceError):
    """A JSON report document could not be turned back into a report."""

    code = "bad-report"
