import pytest

from so_surface.elf import summarize
from so_surface.errors import DestNotEmpty, SpecInvalid
from so_surface.fixtures import (
    Dir,
    ElfFile,
    FixtureSpec,
    Malformation,
    RawBytes,
    Symlink,
    SysrootSpec,
    build_elf,
    build_sysroot,
    illustrative_sysroot,
)


def test_build_elf_is_pure():
    spec = FixtureSpec(needed=("a", "b"), runpath="$ORIGIN/lib")
    assert build_elf(spec) == build_elf(spec)


def test_no_section_headers():
    image = build_elf(FixtureSpec(needed=("a",)))
    # e_shoff and e_shnum are zero
    assert image[0x28:0x30] == bytes(8)
    assert image[0x3C:0x3E] == bytes(2)


def test_empty_spec():
    s = summarize(build_elf(FixtureSpec()))
    assert s.needed == () and s.rpath == () and s.runpath == () and s.has_dynamic


@pytest.mark.parametrize("spec", [
    FixtureSpec(needed=("a\0b",)),
    FixtureSpec(machine=0x10000),
    FixtureSpec(malformations=frozenset({Malformation.DUPLICATE_INTERP})),
    FixtureSpec(malformations=frozenset({Malformation.OUT_OF_RANGE_STR_OFFSET})),
    FixtureSpec(static=True, needed=("a",)),
    FixtureSpec(strtab_vaddr_bias=-1),
])
def test_invalid_specs(spec):
    with pytest.raises(SpecInvalid):
        build_elf(spec)


def test_malformations_are_isolated():
    base = FixtureSpec(interp="/ld.so", needed=("a", "b"), runpath="/r")
    clean = build_elf(base)
    for m in Malformation:
        bad = build_elf(FixtureSpec(interp="/ld.so", needed=("a", "b"), runpath="/r", malformations=frozenset({m})))
        assert bad != clean


def test_build_sysroot_manifest(tmp_path):
    spec = SysrootSpec((
        ("usr/lib/libc.so.6", ElfFile(FixtureSpec())),
        ("usr/lib/libc.so", Symlink("libc.so.6")),
        ("etc", Dir()),
        ("usr/lib/notes.txt", RawBytes(b"hi")),
    ))
    created = build_sysroot(spec, tmp_path / "r")
    rel = [p.relative_to(tmp_path / "r").as_posix() for p in created]
    assert rel == ["usr", "usr/lib", "usr/lib/libc.so.6", "usr/lib/libc.so", "etc", "usr/lib/notes.txt"]
    assert (tmp_path / "r/usr/lib/libc.so").is_symlink()


def test_build_sysroot_empty(tmp_path):
    assert build_sysroot(SysrootSpec(), tmp_path / "e") == []


def test_build_sysroot_idempotent_into_fresh_dirs(tmp_path):
    a = build_sysroot(illustrative_sysroot(), tmp_path / "a")
    b = build_sysroot(illustrative_sysroot(), tmp_path / "b")
    assert [p.relative_to(tmp_path / "a") for p in a] == [p.relative_to(tmp_path / "b") for p in b]
    for pa, pb in zip(a, b):
        if pa.is_file():
            assert pa.read_bytes() == pb.read_bytes()


def test_build_sysroot_requires_empty_dest(tmp_path):
    (tmp_path / "junk").write_text("x")
    with pytest.raises(DestNotEmpty):
        build_sysroot(SysrootSpec(), tmp_path)


@pytest.mark.parametrize("rel", ["/abs", "../up", "a/../../b", ""])
def test_build_sysroot_rejects_escaping_paths(tmp_path, rel):
    with pytest.raises(SpecInvalid):
        build_sysroot(SysrootSpec(((rel, Dir()),)), tmp_path / "x")


def test_symlink_fixture_may_point_outside(tmp_path):
    # confinement tests need hostile links; only the link location is checked
    created = build_sysroot(SysrootSpec((("lib/evil.so", Symlink("../../etc/passwd")),)), tmp_path / "s")
    assert created[-1].is_symlink()
