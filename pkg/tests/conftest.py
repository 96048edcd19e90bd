import contextlib
import os
import sys
from pathlib import Path

import pytest

from so_surface.fixtures import ILLUSTRATIVE_ROOT, build_sysroot, illustrative_sysroot

DATA = Path(__file__).parent / "data"


@pytest.fixture
def illustrative(tmp_path):
    """Materialized worked-example sysroot; yields (sysroot, root binary)."""
    root = tmp_path / "rootfs"
    build_sysroot(illustrative_sysroot(), root)
    return root, root / ILLUSTRATIVE_ROOT


# -- side-effect monitoring ----------------------------------------------

_SPAWN_EVENTS = {
    "subprocess.Popen", "os.system", "os.exec", "os.posix_spawn", "os.spawn",
    "os.fork", "os.forkpty", "pty.spawn",
}
_WRITE_EVENTS = {
    "os.mkdir", "os.rename", "os.remove", "os.rmdir", "os.symlink", "os.link",
    "os.truncate", "os.chmod", "os.chown", "os.utime", "shutil.rmtree", "shutil.copyfile",
}
_monitor = {"active": False, "events": []}


def _audit(event, args):
    if not _monitor["active"]:
        return
    if event in _SPAWN_EVENTS or event in _WRITE_EVENTS:
        _monitor["events"].append((event, args))
    elif event == "open":
        path, mode, flags = args
        writing = (isinstance(mode, str) and any(c in mode for c in "wax+")) or (
            isinstance(flags, int) and flags & (os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND))
        if writing:
            _monitor["events"].append((event, args))


sys.addaudithook(_audit)


@pytest.fixture
def side_effects():
    """Context manager recording process spawns and filesystem writes."""

    @contextlib.contextmanager
    def watch():
        events = []
        _monitor.update(active=True, events=events)
        try:
            yield events
        finally:
            _monitor["active"] = False

    return watch


# -- acceptance summary ----------------------------------------------------

_acceptance = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark:
            item.user_properties.append(("acceptance", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "acceptance" not in props:
        return
    if report.when == "call" or report.outcome != "passed":
        number, title = props["acceptance"]
        prev = _acceptance.get(number, (title, "PASS"))
        status = prev[1] if report.passed else "FAIL"
        _acceptance[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, status = _acceptance[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
