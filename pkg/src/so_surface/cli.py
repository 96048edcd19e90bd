"""``so-surface``: analyze one ELF root and write its hijack-surface report."""

from __future__ import annotations

import argparse
import sys

from .closure import DEFAULT_MAX_DEPTH, analyze_path
from .errors import SurfaceError
from .report import derive_findings, escape, render_json, render_text


def _depth(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="so-surface",
        description="Statically report where a shared object could gain resolution precedence "
                    "for an ELF binary and its dependencies. Nothing is executed.",
    )
    p.add_argument("input", help="ELF executable or shared object to analyze")
    p.add_argument("--sysroot", default="/", help="directory treated as the target filesystem root (default: /)")
    p.add_argument("--max-depth", type=_depth, default=DEFAULT_MAX_DEPTH,
                   help=f"dependency levels to expand (default: {DEFAULT_MAX_DEPTH})")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--style", choices=("box", "indent"), default="box", help="text tree drawing style")
    p.add_argument("-o", "--output", help="write the report here instead of standard output")
    return p


def _error(code: str, detail: str) -> int:
    print(f"error: {code}: {escape(detail)}", file=sys.stderr)
    return 1


def run(args: argparse.Namespace) -> int:
    try:
        report = analyze_path(args.input, args.sysroot, args.max_depth)
    except SurfaceError as exc:
        return _error(exc.code, exc.detail)
    except OSError as exc:
        return _error("io", f"{exc.filename or args.input}: {exc.strerror or exc}")

    findings = derive_findings(report)
    for w in report.warnings:
        print(f"warning: {w.kind}: {' > '.join(map(escape, w.node_path))}: {escape(w.detail)}", file=sys.stderr)

    if args.format == "json":
        payload = render_json(report, findings)
    else:
        payload = render_text(report, findings, args.style).encode("utf-8")
    try:
        if args.output:
            with open(args.output, "wb") as f:
                f.write(payload)
        else:
            sys.stdout.buffer.write(payload)
            sys.stdout.flush()
    except OSError as exc:
        return _error("io", f"{exc.filename or args.output}: {exc.strerror or exc}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
