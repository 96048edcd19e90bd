"""Static shared-object hijacking surface analysis for ELF binaries."""

from .closure import AnalysisReport, DependencyNode, analyze, analyze_path
from .elf import ElfSummary, summarize, summarize_file
from .report import Finding, FindingKind, derive_findings, parse_json, render_json, render_text
from .resolver import Resolution, resolve_needed
from .sysroot import SysrootConfig, map_to_sysroot, standard_dirs_for

__all__ = [
    "AnalysisReport",
    "DependencyNode",
    "ElfSummary",
    "Finding",
    "FindingKind",
    "Resolution",
    "SysrootConfig",
    "analyze",
    "analyze_path",
    "derive_findings",
    "map_to_sysroot",
    "parse_json",
    "render_json",
    "render_text",
    "resolve_needed",
    "standard_dirs_for",
    "summarize",
    "summarize_file",
]
