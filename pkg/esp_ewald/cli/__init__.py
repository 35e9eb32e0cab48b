"""CLI module."""
from .commands import RunConfig, bandlimit_comparison, cmd_bench, cmd_check, cmd_eval, cmd_table
from .report import BenchReport, CheckReport, FamilyBench, grid_ratio, timing_summary
