from .experiments import (
    EXPERIMENTS,
    check_inequalities,
    recheck,
    run_asclt,
    run_blocks,
    run_covariance,
    run_rate,
    run_slln,
)
from .report import ExperimentReport, Row, Verdict, export_csv, load, persist, report_hash

check_covariance = run_covariance
check_blocks = run_blocks
