from .audit import AuditReport, TrialTrace, run_fishmonger_audit
from .hbb import (
    HbbReport,
    HyperBitBitState,
    gen_sequence,
    hbb_apply,
    hbb_estimate,
    hbb_hash,
    hbb_insert,
    ks_statistic,
    run_hbb_demo,
    simulate,
)
from .merge import load_any, merge_files, merge_sketches, save_any
from .study import (
    TrialConfig,
    TrialResult,
    log_grid,
    peak_to_trough,
    read_rows,
    results_rows,
    run_error_study,
    windowed_medians,
    write_rows,
)

__all__ = [
    "AuditReport",
    "HbbReport",
    "HyperBitBitState",
    "TrialConfig",
    "TrialResult",
    "TrialTrace",
    "gen_sequence",
    "hbb_apply",
    "hbb_estimate",
    "hbb_hash",
    "hbb_insert",
    "ks_statistic",
    "load_any",
    "log_grid",
    "merge_files",
    "merge_sketches",
    "peak_to_trough",
    "read_rows",
    "results_rows",
    "run_error_study",
    "run_fishmonger_audit",
    "run_hbb_demo",
    "save_any",
    "simulate",
    "windowed_medians",
    "write_rows",
]
