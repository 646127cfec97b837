from .methods import (
    MethodSpec,
    UnknownMethodError,
    ViewMode,
    default_method,
    expand_methods,
    fit_method,
    method_bank,
    method_inputs,
    parse_method,
    score_method,
)
from .metrics import RankedPredictions, UndefinedAveragePrecisionError, average_precision, mean_ap
from .reports import (
    REPORT_COLUMNS,
    SummaryRow,
    format_summary,
    summarize,
    write_reports_csv,
    write_summary,
    write_tune_csv,
)
from .sweep import (
    DEFAULT_FRACTIONS,
    DEFAULT_GRID_EXPONENTS,
    TUNABLE_KEYS,
    EvalReport,
    PreparedSplit,
    SweepSettings,
    TuneResult,
    evaluate_scores,
    prepare_split,
    run_cell,
    run_sweep,
    tune_grid,
)

__all__ = [
    "MethodSpec",
    "UnknownMethodError",
    "ViewMode",
    "default_method",
    "expand_methods",
    "fit_method",
    "method_bank",
    "method_inputs",
    "parse_method",
    "score_method",
    "RankedPredictions",
    "UndefinedAveragePrecisionError",
    "average_precision",
    "mean_ap",
    "REPORT_COLUMNS",
    "SummaryRow",
    "format_summary",
    "summarize",
    "write_reports_csv",
    "write_summary",
    "write_tune_csv",
    "DEFAULT_FRACTIONS",
    "DEFAULT_GRID_EXPONENTS",
    "TUNABLE_KEYS",
    "EvalReport",
    "PreparedSplit",
    "SweepSettings",
    "TuneResult",
    "evaluate_scores",
    "prepare_split",
    "run_cell",
    "run_sweep",
    "tune_grid",
]
