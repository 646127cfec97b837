from .commands import (
    ManifoldDiagnostics,
    StageError,
    cmd_inspect_manifold,
    cmd_predict,
    cmd_sweep,
    cmd_train,
    cmd_tune,
    load_run_dataset,
    manifold_diagnostics,
    model_inputs,
    stage,
)
from .config import (
    ConfigError,
    RunConfig,
    load_run_config,
    objective_section,
    parse_exponents,
    parse_fractions,
    parse_run_config,
)
from .main import build_arg_parser, run_cli

__all__ = [
    "ManifoldDiagnostics",
    "StageError",
    "cmd_inspect_manifold",
    "cmd_predict",
    "cmd_sweep",
    "cmd_train",
    "cmd_tune",
    "load_run_dataset",
    "manifold_diagnostics",
    "model_inputs",
    "stage",
    "ConfigError",
    "RunConfig",
    "load_run_config",
    "objective_section",
    "parse_exponents",
    "parse_fractions",
    "parse_run_config",
    "build_arg_parser",
    "run_cli",
]
