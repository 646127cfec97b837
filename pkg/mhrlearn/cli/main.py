import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from mhrlearn.cli.commands import (
    SUMMARY_FILENAME,
    StageError,
    cmd_inspect_manifold,
    cmd_predict,
    cmd_sweep,
    cmd_train,
    cmd_tune,
    stage,
)
from mhrlearn.cli.config import RunConfig, load_run_config, parse_exponents, parse_fractions
from mhrlearn.cli.utils import configure_logger, print_error, print_header, print_outputs
from mhrlearn.logger import mhrlearn_logger

logger = mhrlearn_logger.getChild(__file__)

# Options whose values may start with "-", e.g. `--grid-exp -10..10`
_NEGATIVE_VALUE_OPTIONS = ("--grid-exp",)


def _attach_option_values(argv: Sequence[str]) -> List[str]:
    attached: List[str] = []
    index = 0
    while index < len(argv):
        token = argv[index]
        if token in _NEGATIVE_VALUE_OPTIONS and index + 1 < len(argv):
            attached.append(f"{token}={argv[index + 1]}")
            index += 2
            continue
        attached.append(token)
        index += 1
    return attached


def _run_config(args: argparse.Namespace) -> RunConfig:
    with stage("config"):
        config = load_run_config(args.config)
        overrides: Dict[str, object] = {
            "out": getattr(args, "out", None),
            "seed": getattr(args, "seed", None),
            "workers": args.workers,
        }
        if getattr(args, "fractions", None) is not None:
            overrides["fractions"] = parse_fractions(args.fractions)
        if getattr(args, "repeats", None) is not None:
            overrides["repeats"] = args.repeats
        if getattr(args, "grid_exp", None) is not None:
            overrides["grid_exp"] = parse_exponents(args.grid_exp)
        return config.with_overrides(**overrides)


def _train(args: argparse.Namespace) -> List[Path]:
    return cmd_train(_run_config(args))


def _predict(args: argparse.Namespace) -> List[Path]:
    return cmd_predict(args.model, args.data, args.out)


def _sweep(args: argparse.Namespace) -> List[Path]:
    outputs = cmd_sweep(_run_config(args))
    summary = next(path for path in outputs if path.name == SUMMARY_FILENAME)
    print(summary.read_text(encoding="utf-8"))
    return outputs


def _tune(args: argparse.Namespace) -> List[Path]:
    return cmd_tune(_run_config(args))


def _inspect_manifold(args: argparse.Namespace) -> List[Path]:
    return cmd_inspect_manifold(_run_config(args))


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Output solver iterations and cache activity")
    common.add_argument("--workers", type=int, help="Worker threads for kernels, manifolds and sweep cells")

    configured = argparse.ArgumentParser(add_help=False, parents=[common])
    configured.add_argument("--config", type=Path, help="Run configuration file (INI sections)")
    configured.add_argument("--out", type=Path, help="Output directory")
    configured.add_argument("--seed", type=int, help="Base seed for label masks and splits")

    arg_parser = argparse.ArgumentParser(description="Multiview Hessian-regularized semi-supervised learning")
    subcommands = arg_parser.add_subparsers(dest="command", required=True)

    train = subcommands.add_parser("train", parents=[configured], help="Train and save one model per class")
    train.set_defaults(handler=_train)

    predict = subcommands.add_parser("predict", parents=[common], help="Score a dataset with a saved model")
    predict.add_argument("--model", type=Path, required=True, help="Model file written by train")
    predict.add_argument("--data", type=Path, required=True, help="Dataset directory")
    predict.add_argument("--out", type=Path, required=True, help="Scores CSV to write")
    predict.set_defaults(handler=_predict)

    sweep = subcommands.add_parser("sweep", parents=[configured], help="AP/mAP over label fractions and repeats")
    sweep.add_argument("--fractions", type=str, help="Comma-separated label fractions, e.g. 0.1,0.2,0.3")
    sweep.add_argument("--repeats", type=int, help="Random label masks per fraction")
    sweep.set_defaults(handler=_sweep)

    tune = subcommands.add_parser("tune", parents=[configured], help="Grid search the regularization weights")
    tune.add_argument("--grid-exp", dest="grid_exp", type=str, help="Exponent range, e.g. -10..10")
    tune.set_defaults(handler=_tune)

    inspect = subcommands.add_parser(
        "inspect-manifold", parents=[configured], help="Spectra and test-function energies of the regularizers"
    )
    inspect.set_defaults(handler=_inspect_manifold)
    return arg_parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and return the process exit code."""
    args = build_arg_parser().parse_args(_attach_option_values(list(sys.argv[1:] if argv is None else argv)))
    configure_logger(args.verbose)

    handler: Callable[[argparse.Namespace], List[Path]] = args.handler
    source = str(getattr(args, "config", None) or getattr(args, "model", None) or "default configuration")
    print_header(args.command, source)
    try:
        outputs = handler(args)
    except StageError as exc:
        logger.error(str(exc))
        print_error(str(exc))
        return 1

    print_outputs(outputs)
    return 0
