import logging
import sys
from pathlib import Path
from typing import Sequence

from mhrlearn.logger import mhrlearn_logger


class StringFormatter:
    @staticmethod
    def green(string: str) -> str:
        return f"\033[0;32m{string}\033[0m"

    @staticmethod
    def red(string: str) -> str:
        return f"\033[31;1m{string}\033[0m"

    @staticmethod
    def bold(string: str) -> str:
        return f"\033[1m{string}\033[0m"


def configure_logger(verbose: bool = False) -> None:
    """Attach one stdout handler to the package logger; INFO by default, DEBUG when verbose."""
    mhrlearn_logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    if any(getattr(h, "_mhrlearn_cli", False) for h in mhrlearn_logger.handlers):
        return

    ch = logging.StreamHandler(sys.stdout)
    ch.setLevel(logging.DEBUG)
    formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    ch.setFormatter(formatter)
    setattr(ch, "_mhrlearn_cli", True)
    mhrlearn_logger.addHandler(ch)


def print_header(command: str, source: str) -> None:
    header_lines = [f"mhrlearn {command}", source]
    # underline with the longest line's width
    longest_line_len = max(len(line) for line in header_lines)
    header_lines.append("-" * longest_line_len)
    header_lines[0] = StringFormatter.bold(header_lines[0])
    print("\n" + "\n".join(header_lines))


def print_outputs(paths: Sequence[Path]) -> None:
    for path in paths:
        print(f"{StringFormatter.green('wrote')} {path}")


def print_error(message: str) -> None:
    print(StringFormatter.red(f"error: {message}"), file=sys.stderr)
