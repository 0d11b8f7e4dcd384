import os
import csv
import json
import logging
import math
import sys
from typing import Dict, List, Optional

LOGGER_NAME = "oppcost"


class OppcostError(Exception):
    """Base class for every error raised by the analyses."""


class InputError(OppcostError, ValueError):
    """Malformed input or invalid parameters (CLI exit code 2)."""


class GraphParseError(InputError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class InstanceTooLargeError(InputError):
    pass


class UnsupportedConfigurationError(InputError):
    pass


class InfeasibleError(OppcostError, RuntimeError):
    """The instance is well formed but the requested answer does not exist (exit code 3)."""


class NoPathError(InfeasibleError):
    pass


class DisconnectedGraphError(InfeasibleError):
    def __init__(self, u: str, v: str):
        self.u = u
        self.v = v
        super().__init__(f"graph is disconnected: no path between {u} and {v}")


class GreedyStuckError(InfeasibleError):
    def __init__(self, partial_path: List[str], target: str):
        self.partial_path = list(partial_path)
        self.target = target
        super().__init__(
            f"greedy got stuck at {partial_path[-1]} before reaching {target} "
            f"(partial path {'-'.join(partial_path)})"
        )


class GridConfigurationError(InfeasibleError):
    pass


class ConvergenceError(InfeasibleError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"value function iteration did not converge after {iterations} "
            f"iterations (last residual {residual:.3e})"
        )


class SimulationRangeError(InfeasibleError):
    pass


def create_logger(output_dir: Optional[str] = None, name: str = LOGGER_NAME, level: int = logging.INFO):
    """
    Creates a logger that prints to stderr and, when output_dir is given,
    also writes to output_dir/oppcost.log
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False  # prevent double logging

    formatter = logging.Formatter(
        "[%(asctime)s] [%(levelname)s] %(message)s",
        "%Y-%m-%d %H:%M:%S"
    )

    # rebind the console to the current stderr on every call
    for handler in [h for h in logger.handlers if type(h) is logging.StreamHandler]:
        logger.removeHandler(handler)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        log_path = os.path.abspath(os.path.join(output_dir, "oppcost.log"))
        has_file = any(
            isinstance(h, logging.FileHandler) and h.baseFilename == log_path
            for h in logger.handlers
        )
        if not has_file:
            file_handler = logging.FileHandler(log_path)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    for handler in logger.handlers:
        handler.setLevel(level)

    return logger


def get_logger(logger=None):
    return logger if logger is not None else logging.getLogger(LOGGER_NAME)


def format_number(value, digits: int = 6) -> str:
    """Text-mode rendering: integers stay integers, everything else gets 6 significant digits."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.{digits}g}"


def to_jsonable(value):
    """Full precision; non-finite floats become strings so the output stays valid JSON."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):  # numpy scalars
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "-inf" if value < 0 else ("inf" if value > 0 else "nan")
    return value


def dump_json(payload: Dict) -> str:
    return json.dumps(to_jsonable(payload), indent=2, allow_nan=False)


def save_rows_to_csv(rows: List[Dict], csv_path: str, fieldnames: Optional[List[str]] = None) -> None:
    """
    Write a list of row dictionaries to a CSV file, header first.

    Args:
        rows (list): One dictionary per row.
        csv_path (str): Full path to output CSV file.
        fieldnames (list): Column order; defaults to the keys of the first row.
    """
    directory = os.path.dirname(csv_path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []

    with open(csv_path, mode="w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
