"""
Utilities for toolkit runs: logging, output formatting, status lines,
CSV and plot-script writers.
"""

import csv
import io
import json
import logging
import re
import time
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

from colorama import Fore, Style
from colorama import init as colorama_init

colorama_init()


def setup_logger(name: str, level: str = 'INFO') -> logging.Logger:
    """Set up a logger with consistent formatting."""
    logger = logging.getLogger(name)

    # Clear existing handlers
    logger.handlers.clear()

    log_levels = {
        'DEBUG': logging.DEBUG,
        'INFO': logging.INFO,
        'WARNING': logging.WARNING,
        'ERROR': logging.ERROR,
        'CRITICAL': logging.CRITICAL
    }
    logger.setLevel(log_levels.get(level.upper(), logging.INFO))

    handler = logging.StreamHandler()
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    return logger


def log_elapsed(label: Optional[str] = None) -> Callable:
    """
    Decorator logging start and wall time of a long computation at INFO.

    Args:
        label: Text for the log lines (default: the function name)
    """
    def decorator(func: Callable) -> Callable:
        name = label or func.__name__
        log = logging.getLogger(func.__module__)

        @wraps(func)
        def wrapper(*args, **kwargs):
            log.info(f"{name} started")
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                log.info(f"{name} finished in {time.perf_counter() - start:.2f}s")

        return wrapper
    return decorator


def format_number(value: Any) -> str:
    """Floats with 17 significant digits; everything else as ``str``."""
    if isinstance(value, float):
        return format(value, '.17g')
    return str(value)


def format_output(data: Any, output_format: str = 'table') -> str:
    """
    Format data for output in various formats.

    Args:
        data: Data to format (dict or list of dicts)
        output_format: Output format ('table', 'json', 'csv')

    Returns:
        Formatted string
    """
    if output_format == 'json':
        return json.dumps(data, indent=2, default=str)

    elif output_format == 'csv':
        if not isinstance(data, list):
            data = [data]

        if not data:
            return ""

        output = io.StringIO()
        writer = csv.DictWriter(output, fieldnames=list(data[0].keys()))
        writer.writeheader()
        for row in data:
            writer.writerow({k: format_number(v) for k, v in row.items()})
        return output.getvalue()

    elif output_format == 'table':
        return format_table(data)

    else:
        return str(data)


def format_table(data: Any) -> str:
    """Format data as a simple table."""
    if not data:
        return "No data to display"

    if isinstance(data, dict):
        lines = []
        for key, value in data.items():
            lines.append(f"{key:20} {format_cell(value)}")
        return "\n".join(lines)

    elif isinstance(data, list) and data and isinstance(data[0], dict):
        headers = list(data[0].keys())

        widths = {header: len(header) for header in headers}
        for item in data:
            for header in headers:
                widths[header] = max(widths[header], len(format_cell(item.get(header, ''))))

        header_line = " | ".join(header.ljust(widths[header]) for header in headers)
        separator = "-" * len(header_line)

        lines = [header_line, separator]
        for item in data:
            row = " | ".join(format_cell(item.get(header, '')).ljust(widths[header]) for header in headers)
            lines.append(row.rstrip())

        return "\n".join(lines)

    return str(data)


def format_cell(value: Any) -> str:
    if isinstance(value, float):
        return format(value, '.3e')
    if isinstance(value, (list, tuple)):
        return ', '.join(str(v) for v in value)
    return str(value)


def print_status(message: str, status: str = 'INFO') -> None:
    """Print colored status messages."""
    colors = {
        'SUCCESS': Fore.GREEN,
        'ERROR': Fore.RED,
        'WARNING': Fore.YELLOW,
        'INFO': Fore.BLUE,
    }
    color = colors.get(status, '')
    print(f"{color}[{status}]{Style.RESET_ALL} {message}")


def slugify(text: str) -> str:
    """Directory-safe form of a model identifier: ``kdv-mr:M=4,R=3`` -> ``kdv-mr_M4_R3``."""
    text = text.replace('=', '')
    return re.sub(r'[^A-Za-z0-9.-]+', '_', text).strip('_') or 'run'


def write_csv(path: Union[str, Path], columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    """RFC 4180 CSV with a header row; floats written with ``.17g``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path


def write_dict_csv(path: Union[str, Path], rows: List[Dict[str, Any]]) -> Path:
    columns = list(rows[0].keys()) if rows else []
    return write_csv(path, columns, [[r.get(c, '') for c in columns] for r in rows])


def write_text(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith('\n') else text + '\n', encoding='utf-8')
    return path


def gnuplot_script(
    csv_name: str,
    columns: Sequence[str],
    x: Optional[str],
    ys: Sequence[str],
    title: str,
    logscale: bool = False,
    points: bool = False,
) -> str:
    """Gnuplot script plotting columns ``ys`` against ``x`` from a CSV file.

    ``x=None`` plots against the row number.
    """
    index = {name: i + 1 for i, name in enumerate(columns)}
    index['row'] = 0
    x = x or 'row'
    missing = [c for c in [x, *ys] if c not in index]
    if missing:
        raise ValueError(f"columns not in {csv_name}: {', '.join(missing)}")
    style = 'points pt 7 ps 0.3' if points else 'lines'
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xlabel '{x}'",
        "set key outside",
    ]
    if logscale:
        lines.append('set logscale y')
    plots = [
        f"'{csv_name}' using {index[x]}:{index[y]} skip 1 with {style} title '{y}'"
        for y in ys
    ]
    lines.append('plot ' + ', \\\n     '.join(plots))
    lines.append('pause mouse close')
    return '\n'.join(lines) + '\n'
