"""Parsing and formatting helpers shared by the command line and reports."""

import math
from typing import List, Optional, Sequence

import numpy as np


def parse_vector(text: Optional[str]) -> Optional[np.ndarray]:
    """Parse a comma separated vector such as "0,0" or "1.5,-2,inf"."""
    if text is None:
        return None

    cleaned = text.strip().strip("()[]")
    if not cleaned:
        raise ValueError("Empty vector")

    try:
        return np.array([float(part) for part in cleaned.split(",")], dtype=float)
    except ValueError:
        raise ValueError(f"Cannot parse vector: {text!r}")


def parse_float_list(text: Optional[str]) -> Optional[List[float]]:
    """Parse a comma separated list of floats (radii, tau grids)."""
    vector = parse_vector(text)
    return None if vector is None else [float(v) for v in vector]


def format_float(value: float) -> str:
    """Format a float with 17 significant digits; infinities become strings."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    # -0.0 would print as "-0" and read back as the integer 0
    return "%.17g" % (value + 0.0)


def format_vector(values: Sequence[float], digits: int = 6) -> str:
    """Short human-readable rendering of a vector for log lines."""
    return "(" + ", ".join(f"{float(v):.{digits}g}" for v in values) + ")"
