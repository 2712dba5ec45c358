"""Loading and checking user-supplied discrete laws and numeric lists."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import HypothesisError
from .zerobias import DiscreteDist

MEAN_TOL = 1e-12


def load_discrete_law(path) -> DiscreteDist:
    """Read ``atom,prob`` rows (an optional header line is skipped).

    Repeated atoms are merged. The law must be symmetric about 0, which also
    forces a zero mean; both are checked and reported separately.
    """
    rows: list[tuple[float, float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise HypothesisError(f"{path}:{lineno}: expected 'atom,prob', got {row!r}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise HypothesisError(f"{path}:{lineno}: not numeric: {row!r}") from None
    if not rows:
        raise HypothesisError(f"{path}: no atoms")
    atoms, probs = np.array(rows).T
    if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(probs)):
        raise HypothesisError(f"{path}: non-finite entries")
    uniq, inverse = np.unique(atoms, return_inverse=True)
    merged = np.zeros_like(uniq)
    np.add.at(merged, inverse, probs)
    return validate_discrete_law(uniq, merged, source=str(path))


def validate_discrete_law(atoms, probs, source: str = "law") -> DiscreteDist:
    atoms = np.asarray(atoms, dtype=float)
    probs = np.asarray(probs, dtype=float)
    mean = math.fsum(atoms * probs)
    scale = max(1.0, float(np.max(np.abs(atoms))))
    if abs(mean) > MEAN_TOL * scale:
        raise HypothesisError(f"{source}: mean is {mean!r}, not 0")
    try:
        return DiscreteDist(atoms, probs)
    except HypothesisError as exc:
        raise HypothesisError(f"{source}: {exc}") from None


def parse_float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def parse_int_list(text: str) -> list[int]:
    out = []
    for t in text.split(","):
        if not t.strip():
            continue
        v = float(t)
        if v != int(v) or v < 1:
            raise HypothesisError(f"not a positive integer: {t!r}")
        out.append(int(v))
    return out


def parse_grid(text: str) -> np.ndarray:
    """``LO:HI:N`` into ``N`` equally spaced points."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like LO:HI:N, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if not (hi > lo and n >= 2):
        raise ValueError("grid needs HI > LO and N >= 2")
    return np.linspace(lo, hi, n)


def ensure_parent(path) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True)
    return p
