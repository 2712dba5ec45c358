"""Verification records shared by the inequality and operator-norm checks."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class VerificationReport:
    """Worst margin of one inequality family at one parameter point.

    A margin is ``bound - measured`` (or the signed quantity required to be
    nonnegative), so negative values are violations. ``scaled_worst_margin``
    is the same margin divided by the density where that makes sense, which
    keeps deep-tail behaviour visible after the density underflows.
    """

    name: str
    gamma: float
    c: float
    worst_margin: float | None
    argmin_x: float | None
    scaled_worst_margin: float | None
    grid_size: int
    grid_range: tuple[float, float] | None
    passed: bool | None
    in_hypothesis: bool
    note: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("worst_margin", "argmin_x", "scaled_worst_margin"):
            v = out[key]
            if v is not None and not math.isfinite(v):
                out[key] = str(v)
        if out["grid_range"] is not None:
            out["grid_range"] = list(out["grid_range"])
        return out


def dump_reports(reports: list[VerificationReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2)
        fh.write("\n")
