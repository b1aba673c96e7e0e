"""Criterion reports and their JSON/CSV serialization."""

from __future__ import annotations

import csv
import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .points import pairs

VERDICTS = ("pass", "fail", "inconclusive")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_IO = 0, 1, 2, 3, 4


@dataclass
class CriterionReport:
    name: str
    verdict: str
    worst_margin: float
    witness: dict | None = None
    samples_used: int = 0
    elapsed_ms: float = 0.0
    details: dict = field(default_factory=dict)
    margins: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")
        self.worst_margin = float(self.worst_margin) + 0.0  # no negative zero
        if not math.isfinite(self.worst_margin):
            raise ValueError("worst_margin must be finite")
        if self.verdict == "fail" and self.witness is None:
            raise ValueError("a failing report needs a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self, include_timing: bool = True) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "samples_used": int(self.samples_used),
            "elapsed_ms": float(self.elapsed_ms) if include_timing else None,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CriterionReport":
        return cls(name=data["name"], verdict=data["verdict"], worst_margin=data["worst_margin"],
                   witness=data["witness"], samples_used=data["samples_used"],
                   elapsed_ms=data["elapsed_ms"] or 0.0, details=data.get("details", {}))


def witness(point, **context: Any) -> dict:
    """JSON-friendly witness: a point as ``[re, im]`` pairs plus context."""
    out: dict[str, Any] = {"point": pairs(point)}
    for key, val in context.items():
        out[key] = to_jsonable(val)
    return out


def to_jsonable(val: Any) -> Any:
    if isinstance(val, np.ndarray):
        if np.iscomplexobj(val):
            return pairs(val) if val.ndim == 1 else [to_jsonable(v) for v in val]
        return val.tolist()
    if isinstance(val, (np.floating, float)):
        return float(val)
    if isinstance(val, (np.integer,)):
        return int(val)
    if isinstance(val, (np.bool_,)):
        return bool(val)
    if isinstance(val, (complex, np.complexfloating)):
        return [float(val.real), float(val.imag)]
    if isinstance(val, dict):
        return {k: to_jsonable(v) for k, v in val.items()}
    if isinstance(val, (list, tuple)):
        return [to_jsonable(v) for v in val]
    return val


@contextmanager
def stopwatch():
    """Yields a one-element list that receives the elapsed milliseconds."""
    box = [0.0]
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = (time.perf_counter() - t0) * 1e3


def exit_code(reports: Iterable[CriterionReport]) -> int:
    """1 if anything failed, else 3 if anything is inconclusive, else 0."""
    verdicts = {r.verdict for r in reports}
    if "fail" in verdicts:
        return EXIT_FAIL
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def report_document(reports: Sequence[CriterionReport], config: dict | None = None,
                    include_timing: bool = False) -> dict:
    return {
        "tool_version": __version__,
        "config": to_jsonable(config or {}),
        "reports": [r.to_dict(include_timing) for r in reports],
    }


def dumps(reports: Sequence[CriterionReport], config: dict | None = None,
          include_timing: bool = False) -> str:
    doc = report_document(reports, config, include_timing)
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def emit_report(reports: Sequence[CriterionReport], fmt: str, path: str | Path,
                config: dict | None = None, include_timing: bool = False) -> None:
    """Write reports as JSON, or per-sample margins as CSV.

    Timing is left out of the JSON unless asked for, so reruns with the same
    config produce identical bytes.  Raises ``OSError`` on I/O failure.
    """
    path = Path(path)
    if fmt == "json":
        path.write_text(dumps(reports, config, include_timing))
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "sample", "margin"])
            for r in reports:
                if r.margins is None:
                    continue
                for i, m in enumerate(np.asarray(r.margins, dtype=float).ravel()):
                    w.writerow([r.name, i, repr(float(m))])
    else:
        raise ValueError(f"unknown format {fmt!r}")


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
