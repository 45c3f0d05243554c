"""The row-oriented result record shared by every convergence study."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

__all__ = ["ConvergenceReport", "CSV_HEADER"]

CSV_HEADER = ("parameter", "measured", "reference", "residual")


@dataclass(frozen=True)
class ConvergenceReport:
    """Rows of ``(parameter, measured, reference, residual)`` plus string metadata.

    ``residual`` is always ``|measured - reference|``; use
    :meth:`from_measurements` to have it filled in. Studies that emit several
    row kinds per parameter interleave them and name the kinds, in order, in
    ``metadata["row_order"]``.
    """

    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float).reshape(-1, 4).copy()
        if not np.array_equal(rows[:, 3], np.abs(rows[:, 1] - rows[:, 2])):
            raise ArgumentError("residual column must equal |measured - reference|")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in self.metadata.items()})

    @classmethod
    def from_measurements(cls, parameters, measured, reference, metadata=None) -> ConvergenceReport:
        p = np.asarray(parameters, dtype=float)
        m = np.asarray(measured, dtype=float)
        r = np.broadcast_to(np.asarray(reference, dtype=float), m.shape)
        rows = np.column_stack([p, m, r, np.abs(m - r)]) if p.size else np.empty((0, 4))
        return cls(rows, dict(metadata or {}))

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def parameters(self) -> np.ndarray:
        return self.rows[:, 0]

    @property
    def measured(self) -> np.ndarray:
        return self.rows[:, 1]

    @property
    def reference(self) -> np.ndarray:
        return self.rows[:, 2]

    @property
    def residuals(self) -> np.ndarray:
        return self.rows[:, 3]

    @property
    def final_residual(self) -> float:
        return float(self.rows[-1, 3]) if len(self) else float("nan")

    def kinds(self) -> list[str]:
        order = self.metadata.get("row_order", "")
        return [k for k in order.split(",") if k]

    def select(self, kind: str) -> ConvergenceReport:
        """Sub-report with only the rows of one kind named in ``row_order``."""
        kinds = self.kinds()
        if kind not in kinds:
            raise ArgumentError(f"unknown row kind {kind!r}; report has {kinds}")
        sub = self.rows[kinds.index(kind):: len(kinds)]
        meta = dict(self.metadata)
        meta["row_order"] = kind
        return ConvergenceReport(sub, meta)

    def is_monotone(self, slack: float = 0.1, increasing: bool = False, column: int = 3) -> bool:
        """True if the column never moves the wrong way by more than ``slack`` (relative)."""
        v = self.rows[:, column]
        if increasing:
            return bool(np.all(v[1:] >= v[:-1] * (1.0 - slack)))
        return bool(np.all(v[1:] <= v[:-1] * (1.0 + slack) + 0.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"metadata": dict(sorted(self.metadata.items())),
               "rows": [[float(v) for v in row] for row in self.rows]}
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ConvergenceReport:
        doc = json.loads(text)
        return cls(np.asarray(doc["rows"], dtype=float).reshape(-1, 4), doc.get("metadata", {}))

    @classmethod
    def from_csv(cls, text: str, metadata=None) -> ConvergenceReport:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ArgumentError(f"unexpected CSV header {header}")
        rows = [[float(v) for v in line] for line in reader if line]
        return cls(np.asarray(rows, dtype=float).reshape(-1, 4), metadata or {})
