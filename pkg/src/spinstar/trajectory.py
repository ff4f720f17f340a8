"""Time series container and its CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def format_float(x: float) -> str:
    """17 significant digits in scientific notation; round-trips every double."""
    return f"{float(x):.16e}"


@dataclass
class Trajectory:
    """Populations of one or more methods on a shared time grid (times in units of 1/gamma)."""

    grid: np.ndarray
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != self.grid.shape:
                raise ValueError(f"column {name!r} has shape {col.shape}, grid has {self.grid.shape}")
            self.columns[name] = col

    def add(self, name: str, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"column {name!r} does not match the grid")
        self.columns[name] = values

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def to_csv(self, time_label: str = "t_gamma") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        writer.writerow([time_label, *names])
        for i, t in enumerate(self.grid):
            writer.writerow([format_float(t), *(format_float(self.columns[n][i]) for n in names)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        data = np.array([[float(x) for x in row] for row in body]).reshape(len(body), len(header))
        return cls(data[:, 0], {name: data[:, k + 1] for k, name in enumerate(header[1:])})

    def write(self, path) -> tuple[Path, Path]:
        """Write ``path`` (CSV) and ``path`` with ``.json`` suffix (metadata)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())
        meta_path = path.with_suffix(".json")
        with open(meta_path, "w", newline="") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path, meta_path


def deviation(a, b, grid) -> dict:
    """``{"max_abs", "time_of_max"}`` of the pointwise difference of two columns."""
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    k = int(np.argmax(diff))
    return {"max_abs": float(diff[k]), "time_of_max": float(np.asarray(grid)[k])}
