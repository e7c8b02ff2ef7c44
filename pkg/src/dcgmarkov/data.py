"""Rectangular numeric datasets and their CSV round trip."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import errors


@dataclass(eq=False)
class Dataset:
    """Named columns over a rectangular float matrix, one row per draw.

    `rejected` records how many candidate draws a sampler discarded before
    filling the requested rows; it is informational and never serialized.
    """

    columns: tuple[str, ...]
    values: np.ndarray
    rejected: int = field(default=0, compare=False)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError("values must be a 2-D array with one column per name")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dataset values must be finite")
        self.values.setflags(write=False)

    def __len__(self):
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise errors.UnknownVertex(name) from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.values:
            buf.write(",".join(format(v, ".17g") for v in row) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise errors.ParseError("empty CSV")
        columns = tuple(name.strip() for name in lines[0].split(","))
        rows = []
        for ln_no, line in enumerate(lines[1:], 2):
            cells = line.split(",")
            if len(cells) != len(columns):
                raise errors.ParseError("row width does not match header", ln_no)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise errors.ParseError("non-numeric cell", ln_no) from None
        return cls(columns, np.asarray(rows, dtype=float).reshape(len(rows), len(columns)))

    @classmethod
    def read_csv(cls, path) -> "Dataset":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_csv(handle.read())
