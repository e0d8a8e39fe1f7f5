"""Sample container, dataset file parsing, and the bundled example data."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np


class DataError(ValueError):
    """Input data could not be parsed or violates basic requirements."""


@dataclass(frozen=True)
class Sample:
    """Nonnegative exceedance observations with a provenance tag.

    provenance records how the values arose ("raw", "standardized",
    "bootstrap", ...); it never affects numerics.
    """

    values: np.ndarray
    provenance: str = "raw"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DataError("sample must be a nonempty 1-d collection")
        if not np.all(np.isfinite(v)):
            raise DataError("sample contains non-finite values")
        if np.any(v < 0.0):
            raise DataError("sample contains negative values")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def coerce(cls, x, provenance: str = "raw") -> "Sample":
        if isinstance(x, Sample):
            return x
        return cls(np.asarray(x, dtype=float), provenance)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def sorted(self) -> np.ndarray:
        return np.sort(self.values)

    def standardized(self) -> tuple["Sample", float]:
        """Divide by the sample mean; returns (scaled sample, that mean)."""
        m = self.mean
        if m <= 0.0:
            raise DataError("sample mean must be positive to standardize")
        return Sample(self.values / m, provenance="standardized"), m

    def resample(self, gen: np.random.Generator) -> "Sample":
        idx = gen.integers(0, len(self), size=len(self))
        return Sample(self.values[idx], provenance="bootstrap")


@dataclass(frozen=True)
class DatasetFile:
    """A parsed data file: newline-delimited numbers or single-column CSV."""

    path: str
    format: str
    column: str | None
    values: np.ndarray = field(repr=False)

    def sample(self) -> Sample:
        return Sample(self.values)


def _try_float(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def read_dataset(path: str, column: int | str | None = None) -> DatasetFile:
    """Parse a plain or CSV loss file into nonnegative values.

    Plain files hold one number per line; CSV files one column of numbers
    (selected by index or header name, default first). NaN or negative
    entries are rejected with their line numbers.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    is_csv = str(path).lower().endswith(".csv") or any("," in ln for ln in lines[:5])
    values: list[float] = []
    bad: list[int] = []
    col_idx = 0
    col_name = None
    start = 0
    if is_csv:
        if isinstance(column, int):
            col_idx = column
        header = [t.strip() for t in lines[0].split(",")] if lines else []
        if isinstance(column, str):
            if column not in header:
                raise DataError(f"column {column!r} not found in {path}")
            col_idx = header.index(column)
            col_name = column
            start = 1
        elif header and _try_float(header[min(col_idx, len(header) - 1)]) is None:
            start = 1  # unnamed numeric column under a header row
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        token = line.split(",")[col_idx].strip() if is_csv else line.strip()
        v = _try_float(token)
        if v is None or np.isnan(v) or v < 0.0:
            bad.append(lineno)
            continue
        values.append(v)
    if bad:
        head = ", ".join(map(str, bad[:10]))
        raise DataError(
            f"{path}: {len(bad)} unparseable/NaN/negative entries "
            f"(lines {head}{', ...' if len(bad) > 10 else ''})"
        )
    if not values:
        raise DataError(f"{path}: no parseable values")
    return DatasetFile(path=str(path), format="csv" if is_csv else "plain",
                       column=col_name, values=np.asarray(values))


def load_external_fraud() -> Sample:
    """The bundled example dataset: 40 operational-loss exceedances
    (corporate-finance business line, external-fraud event type), scaled to
    threshold zero and sample mean 100."""
    text = resources.files("ftgamma").joinpath("data/external_fraud.txt").read_text()
    vals = [float(tok) for tok in text.split()]
    return Sample(np.asarray(vals), provenance="raw")
