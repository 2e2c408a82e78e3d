"""Dataset ingestion, standardization, seeded synthetic sampling, and report
serialization.

Synthetic sampling is reproducible across implementations: uniforms come from
numpy's PCG64 bit generator and are turned into normals by the Box-Muller
transform documented at :func:`generate_gaussian`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "StandardizationRecord",
    "SyntheticSpec",
    "InfluenceReport",
    "load_csv",
    "write_csv",
    "standardize",
    "generate_gaussian",
    "report_json_doc",
    "report_csv_rows",
    "write_report",
    "read_report",
    "STANDARDIZE_MODES",
]

STANDARDIZE_MODES = ("none", "rows", "columns")


@dataclass(frozen=True)
class StandardizationRecord:
    """How a dataset was standardized; the recorded statistics reproduce the
    transform (x - mean) / sd per row or per column."""

    mode: str
    means: Optional[np.ndarray] = None
    sds: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in STANDARDIZE_MODES:
            raise ValueError(f"mode must be one of {STANDARDIZE_MODES}, got {self.mode!r}")
        for name in ("means", "sds"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))


@dataclass(frozen=True)
class Dataset:
    """An n x p observation matrix with an optional response vector."""

    x: np.ndarray
    y: Optional[np.ndarray] = None
    meta: Optional[StandardizationRecord] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"x must be 2-D, got shape {x.shape}")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("dataset must have at least one row and one column")
        if not np.isfinite(x).all():
            bad = np.argwhere(~np.isfinite(x))[0]
            raise ValueError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "x", x)
        if self.y is not None:
            y = np.asarray(self.y, dtype=float).reshape(-1)
            if y.shape[0] != x.shape[0]:
                raise ValueError(f"response length {y.shape[0]} != row count {x.shape[0]}")
            if not np.isfinite(y).all():
                raise ValueError("non-finite value in response column")
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def load_csv(
    path,
    *,
    delimiter: str = ",",
    header: bool = False,
    response_column: Optional[str | int] = None,
) -> Dataset:
    """Load a rectangular numeric table into a Dataset.

    With ``header=True`` the first row names the columns and
    ``response_column`` may be a column name; otherwise it is a 0-based index.
    Non-numeric and non-finite cells are rejected with their (line, column)
    location, both 1-based.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r]  # drop blank lines
    if not rows:
        raise ValueError(f"{path}: empty file")

    names = None
    data_rows = rows
    first_line = 1
    if header:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_line = 2
        if not data_rows:
            raise ValueError(f"{path}: no data rows after header")

    width = len(data_rows[0])
    parsed = np.empty((len(data_rows), width), dtype=float)
    for i, row in enumerate(data_rows):
        line = first_line + i
        if len(row) != width:
            raise ValueError(f"{path}: ragged row at line {line} ({len(row)} cells, expected {width})")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell {cell!r} at line {line}, column {j + 1}"
                ) from None
            if not math.isfinite(v):
                raise ValueError(f"{path}: non-finite cell {cell!r} at line {line}, column {j + 1}")
            parsed[i, j] = v

    y = None
    if response_column is not None:
        if isinstance(response_column, str):
            if names is None:
                raise ValueError("response_column by name requires header=True")
            if response_column not in names:
                raise ValueError(f"response column {response_column!r} not in header {names}")
            ridx = names.index(response_column)
        else:
            ridx = int(response_column)
            if not 0 <= ridx < width:
                raise ValueError(f"response column index {ridx} out of range for {width} columns")
        y = parsed[:, ridx]
        parsed = np.delete(parsed, ridx, axis=1)
        if parsed.shape[1] == 0:
            raise ValueError("no predictor columns left after removing the response")

    return Dataset(x=parsed, y=y)


def write_csv(
    data: Dataset,
    path,
    *,
    delimiter: str = ",",
    header: Optional[Sequence[str]] = None,
    response_name: str = "y",
) -> None:
    """Write a Dataset as numeric CSV with round-trip-exact decimal formatting."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        if header is not None:
            names = list(header)
            if len(names) != data.p:
                raise ValueError(f"header has {len(names)} names for {data.p} columns")
            if data.y is not None:
                names = names + [response_name]
            w.writerow(names)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.x[i]]
            if data.y is not None:
                row.append(repr(float(data.y[i])))
            w.writerow(row)


def standardize(data: Dataset, mode: str) -> tuple[Dataset, StandardizationRecord]:
    """Center and scale each row or column to mean 0 and sd 1.

    Standard deviations use the 1/n convention. A zero-variance row/column is
    an error. ``mode='none'`` returns the data untouched.
    """
    if mode not in STANDARDIZE_MODES:
        raise ValueError(f"mode must be one of {STANDARDIZE_MODES}, got {mode!r}")
    if mode == "none":
        record = StandardizationRecord(mode="none")
        return Dataset(x=data.x, y=data.y, meta=record), record

    axis = 1 if mode == "rows" else 0
    means = data.x.mean(axis=axis)
    sds = data.x.std(axis=axis)
    if np.any(sds == 0):
        unit = "row" if mode == "rows" else "column"
        bad = int(np.argmax(sds == 0))
        raise ValueError(f"cannot standardize: {unit} {bad} has zero variance")
    if mode == "rows":
        x = (data.x - means[:, None]) / sds[:, None]
    else:
        x = (data.x - means[None, :]) / sds[None, :]
    record = StandardizationRecord(mode=mode, means=means, sds=sds)
    return Dataset(x=x, y=data.y, meta=record), record


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for a seeded multivariate-normal draw, with an optional
    response model y = linear.x + x.quad.x + noise_sd * g for regression
    fixtures."""

    n: int
    p: int
    mu: np.ndarray
    sigma: np.ndarray
    seed: int
    response_linear: Optional[np.ndarray] = None
    response_quad: Optional[np.ndarray] = None
    response_noise_sd: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.shape[0] != self.p or sigma.shape != (self.p, self.p):
            raise ValueError("mu/sigma shapes do not match p")
        sigma = (sigma + sigma.T) / 2.0
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise ValueError("sigma must be positive definite") from None
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        for name, shape in (("response_linear", (self.p,)), ("response_quad", (self.p, self.p))):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).reshape(shape)
                object.__setattr__(self, name, v)

    @property
    def has_response(self) -> bool:
        return (
            self.response_linear is not None
            or self.response_quad is not None
            or self.response_noise_sd > 0
        )


def _box_muller_normals(seed: int, count: int) -> np.ndarray:
    """`count` standard normals from a documented, reproducible recipe.

    Uniform stream: numpy PCG64 seeded with `seed`, 53-bit doubles in [0, 1)
    via ``Generator.random``. Draw m = ceil(count/2) pairs as an (m, 2) array
    (row-major, so the stream order is u[0,0], u[0,1], u[1,0], ...). Pair k
    yields two normals

        r = sqrt(-2 log(1 - u[k,0]))
        z[2k]   = r cos(2 pi u[k,1])
        z[2k+1] = r sin(2 pi u[k,1])

    and the first `count` values of z are returned.
    """
    m = (count + 1) // 2
    u = np.random.Generator(np.random.PCG64(seed)).random((m, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count]


def generate_gaussian(spec: SyntheticSpec) -> Dataset:
    """Sample n rows of mu + L g, with L the lower Cholesky factor of sigma.

    The normal stream is the documented Box-Muller-over-PCG64 recipe of
    :func:`_box_muller_normals`; rows consume the first n*p normals in
    row-major order, and when the spec has a noisy response the next n
    normals supply the response noise. Deterministic given the seed.
    """
    n, p = spec.n, spec.p
    need = n * p + (n if spec.response_noise_sd > 0 else 0)
    z = _box_muller_normals(spec.seed, need)
    g = z[: n * p].reshape(n, p)
    chol = np.linalg.cholesky(spec.sigma)
    x = spec.mu + g @ chol.T

    y = None
    if spec.has_response:
        y = np.zeros(n)
        if spec.response_linear is not None:
            y = y + x @ spec.response_linear
        if spec.response_quad is not None:
            y = y + np.einsum("ij,jk,ik->i", x, spec.response_quad, x)
        if spec.response_noise_sd > 0:
            y = y + spec.response_noise_sd * z[n * p :]
    return Dataset(x=x, y=y)


@dataclass(frozen=True, eq=False)
class InfluenceReport:
    """Per-observation influence values plus run bookkeeping.

    Method vectors are length n; absent methods are None. NaN marks
    observations skipped by an exact-method subset run. `spearman` is the
    rank correlation between the two methods named in `spearman_methods` and
    is None when fewer than two method columns exist.
    """

    n: int
    exact: Optional[np.ndarray] = None
    approx: Optional[np.ndarray] = None
    shortcut: Optional[np.ndarray] = None
    spearman: Optional[float] = None
    spearman_methods: Optional[tuple[str, str]] = None
    timings: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    top: Optional[dict] = None

    def __post_init__(self):
        for name in ("exact", "approx", "shortcut"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).reshape(-1)
                if v.shape[0] != self.n:
                    raise ValueError(f"{name} column has length {v.shape[0]}, expected {self.n}")
                object.__setattr__(self, name, v)

    def methods(self) -> tuple[str, ...]:
        return tuple(m for m in ("exact", "approx", "shortcut") if getattr(self, m) is not None)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InfluenceReport):
            return NotImplemented
        def _veq(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and np.array_equal(a, b, equal_nan=True)
        return (
            self.n == other.n
            and all(_veq(getattr(self, m), getattr(other, m)) for m in ("exact", "approx", "shortcut"))
            and self.spearman == other.spearman
            and self.spearman_methods == other.spearman_methods
            and self.timings == other.timings
            and self.iterations == other.iterations
            and self.config == other.config
            and self.top == other.top
        )


def _vector_to_json(v: Optional[np.ndarray]):
    if v is None:
        return None
    return [None if not math.isfinite(x) else float(x) for x in v]


def _vector_from_json(v):
    if v is None:
        return None
    return np.array([np.nan if x is None else float(x) for x in v])


def report_json_doc(report: InfluenceReport) -> dict:
    """The JSON document form of a report (spearman omitted when undefined)."""
    doc: dict = {"n": report.n, "values": {}}
    for m in ("exact", "approx", "shortcut"):
        v = getattr(report, m)
        if v is not None:
            doc["values"][m] = _vector_to_json(v)
    if report.spearman is not None:
        doc["spearman"] = float(report.spearman)
        doc["spearman_methods"] = list(report.spearman_methods)
    doc["timings"] = report.timings
    doc["iterations"] = report.iterations
    doc["config"] = report.config
    if report.top is not None:
        doc["top"] = {k: list(v) for k, v in report.top.items()}
    return doc


def report_csv_rows(report: InfluenceReport) -> list[list[str]]:
    """CSV rows (with header): one row per observation, empty cells for
    missing methods or skipped observations."""
    rows = [["index", "exact", "approx", "shortcut"]]
    for i in range(report.n):
        row = [str(i)]
        for m in ("exact", "approx", "shortcut"):
            v = getattr(report, m)
            if v is None or not math.isfinite(v[i]):
                row.append("")
            else:
                row.append(repr(float(v[i])))
        rows.append(row)
    return rows


def write_report(report: InfluenceReport, path, fmt: str = "json") -> None:
    """Serialize a report. JSON carries every field; CSV is one row per
    observation with columns index,exact,approx,shortcut (missing methods
    leave their column empty)."""
    path = Path(path)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(report_json_doc(report), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(report_csv_rows(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path) -> InfluenceReport:
    """Read back a JSON report written by :func:`write_report`."""
    with open(path) as fh:
        doc = json.load(fh)
    values = doc.get("values", {})
    sp_methods = doc.get("spearman_methods")
    top = doc.get("top")
    return InfluenceReport(
        n=int(doc["n"]),
        exact=_vector_from_json(values.get("exact")),
        approx=_vector_from_json(values.get("approx")),
        shortcut=_vector_from_json(values.get("shortcut")),
        spearman=doc.get("spearman"),
        spearman_methods=tuple(sp_methods) if sp_methods else None,
        timings=doc.get("timings", {}),
        iterations=doc.get("iterations", {}),
        config=doc.get("config", {}),
        top={k: tuple(v) for k, v in top.items()} if top else None,
    )
