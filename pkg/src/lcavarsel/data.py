"""Categorical dataset container, CSV ingestion and variable-role bookkeeping."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MISSING_TOKENS = frozenset({"", "NA"})


class DataError(ValueError):
    """Raised when input data violates the dataset invariants."""


@dataclass(frozen=True, eq=False)
class CategoricalDataset:
    """Integer-coded N x M matrix of categorical observations.

    Parameters
    ----------
    codes : ndarray of shape (n_rows, n_vars)
        Category codes; column ``m`` takes values in ``0 .. n_categories[m] - 1``.
    n_categories : tuple of int
        Number of categories per variable, each at least 2.
    var_names : tuple of str
        Unique variable labels.
    level_names : tuple of tuple of str
        Category labels per variable, indexed by code.
    n_dropped : int
        Rows removed at load time because of missing cells.
    """

    codes: np.ndarray
    n_categories: tuple[int, ...]
    var_names: tuple[str, ...]
    level_names: tuple[tuple[str, ...], ...]
    n_dropped: int = 0

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        if codes.ndim != 2:
            raise DataError("codes must be a 2-d array")
        n, m = codes.shape
        if n == 0:
            raise DataError("empty dataset")
        if m == 0:
            raise DataError("dataset has no variables")
        ncat = tuple(int(c) for c in self.n_categories)
        if len(ncat) != m or len(self.var_names) != m or len(self.level_names) != m:
            raise DataError("per-variable metadata does not match the number of columns")
        if any(c < 2 for c in ncat):
            raise DataError("every variable needs at least 2 categories")
        if len(set(self.var_names)) != m:
            raise DataError("variable names must be unique")
        for j, (c, levels) in enumerate(zip(ncat, self.level_names)):
            if len(levels) != c:
                raise DataError(f"variable {self.var_names[j]!r}: {len(levels)} level names for {c} categories")
        if codes.min() < 0 or np.any(codes >= np.asarray(ncat)):
            raise DataError("category code out of range")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "n_categories", ncat)
        object.__setattr__(self, "var_names", tuple(self.var_names))
        object.__setattr__(self, "level_names", tuple(tuple(lv) for lv in self.level_names))

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_vars(self) -> int:
        return self.codes.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.var_names.index(name)
        except ValueError:
            raise DataError(f"unknown variable name {name!r}") from None

    def indices_of(self, names: Sequence[str]) -> list[int]:
        return [self.index_of(n) for n in names]

    def decode(self) -> list[list[str]]:
        """Map codes back to their level strings, row by row."""
        return [
            [self.level_names[j][c] for j, c in enumerate(row)]
            for row in self.codes.tolist()
        ]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.var_names)
        writer.writerows(self.decode())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def from_codes(
    codes,
    n_categories: Sequence[int] | None = None,
    var_names: Sequence[str] | None = None,
    level_names: Sequence[Sequence[str]] | None = None,
) -> CategoricalDataset:
    """Build a dataset from an integer array, filling in default metadata.

    Category counts default to ``max code + 1`` per column (at least 2);
    level names default to ``"1" .. "C"``.
    """
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim != 2:
        raise DataError("codes must be a 2-d array")
    m = codes.shape[1]
    if n_categories is None:
        if codes.size == 0:
            raise DataError("empty dataset")
        n_categories = [max(2, int(codes[:, j].max()) + 1) for j in range(m)]
    if var_names is None:
        var_names = [f"X{j + 1}" for j in range(m)]
    if level_names is None:
        level_names = [[str(c + 1) for c in range(k)] for k in n_categories]
    return CategoricalDataset(codes, tuple(n_categories), tuple(var_names), tuple(map(tuple, level_names)))


def load_csv(path: str | Path, header: bool = True, missing_policy: str = "drop-rows") -> CategoricalDataset:
    """Read a UTF-8 CSV of categorical values.

    Levels are coded in order of first appearance. Empty cells and the
    literal ``NA`` are missing; with ``missing_policy="drop-rows"`` any row
    holding a missing cell is discarded (and counted in ``n_dropped``), with
    ``"error"`` a :class:`DataError` is raised instead.
    """
    if missing_policy not in ("drop-rows", "error"):
        raise ValueError(f"unknown missing_policy {missing_policy!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # tolerate trailing blank lines
    if header:
        if not rows:
            raise DataError(f"{path}: empty file")
        names = [s.strip() for s in rows[0]]
        rows = rows[1:]
    else:
        names = None
    if not rows:
        raise DataError(f"{path}: empty dataset")
    width = len(names) if names is not None else len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
    if names is None:
        names = [f"V{j + 1}" for j in range(width)]

    kept = []
    n_dropped = 0
    for i, r in enumerate(rows):
        if any(cell.strip() in MISSING_TOKENS for cell in r):
            if missing_policy == "error":
                raise DataError(f"{path}: missing value in row {i + 1}")
            n_dropped += 1
            continue
        kept.append([cell.strip() for cell in r])
    if n_dropped:
        warnings.warn(f"{path}: dropped {n_dropped} row(s) with missing values", stacklevel=2)
    if not kept:
        raise DataError(f"{path}: empty dataset after dropping missing rows")

    codes = np.empty((len(kept), width), dtype=np.int64)
    levels: list[tuple[str, ...]] = []
    for j in range(width):
        lookup: dict[str, int] = {}
        for i, r in enumerate(kept):
            codes[i, j] = lookup.setdefault(r[j], len(lookup))
        if len(lookup) < 2:
            raise DataError(f"{path}: constant column {names[j]!r}")
        levels.append(tuple(lookup))
    return CategoricalDataset(
        codes,
        tuple(len(lv) for lv in levels),
        tuple(names),
        tuple(levels),
        n_dropped=n_dropped,
    )


@dataclass(frozen=True)
class VariableRoles:
    """Partition of variable indices into clustering and non-clustering sets."""

    clustering: tuple[int, ...]
    other: tuple[int, ...] = field(default=())

    def __post_init__(self):
        c = tuple(sorted(int(i) for i in self.clustering))
        o = tuple(sorted(int(i) for i in self.other))
        if set(c) & set(o):
            raise ValueError("clustering and other sets overlap")
        if len(set(c)) != len(c) or len(set(o)) != len(o):
            raise ValueError("duplicate variable index in roles")
        object.__setattr__(self, "clustering", c)
        object.__setattr__(self, "other", o)

    @classmethod
    def all_clustering(cls, n_vars: int) -> "VariableRoles":
        return cls(tuple(range(n_vars)), ())

    def covers(self, n_vars: int) -> bool:
        return sorted(self.clustering + self.other) == list(range(n_vars))

    def remove(self, j: int) -> "VariableRoles":
        if j not in self.clustering:
            raise ValueError(f"{j} is not a clustering variable")
        return VariableRoles(tuple(i for i in self.clustering if i != j), self.other + (j,))

    def add(self, k: int) -> "VariableRoles":
        if k not in self.other:
            raise ValueError(f"{k} is not a non-clustering variable")
        return VariableRoles(self.clustering + (k,), tuple(i for i in self.other if i != k))

    def swap(self, out: int, into: int) -> "VariableRoles":
        """Move ``out`` from clustering to other and ``into`` the reverse way."""
        return self.remove(out).add(into)
