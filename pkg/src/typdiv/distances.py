"""Pairwise language distances and the symmetric matrix that holds them."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import DataError, SampleError
from .langmeta import LanguageRecord
from .sample import LanguageSample
from .vectors import VectorSet

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius
HALF_CIRCUMFERENCE_KM = math.pi * EARTH_RADIUS_KM
SYMMETRY_TOLERANCE = 1e-9


class DistanceMatrix:
    """Symmetric distances between languages with a mask for missing pairs.

    ``bounded`` distances must lie in [0, 1]; the raw Euclidean variant is
    only required to be non-negative.
    """

    def __init__(self, ids: Sequence[str], values: np.ndarray, defined: np.ndarray | None = None,
                 *, bounded: bool = True) -> None:
        self.ids = tuple(ids)
        n = len(self.ids)
        values = np.array(values, dtype=float, copy=True)
        defined = np.ones((n, n), dtype=bool) if defined is None else np.array(defined, dtype=bool, copy=True)
        if values.shape != (n, n) or defined.shape != (n, n):
            raise DataError(f"distance matrix must be {n}x{n}")
        if len(set(self.ids)) != n:
            raise DataError("duplicate ids in distance matrix")
        np.fill_diagonal(defined, True)
        if (np.diag(values) != 0).any():
            raise DataError("distance matrix diagonal must be zero")
        if not np.array_equal(defined, defined.T):
            raise DataError("distance matrix mask is not symmetric")
        vals = values[defined]
        if not np.all(np.isfinite(vals)) or (vals < 0).any() or (bounded and (vals > 1).any()):
            raise DataError("distances must lie in [0, 1]" if bounded else "distances must be non-negative")
        if (np.abs(values - values.T)[defined] > SYMMETRY_TOLERANCE).any():
            raise DataError("distance matrix is not symmetric")
        values[~defined] = 0.0
        values.setflags(write=False)
        defined.setflags(write=False)
        self.values = values
        self.defined = defined
        self.bounded = bounded
        self._index = {lang: i for i, lang in enumerate(self.ids)}

    def __repr__(self) -> str:
        return f"DistanceMatrix({len(self.ids)} languages)"

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, language: object) -> bool:
        return language in self._index

    def get(self, a: str, b: str) -> float | None:
        i, j = self._index[a], self._index[b]
        return float(self.values[i, j]) if self.defined[i, j] else None

    def subset(self, ids: Sequence[str]) -> DistanceMatrix:
        rows = [self._index[i] for i in ids]
        sel = np.ix_(rows, rows)
        return DistanceMatrix(ids, self.values[sel], self.defined[sel], bounded=self.bounded)


def load_distance_matrix(path: str | Path) -> DistanceMatrix:
    """Read a square CSV whose first row and column hold language ids.

    Empty cells are missing pairs. A pair given in only one triangle is
    mirrored; a pair given in both must agree within 1e-9.
    """
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read distance matrix {path}: {exc}") from exc
    with fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty distance matrix")
    col_ids = [c.strip() for c in rows[0][1:]]
    row_ids = [r[0].strip() for r in rows[1:]]
    if sorted(col_ids) != sorted(row_ids) or len(set(col_ids)) != len(col_ids):
        raise DataError(f"{path}: header row and first column must list the same unique ids")
    n = len(row_ids)
    order = {lang: k for k, lang in enumerate(row_ids)}
    perm = [order[c] for c in col_ids]
    values = np.zeros((n, n))
    given = np.zeros((n, n), dtype=bool)
    for i, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise DataError(f"{path}, line {i + 2}: expected {n + 1} cells, got {len(row)}")
        for c, cell in enumerate(row[1:]):
            cell = cell.strip()
            if not cell:
                continue
            j = perm[c]
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}, line {i + 2}: not a number: {cell!r}") from None
            if not 0.0 <= x <= 1.0:
                raise DataError(f"{path}, line {i + 2}: distance {cell} outside [0, 1]")
            if i == j and x != 0.0:
                raise DataError(f"{path}, line {i + 2}: non-zero diagonal for {row_ids[i]}")
            values[i, j] = x
            given[i, j] = True
    both = given & given.T
    diff = np.abs(values - values.T)
    if (diff[both] > SYMMETRY_TOLERANCE).any():
        i, j = np.argwhere(both & (diff > SYMMETRY_TOLERANCE))[0]
        raise DataError(f"{path}: asymmetric distance between {row_ids[i]} and {row_ids[j]}")
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    # one value per unordered pair: upper triangle wins, lower fills gaps
    sym = np.where(upper & given, values, np.where(upper, values.T, 0.0))
    sym = sym + sym.T
    defined = given | given.T
    return DistanceMatrix(row_ids, sym, defined)


def pair_distance(v_i: np.ndarray, m_i: np.ndarray, v_j: np.ndarray, m_j: np.ndarray,
                  *, normalized: bool = True) -> float | None:
    """Euclidean distance over the dimensions defined in both vectors.

    With ``normalized`` (default) the squared sum is divided by the number of
    shared dimensions, which keeps [0, 1]-valued vectors at a distance in
    [0, 1]. Returns None when no dimension is shared.
    """
    if v_i.shape != v_j.shape or m_i.shape != v_i.shape or m_j.shape != v_j.shape:
        raise ValueError("vectors must share their dimensions")
    shared = m_i & m_j
    n = int(shared.sum())
    if n == 0:
        return None
    diff = v_i[shared] - v_j[shared]
    total = float(np.dot(diff, diff))
    return math.sqrt(total / n) if normalized else math.sqrt(total)


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    a = min(1.0, max(0.0, a))
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def geo_distance(a: LanguageRecord, b: LanguageRecord) -> float | None:
    """Great-circle distance as a fraction of half the Earth's circumference."""
    if not (a.has_coordinates and b.has_coordinates):
        return None
    km = haversine_km(a.latitude, a.longitude, b.latitude, b.longitude)
    return min(1.0, km / HALF_CIRCUMFERENCE_KM)


def genetic_distance(a: LanguageRecord, b: LanguageRecord) -> float:
    """Jaccard distance between the two ancestor sets (each language included)."""
    anc_a, anc_b = set(a.lineage), set(b.lineage)
    return 1.0 - len(anc_a & anc_b) / len(anc_a | anc_b)


@dataclass(frozen=True)
class RecordSource:
    """Languages keyed by sample id, compared with a record-level distance function."""

    records: Mapping[str, LanguageRecord]
    distance: Callable[[LanguageRecord, LanguageRecord], float | None]

    @classmethod
    def geographic(cls, records: Mapping[str, LanguageRecord]) -> RecordSource:
        return cls(records, geo_distance)

    @classmethod
    def genetic(cls, records: Mapping[str, LanguageRecord]) -> RecordSource:
        return cls(records, genetic_distance)

    def __contains__(self, language: object) -> bool:
        return language in self.records


Source = Union[VectorSet, DistanceMatrix, RecordSource]


def build_matrix(sample: LanguageSample | Sequence[str], source: Source, *, normalized: bool = True,
                 strict: bool = False) -> tuple[DistanceMatrix, list[str]]:
    """Distances among the sample languages that the source knows.

    Returns the matrix and the sample languages absent from the source (a
    sample error instead when ``strict``).
    """
    ids = list(sample)
    absent = [lang for lang in ids if lang not in source]
    if absent and strict:
        raise SampleError(f"language(s) absent from distance source: {', '.join(absent)}")
    present = [lang for lang in ids if lang not in absent]
    if isinstance(source, DistanceMatrix):
        return source.subset(present), absent

    n = len(present)
    values = np.zeros((n, n))
    defined = np.eye(n, dtype=bool)
    bounded = True
    if isinstance(source, VectorSet):
        sub = source.subset(present)
        bounded = normalized
        for i in range(n):
            for j in range(i + 1, n):
                d = pair_distance(sub.values[i], sub.defined[i], sub.values[j], sub.defined[j],
                                  normalized=normalized)
                if d is not None:
                    values[i, j] = values[j, i] = d
                    defined[i, j] = defined[j, i] = True
    elif isinstance(source, RecordSource):
        recs = [source.records[lang] for lang in present]
        for i in range(n):
            for j in range(i + 1, n):
                d = source.distance(recs[i], recs[j])
                if d is not None:
                    values[i, j] = values[j, i] = d
                    defined[i, j] = defined[j, i] = True
    else:
        raise TypeError(f"unsupported distance source {type(source).__name__}")
    return DistanceMatrix(present, values, defined, bounded=bounded), absent
