"""Real-valued language vectors with per-entry missingness."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cldf import FeatureMatrix
from .errors import DataError
from .langmeta import LanguageRecord
from .sample import Exclusion, LanguageSample

logger = logging.getLogger(__name__)

MISSING_CELL = "--"


@dataclass(frozen=True)
class Coverage:
    language: str
    defined_dims: int
    total_dims: int

    @property
    def ratio(self) -> float:
        return self.defined_dims / self.total_dims if self.total_dims else 0.0


class VectorSet:
    """Languages x labelled dimensions, values in [0, 1], plus a defined-mask.

    Undefined entries hold 0.0 in ``values``; only ``defined`` says whether
    an entry may be read.
    """

    def __init__(self, languages: Sequence[str], dims: Sequence[str], values: np.ndarray,
                 defined: np.ndarray | None = None) -> None:
        self.languages = tuple(languages)
        self.dims = tuple(dims)
        values = np.array(values, dtype=float, copy=True)
        shape = (len(self.languages), len(self.dims))
        if values.shape != shape:
            raise DataError(f"vector values have shape {values.shape}, expected {shape}")
        defined = np.ones(shape, dtype=bool) if defined is None else np.array(defined, dtype=bool, copy=True)
        if defined.shape != shape:
            raise DataError(f"vector mask has shape {defined.shape}, expected {shape}")
        if len(set(self.languages)) != len(self.languages):
            raise DataError("duplicate languages in vector set")
        if len(set(self.dims)) != len(self.dims):
            raise DataError("duplicate dimension labels in vector set")
        vals = values[defined]
        if not np.all(np.isfinite(vals)) or (vals < 0).any() or (vals > 1).any():
            raise DataError("defined vector values must lie in [0, 1]")
        values[~defined] = 0.0
        values.setflags(write=False)
        defined.setflags(write=False)
        self.values = values
        self.defined = defined
        self._index = {lang: i for i, lang in enumerate(self.languages)}

    def __repr__(self) -> str:
        return f"VectorSet({len(self.languages)} languages x {len(self.dims)} dims)"

    def __contains__(self, language: object) -> bool:
        return language in self._index

    def index(self, language: str) -> int:
        return self._index[language]

    def vector(self, language: str) -> tuple[np.ndarray, np.ndarray]:
        i = self._index[language]
        return self.values[i], self.defined[i]

    def coverage(self, language: str) -> Coverage:
        i = self._index[language]
        return Coverage(language, int(self.defined[i].sum()), len(self.dims))

    def subset(self, languages: Iterable[str]) -> VectorSet:
        rows = [self._index[lang] for lang in languages]
        return VectorSet([self.languages[r] for r in rows], self.dims, self.values[rows], self.defined[rows])


def binarize(matrix: FeatureMatrix) -> VectorSet:
    """One-hot encode every (feature, value) pair as a dimension ``FEATURE=VALUE``.

    A missing cell (either kind) masks all dimensions of its feature.
    """
    if not matrix.languages or not matrix.features:
        raise DataError("cannot binarize an empty feature matrix")
    dims: list[str] = []
    blocks_v = []
    blocks_m = []
    for j, feat in enumerate(matrix.features):
        col = matrix.codes[:, j].astype(np.int64)
        k = len(feat.value_domain)
        dims.extend(f"{feat.id}={v}" for v in feat.value_domain)
        present = col >= 0
        onehot = np.zeros((len(col), k))
        onehot[np.flatnonzero(present), col[present]] = 1.0
        blocks_v.append(onehot)
        blocks_m.append(np.repeat(present[:, None], k, axis=1))
    return VectorSet(matrix.languages, dims, np.hstack(blocks_v), np.hstack(blocks_m))


def lineage_vectors(records: Iterable[LanguageRecord], key: str = "glottocode") -> VectorSet:
    """Indicator vectors over the union of all ancestor nodes (the language itself included).

    ``key`` picks the language id used in the result: ``"glottocode"`` or
    ``"iso639_3"`` (records without one fall back to their glottocode).
    """
    records = list(records)
    nodes = sorted({node for rec in records for node in rec.lineage})
    col = {node: k for k, node in enumerate(nodes)}
    values = np.zeros((len(records), len(nodes)))
    for i, rec in enumerate(records):
        values[i, [col[n] for n in set(rec.lineage)]] = 1.0
    ids = [rec.glottocode if key == "glottocode" else rec.key for rec in records]
    return VectorSet(ids, nodes, values)


def load_vector_table(path: str | Path) -> VectorSet:
    """Read a TSV with header ``language<TAB>dim...``; ``--`` marks a missing cell."""
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read vector table {path}: {exc}") from exc
    with fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty vector table")
    header, body = rows[0], rows[1:]
    dims = [h.strip() for h in header[1:]]
    if not dims:
        raise DataError(f"{path}: no dimensions in header")
    languages = []
    values = np.zeros((len(body), len(dims)))
    defined = np.zeros((len(body), len(dims)), dtype=bool)
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != len(header):
            raise DataError(f"{path}, line {lineno}: expected {len(header)} cells, got {len(row)}")
        languages.append(row[0].strip())
        for k, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == MISSING_CELL:
                continue
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}, line {lineno}: not a number: {cell!r}") from None
            if not 0.0 <= x <= 1.0:
                raise DataError(f"{path}, line {lineno}: value {cell} outside [0, 1]")
            values[i, k] = x
            defined[i, k] = True
    if len(set(languages)) != len(languages):
        raise DataError(f"{path}: duplicate language rows")
    return VectorSet(languages, dims, values, defined)


def coverage_filter(vs: VectorSet, sample: LanguageSample,
                    threshold: float) -> tuple[list[str], list[Exclusion]]:
    """Split a sample into languages with coverage >= threshold and the rest.

    Kept languages keep sample order; the kept list may be empty.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"coverage threshold must lie in [0, 1], got {threshold}")
    kept: list[str] = []
    excluded: list[Exclusion] = []
    for lang in sample:
        if lang not in vs:
            excluded.append(Exclusion(lang, "absent"))
            continue
        cov = vs.coverage(lang)
        if cov.ratio >= threshold:
            kept.append(lang)
        else:
            excluded.append(Exclusion(lang, f"coverage {cov.ratio:.3f} below {threshold:g}", cov.ratio))
    return kept, excluded
