"""Mean pairwise distance (MPD/MPSD) and feature value inclusion (FVI)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cldf import FeatureMatrix
from .distances import DistanceMatrix, build_matrix
from .errors import DataError, SampleError
from .sample import Exclusion, LanguageSample
from .vectors import VectorSet, coverage_filter

DEFAULT_COVERAGE_THRESHOLD = 0.05

__all__ = [
    "DEFAULT_COVERAGE_THRESHOLD",
    "Exclusion",
    "FeatureInclusion",
    "LanguageSample",
    "MetricResult",
    "fvi",
    "fvi_per_feature",
    "mpd",
    "mpsd",
]


@dataclass(frozen=True)
class MetricResult:
    value: float
    used_languages: tuple[str, ...]
    excluded: tuple[Exclusion, ...] = ()
    pair_count: int | None = None
    missing_pairs: int = 0
    feature_count: int | None = None

    @property
    def excluded_languages(self) -> tuple[str, ...]:
        return tuple(e.language for e in self.excluded)


@dataclass(frozen=True)
class FeatureInclusion:
    feature_id: str
    covered: tuple[str, ...] = field(default=())
    domain_size: int = 0

    @property
    def ratio(self) -> float:
        return len(self.covered) / self.domain_size


def _describe(excluded: Sequence[Exclusion]) -> str:
    if not excluded:
        return "no exclusions"
    return "excluded: " + ", ".join(f"{e.language} ({e.reason})" for e in excluded)


def mpd(sample: LanguageSample, dm: DistanceMatrix,
        excluded: Sequence[Exclusion] = ()) -> MetricResult:
    """Mean distance over all unordered pairs of sample languages.

    Languages missing from ``dm`` are excluded; pairs without a distance are
    dropped and counted in ``missing_pairs``. ``excluded`` carries exclusions
    made upstream (they must not be in ``sample``).
    """
    excluded = list(excluded)
    used = []
    for lang in sample:
        if lang in dm:
            used.append(lang)
        else:
            excluded.append(Exclusion(lang, "absent"))
    if len(used) < 2:
        raise SampleError(f"need at least 2 usable languages, got {len(used)}; {_describe(excluded)}")
    idx = [dm.ids.index(lang) for lang in used]
    sel = np.ix_(idx, idx)
    values, defined = dm.values[sel], dm.defined[sel]
    upper = np.triu(np.ones(defined.shape, dtype=bool), 1)
    pairs = values[upper & defined]
    n_total = int(upper.sum())
    if pairs.size == 0:
        raise SampleError(f"no language pair has a defined distance; {_describe(excluded)}")
    return MetricResult(
        value=float(pairs.sum() / pairs.size),
        used_languages=tuple(used),
        excluded=tuple(excluded),
        pair_count=int(pairs.size),
        missing_pairs=n_total - int(pairs.size),
    )


def mpsd(sample: LanguageSample, vs: VectorSet, threshold: float = DEFAULT_COVERAGE_THRESHOLD,
         *, distances: DistanceMatrix | None = None, normalized: bool = True) -> MetricResult:
    """Coverage filter on ``vs``, then MPD over the kept languages.

    Distances come from ``distances`` when given (precomputed syntactic
    distances), else from the vectors themselves.
    """
    kept, excluded = coverage_filter(vs, sample, threshold)
    if len(kept) < 2:
        raise SampleError(f"need at least 2 usable languages, got {len(kept)}; {_describe(excluded)}")
    if distances is None:
        dm, _ = build_matrix(kept, vs, normalized=normalized)
    else:
        dm = distances
    return mpd(LanguageSample(kept, sample.label), dm, excluded)


def fvi_per_feature(sample: LanguageSample, matrix: FeatureMatrix) -> tuple[list[FeatureInclusion], list[str],
                                                                             list[Exclusion]]:
    """Per feature, the distinct non-missing values the sample attests.

    Returns (per-feature inclusion, used languages, exclusions).
    """
    if not matrix.features:
        raise DataError("feature matrix has no features")
    used = [lang for lang in sample if lang in matrix]
    excluded = [Exclusion(lang, "absent") for lang in sample if lang not in matrix]
    if not used:
        raise SampleError(f"no sample language is in the feature matrix; {_describe(excluded)}")
    rows = matrix.codes[[matrix.language_index(lang) for lang in used]]
    out = []
    for j, feat in enumerate(matrix.features):
        attested = np.unique(rows[:, j])
        attested = attested[attested >= 0]
        out.append(FeatureInclusion(feat.id, tuple(feat.value_domain[k] for k in attested),
                                    len(feat.value_domain)))
    return out, used, excluded


def fvi(sample: LanguageSample, matrix: FeatureMatrix) -> MetricResult:
    """Mean over features of (distinct attested values / domain size)."""
    per_feature, used, excluded = fvi_per_feature(sample, matrix)
    value = sum(f.ratio for f in per_feature) / len(per_feature)
    return MetricResult(value=value, used_languages=tuple(used), excluded=tuple(excluded),
                        feature_count=len(per_feature))
