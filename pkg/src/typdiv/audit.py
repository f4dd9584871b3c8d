"""Per-feature-value breakdown of benchmark scores: Overall vs By-Feature averages."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Mapping, Sequence

from .cldf import FeatureMatrix
from .errors import DataError, SampleError

NA_LABEL = "NA"
NaPolicy = Literal["group", "exclude"]
NA_POLICIES = ("group", "exclude")
DEFAULT_NA_POLICY: NaPolicy = "group"

ScoreTable = Mapping[str, float]
# language -> feature value, None meaning not available in the source database
FeatureGrouping = Mapping[str, "str | None"]


@dataclass(frozen=True)
class GroupStat:
    value: str | None
    mean: float
    count: int

    @property
    def label(self) -> str:
        return NA_LABEL if self.value is None else self.value


@dataclass(frozen=True)
class AuditResult:
    groups: tuple[GroupStat, ...]
    overall_mean: float
    overall_count: int
    by_feature_mean: float
    by_feature_count: int
    na_policy: str

    @property
    def delta(self) -> float:
        return self.by_feature_mean - self.overall_mean

    def group(self, value: str | None) -> GroupStat | None:
        return next((g for g in self.groups if g.value == value), None)


def _check_scores(scores: ScoreTable) -> None:
    for lang, score in scores.items():
        if not math.isfinite(score):
            raise DataError(f"score for {lang} is not finite")


def group_stats(scores: ScoreTable, grouping: FeatureGrouping,
                value_order: Sequence[str] | None = None) -> tuple[GroupStat, ...]:
    """Mean score and language count per feature value.

    Groups follow ``value_order`` (e.g. a feature's value domain), values not
    in it sorted after, and NA last.
    """
    _check_scores(scores)
    missing = [lang for lang in scores if lang not in grouping]
    if missing:
        raise DataError(f"no grouping value for scored language(s): {', '.join(missing)}")
    buckets: dict[str | None, list[float]] = {}
    for lang, score in scores.items():
        buckets.setdefault(grouping[lang], []).append(score)
    rank = {v: k for k, v in enumerate(value_order or ())}
    order = sorted((v for v in buckets if v is not None), key=lambda v: (rank.get(v, len(rank)), v))
    if None in buckets:
        order.append(None)
    return tuple(GroupStat(v, math.fsum(buckets[v]) / len(buckets[v]), len(buckets[v])) for v in order)


def audit_from_groups(groups: tuple[GroupStat, ...], na_policy: NaPolicy = DEFAULT_NA_POLICY) -> AuditResult:
    """Overall and By-Feature means from per-group (mean, count) pairs."""
    if na_policy not in NA_POLICIES:
        raise ValueError(f"na_policy must be one of {NA_POLICIES}, got {na_policy!r}")
    total = sum(g.count for g in groups)
    if total == 0:
        raise SampleError("no scores to audit")
    overall = math.fsum(g.mean * g.count for g in groups) / total
    counted = [g for g in groups if na_policy == "group" or g.value is not None]
    if not counted:
        raise SampleError("every scored language is NA; By-Feature mean is undefined under na_policy=exclude")
    by_feature = math.fsum(g.mean for g in counted) / len(counted)
    return AuditResult(
        groups=groups,
        overall_mean=overall,
        overall_count=total,
        by_feature_mean=by_feature,
        by_feature_count=sum(g.count for g in groups if g.value is not None),
        na_policy=na_policy,
    )


def run_audit(scores: ScoreTable, grouping: FeatureGrouping, na_policy: NaPolicy = DEFAULT_NA_POLICY,
              value_order: Sequence[str] | None = None) -> AuditResult:
    """Compare the plain mean over languages with the unweighted mean of group means.

    ``na_policy="group"`` lets NA languages form one group of their own;
    ``"exclude"`` leaves them out of the By-Feature mean (they still count
    toward the overall mean).
    """
    if not scores:
        raise SampleError("empty score table")
    groups = group_stats(scores, grouping, value_order)
    result = audit_from_groups(groups, na_policy)
    # overall mean straight from the scores, not through the group means
    overall = math.fsum(scores.values()) / len(scores)
    return AuditResult(result.groups, overall, len(scores), result.by_feature_mean,
                       result.by_feature_count, na_policy)


def grouping_from_feature(matrix: FeatureMatrix, feature_id: str, languages=None) -> dict[str, str | None]:
    """Feature value per language; missing cells and unknown languages map to None (NA).

    ``languages`` adds entries for ids not in the matrix (as NA).
    """
    if feature_id not in matrix.feature_ids:
        raise DataError(f"unknown feature id {feature_id}")
    j = matrix.feature_index(feature_id)
    domain = matrix.features[j].value_domain
    out: dict[str, str | None] = {}
    for i, lang in enumerate(matrix.languages):
        code = int(matrix.codes[i, j])
        out[lang] = domain[code] if code >= 0 else None
    for lang in languages or ():
        out.setdefault(lang, None)
    return out


def load_scores(path: str | Path) -> dict[str, float]:
    """Scores CSV with header ``language,score``."""
    rows = _read_pairs(path, "score")
    scores: dict[str, float] = {}
    for lineno, lang, cell in rows:
        try:
            scores[lang] = float(cell)
        except ValueError:
            raise DataError(f"{path}, line {lineno}: not a number: {cell!r}") from None
    _check_scores(scores)
    return scores


def load_grouping(path: str | Path) -> dict[str, str | None]:
    """Grouping CSV with header ``language,value``; the literal ``NA`` (or an empty cell) is not-available."""
    return {lang: (None if cell in ("", NA_LABEL) else cell) for _, lang, cell in _read_pairs(path, "value")}


def _read_pairs(path: str | Path, column: str) -> list[tuple[int, str, str]]:
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    out = []
    seen = set()
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "language" not in reader.fieldnames or column not in reader.fieldnames:
            raise DataError(f"{path}: header must be language,{column}")
        for row in reader:
            lang = (row["language"] or "").strip()
            if not lang:
                raise DataError(f"{path}, line {reader.line_num}: empty language id")
            if lang in seen:
                raise DataError(f"{path}, line {reader.line_num}: duplicate language {lang}")
            seen.add(lang)
            out.append((reader.line_num, lang, (row[column] or "").strip()))
    return out
