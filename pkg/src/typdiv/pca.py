"""PCA of the typological design space and sample-highlighted scatter plots."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import svg
from .errors import SampleError
from .sample import LanguageSample
from .vectors import VectorSet

logger = logging.getLogger(__name__)

BACKGROUND_COLOR = "#b8b8b8"
HIGHLIGHT_COLOR = "#d95f02"
BACKGROUND_RADIUS = 2.5
HIGHLIGHT_RADIUS = 4.5


@dataclass(frozen=True)
class Projection:
    languages: tuple[str, ...]
    dims: tuple[str, ...]
    kept_dims: tuple[int, ...]      # indices into dims that survived the all-missing filter
    means: np.ndarray               # per kept dim: imputation value and centering offset
    components: np.ndarray          # k x len(kept_dims), orthonormal rows
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    points: np.ndarray              # len(languages) x k

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def point(self, language: str) -> np.ndarray:
        return self.points[self.languages.index(language)]


def _impute(values: np.ndarray, defined: np.ndarray, means: np.ndarray) -> np.ndarray:
    return np.where(defined, values, means[None, :])


def fit(vs: VectorSet, k: int = 2) -> Projection:
    """Mean-impute missing entries, center, and keep the top-``k`` principal axes.

    Each component is flipped so its largest-magnitude entry is positive.
    """
    n, d = len(vs.languages), len(vs.dims)
    if k < 1 or k > d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    if n < k + 1:
        raise SampleError(f"need at least {k + 1} languages for {k} components, got {n}")
    counts = vs.defined.sum(axis=0)
    kept = np.flatnonzero(counts > 0)
    if len(kept) < d:
        logger.warning("dropping %d dimension(s) with no defined entries", d - len(kept))
    if len(kept) == 0:
        raise SampleError("no dimension has a defined entry")
    values, defined = vs.values[:, kept], vs.defined[:, kept]
    means = (values * defined).sum(axis=0) / counts[kept]
    centered = _impute(values, defined, means) - means[None, :]

    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variance = s**2 / (n - 1)
    total = variance.sum()
    tol = s[0] * max(centered.shape) * np.finfo(float).eps if s.size else 0.0
    rank = int((s > tol).sum())
    if rank < k:
        logger.warning("reducing k from %d to the effective rank %d", k, rank)
        k = rank
    if k == 0:
        raise SampleError("data has zero variance after imputation")
    comps = vt[:k].copy()
    lead = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(k), lead])
    comps *= signs[:, None]
    ratio = variance[:k] / total
    return Projection(
        languages=vs.languages,
        dims=vs.dims,
        kept_dims=tuple(int(i) for i in kept),
        means=means,
        components=comps,
        explained_variance=variance[:k],
        explained_variance_ratio=ratio,
        points=centered @ comps.T,
    )


def project(p: Projection, vs: VectorSet) -> np.ndarray:
    """Points for the languages of ``vs`` under the fitted imputation and centering."""
    if vs.dims != p.dims:
        raise ValueError("vector set dimensions do not match the fitted projection")
    kept = list(p.kept_dims)
    centered = _impute(vs.values[:, kept], vs.defined[:, kept], p.means) - p.means[None, :]
    return centered @ p.components.T


def reconstruct(p: Projection, points: np.ndarray) -> np.ndarray:
    """Map points back to the (imputed, uncentered) kept dimensions."""
    return points @ p.components + p.means[None, :]


def render_scatter(points: Mapping[str, Sequence[float]], highlight: LanguageSample | Iterable[str] = (),
                   out: str | Path | None = None, *, explained: Sequence[float] | None = None,
                   width: int = 640, height: int = 480, title: str = "") -> str:
    """Two-series SVG scatter: every language in grey, the highlighted sample on top."""
    if not points:
        raise SampleError("nothing to plot")
    if not isinstance(highlight, LanguageSample):
        highlight = list(highlight)
        highlight = LanguageSample(highlight) if highlight else ()
    marked = [lang for lang in highlight if lang in points]
    background = [lang for lang in points if lang not in set(marked)]
    xs = [float(points[lang][0]) for lang in points]
    ys = [float(points[lang][1]) if len(points[lang]) > 1 else 0.0 for lang in points]

    def label(i: int) -> str:
        if explained is not None and len(explained) > i:
            return f"PC{i + 1} ({100 * explained[i]:.1f}%)"
        return f"PC{i + 1}"

    chart = svg.Chart(width, height, (min(xs), max(xs)), (min(ys), max(ys)), title=title)
    chart.axes(label(0), label(1))
    chart.series("background", [(points[l][0], points[l][1] if len(points[l]) > 1 else 0.0, l)
                                for l in background], BACKGROUND_COLOR, BACKGROUND_RADIUS)
    if marked:
        chart.series("highlight", [(points[l][0], points[l][1] if len(points[l]) > 1 else 0.0, l)
                                   for l in marked], HIGHLIGHT_COLOR, HIGHLIGHT_RADIUS)
    return chart.finish(out)
