"""Per-sample diversity reports (JSON / CSV / Markdown) and summary figures."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__, svg
from .cldf import FeatureMatrix
from .distances import DistanceMatrix, RecordSource, build_matrix
from .errors import DataError, SampleError, TypdivError
from .langmeta import LanguageRecord, Registry
from .metrics import DEFAULT_COVERAGE_THRESHOLD, MetricResult, fvi_per_feature, mpd, mpsd
from .sample import Exclusion, LanguageSample
from .vectors import VectorSet

SCHEMA_VERSION = "1"
MPD_SOURCES = ("syntactic", "genetic", "geographic", "ingested")
CSV_COLUMNS = ("sample", "n_languages", "mpsd", "fvi", "mpd_genetic", "mpd_geographic", "mpd_ingested",
               "low_coverage", "excluded")
LOW_COVERAGE_MARK = "*"

TICK_COLOR = "#1b9e77"
SCATTER_COLOR = "#7570b3"
RAMP_LOW = (254, 232, 200)   # fewest papers
RAMP_HIGH = (179, 0, 0)      # most papers
MAP_RADIUS = 3.5


@dataclass(frozen=True)
class SourceResult:
    source: str
    status: str = "absent"                  # "ok", "absent" (not configured) or "error"
    value: float | None = None
    used_languages: tuple[str, ...] = ()
    excluded: tuple[Exclusion, ...] = ()
    pair_count: int | None = None
    missing_pairs: int = 0
    feature_count: int | None = None
    message: str | None = None

    @property
    def low_coverage(self) -> bool:
        return any(e.coverage is not None for e in self.excluded)


@dataclass(frozen=True)
class FeatureRow:
    feature_id: str
    covered: tuple[str, ...]
    domain_size: int
    ratio: float


@dataclass(frozen=True)
class SampleReport:
    sample: tuple[str, ...]
    label: str | None
    n_languages: int
    mpd: tuple[SourceResult, ...]
    fvi: SourceResult
    fvi_per_feature: tuple[FeatureRow, ...] | None = None
    versions: Mapping[str, str] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def source(self, name: str) -> SourceResult:
        return next(r for r in self.mpd if r.source == name)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["versions"] = dict(self.versions)
        # schema_version first for readers that sniff the header
        return {"schema_version": d.pop("schema_version"), **d}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SampleReport:
        if str(d.get("schema_version")) != SCHEMA_VERSION:
            raise DataError(f"unsupported report schema {d.get('schema_version')!r}")

        def source(s: Mapping[str, Any]) -> SourceResult:
            return SourceResult(**{**s, "used_languages": tuple(s["used_languages"]),
                                   "excluded": tuple(Exclusion(**e) for e in s["excluded"])})

        rows = d.get("fvi_per_feature")
        return cls(
            sample=tuple(d["sample"]),
            label=d["label"],
            n_languages=d["n_languages"],
            mpd=tuple(source(s) for s in d["mpd"]),
            fvi=source(d["fvi"]),
            fvi_per_feature=None if rows is None else tuple(
                FeatureRow(r["feature_id"], tuple(r["covered"]), r["domain_size"], r["ratio"]) for r in rows),
            versions=dict(d["versions"]),
            schema_version=str(d["schema_version"]),
        )


@dataclass
class ReportSources:
    """Data a report may draw on; anything left as None is reported as absent.

    ``registry`` enables the genetic and geographic distances and maps
    sample codes onto the ids each source uses (ISO 639-3 or glottocode).
    """

    registry: Registry | None = None
    syntactic_vectors: VectorSet | None = None
    syntactic_distances: DistanceMatrix | None = None
    features: FeatureMatrix | None = None
    threshold: float = DEFAULT_COVERAGE_THRESHOLD
    normalized: bool = True
    per_feature: bool = False
    versions: Mapping[str, str] = field(default_factory=dict)

    def configured(self) -> list[str]:
        names = []
        if self.syntactic_vectors is not None:
            names.append("syntactic")
        if self.registry is not None:
            names += ["genetic", "geographic"]
        if self.syntactic_distances is not None:
            names.append("ingested")
        if self.features is not None:
            names.append("fvi")
        return names


def align_ids(ids: Iterable[str], known, registry: Registry | None) -> tuple[list[str], dict[str, str]]:
    """Translate sample codes into the keys a source uses.

    Each code is tried as is, then as the ISO 639-3 code and glottocode of
    its registry record. Returns source keys (unmatched codes kept verbatim)
    and the map back to sample codes.
    """
    keys, back = [], {}
    for code in ids:
        candidates = [code]
        rec = registry.get(code) if registry is not None else None
        if rec is not None:
            candidates += [c for c in (rec.iso639_3, rec.glottocode) if c]
        key = next((c for c in candidates if c in known), code)
        if key in back:
            key = code
        keys.append(key)
        back[key] = code
    return keys, back


def source_result(source: str, result: MetricResult, back: Mapping[str, str]) -> SourceResult:
    return SourceResult(
        source=source,
        status="ok",
        value=result.value,
        used_languages=tuple(back.get(x, x) for x in result.used_languages),
        excluded=tuple(Exclusion(back.get(e.language, e.language), e.reason, e.coverage) for e in result.excluded),
        pair_count=result.pair_count,
        missing_pairs=result.missing_pairs,
        feature_count=result.feature_count,
    )


def syntactic_result(sample: LanguageSample, vs: VectorSet, dm: DistanceMatrix | None, registry: Registry | None,
                     threshold: float = DEFAULT_COVERAGE_THRESHOLD, normalized: bool = True) -> SourceResult:
    """MPSD with coverage from ``vs``; distances from ``dm`` when given, else from ``vs``."""
    keys, back = align_ids(sample, vs, registry)
    renamed = None
    if dm is not None:
        # the distance table may key languages differently from the vectors
        dkeys, _ = align_ids(sample, dm, registry)
        pairs = [(k, dk) for k, dk in zip(keys, dkeys) if dk in dm]
        sub = dm.subset([dk for _, dk in pairs])
        renamed = DistanceMatrix([k for k, _ in pairs], sub.values, sub.defined)
    res = mpsd(LanguageSample(keys, sample.label), vs, threshold, distances=renamed, normalized=normalized)
    return source_result("syntactic", res, back)


def build_report(sample: LanguageSample, sources: ReportSources) -> SampleReport:
    configured = sources.configured()
    if not configured:
        raise SampleError("no data source configured for the report")
    reg = sources.registry
    results: dict[str, SourceResult] = {}
    failures = []

    def attempt(name: str, fn) -> SourceResult:
        try:
            return fn()
        except TypdivError as exc:
            failures.append(f"{name}: {exc}")
            return SourceResult(name, status="error", message=str(exc))

    if sources.syntactic_vectors is not None:
        def run_syntactic() -> SourceResult:
            return syntactic_result(sample, sources.syntactic_vectors, sources.syntactic_distances, reg,
                                    sources.threshold, sources.normalized)

        results["syntactic"] = attempt("syntactic", run_syntactic)

    if reg is not None:
        records = {code: rec for code in sample if (rec := reg.get(code)) is not None}
        for name, make in (("genetic", RecordSource.genetic), ("geographic", RecordSource.geographic)):
            def run(make=make, name=name) -> SourceResult:
                matrix, _ = build_matrix(sample, make(records))
                return source_result(name, mpd(sample, matrix), {})
            results[name] = attempt(name, run)

    if sources.syntactic_distances is not None:
        def run_ingested() -> SourceResult:
            keys, back = align_ids(sample, sources.syntactic_distances, reg)
            return source_result("ingested", mpd(LanguageSample(keys, sample.label), sources.syntactic_distances), back)
        results["ingested"] = attempt("ingested", run_ingested)

    fvi_result = SourceResult("fvi")
    rows = None
    if sources.features is not None:
        matrix = sources.features

        def run_fvi() -> SourceResult:
            nonlocal rows
            keys, back = align_ids(sample, matrix, reg)
            per_feature, used, excluded = fvi_per_feature(LanguageSample(keys, sample.label), matrix)
            if sources.per_feature:
                rows = tuple(FeatureRow(f.feature_id, f.covered, f.domain_size, f.ratio) for f in per_feature)
            value = math.fsum(f.ratio for f in per_feature) / len(per_feature)
            res = MetricResult(value, tuple(used), tuple(excluded), feature_count=len(per_feature))
            return source_result("fvi", res, back)

        fvi_result = attempt("fvi", run_fvi)

    if len(failures) == len(configured):
        raise SampleError("every configured source failed: " + "; ".join(failures))
    versions = {"typdiv": __version__, **dict(sorted(sources.versions.items()))}
    return SampleReport(
        sample=tuple(sample),
        label=sample.label,
        n_languages=len(sample),
        mpd=tuple(results.get(name, SourceResult(name)) for name in MPD_SOURCES),
        fvi=fvi_result,
        fvi_per_feature=rows,
        versions=versions,
    )


def to_json(reports: SampleReport | Sequence[SampleReport]) -> str:
    if isinstance(reports, SampleReport):
        doc: Any = reports.to_dict()
    else:
        doc = [r.to_dict() for r in reports]
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def from_json(text: str) -> SampleReport | list[SampleReport]:
    doc = json.loads(text)
    if isinstance(doc, list):
        return [SampleReport.from_dict(d) for d in doc]
    return SampleReport.from_dict(doc)


def _num(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def to_csv(reports: Sequence[SampleReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        syn = r.source("syntactic")
        excluded = sorted({e.language for s in (*r.mpd, r.fvi) for e in s.excluded})
        writer.writerow([
            r.label or "", r.n_languages, _num(syn.value), _num(r.fvi.value),
            _num(r.source("genetic").value), _num(r.source("geographic").value),
            _num(r.source("ingested").value), int(syn.low_coverage), " ".join(excluded),
        ])
    return buf.getvalue()


def to_markdown(reports: Sequence[SampleReport]) -> str:
    """Table with one row per sample: label, number of languages, MPSD, FVI."""
    lines = ["| Sample | \\|L\\| | MPSD | FVI |", "|---|---:|---:|---:|"]
    for r in sorted(reports, key=lambda r: (-r.n_languages, r.label or "")):
        syn = r.source("syntactic")
        mpsd_value = syn.value if syn.value is not None else r.source("ingested").value
        mpsd_cell = "-" if mpsd_value is None else f"{mpsd_value:.2f}" + (LOW_COVERAGE_MARK if syn.low_coverage else "")
        fvi_cell = "-" if r.fvi.value is None else f"{r.fvi.value:.2f}"
        lines.append(f"| {r.label or ', '.join(r.sample)} | {r.n_languages} | {mpsd_cell} | {fvi_cell} |")
    if any(r.source("syntactic").low_coverage for r in reports):
        lines += ["", f"{LOW_COVERAGE_MARK} at least one language fell below the coverage threshold and was left out."]
    return "\n".join(lines) + "\n"


def render_distribution_strip(values: Sequence[float], out: str | Path | None = None, *, label: str = "",
                              width: int = 640, height: int = 160) -> str:
    """One tick per value on a [0, 1] axis, annotated with mean and population SD."""
    return render_distribution_strips({label: values}, out, width=width, row_height=height - 80)


def render_distribution_strips(series: Mapping[str, Sequence[float]], out: str | Path | None = None, *,
                               width: int = 640, row_height: int = 80) -> str:
    if not series:
        raise DataError("no distributions to draw")
    for name, values in series.items():
        if len(values) == 0:
            raise DataError(f"distribution {name!r} is empty")
        if any(not (0.0 <= v <= 1.0) for v in values):
            raise DataError(f"distribution {name!r} has values outside [0, 1]")
    rows = len(series)
    height = 80 + rows * row_height
    chart = svg.Chart(width, height, (0.0, 1.0), (0.0, float(rows)), pad=False, margin=(24, 24, 56, 120))
    chart.axes("value", None, xticks=[0.0, 0.25, 0.5, 0.75, 1.0])
    for k, (name, values) in enumerate(series.items()):
        arr = np.asarray(values, dtype=float)
        mu, sigma = float(arr.mean()), float(arr.std(ddof=0))
        y = rows - k - 0.5
        chart.raw(f'<g class="strip" id="strip-{k}">')
        for v in arr:
            chart.tick_mark(float(v), y, row_height * 0.25, TICK_COLOR)
        chart.raw("</g>")
        chart.text(8, chart.sy(y) + 4, name, cls="strip-label")
        chart.text(chart.x1, chart.sy(y) - row_height * 0.3, f"μ={mu:.2f}, σ={sigma:.2f}",
                   size=10, anchor="end", cls="stats")
    return chart.finish(out)


def render_scatter_xy(points: Sequence[tuple[float, float]], out: str | Path | None = None, *,
                      xlabel: str = "number of languages", ylabel: str = "MPSD",
                      width: int = 480, height: int = 360) -> str:
    if not points:
        raise DataError("no points to plot")
    if any(x < 0 for x, _ in points):
        raise DataError("language counts cannot be negative")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    chart = svg.Chart(width, height, (0.0, max(xs)), (min(ys), max(ys)))
    chart.axes(xlabel, ylabel)
    chart.series("points", [(x, y, f"{x:g}: {y:.2f}") for x, y in zip(xs, ys)], SCATTER_COLOR, 3.0)
    return chart.finish(out)


def ramp_color(count: int, max_count: int) -> str:
    """Linear interpolation from RAMP_LOW (0) to RAMP_HIGH (max_count)."""
    t = count / max_count if max_count > 0 else 1.0
    rgb = (round(lo + (hi - lo) * t) for lo, hi in zip(RAMP_LOW, RAMP_HIGH))
    return "#" + "".join(f"{c:02x}" for c in rgb)


def render_map(entries: Sequence[tuple[LanguageRecord, int]], out: str | Path | None = None, *,
               width: int = 720, height: int = 360) -> str:
    """Equirectangular map of languages, coloured by how many papers use them."""
    chart = svg.Chart(width, height, (-180.0, 180.0), (-90.0, 90.0), pad=False, margin=(0, 0, 0, 0))
    chart.raw(f'<rect class="ocean" x="0" y="0" width="{width}" height="{height}" fill="#eef3f8"/>')
    chart.raw('<g class="graticule" stroke="#d0d8e0" stroke-width="0.5">')
    for lon in range(-150, 180, 30):
        chart.raw(f'<line x1="{svg.fmt(chart.sx(lon))}" y1="0" x2="{svg.fmt(chart.sx(lon))}" y2="{height}"/>')
    for lat in range(-60, 90, 30):
        chart.raw(f'<line x1="0" y1="{svg.fmt(chart.sy(lat))}" x2="{width}" y2="{svg.fmt(chart.sy(lat))}"/>')
    chart.raw("</g>")
    placed = [(rec, n) for rec, n in entries if rec.has_coordinates]
    unplaced = sorted(rec.key for rec, n in entries if not rec.has_coordinates)
    max_count = max((n for _, n in placed), default=0)
    chart.raw('<g class="series" id="series-languages">')
    for rec, n in sorted(placed, key=lambda e: (e[1], e[0].glottocode)):
        chart.marker(rec.longitude, rec.latitude, MAP_RADIUS, ramp_color(n, max_count), f"{rec.name} ({n})")
    chart.raw("</g>")
    if unplaced or not placed:
        note = "no coordinates: " + (", ".join(unplaced) if unplaced else "(no languages)")
        chart.text(8, height - 8, note, size=9, cls="note")
    return chart.finish(out)
