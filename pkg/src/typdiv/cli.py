"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 sample error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__, audit, cldf, pca, report, survey
from .distances import RecordSource, build_matrix, load_distance_matrix
from .errors import DataError, SampleError, UnknownCodeError
from .langmeta import (CodeMap, Registry, default_codemap_path, default_registry_path, load_codemap,
                       load_registry, normalize_code)
from .metrics import DEFAULT_COVERAGE_THRESHOLD, mpd
from .sample import LanguageSample, read_sample_file
from .vectors import binarize, load_vector_table

logger = logging.getLogger("typdiv")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SAMPLE = 0, 1, 2, 3
DATA_DIR_ENV = "TYPDIV_DATA_DIR"
FORMATS = ("json", "csv", "md")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    registry: Path | None = None
    codemap: Path | None = None
    grambank: Path | None = None
    vectors: Path | None = None
    distances: Path | None = None
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD
    na_policy: str = audit.DEFAULT_NA_POLICY
    strict: bool = False
    output_format: str = "json"
    output: Path | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage_threshold <= 1.0:
            raise UsageError(f"coverage threshold must lie in [0, 1], got {self.coverage_threshold}")


def _data_path(raw: str | None) -> Path | None:
    """Resolve a data path; relative paths missing from the cwd are tried under $TYPDIV_DATA_DIR."""
    if raw is None:
        return None
    path = Path(raw)
    root = os.environ.get(DATA_DIR_ENV)
    if not path.is_absolute() and not path.exists() and root and (Path(root) / path).exists():
        return Path(root) / path
    return path


def _default_file(explicit: Path | None, name: str, shipped: Path) -> Path:
    if explicit is not None:
        return explicit
    root = os.environ.get(DATA_DIR_ENV)
    if root and (Path(root) / name).is_file():
        return Path(root) / name
    return shipped


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        registry=_data_path(getattr(args, "registry", None)),
        codemap=_data_path(getattr(args, "codemap", None)),
        grambank=_data_path(getattr(args, "grambank", None)),
        vectors=_data_path(getattr(args, "vectors", None)),
        distances=_data_path(getattr(args, "distances", None)),
        coverage_threshold=getattr(args, "threshold", DEFAULT_COVERAGE_THRESHOLD),
        na_policy=getattr(args, "na_policy", audit.DEFAULT_NA_POLICY),
        strict=getattr(args, "strict", False),
        output_format=getattr(args, "format", "json"),
        output=Path(args.output) if getattr(args, "output", None) else None,
    )


class Context:
    """Lazily loaded registry and code map for one invocation."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self._registry: Registry | None = None
        self._codemap: CodeMap | None = None

    @property
    def registry(self) -> Registry:
        if self._registry is None:
            self._registry = load_registry(_default_file(self.config.registry, "registry.csv",
                                                         default_registry_path()))
        return self._registry

    @property
    def codemap(self) -> CodeMap:
        if self._codemap is None:
            self._codemap = load_codemap(_default_file(self.config.codemap, "codemap.csv",
                                                       default_codemap_path()))
        return self._codemap

    def normalize(self, codes: Sequence[str], label: str | None) -> LanguageSample:
        """Canonical, deduplicated codes; unknown or ambiguous codes fail in strict mode."""
        out: list[str] = []
        for raw in codes:
            try:
                norm = normalize_code(raw, self.codemap, self.registry)
            except UnknownCodeError as exc:
                if self.config.strict:
                    raise
                logger.warning("%s: %s (kept as is)", label or "sample", exc)
                out.append(raw.strip().lower())
                continue
            if norm.ambiguous:
                members = ", ".join(sorted(norm.members))
                if self.config.strict:
                    raise SampleError(f"{raw!r} is a macrolanguage code (members: {members})")
                logger.warning("%s: %r is a macrolanguage code (members: %s)", label or "sample", raw, members)
            out.append(norm.code)
        unique = list(dict.fromkeys(out))
        if len(unique) < len(out):
            logger.warning("%s: duplicate languages after normalization were merged", label or "sample")
        if not unique:
            raise SampleError(f"{label or 'sample'}: no languages")
        return LanguageSample(unique, label)

    def sample(self, path: Path) -> LanguageSample:
        return self.normalize(read_sample_file(path), path.stem)


def _emit(text: str, config: RunConfig) -> None:
    if config.output is None:
        sys.stdout.write(text)
    else:
        config.output.write_text(text, encoding="utf-8")


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def _dump(doc: Any) -> str:
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def _source_output(result: report.SourceResult, sample: LanguageSample, fmt: str,
                   extra: dict[str, Any] | None = None) -> str:
    if fmt == "json":
        doc = {"sample": sample.label, "n_languages": len(sample), **asdict(result), **(extra or {})}
        return _dump(doc)
    excluded = " ".join(e.language for e in result.excluded)
    value = "" if result.value is None else f"{result.value:.6f}"
    return _table(["sample", "source", "value", "n_used", "excluded"],
                  [[sample.label or "", result.source, value, len(result.used_languages), excluded]], fmt)


def cmd_mpd(args: argparse.Namespace, ctx: Context) -> int:
    config = ctx.config
    sample = ctx.sample(Path(args.sample))
    reg = ctx.registry
    if config.distances is not None:
        name, source = "ingested", load_distance_matrix(config.distances)
    elif config.vectors is not None:
        name, source = "vectors", load_vector_table(config.vectors)
    elif config.grambank is not None:
        name, source = "grambank", binarize(cldf.load_structure_dataset(config.grambank))
    elif args.genetic or args.geographic:
        records = {code: rec for code in sample if (rec := reg.get(code)) is not None}
        name = "genetic" if args.genetic else "geographic"
        source = RecordSource.genetic(records) if args.genetic else RecordSource.geographic(records)
    else:
        raise UsageError("mpd needs one of --distances, --vectors, --grambank, --genetic, --geographic")
    keys, back = report.align_ids(sample, source, reg)
    keyed = LanguageSample(keys, sample.label)
    dm, _ = build_matrix(keyed, source, normalized=not args.raw, strict=config.strict)
    result = report.source_result(name, mpd(keyed, dm), back)
    _emit(_source_output(result, sample, config.output_format), config)
    return EXIT_OK


def cmd_mpsd(args: argparse.Namespace, ctx: Context) -> int:
    config = ctx.config
    sample = ctx.sample(Path(args.sample))
    if config.vectors is None:
        raise UsageError("mpsd needs --vectors (syntactic feature table) for the coverage filter")
    vs = load_vector_table(config.vectors)
    dm = load_distance_matrix(config.distances) if config.distances else None
    result = report.syntactic_result(sample, vs, dm, ctx.registry, config.coverage_threshold, not args.raw)
    _emit(_source_output(result, sample, config.output_format, {"threshold": config.coverage_threshold}), config)
    return EXIT_OK


def cmd_fvi(args: argparse.Namespace, ctx: Context) -> int:
    config = ctx.config
    if config.grambank is None:
        raise UsageError("fvi needs --grambank")
    sample = ctx.sample(Path(args.sample))
    matrix = cldf.load_structure_dataset(config.grambank)
    rep = report.build_report(sample, report.ReportSources(registry=ctx.registry, features=matrix,
                                                           per_feature=args.per_feature))
    if rep.fvi.status != "ok":
        raise SampleError(rep.fvi.message or "FVI could not be computed")
    extra = {}
    if args.per_feature and config.output_format == "json":
        extra["per_feature"] = [asdict(r) for r in rep.fvi_per_feature or ()]
    if args.per_feature and config.output_format != "json":
        rows = [[r.feature_id, " ".join(r.covered), r.domain_size, f"{r.ratio:.6f}"]
                for r in rep.fvi_per_feature or ()]
        _emit(_table(["feature", "covered", "domain_size", "ratio"], rows, config.output_format), config)
        return EXIT_OK
    _emit(_source_output(rep.fvi, sample, config.output_format, extra), config)
    return EXIT_OK


def _report_sources(ctx: Context, args: argparse.Namespace) -> report.ReportSources:
    config = ctx.config
    versions = {}
    vectors = distances = features = None
    if config.vectors is not None:
        vectors = load_vector_table(config.vectors)
        versions["vectors"] = config.vectors.name
    if config.distances is not None:
        distances = load_distance_matrix(config.distances)
        versions["distances"] = config.distances.name
    if config.grambank is not None:
        features = cldf.load_structure_dataset(config.grambank)
        versions["grambank"] = config.grambank.resolve().name
    versions["registry"] = (config.registry.name if config.registry else "bundled")
    return report.ReportSources(
        registry=ctx.registry, syntactic_vectors=vectors, syntactic_distances=distances, features=features,
        threshold=config.coverage_threshold, normalized=not args.raw, per_feature=args.per_feature,
        versions=versions,
    )


def cmd_summary(args: argparse.Namespace, ctx: Context) -> int:
    config = ctx.config
    samples: list[LanguageSample] = [ctx.sample(Path(p)) for p in args.sample or ()]
    if args.papers:
        for rec in survey.load_papers(_data_path(args.papers)):
            if rec.sample is not None:
                samples.append(ctx.normalize(list(rec.sample), rec.id))
    if not samples:
        raise UsageError("summary needs --sample or --papers")
    sources = _report_sources(ctx, args)
    reports = []
    for s in samples:
        try:
            reports.append(report.build_report(s, sources))
        except SampleError as exc:
            if len(samples) == 1:
                raise
            logger.warning("%s: %s", s.label, exc)
    if not reports:
        raise SampleError("no sample produced a report")
    fmt = config.output_format
    if fmt == "json":
        text = report.to_json(reports[0] if len(reports) == 1 and not args.papers else reports)
    elif fmt == "csv":
        text = report.to_csv(reports)
    else:
        text = report.to_markdown(reports)
    _emit(text, config)
    if args.figures:
        _summary_figures(reports, Path(args.figures))
    return EXIT_OK


def _summary_figures(reports: list[report.SampleReport], outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    strips = {}
    for name, title in (("geographic", "geography"), ("genetic", "genealogy"), ("syntactic", "MPSD"),
                        ("ingested", "MPD (ingested)")):
        values = [r.source(name).value for r in reports if r.source(name).value is not None]
        if values:
            strips[title] = values
    fvis = [r.fvi.value for r in reports if r.fvi.value is not None]
    if fvis:
        strips["feature value inclusion"] = fvis
    if strips:
        report.render_distribution_strips(strips, outdir / "distributions.svg")
    syn = [(r.n_languages, r.source("syntactic").value if r.source("syntactic").value is not None
            else r.source("ingested").value) for r in reports]
    syn = [(n, v) for n, v in syn if v is not None]
    if syn:
        report.render_scatter_xy(syn, outdir / "mpsd_by_size.svg", ylabel="MPSD")
    fv = [(r.n_languages, r.fvi.value) for r in reports if r.fvi.value is not None]
    if fv:
        report.render_scatter_xy(fv, outdir / "fvi_by_size.svg", ylabel="feature value inclusion")


def cmd_pca(args: argparse.Namespace, ctx: Context) -> int:
    config = ctx.config
    if config.vectors is not None:
        vs = load_vector_table(config.vectors)
    elif config.grambank is not None:
        vs = binarize(cldf.load_structure_dataset(config.grambank))
    else:
        raise UsageError("pca needs --grambank or --vectors")
    proj = pca.fit(vs, args.k)
    highlight: list[str] = []
    back: dict[str, str] = {}
    if args.sample:
        sample = ctx.sample(Path(args.sample))
        keys, back = report.align_ids(sample, vs, ctx.registry)
        highlight = [k for k in keys if k in vs]
        missing = [back[k] for k in keys if k not in vs]
        if missing:
            logger.warning("not in the projected data: %s", ", ".join(missing))
    points = {lang: tuple(p[:2]) for lang, p in zip(proj.languages, proj.points)}
    pca.render_scatter(points, highlight, args.out, explained=list(proj.explained_variance_ratio),
                       width=args.width, height=args.height)
    doc = {
        "n_languages": len(proj.languages),
        "n_dims": len(proj.kept_dims),
        "k": proj.k,
        "explained_variance_ratio": [float(x) for x in proj.explained_variance_ratio],
        "highlighted": [back.get(k, k) for k in highlight],
        "figure": str(args.out),
    }
    _emit(_dump(doc), config)
    return EXIT_OK


def cmd_audit(args: argparse.Namespace, ctx: Context) -> int:
    config = ctx.config
    scores = audit.load_scores(_data_path(args.scores))
    order = None
    if args.grouping:
        grouping = audit.load_grouping(_data_path(args.grouping))
    elif args.wals and args.feature:
        matrix = cldf.load_structure_dataset(_data_path(args.wals))
        keys, back = report.align_ids(list(scores), matrix, ctx.registry)
        by_key = audit.grouping_from_feature(matrix, args.feature, keys)
        grouping = {back[k]: by_key[k] for k in keys}
        order = matrix.features[matrix.feature_index(args.feature)].value_domain
    else:
        raise UsageError("audit needs --grouping, or --wals together with --feature")
    result = audit.run_audit(scores, grouping, config.na_policy, order)
    label = args.label or Path(args.scores).stem
    fmt = config.output_format
    if fmt == "json":
        doc = {
            "label": label,
            "na_policy": result.na_policy,
            "overall": {"mean": result.overall_mean, "count": result.overall_count},
            "by_feature": {"mean": result.by_feature_mean, "count": result.by_feature_count},
            "delta": result.delta,
            "groups": [{"value": g.label, "mean": g.mean, "count": g.count} for g in result.groups],
        }
        _emit(_dump(doc), config)
        return EXIT_OK
    header = ["Subtask", "Overall", "By F", "Δ"] + [g.label for g in result.groups]
    row = [label, f"{result.overall_mean:.2f} ({result.overall_count})",
           f"{result.by_feature_mean:.2f} ({result.by_feature_count})", f"{result.delta:+.2f}"]
    row += [f"{g.mean:.2f} ({g.count})" for g in result.groups]
    text = _table(header, [row], fmt)
    if fmt == "md":
        text += f"\nNA policy: {result.na_policy}\n"
    _emit(text, config)
    return EXIT_OK


def cmd_scan(args: argparse.Namespace, ctx: Context) -> int:
    papers = survey.load_papers(_data_path(args.papers))
    rows = []
    for rec in papers:
        m = survey.scan_claims(rec)
        rows.append({"id": rec.id, "matched": m is not None, "field": m.field if m else None,
                     "match": m.text if m else None})
    if args.matched_only:
        rows = [r for r in rows if r["matched"]]
    fmt = ctx.config.output_format
    if fmt == "json":
        _emit(_dump(rows), ctx.config)
    else:
        _emit(_table(["id", "matched", "field", "match"],
                     [[r["id"], int(r["matched"]), r["field"] or "", r["match"] or ""] for r in rows], fmt),
              ctx.config)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace, ctx: Context) -> int:
    doc: dict[str, Any] = {}
    if args.kappa:
        a, b = (survey.read_labels(_data_path(p)) for p in args.kappa)
        doc["cohen_kappa"] = survey.cohen_kappa(a, b)
    if args.papers:
        papers = survey.load_papers(_data_path(args.papers))
        papers = [survey.PaperRecord(p.id, p.title, p.abstract,
                                     ctx.normalize(list(p.sample), p.id) if p.sample else None) for p in papers]
        sizes = [len(p.sample) for p in papers if p.sample is not None]
        if not sizes:
            raise SampleError("no paper lists any language")
        doc["papers_with_languages"] = len(sizes)
        doc["sample_size"] = asdict(survey.sample_size_stats(sizes))
        counts = survey.usage_counts(papers)
        doc["usage_counts"] = dict(list(counts.items())[: args.top] if args.top else counts.items())
    if not doc:
        raise UsageError("stats needs --papers and/or --kappa")
    fmt = ctx.config.output_format
    if fmt == "json":
        _emit(_dump(doc), ctx.config)
    else:
        rows = []
        if "cohen_kappa" in doc:
            rows.append(["cohen_kappa", f"{doc['cohen_kappa']:.6f}"])
        for k, v in doc.get("sample_size", {}).items():
            rows.append([f"sample_size_{k}", f"{v:g}"])
        for lang, n in doc.get("usage_counts", {}).items():
            rows.append([f"usage_{lang}", n])
        _emit(_table(["statistic", "value"], rows, fmt), ctx.config)
    return EXIT_OK


def cmd_map(args: argparse.Namespace, ctx: Context) -> int:
    papers = survey.load_papers(_data_path(args.papers))
    papers = [survey.PaperRecord(p.id, p.title, p.abstract,
                                 ctx.normalize(list(p.sample), p.id) if p.sample else None) for p in papers]
    counts = survey.usage_counts(papers)
    entries, unknown = [], []
    for code, n in counts.items():
        rec = ctx.registry.get(code)
        if rec is None:
            unknown.append(code)
        else:
            entries.append((rec, n))
    if unknown:
        logger.warning("not in the registry, left off the map: %s", ", ".join(unknown))
    report.render_map(entries, args.out, width=args.width, height=args.height)
    _emit(_dump({"languages": len(entries), "unmapped": unknown, "figure": str(args.out)}), ctx.config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="typdiv", description="Typological diversity of language samples.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    common = _Parser(add_help=False)
    common.add_argument("--registry", help="language registry CSV (default: bundled fixture registry)")
    common.add_argument("--codemap", help="ISO code map CSV (default: bundled)")
    common.add_argument("--strict", action="store_true", help="unknown or macrolanguage codes are errors")
    common.add_argument("--format", choices=FORMATS, default="json", help="output format (default: json)")
    common.add_argument("-o", "--output", help="write output here instead of stdout")

    def sub(name: str, help_: str) -> argparse.ArgumentParser:
        return subs.add_parser(name, help=help_, parents=[common], description=help_)

    subs = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub("mpd", "mean pairwise distance of a sample")
    p.add_argument("--sample", required=True, help="sample file, one code per line")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--distances", help="precomputed distance matrix CSV")
    src.add_argument("--vectors", help="vector table TSV")
    src.add_argument("--grambank", help="CLDF StructureDataset directory (binarized)")
    src.add_argument("--genetic", action="store_true", help="lineage (Jaccard) distance from the registry")
    src.add_argument("--geographic", action="store_true", help="great-circle distance from the registry")
    p.add_argument("--raw", action="store_true", help="unnormalized Euclidean distance over shared dims")
    p.set_defaults(func=cmd_mpd)

    p = sub("mpsd", "mean pairwise syntactic distance with coverage filter")
    p.add_argument("--sample", required=True)
    p.add_argument("--vectors", help="syntactic vector table TSV (coverage and, by default, distances)")
    p.add_argument("--distances", help="precomputed syntactic distance CSV to use instead of the vectors")
    p.add_argument("--threshold", type=float, default=DEFAULT_COVERAGE_THRESHOLD,
                   help="minimum vector coverage (default: 0.05)")
    p.add_argument("--raw", action="store_true")
    p.set_defaults(func=cmd_mpsd)

    p = sub("fvi", "feature value inclusion of a sample")
    p.add_argument("--sample", required=True)
    p.add_argument("--grambank", help="CLDF StructureDataset directory")
    p.add_argument("--per-feature", action="store_true", help="itemize inclusion per feature")
    p.set_defaults(func=cmd_fvi)

    p = sub("summary", "full diversity report for one or more samples")
    p.add_argument("--sample", action="append", help="sample file (repeatable)")
    p.add_argument("--papers", help="papers CSV; one report per paper with languages")
    p.add_argument("--vectors", help="syntactic vector table TSV")
    p.add_argument("--distances", help="precomputed syntactic distance CSV")
    p.add_argument("--grambank", help="CLDF StructureDataset directory for FVI")
    p.add_argument("--threshold", type=float, default=DEFAULT_COVERAGE_THRESHOLD)
    p.add_argument("--per-feature", action="store_true")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--figures", help="directory for distribution and size-vs-diversity SVGs")
    p.set_defaults(func=cmd_summary)

    p = sub("pca", "PCA scatter of the feature space with a highlighted sample")
    p.add_argument("--grambank")
    p.add_argument("--vectors")
    p.add_argument("--sample", help="languages to highlight")
    p.add_argument("--out", required=True, help="SVG output path")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.set_defaults(func=cmd_pca)

    p = sub("audit", "Overall vs By-Feature score averages")
    p.add_argument("--scores", required=True, help="CSV language,score")
    p.add_argument("--grouping", help="CSV language,value (NA allowed)")
    p.add_argument("--wals", help="CLDF dataset to group by instead of --grouping")
    p.add_argument("--feature", help="feature id in --wals, e.g. 26A")
    p.add_argument("--na-policy", choices=audit.NA_POLICIES, default=audit.DEFAULT_NA_POLICY)
    p.add_argument("--label", help="row label (default: scores file name)")
    p.set_defaults(func=cmd_audit)

    p = sub("scan", "search titles/abstracts for typological-diversity claims")
    p.add_argument("--papers", required=True)
    p.add_argument("--matched-only", action="store_true")
    p.set_defaults(func=cmd_scan)

    p = sub("stats", "sample-size statistics, language usage, annotator agreement")
    p.add_argument("--papers")
    p.add_argument("--kappa", nargs=2, metavar=("A", "B"), help="two label files, one label per line")
    p.add_argument("--top", type=int, default=0, help="only the N most used languages")
    p.set_defaults(func=cmd_stats)

    p = sub("map", "map of languages coloured by number of papers")
    p.add_argument("--papers", required=True)
    p.add_argument("--out", required=True, help="SVG output path")
    p.add_argument("--width", type=int, default=720)
    p.add_argument("--height", type=int, default=360)
    p.set_defaults(func=cmd_map)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="typdiv: %(levelname)s: %(message)s", stream=sys.stderr, force=True)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, Context(_config(args)))
    except UsageError as exc:
        print(f"typdiv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"typdiv: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SampleError as exc:
        print(f"typdiv: sample error: {exc}", file=sys.stderr)
        return EXIT_SAMPLE
    except OSError as exc:
        print(f"typdiv: io error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
