"""Acceptance gate. Each test carries a ``criterion`` mark; a verdict line per
criterion is printed at the end of the run (see conftest.py).

Criterion 9 needs external data and is skipped unless TYPDIV_EXTERNAL_DIR
points at a directory holding ``grambank/`` (CLDF), ``papers.csv`` and
``syntactic_distances.csv`` (optionally ``syntactic.tsv`` for coverage).
"""

import itertools
import math
import os
import random
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from typdiv import pca, report, survey
from typdiv.audit import run_audit
from typdiv.cldf import FeatureMatrix, FeatureSpec, load_structure_dataset
from typdiv.cli import main
from typdiv.distances import DistanceMatrix, build_matrix, load_distance_matrix
from typdiv.errors import TypdivError
from typdiv.metrics import fvi, fvi_per_feature, mpd
from typdiv.sample import LanguageSample
from typdiv.vectors import VectorSet, load_vector_table

EXTERNAL = os.environ.get("TYPDIV_EXTERNAL_DIR")


def _groups(groups):
    scores, grouping = {}, {}
    for value, mean, count in groups:
        for i in range(count):
            scores[f"{value}-{i}"] = mean
            grouping[f"{value}-{i}"] = value
    return scores, grouping


@pytest.mark.criterion(1, "fixture distance reproduction")
def test_fixture_distance(data_dir):
    t = time.perf_counter()
    dm = load_distance_matrix(data_dir / "dist4.csv")
    value = mpd(LanguageSample(["dan", "nor"]), dm).value
    elapsed = time.perf_counter() - t
    assert value == 0.22
    assert elapsed < 1.0


@pytest.mark.criterion(2, "inflection audit, XNLI row")
def test_xnli_row():
    res = run_audit(*_groups([("Weak Pre", 71.20, 1), ("Strong Suf", 80.06, 12), ("Little Aff", 78.35, 2)]))
    assert res.overall_mean == pytest.approx(79.24, abs=0.01)
    assert res.by_feature_mean == pytest.approx(76.54, abs=0.01)
    assert res.delta == pytest.approx(-2.70, abs=0.01)
    assert res.overall_count == 15


@pytest.mark.criterion(3, "inflection audit, UD-POS row under both NA policies")
def test_udpos_na_policy():
    groups = [("Equal", 74.30, 1), ("Strong Suf", 79.75, 28), ("Weak Suf", 71.05, 2),
              ("Little Aff", 45.98, 5), (None, 84.50, 2)]
    scores, grouping = _groups(groups)
    assert run_audit(scores, grouping, "group").by_feature_mean == pytest.approx(71.12, abs=0.01)
    # hand mean of the four non-NA groups
    assert run_audit(scores, grouping, "exclude").by_feature_mean == pytest.approx(67.77, abs=0.01)


def _brute_mpd(a):
    n = len(a)
    return sum(a[i][j] for i in range(n) for j in range(n) if i != j) / (n * (n - 1))


def _brute_fvi(codes, sizes):
    return sum(len({row[j] for row in codes if row[j] >= 0}) / k for j, k in enumerate(sizes)) / len(sizes)


def _random_matrix(rng, n, f, max_values=4):
    sizes = [rng.randint(1, max_values) for _ in range(f)]
    feats = [FeatureSpec(f"F{j}", "", tuple(map(str, range(k)))) for j, k in enumerate(sizes)]
    codes = [[rng.randint(-2, k - 1) for k in sizes] for _ in range(n)]
    return FeatureMatrix([f"l{i}" for i in range(n)], feats, np.array(codes)), codes, sizes


@pytest.mark.criterion(4, "metric oracle equivalence")
def test_metric_oracles():
    rng = random.Random(2024)
    t = time.perf_counter()
    for _ in range(200):
        n = rng.randint(2, 12)
        d = rng.randint(1, 30)
        x = np.array([[rng.random() for _ in range(d)] for _ in range(n)])
        # independent pair distance: plain loops over all dims
        a = [[math.sqrt(sum((x[i, k] - x[j, k]) ** 2 for k in range(d)) / d) for j in range(n)] for i in range(n)]
        ids = [f"l{i}" for i in range(n)]
        dm = DistanceMatrix(ids, np.array(a))
        assert mpd(LanguageSample(ids), dm).value == pytest.approx(_brute_mpd(a), abs=1e-9)
        built, _ = build_matrix(ids, VectorSet(ids, [f"d{k}" for k in range(d)], x))
        assert mpd(LanguageSample(ids), built).value == pytest.approx(_brute_mpd(a), abs=1e-9)

        m, codes, sizes = _random_matrix(rng, rng.randint(1, 12), rng.randint(1, 20))
        assert fvi(LanguageSample(m.languages), m).value == pytest.approx(_brute_fvi(codes, sizes), abs=1e-9)
    assert time.perf_counter() - t < 10.0


@pytest.mark.criterion(5, "FVI properties")
def test_fvi_properties(tmp_path):
    rng = random.Random(5)
    for _ in range(100):
        m, _, _ = _random_matrix(rng, rng.randint(1, 12), rng.randint(1, 20))
        order = list(m.languages)
        rng.shuffle(order)
        values = [fvi(LanguageSample(order[:k]), m).value for k in range(1, len(order) + 1)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    # domains from observed values: the whole database attests every value
    d = tmp_path / "observed"
    d.mkdir()
    (d / "languages.csv").write_text("ID,Glottocode\n" + "".join(f"l{i},lang{i:04d}\n" for i in range(6)))
    (d / "parameters.csv").write_text("ID,Name\n" + "".join(f"F{j},f\n" for j in range(5)))
    rows = [f"l{i},F{j},{rng.choice('abc')}\n" for i in range(6) for j in range(5) if rng.random() < 0.8]
    (d / "values.csv").write_text("Language_ID,Parameter_ID,Value\n" + "".join(rows))
    m = load_structure_dataset(d)
    assert fvi(LanguageSample(m.languages), m).value == 1.0

    # two languages attest at most two of three values
    feats = [FeatureSpec("T", "", ("x", "y", "z"))]
    m3 = FeatureMatrix(["a", "b", "c"], feats, np.array([[0], [1], [2]]))
    for pair in itertools.combinations(m3.languages, 2):
        per, _, _ = fvi_per_feature(LanguageSample(pair), m3)
        assert per[0].ratio <= 2 / 3


def _vs(x):
    n, d = x.shape
    return VectorSet([f"l{i}" for i in range(n)], [f"d{j}" for j in range(d)], x)


@pytest.mark.criterion(6, "PCA checks")
def test_pca_checks():
    rng = np.random.default_rng(6)
    x = rng.random((20, 30))
    p = pca.fit(_vs(x), 10)
    assert np.max(np.abs(p.components @ p.components.T - np.eye(10))) < 1e-8
    assert np.all(np.diff(p.explained_variance_ratio) <= 0)

    t = np.linspace(0, 1, 10)
    collinear = pca.fit(_vs(np.outer(t, [0.1, 0.5, 0.9, 0.3])), 2)
    assert collinear.explained_variance_ratio[0] >= 1 - 1e-9

    small = rng.random((12, 5))
    full = pca.fit(_vs(small), 5)
    assert np.max(np.abs(pca.reconstruct(full, full.points) - small)) < 1e-6

    for seed in range(5):
        x = np.random.default_rng(100 + seed).random((20, 30))
        p = pca.fit(_vs(x), 10)
        c = x - x.mean(axis=0)
        w, v = np.linalg.eigh(c.T @ c / 19)
        w, v = w[::-1], v[:, ::-1]
        assert np.max(np.abs(p.explained_variance - w[:10])) < 1e-8
        for i in range(10):
            assert abs(abs(p.components[i] @ v[:, i]) - 1) < 1e-8


@pytest.mark.criterion(7, "Cohen's kappa")
def test_kappa():
    seq = ["a", "b", "a", "c"]
    assert survey.cohen_kappa(seq, seq) == 1.0
    a = ["y"] * 25 + ["n"] * 25
    b = ["y"] * 20 + ["n"] * 5 + ["y"] * 10 + ["n"] * 15
    assert survey.cohen_kappa(a, b) == pytest.approx(0.4, abs=1e-12)


@pytest.mark.criterion(8, "claim regex scan")
def test_claim_scan():
    for text in ("typologically and genetically diverse languages",
                 "languages of diverse typologies",
                 "diverse languages in terms of language family and morphological typology"):
        assert survey.scan_claims(survey.PaperRecord("x", abstract=text)) is not None
    assert survey.scan_claims(survey.PaperRecord("x", "Topological diversity of networks")) is None


@pytest.mark.criterion(9, "survey averages on external data (conditional)")
@pytest.mark.skipif(not EXTERNAL, reason="set TYPDIV_EXTERNAL_DIR to run against external data")
def test_external_survey(registry):
    root = Path(EXTERNAL)
    gb = load_structure_dataset(root / "grambank")
    dm = load_distance_matrix(root / "syntactic_distances.csv")
    vectors = load_vector_table(root / "syntactic.tsv") if (root / "syntactic.tsv").exists() else None
    sources = report.ReportSources(registry=registry, syntactic_vectors=vectors, syntactic_distances=dm,
                                   features=gb)
    mpsds, fvis, by_id = [], [], {}
    for rec in survey.load_papers(root / "papers.csv"):
        if rec.sample is None:
            continue
        try:
            rep = report.build_report(rec.sample, sources)
        except TypdivError:
            continue
        syn = rep.source("syntactic") if vectors is not None else rep.source("ingested")
        if syn.value is not None:
            mpsds.append(syn.value)
        if rep.fvi.value is not None:
            fvis.append(rep.fvi.value)
        by_id[rec.id.lower()] = (syn.value, rep.fvi.value)
    assert np.mean(mpsds) == pytest.approx(0.64, abs=0.02)
    assert np.mean(fvis) == pytest.approx(0.73, abs=0.02)
    mkqa = next(v for k, v in by_id.items() if "mkqa" in k)
    assert mkqa[0] == pytest.approx(0.61, abs=0.01)
    assert mkqa[1] == pytest.approx(0.89, abs=0.01)


def _run_everything(data_dir, out):
    out.mkdir()
    common = ["--grambank", str(data_dir / "gb_mini"), "--distances", str(data_dir / "dist4.csv"),
              "--vectors", str(data_dir / "syn.tsv")]
    for fmt in ("json", "csv", "md"):
        assert main(["summary", "--sample", str(data_dir / "sample4.txt"), *common, "--format", fmt,
                     "--output", str(out / f"summary.{fmt}")]) == 0
    assert main(["summary", "--papers", str(data_dir / "papers.csv"), *common, "--figures", str(out / "fig"),
                 "--output", str(out / "papers.json")]) == 0
    assert main(["pca", "--grambank", str(data_dir / "gb_mini"), "--sample", str(data_dir / "sample4.txt"),
                 "--out", str(out / "pca.svg"), "--output", str(out / "pca.json")]) == 0
    assert main(["map", "--papers", str(data_dir / "papers.csv"), "--out", str(out / "map.svg"),
                 "--output", str(out / "map.json")]) == 0
    report.render_distribution_strip([0.1, 0.5, 0.7], out / "strip.svg", label="x")
    report.render_scatter_xy([(3, 0.4), (9, 0.7)], out / "xy.svg")
    return {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


@pytest.mark.criterion(10, "determinism of summary and renderers")
def test_determinism(data_dir, tmp_path):
    # same output directory both times: some outputs echo their own paths
    out = tmp_path / "run"
    first = _run_everything(data_dir, out)
    shutil.rmtree(out)
    second = _run_everything(data_dir, out)
    assert len(first) >= 10
    assert first == second
