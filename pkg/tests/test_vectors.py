import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from typdiv.cldf import load_structure_dataset
from typdiv.errors import DataError
from typdiv.sample import LanguageSample
from typdiv.vectors import VectorSet, binarize, coverage_filter, lineage_vectors, load_vector_table

from strategies import feature_matrices


@given(feature_matrices())
def test_binarize_one_hot_per_defined_feature(m):
    vs = binarize(m)
    for i in range(len(m.languages)):
        for j, feat in enumerate(m.features):
            cols = [vs.dims.index(f"{feat.id}={v}") for v in feat.value_domain]
            if m.codes[i, j] >= 0:
                assert vs.defined[i, cols].all()
                assert sorted(vs.values[i, cols]) == [0.0] * (len(cols) - 1) + [1.0]
            else:
                assert not vs.defined[i, cols].any()


def test_binarize_fixture(data_dir):
    vs = binarize(load_structure_dataset(data_dir / "gb_mini"))
    assert len(vs.dims) == 7
    v, d = vs.vector("nucl1643")
    assert d.sum() == 4  # GB030 not covered


def test_lineage_dot_product_counts_shared_ancestors(registry):
    recs = [registry.resolve(c) for c in ("dan", "swe", "spa", "jpn", "eng")]
    vs = lineage_vectors(recs, key="iso639_3")
    for a in recs:
        for b in recs:
            shared = len(set(a.lineage) & set(b.lineage))
            assert vs.vector(a.iso639_3)[0] @ vs.vector(b.iso639_3)[0] == shared


def test_vector_table(data_dir):
    vs = load_vector_table(data_dir / "syn.tsv")
    assert vs.languages == ("dan", "nor", "spa", "jpn", "eus")
    assert vs.coverage("nor").defined_dims == 5
    assert vs.coverage("eus").ratio == pytest.approx(1 / 6)


@pytest.mark.parametrize("body", [
    "",
    "language\ta\tb\nx\t1\n",
    "language\ta\nx\t1.5\n",
    "language\ta\nx\tabc\n",
    "language\ta\nx\t1\nx\t0\n",
])
def test_vector_table_rejects(tmp_path, body):
    p = tmp_path / "v.tsv"
    p.write_text(body)
    with pytest.raises(DataError):
        load_vector_table(p)


def test_vector_set_validation():
    with pytest.raises(DataError):
        VectorSet(["a"], ["x"], np.array([[2.0]]))
    # undefined entries are not range-checked and read back as zero
    vs = VectorSet(["a"], ["x"], np.array([[7.0]]), np.array([[False]]))
    assert vs.values[0, 0] == 0.0


def test_coverage_filter(data_dir):
    vs = load_vector_table(data_dir / "syn.tsv")
    kept, excluded = coverage_filter(vs, LanguageSample(["dan", "eus", "fin"]), 0.5)
    assert kept == ["dan"]
    reasons = {e.language: e for e in excluded}
    assert reasons["fin"].reason == "absent" and reasons["fin"].coverage is None
    assert reasons["eus"].coverage == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        coverage_filter(vs, LanguageSample(["dan"]), 1.5)


@settings(max_examples=50)
@given(feature_matrices(), st.data())
def test_threshold_zero_only_drops_absent(m, data):
    vs = binarize(m)
    extra = data.draw(st.lists(st.sampled_from(["zz1", "zz2"]), unique=True))
    sample = LanguageSample(list(m.languages) + extra)
    kept, excluded = coverage_filter(vs, sample, 0.0)
    assert kept == list(m.languages)
    assert [e.language for e in excluded] == extra
