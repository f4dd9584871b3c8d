import pytest
from hypothesis import given, strategies as st

from typdiv.errors import DataError, DegenerateAgreementError, SampleError
from typdiv.sample import LanguageSample
from typdiv.survey import (PaperRecord, cohen_kappa, load_papers, read_labels, sample_size_stats, scan_claims,
                           usage_counts)


@pytest.mark.parametrize("text", [
    "typologically and genetically diverse languages",
    "languages of diverse typologies",
    "diverse languages in terms of language family and morphological typology",
    "Typologically Diverse Question Answering",
])
def test_claims_match(text):
    assert scan_claims(PaperRecord("x", abstract=text)) is not None


def test_claim_misses():
    assert scan_claims(PaperRecord("x", "Topological diversity of networks")) is None
    assert scan_claims(PaperRecord("x", "A diverse set", "no claim here")) is None


def test_title_before_abstract():
    m = scan_claims(PaperRecord("x", "Typologically diverse", "also typologically diverse"))
    assert m.field == "title" and m.start == 0


@given(st.text(max_size=60))
def test_scan_case_invariant(text):
    a = scan_claims(PaperRecord("x", abstract=text))
    b = scan_claims(PaperRecord("x", abstract=text.upper()))
    c = scan_claims(PaperRecord("x", abstract=text.lower()))
    # some characters change length under case mapping; compare only where they do not
    if len(text.upper()) == len(text) == len(text.lower()):
        assert (a is None) == (b is None) == (c is None)


def test_kappa_fixture():
    # 2x2 table [[20, 5], [10, 15]]
    a = ["y"] * 25 + ["n"] * 25
    b = ["y"] * 20 + ["n"] * 5 + ["y"] * 10 + ["n"] * 15
    assert cohen_kappa(a, b) == pytest.approx(0.4, abs=1e-12)
    assert cohen_kappa(a, a) == 1.0


def test_kappa_errors():
    with pytest.raises(DegenerateAgreementError):
        cohen_kappa(["y", "y"], ["y", "y"])
    with pytest.raises(SampleError):
        cohen_kappa(["y"], ["y", "n"])
    with pytest.raises(SampleError):
        cohen_kappa([], [])


labels = st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("abc")), min_size=1, max_size=30)


@given(labels)
def test_kappa_symmetric(pairs):
    a, b = [x for x, _ in pairs], [y for _, y in pairs]
    try:
        k = cohen_kappa(a, b)
    except DegenerateAgreementError:
        with pytest.raises(DegenerateAgreementError):
            cohen_kappa(b, a)
        return
    assert cohen_kappa(b, a) == pytest.approx(k, abs=1e-12)


def test_quartiles_linear():
    # positions p * (n - 1) over [1, 2, 4, 8, 16]: q1 at 1.0 -> 2, q3 at 3.0 -> 8
    s = sample_size_stats([16, 1, 8, 2, 4])
    assert (s.min, s.q1, s.median, s.q3, s.max) == (1, 2, 4, 8, 16)
    s = sample_size_stats([1, 2, 3, 4])
    # q1 at position 0.75 -> 1.75, q3 at 2.25 -> 3.25
    assert (s.q1, s.median, s.q3) == (1.75, 2.5, 3.25)
    with pytest.raises(SampleError):
        sample_size_stats([])


papers = st.lists(st.lists(st.sampled_from(["eng", "deu", "jpn", "tur", "fin"]), unique=True, min_size=1),
                  max_size=10)


@given(papers)
def test_usage_counts_total(samples):
    recs = [PaperRecord(f"p{i}", sample=LanguageSample(s)) for i, s in enumerate(samples)]
    counts = usage_counts(recs)
    assert sum(counts.values()) == sum(len(s) for s in samples)
    assert list(counts.values()) == sorted(counts.values(), reverse=True)


def test_load_papers(data_dir, tmp_path):
    recs = load_papers(data_dir / "papers.csv")
    assert [r.id for r in recs] == ["p1", "p2", "p3", "p4"]
    assert recs[1].sample is None
    assert list(recs[2].sample) == ["eng", "spa", "jap", "hin"]
    p = tmp_path / "p.csv"
    p.write_text("id,title\nx,y\n")
    with pytest.raises(DataError):
        load_papers(p)
    p.write_text("id,title,abstract,languages\nx,,,\nx,,,\n")
    with pytest.raises(DataError, match="duplicate"):
        load_papers(p)


def test_read_labels(data_dir):
    assert read_labels(data_dir / "labels_a.txt") == ["yes", "yes", "no", "no", "yes"]
