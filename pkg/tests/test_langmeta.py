import pytest
from hypothesis import given, strategies as st

from typdiv.errors import CodeShapeError, DataError, UnknownCodeError
from typdiv.langmeta import CodeMap, LanguageRecord, Registry, load_codemap, load_registry, normalize_code

REGISTRY_HEADER = "glottocode,iso639_3,name,latitude,longitude,lineage,macroarea\n"


def test_bundled_registry_resolves_both_code_kinds(registry):
    assert registry.resolve("dan").glottocode == "dani1285"
    assert registry.resolve("DANI1285").iso639_3 == "dan"
    assert registry.resolve("jpn").lineage[-1] == "nucl1643"


def test_resolve_errors(registry):
    with pytest.raises(UnknownCodeError):
        registry.resolve("qqq")
    with pytest.raises(CodeShapeError):
        registry.resolve("not a code")
    assert registry.get("qqq") is None


def test_record_validation():
    with pytest.raises(DataError):
        LanguageRecord("abcd1234", "X", ("root1234",))  # lineage must end at the language
    with pytest.raises(DataError):
        LanguageRecord("abcd1234", "X", ("abcd1234",), latitude=10.0)
    with pytest.raises(DataError):
        LanguageRecord("abcd1234", "X", ("abcd1234",), latitude=95.0, longitude=0.0)


def test_load_registry_reports_line(tmp_path):
    p = tmp_path / "registry.csv"
    p.write_text(REGISTRY_HEADER + "abcd1234,abc,A,1,2,abcd1234,\nabcd1234,abd,B,1,2,abcd1234,\n")
    with pytest.raises(DataError, match="line 3"):
        load_registry(p)
    # a directory holding registry.csv also works
    p.write_text(REGISTRY_HEADER + "abcd1234,abc,A,,,root1111>abcd1234,Eurasia\n")
    reg = load_registry(tmp_path)
    assert reg.resolve("abc").lineage == ("root1111", "abcd1234")
    assert not reg.resolve("abc").has_coordinates


def test_normalize_retired_variant_and_macro(codemap, registry):
    assert normalize_code("jap", codemap, registry).code == "jpn"
    assert normalize_code(" GER ", codemap, registry).code == "deu"
    nor = normalize_code("nor", codemap, registry)
    assert nor.ambiguous and set(nor.members) == {"nob", "nno"}
    # variant that lands on a macrolanguage is still flagged
    assert normalize_code("chi", codemap, registry).ambiguous


def test_normalize_unknown(codemap, registry):
    with pytest.raises(UnknownCodeError):
        normalize_code("qqq", codemap, registry)
    assert normalize_code("qqq", codemap).code == "qqq"
    with pytest.raises(CodeShapeError):
        normalize_code("e1", codemap)
    with pytest.raises(UnknownCodeError):
        normalize_code("", codemap)


def test_codemap_rejects_chains(tmp_path):
    with pytest.raises(DataError):
        CodeMap({"aaa": "bbb", "bbb": "ccc"}, {})
    p = tmp_path / "codemap.csv"
    p.write_text("raw,canonical,kind\naaa,bbb,sideways\n")
    with pytest.raises(DataError):
        load_codemap(p)


codes = st.one_of(
    st.sampled_from(["jap", "ger", "dut", "fre", "chi", "nor", "ara", "zho", "dan", "JPN", "Deu", "eus",
                     "dani1285", "NUCL1643", "qqq"]),
    st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=9),
)


@given(codes)
def test_normalize_is_idempotent(codemap, registry, raw):
    try:
        once = normalize_code(raw, codemap, registry)
    except UnknownCodeError:
        return
    twice = normalize_code(once.code, codemap, registry)
    assert twice == once
    if once.code in registry:
        assert registry.resolve(once.code)


def test_registry_is_read_only(registry):
    assert isinstance(registry, Registry)
    with pytest.raises(TypeError):
        registry.by_iso["xxx"] = None
