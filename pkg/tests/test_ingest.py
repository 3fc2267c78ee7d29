import pytest
from hypothesis import given, settings, strategies as st

from proddiv.ingest import (
    MIN_SECTION_CHARS,
    ManifestError,
    extract_business_section,
    filter_corpus,
    load_manifest,
    strip_risk_factors,
)
from proddiv.synth import extraction_fixture

HEADER = "cik,year,form_type,sic_code,text_path,prefiltered\n"
BODY = ("Acme Motors designs and builds light trucks and engines for fleet customers. " * 20).strip()


def _write(tmp_path, text, name="manifest.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_manifest(tmp_path):
    assert load_manifest(_write(tmp_path, "")) == []


def test_three_rows_round_trip(tmp_path):
    rows = "1,2001,10-K,3711,a.txt,1\n2,2001,10-K405,2834,b.txt,0\n3,2002,10-KSB,7372,/abs/c.txt,1\n"
    recs = load_manifest(_write(tmp_path, HEADER + rows))
    assert [(r.cik, r.year, r.form_type, r.sic_code, r.prefiltered) for r in recs] == [
        (1, 2001, "10-K", 3711, True),
        (2, 2001, "10-K405", 2834, False),
        (3, 2002, "10-KSB", 7372, True),
    ]
    assert recs[0].text_path == tmp_path / "a.txt"
    assert str(recs[2].text_path) == "/abs/c.txt"


def test_duplicate_key_names_both_rows(tmp_path):
    rows = "1,2001,10-K,3711,a.txt,1\n2,2001,10-K,3711,b.txt,1\n1,2001,10-K,3711,c.txt,1\n"
    with pytest.raises(ManifestError, match="rows 2 and 4"):
        load_manifest(_write(tmp_path, HEADER + rows))


@pytest.mark.parametrize(
    "row, field",
    [
        ("x,2001,10-K,3711,a.txt,1", "cik"),
        ("0,2001,10-K,3711,a.txt,1", "cik"),
        ("1,1850,10-K,3711,a.txt,1", "year"),
        ("1,2001,10-Q,3711,a.txt,1", "form_type"),
        ("1,2001,10-K,12345,a.txt,1", "sic_code"),
        ("1,2001,10-K,3711,a.txt,yes", "prefiltered"),
        ("1,2001,10-K,3711,,1", "text_path"),
    ],
)
def test_malformed_row_names_row_and_field(tmp_path, row, field):
    text = HEADER + "5,2001,10-K,3711,ok.txt,1\n" + row + "\n"
    with pytest.raises(ManifestError, match=rf"row 3: .*{field}"):
        load_manifest(_write(tmp_path, text))


def test_filter_boundaries(tmp_path):
    rows = "1,2001,10-K,6021,a,1\n2,2001,10-K,5999,a,1\n3,2001,10-K,7000,a,1\n" \
           "4,2001,10-K,6000,a,1\n5,2001,10-K,6999,a,1\n6,2001,10-K,3711,a,0\n"
    kept = filter_corpus(load_manifest(_write(tmp_path, HEADER + rows)))
    assert [r.cik for r in kept] == [2, 3]


def test_filter_twenty_record_fixture(tmp_path):
    # 6 financial, 2 not prefiltered (disjoint sets), 12 survivors counted by hand
    sics = [3711, 6021, 2834, 6199, 7372, 6311, 1311, 6798, 5812, 6022, 4512, 6500,
            3674, 5651, 2834, 7372, 3711, 1311, 4512, 5812]
    flags = [1] * 20
    flags[13] = flags[17] = 0
    rows = "".join(f"{i + 1},2005,10-K,{s},f.txt,{f}\n" for i, (s, f) in enumerate(zip(sics, flags)))
    recs = load_manifest(_write(tmp_path, HEADER + rows))
    kept = filter_corpus(recs)
    assert len(kept) == 12
    it = iter(recs)
    assert all(any(k is r for r in it) for k in kept)  # order-preserving subsequence


def test_simple_regex_extraction():
    raw = f"ITEM 1. BUSINESS\n{BODY}\nITEM 2. PROPERTIES\nWe lease a plant.\n"
    res = extract_business_section(raw)
    assert res.method == "regex"
    assert res.business_text == BODY
    assert res.diagnostics["end_marker"].startswith("ITEM 2")


def test_no_business_heading_fails():
    res = extract_business_section("ITEM 2. PROPERTIES\nWe own a plant.\n" + BODY)
    assert res.method == "failed" and res.business_text == ""


def test_short_section_fails():
    raw = "ITEM 1. BUSINESS\nWe make trucks.\nITEM 2. PROPERTIES\n"
    assert extract_business_section(raw).method == "failed"
    assert len(BODY) >= MIN_SECTION_CHARS


def test_table_of_contents_entry_is_skipped():
    raw = ("TABLE OF CONTENTS\nItem 1. Business 3\nItem 1A. Risk Factors 9\nItem 2. Properties 12\n\n"
           f"PART I\nITEM 1. BUSINESS\n{BODY}\nITEM 1A. RISK FACTORS\nThings may go wrong.\nITEM 2. PROPERTIES\n")
    res = extract_business_section(raw)
    assert res.business_text == BODY


def test_item_10_is_not_item_1():
    raw = f"ITEM 10. DIRECTORS\n{BODY}\nITEM 11. COMPENSATION\n"
    assert extract_business_section(raw).method == "failed"


def test_keyword_fallback():
    raw = f"ANNUAL REPORT\nBUSINESS\n{BODY}\nITEM 2 PROPERTIES\n"
    res = extract_business_section(raw)
    assert res.method == "keyword" and res.business_text == BODY


def test_strip_risk_factors():
    text = f"{BODY}\nITEM 1A. RISK FACTORS\nDemand may fall.\nSupply may fail.\nITEM 2. PROPERTIES\nA plant."
    out = strip_risk_factors(text)
    assert "Demand may fall" not in out and "Supply may fail" not in out
    assert out.startswith(BODY) and "ITEM 2. PROPERTIES" in out
    assert strip_risk_factors(BODY) == BODY


def test_extraction_removes_risk_factors_inside_section():
    raw = f"ITEM 1. BUSINESS\n{BODY}\nRISK FACTORS\nCompetition is intense.\nITEM 2. PROPERTIES\n"
    res = extract_business_section(raw)
    assert "Competition" not in res.business_text
    assert res.diagnostics["risk_factors_removed"] is True


def test_fixture_invariants():
    for f in extraction_fixture(100, 0):
        res = extract_business_section(f.text)
        assert (res.method == "failed") == (res.business_text == "")
        assert (res.method != "failed") == f.parseable, f.name
        assert "RISK FACTORS" not in res.business_text.upper()
        assert extract_business_section(f.text) == res
        assert strip_risk_factors(strip_risk_factors(f.text)) == strip_risk_factors(f.text)


_lines = st.lists(
    st.sampled_from(["ITEM 1A. RISK FACTORS", "RISK FACTORS", "ITEM 2. PROPERTIES", "ITEM 7", "text here", ""]),
    max_size=12,
)


@given(_lines)
@settings(max_examples=300)
def test_strip_is_idempotent(lines):
    text = "\n".join(lines)
    once = strip_risk_factors(text)
    assert strip_risk_factors(once) == once
