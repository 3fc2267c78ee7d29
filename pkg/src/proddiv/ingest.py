"""Filing manifests, Business-section extraction and corpus filtering."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

FORM_TYPES = frozenset({"10-K", "10-K405", "10-KSB"})
MANIFEST_FIELDS = ("cik", "year", "form_type", "sic_code", "text_path", "prefiltered")
MIN_SECTION_CHARS = 1000
FINANCIAL_SIC = range(6000, 7000)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class FilingRecord:
    cik: int
    year: int
    form_type: str
    sic_code: int
    text_path: Path
    prefiltered: bool

    @property
    def key(self) -> tuple[int, int]:
        return (self.cik, self.year)


@dataclass
class ExtractionResult:
    business_text: str
    method: str  # "regex" | "keyword" | "failed"
    diagnostics: dict = field(default_factory=dict)

    @property
    def chars(self) -> int:
        return len(self.business_text)


def _parse_int(value: str, name: str, line: int) -> int:
    try:
        return int(value.strip())
    except (ValueError, AttributeError):
        raise ManifestError(f"row {line}: field {name!r} is not an integer: {value!r}") from None


def _parse_row(row: dict, line: int, base: Path) -> FilingRecord:
    for name in MANIFEST_FIELDS:
        if row.get(name) is None:
            raise ManifestError(f"row {line}: missing field {name!r}")
    cik = _parse_int(row["cik"], "cik", line)
    if cik <= 0:
        raise ManifestError(f"row {line}: field 'cik' must be positive, got {cik}")
    year = _parse_int(row["year"], "year", line)
    if not 1900 < year < 2100:
        raise ManifestError(f"row {line}: field 'year' out of range: {year}")
    form_type = row["form_type"].strip()
    if form_type not in FORM_TYPES:
        raise ManifestError(f"row {line}: field 'form_type' must be one of {sorted(FORM_TYPES)}, got {form_type!r}")
    sic = _parse_int(row["sic_code"], "sic_code", line)
    if not 0 <= sic <= 9999:
        raise ManifestError(f"row {line}: field 'sic_code' out of range: {sic}")
    flag = row["prefiltered"].strip()
    if flag not in ("0", "1"):
        raise ManifestError(f"row {line}: field 'prefiltered' must be 0 or 1, got {flag!r}")
    text_path = row["text_path"].strip()
    if not text_path:
        raise ManifestError(f"row {line}: field 'text_path' is empty")
    path = Path(text_path)
    if not path.is_absolute():
        path = base / path
    return FilingRecord(cik, year, form_type, sic, path, flag == "1")


def load_manifest(path) -> list[FilingRecord]:
    """Read a manifest CSV; relative ``text_path`` values resolve against its directory.

    Row numbers in error messages are file line numbers (the header is line 1).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not any(ln.strip() for ln in lines):
        return []
    reader = csv.DictReader(lines)
    header = tuple(h.strip() for h in (reader.fieldnames or ()))
    missing = [f for f in MANIFEST_FIELDS if f not in header]
    if missing:
        raise ManifestError(f"row 1: header lacks field(s) {missing}")
    reader.fieldnames = list(header)

    records: list[FilingRecord] = []
    seen: dict[tuple[int, int], int] = {}
    for i, row in enumerate(reader):
        line = i + 2
        rec = _parse_row(row, line, path.parent)
        if rec.key in seen:
            raise ManifestError(
                f"duplicate (cik, year) {rec.key}: rows {seen[rec.key]} and {line}"
            )
        seen[rec.key] = line
        records.append(rec)
    return records


def filter_corpus(records):
    """Drop financial firms (SIC 6000-6999) and records not prefiltered upstream."""
    return [r for r in records if r.prefiltered and r.sic_code not in FINANCIAL_SIC]


# Headings are matched at line start. "ITEM 1" must not be "ITEM 10" or "ITEM 1A".
_ITEM1 = re.compile(
    r"^[ \t]*(?:PART[ \t]+I[ \t]*[,.:;\-]?[ \t]*)?ITEM[ \t]*1(?![0-9]|[A-Z]\b)[ \t]*[.:\-]?"
    r"(?P<title>[^\n]{0,40}?BUSINESS)?[^\n]*$",
    re.IGNORECASE | re.MULTILINE,
)
_ANY_ITEM = re.compile(
    r"^[ \t]*(?:PART[ \t]+[IVX]+[ \t]*[,.:;\-]?[ \t]*)?ITEM[ \t]*(?P<num>\d{1,2})[ \t]*(?P<sub>[A-Z]\b)?",
    re.IGNORECASE | re.MULTILINE,
)
_KEYWORD = re.compile(r"^[ \t]*(?:BUSINESS\b[^\n]*|Business[ \t]*[.:]?[ \t]*)$", re.MULTILINE)
_RISK = re.compile(
    r"^[ \t]*(?:ITEM[ \t]*1A[ \t]*[.:\-]?\s*)?RISK[ \t]+FACTORS[ \t]*[.:]?[ \t]*$",
    re.IGNORECASE | re.MULTILINE,
)


def _next_item(text: str, pos: int) -> re.Match | None:
    return _ANY_ITEM.search(text, pos)


def _regex_candidates(text: str):
    for m in _ITEM1.finditer(text):
        # text running on after the title on the heading line belongs to the body
        start = m.end("title") if m.group("title") else m.end()
        end_m = _next_item(text, m.end() + 1)
        end = end_m.start() if end_m else len(text)
        yield m, end_m, text[start:end].lstrip(" \t.:-").strip()


def strip_risk_factors(business_text: str) -> str:
    """Remove every Risk Factors block, from its heading to the next item heading."""
    text = business_text
    while True:
        m = _RISK.search(text)
        if m is None:
            return text
        nxt = _ANY_ITEM.search(text, m.end())
        head = text[: m.start()].rstrip()
        tail = text[nxt.start():] if nxt else ""
        text = f"{head}\n{tail}".strip() if tail else head


def extract_business_section(raw: str) -> ExtractionResult:
    """Pull the Business section out of a plain-text filing.

    The regex tier takes the longest span that follows an "ITEM 1" heading and
    stops at the next item heading (skipping table-of-contents entries). If it
    yields nothing usable, a keyword tier looks for a line led by "BUSINESS".
    Sections shorter than ``MIN_SECTION_CHARS`` after Risk Factors removal
    count as failures.
    """
    diagnostics: dict = {"start_marker": "", "end_marker": "", "risk_factors_removed": False}

    best = None
    for m, end_m, body in _regex_candidates(raw):
        if best is None or len(body) > len(best[2]):
            best = (m, end_m, body)
    tiers = []
    if best is not None:
        m, end_m, body = best
        tiers.append(("regex", m.group(0).strip(), end_m.group(0).strip() if end_m else "", body))

    km = _KEYWORD.search(raw)
    if km is not None:
        end_m = re.compile(r"^[ \t]*ITEM\b", re.IGNORECASE | re.MULTILINE).search(raw, km.end())
        body = raw[km.end(): end_m.start() if end_m else len(raw)].strip()
        tiers.append(("keyword", km.group(0).strip(), end_m.group(0).strip() if end_m else "", body))

    for method, start_marker, end_marker, body in tiers:
        cleaned = strip_risk_factors(body)
        if len(cleaned) >= MIN_SECTION_CHARS:
            diagnostics.update(
                start_marker=start_marker,
                end_marker=end_marker,
                risk_factors_removed=cleaned != body,
                chars=len(cleaned),
            )
            return ExtractionResult(cleaned, method, diagnostics)
    diagnostics["chars"] = 0
    return ExtractionResult("", "failed", diagnostics)
