"""Literature-survey helpers: claim search, annotator agreement, sample statistics."""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import DataError, DegenerateAgreementError, SampleError
from .sample import LanguageSample

CLAIM_PATTERN = re.compile(r"typolog.+?div.+?|div.+?typolog.+?", re.IGNORECASE | re.DOTALL)
PAPERS_COLUMNS = ("id", "title", "abstract", "languages")


@dataclass(frozen=True)
class PaperRecord:
    id: str
    title: str = ""
    abstract: str = ""
    sample: LanguageSample | None = None


@dataclass(frozen=True)
class ClaimMatch:
    field: str   # "title" or "abstract"
    start: int
    end: int
    text: str


def scan_claims(record: PaperRecord) -> ClaimMatch | None:
    """First match of the typological-diversity search string, title before abstract."""
    for name in ("title", "abstract"):
        m = CLAIM_PATTERN.search(getattr(record, name))
        if m:
            return ClaimMatch(name, m.start(), m.end(), m.group(0))
    return None


def cohen_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    if len(a) != len(b):
        raise SampleError(f"label sequences differ in length ({len(a)} vs {len(b)})")
    n = len(a)
    if n == 0:
        raise SampleError("cannot compute kappa on empty label sequences")
    p_o = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_e = sum(ca[label] * cb[label] for label in ca.keys() & cb.keys()) / (n * n)
    if p_e == 1.0:
        raise DegenerateAgreementError("chance agreement is 1 (both annotators use one identical label)")
    return (p_o - p_e) / (1 - p_e)


@dataclass(frozen=True)
class SizeStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float


def sample_size_stats(sizes: Iterable[float]) -> SizeStats:
    """Five-number summary; quartiles interpolate linearly at position p * (n - 1)."""
    data = np.asarray(list(sizes), dtype=float)
    if data.size == 0:
        raise SampleError("no sample sizes given")
    q = np.quantile(data, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return SizeStats(*(float(x) for x in q))


def usage_counts(records: Iterable[PaperRecord]) -> dict[str, int]:
    """Number of papers using each language, most used first, ties by language id."""
    counts: Counter[str] = Counter()
    for rec in records:
        if rec.sample is not None:
            counts.update(set(rec.sample))
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def load_papers(path: str | Path) -> list[PaperRecord]:
    """Papers CSV ``id,title,abstract,languages``; languages are space-separated codes.

    Codes are lowercased but otherwise kept as written; repeated codes within
    one paper collapse to one.
    """
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read papers file {path}: {exc}") from exc
    records = []
    seen = set()
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in PAPERS_COLUMNS):
            raise DataError(f"{path}: header must be {','.join(PAPERS_COLUMNS)}")
        for row in reader:
            pid = (row["id"] or "").strip()
            if not pid:
                raise DataError(f"{path}, line {reader.line_num}: empty paper id")
            if pid in seen:
                raise DataError(f"{path}, line {reader.line_num}: duplicate paper id {pid}")
            seen.add(pid)
            codes = list(dict.fromkeys(c.lower() for c in (row["languages"] or "").split()))
            records.append(PaperRecord(pid, row["title"] or "", row["abstract"] or "",
                                       LanguageSample(codes, pid) if codes else None))
    return records


def read_labels(path: str | Path) -> list[str]:
    """One annotation label per line (blank lines kept out)."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read labels file {path}: {exc}") from exc
    return [line.strip() for line in lines if line.strip()]
