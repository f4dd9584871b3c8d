from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError, SampleError


@dataclass(frozen=True)
class LanguageSample:
    """An ordered set of language ids, e.g. the languages one paper evaluates on."""

    ids: tuple[str, ...]
    label: str | None = None

    def __init__(self, ids: Iterable[str], label: str | None = None) -> None:
        ids = tuple(ids)
        if not ids:
            raise SampleError("a language sample needs at least one language")
        seen: set[str] = set()
        dupes = [i for i in ids if i in seen or seen.add(i)]
        if dupes:
            raise SampleError(f"duplicate language(s) in sample: {', '.join(sorted(set(dupes)))}")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "label", label)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def __contains__(self, item: object) -> bool:
        return item in self.ids


@dataclass(frozen=True)
class Exclusion:
    language: str
    reason: str
    coverage: float | None = None


def read_sample_file(path: str | Path, label: str | None = None) -> list[str]:
    """Codes from a sample file: one per line, ``#`` comments, blank lines ignored.

    Returns raw codes; normalization and deduplication are the caller's job.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read sample file {path}: {exc}") from exc
    codes = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            codes.append(line)
    return codes
