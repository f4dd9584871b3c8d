"""Language identity: ISO 639-3 / glottocode handling and the language registry."""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping

from .errors import CodeShapeError, DataError, UnknownCodeError

logger = logging.getLogger(__name__)

GLOTTOCODE_RE = re.compile(r"^[a-z0-9]{4}[0-9]{4}$")
ISO639_3_RE = re.compile(r"^[a-z]{3}$")

REGISTRY_COLUMNS = ("glottocode", "iso639_3", "name", "latitude", "longitude", "lineage", "macroarea")
CODEMAP_COLUMNS = ("raw", "canonical", "kind")
CODEMAP_KINDS = ("retired", "variant", "macro")

REGISTRY_FILENAME = "registry.csv"
CODEMAP_FILENAME = "codemap.csv"


def is_glottocode(code: str) -> bool:
    return bool(GLOTTOCODE_RE.match(code.lower()))


def is_iso639_3(code: str) -> bool:
    return bool(ISO639_3_RE.match(code.lower()))


@dataclass(frozen=True)
class LanguageRecord:
    glottocode: str
    name: str
    lineage: tuple[str, ...]
    iso639_3: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    macroarea: str | None = None

    def __post_init__(self) -> None:
        if not GLOTTOCODE_RE.match(self.glottocode):
            raise DataError(f"malformed glottocode {self.glottocode!r}")
        if self.iso639_3 is not None and not ISO639_3_RE.match(self.iso639_3):
            raise DataError(f"malformed ISO 639-3 code {self.iso639_3!r} for {self.glottocode}")
        if not self.lineage or self.lineage[-1] != self.glottocode:
            raise DataError(f"lineage of {self.glottocode} must end with the language itself")
        if (self.latitude is None) != (self.longitude is None):
            raise DataError(f"{self.glottocode}: latitude and longitude must be given together")
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            raise DataError(f"{self.glottocode}: latitude {self.latitude} out of range")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            raise DataError(f"{self.glottocode}: longitude {self.longitude} out of range")

    @property
    def has_coordinates(self) -> bool:
        return self.latitude is not None

    @property
    def key(self) -> str:
        """Preferred short identifier: ISO 639-3 if available, else the glottocode."""
        return self.iso639_3 or self.glottocode


class Registry:
    """Immutable set of language records indexed by glottocode and ISO 639-3."""

    def __init__(self, records: list[LanguageRecord] | tuple[LanguageRecord, ...] = ()) -> None:
        by_glottocode: dict[str, LanguageRecord] = {}
        by_iso: dict[str, LanguageRecord] = {}
        for rec in records:
            if rec.glottocode in by_glottocode:
                raise DataError(f"duplicate glottocode {rec.glottocode}")
            by_glottocode[rec.glottocode] = rec
            if rec.iso639_3:
                if rec.iso639_3 in by_iso:
                    raise DataError(f"duplicate ISO 639-3 code {rec.iso639_3}")
                by_iso[rec.iso639_3] = rec
        self.by_glottocode: Mapping[str, LanguageRecord] = MappingProxyType(by_glottocode)
        self.by_iso: Mapping[str, LanguageRecord] = MappingProxyType(by_iso)

    def __len__(self) -> int:
        return len(self.by_glottocode)

    def __iter__(self) -> Iterator[LanguageRecord]:
        return iter(self.by_glottocode.values())

    def __contains__(self, code: object) -> bool:
        if not isinstance(code, str):
            return False
        code = code.lower()
        return code in self.by_glottocode or code in self.by_iso

    def resolve(self, code: str) -> LanguageRecord:
        """Look up a record by glottocode or ISO 639-3 code (case-insensitive)."""
        code = code.strip().lower()
        if GLOTTOCODE_RE.match(code):
            index = self.by_glottocode
        elif ISO639_3_RE.match(code):
            index = self.by_iso
        else:
            raise CodeShapeError(code)
        try:
            return index[code]
        except KeyError:
            raise UnknownCodeError(code) from None

    def get(self, code: str) -> LanguageRecord | None:
        try:
            return self.resolve(code)
        except UnknownCodeError:
            return None


def _optional(cell: str | None) -> str | None:
    if cell is None:
        return None
    cell = cell.strip()
    return cell or None


def _parse_record(row: dict[str, str], lineno: int, source: str) -> LanguageRecord:
    try:
        glottocode = (row["glottocode"] or "").strip().lower()
        lat = _optional(row.get("latitude"))
        lon = _optional(row.get("longitude"))
        lineage_cell = _optional(row.get("lineage"))
        lineage = tuple(p.strip().lower() for p in lineage_cell.split(">")) if lineage_cell else (glottocode,)
        iso = _optional(row.get("iso639_3"))
        return LanguageRecord(
            glottocode=glottocode,
            name=(row.get("name") or "").strip(),
            lineage=lineage,
            iso639_3=iso.lower() if iso else None,
            latitude=float(lat) if lat is not None else None,
            longitude=float(lon) if lon is not None else None,
            macroarea=_optional(row.get("macroarea")),
        )
    except (DataError, ValueError) as exc:
        raise DataError(f"{source}, line {lineno}: {exc}") from exc


def load_registry(path: str | Path) -> Registry:
    """Read the registry CSV; ``path`` may be the file or a directory holding ``registry.csv``."""
    path = Path(path)
    if path.is_dir():
        path = path / REGISTRY_FILENAME
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read registry {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty registry file")
        missing = [c for c in ("glottocode", "name", "lineage") if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing registry column(s) {', '.join(missing)}")
        records = []
        seen: dict[str, int] = {}
        for row in reader:
            lineno = reader.line_num
            if None in row:
                raise DataError(f"{path}, line {lineno}: too many fields")
            rec = _parse_record(row, lineno, str(path))
            if rec.glottocode in seen:
                raise DataError(
                    f"{path}, line {lineno}: duplicate glottocode {rec.glottocode} "
                    f"(first seen on line {seen[rec.glottocode]})"
                )
            seen[rec.glottocode] = lineno
            records.append(rec)
    registry = Registry(records)
    logger.info("loaded %d language records from %s", len(registry), path)
    return registry


@dataclass(frozen=True)
class CodeMap:
    """Deprecated/variant ISO codes mapped to current ones, plus macrolanguage membership."""

    retired_to_current: Mapping[str, str] = field(default_factory=dict)
    ambiguous: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for raw, canonical in self.retired_to_current.items():
            if canonical in self.retired_to_current:
                raise DataError(f"code map is not idempotent: {raw} -> {canonical} -> "
                                f"{self.retired_to_current[canonical]}")
            if raw in self.ambiguous:
                raise DataError(f"{raw} is both a retired code and a macrolanguage")

    def known_codes(self) -> set[str]:
        codes = set(self.retired_to_current) | set(self.retired_to_current.values())
        codes |= set(self.ambiguous)
        for members in self.ambiguous.values():
            codes |= members
        return codes


def load_codemap(path: str | Path) -> CodeMap:
    path = Path(path)
    if path.is_dir():
        path = path / CODEMAP_FILENAME
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read code map {path}: {exc}") from exc
    retired: dict[str, str] = {}
    macro: dict[str, set[str]] = {}
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in CODEMAP_COLUMNS):
            raise DataError(f"{path}: code map header must be {','.join(CODEMAP_COLUMNS)}")
        for row in reader:
            lineno = reader.line_num
            raw = (row["raw"] or "").strip().lower()
            canonical = (row["canonical"] or "").strip().lower()
            kind = (row["kind"] or "").strip().lower()
            if not raw or not canonical:
                raise DataError(f"{path}, line {lineno}: empty code")
            if kind not in CODEMAP_KINDS:
                raise DataError(f"{path}, line {lineno}: kind must be one of {CODEMAP_KINDS}, got {kind!r}")
            if kind == "macro":
                macro.setdefault(raw, set()).add(canonical)
            elif retired.setdefault(raw, canonical) != canonical:
                raise DataError(f"{path}, line {lineno}: {raw} mapped to two different codes")
    return CodeMap(retired, {k: frozenset(v) for k, v in macro.items()})


@dataclass(frozen=True)
class NormalizedCode:
    code: str
    ambiguous: bool = False
    members: frozenset[str] = frozenset()


def normalize_code(raw: str, codemap: CodeMap, registry: Registry | None = None) -> NormalizedCode:
    """Map a raw ISO 639-3 code (or glottocode) to its canonical form.

    Macrolanguage codes map to themselves with ``ambiguous`` set. When a
    registry is given, codes that neither it nor the code map know about are
    rejected; without one, any well-formed code passes through.
    """
    code = raw.strip().lower()
    if not code:
        raise UnknownCodeError(raw, "empty language code")
    code = codemap.retired_to_current.get(code, code)
    if code in codemap.ambiguous:
        return NormalizedCode(code, True, codemap.ambiguous[code])
    if not (ISO639_3_RE.match(code) or GLOTTOCODE_RE.match(code)):
        raise CodeShapeError(raw)
    if registry is not None and code not in registry and code not in codemap.known_codes():
        raise UnknownCodeError(raw)
    return NormalizedCode(code)


def default_registry_path() -> Path:
    return Path(str(resources.files("typdiv") / "data" / REGISTRY_FILENAME))


def default_codemap_path() -> Path:
    return Path(str(resources.files("typdiv") / "data" / CODEMAP_FILENAME))
