"""Read CLDF StructureDatasets (Grambank, WALS) into a categorical feature matrix."""

from __future__ import annotations

import csv
import enum
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

# Cell encoding inside FeatureMatrix.codes: >= 0 indexes the feature's value_domain.
UNKNOWN_CODE = -1
NO_COVERAGE_CODE = -2

MISSING_MARKERS = frozenset({"?", ""})
CACHE_SCHEMA = "typdiv.feature-matrix/1"


class Missing(enum.Enum):
    UNKNOWN = "?"
    NO_COVERAGE = "no_cov"


@dataclass(frozen=True)
class FeatureSpec:
    id: str
    name: str
    value_domain: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.value_domain:
            raise DataError(f"feature {self.id} has an empty value domain")
        if len(set(self.value_domain)) != len(self.value_domain):
            raise DataError(f"feature {self.id} has duplicate domain values")
        bad = MISSING_MARKERS.intersection(self.value_domain)
        if bad:
            raise DataError(f"feature {self.id}: missing marker in value domain")


class FeatureMatrix:
    """Languages x categorical features, with two kinds of missing cells.

    ``codes[i, j]`` is an index into ``features[j].value_domain``, or one of
    ``UNKNOWN_CODE`` ("?") and ``NO_COVERAGE_CODE`` (no row in the database).
    """

    def __init__(self, languages: Sequence[str], features: Sequence[FeatureSpec], codes: np.ndarray) -> None:
        self.languages = tuple(languages)
        self.features = tuple(features)
        codes = np.array(codes, dtype=np.int16, copy=True)
        if codes.shape != (len(self.languages), len(self.features)):
            raise DataError(
                f"cell array has shape {codes.shape}, expected "
                f"{(len(self.languages), len(self.features))}"
            )
        if len(set(self.languages)) != len(self.languages):
            raise DataError("duplicate language ids in feature matrix")
        if len({f.id for f in self.features}) != len(self.features):
            raise DataError("duplicate feature ids in feature matrix")
        sizes = np.array([len(f.value_domain) for f in self.features], dtype=np.int16)
        if codes.size and ((codes < NO_COVERAGE_CODE).any() or (codes >= sizes[None, :]).any()):
            raise DataError("cell code outside its feature's value domain")
        codes.setflags(write=False)
        self.codes = codes
        self._lang_index = {lang: i for i, lang in enumerate(self.languages)}
        self._feat_index = {f.id: j for j, f in enumerate(self.features)}

    def __repr__(self) -> str:
        return f"FeatureMatrix({len(self.languages)} languages x {len(self.features)} features)"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.languages == other.languages
            and self.features == other.features
            and np.array_equal(self.codes, other.codes)
        )

    @property
    def feature_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.features)

    def __contains__(self, language: object) -> bool:
        return language in self._lang_index

    def language_index(self, language: str) -> int:
        return self._lang_index[language]

    def feature_index(self, feature_id: str) -> int:
        return self._feat_index[feature_id]

    def cell(self, language: str, feature_id: str) -> str | Missing:
        try:
            i = self._lang_index[language]
            j = self._feat_index[feature_id]
        except KeyError as exc:
            raise DataError(f"no such language or feature: {exc.args[0]}") from None
        code = int(self.codes[i, j])
        if code == UNKNOWN_CODE:
            return Missing.UNKNOWN
        if code == NO_COVERAGE_CODE:
            return Missing.NO_COVERAGE
        return self.features[j].value_domain[code]

    def missing_counts(self) -> dict[str, tuple[int, int, int]]:
        """Per feature: (values, unknown, no coverage)."""
        out = {}
        for j, feat in enumerate(self.features):
            col = self.codes[:, j]
            out[feat.id] = (
                int((col >= 0).sum()),
                int((col == UNKNOWN_CODE).sum()),
                int((col == NO_COVERAGE_CODE).sum()),
            )
        return out

    def save_cache(self, path: str | Path) -> None:
        """Write the documented JSON cache: null = no coverage, "?" = unknown."""
        rows = []
        for i in range(len(self.languages)):
            row = []
            for j, feat in enumerate(self.features):
                code = int(self.codes[i, j])
                row.append(None if code == NO_COVERAGE_CODE else "?" if code == UNKNOWN_CODE
                           else feat.value_domain[code])
            rows.append(row)
        doc = {
            "schema": CACHE_SCHEMA,
            "languages": list(self.languages),
            "features": [{"id": f.id, "name": f.name, "domain": list(f.value_domain)} for f in self.features],
            "cells": rows,
        }
        Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load_cache(cls, path: str | Path) -> FeatureMatrix:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read feature matrix cache {path}: {exc}") from exc
        if doc.get("schema") != CACHE_SCHEMA:
            raise DataError(f"{path}: unsupported cache schema {doc.get('schema')!r}")
        features = [FeatureSpec(f["id"], f["name"], tuple(f["domain"])) for f in doc["features"]]
        lookups = [{v: k for k, v in enumerate(f.value_domain)} for f in features]
        codes = np.full((len(doc["languages"]), len(features)), NO_COVERAGE_CODE, dtype=np.int16)
        for i, row in enumerate(doc["cells"]):
            if len(row) != len(features):
                raise DataError(f"{path}: ragged cell row {i}")
            for j, cell in enumerate(row):
                if cell is None:
                    continue
                if cell == "?":
                    codes[i, j] = UNKNOWN_CODE
                elif cell in lookups[j]:
                    codes[i, j] = lookups[j][cell]
                else:
                    raise DataError(f"{path}: value {cell!r} outside domain of {features[j].id}")
        return cls(doc["languages"], features, codes)


def _natural_key(value: str) -> tuple:
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", value))


def _read_csv(path: Path, required: Iterable[str]) -> list[dict[str, str]]:
    try:
        fh = path.open(encoding="utf-8-sig", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)


def load_structure_dataset(directory: str | Path) -> FeatureMatrix:
    """Load ``languages.csv``, ``parameters.csv``, ``values.csv`` and optional ``codes.csv``.

    Languages are keyed by glottocode. When a values row carries a ``Code_ID``
    that resolves in ``codes.csv``, the code's name is the cell value (WALS
    stores numbers in ``Value``); otherwise the raw ``Value`` is used.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    for name in ("languages.csv", "parameters.csv", "values.csv"):
        if not (directory / name).is_file():
            raise DataError(f"{directory}: required file {name} is missing")

    lang_rows = _read_csv(directory / "languages.csv", ["ID", "Glottocode"])
    glottocode_of: dict[str, str] = {}
    dropped: set[str] = set()
    languages: list[str] = []
    seen: set[str] = set()
    for row in lang_rows:
        lid = row["ID"].strip()
        glottocode = (row.get("Glottocode") or "").strip().lower()
        if not glottocode:
            logger.warning("%s: language %s has no glottocode, dropped", directory.name, lid)
            dropped.add(lid)
            continue
        if glottocode in seen:
            dropped.add(lid)
            logger.warning("%s: language %s repeats glottocode %s, dropped", directory.name, lid, glottocode)
            continue
        glottocode_of[lid] = glottocode
        seen.add(glottocode)
        languages.append(glottocode)

    param_rows = _read_csv(directory / "parameters.csv", ["ID", "Name"])
    param_ids = [row["ID"].strip() for row in param_rows]
    param_names = {row["ID"].strip(): row["Name"] for row in param_rows}

    code_names: dict[str, str] = {}
    declared: dict[str, list[str]] = {}
    codes_path = directory / "codes.csv"
    if codes_path.is_file():
        code_rows = _read_csv(codes_path, ["Parameter_ID"])
        for row in code_rows:
            pid = row["Parameter_ID"].strip()
            label = (row.get("Name") or row.get("ID") or "").strip()
            if not label:
                raise DataError(f"{codes_path}: code row for {pid} has neither Name nor ID")
            declared.setdefault(pid, []).append(label)
            if row.get("ID"):
                code_names[row["ID"].strip()] = label

    value_rows = _read_csv(directory / "values.csv", ["Language_ID", "Parameter_ID", "Value"])
    cells: dict[tuple[str, str], str] = {}
    observed: dict[str, set[str]] = {}
    for row in value_rows:
        lid = row["Language_ID"].strip()
        pid = row["Parameter_ID"].strip()
        if pid not in param_names:
            raise DataError(f"{directory}/values.csv: unknown parameter {pid}")
        glottocode = glottocode_of.get(lid)
        if glottocode is None:
            if lid in dropped:
                continue
            raise DataError(f"{directory}/values.csv: language {lid} is not in languages.csv")
        raw = (row["Value"] or "").strip()
        code_id = (row.get("Code_ID") or "").strip()
        if raw == "?":
            value = "?"
        elif code_id:
            if code_id not in code_names:
                raise DataError(f"{directory}/values.csv: code {code_id} for {pid}/{lid} not in codes.csv")
            value = code_names[code_id]
        elif raw:
            value = raw
        else:
            continue
        if (glottocode, pid) in cells:
            logger.warning("%s: repeated value for %s/%s, keeping the first", directory.name, glottocode, pid)
            continue
        cells[(glottocode, pid)] = value
        if value != "?":
            observed.setdefault(pid, set()).add(value)

    features: list[FeatureSpec] = []
    for pid in param_ids:
        if pid in declared:
            domain = tuple(dict.fromkeys(declared[pid]))
            undeclared = observed.get(pid, set()) - set(domain)
            if undeclared:
                lang = next(g for (g, p), v in cells.items() if p == pid and v in undeclared)
                raise DataError(
                    f"{directory}: value {sorted(undeclared)[0]!r} of feature {pid} "
                    f"(language {lang}) is not in codes.csv"
                )
        else:
            domain = tuple(sorted(observed.get(pid, ()), key=_natural_key))
        if not domain:
            logger.warning("%s: feature %s has no values, dropped", directory.name, pid)
            continue
        features.append(FeatureSpec(pid, param_names[pid], domain))

    lookups = [{v: k for k, v in enumerate(f.value_domain)} for f in features]
    lang_index = {g: i for i, g in enumerate(languages)}
    feat_index = {f.id: j for j, f in enumerate(features)}
    codes = np.full((len(languages), len(features)), NO_COVERAGE_CODE, dtype=np.int16)
    for (glottocode, pid), value in cells.items():
        j = feat_index.get(pid)
        if j is None:
            continue
        codes[lang_index[glottocode], j] = UNKNOWN_CODE if value == "?" else lookups[j][value]
    matrix = FeatureMatrix(languages, features, codes)
    logger.info("loaded %r from %s", matrix, directory)
    return matrix


def feature_subset(matrix: FeatureMatrix, ids: Sequence[str]) -> FeatureMatrix:
    if not ids:
        raise DataError("empty feature selection")
    if len(set(ids)) != len(ids):
        raise DataError("duplicate feature ids in selection")
    unknown = [i for i in ids if i not in matrix.feature_ids]
    if unknown:
        raise DataError(f"unknown feature id(s): {', '.join(unknown)}")
    cols = [matrix.feature_index(i) for i in ids]
    return FeatureMatrix(matrix.languages, [matrix.features[c] for c in cols], matrix.codes[:, cols])
