"""Domain types, catalogs, dataset file formats and noise/SNR bookkeeping.

Everything here is immutable after construction and safe to share read-only
across threads.  Coordinate order is fixed by the catalog: symptom i and
disease j always refer to the catalog's i-th symptom name and j-th disease
name.

File formats:
  * catalog: JSON ``{"symptoms": [...], "diseases": [...]}``
  * knowledge matrix: CSV, first row = disease names, first column = symptom
    names, cells in {0, 1}
  * vignettes: JSON Lines, one ``{"present": [...], "absent": [...],
    "diagnosis": name}`` object per line
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TypeAlias

import numpy as np
import numpy.typing as npt


class AmpdxError(Exception):
    """Base class for all errors raised by this package."""


class DataError(AmpdxError):
    """Invalid or inconsistent input data (files, names, dimensions)."""


class NumericalError(AmpdxError):
    """Numerical failure at runtime (non-finite values, quadrature breakdown)."""


#: A length-N real vector of disease scores (estimates or ground truth).
DiseaseVector: TypeAlias = npt.NDArray[np.float64]

#: Sentinel for an unobserved symptom inside ``SymptomObservation.values``.
MISSING = 0


class AbsenceMode(str, Enum):
    """How symptoms not mentioned in a report are scored."""

    ASSUME_ABSENT = "assume-absent"
    TREAT_MISSING = "treat-missing"


def _check_names(names: Sequence[str], kind: str) -> tuple[str, ...]:
    names = tuple(names)
    if not names:
        raise DataError(f"catalog has no {kind} names")
    for name in names:
        if not isinstance(name, str) or not name.strip():
            raise DataError(f"blank or non-string {kind} name: {name!r}")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate {kind} name(s): {', '.join(dupes)}")
    return names


@dataclass(frozen=True)
class Catalog:
    """Ordered symptom and disease name lists; the coordinate system of a model."""

    symptoms: tuple[str, ...]
    diseases: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symptoms", _check_names(self.symptoms, "symptom"))
        object.__setattr__(self, "diseases", _check_names(self.diseases, "disease"))
        object.__setattr__(self, "_symptom_idx", {n: i for i, n in enumerate(self.symptoms)})
        object.__setattr__(self, "_disease_idx", {n: i for i, n in enumerate(self.diseases)})

    @property
    def m(self) -> int:
        return len(self.symptoms)

    @property
    def n(self) -> int:
        return len(self.diseases)

    def symptom_index(self, name: str) -> int:
        try:
            return self._symptom_idx[name]  # type: ignore[attr-defined]
        except KeyError:
            raise DataError(f"unknown symptom name: {name!r}") from None

    def disease_index(self, name: str) -> int:
        try:
            return self._disease_idx[name]  # type: ignore[attr-defined]
        except KeyError:
            raise DataError(f"unknown disease name: {name!r}") from None


@dataclass(frozen=True, eq=False)
class KnowledgeMatrix:
    """M x N binary matrix of elicited symptom-disease associations."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise DataError(f"knowledge matrix must be 2-D and non-empty, got shape {entries.shape}")
        if not np.all((entries == 0.0) | (entries == 1.0)):
            bad = entries[(entries != 0.0) & (entries != 1.0)].flat[0]
            raise DataError(f"non-binary entry in knowledge matrix: {bad!r}")
        zero_cols = np.flatnonzero(entries.sum(axis=0) == 0)
        if zero_cols.size:
            raise DataError(f"disease column(s) with no symptoms: {zero_cols.tolist()}")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def column_energies(self) -> np.ndarray:
        """Squared column norms, i.e. symptom-space energy of each single disease."""
        return (self.entries**2).sum(axis=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)


@dataclass(frozen=True, eq=False)
class SymptomObservation:
    """Length-M vector with entries +1 (reported present), -1 (absent) or 0 (missing)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.ndim != 1 or values.size < 1:
            raise DataError(f"observation must be a non-empty vector, got shape {values.shape}")
        if not np.all(np.isin(values, (-1, 0, 1))):
            bad = values[~np.isin(values, (-1, 0, 1))].flat[0]
            raise DataError(f"observation value outside {{+1, -1, missing}}: {bad!r}")
        values = values.astype(np.int8).copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def missing_mask(self) -> np.ndarray:
        return self.values == MISSING

    @property
    def num_observed(self) -> int:
        return int(np.count_nonzero(self.values))

    def signs(self) -> np.ndarray:
        """Values as float64, missing entries staying 0."""
        return self.values.astype(np.float64)

    def resolved(self, fill: int = -1) -> np.ndarray:
        """Values as float64 with missing entries replaced by ``fill`` (assume-absent)."""
        out = self.values.astype(np.float64)
        out[self.missing_mask] = float(fill)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymptomObservation):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class NoiseModel:
    """Precision of the additive Gaussian perturbing the dense symptom vector."""

    noise_precision: float
    snr_db: float | None = None

    def __post_init__(self) -> None:
        if not (self.noise_precision > 0):
            raise DataError(f"noise precision must be positive, got {self.noise_precision}")

    @property
    def noise_variance(self) -> float:
        return 1.0 / self.noise_precision


@dataclass(frozen=True, eq=False)
class Vignette:
    """One evaluation case: an observed symptom subset plus the confirmed diagnosis."""

    observation: SymptomObservation
    truth_index: int

    def __post_init__(self) -> None:
        if self.truth_index < 0:
            raise DataError(f"negative truth index: {self.truth_index}")

    def truth_vector(self, n: int) -> DiseaseVector:
        """The implied one-hot ground-truth disease vector."""
        if not 0 <= self.truth_index < n:
            raise DataError(f"truth index {self.truth_index} out of range for N={n}")
        vec = np.zeros(n)
        vec[self.truth_index] = 1.0
        return vec

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vignette):
            return NotImplemented
        return self.truth_index == other.truth_index and self.observation == other.observation


# ---------------------------------------------------------------------------
# Catalog I/O


def load_catalog(path: str | Path) -> Catalog:
    """Load and validate a catalog JSON file."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot parse catalog {path}: {exc}") from exc
    if not isinstance(raw, dict) or "symptoms" not in raw or "diseases" not in raw:
        raise DataError(f'catalog {path} must be an object with "symptoms" and "diseases" lists')
    return Catalog(symptoms=tuple(raw["symptoms"]), diseases=tuple(raw["diseases"]))


def save_catalog(catalog: Catalog, path: str | Path) -> None:
    payload = {"symptoms": list(catalog.symptoms), "diseases": list(catalog.diseases)}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Knowledge matrix I/O


def load_knowledge_matrix(path: str | Path, catalog: Catalog) -> KnowledgeMatrix:
    """Load a headered 0/1 CSV and align it to the catalog's index order."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read knowledge matrix {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"knowledge matrix {path} has no data rows")

    header = [cell.strip() for cell in rows[0][1:]]
    if sorted(header) != sorted(catalog.diseases):
        raise DataError(f"knowledge matrix {path}: disease header does not match catalog")
    col_of = {name: k for k, name in enumerate(header)}

    entries = np.zeros((catalog.m, catalog.n))
    seen: set[str] = set()
    for row in rows[1:]:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        name = row[0].strip()
        i = catalog.symptom_index(name)
        if name in seen:
            raise DataError(f"knowledge matrix {path}: duplicate symptom row {name!r}")
        seen.add(name)
        cells = [c.strip() for c in row[1:]]
        if len(cells) != catalog.n:
            raise DataError(f"knowledge matrix {path}: row {name!r} has {len(cells)} cells, expected {catalog.n}")
        for j, disease in enumerate(catalog.diseases):
            cell = cells[col_of[disease]]
            if cell not in ("0", "1"):
                raise DataError(f"knowledge matrix {path}: non-binary entry {cell!r} for ({name}, {disease})")
            entries[i, j] = float(cell)
    if len(seen) != catalog.m:
        absent = sorted(set(catalog.symptoms) - seen)
        raise DataError(f"knowledge matrix {path}: missing symptom row(s): {', '.join(absent)}")
    return KnowledgeMatrix(entries)


def save_knowledge_matrix(matrix: KnowledgeMatrix, catalog: Catalog, path: str | Path) -> None:
    if matrix.m != catalog.m or matrix.n != catalog.n:
        raise DataError(f"matrix {matrix.m}x{matrix.n} does not fit catalog {catalog.m}x{catalog.n}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["symptom", *catalog.diseases])
        for i, name in enumerate(catalog.symptoms):
            writer.writerow([name, *(str(int(v)) for v in matrix.entries[i])])


# ---------------------------------------------------------------------------
# Observations and vignettes


def encode_observation(
    present: Iterable[str],
    absent: Iterable[str],
    catalog: Catalog,
    mode: AbsenceMode = AbsenceMode.ASSUME_ABSENT,
) -> SymptomObservation:
    """Build an observation vector from symptom name lists.

    Unmentioned symptoms become -1 under assume-absent and missing under
    treat-missing.  Name lists are order-insensitive; a name listed both
    present and absent is a contradiction.
    """
    mode = AbsenceMode(mode)
    present_idx = {catalog.symptom_index(n) for n in present}
    absent_idx = {catalog.symptom_index(n) for n in absent}
    overlap = present_idx & absent_idx
    if overlap:
        names = ", ".join(catalog.symptoms[i] for i in sorted(overlap))
        raise DataError(f"symptom(s) listed both present and absent: {names}")
    fill = -1 if mode is AbsenceMode.ASSUME_ABSENT else MISSING
    values = np.full(catalog.m, fill, dtype=np.int8)
    values[sorted(present_idx)] = 1
    values[sorted(absent_idx)] = -1
    return SymptomObservation(values)


def decode_observation(obs: SymptomObservation, catalog: Catalog) -> tuple[list[str], list[str]]:
    """Return (present, absent) name lists; missing entries appear in neither."""
    if obs.m != catalog.m:
        raise DataError(f"observation length {obs.m} does not match catalog M={catalog.m}")
    present = [catalog.symptoms[i] for i in np.flatnonzero(obs.values == 1)]
    absent = [catalog.symptoms[i] for i in np.flatnonzero(obs.values == -1)]
    return present, absent


def load_vignettes(
    path: str | Path,
    catalog: Catalog,
    mode: AbsenceMode = AbsenceMode.ASSUME_ABSENT,
) -> list[Vignette]:
    """Load a vignettes JSONL file.

    Every line must name at least one symptom; the diagnosis name is resolved
    against the catalog.
    """
    vignettes: list[Vignette] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read vignettes {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if "diagnosis" not in raw:
            raise DataError(f"{path}:{lineno}: missing diagnosis")
        obs = encode_observation(raw.get("present", []), raw.get("absent", []), catalog, mode)
        if obs.num_observed == 0:
            raise DataError(f"{path}:{lineno}: vignette reports no symptoms")
        vignettes.append(Vignette(observation=obs, truth_index=catalog.disease_index(raw["diagnosis"])))
    return vignettes


def save_vignettes(vignettes: Sequence[Vignette], catalog: Catalog, path: str | Path) -> None:
    """Write vignettes as JSONL, listing all non-missing entries explicitly."""
    lines = []
    for vig in vignettes:
        present, absent = decode_observation(vig.observation, catalog)
        payload = {"present": present, "absent": absent, "diagnosis": catalog.diseases[vig.truth_index]}
        lines.append(json.dumps(payload))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# ---------------------------------------------------------------------------
# SNR bookkeeping


def snr_to_noise_precision(snr_db: float, signal_energy: float, m: int) -> NoiseModel:
    """Derive the noise precision that realizes a target SNR.

    ``signal_energy`` is the mean of ||A d||^2 over the dataset; the returned
    precision makes E||A d||^2 / (M sigma_w^2) equal 10^(snr_db/10).
    """
    if not math.isfinite(snr_db):
        raise DataError(f"snr_db must be finite, got {snr_db}")
    if not signal_energy > 0:
        raise DataError(f"signal energy must be positive, got {signal_energy}")
    precision = m * 10.0 ** (snr_db / 10.0) / signal_energy
    return NoiseModel(noise_precision=precision, snr_db=snr_db)


def default_signal_energy(matrix: KnowledgeMatrix) -> float:
    """Mean squared column norm: the expected ||A d||^2 for a uniform one-hot d."""
    return float(matrix.column_energies().mean())


# ---------------------------------------------------------------------------
# Bundled demo data (synthetic matrix; illustrative only, not clinical advice)


def demo_catalog_path() -> Path:
    return Path(str(resources.files("ampdx").joinpath("data/demo_catalog.json")))


def demo_knowledge_path() -> Path:
    return Path(str(resources.files("ampdx").joinpath("data/demo_knowledge.csv")))


def load_demo() -> tuple[Catalog, KnowledgeMatrix]:
    catalog = load_catalog(demo_catalog_path())
    return catalog, load_knowledge_matrix(demo_knowledge_path(), catalog)
