"""Clinical staging: threshold rules turning measurement rows into state-transition logs.

Four models are provided: infection progression (temperature x WBC, sepsis
label), organ damage (troponin / creatinine / AST), kidney function (eGFR
bands) and CKD outcomes (registry events plus a 30% eGFR decline rule).
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from datetime import datetime
from itertools import groupby
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

from .eventlog import CsvSource, Event, EventLog, _read_bytes, parse_timestamp


class StagingError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class MissingMeasurement(StagingError):
    pass


class NegativeValue(StagingError):
    pass


class BaselineMissing(StagingError):
    pass


class WrongModel(StagingError):
    pass


class ModelId(str, enum.Enum):
    INFECTION = "InfectionProgression"
    ORGAN = "OrganDamage"
    KIDNEY = "KidneyFunction"
    CKD = "CkdOutcome"


class RegistryEvent(str, enum.Enum):
    KRT = "KRT"
    DEATH = "Death"
    DECLINE30 = "Decline30"
    DRUG_INITIATE = "DrugInitiate"


@dataclass(frozen=True)
class MeasurementRow:
    case_id: str
    timestamp: datetime
    temperature_c: float | None = None
    wbc_per_uL: float | None = None
    troponin_ng_mL: float | None = None
    creatinine_mg_dL: float | None = None
    ast_iu_L: float | None = None
    egfr_mL_min: float | None = None
    sepsis_label: bool | None = None
    registry_event: RegistryEvent | None = None

    def __post_init__(self):
        values = (self.temperature_c, self.wbc_per_uL, self.troponin_ng_mL, self.creatinine_mg_dL,
                  self.ast_iu_L, self.egfr_mL_min, self.sepsis_label, self.registry_event)
        if all(v is None for v in values):
            raise ValueError(f"row for case {self.case_id!r} carries no measurement or label")


@dataclass(frozen=True)
class StagingModel:
    model_id: ModelId
    thresholds: Mapping[str, float]
    state_vocabulary: tuple[str, ...]
    terminal_states: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "thresholds", MappingProxyType(dict(self.thresholds)))


SEPSIS = "Sepsis"
DEATH = "Death"

INFECTION_PROGRESSION = StagingModel(
    ModelId.INFECTION,
    {"temp_low": 36.0, "temp_high": 37.5, "wbc_high": 12000.0, "wbc_low": 4000.0},
    ("Low Temperature", "Normal Temperature", "High Temperature",
     "Infection + Low Temperature", "Infection + Normal Temperature", "Infection + High Temperature",
     SEPSIS),
    frozenset({SEPSIS}),
)

ORGAN_DAMAGE = StagingModel(
    ModelId.ORGAN,
    {"troponin": 0.04, "creatinine": 1.3, "ast": 40.0},
    ("Low Risk", "Cardiac Damage", "Renal Damage", "Liver Damage", "Renal + Cardiac Damage",
     "Liver + Cardiac Damage", "Renal + Liver Damage", "Multiorgan Damage", SEPSIS),
    frozenset({SEPSIS}),
)

# Band lower bounds; a value belongs to the first band whose bound it reaches.
KIDNEY_FUNCTION = StagingModel(
    ModelId.KIDNEY,
    {"g1_g2_min": 60.0, "g3a_min": 45.0, "g3b_min": 30.0},
    ("G1 or G2", "G3A", "G3B", "G4 or G5"),
)

CKD_OUTCOME = StagingModel(
    ModelId.CKD,
    {"decline_fraction": 0.7},
    ("Drug Initiate", "Decline30%", "KRT", DEATH),
    frozenset({DEATH}),
)

MODELS = {m.model_id: m for m in (INFECTION_PROGRESSION, ORGAN_DAMAGE, KIDNEY_FUNCTION, CKD_OUTCOME)}


def _require(model: StagingModel, expected: ModelId) -> None:
    if model.model_id is not expected:
        raise WrongModel(f"expected a {expected.value} model, got {model.model_id.value}")


def classify_infection_state(row: MeasurementRow, model: StagingModel = INFECTION_PROGRESSION) -> str:
    _require(model, ModelId.INFECTION)
    if row.sepsis_label:
        return SEPSIS
    if row.temperature_c is None:
        raise MissingMeasurement("temperature absent")
    t = model.thresholds
    if row.temperature_c < t["temp_low"]:
        temp = "Low Temperature"
    elif row.temperature_c > t["temp_high"]:
        temp = "High Temperature"
    else:
        temp = "Normal Temperature"
    wbc = row.wbc_per_uL
    # absent WBC counts as no infection evidence
    if wbc is not None and (wbc > t["wbc_high"] or wbc < t["wbc_low"]):
        return f"Infection + {temp}"
    return temp


_ORGAN_LABELS = {
    frozenset(): "Low Risk",
    frozenset({"cardiac"}): "Cardiac Damage",
    frozenset({"renal"}): "Renal Damage",
    frozenset({"liver"}): "Liver Damage",
    frozenset({"renal", "cardiac"}): "Renal + Cardiac Damage",
    frozenset({"liver", "cardiac"}): "Liver + Cardiac Damage",
    frozenset({"renal", "liver"}): "Renal + Liver Damage",
    frozenset({"renal", "liver", "cardiac"}): "Multiorgan Damage",
}


def classify_organ_state(row: MeasurementRow, model: StagingModel = ORGAN_DAMAGE) -> str:
    _require(model, ModelId.ORGAN)
    if row.sepsis_label:
        return SEPSIS
    markers = (("cardiac", row.troponin_ng_mL, "troponin"),
               ("renal", row.creatinine_mg_dL, "creatinine"),
               ("liver", row.ast_iu_L, "ast"))
    if all(value is None for _, value, _ in markers):
        raise MissingMeasurement("no organ biomarker present")
    damaged = frozenset(system for system, value, key in markers
                        if value is not None and value > model.thresholds[key])
    return _ORGAN_LABELS[damaged]


def classify_kidney_state(row: MeasurementRow, model: StagingModel = KIDNEY_FUNCTION) -> str:
    _require(model, ModelId.KIDNEY)
    egfr = row.egfr_mL_min
    if egfr is None:
        raise MissingMeasurement("eGFR absent")
    if egfr < 0:
        raise NegativeValue(f"eGFR {egfr} is negative")
    t = model.thresholds
    if egfr >= t["g1_g2_min"]:
        return "G1 or G2"
    if egfr >= t["g3a_min"]:
        return "G3A"
    if egfr >= t["g3b_min"]:
        return "G3B"
    return "G4 or G5"


CLASSIFIERS: dict[ModelId, Callable[[MeasurementRow, StagingModel], str]] = {
    ModelId.INFECTION: classify_infection_state,
    ModelId.ORGAN: classify_organ_state,
    ModelId.KIDNEY: classify_kidney_state,
}


@dataclass(frozen=True)
class StateEvent:
    case_id: str
    state_label: str
    entered_at: datetime

    def to_event(self) -> Event:
        return Event(self.case_id, self.state_label, self.entered_at)


def _sorted_rows(rows: Iterable[MeasurementRow]) -> list[tuple[int, MeasurementRow]]:
    return sorted(enumerate(rows), key=lambda p: (p[1].case_id, p[1].timestamp))


def _compress(case_id: str, labelled: Iterable[tuple[datetime, str]], terminal: frozenset[str]) -> list[StateEvent]:
    out: list[StateEvent] = []
    for ts, label in labelled:
        if out and out[-1].state_label == label:
            continue
        out.append(StateEvent(case_id, label, ts))
        if label in terminal:
            break
    return out


def derive_state_events(rows: Iterable[MeasurementRow], model: StagingModel,
                        skip_missing: bool = False) -> list[StateEvent]:
    """Change-point state events for every case, ordered by (case_id, time).

    Each row is classified on its own values (no carry-forward). With
    ``skip_missing`` rows lacking the model's measurement are dropped instead
    of raising.
    """
    if model.model_id is ModelId.CKD:
        per_case = ckd_outcome_events(rows, baseline_egfr=None)
        return [ev for case in sorted(per_case) for ev in per_case[case]]
    classify = CLASSIFIERS[model.model_id]
    events: list[StateEvent] = []
    for case_id, group in groupby(_sorted_rows(rows), key=lambda p: p[1].case_id):
        labelled = []
        for position, row in group:
            try:
                labelled.append((row.timestamp, classify(row, model)))
            except MissingMeasurement as exc:
                if skip_missing:
                    continue
                raise type(exc)(str(exc), row=position) from exc
            except StagingError as exc:
                raise type(exc)(str(exc), row=position) from exc
        events.extend(_compress(case_id, labelled, model.terminal_states))
    return events


def derive_state_log(rows: Iterable[MeasurementRow], model: StagingModel,
                     skip_missing: bool = False) -> EventLog:
    return EventLog.from_events(e.to_event() for e in derive_state_events(rows, model, skip_missing))


_REGISTRY_LABELS = {
    RegistryEvent.DRUG_INITIATE: "Drug Initiate",
    RegistryEvent.DECLINE30: "Decline30%",
    RegistryEvent.KRT: "KRT",
    RegistryEvent.DEATH: DEATH,
}


def ckd_outcome_events(rows: Iterable[MeasurementRow],
                       baseline_egfr: float | Mapping[str, float] | None,
                       model: StagingModel = CKD_OUTCOME) -> dict[str, list[StateEvent]]:
    """Outcome events per case.

    ``baseline_egfr`` may be one number for all cases, a per-case mapping, or
    ``None`` to use each case's first eGFR reading. A ``Decline30%`` event is
    emitted once, at the first reading at or below ``0.7 x baseline``;
    registry events pass through in time order and ``Death`` ends the case.
    """
    _require(model, ModelId.CKD)
    factor = model.thresholds["decline_fraction"]
    result: dict[str, list[StateEvent]] = {}
    for case_id, group in groupby(_sorted_rows(rows), key=lambda p: p[1].case_id):
        case_rows = [r for _, r in group]
        if isinstance(baseline_egfr, Mapping):
            baseline = baseline_egfr.get(case_id)
        elif baseline_egfr is None:
            baseline = next((r.egfr_mL_min for r in case_rows if r.egfr_mL_min is not None), None)
        else:
            baseline = baseline_egfr
        if baseline is None or not math.isfinite(baseline) or baseline <= 0:
            raise BaselineMissing(f"no positive baseline eGFR for case {case_id!r}")
        limit = factor * baseline
        out: list[StateEvent] = []
        declined = False

        def emit(label: str, ts: datetime) -> None:
            if not out or out[-1].state_label != label:
                out.append(StateEvent(case_id, label, ts))

        for row in case_rows:
            if not declined and row.egfr_mL_min is not None and row.egfr_mL_min <= limit:
                declined = True
                emit("Decline30%", row.timestamp)
            if row.registry_event is not None:
                label = _REGISTRY_LABELS[row.registry_event]
                if label == "Decline30%":
                    if declined:
                        continue
                    declined = True
                emit(label, row.timestamp)
                if label in model.terminal_states:
                    break
        result[case_id] = out
    return result


@dataclass(frozen=True)
class MeasurementColumns:
    case_id: str = "case_id"
    timestamp: str = "timestamp"
    temperature_c: str = "temperature"
    wbc_per_uL: str = "wbc"
    troponin_ng_mL: str = "troponin"
    creatinine_mg_dL: str = "creatinine"
    ast_iu_L: str = "ast"
    egfr_mL_min: str = "egfr"
    sepsis_label: str = "sepsis_label"
    registry_event: str = "registry_event"


_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_measurements(source: CsvSource, columns: MeasurementColumns | None = None) -> list[MeasurementRow]:
    """Read a wide-format measurement CSV (one row per case and time point).

    Only ``case_id`` and ``timestamp`` columns are mandatory; absent or blank
    measurement cells become ``None``. Rows without any value are skipped.
    """
    columns = columns or MeasurementColumns()
    text = _read_bytes(source).decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text, newline=""), strict=True)
    header = reader.fieldnames or []
    for required in (columns.case_id, columns.timestamp):
        if required not in header:
            raise StagingError(f"measurement column {required!r} not found in header")

    def cell(rec: dict, name: str) -> str | None:
        value = rec.get(name)
        if value is None or not value.strip():
            return None
        return value.strip()

    rows = []
    numeric = ("temperature_c", "wbc_per_uL", "troponin_ng_mL", "creatinine_mg_dL", "ast_iu_L", "egfr_mL_min")
    for rowno, rec in enumerate(reader, start=2):
        try:
            values = {f: (float(v) if (v := cell(rec, getattr(columns, f))) is not None else None) for f in numeric}
            sepsis = cell(rec, columns.sepsis_label)
            registry = cell(rec, columns.registry_event)
            values["sepsis_label"] = _parse_bool(sepsis) if sepsis is not None else None
            values["registry_event"] = RegistryEvent(registry) if registry is not None else None
            case_id = cell(rec, columns.case_id)
            if case_id is None:
                raise ValueError("empty case id")
            timestamp = parse_timestamp(rec[columns.timestamp] or "")
        except ValueError as exc:
            raise StagingError(str(exc), row=rowno) from exc
        if all(v is None for v in values.values()):
            continue
        rows.append(MeasurementRow(case_id, timestamp, **values))
    return rows

