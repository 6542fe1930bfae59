import numpy as np
import pytest

from clinpm import staging
from clinpm.eventlog import EventLog, to_csv
from clinpm.staging import (
    CKD_OUTCOME,
    INFECTION_PROGRESSION,
    KIDNEY_FUNCTION,
    ORGAN_DAMAGE,
    BaselineMissing,
    MeasurementRow,
    MissingMeasurement,
    NegativeValue,
    RegistryEvent,
    WrongModel,
    ckd_outcome_events,
    classify_infection_state,
    classify_kidney_state,
    classify_organ_state,
    derive_state_events,
    derive_state_log,
    load_measurements,
)
from clinpm.synthetic import example_vitals_csv, rows_to_csv, synthetic_vitals

from .conftest import csv_bytes, ts
from .oracles import compress, infection_state_oracle


def row(h=0, case="c1", **kw):
    return MeasurementRow(case, ts(h), **kw)


# thresholds as printed in the source publication
def test_reference_thresholds():
    assert dict(INFECTION_PROGRESSION.thresholds) == {"temp_low": 36.0, "temp_high": 37.5,
                                                      "wbc_high": 12000.0, "wbc_low": 4000.0}
    assert dict(ORGAN_DAMAGE.thresholds) == {"troponin": 0.04, "creatinine": 1.3, "ast": 40.0}
    assert classify_kidney_state(row(egfr_mL_min=45)) == classify_kidney_state(row(egfr_mL_min=59)) == "G3A"
    assert classify_kidney_state(row(egfr_mL_min=30)) == classify_kidney_state(row(egfr_mL_min=44)) == "G3B"
    assert len(INFECTION_PROGRESSION.state_vocabulary) == 7
    assert len(ORGAN_DAMAGE.state_vocabulary) == 9


@pytest.mark.parametrize("kw,expected", [
    (dict(temperature_c=35.0, wbc_per_uL=8000), "Low Temperature"),
    (dict(temperature_c=38.0, wbc_per_uL=13000), "Infection + High Temperature"),
    (dict(temperature_c=36.0), "Normal Temperature"),
    (dict(temperature_c=37.5, wbc_per_uL=3000), "Infection + Normal Temperature"),
    (dict(temperature_c=35.9, wbc_per_uL=12001), "Infection + Low Temperature"),
    (dict(temperature_c=37.0, sepsis_label=True), "Sepsis"),
    (dict(sepsis_label=True), "Sepsis"),
])
def test_infection_examples(kw, expected):
    assert classify_infection_state(row(**kw)) == expected


def test_infection_missing_temperature():
    with pytest.raises(MissingMeasurement):
        classify_infection_state(row(wbc_per_uL=8000))
    with pytest.raises(MissingMeasurement):
        classify_infection_state(row(wbc_per_uL=8000, sepsis_label=False))


@pytest.mark.parametrize("kw,expected", [
    (dict(troponin_ng_mL=0.05, creatinine_mg_dL=1.0, ast_iu_L=30), "Cardiac Damage"),
    (dict(troponin_ng_mL=0.02, creatinine_mg_dL=1.2, ast_iu_L=35), "Low Risk"),
    (dict(troponin_ng_mL=0.05, creatinine_mg_dL=1.5, ast_iu_L=45), "Multiorgan Damage"),
    (dict(creatinine_mg_dL=1.5, ast_iu_L=45), "Renal + Liver Damage"),
    (dict(troponin_ng_mL=0.05, ast_iu_L=41), "Liver + Cardiac Damage"),
    (dict(troponin_ng_mL=0.05, creatinine_mg_dL=1.31), "Renal + Cardiac Damage"),
    (dict(ast_iu_L=40.0), "Low Risk"),
    (dict(ast_iu_L=40.5), "Liver Damage"),
    (dict(creatinine_mg_dL=2.0), "Renal Damage"),
    (dict(troponin_ng_mL=1.0, sepsis_label=True), "Sepsis"),
])
def test_organ_examples(kw, expected):
    assert classify_organ_state(row(**kw)) == expected


def test_organ_requires_a_biomarker():
    with pytest.raises(MissingMeasurement):
        classify_organ_state(row(temperature_c=37.0))


def test_organ_vocabulary_closure():
    seen = set()
    for trop in (None, 0.01, 0.05):
        for crt in (None, 1.0, 1.5):
            for ast in (None, 30, 45):
                if trop is crt is ast is None:
                    continue
                seen.add(classify_organ_state(row(troponin_ng_mL=trop, creatinine_mg_dL=crt, ast_iu_L=ast)))
    assert seen == set(ORGAN_DAMAGE.state_vocabulary) - {"Sepsis"}


@pytest.mark.parametrize("egfr,expected", [(50, "G3A"), (40, "G3B"), (60, "G1 or G2"), (29.9, "G4 or G5"),
                                           (0, "G4 or G5"), (120, "G1 or G2")])
def test_kidney_examples(egfr, expected):
    assert classify_kidney_state(row(egfr_mL_min=egfr)) == expected


def test_kidney_errors():
    with pytest.raises(MissingMeasurement):
        classify_kidney_state(row(temperature_c=37.0))
    with pytest.raises(NegativeValue):
        classify_kidney_state(row(egfr_mL_min=-1))


def test_kidney_monotone_in_egfr():
    severity = {"G1 or G2": 0, "G3A": 1, "G3B": 2, "G4 or G5": 3}
    values = [severity[classify_kidney_state(row(egfr_mL_min=e / 10))] for e in range(0, 1500)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_wrong_model_rejected():
    with pytest.raises(WrongModel):
        classify_infection_state(row(temperature_c=37.0), ORGAN_DAMAGE)


def test_row_needs_a_value():
    with pytest.raises(ValueError):
        MeasurementRow("c1", ts(0))


def test_derive_compresses_and_stops_at_sepsis():
    temps = [37.0, 37.0, 38.0, 38.2]
    rows = [row(h, temperature_c=t) for h, t in enumerate(temps)]
    rows.append(row(4, temperature_c=38.0, sepsis_label=True))
    rows.append(row(5, temperature_c=35.0))
    log = derive_state_log(rows, INFECTION_PROGRESSION)
    assert log.traces["c1"].activities == ("Normal Temperature", "High Temperature", "Sepsis")
    assert [e.timestamp for e in log.traces["c1"]] == [ts(0), ts(2), ts(4)]


def test_derive_empty():
    assert len(derive_state_log([], INFECTION_PROGRESSION)) == 0


def test_derive_sorts_rows_per_case():
    rows = [row(2, "b", temperature_c=38.0), row(0, "a", temperature_c=35.0), row(0, "b", temperature_c=37.0),
            row(1, "a", temperature_c=37.0)]
    log = derive_state_log(rows, INFECTION_PROGRESSION)
    assert log.traces["a"].activities == ("Low Temperature", "Normal Temperature")
    assert log.traces["b"].activities == ("Normal Temperature", "High Temperature")


def test_derive_error_carries_row_position():
    rows = [row(0, temperature_c=37.0), row(1, wbc_per_uL=9000)]
    with pytest.raises(MissingMeasurement) as exc:
        derive_state_events(rows, INFECTION_PROGRESSION)
    assert exc.value.row == 1
    events = derive_state_events(rows, INFECTION_PROGRESSION, skip_missing=True)
    assert [e.state_label for e in events] == ["Normal Temperature"]


def test_derive_matches_classify_then_dedup_oracle_200_cases():
    rng = np.random.default_rng(3)
    rows, expected = [], {}
    for c in range(200):
        case = f"case{c:03d}"
        labels = []
        for h in range(int(rng.integers(1, 15))):
            temp = round(float(rng.uniform(34.5, 39.5)), 1)
            wbc = None if rng.random() < 0.2 else float(rng.integers(2000, 16000))
            sepsis = bool(rng.random() < 0.04)
            rows.append(row(h, case, temperature_c=temp, wbc_per_uL=wbc, sepsis_label=sepsis))
            labels.append(infection_state_oracle(temp, wbc, sepsis))
        deduped = compress(labels)
        if "Sepsis" in deduped:
            deduped = deduped[:deduped.index("Sepsis") + 1]
        expected[case] = tuple(deduped)
    order = rng.permutation(len(rows))
    log = derive_state_log([rows[i] for i in order], INFECTION_PROGRESSION)
    assert {c: t.activities for c, t in log.traces.items()} == expected
    for trace in log:
        acts = trace.activities
        assert all(a != b for a, b in zip(acts, acts[1:]))
        assert "Sepsis" not in acts[:-1]


def test_derive_is_deterministic():
    rows = load_measurements(example_vitals_csv())
    a = to_csv(derive_state_log(rows, INFECTION_PROGRESSION))
    b = to_csv(derive_state_log(list(reversed(rows)), INFECTION_PROGRESSION))
    assert a == b


def test_derive_kidney_and_organ():
    rows = [row(0, egfr_mL_min=70), row(1, egfr_mL_min=50), row(2, egfr_mL_min=52), row(3, egfr_mL_min=20)]
    assert derive_state_log(rows, KIDNEY_FUNCTION).traces["c1"].activities == ("G1 or G2", "G3A", "G4 or G5")
    rows = [row(0, troponin_ng_mL=0.01), row(1, troponin_ng_mL=0.06)]
    assert derive_state_log(rows, ORGAN_DAMAGE).traces["c1"].activities == ("Low Risk", "Cardiac Damage")


def test_ckd_decline_at_41():
    rows = [row(h, egfr_mL_min=e) for h, e in enumerate([58, 45, 41])]
    events = ckd_outcome_events(rows, 60.0)["c1"]
    assert [(e.state_label, e.entered_at) for e in events] == [("Decline30%", ts(2))]


def test_ckd_threshold_is_inclusive():
    rows = [row(0, egfr_mL_min=42.0)]
    assert [e.state_label for e in ckd_outcome_events(rows, 60.0)["c1"]] == ["Decline30%"]


def test_ckd_no_decline():
    rows = [row(h, egfr_mL_min=e) for h, e in enumerate([59, 50, 43, 44])]
    assert ckd_outcome_events(rows, 60.0)["c1"] == []


def test_ckd_registry_and_death_terminal():
    rows = [
        row(0, egfr_mL_min=60, registry_event=RegistryEvent.DRUG_INITIATE),
        row(1, egfr_mL_min=40),
        row(2, registry_event=RegistryEvent.KRT),
        row(3, registry_event=RegistryEvent.DEATH),
        row(4, egfr_mL_min=10, registry_event=RegistryEvent.KRT),
    ]
    events = ckd_outcome_events(rows, 60.0)["c1"]
    assert [e.state_label for e in events] == ["Drug Initiate", "Decline30%", "KRT", "Death"]


def test_ckd_death_mid_series_ignores_later_decline():
    rows = [row(0, egfr_mL_min=60), row(1, registry_event=RegistryEvent.DEATH), row(2, egfr_mL_min=10)]
    assert [e.state_label for e in ckd_outcome_events(rows, 60.0)["c1"]] == ["Death"]


def test_ckd_baseline_variants():
    rows = [row(0, "a", egfr_mL_min=80), row(1, "a", egfr_mL_min=55), row(0, "b", egfr_mL_min=50),
            row(1, "b", egfr_mL_min=30)]
    per_case = ckd_outcome_events(rows, None)
    assert [e.state_label for e in per_case["a"]] == ["Decline30%"]  # 55 <= 56
    assert [e.state_label for e in per_case["b"]] == ["Decline30%"]  # 30 <= 35
    per_case = ckd_outcome_events(rows, {"a": 100.0, "b": 40.0})
    assert [e.entered_at for e in per_case["a"]] == [ts(1)]  # 80 > 70, 55 <= 70
    assert per_case["b"] == []
    with pytest.raises(BaselineMissing):
        ckd_outcome_events(rows, 0.0)
    with pytest.raises(BaselineMissing):
        ckd_outcome_events(rows, {"a": 60.0})


def test_derive_ckd_uses_first_reading():
    rows = [row(0, egfr_mL_min=60), row(1, egfr_mL_min=42)]
    assert [e.state_label for e in derive_state_events(rows, CKD_OUTCOME)] == ["Decline30%"]


def test_load_measurements_columns_and_blanks():
    raw = csv_bytes("case_id,timestamp,temperature,wbc,sepsis_label,registry_event",
                    "c1,2024-01-01T00:00:00,37.1,,0,", "c1,2024-01-01T01:00:00,,,,",
                    "c1,2024-01-01T02:00:00,,,,Death")
    rows = load_measurements(raw)
    assert len(rows) == 2
    assert rows[0].temperature_c == 37.1 and rows[0].wbc_per_uL is None and rows[0].sepsis_label is False
    assert rows[1].registry_event is RegistryEvent.DEATH


def test_load_measurements_errors():
    with pytest.raises(staging.StagingError):
        load_measurements(csv_bytes("patient,timestamp,temperature", "c1,2024-01-01,37"))
    with pytest.raises(staging.StagingError):
        load_measurements(csv_bytes("case_id,timestamp,temperature", "c1,2024-01-01,warm"))


def test_shipped_fixture_matches_generator():
    assert example_vitals_csv() == rows_to_csv(synthetic_vitals())


@pytest.mark.parametrize("model", [INFECTION_PROGRESSION, ORGAN_DAMAGE])
def test_fixture_vocabulary_closure(model):
    log = derive_state_log(load_measurements(example_vitals_csv()), model, skip_missing=True)
    assert isinstance(log, EventLog) and log.n_events > 0
    assert {a for t in log for a in t.activities} <= set(model.state_vocabulary)
