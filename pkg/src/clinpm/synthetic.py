"""Seeded generators for synthetic vitals and random event logs (demos and tests)."""
from __future__ import annotations

import csv
import io
from datetime import datetime, timedelta, timezone
from importlib import resources

import numpy as np

from .eventlog import Event, EventLog, format_timestamp

EPOCH = datetime(2019, 1, 1, tzinfo=timezone.utc)


def synthetic_vitals(n_cases: int = 40, max_hours: int = 36, seed: int = 2019) -> list[dict[str, str]]:
    """Hourly temperature / WBC / organ markers per case with an occasional sepsis onset.

    Temperature follows a mean-reverting random walk around 37 C; a third of
    the cases drift upwards and may be labelled septic once fever and
    leukocytosis persist.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_cases):
        case = f"p{i:03d}"
        hours = int(rng.integers(6, max_hours + 1))
        septic_course = rng.random() < 0.35
        temp = float(rng.normal(37.0, 0.6))
        wbc = float(rng.normal(8000, 2500))
        trop, crt, ast = 0.02, 1.0, 30.0
        start = EPOCH + timedelta(hours=int(rng.integers(0, 24 * 30)))
        fever_hours = 0
        for h in range(hours):
            drift = 0.08 if septic_course else 0.0
            temp += 0.3 * (37.0 - temp) + drift + float(rng.normal(0, 0.45))
            wbc += 0.2 * (8000 - wbc) + (600 if septic_course else 0) + float(rng.normal(0, 1500))
            trop = max(0.0, trop + (0.004 if septic_course else 0.0) + float(rng.normal(0, 0.005)))
            crt = max(0.2, crt + (0.03 if septic_course else 0.0) + float(rng.normal(0, 0.05)))
            ast = max(5.0, ast + (1.2 if septic_course else 0.0) + float(rng.normal(0, 2.0)))
            fever_hours = fever_hours + 1 if (temp > 37.5 and wbc > 12000) else 0
            sepsis = septic_course and fever_hours >= 3
            rows.append({
                "case_id": case,
                "timestamp": format_timestamp(start + timedelta(hours=h)),
                "temperature": f"{temp:.1f}",
                "wbc": "" if rng.random() < 0.15 else f"{max(wbc, 500):.0f}",
                "troponin": f"{trop:.3f}",
                "creatinine": f"{crt:.2f}",
                "ast": f"{ast:.0f}",
                "sepsis_label": "1" if sepsis else "0",
            })
            if sepsis:
                break
    return rows


def rows_to_csv(rows: list[dict[str, str]]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def example_vitals_csv() -> bytes:
    """The shipped synthetic vitals fixture (generated by ``synthetic_vitals()`` with defaults)."""
    return resources.files("clinpm").joinpath("data", "synthetic_vitals.csv").read_bytes()


def random_sequences(rng: np.random.Generator, max_cases: int = 20, max_activities: int = 10,
                     max_length: int = 8, min_length: int = 1) -> list[list[str]]:
    n_acts = int(rng.integers(1, max_activities + 1))
    alphabet = [chr(ord("A") + i) for i in range(n_acts)]
    n_cases = int(rng.integers(1, max_cases + 1))
    return [[alphabet[int(k)] for k in rng.integers(0, n_acts, size=int(rng.integers(min_length, max_length + 1)))]
            for _ in range(n_cases)]


def random_log(rng: np.random.Generator, max_cases: int = 20, max_activities: int = 10,
               max_length: int = 8) -> EventLog:
    """Random log with irregular (possibly tied) integer-minute gaps between events."""
    events = []
    for i, seq in enumerate(random_sequences(rng, max_cases, max_activities, max_length)):
        t = EPOCH + timedelta(minutes=int(rng.integers(0, 10_000)))
        for act in seq:
            events.append(Event(f"case{i:02d}", act, t))
            t += timedelta(minutes=int(rng.integers(0, 300)))
    return EventLog.from_events(events)
