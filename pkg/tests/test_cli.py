import json
import subprocess
import sys

import httpx
import pytest

from clinpm import staging
from clinpm.cli import Config, UsageError, main
from clinpm.eventlog import load_event_log, log_from_sequences, to_csv
from clinpm.llm import DEFAULT_CATALOG
from clinpm.synthetic import example_vitals_csv

from .conftest import SIX_TRACES, csv_bytes
from .dotparse import parse


@pytest.fixture
def vitals(tmp_path):
    path = tmp_path / "vitals.csv"
    path.write_bytes(example_vitals_csv())
    return path


@pytest.fixture
def six_csv(tmp_path):
    path = tmp_path / "six.csv"
    path.write_bytes(to_csv(log_from_sequences(SIX_TRACES)))
    return path


@pytest.fixture
def dfg_json(tmp_path, six_csv):
    assert main(["discover", str(six_csv), "--algorithm", "dfg", "-o", str(tmp_path / "model")]) == 0
    return tmp_path / "model" / "dfg.json"


@pytest.fixture
def offline_bundle(tmp_path, dfg_json):
    out = tmp_path / "reports"
    assert main(["report", str(dfg_json), "--offline", "--case-label", "Case T", "-o", str(out)]) == 0
    return out / "bundle.json"


# ---------------------------------------------------------------- ingest

def test_ingest_writes_log_and_quality(tmp_path, six_csv):
    out = tmp_path / "out"
    assert main(["ingest", str(six_csv), "-o", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["six.log.csv", "six.quality.json"]
    log, _ = load_event_log(out / "six.log.csv")
    assert [t.activities for t in log] == [tuple(s) for s in SIX_TRACES]
    assert json.loads((out / "six.quality.json").read_text())["n_events"] == 23


def test_ingest_missing_column_names_it(tmp_path, six_csv, capsys):
    assert main(["ingest", str(six_csv), "--activity-column", "event_name", "-o", str(tmp_path)]) == 2
    assert "event_name" in capsys.readouterr().err


def test_ingest_degenerate(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_bytes(csv_bytes("case_id,activity,timestamp", "c1,A,2024-01-01T00:00:00Z",
                               "c1,B,not-a-date", "c2,,2024-01-01T00:00:00Z"))
    assert main(["ingest", str(path), "-o", str(tmp_path)]) == 2
    assert "DegenerateInput" in capsys.readouterr().err
    assert not (tmp_path / "bad.log.csv").exists()


def test_ingest_missing_file(tmp_path):
    assert main(["ingest", str(tmp_path / "nope.csv")]) == 2


# ---------------------------------------------------------------- derive

@pytest.mark.parametrize("model,states", [("infection", staging.INFECTION_PROGRESSION.state_vocabulary),
                                          ("organ", staging.ORGAN_DAMAGE.state_vocabulary)])
def test_derive_vocabulary_closure(tmp_path, vitals, model, states):
    out = tmp_path / f"{model}.csv"
    assert main(["derive", str(vitals), "--model", model, "--skip-missing", "--output", str(out)]) == 0
    log, report = load_event_log(out)
    assert log.n_events > 0 and not report.issues
    assert set(report.activity_vocabulary) <= set(states)


def test_derive_default_output_name(tmp_path, vitals):
    assert main(["derive", str(vitals), "--model", "infection", "-o", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "vitals.infection.csv").exists()


def test_derive_unknown_model(vitals):
    with pytest.raises(SystemExit) as exc:
        main(["derive", str(vitals), "--model", "cardiac"])
    assert exc.value.code == 2


def test_derive_nothing_to_stage(tmp_path, vitals, capsys):
    # the vitals carry no eGFR column
    assert main(["derive", str(vitals), "--model", "kidney", "--skip-missing", "-o", str(tmp_path)]) == 2
    assert "no state events" in capsys.readouterr().err


def test_derive_ckd(tmp_path):
    path = tmp_path / "egfr.csv"
    path.write_bytes(csv_bytes("case_id,timestamp,egfr,registry_event", "k1,2024-01-01T00:00:00Z,80,DrugInitiate",
                               "k1,2024-02-01T00:00:00Z,50,", "k1,2024-03-01T00:00:00Z,,KRT"))
    assert main(["derive", str(path), "--model", "ckd", "--output", str(tmp_path / "ckd.csv")]) == 0
    log, _ = load_event_log(tmp_path / "ckd.csv")
    assert log.traces["k1"].activities == ("Drug Initiate", "Decline30%", "KRT")


# ---------------------------------------------------------------- discover

def test_discover_dfg_dot_has_eight_edges(tmp_path, dfg_json):
    g = parse((dfg_json.parent / "dfg.dot").read_text())
    assert len(g["edges"]) == 8
    doc = json.loads(dfg_json.read_text())
    assert doc["type"] == "dfg" and doc["bottlenecks"]["entries"]


def test_discover_inductive_single_leaf(tmp_path):
    path = tmp_path / "one.csv"
    path.write_bytes(to_csv(log_from_sequences([["A"]])))
    assert main(["discover", str(path), "--algorithm", "inductive", "-o", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "inductive.json").read_text())
    assert doc["tree"] == {"label": "A"}
    assert doc["text"] == "A"


def test_discover_alpha_and_heuristics(tmp_path, six_csv):
    assert main(["discover", str(six_csv), "--algorithm", "alpha", "-o", str(tmp_path)]) == 0
    parse((tmp_path / "alpha.dot").read_text())
    assert main(["discover", str(six_csv), "--algorithm", "heuristics", "--threshold", "0.5",
                 "-o", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "heuristics.json").read_text())["type"] == "heuristics_net"


def test_discover_bad_threshold(tmp_path, six_csv):
    assert main(["discover", str(six_csv), "--algorithm", "heuristics", "--threshold", "1.5",
                 "-o", str(tmp_path)]) == 2


@pytest.mark.parametrize("algo", ["alpha", "inductive", "dfg", "heuristics"])
def test_discover_empty_log(tmp_path, algo, capsys):
    path = tmp_path / "empty.csv"
    path.write_bytes(csv_bytes("case_id,activity,timestamp"))
    assert main(["discover", str(path), "--algorithm", algo, "-o", str(tmp_path)]) == 2


# ---------------------------------------------------------------- report

def test_report_offline_five_deterministic_files(tmp_path, dfg_json):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["report", str(dfg_json), "--offline", "-o", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]
    assert sorted(n for n in outs[0] if n.startswith("report_")) == sorted(
        f"report_{m.slug}.md" for m in DEFAULT_CATALOG)


def test_report_one_failure_isolated(tmp_path, dfg_json):
    out = tmp_path / "r"
    assert main(["report", str(dfg_json), "--offline", "--mock-fail", "x-ai/grok-4", "-o", str(out)]) == 0
    bundle = json.loads((out / "bundle.json").read_text())
    assert len(bundle["responses"]) == 4
    assert list(bundle["failures"]) == ["x-ai/grok-4"]
    assert len(list(out.glob("report_*.md"))) == 4


def test_report_all_fail_is_transport_error(tmp_path, dfg_json):
    args = ["report", str(dfg_json), "--offline", "-o", str(tmp_path)]
    for m in DEFAULT_CATALOG:
        args += ["--mock-fail", m.model_id]
    assert main(args) == 3


def test_report_live_without_key(tmp_path, dfg_json, monkeypatch, capsys):
    monkeypatch.delenv("OPENROUTER_API_KEY", raising=False)

    def no_network(*a, **k):
        raise AssertionError("network touched")

    monkeypatch.setattr(httpx.Client, "send", no_network)
    assert main(["report", str(dfg_json), "-o", str(tmp_path)]) == 3
    assert "AuthError" in capsys.readouterr().err
    assert not (tmp_path / "bundle.json").exists()


def test_report_unknown_model_and_type(tmp_path, dfg_json):
    assert main(["report", str(dfg_json), "--offline", "--models", "gpt-9", "-o", str(tmp_path)]) == 2
    bogus = tmp_path / "bogus.json"
    bogus.write_text('{"type": "bpmn"}')
    assert main(["report", str(bogus), "--offline", "-o", str(tmp_path)]) == 2


def test_report_from_petri_and_tree(tmp_path, six_csv):
    for algo in ("alpha", "inductive", "heuristics"):
        assert main(["discover", str(six_csv), "--algorithm", algo, "-o", str(tmp_path)]) == 0
        out = tmp_path / f"rep-{algo}"
        assert main(["report", str(tmp_path / f"{algo}.json"), "--offline", "--models", "Claude Sonnet-4,GPT-4.1",
                     "-o", str(out)]) == 0
        assert "A -> B" in (out / "prompt.txt").read_text()


def test_report_template_with_unknown_placeholder(tmp_path, dfg_json, capsys):
    tpl = tmp_path / "t.txt"
    tpl.write_text("[template_id]\nt\n[role_preamble]\nx\n[body]\n{patient_count}\n[output_contract]\ny\n")
    assert main(["report", str(dfg_json), "--offline", "--template", str(tpl), "-o", str(tmp_path)]) == 2
    assert "patient_count" in capsys.readouterr().err


# ---------------------------------------------------------------- orchestrate

def test_orchestrate_outputs(tmp_path, offline_bundle):
    out = tmp_path / "orch"
    assert main(["orchestrate", str(offline_bundle), "--offline", "--exclude-evaluator", "openai/gpt-4.1",
                 "-o", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["ledger.json", "orchestrated.md", "scores.json"]
    scores = json.loads((out / "scores.json").read_text())
    assert scores["excluded_evaluators"] == ["openai/gpt-4.1"]
    assert len(scores["scores"]) == 5 * 5
    assert {s["self_evaluation"] for s in scores["scores"]} == {True, False}
    ledger = json.loads((out / "ledger.json").read_text())
    assert {e["kind"] for e in ledger["entries"]} == {"report", "evaluation"}
    assert set(ledger["performance_cost_ratio"]) == {m.model_id for m in DEFAULT_CATALOG}
    assert "| Case T |" in (out / "orchestrated.md").read_text()


def test_orchestrate_quorum_monotone(tmp_path, offline_bundle):
    consensus = {}
    for q in ("0.5", "0.8"):
        out = tmp_path / q
        assert main(["orchestrate", str(offline_bundle), "--offline", "--quorum", q, "--evaluators",
                     "Claude Sonnet-4", "-o", str(out)]) == 0
        orch = json.loads((out / "scores.json").read_text())["orchestration"][0]
        consensus[q] = {(c["model_id"], c["text"]) for cl in orch["consensus_findings"] for c in cl["claims"]}
    assert consensus["0.8"] <= consensus["0.5"]
    assert consensus["0.5"]


def test_orchestrate_bad_quorum_or_similarity(tmp_path, offline_bundle):
    assert main(["orchestrate", str(offline_bundle), "--offline", "--quorum", "1.0", "-o", str(tmp_path)]) == 2
    assert main(["orchestrate", str(offline_bundle), "--offline", "--similarity", "0", "-o", str(tmp_path)]) == 2


def test_orchestrate_similarity_flag(tmp_path, offline_bundle):
    counts = {}
    for sim in ("0.6", "0.9"):
        out = tmp_path / sim
        assert main(["orchestrate", str(offline_bundle), "--offline", "--similarity", sim, "--evaluators",
                     "Claude Sonnet-4", "-o", str(out)]) == 0
        orch = json.loads((out / "scores.json").read_text())["orchestration"][0]
        counts[sim] = len(orch["disagreements"])
    assert counts["0.9"] <= counts["0.6"]


def test_orchestrate_empty_bundle(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"case_label": "x", "responses": [], "prompt_digest": "d", "failures": {}}))
    assert main(["orchestrate", str(empty), "--offline", "-o", str(tmp_path)]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["orchestrate", str(broken), "--offline", "-o", str(tmp_path)]) == 2


def test_orchestrate_live_without_key(tmp_path, offline_bundle, monkeypatch):
    monkeypatch.delenv("OPENROUTER_API_KEY", raising=False)
    assert main(["orchestrate", str(offline_bundle), "-o", str(tmp_path)]) == 3


def test_orchestrate_custom_rubric(tmp_path, offline_bundle):
    rubric = tmp_path / "rubric.json"
    rubric.write_text(json.dumps({"criteria": [{"name": "Accuracy", "weight": 0.5},
                                               {"name": "Clarity", "weight": 0.5}]}))
    out = tmp_path / "o"
    assert main(["orchestrate", str(offline_bundle), "--offline", "--rubric", str(rubric), "-o", str(out)]) == 0
    s = json.loads((out / "scores.json").read_text())["scores"][0]
    assert set(s["criterion_scores"]) == {"Accuracy", "Clarity"}
    rubric.write_text(json.dumps({"criteria": [{"name": "Accuracy", "weight": 0.7}]}))
    assert main(["orchestrate", str(offline_bundle), "--offline", "--rubric", str(rubric), "-o", str(out)]) == 2


# ---------------------------------------------------------------- config and entry point

def test_config_unknown_key(tmp_path, six_csv, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"output_dir": str(tmp_path), "max_paralel": 3}))
    assert main(["--config", str(cfg), "ingest", str(six_csv)]) == 2
    assert "max_paralel" in capsys.readouterr().err


def test_config_output_dir_and_exclusions(tmp_path, offline_bundle):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"output_dir": str(tmp_path / "cfgout"), "evaluator_exclusions": ["x-ai/grok-4"],
                               "max_parallel": 2}))
    assert main(["--config", str(cfg), "orchestrate", str(offline_bundle), "--offline"]) == 0
    scores = json.loads((tmp_path / "cfgout" / "scores.json").read_text())
    assert scores["excluded_evaluators"] == ["x-ai/grok-4"]


def test_config_model_override_prices(tmp_path, offline_bundle):
    assert Config.from_dict({"models": [{"model_id": "x-ai/grok-4", "input_price": 0.0, "output_price": 0.0}]}) \
        .catalog()[4].input_price == 0.0
    with pytest.raises(UsageError):
        Config.from_dict([])
    with pytest.raises(UsageError):
        Config.from_dict({"max_parallel": 0})


def test_internal_error_exit_code(tmp_path, six_csv, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("unexpected")

    monkeypatch.setattr("clinpm.cli.discover_dfg", boom)
    assert main(["discover", str(six_csv), "--algorithm", "dfg", "-o", str(tmp_path)]) == 4


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "clinpm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("ingest", "derive", "discover", "report", "orchestrate"):
        assert cmd in proc.stdout


def test_outputs_written_atomically(tmp_path, six_csv):
    out = tmp_path / "o"
    assert main(["ingest", str(six_csv), "-o", str(out)]) == 0
    assert not [p for p in out.iterdir() if p.name.endswith(".tmp")]
