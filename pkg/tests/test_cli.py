import csv
import math
import os
import subprocess
import sys

import pytest
import yaml

from fsqss.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from fsqss.config import DEFAULTS, ConfigError, Kind, default_document, load_scenario, parse_scenario


def write_config(tmp_path, doc, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc) if not isinstance(doc, str) else doc)
    return str(path)


def scenario(kind, **sections):
    doc = {"scenario": {"name": f"test-{kind.lower()}", "kind": kind, "seed": 11}}
    doc.update(sections)
    return doc


def read_table(path):
    """Return (header comment lines, rows as dicts)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    return comments, list(csv.DictReader(body))


def run_cli(tmp_path, doc, *extra, out="out"):
    cfg = write_config(tmp_path, doc)
    out_dir = str(tmp_path / out)
    return main(["run", "--config", cfg, "--out", out_dir, "--no-timestamp", *extra]), out_dir


def all_numeric_cells_finite(path):
    _, rows = read_table(path)
    for row in rows:
        for value in row.values():
            try:
                x = float(value)
            except (TypeError, ValueError):
                continue
            if not math.isfinite(x):
                return False
    return True


class TestDefaults:
    @pytest.mark.parametrize("kind", [k.value for k in Kind])
    def test_defaults_round_trip(self, kind, capsys):
        assert main(["defaults", "--kind", kind]) == EXIT_OK
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["scenario"]["kind"] == kind
        assert set(DEFAULTS) <= set(doc)
        # the printed document is itself a valid scenario
        assert parse_scenario(doc).kind is Kind(kind)


class TestValidate:
    def test_valid_defaults(self, tmp_path, capsys):
        cfg = write_config(tmp_path, default_document(Kind.SESSION))
        assert main(["validate", "--config", cfg]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("valid")
        resolved = yaml.safe_load(out.split("\n", 1)[1])
        assert resolved["source"]["heralding_eta"] == 0.046

    def test_heralding_out_of_range(self, tmp_path, capsys):
        cfg = write_config(tmp_path, scenario("TABLE1", source={"heralding_eta": 1.5}))
        assert main(["validate", "--config", cfg]) == EXIT_CONFIG
        assert "SourceParams.heralding_eta" in capsys.readouterr().err

    def test_zero_dither(self, tmp_path, capsys):
        cfg = write_config(tmp_path, scenario("TABLE1", stabilizer={"dither_fraction": 0}))
        assert main(["validate", "--config", cfg]) == EXIT_CONFIG
        assert "dither_fraction" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, scenario("TABLE1", source={"brightnes": 1}))
        assert main(["validate", "--config", cfg]) == EXIT_CONFIG
        assert "unknown key source.brightnes" in capsys.readouterr().err

    def test_every_problem_reported(self):
        with pytest.raises(ConfigError) as info:
            parse_scenario(scenario("TABLE1", source={"heralding_eta": 2.0}, grid={"nope": 1}))
        assert len(info.value.problems) == 2

    def test_parse_error_location(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "scenario:\n  kind: TABLE1\n  name: [unclosed\n")
        assert main(["validate", "--config", cfg]) == EXIT_CONFIG
        assert "line" in capsys.readouterr().err

    def test_unknown_kind_and_missing_key_messages_differ(self, tmp_path, capsys):
        cfg = write_config(tmp_path, scenario("TELEPORT"))
        assert main(["validate", "--config", cfg]) == EXIT_CONFIG
        unknown = capsys.readouterr().err
        cfg = write_config(tmp_path, scenario("SESSION"))
        assert main(["validate", "--config", cfg]) == EXIT_CONFIG
        missing = capsys.readouterr().err
        assert "unknown scenario kind" in unknown
        assert "missing key session.n_rounds" in missing

    def test_seed_override(self, tmp_path):
        cfg = write_config(tmp_path, scenario("TABLE1"))
        assert load_scenario(cfg).seed == 11
        assert load_scenario(cfg, seed_override=99).seed == 99


class TestRun:
    def test_table1(self, tmp_path):
        status, out = run_cli(tmp_path, scenario("TABLE1"))
        assert status == EXIT_OK
        header, rows = read_table(os.path.join(out, "table1_combos.csv"))
        assert "# seed: 11" in header
        assert any(h.startswith("# parameters:") for h in header)
        eps = [float(r["epsilon"]) for r in rows]
        qber = [float(r["qber_pct"]) for r in rows]
        r_inf = [float(r["r_inf"]) for r in rows]
        assert eps == pytest.approx([0.86, -0.92, 0.92, 0.88], abs=0.005)
        assert qber == pytest.approx([7.1, 4.1, 3.8, 6.1], abs=0.15)
        assert r_inf == pytest.approx([0.26, 0.51, 0.53, 0.34], abs=0.015)
        _, states = read_table(os.path.join(out, "table1_states.csv"))
        phi_plus = next(r for r in states if r["state"] == "phi+")
        assert float(phi_plus["fidelity"]) == pytest.approx(0.930, abs=0.001)

    def test_sweep_users(self, tmp_path):
        status, out = run_cli(tmp_path, scenario("SWEEP_USERS", sweep={"n_range": [2, 20]}))
        assert status == EXIT_OK
        summary = yaml.safe_load(open(os.path.join(out, "summary.yaml")))
        assert 12 <= summary["results"]["max_users_positive_key"] <= 14
        _, rows = read_table(os.path.join(out, "sweep_users.csv"))
        assert [int(r["n_mux"]) for r in rows] == list(range(2, 21))

    def test_sweep_distance(self, tmp_path):
        status, out = run_cli(tmp_path, scenario("SWEEP_DISTANCE", sweep={"lengths_km": [0, 30, 60]}))
        assert status == EXIT_OK
        _, rows = read_table(os.path.join(out, "sweep_distance.csv"))
        assert float(rows[1]["key_rate"]) > 100

    def test_session(self, tmp_path):
        status, out = run_cli(tmp_path, scenario("SESSION", session={"n_rounds": 10_000}))
        assert status == EXIT_OK
        summary = yaml.safe_load(open(os.path.join(out, "summary.yaml")))["results"]
        assert summary["mean_qber"] == 0
        assert summary["sifted_fraction"] == pytest.approx(0.5, abs=0.02)
        assert summary["abort"] is False
        _, rows = read_table(os.path.join(out, "transcript.csv"))
        assert len(rows) == 10_000
        assert [int(r["round_id"]) for r in rows[:3]] == [0, 1, 2]

    def test_session_partitions_keep_round_ids(self, tmp_path):
        doc = scenario("SESSION", session={"n_rounds": 1001, "partitions": 3})
        status, out = run_cli(tmp_path, doc)
        assert status == EXIT_OK
        _, rows = read_table(os.path.join(out, "transcript.csv"))
        assert [int(r["round_id"]) for r in rows] == list(range(1001))

    def test_stabilizer(self, tmp_path):
        status, out = run_cli(tmp_path, scenario("STABILIZER", stabilizer_run={"duration": 5.0}))
        assert status == EXIT_OK
        _, rows = read_table(os.path.join(out, "stabilizer.csv"))
        assert len(rows) == 100

    def test_plan(self, tmp_path):
        status, out = run_cli(tmp_path, scenario("PLAN", plan={"n_users": 4}))
        assert status == EXIT_OK
        text = open(os.path.join(out, "plan.yaml")).read()
        assert "# seed: 11" in text
        assert len(yaml.safe_load(text)["assignments"]) == 6

    def test_plan_shortfall_is_runtime_error(self, tmp_path, capsys):
        status, _ = run_cli(tmp_path, scenario("PLAN", plan={"n_users": 8}))
        assert status == EXIT_RUNTIME
        assert "need 28" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        status, _ = run_cli(tmp_path, scenario("TABLE1"), out="blocker/sub")
        assert status == EXIT_RUNTIME
        assert "cannot create output directory" in capsys.readouterr().err


class TestReproducibility:
    KINDS = {
        "TABLE1": {},
        "SWEEP_DISTANCE": {"sweep": {"lengths_km": [0, 20, 40]}},
        "SWEEP_USERS": {"sweep": {"n_range": [2, 6]}},
        "SESSION": {"session": {"n_rounds": 2000, "v_eff": 0.9, "partitions": 2}},
        "STABILIZER": {"stabilizer_run": {"duration": 3.0}},
        "PLAN": {"plan": {"n_users": 3}},
    }

    @pytest.mark.parametrize("kind", sorted(KINDS))
    def test_byte_identical_and_finite(self, tmp_path, kind):
        doc = scenario(kind, **self.KINDS[kind])
        s1, out1 = run_cli(tmp_path, doc, out="a")
        s2, out2 = run_cli(tmp_path, doc, out="b")
        assert s1 == s2 == EXIT_OK
        files = sorted(os.listdir(out1))
        assert files == sorted(os.listdir(out2))
        for name in files:
            b1 = open(os.path.join(out1, name), "rb").read()
            assert b1 == open(os.path.join(out2, name), "rb").read()
            if name.endswith(".csv"):
                assert all_numeric_cells_finite(os.path.join(out1, name))

    def test_seed_flag_changes_session(self, tmp_path):
        doc = scenario("SESSION", session={"n_rounds": 500})
        _, out1 = run_cli(tmp_path, doc, out="a")
        _, out2 = run_cli(tmp_path, doc, "--seed", "12", out="b")
        t1 = open(os.path.join(out1, "transcript.csv")).read()
        t2 = open(os.path.join(out2, "transcript.csv")).read()
        assert "# seed: 12" in t2
        assert t1.split("\n", 4)[-1] != t2.split("\n", 4)[-1]

    def test_timestamp_only_when_requested(self, tmp_path):
        cfg = write_config(tmp_path, scenario("TABLE1"))
        out = str(tmp_path / "ts")
        assert main(["run", "--config", cfg, "--out", out]) == EXIT_OK
        header, _ = read_table(os.path.join(out, "table1_combos.csv"))
        assert any(h.startswith("# generated:") for h in header)


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fsqss", "defaults", "--kind", "PLAN"],
        capture_output=True, text=True, check=True,
    )
    assert "kind: PLAN" in proc.stdout
