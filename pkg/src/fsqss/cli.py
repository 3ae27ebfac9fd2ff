"""Command-line scenario runner.

    fsqss defaults [--kind KIND]
    fsqss validate --config FILE
    fsqss run --config FILE --out DIR [--seed N] [--no-timestamp]

Exit status: 0 ok, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import os
import sys
from typing import Callable, Optional, Sequence

import numpy as np
import yaml

from . import grid as _grid
from . import linkbudget as lb
from . import mzi, protocol, qstate
from .config import ConfigError, Kind, Scenario, default_document, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class RuntimeFailure(Exception):
    pass


def _header(scenario: Scenario, timestamp: bool) -> str:
    lines = [
        f"# scenario: {scenario.name}",
        f"# kind: {scenario.kind.value}",
        f"# seed: {scenario.seed}",
    ]
    if timestamp:
        lines.append(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}")
    lines.append("# parameters: " + json.dumps(scenario.parameters, sort_keys=True))
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        if not math.isfinite(x):
            raise RuntimeFailure(f"non-finite value {x} in output")
        return f"{x:.10g}"
    return str(x)


def _table(columns: Sequence[str], rows) -> str:
    out = [",".join(columns)]
    for row in rows:
        out.append(",".join(_fmt(v) for v in row))
    return "\n".join(out) + "\n"


class _Writer:
    def __init__(self, out_dir: str, scenario: Scenario, timestamp: bool):
        self.out_dir = out_dir
        self.header = _header(scenario, timestamp)
        self.written: list[str] = []

    def write(self, filename: str, body: str, header: bool = True) -> None:
        path = os.path.join(self.out_dir, filename)
        try:
            with open(path, "w", newline="") as fh:
                if header:
                    fh.write(self.header)
                fh.write(body)
        except OSError as exc:
            raise RuntimeFailure(f"cannot write {path}: {exc.strerror}") from exc
        self.written.append(path)

    def summary(self, scenario: Scenario, results: dict, timestamp: bool) -> None:
        doc = {"resolved": scenario.resolved(), "results": results}
        if timestamp:
            doc["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        self.write("summary.yaml", yaml.safe_dump(doc, sort_keys=False), header=False)


# -- scenario kinds ----------------------------------------------------------


def _run_table1(s: Scenario, w: _Writer) -> dict:
    vis = s.parameters["table1"]["visibilities"]
    labels = {"phi+": qstate.PHI_PLUS, "phi-": qstate.PHI_MINUS,
              "varphi+": qstate.VARPHI_PLUS, "varphi-": qstate.VARPHI_MINUS}
    state_rows = []
    vsets = {}
    for name, label in labels.items():
        vset = qstate.VisibilitySet(**vis.get(name, {}))
        vsets[name] = vset
        try:
            fid = qstate.fidelity_from_visibilities(label, vset)
        except qstate.MissingVisibilityError:
            fid = None
        cells = [getattr(vset, k) for k in ("v_xx", "v_yy", "v_xy", "v_yx", "v_zz")]
        state_rows.append([name] + ["" if v is None else float(v) for v in cells] + ["" if fid is None else fid])
    w.write("table1_states.csv", _table(("state", "v_xx", "v_yy", "v_xy", "v_yx", "v_zz", "fidelity"), state_rows))

    pairs = [
        ("XXphi", "v_xx", "phi", 1),
        ("YYphi", "v_yy", "phi", -1),
        ("XYvarphi", "v_xy", "varphi", 1),
        ("YXvarphi", "v_yx", "varphi", 1),
    ]
    combo_rows = []
    results = {}
    for name, key, fam, eps_ideal in pairs:
        v_plus, = vsets[f"{fam}+"].require(key)
        v_minus, = vsets[f"{fam}-"].require(key)
        eps = qstate.correlation_parameter(v_plus, v_minus)
        q = qstate.qber_from_epsilon(eps)
        r = qstate.key_fraction(q)
        combo_rows.append([name, eps_ideal, eps, 100 * q, r])
        results[name] = {"epsilon": eps, "qber": q, "r_inf": r}
    w.write("table1_combos.csv", _table(("combo", "eps_ideal", "epsilon", "qber_pct", "r_inf"), combo_rows))
    return results


_RATE_COLUMNS = ("singles", "R_acc", "C_true", "Q", "r_inf", "key_rate")


def _rate_row(r: lb.RateReport) -> list:
    return [r.singles, r.accidental_rate, r.true_coincidence_rate, r.qber, r.key_fraction, r.key_rate]


def _run_sweep_distance(s: Scenario, w: _Writer) -> dict:
    lengths = [float(x) for x in s.parameters["sweep"]["lengths_km"]]
    reports = lb.sweep_distance(s.rate_params(), lengths)
    w.write("sweep_distance.csv", _table(("L_km",) + _RATE_COLUMNS, ([L] + _rate_row(r) for L, r in zip(lengths, reports))))
    return {"key_rate": {L: r.key_rate for L, r in zip(lengths, reports)}}


def _run_sweep_users(s: Scenario, w: _Writer) -> dict:
    lo, hi = (int(x) for x in s.parameters["sweep"]["n_range"])
    ns = list(range(lo, hi + 1))
    params = s.rate_params()
    reports = lb.sweep_users(params, ns)
    w.write("sweep_users.csv", _table(("n_mux",) + _RATE_COLUMNS, ([n] + _rate_row(r) for n, r in zip(ns, reports))))
    best = lb.max_users_positive_key(params, ns)
    return {"max_users_positive_key": best}


def _run_session(s: Scenario, w: _Writer) -> dict:
    sess = s.parameters["session"]
    v_eff = float(sess["v_eff"])
    p_acc = float(sess["p_accidental"])
    if sess["use_link_budget"]:
        report = lb.key_rate(s.rate_params())
        p_acc = lb.accidental_probability(report)
        v_eff = 1.0 - 2.0 * s.parameters["link"]["e_meas"]
    n_rounds = int(sess["n_rounds"])
    parts = int(sess["partitions"])
    children = np.random.SeedSequence(s.seed).spawn(parts)
    sizes = [n_rounds // parts + (i < n_rounds % parts) for i in range(parts)]
    buf = io.StringIO()
    stats = protocol.SessionStats()
    start = 0
    for i, (child, size) in enumerate(zip(children, sizes)):
        tr = protocol.simulate_session(
            size, np.random.default_rng(child), v_eff=v_eff, mzi_phase=float(sess["mzi_phase"]),
            p_accidental=p_acc, channel_j=float(sess["channel_j"]), first_round_id=start,
        )
        if i == 0:
            tr.write_csv(buf)
        else:
            tmp = io.StringIO()
            tr.write_csv(tmp)
            buf.write(tmp.getvalue().split("\n", 1)[1])
        stats = stats + tr.stats()
        start += size
    w.write("transcript.csv", buf.getvalue())
    summary = stats.summary()
    summary["abort"] = protocol.abort_check(stats, float(sess["abort_threshold"]))
    summary["v_eff_used"] = v_eff
    summary["p_accidental_used"] = p_acc
    return {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in summary.items()}


def _run_stabilizer(s: Scenario, w: _Writer) -> dict:
    run_p = s.parameters["stabilizer_run"]
    rng = np.random.default_rng(s.seed)
    run = mzi.run_stabilized_session(
        float(run_p["duration"]), s.drift(), s.stabilizer(), float(run_p["v_eff"]), rng,
        initial_phase=float(run_p["initial_phase"]),
    )
    buf = io.StringIO()
    run.write_csv(buf)
    w.write("stabilizer.csv", buf.getvalue())
    return {
        "mean_visibility": run.mean_visibility,
        "mean_abs_epsilon": run.mean_abs_epsilon,
        "fraction_outside_3_dither": run.fraction_outside(3.0),
    }


def _run_plan(s: Scenario, w: _Writer) -> dict:
    p = s.parameters["plan"]
    try:
        plan = _grid.allocate_fully_connected(s.grid(), int(p["n_users"]), reserved=p["reserved"])
    except _grid.InsufficientChannelsError as exc:
        raise RuntimeFailure(str(exc)) from exc
    w.write("plan.yaml", plan.to_yaml(), header=True)
    return {"n_assignments": len(plan.assignments), "available_pairs": _grid.available_pair_count(s.grid())}


RUNNERS: dict[Kind, Callable[[Scenario, _Writer], dict]] = {
    Kind.TABLE1: _run_table1,
    Kind.SWEEP_DISTANCE: _run_sweep_distance,
    Kind.SWEEP_USERS: _run_sweep_users,
    Kind.SESSION: _run_session,
    Kind.STABILIZER: _run_stabilizer,
    Kind.PLAN: _run_plan,
}


def run(scenario: Scenario, out_dir: str, timestamp: bool = True) -> dict:
    """Execute a scenario, writing its tables and ``summary.yaml`` into ``out_dir``."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise RuntimeFailure(f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    w = _Writer(out_dir, scenario, timestamp)
    results = RUNNERS[scenario.kind](scenario, w)
    w.summary(scenario, results, timestamp)
    return results


# -- entry point -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fsqss", description="Multiplexed secret-sharing scenarios")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--no-timestamp", action="store_true")

    p_val = sub.add_parser("validate", help="check a scenario without running it")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--seed", type=int, default=None)

    p_def = sub.add_parser("defaults", help="print a fully populated scenario file")
    p_def.add_argument("--kind", default="TABLE1", choices=[k.value for k in Kind])
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "defaults":
        sys.stdout.write(yaml.safe_dump(default_document(Kind(args.kind)), sort_keys=False))
        return EXIT_OK

    try:
        scenario = load_scenario(args.config, args.seed)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print("valid")
        sys.stdout.write(yaml.safe_dump(scenario.resolved(), sort_keys=False))
        return EXIT_OK

    try:
        results = run(scenario, args.out, timestamp=not args.no_timestamp)
    except (RuntimeFailure, ValueError, ZeroDivisionError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(results, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
