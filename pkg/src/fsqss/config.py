"""Scenario files: YAML overlays on the module defaults.

A scenario file has a ``scenario`` header and any number of parameter
sections::

    scenario:
      name: lab-point
      kind: SWEEP_DISTANCE
      seed: 7
    source:
      heralding_eta: 0.046
    sweep:
      lengths_km: [0, 10, 20, 30, 40, 50, 60]

Unspecified keys take the values in :data:`DEFAULTS`.
"""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Any

import yaml

from .grid import GridSpec
from .linkbudget import DetectorParams, LinkParams, RateParams, SourceParams
from .mzi import DEFAULT_SIGMA_RW, DriftModel, StabilizerConfig


class ConfigError(Exception):
    """Invalid scenario file; ``problems`` lists every issue found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class Kind(enum.Enum):
    SESSION = "SESSION"
    TABLE1 = "TABLE1"
    SWEEP_DISTANCE = "SWEEP_DISTANCE"
    SWEEP_USERS = "SWEEP_USERS"
    STABILIZER = "STABILIZER"
    PLAN = "PLAN"


TABLE1_VISIBILITIES = {
    "phi+": {"v_xx": 0.853, "v_yy": -0.923, "v_zz": 0.944},
    "phi-": {"v_xx": -0.864, "v_yy": 0.913},
    "varphi+": {"v_xy": 0.930, "v_yx": 0.929},
    "varphi-": {"v_xy": -0.917, "v_yx": -0.826},
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "source": {"brightness_B": 4.7e6, "heralding_eta": 0.046},
    "detector": {"dead_time": 40e-9, "dark_rate_SDC": 500.0, "coincidence_window_tau": 100e-12},
    "link": {"alpha_db_per_km": 0.2, "length_km": 0.0, "noise_singles_Snoise": 0.0, "e_meas": 0.053},
    "network": {"n_mux": 2, "sift_q": 0.5},
    "grid": {"spacing": 0.2, "degeneracy_freq": 193.65, "total_bandwidth": 70.0},
    "drift": {"sigma_rw": DEFAULT_SIGMA_RW},
    "stabilizer": {
        "dither_fraction": 0.10,
        "update_rate": 20.0,
        "monitor_channel_j": 10,
        "rounds_per_estimate": 250,
        "significance": 3.0,
        "enabled": True,
    },
    "stabilizer_run": {"duration": 60.0, "v_eff": 1.0, "initial_phase": 0.0},
    "session": {
        "n_rounds": 10000,
        "v_eff": 1.0,
        "mzi_phase": 0.0,
        "p_accidental": 0.0,
        "use_link_budget": False,
        "channel_j": 11.5,
        "partitions": 1,
        "abort_threshold": 0.11,
    },
    "table1": {"visibilities": TABLE1_VISIBILITIES},
    "sweep": {"lengths_km": [0, 10, 20, 30, 40, 50, 60, 70, 80], "n_range": [2, 20]},
    "plan": {"n_users": 3, "reserved": [10]},
}

REQUIRED: dict[Kind, tuple[str, ...]] = {
    Kind.SESSION: ("session.n_rounds",),
    Kind.TABLE1: (),
    Kind.SWEEP_DISTANCE: ("sweep.lengths_km",),
    Kind.SWEEP_USERS: ("sweep.n_range",),
    Kind.STABILIZER: ("stabilizer_run.duration",),
    Kind.PLAN: ("plan.n_users",),
}

_SECTION_TYPES = {
    "source": "SourceParams",
    "detector": "DetectorParams",
    "link": "LinkParams",
    "network": "RateParams",
    "grid": "GridSpec",
    "drift": "DriftModel",
    "stabilizer": "StabilizerConfig",
}


@dataclass
class Scenario:
    name: str
    kind: Kind
    seed: int
    parameters: dict = field(default_factory=dict)

    # typed views -----------------------------------------------------------
    def rate_params(self) -> RateParams:
        p = self.parameters
        link = LinkParams(**p["link"])
        return RateParams(
            source=SourceParams(**p["source"]),
            detector=DetectorParams(**p["detector"]),
            link_a=link,
            link_b=link,
            n_mux=int(p["network"]["n_mux"]),
            sift_q=float(p["network"]["sift_q"]),
        )

    def grid(self) -> GridSpec:
        return GridSpec(**self.parameters["grid"])

    def stabilizer(self) -> StabilizerConfig:
        return StabilizerConfig(**self.parameters["stabilizer"])

    def drift(self) -> DriftModel:
        return DriftModel(sigma_rw=self.parameters["drift"]["sigma_rw"], seed=None)

    def resolved(self) -> dict:
        return {
            "scenario": {"name": self.name, "kind": self.kind.value, "seed": self.seed},
            **self.parameters,
        }


def _merge(base: dict, overlay: dict, path: str, problems: list[str]) -> dict:
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in base:
            problems.append(f"unknown key {where}")
            continue
        # free-form mappings (e.g. visibilities) replace wholesale
        if isinstance(base[key], dict) and isinstance(value, dict) and key != "visibilities":
            out[key] = _merge(base[key], value, where, problems)
        else:
            out[key] = value
    return out


def _has_key(raw: dict, dotted: str) -> bool:
    node = raw
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return False
        node = node[part]
    return True


def _check_ranges(s: Scenario, problems: list[str]) -> None:
    p = s.parameters
    builders = {
        "source": lambda: SourceParams(**p["source"]),
        "detector": lambda: DetectorParams(**p["detector"]),
        "link": lambda: LinkParams(**p["link"]),
        "network": lambda: RateParams(n_mux=p["network"]["n_mux"], sift_q=p["network"]["sift_q"]),
        "grid": lambda: GridSpec(**p["grid"]),
        "drift": lambda: DriftModel(**p["drift"]),
        "stabilizer": lambda: StabilizerConfig(**p["stabilizer"]),
    }
    for section, build in builders.items():
        try:
            build()
        except (TypeError, ValueError) as exc:
            msg = str(exc)
            tname = _SECTION_TYPES[section]
            problems.append(msg if msg.startswith(tname) else f"{tname}: {msg}")

    sess = p["session"]
    if not isinstance(sess["n_rounds"], int) or sess["n_rounds"] < 1:
        problems.append("session.n_rounds must be a positive integer")
    if not 0.0 <= float(sess["v_eff"]) <= 1.0:
        problems.append("session.v_eff must lie in [0, 1]")
    if not 0.0 <= float(sess["p_accidental"]) <= 1.0:
        problems.append("session.p_accidental must lie in [0, 1]")
    if int(sess["partitions"]) < 1:
        problems.append("session.partitions must be >= 1")
    run = p["stabilizer_run"]
    if not float(run["duration"]) > 0:
        problems.append("stabilizer_run.duration must be > 0")
    if not 0.0 <= float(run["v_eff"]) <= 1.0:
        problems.append("stabilizer_run.v_eff must lie in [0, 1]")
    sweep = p["sweep"]
    if not sweep["lengths_km"] or any(float(x) < 0 for x in sweep["lengths_km"]):
        problems.append("sweep.lengths_km must be a non-empty list of non-negative lengths")
    nr = sweep["n_range"]
    if not (isinstance(nr, list) and len(nr) == 2 and 2 <= int(nr[0]) <= int(nr[1])):
        problems.append("sweep.n_range must be [n_min, n_max] with 2 <= n_min <= n_max")
    if int(p["plan"]["n_users"]) < 2:
        problems.append("plan.n_users must be >= 2")


def parse_scenario(raw: Any, seed_override: int | None = None) -> Scenario:
    """Build a :class:`Scenario` from decoded YAML, collecting every problem."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["scenario file must be a mapping"])
    head = raw.get("scenario")
    if not isinstance(head, dict):
        raise ConfigError(["missing key scenario"])
    for key in head:
        if key not in ("name", "kind", "seed"):
            problems.append(f"unknown key scenario.{key}")
    kind = None
    if "kind" not in head:
        problems.append("missing key scenario.kind")
    else:
        try:
            kind = Kind(str(head["kind"]).upper())
        except ValueError:
            problems.append(
                f"unknown scenario kind {head['kind']!r} (expected one of {', '.join(k.value for k in Kind)})"
            )
    seed = seed_override if seed_override is not None else head.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        problems.append("scenario.seed must be an integer in [0, 2**64)")
    body = {k: v for k, v in raw.items() if k != "scenario"}
    for k, v in body.items():
        if k in DEFAULTS and not isinstance(v, dict):
            problems.append(f"section {k} must be a mapping")
    params = _merge(DEFAULTS, {k: v for k, v in body.items() if not (k in DEFAULTS and not isinstance(v, dict))}, "", problems)
    if kind is not None:
        for req in REQUIRED[kind]:
            if not _has_key(raw, req):
                problems.append(f"missing key {req} (required for {kind.value})")
    scenario = Scenario(str(head.get("name", "unnamed")), kind or Kind.TABLE1, int(seed) if isinstance(seed, int) else 0, params)
    if not any(p.startswith("section") for p in problems):
        try:
            _check_ranges(scenario, problems)
        except (TypeError, ValueError) as exc:
            problems.append(f"malformed value: {exc}")
    if problems:
        raise ConfigError(problems)
    return scenario


def load_scenario(path: str, seed_override: int | None = None) -> Scenario:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError([f"parse error in {path}{where}: {getattr(exc, 'problem', exc)}"]) from exc
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    return parse_scenario(raw, seed_override)


def default_document(kind: Kind = Kind.TABLE1, name: str = "default", seed: int = 0) -> dict:
    return {"scenario": {"name": name, "kind": kind.value, "seed": seed}, **copy.deepcopy(DEFAULTS)}
