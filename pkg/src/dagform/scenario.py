"""Scenario files: JSON objects describing one formation run.

Example::

    {
      "name": "square",
      "nominal": [[1, 0], [-1, 0], [0, 1]],
      "leaders": [1, 2],
      "neighbors": {"3": [1, 2]},
      "initial": "random",
      "seed": 42,
      "schedule": {"mode": "static"},
      "T": 30.0,
      "dt": 0.01
    }

Unknown keys are rejected so that a misspelled tolerance fails loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ScenarioParseError
from .reference import REFERENCE_SEED
from .simulator import DEFAULT_DT, DEFAULT_HORIZON, LeaderSchedule

DEFAULT_SEED = REFERENCE_SEED
DEFAULT_TOLERANCES = {
    "collocation": 1e-9,
    "image": 1e-8,
    "rank": 1e-9,
    "convergence": 1e-6,
}

_TOP_KEYS = {"name", "nominal", "leaders", "neighbors", "weights", "initial",
             "seed", "schedule", "T", "dt", "tolerances"}
_REQUIRED = {"name", "nominal", "leaders", "neighbors"}
_SCHEDULE_KEYS = {
    "static": {"mode", "positions"},
    "parameterized": {"mode", "times", "alpha", "theta", "b"},
}


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    nominal: np.ndarray
    leaders: tuple[int, ...]
    neighbors: dict[int, tuple[int, ...]]
    weights: dict[int, dict] = field(default_factory=dict)
    initial: str | np.ndarray = "random"
    seed: int = DEFAULT_SEED
    schedule: dict = field(default_factory=lambda: {"mode": "static"})
    T: float = DEFAULT_HORIZON
    dt: float = DEFAULT_DT
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @property
    def n(self) -> int:
        return self.nominal.shape[0]

    @property
    def followers(self) -> tuple[int, ...]:
        lead = set(self.leaders)
        return tuple(i for i in range(1, self.n + 1) if i not in lead)

    def with_overrides(self, seed=None, dt=None, horizon=None) -> "Scenario":
        changes: dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if dt is not None:
            changes["dt"] = float(dt)
        if horizon is not None:
            changes["T"] = float(horizon)
        return replace(self, **changes) if changes else self

    def leader_nominal(self) -> np.ndarray:
        return self.nominal[[i - 1 for i in self.leaders]]

    def leader_schedule(self) -> LeaderSchedule:
        s = self.schedule
        if s["mode"] == "parameterized":
            return LeaderSchedule.parameterized(
                self.leader_nominal(), s["times"], s["alpha"], s["theta"], s["b"]
            )
        if "positions" in s:
            return LeaderSchedule.static(s["positions"])
        if isinstance(self.initial, np.ndarray):
            return LeaderSchedule.static(self.initial[[i - 1 for i in self.leaders]])
        return LeaderSchedule.static(self.leader_nominal())

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "nominal": self.nominal.tolist(),
            "leaders": list(self.leaders),
            "neighbors": {str(i): list(v) for i, v in sorted(self.neighbors.items())},
            "initial": self.initial if isinstance(self.initial, str) else self.initial.tolist(),
            "seed": self.seed,
            "schedule": self.schedule,
            "T": self.T,
            "dt": self.dt,
            "tolerances": self.tolerances,
        }
        if self.weights:
            out["weights"] = {str(i): w for i, w in sorted(self.weights.items())}
        return out


def _fail(msg: str):
    raise ScenarioParseError(msg)


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            _fail(f"duplicate key {k!r}")
        out[k] = v
    return out


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        _fail(f"{where}: unknown field(s) {sorted(unknown)}")


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        _fail(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def _points(x, where: str, count: int | None = None) -> np.ndarray:
    if not isinstance(x, list) or not all(isinstance(p, list) and len(p) == 2 for p in x):
        _fail(f"{where}: expected a list of [x, y] pairs")
    pts = np.array([[_number(a, where), _number(b, where)] for a, b in x], dtype=float)
    if count is not None and pts.shape[0] != count:
        _fail(f"{where}: expected {count} points, got {pts.shape[0]}")
    return pts.reshape(-1, 2)


def _node(x, n: int, where: str) -> int:
    try:
        i = int(x)
    except (TypeError, ValueError):
        _fail(f"{where}: node id {x!r} is not an integer")
    if isinstance(x, float) or isinstance(x, bool) or str(i) != str(x).strip():
        _fail(f"{where}: node id {x!r} is not an integer")
    if not 1 <= i <= n:
        _fail(f"{where}: node {i} does not exist (nodes are 1..{n})")
    return i


def _block(x, where: str) -> list[list[float]]:
    if not (isinstance(x, list) and len(x) == 2 and all(isinstance(r, list) and len(r) == 2 for r in x)):
        _fail(f"{where}: expected a 2x2 block")
    return [[_number(v, where) for v in row] for row in x]


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        _fail("scenario must be a JSON object")
    _check_keys(data, _TOP_KEYS, "scenario")
    missing = _REQUIRED - set(data)
    if missing:
        _fail(f"scenario: missing field(s) {sorted(missing)}")

    name = data["name"]
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        _fail("name: expected a non-empty string without path separators")
    nominal = _points(data["nominal"], "nominal")
    n = nominal.shape[0]
    if n < 2:
        _fail("nominal: need at least two nodes")

    if not isinstance(data["leaders"], list):
        _fail("leaders: expected a list of node ids")
    leaders = tuple(_node(i, n, "leaders") for i in data["leaders"])
    if len(set(leaders)) != len(leaders):
        _fail("leaders: duplicate ids")

    nbr_raw = data["neighbors"]
    if not isinstance(nbr_raw, dict):
        _fail("neighbors: expected an object mapping node id to a list of ids")
    neighbors = {}
    for key, val in nbr_raw.items():
        i = _node(key, n, "neighbors")
        if i in neighbors:
            _fail(f"neighbors: node {i} listed twice")
        if not isinstance(val, list):
            _fail(f"neighbors[{key}]: expected a list of ids")
        ids = tuple(_node(j, n, f"neighbors[{key}]") for j in val)
        if len(set(ids)) != len(ids):
            _fail(f"neighbors[{key}]: duplicate neighbor ids")
        neighbors[i] = ids

    weights = {}
    w_raw = data.get("weights", {})
    if not isinstance(w_raw, dict):
        _fail("weights: expected an object keyed by follower id")
    for key, val in w_raw.items():
        i = _node(key, n, "weights")
        where = f"weights[{key}]"
        if not isinstance(val, dict):
            _fail(f"{where}: expected an object")
        if set(val) == {"c1", "c2"}:
            weights[i] = {"c1": _number(val["c1"], where), "c2": _number(val["c2"], where)}
        elif set(val) == {"blocks"} and isinstance(val["blocks"], dict):
            weights[i] = {
                "blocks": {
                    _node(col, n, where): _block(b, f"{where}.blocks[{col}]")
                    for col, b in val["blocks"].items()
                }
            }
        else:
            _fail(f"{where}: expected either {{c1, c2}} or {{blocks}}")

    initial = data.get("initial", "random")
    if isinstance(initial, str):
        if initial != "random":
            _fail('initial: expected "random" or a list of points')
    else:
        initial = _points(initial, "initial", n)

    seed = data.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        _fail("seed: expected a non-negative integer")

    schedule = data.get("schedule", {"mode": "static"})
    if not isinstance(schedule, dict) or schedule.get("mode") not in _SCHEDULE_KEYS:
        _fail('schedule: expected an object with mode "static" or "parameterized"')
    _check_keys(schedule, _SCHEDULE_KEYS[schedule["mode"]], "schedule")
    schedule = dict(schedule)
    if schedule["mode"] == "static" and "positions" in schedule:
        p = _points(schedule["positions"], "schedule.positions", len(leaders))
        if isinstance(initial, np.ndarray) and not np.array_equal(
            initial[[i - 1 for i in leaders]], p
        ):
            _fail("schedule.positions disagree with the leader rows of initial")
        schedule["positions"] = p.tolist()
    if schedule["mode"] == "parameterized":
        missing = _SCHEDULE_KEYS["parameterized"] - set(schedule)
        if missing:
            _fail(f"schedule: missing field(s) {sorted(missing)}")
        for key in ("times", "alpha", "theta"):
            if not isinstance(schedule[key], list):
                _fail(f"schedule.{key}: expected a list of numbers")
            schedule[key] = [_number(v, f"schedule.{key}") for v in schedule[key]]
        schedule["b"] = _points(schedule["b"], "schedule.b").tolist()
        try:
            LeaderSchedule.parameterized(
                nominal[[i - 1 for i in leaders]], schedule["times"],
                schedule["alpha"], schedule["theta"], schedule["b"],
            )
        except ValueError as exc:
            _fail(f"schedule: {exc}")

    T = _number(data.get("T", DEFAULT_HORIZON), "T")
    dt = _number(data.get("dt", DEFAULT_DT), "dt")

    tol_raw = data.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        _fail("tolerances: expected an object")
    _check_keys(tol_raw, set(DEFAULT_TOLERANCES), "tolerances")
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, v in tol_raw.items():
        v = _number(v, f"tolerances.{key}")
        if v <= 0:
            _fail(f"tolerances.{key}: must be positive")
        tolerances[key] = v

    return Scenario(
        name=name, nominal=nominal, leaders=leaders, neighbors=neighbors,
        weights=weights, initial=initial, seed=seed, schedule=schedule,
        T=T, dt=dt, tolerances=tolerances,
    )


def bundled_scenarios() -> list[str]:
    root = resources.files("dagform") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(spec: str | Path) -> Path | None:
    """A filesystem path, or ``None`` when ``spec`` names a bundled scenario."""
    p = Path(spec)
    if p.exists():
        return p
    if str(spec) in bundled_scenarios():
        return None
    raise ScenarioParseError(f"scenario file {spec} not found")


def load_scenario(spec: str | Path) -> Scenario:
    """Load a scenario from a file path or by bundled name (e.g. ``paper_fig4``)."""
    path = resolve_scenario_path(spec)
    if path is None:
        text = (resources.files("dagform") / "data" / f"{spec}.json").read_text(encoding="utf-8")
    else:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{spec}: invalid JSON ({exc})") from exc
    return parse_scenario(data)
