"""Scenario JSON schema, trace CSV format, and summary JSON format.

Scenario files are strict JSON: unknown keys are rejected at every level and
numeric/semantic validation (positive-definite gains, positive horizon, ...)
happens on construction. Trace files are plain CSV with a header row, one row
per control step, UTF-8, '.' decimal, no thousands separators:

    t, then per robot i (1-based):
    qi_1 qi_2 qdi_1 qdi_2 zi_1 zi_2 si_1 si_2 thi_1 thi_2 thi_3
    taui_1 taui_2 tauhi_1 tauhi_2

Point-mass benchmark traces use the reduced header ``t,x_1,xd_1,f_1``.
Summaries are JSON with sorted keys so identical runs serialize to identical
bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .controllers import GainSet
from .dynamics import ArmModel, DynParams, default_params
from .manipulability import probe_input
from .network import (
    DiGraph,
    DelayModel,
    GraphSchedule,
    fixture_graph_a,
    fixture_graph_b,
    fixture_graph_c,
    random_switching_schedule,
)
from .sim import EnvironmentModel, Integrator, OperatorModel, Scenario, Trace

FIXTURE_GRAPHS = {
    "fixture_a": fixture_graph_a,
    "fixture_b": fixture_graph_b,
    "fixture_c": fixture_graph_c,
}


class SchemaError(ValueError):
    """Scenario/schedule document violates the schema."""


def _require_keys(d: dict, allowed: set[str], required: set[str], where: str):
    unknown = set(d) - allowed
    if unknown:
        raise SchemaError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise SchemaError(f"missing keys in {where}: {sorted(missing)}")


def _num(value, where: str, positive=False, nonnegative=False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise SchemaError(f"{where} must be a finite number, got {value!r}")
    v = float(value)
    if positive and v <= 0:
        raise SchemaError(f"{where} must be positive, got {v}")
    if nonnegative and v < 0:
        raise SchemaError(f"{where} must be nonnegative, got {v}")
    return v


def _matrix_or_scalar(value, where: str):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, list):
        try:
            return np.asarray(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where} is not a numeric matrix: {exc}") from None
    raise SchemaError(f"{where} must be a scalar or nested list, got {type(value).__name__}")


def _matrix_json(m: np.ndarray):
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 2 and np.allclose(arr, arr[0, 0] * np.eye(arr.shape[0])):
        return float(arr[0, 0])
    return arr.tolist()


# -- graphs and schedules ----------------------------------------------------

def graph_from_json(obj, where: str = "graph") -> DiGraph:
    if isinstance(obj, str):
        if obj not in FIXTURE_GRAPHS:
            raise SchemaError(f"unknown graph fixture {obj!r} in {where}")
        return FIXTURE_GRAPHS[obj]()
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be a fixture name or an object")
    _require_keys(obj, {"n", "edges"}, {"n", "edges"}, where)
    n = obj["n"]
    if not isinstance(n, int) or n <= 0:
        raise SchemaError(f"{where}.n must be a positive integer")
    w = np.zeros((n, n))
    for idx, e in enumerate(obj["edges"]):
        _require_keys(e, {"to", "from", "weight"}, {"to", "from"}, f"{where}.edges[{idx}]")
        i, j = e["to"], e["from"]
        if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < n and 0 <= j < n):
            raise SchemaError(f"{where}.edges[{idx}] endpoints out of range")
        w[i, j] = _num(e.get("weight", 1.0), f"{where}.edges[{idx}].weight", positive=True)
    try:
        return DiGraph(w)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def graph_to_json(g: DiGraph):
    edges = [
        {"to": int(i), "from": int(j), "weight": float(g.weights[i, j])}
        for i, j in np.argwhere(g.weights > 0)
    ]
    return {"n": g.n, "edges": edges}


def schedule_from_json(obj: dict, horizon: float, seed: int, where: str = "schedule") -> GraphSchedule:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    kind = obj.get("kind", "random_switching")
    if kind == "random_switching":
        _require_keys(obj, {"kind", "graphs", "period"}, {"graphs", "period"}, where)
        graphs = [graph_from_json(g, f"{where}.graphs") for g in obj["graphs"]]
        period = _num(obj["period"], f"{where}.period", positive=True)
        return random_switching_schedule(graphs, period, horizon, seed)
    if kind == "explicit":
        _require_keys(
            obj,
            {"kind", "graphs", "switch_times", "indices", "dwell_min", "dwell_max"},
            {"graphs", "switch_times", "indices", "dwell_min", "dwell_max"},
            where,
        )
        graphs = tuple(graph_from_json(g, f"{where}.graphs") for g in obj["graphs"])
        try:
            return GraphSchedule(
                graphs,
                np.asarray(obj["switch_times"], dtype=float),
                np.asarray(obj["indices"], dtype=int),
                _num(obj["dwell_min"], f"{where}.dwell_min", positive=True),
                _num(obj["dwell_max"], f"{where}.dwell_max", positive=True),
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None
    raise SchemaError(f"{where}.kind must be 'random_switching' or 'explicit', got {kind!r}")


def schedule_to_json(sched: GraphSchedule) -> dict:
    return {
        "kind": "explicit",
        "graphs": [graph_to_json(g) for g in sched.graphs],
        "switch_times": [float(t) for t in sched.switch_times],
        "indices": [int(i) for i in sched.indices],
        "dwell_min": float(sched.dwell_min),
        "dwell_max": float(sched.dwell_max) if np.isfinite(sched.dwell_max) else 1e30,
    }


# -- scenario documents -------------------------------------------------------

_SCENARIO_KEYS = {
    "label", "controller", "robots", "gains", "schedule", "delay_model",
    "operator", "environment", "initial_conditions", "integrator",
    "control_period", "horizon", "seed", "checks", "pointmass", "probe",
}

_GAIN_KEYS = {"K", "Gamma", "alpha", "lambda_M", "lambda"}


def _gains_from_json(obj: dict, where: str) -> GainSet:
    _require_keys(obj, _GAIN_KEYS, {"K", "Gamma", "alpha"}, where)
    try:
        return GainSet(
            K=_matrix_or_scalar(obj["K"], f"{where}.K"),
            Gamma=_matrix_or_scalar(obj["Gamma"], f"{where}.Gamma"),
            alpha=_num(obj["alpha"], f"{where}.alpha", nonnegative=True),
            lambda_M=_num(obj.get("lambda_M", 0.0), f"{where}.lambda_M", nonnegative=True),
            lam=_num(obj.get("lambda", 1.0), f"{where}.lambda", positive=True),
        )
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _gains_to_json(g: GainSet) -> dict:
    return {
        "K": _matrix_json(g.K),
        "Gamma": _matrix_json(g.Gamma),
        "alpha": g.alpha,
        "lambda_M": g.lambda_M,
        "lambda": g.lam,
    }


def scenario_from_dict(doc: dict):
    """Parse a scenario document into a Scenario (or a PointMassPreset)."""
    from .presets import PointMassPreset  # local import to avoid a cycle

    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    _require_keys(doc, _SCENARIO_KEYS, {"controller"}, "scenario")
    controller = doc["controller"]
    label = doc.get("label", "scenario")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise SchemaError("seed must be an integer")

    if controller == "pointmass":
        pm = doc.get("pointmass", {})
        _require_keys(pm, {"m", "b", "input_magnitude", "horizon", "step"}, set(), "pointmass")
        bad = _SCENARIO_KEYS - {"label", "controller", "pointmass", "seed", "probe", "checks"}
        present = bad & set(doc)
        if present:
            raise SchemaError(f"keys {sorted(present)} are meaningless for a pointmass scenario")
        return PointMassPreset(
            m=_num(pm.get("m", 1.0), "pointmass.m", positive=True),
            b=_num(pm.get("b", 1.0), "pointmass.b", positive=True),
            input_magnitude=_num(pm.get("input_magnitude", 1.0), "pointmass.input_magnitude", positive=True),
            horizon=_num(pm.get("horizon", 100.0), "pointmass.horizon", positive=True),
            step=_num(pm.get("step", 1e-3), "pointmass.step", positive=True),
            label=label,
        )

    horizon = _num(doc.get("horizon"), "horizon", positive=True) if "horizon" in doc else None
    if horizon is None:
        raise SchemaError("missing keys in scenario: ['horizon']")

    robots = []
    for idx, r in enumerate(doc.get("robots", [{}])):
        _require_keys(r, {"theta", "label"}, set(), f"robots[{idx}]")
        if "theta" in r:
            theta = np.asarray(r["theta"], dtype=float)
            try:
                params = DynParams(theta)
            except ValueError as exc:
                raise SchemaError(f"robots[{idx}].theta: {exc}") from None
        else:
            params = default_params()
        robots.append(ArmModel(params=params, label=r.get("label", f"arm{idx + 1}")))

    gains_doc = doc.get("gains")
    if gains_doc is None:
        raise SchemaError("missing keys in scenario: ['gains']")
    if isinstance(gains_doc, list):
        gains = [_gains_from_json(g, f"gains[{k}]") for k, g in enumerate(gains_doc)]
    else:
        gains = _gains_from_json(gains_doc, "gains")

    schedule = None
    if "schedule" in doc:
        schedule = schedule_from_json(doc["schedule"], horizon, seed)

    delay_model = None
    if "delay_model" in doc:
        dm = doc["delay_model"]
        _require_keys(dm, {"base", "jitter_max", "resample_period"}, {"base"}, "delay_model")
        try:
            delay_model = DelayModel(
                base=_num(dm["base"], "delay_model.base", nonnegative=True),
                jitter_max=_num(dm.get("jitter_max", 0.0), "delay_model.jitter_max", nonnegative=True),
                resample_period=_num(dm.get("resample_period", 0.03), "delay_model.resample_period", positive=True),
                seed=seed,
            )
        except ValueError as exc:
            raise SchemaError(f"delay_model: {exc}") from None

    operator = OperatorModel()
    if "operator" in doc:
        op = doc["operator"]
        _require_keys(
            op, {"kind", "Kd", "Kp", "q_h", "attached_robot", "start", "stop"}, {"kind"}, "operator"
        )
        try:
            operator = OperatorModel(
                kind=op["kind"],
                Kd=_matrix_or_scalar(op.get("Kd", 5.0), "operator.Kd"),
                Kp=_matrix_or_scalar(op.get("Kp", 10.0), "operator.Kp"),
                q_h=np.asarray(op.get("q_h", [3.5, 3.0]), dtype=float),
                attached_robot=op.get("attached_robot", 0),
                start=_num(op.get("start", 0.0), "operator.start", nonnegative=True),
                stop=_num(op["stop"], "operator.stop") if op.get("stop") is not None else np.inf,
            )
        except ValueError as exc:
            raise SchemaError(f"operator: {exc}") from None

    environment = EnvironmentModel()
    if "environment" in doc:
        env = doc["environment"]
        _require_keys(env, {"kind", "Ke", "q_e"}, {"kind"}, "environment")
        try:
            environment = EnvironmentModel(
                kind=env["kind"],
                Ke=_matrix_or_scalar(env.get("Ke", 20.0), "environment.Ke"),
                q_e=np.asarray(env.get("q_e", [0.0, 0.0]), dtype=float),
            )
        except ValueError as exc:
            raise SchemaError(f"environment: {exc}") from None

    ic = doc.get("initial_conditions", {})
    _require_keys(ic, {"q", "qdot", "z", "theta_hat"}, set(), "initial_conditions")

    integ = Integrator()
    if "integrator" in doc:
        ig = doc["integrator"]
        _require_keys(ig, {"kind", "substep"}, {"kind"}, "integrator")
        try:
            integ = Integrator(
                kind=ig["kind"],
                substep=_num(ig.get("substep", 1e-3), "integrator.substep", positive=True),
            )
        except ValueError as exc:
            raise SchemaError(f"integrator: {exc}") from None

    checks = doc.get("checks", {})
    _require_keys(checks, {"target_tol", "sync_tol", "operator_torque_tol", "band"}, set(), "checks")

    def _ic_array(key):
        return np.asarray(ic[key], dtype=float) if key in ic else None

    try:
        sc = Scenario(
            robots=tuple(robots),
            controller=controller,
            gains=gains,
            horizon=horizon,
            schedule=schedule,
            delay_model=delay_model,
            operator=operator,
            environment=environment,
            q0=_ic_array("q"),
            qd0=_ic_array("qdot"),
            z0=_ic_array("z"),
            th0=_ic_array("theta_hat"),
            control_period=_num(doc.get("control_period", 0.005), "control_period", positive=True),
            integrator=integ,
            seed=seed,
            label=label,
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    return sc


def scenario_to_dict(sc) -> dict:
    """Serialize a Scenario (or PointMassPreset) to its canonical document."""
    from .presets import PointMassPreset

    if isinstance(sc, PointMassPreset):
        return {
            "label": sc.label,
            "controller": "pointmass",
            "pointmass": {
                "m": sc.m, "b": sc.b, "input_magnitude": sc.input_magnitude,
                "horizon": sc.horizon, "step": sc.step,
            },
        }

    doc = {
        "label": sc.label,
        "controller": sc.controller,
        "robots": [{"theta": r.params.theta.tolist(), "label": r.label} for r in sc.robots],
        "horizon": sc.horizon,
        "control_period": sc.control_period,
        "seed": sc.seed,
        "integrator": {"kind": sc.integrator.kind, "substep": sc.integrator.substep},
        "initial_conditions": {
            "q": sc.q0.tolist(), "qdot": sc.qd0.tolist(),
            "z": sc.z0.tolist(), "theta_hat": sc.th0.tolist(),
        },
    }
    gains = sc.gains
    if all(g is gains[0] for g in gains) or all(
        np.array_equal(g.K, gains[0].K) and np.array_equal(g.Gamma, gains[0].Gamma)
        and g.alpha == gains[0].alpha and g.lambda_M == gains[0].lambda_M and g.lam == gains[0].lam
        for g in gains
    ):
        doc["gains"] = _gains_to_json(gains[0])
    else:
        doc["gains"] = [_gains_to_json(g) for g in gains]
    if sc.schedule is not None:
        doc["schedule"] = schedule_to_json(sc.schedule)
    if sc.delay_model is not None:
        dm = sc.delay_model
        doc["delay_model"] = {
            "base": dm.base, "jitter_max": dm.jitter_max, "resample_period": dm.resample_period,
        }
    if sc.operator.kind != "none":
        op = sc.operator
        doc["operator"] = {
            "kind": op.kind, "Kd": _matrix_json(op.Kd), "Kp": _matrix_json(op.Kp),
            "q_h": op.q_h.tolist(), "attached_robot": op.attached_robot,
            "start": op.start, "stop": None if np.isinf(op.stop) else op.stop,
        }
    if sc.environment.kind != "none":
        env = sc.environment
        doc["environment"] = {
            "kind": env.kind, "Ke": _matrix_json(env.Ke), "q_e": env.q_e.tolist(),
        }
    return doc


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def scenario_hash(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def load_scenario_file(path) -> tuple[object, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path}: {exc}") from None
    return scenario_from_dict(doc), doc


# -- trace CSV ----------------------------------------------------------------

def trace_header(n_robots: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n_robots + 1):
        cols += [f"q{i}_1", f"q{i}_2", f"qd{i}_1", f"qd{i}_2", f"z{i}_1", f"z{i}_2",
                 f"s{i}_1", f"s{i}_2", f"th{i}_1", f"th{i}_2", f"th{i}_3",
                 f"tau{i}_1", f"tau{i}_2", f"tauh{i}_1", f"tauh{i}_2"]
    return cols


def write_trace_csv(path, trace: Trace) -> None:
    n = trace.n_robots
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(trace_header(n)) + "\n")
        for k in range(len(trace.t)):
            row = [repr(float(trace.t[k]))]
            for i in range(n):
                for arr in (trace.q, trace.qd, trace.z, trace.s, trace.th,
                            trace.tau, trace.tauh):
                    row.extend(repr(float(v)) for v in arr[i, k])
            fh.write(",".join(row) + "\n")


def write_pointmass_trace_csv(path, t, x, xd, f) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x_1,xd_1,f_1\n")
        for row in zip(t, x, xd, f):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_trace_csv(path) -> dict:
    """Read a trace CSV back into named column arrays."""
    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"column count mismatch in {path}")
    return {name: data[:, k] for k, name in enumerate(header)}


def write_summary(path, summary: dict) -> None:
    Path(path).write_text(canonical_json(summary), encoding="utf-8")
