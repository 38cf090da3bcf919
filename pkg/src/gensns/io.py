"""Scenario files, SNS instance files and CSV traces."""
from __future__ import annotations

import csv
import json
import os
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .constraints import GeneralizedBounds, LimitSet
from .kinematics import ControlPoint, RobotModel
from .simulation import LinearPath, Scenario, TraceRow
from .sns import TaskSpec


class ScenarioError(ValueError):
    """Base class for problems with a scenario or instance file."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = source or "<input>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


class ScenarioParseError(ScenarioError):
    pass


class ScenarioSchemaError(ScenarioError):
    pass


class ScenarioInvariantError(ScenarioError):
    pass


def bundled_scenario_path(name: str = "paper_6r") -> Path:
    return Path(str(resources.files("gensns") / "scenarios" / f"{name}.json"))


def _schema() -> dict:
    return json.loads((resources.files("gensns") / "scenarios" / "scenario.schema.json").read_text())


def _locate(text: str, path) -> int | None:
    """Best-effort line number of the JSON member at ``path``."""
    pos, found = 0, False
    for key in path:
        if isinstance(key, int):
            continue
        idx = text.find(f'"{key}"', pos)
        if idx < 0:
            break
        pos, found = idx, True
    return text.count("\n", 0, pos) + 1 if found else None


def _read_json(path, text=None):
    source = str(path)
    if text is None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ScenarioParseError(f"cannot read file: {exc.strerror}", source=source) from exc
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno, source=source) from exc


def load_scenario(path) -> Scenario:
    doc, text = _read_json(path)
    source = str(path)
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        field = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ScenarioSchemaError(f"{field}: {err.message}", _locate(text, err.absolute_path), source)

    def invalid(field_path, message):
        return ScenarioInvariantError(
            f"{'.'.join(field_path)}: {message}", _locate(text, field_path), source
        )

    try:
        model = RobotModel(
            link_lengths=tuple(doc["robot"]["link_lengths"]),
            control_points=tuple(
                ControlPoint(cp["joint_index"], tuple(cp["axes"]))
                for cp in doc["robot"].get("control_points", [])
            ),
        )
    except ValueError as exc:
        raise invalid(["robot"], str(exc)) from exc

    lim = doc["limits"]
    cart = lim.get("cartesian")
    if cart is None and model.n_cartesian:
        raise invalid(["limits"], "control points are defined but limits.cartesian is missing")
    try:
        limits = LimitSet(
            q_min=_sized(lim["joint"]["q_min"], model.n, "limits.joint.q_min"),
            q_max=_sized(lim["joint"]["q_max"], model.n, "limits.joint.q_max"),
            v_min=_sized(lim["joint"]["v_min"], model.n, "limits.joint.v_min"),
            v_max=_sized(lim["joint"]["v_max"], model.n, "limits.joint.v_max"),
            p_min=_sized(cart["p_min"] if cart else [], model.n_cartesian, "limits.cartesian.p_min"),
            p_max=_sized(cart["p_max"] if cart else [], model.n_cartesian, "limits.cartesian.p_max"),
            pv_min=_sized(cart["v_min"] if cart else [], model.n_cartesian, "limits.cartesian.v_min"),
            pv_max=_sized(cart["v_max"] if cart else [], model.n_cartesian, "limits.cartesian.v_max"),
        )
    except ValueError as exc:
        raise invalid(["limits"], str(exc)) from exc

    p = doc["path"]
    try:
        path_obj = LinearPath(p["start"], p["end"], p["duration"], p.get("timing", "constant"))
    except ValueError as exc:
        raise invalid(["path"], str(exc)) from exc

    Kp = np.asarray(doc["Kp"], dtype=float)
    try:
        scenario = Scenario(
            model=model, limits=limits, q0=np.asarray(doc["q0"], dtype=float), path=path_obj,
            Kp=np.diag(Kp) if Kp.ndim == 1 else Kp, T=float(doc["T"]),
            horizon=float(doc["horizon"]), name=doc.get("name", ""),
            description=doc.get("description", ""),
        )
    except ValueError as exc:
        field, _, message = str(exc).partition(": ")
        raise invalid(field.split("."), message or str(exc)) from exc
    return scenario


def _sized(value, size, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(size, float(arr))
    if arr.shape != (size,):
        raise ValueError(f"{name} needs {size} entries, got {arr.size}")
    return arr


def load_instance(path) -> tuple[TaskSpec, np.ndarray, GeneralizedBounds]:
    """A single solver instance: ``{"J", "xdot", "b_min", "b_max"}`` and optional ``"A"``.

    Without ``"A"`` the constraint matrix is the identity (joint bounds only).
    """
    doc, text = _read_json(path)
    source = str(path)
    if not isinstance(doc, dict):
        raise ScenarioSchemaError("instance must be a JSON object", 1, source)
    allowed = {"J", "xdot", "A", "b_min", "b_max", "name", "description"}
    for key in doc:
        if key not in allowed:
            raise ScenarioSchemaError(f"unknown key {key!r}", _locate(text, [key]), source)
    for key in ("J", "xdot", "b_min", "b_max"):
        if key not in doc:
            raise ScenarioSchemaError(f"missing required key {key!r}", None, source)
    try:
        task = TaskSpec(np.asarray(doc["xdot"], dtype=float), np.asarray(doc["J"], dtype=float))
        A = np.asarray(doc["A"], dtype=float) if "A" in doc else np.eye(task.n)
        bounds = GeneralizedBounds(doc["b_min"], doc["b_max"])
    except (ValueError, TypeError) as exc:
        raise ScenarioInvariantError(str(exc), None, source) from exc
    if A.ndim != 2 or A.shape != (len(bounds), task.n):
        raise ScenarioInvariantError(
            f"A must be {len(bounds)}x{task.n}, got shape {A.shape}", _locate(text, ["A"]), source
        )
    return task, A, bounds


def trace_header(n: int, cp_labels: list[tuple[str, int]]) -> list[str]:
    cols = ["t"]
    cols += [f"q_{j}" for j in range(1, n + 1)]
    cols += [f"qdot_{j}" for j in range(1, n + 1)]
    cols += ["xee_x", "xee_y", "err_x", "err_y", "s"]
    cols += [f"cp_{ax}_{i}" for ax, i in cp_labels]
    cols += [f"cp_{ax}dot_{i}" for ax, i in cp_labels]
    cols.append("sat_rows")
    return cols


def cp_labels(model: RobotModel) -> list[tuple[str, int]]:
    return [(ax, i + 1) for i, cp in enumerate(model.control_points) for ax in cp.axes]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_trace(rows: list[TraceRow], path, model: RobotModel) -> None:
    """Write the trace as CSV, atomically (temp file then rename).

    Saturated rows are written 1-based, separated by ``;``.
    """
    path = Path(path)
    header = trace_header(model.n, cp_labels(model))
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for r in rows:
                writer.writerow(
                    [_fmt(r.t)]
                    + [_fmt(v) for v in r.q]
                    + [_fmt(v) for v in r.qdot_cmd]
                    + [_fmt(v) for v in r.x_ee]
                    + [_fmt(v) for v in r.error]
                    + [_fmt(r.s)]
                    + [_fmt(v) for v in r.cp_y]
                    + [_fmt(v) for v in r.cp_ydot]
                    + [";".join(str(h + 1) for h in r.saturated_rows)]
                )
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_trace(path) -> tuple[list[str], list[dict]]:
    """Read a trace CSV back; numeric columns become floats, ``sat_rows`` a tuple of 1-based ints."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        out = []
        for line in reader:
            rec = {}
            for key, val in zip(header, line):
                if key == "sat_rows":
                    rec[key] = tuple(int(v) for v in val.split(";") if v)
                else:
                    rec[key] = float(val)
            out.append(rec)
    return header, out
