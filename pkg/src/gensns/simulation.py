"""Closed-loop end-effector path tracking with the SNS solver and Euler integration."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .constraints import GeneralizedBounds, LimitSet, generalized_bounds
from .kinematics import ControlPoint, RobotModel
from .sns import SnsResult, TaskSpec, sns_velocity

PAPER_Q0 = np.array([np.pi / 6, -np.pi / 6, -np.pi / 6, np.pi / 3, -np.pi / 6, -np.pi / 6])


@dataclass(frozen=True)
class LinearPath:
    """Straight segment from ``start`` to ``end``, then a hold at ``end``.

    ``timing`` is ``"constant"`` (uniform speed) or ``"quintic"`` (rest to rest).
    """

    start: np.ndarray
    end: np.ndarray
    duration: float
    timing: str = "constant"

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float))
        if self.start.shape != (2,) or self.end.shape != (2,):
            raise ValueError("path endpoints must be planar points")
        if not self.duration > 0:
            raise ValueError("path duration must be positive")
        if self.timing not in ("constant", "quintic"):
            raise ValueError(f"unknown timing law {self.timing!r}")

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Desired position and velocity at time ``t``."""
        tau = min(max(t / self.duration, 0.0), 1.0)
        if self.timing == "constant":
            sigma, dsigma = tau, (1.0 if t < self.duration else 0.0)
        else:
            sigma = tau**3 * (10 - 15 * tau + 6 * tau**2)
            dsigma = 30 * tau**2 * (1 - tau) ** 2
        delta = self.end - self.start
        return self.start + sigma * delta, dsigma * delta / self.duration


@dataclass(frozen=True)
class Scenario:
    model: RobotModel
    limits: LimitSet
    q0: np.ndarray
    path: LinearPath
    Kp: np.ndarray
    T: float = 1e-3
    horizon: float = 4.0
    name: str = ""
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "q0", np.asarray(self.q0, dtype=float))
        object.__setattr__(self, "Kp", np.atleast_2d(np.asarray(self.Kp, dtype=float)))
        for problem in self.problems():
            raise ValueError(problem)

    def problems(self) -> list[str]:
        """Human-readable invariant violations, empty when the scenario is valid."""
        out = []
        try:
            self.limits.check_model(self.model)
        except ValueError as exc:
            out.append(f"limits: {exc}")
        if self.q0.shape != (self.model.n,):
            out.append(f"q0: expected {self.model.n} joint angles, got {self.q0.size}")
        elif np.any(self.q0 < self.limits.q_min) or np.any(self.q0 > self.limits.q_max):
            out.append("q0: initial configuration violates the joint position limits")
        if self.Kp.shape != (2, 2):
            out.append(f"Kp: expected a 2x2 gain, got shape {self.Kp.shape}")
        elif np.any(self.Kp != np.diag(np.diag(self.Kp))) or np.any(np.diag(self.Kp) <= 0):
            out.append("Kp: gain must be diagonal with positive entries")
        if not self.T > 0:
            out.append("T: sampling time must be positive")
        if not self.horizon > 0:
            out.append("horizon: must be positive")
        reach = sum(self.model.link_lengths)
        for label, pt in (("path.start", self.path.start), ("path.end", self.path.end)):
            if np.linalg.norm(pt) > reach:
                out.append(f"{label}: point {pt.tolist()} lies beyond the reach {reach}")
        return out

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.T))


def paper_scenario() -> Scenario:
    """The planar 6R experiment with the repository's geometry defaults."""
    model = RobotModel(
        link_lengths=(1.0,) * 6,
        control_points=tuple(ControlPoint(j, ("y",)) for j in range(1, 6)),
    )
    limits = LimitSet.uniform(model, q_lim=np.pi / 2, v_lim=1.0, p_range=(-1.1, 1.0), pv_lim=0.8)
    return Scenario(
        model=model,
        limits=limits,
        q0=PAPER_Q0.copy(),
        path=LinearPath(start=DEFAULT_PATH_START, end=DEFAULT_PATH_END, duration=DEFAULT_PATH_DURATION),
        Kp=np.diag([50.0, 50.0]),
        T=1e-3,
        horizon=4.0,
        name="paper_6r",
    )


# Geometry defaults; link lengths and the path are not taken from the experiment
# being reproduced. The start sits ~3 cm from the EE at q0 so the first few
# milliseconds need task scaling; the last 0.5 s hold the end point.
DEFAULT_PATH_START = np.array([5.44, 0.02])
DEFAULT_PATH_END = np.array([4.0, 0.02])
DEFAULT_PATH_DURATION = 3.5


def task_velocity(x_d, xdot_d, x_ee, Kp) -> np.ndarray:
    """Feed-forward plus proportional correction of the end-effector position."""
    x_d, xdot_d, x_ee = (np.asarray(v, dtype=float) for v in (x_d, xdot_d, x_ee))
    Kp = np.atleast_2d(np.asarray(Kp, dtype=float))
    if not (x_d.shape == xdot_d.shape == x_ee.shape) or Kp.shape != (x_d.size, x_d.size):
        raise ValueError("task_velocity: dimension mismatch")
    return xdot_d + Kp @ (x_d - x_ee)


@dataclass
class TraceRow:
    t: float
    q: np.ndarray
    qdot_cmd: np.ndarray
    x_ee: np.ndarray
    error: np.ndarray
    s: float
    cp_y: np.ndarray
    cp_ydot: np.ndarray
    saturated_rows: tuple[int, ...]
    bounds: GeneralizedBounds | None = field(default=None, repr=False)
    iterations: int = 0
    task: TaskSpec | None = field(default=None, repr=False)
    A: np.ndarray | None = field(default=None, repr=False)
    scaled: bool = False


@dataclass
class RunSummary:
    steps: int
    max_joint_pos_violation: float
    max_joint_vel_violation: float
    max_cp_pos_violation: float
    max_cp_vel_violation: float
    max_bound_violation: float
    max_error: float
    final_error: float
    max_error_after_100ms: float
    scaled_fraction: float
    last_scaled_time: float | None
    max_iterations: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def step(scenario: Scenario, k: int, q: np.ndarray) -> tuple[np.ndarray, TraceRow, SnsResult]:
    """One control period starting at ``t = k * T`` from configuration ``q``."""
    model, T = scenario.model, scenario.T
    t = k * T
    pts = kin.forward_kinematics(model, q)
    x_ee = pts[-1]
    x_d, xdot_d = scenario.path(t)
    xdot = task_velocity(x_d, xdot_d, x_ee, scenario.Kp)
    aug = kin.augmented_matrix(model, q)
    cp = kin.control_point_coordinates(model, q)
    bounds = generalized_bounds(scenario.limits, q, cp, T, aug.row_map)
    J = kin.ee_jacobian(model, q)
    task = TaskSpec(xdot, J)
    res = sns_velocity(task, aug, bounds)
    adot = aug.A @ res.qdot
    row = TraceRow(
        t=t, q=q.copy(), qdot_cmd=res.qdot, x_ee=x_ee, error=x_d - x_ee,
        s=res.scale if res.scaled else 1.0,
        cp_y=cp, cp_ydot=adot[model.n:], saturated_rows=tuple(res.saturated_rows),
        bounds=bounds, iterations=res.iterations, task=task, A=aug.A, scaled=res.scaled,
    )
    return q + T * res.qdot, row, res


def run(scenario: Scenario) -> tuple[list[TraceRow], RunSummary]:
    q = scenario.q0.copy()
    rows = []
    for k in range(scenario.n_steps):
        q, row, _ = step(scenario, k, q)
        rows.append(row)
    return rows, summarize(scenario, rows, q_final=q)


def summarize(scenario: Scenario, rows: list[TraceRow], q_final=None) -> RunSummary:
    lim = scenario.limits
    model = scenario.model

    def excess(x, lo, hi):
        return float(max(np.max(lo - x, initial=0.0), np.max(x - hi, initial=0.0), 0.0))

    qs = [r.q for r in rows] + ([q_final] if q_final is not None else [])
    cps = [r.cp_y for r in rows]
    if q_final is not None and model.n_cartesian:
        cps.append(kin.control_point_coordinates(model, q_final))
    jp = max((excess(q, lim.q_min, lim.q_max) for q in qs), default=0.0)
    cpp = max((excess(c, lim.p_min, lim.p_max) for c in cps), default=0.0)
    jv = max((excess(r.qdot_cmd, lim.v_min, lim.v_max) for r in rows), default=0.0)
    cpv = max((excess(r.cp_ydot, lim.pv_min, lim.pv_max) for r in rows), default=0.0)
    bv = 0.0
    for r in rows:
        if r.bounds is not None:
            adot = np.concatenate([r.qdot_cmd, r.cp_ydot])
            bv = max(bv, excess(adot, r.bounds.b_min, r.bounds.b_max))
    errs = np.array([np.linalg.norm(r.error) for r in rows])
    late = np.array([e for r, e in zip(rows, errs) if r.t >= 0.1 - 1e-12])
    final_error = errs[-1] if len(errs) else 0.0
    if q_final is not None and rows:
        x_d, _ = scenario.path(len(rows) * scenario.T)
        final_error = float(np.linalg.norm(x_d - kin.forward_kinematics(model, q_final)[-1]))
    scaled = [r.t for r in rows if r.s < 1.0]
    return RunSummary(
        steps=len(rows),
        max_joint_pos_violation=jp,
        max_joint_vel_violation=jv,
        max_cp_pos_violation=cpp,
        max_cp_vel_violation=cpv,
        max_bound_violation=bv,
        max_error=float(errs.max()) if len(errs) else 0.0,
        final_error=float(final_error),
        max_error_after_100ms=float(late.max()) if late.size else 0.0,
        scaled_fraction=len(scaled) / len(rows) if rows else 0.0,
        last_scaled_time=max(scaled) if scaled else None,
        max_iterations=max((r.iterations for r in rows), default=0),
    )
