"""Rollout checks behind the ``verify`` command."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .oracles import MAX_ROWS, max_scaling_oracle, qp_min_norm
from .simulation import RunSummary, Scenario, TraceRow, step, summarize

POS_TOL = 1e-6
VEL_TOL = 1e-9
TASK_TOL = 1e-9
SCALE_TOL = 1e-6


@dataclass
class VerifyReport:
    summary: RunSummary
    violations: list[str] = field(default_factory=list)
    oracle_checks: int = 0
    scale_gaps: list[float] = field(default_factory=list)
    norm_gaps: list[float] = field(default_factory=list)
    rows: list[TraceRow] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not self.violations


def _excess(x, lo, hi) -> float:
    return float(max(np.max(lo - x, initial=0.0), np.max(x - hi, initial=0.0)))


def check_row(scenario: Scenario, row: TraceRow, q_next: np.ndarray) -> list[str]:
    """Hard-limit, bound and task-achievement checks for one recorded step."""
    lim, model = scenario.limits, scenario.model
    out = []
    tag = f"t={row.t:.3f}"
    if (e := _excess(q_next, lim.q_min, lim.q_max)) > POS_TOL:
        out.append(f"{tag}: joint position limit exceeded by {e:.3g} rad")
    if model.n_cartesian:
        cp_next = kin.control_point_coordinates(model, q_next)
        if (e := _excess(cp_next, lim.p_min, lim.p_max)) > POS_TOL:
            out.append(f"{tag}: control-point position limit exceeded by {e:.3g} m")
    if (e := _excess(row.qdot_cmd, lim.v_min, lim.v_max)) > VEL_TOL:
        out.append(f"{tag}: joint velocity limit exceeded by {e:.3g} rad/s")
    if (e := _excess(row.cp_ydot, lim.pv_min, lim.pv_max)) > VEL_TOL:
        out.append(f"{tag}: control-point velocity limit exceeded by {e:.3g} m/s")
    if row.bounds is not None and row.A is not None:
        adot = row.A @ row.qdot_cmd
        if (e := _excess(adot, row.bounds.b_min, row.bounds.b_max)) > VEL_TOL:
            out.append(f"{tag}: shaped velocity box exceeded by {e:.3g}")
    if row.task is not None:
        resid = np.max(np.abs(row.task.J @ row.qdot_cmd - row.s * row.task.xdot))
        if resid > TASK_TOL:
            out.append(f"{tag}: task velocity off its scaled target by {resid:.3g}")
    return out


def verify_run(scenario: Scenario, oracle_every: int = 100) -> VerifyReport:
    """Roll out ``scenario`` and check every step; cross-check against the oracles.

    Oracle checks run on every ``oracle_every``-th step and on every step
    where the task was scaled, provided the constraint count is within the
    oracle size cap.
    """
    q = scenario.q0.copy()
    rows: list[TraceRow] = []
    violations: list[str] = []
    scale_gaps, norm_gaps = [], []
    checks = 0
    use_oracle = oracle_every > 0 and scenario.model.n_rows <= MAX_ROWS
    for k in range(scenario.n_steps):
        q_next, row, res = step(scenario, k, q)
        rows.append(row)
        violations += check_row(scenario, row, q_next)
        if res.iterations > scenario.model.n_rows:
            violations.append(f"t={row.t:.3f}: solver used {res.iterations} iterations")
        if use_oracle and (k % oracle_every == 0 or res.scaled):
            checks += 1
            if res.scaled:
                s_max = max_scaling_oracle(row.task, row.A, row.bounds, tol=1e-8)
                scale_gaps.append(s_max - res.scale)
                if res.scale > s_max + SCALE_TOL:
                    violations.append(
                        f"t={row.t:.3f}: applied scale {res.scale:.9g} exceeds oracle maximum {s_max:.9g}"
                    )
            else:
                sol = qp_min_norm(row.task, row.A, row.bounds)
                if not sol.feasible:
                    violations.append(f"t={row.t:.3f}: oracle finds the unscaled task infeasible")
                else:
                    norm_gaps.append(float(np.linalg.norm(res.qdot) - np.sqrt(sol.objective)))
        q = q_next
    return VerifyReport(
        summary=summarize(scenario, rows, q_final=q),
        violations=violations,
        oracle_checks=checks,
        scale_gaps=scale_gaps,
        norm_gaps=norm_gaps,
        rows=rows,
    )
