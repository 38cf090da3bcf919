"""Brute-force reference solvers used to check the SNS solver.

Nothing here shares code with :mod:`gensns.sns`; the oracles only rely on
numpy linear algebra so that agreement between the two is meaningful.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_ROWS = 12
INACTIVE, AT_MIN, AT_MAX = 0, 1, 2
_CHECK_TOL = 1e-9


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleSolution:
    qdot: np.ndarray | None
    objective: float
    active_set: tuple[int, ...]

    @property
    def feasible(self) -> bool:
        return self.qdot is not None


def _unpack(task, A, bounds):
    J = np.atleast_2d(np.asarray(task.J, dtype=float))
    xdot = np.atleast_1d(np.asarray(task.xdot, dtype=float))
    A = np.asarray(getattr(A, "A", A), dtype=float)
    b_min = np.asarray(bounds.b_min, dtype=float)
    b_max = np.asarray(bounds.b_max, dtype=float)
    if A.shape[0] > MAX_ROWS:
        raise OracleSizeError(f"{A.shape[0]} constraint rows exceed the oracle cap of {MAX_ROWS}")
    return J, xdot, A, b_min, b_max


def _assignments(n_rows: int, max_active: int):
    """Active-set assignments grouped by the number of active rows.

    A KKT point whose active rows together with the task rows are linearly
    dependent describes the same affine set as an independent subset of
    those rows, so subsets larger than ``max_active`` never add a new
    candidate and are skipped.
    """
    for size in range(0, min(n_rows, max_active) + 1):
        combos = list(itertools.combinations(range(n_rows), size))
        if not combos:
            continue
        sides = list(itertools.product((AT_MIN, AT_MAX), repeat=size))
        yield size, combos, sides


def qp_min_norm(task, A, bounds, tol: float = _CHECK_TOL) -> OracleSolution:
    """Global minimiser of ``|qdot|^2`` s.t. ``J qdot = xdot`` and ``b_min <= A qdot <= b_max``.

    Every assignment of rows to {inactive, at_min, at_max} is turned into an
    equality-constrained least-norm problem; candidates that satisfy the
    inequalities and the multiplier sign conditions are kept and the best
    objective wins (ties: lexicographically smallest assignment).
    """
    J, xdot, A, b_min, b_max = _unpack(task, A, bounds)
    m, n = J.shape
    n_rows = A.shape[0]
    max_active = max(n - np.linalg.matrix_rank(J), 0)
    best = None

    for size, combos, sides in _assignments(n_rows, max_active):
        rows = np.array(combos, dtype=int).reshape(len(combos), size)
        side = np.array(sides, dtype=int).reshape(len(sides), size)
        # one system per (subset, side pattern)
        R = np.repeat(rows, len(sides), axis=0)
        S = np.tile(side, (len(combos), 1))
        E = np.concatenate([np.broadcast_to(J, (R.shape[0], m, n)), A[R]], axis=1)
        rhs_active = np.where(S == AT_MIN, b_min[R], b_max[R])
        t = np.concatenate([np.broadcast_to(xdot, (R.shape[0], m)), rhs_active], axis=1)
        E_pinv = np.linalg.pinv(E)
        q = np.einsum("bij,bj->bi", E_pinv, t)
        # multipliers of the stationarity condition q = E^T y
        y = np.einsum("bji,bj->bi", E_pinv, q)

        eq_ok = np.all(np.abs(np.einsum("bij,bj->bi", E, q) - t) <= tol * (1 + np.abs(t)), axis=1)
        Aq = q @ A.T
        box_ok = np.all((Aq >= b_min - tol) & (Aq <= b_max + tol), axis=1)
        mult = y[:, m:]
        sign_ok = np.all(np.where(S == AT_MAX, mult <= tol, mult >= -tol), axis=1)
        ok = np.flatnonzero(eq_ok & box_ok & sign_ok)
        for idx in ok:
            obj = float(q[idx] @ q[idx])
            status = [INACTIVE] * n_rows
            for h, sd in zip(R[idx], S[idx]):
                status[h] = int(sd)
            key = tuple(status)
            if best is None or obj < best[0] - 1e-15 or (obj <= best[0] + 1e-15 and key < best[1]):
                best = (obj, key, q[idx].copy())

    if best is None:
        return OracleSolution(None, float("inf"), ())
    return OracleSolution(best[2], best[0], best[1])


def max_scaling_oracle(task, A, bounds, tol: float = 1e-6) -> float:
    """Largest ``s`` in [0, 1] for which ``s * xdot`` is feasible, by bisection."""
    _unpack(task, A, bounds)

    def feasible(s):
        return qp_min_norm(_Scaled(task, s), A, bounds).feasible

    if feasible(1.0):
        return 1.0
    if not feasible(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class _Scaled:
    base: object
    s: float

    @property
    def J(self):
        return self.base.J

    @property
    def xdot(self):
        return self.s * np.asarray(self.base.xdot, dtype=float)


def joint_limits_sns(J, xdot, qdot_min, qdot_max, rcond: float = 1e-10, eps: float = 1e-9,
                     alpha_zero: float = 1e-12):
    """Classic SNS with joint velocity bounds only.

    Saturated joints are tracked with a diagonal selection matrix ``W`` and
    their velocities stored directly in ``qdot_n``.

    Returns ``(qdot, scale, scaled, iterations)``.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    xdot = np.atleast_1d(np.asarray(xdot, dtype=float))
    lo = np.asarray(qdot_min, dtype=float)
    hi = np.asarray(qdot_max, dtype=float)
    m, n = J.shape

    def pinv(M):
        U, sv, Vt = np.linalg.svd(M, full_matrices=False)
        cut = max(rcond * sv[0], 1e-10)
        inv = np.array([1.0 / v if v > cut else 0.0 for v in sv])
        return (Vt.T * inv) @ U.T

    def rank(M):
        sv = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(sv > max(rcond * sv[0], 1e-10)))

    w = np.ones(n)
    qdot_n = np.zeros(n)
    best = (0.0, np.ones(n), np.zeros(n))
    for it in range(1, n + 2):
        JW_pinv = pinv(J * w)
        qdot = qdot_n + JW_pinv @ (xdot - J @ qdot_n)
        over = (qdot < lo - eps) | (qdot > hi + eps)
        if not np.any(over):
            return qdot, 1.0, False, it

        a = JW_pinv @ xdot
        b = qdot - a
        s_max = np.ones(n)
        zero = alpha_zero * max(1.0, float(np.max(np.abs(a))))
        for i in np.flatnonzero(w > 0):
            s_lo, s_hi = lo[i] - b[i], hi[i] - b[i]
            if abs(a[i]) <= zero:
                s_max[i] = 1.0 if (s_lo <= eps and s_hi >= -eps) else 0.0
            else:
                limit = (s_lo if a[i] < 0 else s_hi) / a[i]
                s_max[i] = min(max(limit, 0.0), 1.0)
        scale = float(np.min(s_max))
        crit = int(np.argmin(s_max))
        trial = scale * a + b
        if scale > best[0] and not np.any((trial < lo - eps) | (trial > hi + eps)):
            best = (scale, w.copy(), qdot_n.copy())
        if not (over[crit] and w[crit] > 0):
            cand = np.flatnonzero(over & (w > 0))
            crit = int(cand[0]) if cand.size else int(np.flatnonzero(w > 0)[0])

        w[crit] = 0.0
        qdot_n[crit] = hi[crit] if qdot[crit] > hi[crit] else lo[crit]
        if rank(J * w) < m:
            scale, w_best, qn_best = best
            qdot = qn_best + pinv(J * w_best) @ (scale * xdot - J @ qn_best)
            return qdot, scale, True, it
    raise RuntimeError("joint-limits SNS did not terminate")
