"""Saturation-in-the-null-space velocity solver with generalised box constraints."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import GeneralizedBounds
from .kinematics import AugmentedJacobian

PINV_TOL = 1e-10
# floor on the singular-value cutoff; a projector that should be exactly zero
# carries ~1e-16 noise, which a purely relative cutoff would invert.
PINV_ATOL = 1e-10
FEAS_EPS = 1e-9
# |alpha_h| below this (relative to max|alpha|) means the task cannot move row h
ALPHA_ZERO = 1e-12


class SolverError(RuntimeError):
    """Raised on invalid solver input or an internal defect."""


@dataclass(frozen=True)
class TaskSpec:
    xdot: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        xdot = np.atleast_1d(np.asarray(self.xdot, dtype=float))
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        object.__setattr__(self, "xdot", xdot)
        object.__setattr__(self, "J", J)
        if J.shape[0] != xdot.size:
            raise ValueError(f"task Jacobian has {J.shape[0]} rows but xdot has {xdot.size}")
        if not J.shape[0] < J.shape[1]:
            raise ValueError(f"task needs redundancy m < n, got m={J.shape[0]}, n={J.shape[1]}")
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(xdot))):
            raise SolverError("task contains non-finite entries")

    @property
    def m(self) -> int:
        return self.J.shape[0]

    @property
    def n(self) -> int:
        return self.J.shape[1]


@dataclass(frozen=True)
class ScalingOutcome:
    s: np.ndarray
    task_scale: float
    critical_row: int


@dataclass
class SnsResult:
    qdot: np.ndarray
    scale: float
    saturated: list[tuple[int, str]] = field(default_factory=list)
    iterations: int = 0
    scaled: bool = False

    @property
    def saturated_rows(self) -> list[int]:
        return [h for h, _ in self.saturated]


@dataclass(frozen=True)
class Violation:
    row: int
    side: str
    margin: float


def pseudoinverse(M, tol: float = PINV_TOL, atol: float = 0.0) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values at or below ``max(tol * sigma_max, atol)`` are treated as
    zero.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    p, q = M.shape
    if M.size == 0:
        return np.zeros((q, p))
    U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = max(tol * (sv[0] if sv.size else 0.0), atol)
    keep = sv > cutoff
    if not np.any(keep):
        return np.zeros((q, p))
    return (Vt[keep].T / sv[keep]) @ U[:, keep].T


def numerical_rank(M, tol: float = PINV_TOL, atol: float = 0.0) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > max(tol * sv[0], atol)))


def check_feasibility(qdot, A, bounds: GeneralizedBounds, eps: float = FEAS_EPS) -> list[Violation]:
    """Rows of ``A @ qdot`` outside the box by more than ``eps``.

    Margins are positive distances past the violated bound.
    """
    A = A.A if isinstance(A, AugmentedJacobian) else np.asarray(A, dtype=float)
    adot = A @ np.asarray(qdot, dtype=float)
    return _violations(adot, bounds, eps)


def _violations(adot, bounds, eps):
    out = []
    for h in np.flatnonzero((adot < bounds.b_min - eps) | (adot > bounds.b_max + eps)):
        if adot[h] > bounds.b_max[h] + eps:
            out.append(Violation(int(h), "max", float(adot[h] - bounds.b_max[h])))
        else:
            out.append(Violation(int(h), "min", float(bounds.b_min[h] - adot[h])))
    return out


def get_task_scaling_factor(alpha, beta, bounds: GeneralizedBounds, saturated=None,
                            eps: float = FEAS_EPS) -> ScalingOutcome:
    """Per-row largest admissible scaling of the task contribution ``alpha``.

    Rows listed in ``saturated`` are pinned to their bound and report 1.
    A row the task cannot move (``alpha_h`` numerically zero) reports 1 when
    ``beta_h`` already lies in its box and 0 otherwise. Ties on the minimum
    resolve to the lowest row index.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if not (alpha.shape == beta.shape == bounds.b_min.shape):
        raise ValueError("alpha, beta and bounds must have the same length")
    lower = bounds.b_min - beta
    upper = bounds.b_max - beta
    zero = ALPHA_ZERO * max(1.0, float(np.max(np.abs(alpha), initial=0.0)))
    s = np.zeros_like(alpha)
    for h in range(alpha.size):
        a, L, U = alpha[h], lower[h], upper[h]
        if abs(a) <= zero:
            s[h] = 1.0 if (L <= eps and U >= -eps) else 0.0
        elif a < 0 and L < 0:
            s[h] = L / a if a < L else 1.0
        elif a > 0 and U > 0:
            s[h] = U / a if a > U else 1.0
        else:
            s[h] = 0.0
    if saturated is not None:
        s[np.asarray(list(saturated), dtype=int)] = 1.0
    k = int(np.argmin(s))
    return ScalingOutcome(s=s, task_scale=float(s[k]), critical_row=k)


def sns_velocity(task: TaskSpec, A, bounds: GeneralizedBounds, tol: float = PINV_TOL,
                 eps: float = FEAS_EPS) -> SnsResult:
    """Joint velocity realising ``task`` under hard generalised box constraints.

    Violated rows are saturated one at a time, most critical first, and the
    task is re-solved in the null space of the saturated rows. When the task
    can no longer be realised in full, the best task scaling seen so far is
    applied instead, which keeps the direction of ``xdot``.
    """
    A = A.A if isinstance(A, AugmentedJacobian) else np.asarray(A, dtype=float)
    J, xdot = task.J, task.xdot
    n, m = task.n, task.m
    n_rows = A.shape[0]
    if A.shape[1] != n or len(bounds) != n_rows:
        raise ValueError(
            f"shape mismatch: J is {J.shape}, A is {A.shape}, bounds have {len(bounds)} rows"
        )
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(bounds.b_min))
            and np.all(np.isfinite(bounds.b_max))):
        raise SolverError("constraint data contains non-finite entries")

    b_min, b_max = bounds.b_min, bounds.b_max
    qdot_n = np.zeros(n)
    P = np.eye(n)
    best_scale, best_qdot_n, best_P = 0.0, qdot_n, P
    a_lim = np.zeros((0, n))
    adot_n = np.zeros(0)
    saturated: list[tuple[int, str]] = []

    for iteration in range(1, n_rows + 2):
        violated = False
        JP_pinv = pseudoinverse(J @ P, tol, PINV_ATOL)
        qdot = qdot_n + JP_pinv @ (xdot - J @ qdot_n)
        adot = A @ qdot
        bad = (adot < b_min - eps) | (adot > b_max + eps)
        if np.any(bad):
            violated = True
            alpha = A @ (JP_pinv @ xdot)
            beta = adot - alpha
            outcome = get_task_scaling_factor(
                alpha, beta, bounds, saturated=[h for h, _ in saturated], eps=eps
            )
            if outcome.task_scale > best_scale and _admissible(outcome.task_scale, alpha, beta, bounds, eps):
                best_scale = outcome.task_scale
                best_qdot_n, best_P = qdot_n, P
            free = np.ones(n_rows, dtype=bool)
            free[[h for h, _ in saturated]] = False
            k = outcome.critical_row
            if not (bad[k] and free[k]):
                # the minimum does not point at a violated free row (all of
                # them admit full scaling); saturate the first such row instead
                candidates = np.flatnonzero(bad & free)
                k = int(candidates[0]) if candidates.size else int(np.flatnonzero(free)[0])
            side = "max" if adot[k] > b_max[k] else "min"
            a_lim = np.vstack([a_lim, A[k]])
            adot_n = np.append(adot_n, b_max[k] if side == "max" else b_min[k])
            saturated.append((k, side))
            lim_pinv = pseudoinverse(a_lim, tol, PINV_ATOL)
            P = np.eye(n) - lim_pinv @ a_lim
            if numerical_rank(J @ P, tol, PINV_ATOL) < m:
                fallback_pinv = pseudoinverse(J @ best_P, tol, PINV_ATOL)
                qdot = best_qdot_n + fallback_pinv @ (best_scale * xdot - J @ best_qdot_n)
                return SnsResult(qdot, best_scale, saturated, iteration, scaled=True)
            qdot_n = lim_pinv @ adot_n
        if not violated:
            return SnsResult(qdot, 1.0, saturated, iteration, scaled=False)
    raise SolverError(f"SNS did not terminate within {n_rows + 1} iterations")


def _admissible(scale, alpha, beta, bounds, eps):
    # a positive row-wise scale can still leave rows whose null-space part
    # beta already sits outside the box on the side alpha does not reach
    adot = scale * alpha + beta
    return not np.any((adot < bounds.b_min - eps) | (adot > bounds.b_max + eps))
