"""Per-step velocity boxes built from joint and Cartesian position/velocity limits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import RobotModel, RowSource


def _vec(values, size: int, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(values, dtype=float), (size,)).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class LimitSet:
    """Position and velocity limits for the joints and the control points.

    Cartesian arrays are flattened over the constrained coordinates of the
    control points, in model order (length ``sum(d_i)``).
    """

    q_min: np.ndarray
    q_max: np.ndarray
    v_min: np.ndarray
    v_max: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray
    pv_min: np.ndarray
    pv_max: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.q_min).size
        c = np.asarray(self.p_min).size
        for name in ("q_min", "q_max", "v_min", "v_max"):
            object.__setattr__(self, name, _vec(getattr(self, name), n, name))
        for name in ("p_min", "p_max", "pv_min", "pv_max"):
            object.__setattr__(self, name, _vec(getattr(self, name), c, name))
        if np.any(self.q_min >= self.q_max):
            raise ValueError("joint position limits need q_min < q_max")
        if np.any(self.v_min >= 0) or np.any(self.v_max <= 0):
            raise ValueError("joint velocity limits need v_min < 0 < v_max")
        if np.any(self.p_min >= self.p_max):
            raise ValueError("Cartesian position limits need p_min < p_max")
        if np.any(self.pv_min >= 0) or np.any(self.pv_max <= 0):
            raise ValueError("Cartesian velocity limits need pv_min < 0 < pv_max")

    @classmethod
    def uniform(cls, model: RobotModel, q_lim, v_lim, p_range=(-np.inf, np.inf), pv_lim=np.inf):
        """Symmetric joint limits and identical limits for every control-point coordinate."""
        n, c = model.n, model.n_cartesian
        return cls(
            q_min=np.full(n, -q_lim), q_max=np.full(n, q_lim),
            v_min=np.full(n, -v_lim), v_max=np.full(n, v_lim),
            p_min=np.full(c, p_range[0]), p_max=np.full(c, p_range[1]),
            pv_min=np.full(c, -pv_lim), pv_max=np.full(c, pv_lim),
        )

    @property
    def n(self) -> int:
        return self.q_min.size

    @property
    def n_cartesian(self) -> int:
        return self.p_min.size

    def check_model(self, model: RobotModel) -> None:
        if self.n != model.n or self.n_cartesian != model.n_cartesian:
            raise ValueError(
                f"limits sized for n={self.n}, sum(d)={self.n_cartesian}; "
                f"model has n={model.n}, sum(d)={model.n_cartesian}"
            )


@dataclass(frozen=True)
class GeneralizedBounds:
    b_min: np.ndarray
    b_max: np.ndarray
    row_map: tuple[RowSource, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "b_min", np.asarray(self.b_min, dtype=float))
        object.__setattr__(self, "b_max", np.asarray(self.b_max, dtype=float))
        if self.b_min.shape != self.b_max.shape or self.b_min.ndim != 1:
            raise ValueError("b_min and b_max must be vectors of equal length")
        if self.row_map and len(self.row_map) != self.b_min.size:
            raise ValueError("row_map length does not match the bounds")

    def __len__(self):
        return self.b_min.size


def _shape_box(pos, pos_min, pos_max, vel_min, vel_max, T):
    if not T > 0:
        raise ValueError(f"sampling time must be positive, got {T}")
    lo = np.maximum((pos_min - pos) / T, vel_min)
    hi = np.minimum((pos_max - pos) / T, vel_max)
    # A position limit already breached crosses the box; keep only the side
    # that drives the coordinate back inside, at the velocity limit.
    above = lo > hi
    if np.any(above):
        over = above & (pos > pos_max)
        under = above & ~over
        lo = np.where(over, vel_min, lo)
        hi = np.where(over, vel_min, hi)
        lo = np.where(under, vel_max, lo)
        hi = np.where(under, vel_max, hi)
    return lo, hi


def joint_velocity_box(limits: LimitSet, q, T: float) -> tuple[np.ndarray, np.ndarray]:
    q = np.asarray(q, dtype=float)
    if q.shape != (limits.n,):
        raise ValueError(f"expected {limits.n} joint angles, got shape {q.shape}")
    return _shape_box(q, limits.q_min, limits.q_max, limits.v_min, limits.v_max, T)


def cartesian_velocity_box(limits: LimitSet, p_cp, T: float) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p_cp, dtype=float)
    if p.shape != (limits.n_cartesian,):
        raise ValueError(
            f"expected {limits.n_cartesian} control-point coordinates, got shape {p.shape}"
        )
    return _shape_box(p, limits.p_min, limits.p_max, limits.pv_min, limits.pv_max, T)


def generalized_bounds(limits: LimitSet, q, p_cp, T: float, row_map=()) -> GeneralizedBounds:
    """Joint boxes followed by the control-point boxes, aligned with the augmented matrix."""
    jlo, jhi = joint_velocity_box(limits, q, T)
    clo, chi = cartesian_velocity_box(limits, p_cp, T)
    return GeneralizedBounds(np.concatenate([jlo, clo]), np.concatenate([jhi, chi]), tuple(row_map))
