"""Forward kinematics and Jacobians of a planar serial arm with revolute joints."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXES = ("x", "y")


@dataclass(frozen=True)
class ControlPoint:
    """A Cartesian point on the arm whose coordinates are box-constrained.

    ``joint_index`` counts links from the base: the point sits at the frame
    after link ``joint_index`` (``n`` is the end-effector tip).
    """

    joint_index: int
    axes: tuple[str, ...] = ("y",)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes or len(set(self.axes)) != len(self.axes):
            raise ValueError(f"control point axes must be a non-empty set, got {self.axes}")
        for ax in self.axes:
            if ax not in AXES:
                raise ValueError(f"unknown axis {ax!r}; planar arms only have {AXES}")

    @property
    def dim(self) -> int:
        return len(self.axes)


@dataclass(frozen=True)
class RobotModel:
    link_lengths: tuple[float, ...]
    control_points: tuple[ControlPoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.link_lengths)
        object.__setattr__(self, "link_lengths", lengths)
        object.__setattr__(self, "control_points", tuple(self.control_points))
        if len(lengths) < 1:
            raise ValueError("a planar arm needs at least one link")
        if not all(np.isfinite(v) and v > 0 for v in lengths):
            raise ValueError(f"link lengths must be finite and positive, got {lengths}")
        for cp in self.control_points:
            if not 1 <= cp.joint_index <= len(lengths):
                raise ValueError(
                    f"control point joint_index {cp.joint_index} outside 1..{len(lengths)}"
                )

    @property
    def n(self) -> int:
        return len(self.link_lengths)

    @property
    def r(self) -> int:
        return len(self.control_points)

    @property
    def n_cartesian(self) -> int:
        """Total number of constrained Cartesian coordinates (sum of d_i)."""
        return sum(cp.dim for cp in self.control_points)

    @property
    def n_rows(self) -> int:
        return self.n + self.n_cartesian

    def row_map(self) -> tuple[RowSource, ...]:
        rows = [RowSource("joint", j) for j in range(self.n)]
        for i, cp in enumerate(self.control_points):
            rows.extend(RowSource("cp", i, ax) for ax in cp.axes)
        return tuple(rows)


@dataclass(frozen=True)
class RowSource:
    """Origin of one row of the augmented matrix.

    ``kind`` is ``"joint"`` (``index`` is the 0-based joint) or ``"cp"``
    (``index`` is the 0-based control point, ``axis`` its coordinate).
    """

    kind: str
    index: int
    axis: str | None = None

    def label(self) -> str:
        if self.kind == "joint":
            return f"q_{self.index + 1}"
        return f"cp_{self.axis}_{self.index + 1}"


@dataclass(frozen=True)
class AugmentedJacobian:
    A: np.ndarray
    row_map: tuple[RowSource, ...]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


def _as_config(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n,):
        raise ValueError(f"expected {model.n} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint configuration contains non-finite entries")
    return q


def forward_kinematics(model: RobotModel, q) -> np.ndarray:
    """Positions of the base and of every link end.

    Returns an ``(n + 1, 2)`` array; row 0 is the base at the origin and
    row ``n`` is the end-effector.
    """
    q = _as_config(model, q)
    theta = np.cumsum(q)
    lengths = np.asarray(model.link_lengths)
    pts = np.zeros((model.n + 1, 2))
    pts[1:, 0] = np.cumsum(lengths * np.cos(theta))
    pts[1:, 1] = np.cumsum(lengths * np.sin(theta))
    return pts


def _point_jacobian(model: RobotModel, pts: np.ndarray, k: int) -> np.ndarray:
    # joint j rotates everything distal to it about its own location pts[j]
    J = np.zeros((2, model.n))
    d = pts[k] - pts[:k]
    J[0, :k] = -d[:, 1]
    J[1, :k] = d[:, 0]
    return J


def ee_jacobian(model: RobotModel, q) -> np.ndarray:
    """Positional 2 x n Jacobian of the end-effector."""
    pts = forward_kinematics(model, q)
    return _point_jacobian(model, pts, model.n)


def control_point_position(model: RobotModel, q, cp_index: int) -> np.ndarray:
    cp = _control_point(model, cp_index)
    pts = forward_kinematics(model, q)
    return pts[cp.joint_index][[AXES.index(ax) for ax in cp.axes]]


def control_point_jacobian(model: RobotModel, q, cp_index: int) -> np.ndarray:
    """``d_i x n`` Jacobian of the selected coordinates of control point ``cp_index``."""
    cp = _control_point(model, cp_index)
    pts = forward_kinematics(model, q)
    J = _point_jacobian(model, pts, cp.joint_index)
    return J[[AXES.index(ax) for ax in cp.axes]]


def control_point_coordinates(model: RobotModel, q) -> np.ndarray:
    """All constrained control-point coordinates stacked in model order."""
    pts = forward_kinematics(model, q)
    out = [pts[cp.joint_index][AXES.index(ax)] for cp in model.control_points for ax in cp.axes]
    return np.array(out, dtype=float)


def augmented_matrix(model: RobotModel, q) -> AugmentedJacobian:
    """Identity stacked over every control-point Jacobian, in model order."""
    pts = forward_kinematics(model, q)
    blocks = [np.eye(model.n)]
    for cp in model.control_points:
        J = _point_jacobian(model, pts, cp.joint_index)
        blocks.append(J[[AXES.index(ax) for ax in cp.axes]])
    return AugmentedJacobian(np.vstack(blocks), model.row_map())


def _control_point(model: RobotModel, cp_index: int) -> ControlPoint:
    if not 0 <= cp_index < model.r:
        raise IndexError(f"control point index {cp_index} outside 0..{model.r - 1}")
    return model.control_points[cp_index]
