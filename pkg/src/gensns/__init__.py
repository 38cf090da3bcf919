"""Velocity-level redundancy resolution with hard joint and Cartesian box constraints."""
from .constraints import GeneralizedBounds, LimitSet, generalized_bounds
from .kinematics import ControlPoint, RobotModel, augmented_matrix, ee_jacobian, forward_kinematics
from .sns import SnsResult, TaskSpec, get_task_scaling_factor, pseudoinverse, sns_velocity

__all__ = [
    "ControlPoint",
    "GeneralizedBounds",
    "LimitSet",
    "RobotModel",
    "SnsResult",
    "TaskSpec",
    "augmented_matrix",
    "ee_jacobian",
    "forward_kinematics",
    "generalized_bounds",
    "get_task_scaling_factor",
    "pseudoinverse",
    "sns_velocity",
]
