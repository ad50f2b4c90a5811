"""Bundled robots and reference trajectories for the cylindrical arm.

The cylindrical robot has one revolute joint about the vertical axis followed
by a vertical and a radial prismatic joint.

Tabulated centers of mass are printed as negated components; the values below
store ``s`` itself, so every tabulated 0.5 becomes -0.5 here.
"""
import numpy as np

from .dynamics import DHLink, DynamicParams, LinkDynamicParams, RobotModel
from .trajectory import FourierTrajectory, JointConstraints


def cylindrical_robot(gravity=(0.0, 0.0, -9.81)) -> RobotModel:
    return RobotModel(
        links=(
            DHLink(a=0.0, alpha=0.0, d=0.0, joint_kind="revolute"),
            DHLink(a=0.0, alpha=-np.pi / 2, d=0.0, joint_kind="prismatic"),
            DHLink(a=0.0, alpha=0.0, d=0.0, joint_kind="prismatic"),
        ),
        gravity=gravity,
    )


def cylindrical_true_params() -> DynamicParams:
    """Full 36-parameter ground truth used in the simulated experiment."""
    return DynamicParams(
        [
            LinkDynamicParams(m=2.0, s=(-0.5, -0.5, -1.0), inertia=(4.0, 1.0, 4.0, 1.0, 1.0, 1.0), fc=1.0, fv=1.0),
            LinkDynamicParams(m=5.0, s=(-0.5, -0.5, -0.5), inertia=(3.0, 1.0, 3.0, 1.0, 1.0, 1.0), fc=1.0, fv=1.0),
            LinkDynamicParams(m=3.0, s=(-0.5, -0.5, -0.5), inertia=(2.0, 2.0, 2.0, 0.5, 0.5, 0.5), fc=1.0, fv=1.0),
        ]
    )


# Only m2, m3, sz3 and Izz1 + Iyy2 + Iyy3 reach the joint torques of the
# one-dimensional, frictionless variant.
SIMPLIFIED_FREE = ("m2", "m3", "sz3", "Izz1", "Iyy2", "Iyy3")


def simplified_true_params() -> DynamicParams:
    """Frictionless variant with all mass on the link axes.

    The vertical-axis inertia sum is 3, split evenly across the three links.
    """
    return DynamicParams(
        [
            LinkDynamicParams(m=0.0, inertia=(0.0, 0.0, 1.0, 0.0, 0.0, 0.0)),
            LinkDynamicParams(m=5.0, inertia=(0.0, 1.0, 0.0, 0.0, 0.0, 0.0)),
            LinkDynamicParams(m=3.0, s=(0.0, 0.0, -0.5), inertia=(0.0, 1.0, 0.0, 0.0, 0.0, 0.0)),
        ]
    )


def _fourier(offsets, terms, T=10.0) -> FourierTrajectory:
    terms = np.asarray(terms, dtype=float)
    return FourierTrajectory(offset=np.asarray(offsets, dtype=float), amplitude=terms[..., 0], omega=terms[..., 1], T=T)


def experiment_trajectory() -> FourierTrajectory:
    """Excitation trajectory used for the full 36-parameter experiment."""
    return _fourier(
        [-2.63, 0.11, -0.08],
        [
            [(0.97, 1.15), (0.83, 1.1), (1.94, 0.42)],
            [(0.96, 0.57), (0.35, 2.05), (-1.1, 0.12)],
            [(-2.3, 0.07), (0.32, 1.5), (1.42, 0.38)],
        ],
    )


def verification_trajectory() -> FourierTrajectory:
    """Reference motion used to compare true and estimated torques."""
    return _fourier(
        [-2.7, -0.06, 0.16],
        [
            [(1.97, 0.5), (0.44, 2.2), (0.35, 0.9)],
            [(0.6, 1.7), (-0.3, 1.45), (0.86, 0.7)],
            [(0.4, 0.3), (0.4, 1.3), (0.13, 1.2)],
        ],
    )


# (a1, w1, a2, w2, a3, w3) per joint, columns of the published comparison.
_PLANNED_REF = [
    [0.0184, 0.0113, 0.2105, 2.2918, 0.3841, 0.5601],
    [0.0308, 0.0624, -0.2101, -0.0124, 0.5056, 1.3691],
    [0.3410, 1.8234, -0.1658, -0.3325, 0.2849, -0.8144],
]
_RANDOM_1 = [
    [0.0494, 0.1000, 0.0085, 0.0688, 0.0486, 0.0332],
    [-0.0076, 0.0771, 0.0546, 0.0709, 0.0614, -0.1922],
    [0.0590, 0.0486, 0.0082, 0.0563, 0.0553, 0.0309],
]
_RANDOM_2 = [
    [0.0061, 0.0869, 0.0440, -0.7861, 0.0973, -0.0211],
    [0.1192, 0.1507, 0.1028, 0.0928, -0.1604, 0.0903],
    [0.1019, 0.1026, 0.0765, 0.0726, 0.0726, 0.0349],
]


def _from_rows(rows, start, T):
    rows = np.asarray(rows, dtype=float).reshape(3, 3, 2)
    return _fourier(start, rows, T=T)


def reference_planned_trajectory(start=(0.5, 0.5, 0.5), T=10.0) -> FourierTrajectory:
    return _from_rows(_PLANNED_REF, start, T)


def random_trajectory_1(start=(0.5, 0.5, 0.5), T=10.0) -> FourierTrajectory:
    return _from_rows(_RANDOM_1, start, T)


def random_trajectory_2(start=(0.5, 0.5, 0.5), T=10.0) -> FourierTrajectory:
    return _from_rows(_RANDOM_2, start, T)


def simplified_constraints(margin=0.02):
    """Unit box bounds used for the simplified planning experiment."""
    return JointConstraints.uniform(3, q=(0.0, 1.0), qd=(-1.0, 1.0), qdd=(-1.0, 1.0), margin=margin)


def experiment_constraints(margin=0.02):
    return JointConstraints(
        q_min=[-np.pi, 0.0, 0.0],
        q_max=[np.pi, 1.0, 1.0],
        qd_min=[-4.0, -2.0, -1.5],
        qd_max=[4.0, 2.0, 1.5],
        qdd_min=[-3.0, -2.0, -1.0],
        qdd_max=[3.0, 2.0, 1.0],
        margin=margin,
    )
