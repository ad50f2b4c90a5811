"""Serial-manipulator kinematics and inverse dynamics.

Links follow the standard (distal) Denavit-Hartenberg convention::

    T_i = Rot_z(theta) @ Trans_z(d) @ Trans_x(a) @ Rot_x(alpha)

Inverse dynamics is the recursive Newton-Euler algorithm with Coulomb and
viscous friction added per joint. Dynamic parameters are not checked for
physical validity; the optimizers are allowed to probe any point in their box.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import _rne
from ._rne import NPARAM

JointKind = Literal["revolute", "prismatic"]

PARAM_NAMES = ("m", "sx", "sy", "sz", "Ixx", "Iyy", "Izz", "Ixy", "Iyz", "Ixz", "fc", "fv")


@dataclass(frozen=True)
class DHLink:
    a: float = 0.0
    alpha: float = 0.0
    d: float = 0.0
    theta_offset: float = 0.0
    joint_kind: JointKind = "revolute"

    def __post_init__(self):
        if self.joint_kind not in ("revolute", "prismatic"):
            raise ValueError(f"joint_kind must be 'revolute' or 'prismatic', got {self.joint_kind!r}")
        for name in ("a", "alpha", "d", "theta_offset"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"DH field {name} must be finite")

    @property
    def prismatic(self) -> bool:
        return self.joint_kind == "prismatic"


@dataclass(frozen=True)
class RobotModel:
    links: tuple[DHLink, ...]
    gravity: tuple[float, float, float] = (0.0, 0.0, -9.81)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "gravity", tuple(float(g) for g in self.gravity))
        if len(self.links) < 1:
            raise ValueError("a robot needs at least one link")
        if len(self.gravity) != 3 or not np.all(np.isfinite(self.gravity)):
            raise ValueError("gravity must be a finite 3-vector")

    @property
    def n(self) -> int:
        return len(self.links)

    def arrays(self):
        """DH columns as contiguous arrays, in the order the kernels expect."""
        a = np.array([lk.a for lk in self.links], dtype=float)
        alpha = np.array([lk.alpha for lk in self.links], dtype=float)
        d = np.array([lk.d for lk in self.links], dtype=float)
        theta0 = np.array([lk.theta_offset for lk in self.links], dtype=float)
        prismatic = np.array([lk.prismatic for lk in self.links], dtype=np.bool_)
        return a, alpha, d, theta0, prismatic, np.array(self.gravity, dtype=float)


@dataclass
class LinkDynamicParams:
    """Twelve dynamic parameters of one link.

    ``inertia`` is ``(Ixx, Iyy, Izz, Ixy, Iyz, Ixz)`` about the center of mass,
    expressed in the link frame.
    """

    m: float = 0.0
    s: tuple[float, float, float] = (0.0, 0.0, 0.0)
    inertia: tuple[float, float, float, float, float, float] = (0.0,) * 6
    fc: float = 0.0
    fv: float = 0.0

    def __post_init__(self):
        self.s = tuple(float(x) for x in self.s)
        self.inertia = tuple(float(x) for x in self.inertia)
        if len(self.s) != 3 or len(self.inertia) != 6:
            raise ValueError("s needs 3 components and inertia 6")
        if not np.all(np.isfinite(self.to_vector())):
            raise ValueError("dynamic parameters must be finite")

    def to_vector(self) -> np.ndarray:
        return np.array([self.m, *self.s, *self.inertia, self.fc, self.fv], dtype=float)

    @classmethod
    def from_vector(cls, v) -> "LinkDynamicParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (NPARAM,):
            raise ValueError(f"expected {NPARAM} values, got shape {v.shape}")
        return cls(m=float(v[0]), s=tuple(v[1:4]), inertia=tuple(v[4:10]), fc=float(v[10]), fv=float(v[11]))


@dataclass
class DynamicParams:
    per_link: list[LinkDynamicParams] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.per_link)

    def flatten(self) -> np.ndarray:
        if not self.per_link:
            return np.zeros(0)
        return np.concatenate([lp.to_vector() for lp in self.per_link])

    @classmethod
    def unflatten(cls, v) -> "DynamicParams":
        v = np.asarray(v, dtype=float).ravel()
        if v.size % NPARAM:
            raise ValueError(f"flat parameter vector length {v.size} is not a multiple of {NPARAM}")
        return cls([LinkDynamicParams.from_vector(chunk) for chunk in v.reshape(-1, NPARAM)])

    @classmethod
    def zeros(cls, n: int) -> "DynamicParams":
        return cls([LinkDynamicParams() for _ in range(n)])


def param_names(n: int) -> list[str]:
    """Flat parameter labels, e.g. ``m1``, ``sz3``, ``Ixz1``."""
    return [f"{name}{i + 1}" for i in range(n) for name in PARAM_NAMES]


def param_index(name: str, n: int) -> int:
    names = param_names(n)
    try:
        return names.index(name)
    except ValueError:
        raise KeyError(f"unknown parameter {name!r}; expected one of {names}") from None


def link_transform(link: DHLink, joint_value: float) -> np.ndarray:
    """Homogeneous transform of one DH link for the given joint value."""
    if not np.isfinite(joint_value):
        raise ValueError("joint value must be finite")
    if link.prismatic:
        th, d = link.theta_offset, link.d + joint_value
    else:
        th, d = link.theta_offset + joint_value, link.d
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(link.alpha), np.sin(link.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, link.a * ct],
            [st, ct * ca, -ct * sa, link.a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def forward_kinematics(model: RobotModel, q: Sequence[float]) -> list[np.ndarray]:
    """Base-frame transforms of every link frame."""
    q = _as_joint_vector(q, model.n, "q")
    T = np.eye(4)
    out = []
    for link, qi in zip(model.links, q):
        T = T @ link_transform(link, qi)
        out.append(T)
    return out


def friction_torque(link_params: LinkDynamicParams, qd_j: float) -> float:
    return float(link_params.fc * np.sign(qd_j) + link_params.fv * qd_j)


def _as_joint_vector(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def _as_params(params, n):
    p = params.flatten() if isinstance(params, DynamicParams) else np.asarray(params, dtype=float).ravel()
    if p.size != NPARAM * n:
        raise ValueError(f"expected {NPARAM * n} dynamic parameters for {n} links, got {p.size}")
    return np.ascontiguousarray(p)


def inverse_dynamics(model: RobotModel, params, q, qd, qdd) -> np.ndarray:
    """Joint forces/torques for a single state, friction included."""
    n = model.n
    q = _as_joint_vector(q, n, "q")
    qd = _as_joint_vector(qd, n, "qd")
    qdd = _as_joint_vector(qdd, n, "qdd")
    return inverse_dynamics_batch(model, params, q[None], qd[None], qdd[None])[0]


def inverse_dynamics_batch(model: RobotModel, params, Q, QD, QDD) -> np.ndarray:
    """Inverse dynamics for ``N`` states at once; arrays are ``(N, n)``."""
    n = model.n
    arrs = []
    for name, X in (("q", Q), ("qd", QD), ("qdd", QDD)):
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != n:
            raise ValueError(f"{name} must have shape (N, {n}), got {X.shape}")
        arrs.append(X)
    if not (arrs[0].shape == arrs[1].shape == arrs[2].shape):
        raise ValueError("q, qd, qdd must have the same number of rows")
    p = _as_params(params, n)
    return _rne.rne_batch(*model.arrays(), p, *arrs)
