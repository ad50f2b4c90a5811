"""Fourier excitation trajectories and their planning.

Every joint follows ``q_j(t) = c_j + sum_k a_kj sin(w_kj t)`` for ``k = 1..3``.
Excitation quality is the Gram determinant of the sampled state matrix
(positions, velocities and accelerations of every joint, one row per sample),
penalized when the motion leaves the joint limits.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .pso import PsoConfig, SearchBox, minimize

log = logging.getLogger(__name__)

NTERMS = 3
FAITHFUL_PENALTY = 1e40
STABLE_PENALTY = 1e6

ObjectiveMode = Literal["stable", "faithful"]


class PlanningError(RuntimeError):
    """No feasible trajectory was found."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass
class FourierTrajectory:
    offset: np.ndarray  # (n,)
    amplitude: np.ndarray  # (n, 3)
    omega: np.ndarray  # (n, 3) rad/s
    T: float = 10.0

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float).ravel()
        n = self.offset.size
        self.amplitude = np.asarray(self.amplitude, dtype=float).reshape(n, NTERMS)
        self.omega = np.asarray(self.omega, dtype=float).reshape(n, NTERMS)
        self.T = float(self.T)
        if not self.T > 0:
            raise ValueError("trajectory duration must be positive")
        if not (np.all(np.isfinite(self.offset)) and np.all(np.isfinite(self.amplitude)) and np.all(np.isfinite(self.omega))):
            raise ValueError("trajectory coefficients must be finite")

    @property
    def n(self) -> int:
        return self.offset.size

    def sinusoid_vector(self) -> np.ndarray:
        """The 6n free parameters, ``(a1, w1, a2, w2, a3, w3)`` per joint."""
        return np.stack([self.amplitude, self.omega], axis=-1).ravel()

    @classmethod
    def from_sinusoid_vector(cls, x, offset, T=10.0) -> "FourierTrajectory":
        offset = np.asarray(offset, dtype=float).ravel()
        x = np.asarray(x, dtype=float).reshape(offset.size, NTERMS, 2)
        return cls(offset=offset, amplitude=x[..., 0], omega=x[..., 1], T=T)

    def states(self, t):
        """Vectorized evaluation; returns ``(Q, QD, QDD)`` each ``(len(t), n)``.

        No range check, see :func:`eval_trajectory` for the checked version.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        wt = t[:, None, None] * self.omega[None]
        s, c = np.sin(wt), np.cos(wt)
        a = self.amplitude[None]
        q = self.offset[None] + np.sum(a * s, axis=-1)
        qd = np.sum(a * self.omega * c, axis=-1)
        qdd = -np.sum(a * self.omega**2 * s, axis=-1)
        return q, qd, qdd

    def sample_times(self, N: int) -> np.ndarray:
        if N < 1:
            raise ValueError("need at least one sample")
        return self.T / N * np.arange(1, N + 1)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "joints": [
                {
                    "offset": float(self.offset[j]),
                    "terms": [[float(a), float(w)] for a, w in zip(self.amplitude[j], self.omega[j])],
                }
                for j in range(self.n)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FourierTrajectory":
        joints = data["joints"]
        offsets, amps, omegas = [], [], []
        for j, jt in enumerate(joints):
            terms = jt["terms"]
            if len(terms) != NTERMS or any(len(t) != 2 for t in terms):
                raise ValueError(f"joint {j + 1}: expected {NTERMS} [amplitude, omega] pairs")
            offsets.append(jt.get("offset", 0.0))
            amps.append([t[0] for t in terms])
            omegas.append([t[1] for t in terms])
        return cls(offset=offsets, amplitude=amps, omega=omegas, T=data.get("T", 10.0))

    def write_csv(self, path, N: int = 1000):
        """Plot-ready time series ``t, q1..qn, qd1..qdn, qdd1..qddn``."""
        t = self.T / N * np.arange(0, N + 1)
        q, qd, qdd = self.states(t)
        n = self.n
        header = ["t"] + [f"q{j}" for j in range(1, n + 1)] + [f"qd{j}" for j in range(1, n + 1)] + [f"qdd{j}" for j in range(1, n + 1)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in np.column_stack([t, q, qd, qdd]):
                w.writerow([repr(float(v)) for v in row])


def eval_trajectory(traj: FourierTrajectory, t: float):
    """Position, velocity and acceleration of every joint at time ``t``."""
    if not (0.0 <= t <= traj.T):
        raise ValueError(f"t={t} outside [0, {traj.T}]")
    q, qd, qdd = traj.states([t])
    return q[0], qd[0], qdd[0]


@dataclass
class JointConstraints:
    q_min: np.ndarray
    q_max: np.ndarray
    qd_min: np.ndarray
    qd_max: np.ndarray
    qdd_min: np.ndarray
    qdd_max: np.ndarray
    margin: float = 0.02

    def __post_init__(self):
        for name in ("q_min", "q_max", "qd_min", "qd_max", "qdd_min", "qdd_max"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        n = self.q_min.size
        for name in ("q_max", "qd_min", "qd_max", "qdd_min", "qdd_max"):
            if getattr(self, name).size != n:
                raise ValueError("all constraint vectors need the same length")
        for lo, hi in (("q_min", "q_max"), ("qd_min", "qd_max"), ("qdd_min", "qdd_max")):
            bad = np.flatnonzero(getattr(self, lo) >= getattr(self, hi))
            if bad.size:
                raise ValueError(f"{lo} must be below {hi} (joints {(bad + 1).tolist()})")
        if not 0 <= self.margin < 1:
            raise ValueError("margin must lie in [0, 1)")

    @classmethod
    def uniform(cls, n, q, qd, qdd, margin=0.02) -> "JointConstraints":
        rep = lambda v: np.full(n, float(v))
        return cls(rep(q[0]), rep(q[1]), rep(qd[0]), rep(qd[1]), rep(qdd[0]), rep(qdd[1]), margin=margin)

    @property
    def n(self) -> int:
        return self.q_min.size

    def effective(self):
        """Bounds shrunk toward their centers by ``margin``; shape ``(3, 2, n)``."""
        out = []
        for lo, hi in ((self.q_min, self.q_max), (self.qd_min, self.qd_max), (self.qdd_min, self.qdd_max)):
            c, h = 0.5 * (lo + hi), 0.5 * (hi - lo) * (1.0 - self.margin)
            out.append((c - h, c + h))
        return np.array(out)


@dataclass
class Violation:
    joint: int  # 1-based
    order: str  # "q", "qd" or "qdd"
    t: float
    value: float
    bound: float

    @property
    def excess(self) -> float:
        return abs(self.value - self.bound)

    def __str__(self):
        return f"joint {self.joint} {self.order}={self.value:.4g} at t={self.t:.4g} (bound {self.bound:.4g})"


@dataclass
class ConstraintCheck:
    a: int
    violations: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.a == 0

    def worst(self, k=5):
        return sorted(self.violations, key=lambda v: -v.excess)[:k]


_ORDERS = ("q", "qd", "qdd")


def check_times(T: float, N: int, grid: int) -> np.ndarray:
    """Dense check grid on ``[0, T]`` merged with the sample times."""
    if grid < N:
        raise ValueError("check grid must be at least as dense as the sample grid")
    dense = T / grid * np.arange(0, grid + 1)
    return np.union1d(dense, T / N * np.arange(1, N + 1))


def _violation_mask(states, bounds):
    # states: 3 arrays (m, n); bounds: (3, 2, n)
    return [(x < b[0]) | (x > b[1]) for x, b in zip(states, bounds)]


def check_constraints(traj: FourierTrajectory, cons: JointConstraints, grid: int, N: Optional[int] = None) -> ConstraintCheck:
    """Binary feasibility flag plus every violation found on the check grid."""
    if cons.n != traj.n:
        raise ValueError("constraint and trajectory joint counts differ")
    t = check_times(traj.T, N if N is not None else grid, grid)
    states = traj.states(t)
    bounds = cons.effective()
    violations = []
    for order, x, b, mask in zip(_ORDERS, states, bounds, _violation_mask(states, bounds)):
        for i, j in zip(*np.nonzero(mask)):
            bound = b[0][j] if x[i, j] < b[0][j] else b[1][j]
            violations.append(Violation(int(j) + 1, order, float(t[i]), float(x[i, j]), float(bound)))
    return ConstraintCheck(a=int(bool(violations)), violations=violations)


def build_qsam(traj: FourierTrajectory, N: int) -> np.ndarray:
    """``N x 3n`` matrix; row i is ``[q_1, qd_1, qdd_1, ..., q_n, qd_n, qdd_n]``."""
    t = traj.sample_times(N)
    q, qd, qdd = traj.states(t)
    return np.stack([q, qd, qdd], axis=-1).reshape(N, 3 * traj.n)


def gram_det(Q: np.ndarray) -> float:
    """``|det(QᵀQ)|`` straight from the Gram matrix; exactly 0 when Q has fewer rows than columns."""
    if Q.shape[0] < Q.shape[1]:
        return 0.0
    return float(abs(np.linalg.det(Q.T @ Q)))


def gram_logdet(Q: np.ndarray) -> float:
    """``log det(QᵀQ)`` from the singular values of Q; ``-inf`` when singular."""
    if Q.shape[0] < Q.shape[1]:
        return -np.inf
    sv = np.linalg.svd(Q, compute_uv=False)
    if np.any(sv <= 0.0):
        return -np.inf
    return float(2.0 * np.sum(np.log(sv)))


def excitation_objective(
    traj: FourierTrajectory,
    cons: JointConstraints,
    N: int = 100,
    grid: Optional[int] = None,
    mode: ObjectiveMode = "stable",
) -> float:
    """Excitation score to maximize; negative exactly when the motion is infeasible.

    ``faithful``: ``|det(QᵀQ)| - a * 1e40``.
    ``stable``: ``log(1 + det(QᵀQ)) - a * 1e6``, evaluated through log-det so
    it neither overflows nor underflows; same ordering as the determinant.
    """
    grid = 10 * N if grid is None else grid
    a = check_constraints_flag(traj, cons, N, grid)
    Q = build_qsam(traj, N)
    if mode == "faithful":
        return gram_det(Q) - a * FAITHFUL_PENALTY
    if mode == "stable":
        return float(np.logaddexp(0.0, gram_logdet(Q))) - a * STABLE_PENALTY
    raise ValueError(f"unknown objective mode {mode!r}")


def check_constraints_flag(traj, cons, N, grid) -> int:
    """Fast path of :func:`check_constraints` returning only the flag."""
    t = check_times(traj.T, N, grid)
    states = traj.states(t)
    return int(any(m.any() for m in _violation_mask(states, cons.effective())))


def default_planning_box(cons: JointConstraints, omega_max: float = 3.0, amplitude_max=None) -> SearchBox:
    """Amplitudes within half the joint range (or ``amplitude_max``), frequencies
    in ``[-omega_max, omega_max]``."""
    half = 0.5 * (cons.q_max - cons.q_min) if amplitude_max is None else np.broadcast_to(np.asarray(amplitude_max, dtype=float), (cons.n,))
    lo = np.empty((cons.n, NTERMS, 2))
    hi = np.empty_like(lo)
    lo[..., 0] = -half[:, None]
    hi[..., 0] = half[:, None]
    lo[..., 1] = -omega_max
    hi[..., 1] = omega_max
    return SearchBox(lo.ravel(), hi.ravel())


def plan_trajectory(
    cons: JointConstraints,
    start: Sequence[float],
    box: Optional[SearchBox] = None,
    pso_config: PsoConfig = PsoConfig(),
    N: int = 100,
    grid: Optional[int] = None,
    T: float = 10.0,
    mode: ObjectiveMode = "stable",
    workers: int = 1,
) -> FourierTrajectory:
    """Search the sinusoid coefficients that maximize the excitation score.

    Offsets are pinned to ``start``. Raises :class:`PlanningError` when the
    swarm never visits a feasible point.
    """
    start = np.asarray(start, dtype=float).ravel()
    if start.size != cons.n:
        raise ValueError("start configuration has the wrong number of joints")
    if np.any(start < cons.q_min) or np.any(start > cons.q_max):
        raise ValueError("start configuration lies outside the position bounds")
    grid = 10 * N if grid is None else grid
    box = default_planning_box(cons) if box is None else box
    if box.dim != 6 * cons.n:
        raise ValueError(f"planning box must have {6 * cons.n} dimensions, got {box.dim}")

    def neg_score(x):
        traj = FourierTrajectory.from_sinusoid_vector(x, start, T)
        return -excitation_objective(traj, cons, N, grid, mode)

    neg_score.dim = box.dim
    res = minimize(neg_score, box, pso_config, workers=workers)
    best = FourierTrajectory.from_sinusoid_vector(res.best_position, start, T)
    check = check_constraints(best, cons, grid, N)
    if not check.feasible:
        worst = check.worst()
        detail = "; ".join(str(v) for v in worst)
        raise PlanningError(f"no feasible trajectory found after {pso_config.iterations} iterations; worst violations: {detail}", worst)
    log.info("planned trajectory score %.6g", -res.best_value)
    return best
