"""Parameter estimation without a regressor.

A PSO particle is a full set of physical link parameters; its cost is the norm
of the matrix of torque prediction errors over all samples. Repeated seeded
runs give per-parameter spread statistics from which identifiability follows.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from . import _rne
from .dynamics import NPARAM, DynamicParams, RobotModel, inverse_dynamics_batch, param_index, param_names
from .pso import PsoConfig, PsoResult, SearchBox, minimize
from .trajectory import FourierTrajectory, JointConstraints, check_constraints

log = logging.getLogger(__name__)

NormMode = Literal["fro", "spectral"]

I_STATUS, SI_NUI_STATUS, UI_STATUS = "I", "SI/NUI", "UI"


class EstimationError(RuntimeError):
    pass


class ClassificationError(EstimationError):
    """A run failed; ``runs`` holds whatever finished before it."""

    def __init__(self, message, runs):
        super().__init__(message)
        self.runs = runs


@dataclass(frozen=True)
class Sample:
    t: float
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray


@dataclass
class SampleSet:
    """Column-stacked samples: ``t`` is ``(N,)``, the rest ``(N, n)``."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.t = np.ascontiguousarray(self.t, dtype=float).ravel()
        for name in ("q", "qd", "qdd", "tau"):
            setattr(self, name, np.ascontiguousarray(np.atleast_2d(getattr(self, name)), dtype=float))
        N = self.t.size
        shapes = {getattr(self, k).shape for k in ("q", "qd", "qdd", "tau")}
        if len(shapes) != 1 or next(iter(shapes))[0] != N:
            raise ValueError("sample arrays disagree in shape")
        if N and not all(np.all(np.isfinite(getattr(self, k))) for k in ("t", "q", "qd", "qdd", "tau")):
            raise ValueError("samples must be finite")

    def __len__(self):
        return self.t.size

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def __getitem__(self, i) -> Sample:
        return Sample(float(self.t[i]), self.q[i], self.qd[i], self.qdd[i], self.tau[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "SampleSet":
        samples = list(samples)
        if not samples:
            raise ValueError("no samples")
        return cls(
            t=[s.t for s in samples],
            q=[s.q for s in samples],
            qd=[s.qd for s in samples],
            qdd=[s.qdd for s in samples],
            tau=[s.tau for s in samples],
        )


def _as_sample_set(samples) -> SampleSet:
    return samples if isinstance(samples, SampleSet) else SampleSet.from_samples(samples)


def generate_samples(
    model: RobotModel,
    true_params: DynamicParams,
    traj: FourierTrajectory,
    N: int,
    noise_level: float = 0.0,
    seed: int = 0,
    constraints: Optional[JointConstraints] = None,
) -> SampleSet:
    """Simulated measurements at ``t = T/N * i``, ``i = 1..N``.

    Every stored scalar of q, qd, qdd and tau becomes ``x * (1 + u)`` with
    ``u ~ U[-noise_level, noise_level]`` drawn independently.
    """
    if noise_level < 0:
        raise ValueError("noise_level must be non-negative")
    if traj.n != model.n:
        raise ValueError("trajectory and robot have different joint counts")
    if constraints is not None:
        check = check_constraints(traj, constraints, 10 * N, N)
        if not check.feasible:
            worst = "; ".join(str(v) for v in check.worst(3))
            warnings.warn(f"sampling an infeasible trajectory ({worst})", stacklevel=2)
    t = traj.sample_times(N)
    q, qd, qdd = traj.states(t)
    tau = inverse_dynamics_batch(model, true_params, q, qd, qdd)
    if noise_level > 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        q, qd, qdd, tau = (x * (1.0 + rng.uniform(-noise_level, noise_level, size=x.shape)) for x in (q, qd, qdd, tau))
    return SampleSet(t=t, q=q, qd=qd, qdd=qdd, tau=tau)


def prediction_error(model: RobotModel, candidate, samples) -> np.ndarray:
    """``n x N`` error matrix, column i is measured minus predicted torque."""
    samples = _as_sample_set(samples)
    if samples.n != model.n:
        raise ValueError(f"samples have {samples.n} joints, robot has {model.n}")
    tau_hat = inverse_dynamics_batch(model, candidate, samples.q, samples.qd, samples.qdd)
    return (samples.tau - tau_hat).T


def cost(E: np.ndarray, norm: NormMode = "fro") -> float:
    E = np.asarray(E, dtype=float)
    if norm == "fro":
        return float(np.sqrt(np.sum(E * E)))
    if norm == "spectral":
        return float(np.linalg.norm(E, 2)) if E.size else 0.0
    raise ValueError(f"unknown norm {norm!r}")


class EstimationObjective:
    """PSO cost over a (possibly reduced) parameter vector.

    Entries listed in ``free`` are searched; all others stay at ``base``.
    """

    def __init__(self, model: RobotModel, samples, free: Optional[Sequence[int]] = None, base=None, norm: NormMode = "fro"):
        samples = _as_sample_set(samples)
        if len(samples) == 0:
            raise EstimationError("no samples")
        if samples.n != model.n:
            raise ValueError(f"samples have {samples.n} joints, robot has {model.n}")
        self.model = model
        self.samples = samples
        self.norm = norm
        full = NPARAM * model.n
        self.base = np.zeros(full) if base is None else np.array(_flat(base), dtype=float)
        if self.base.size != full:
            raise ValueError(f"base parameters need {full} values")
        self.free = np.arange(full) if free is None else np.asarray(free, dtype=int)
        self.dim = self.free.size
        self._arrays = model.arrays()

    def expand(self, x) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        P = np.repeat(self.base[None], X.shape[0], axis=0)
        P[:, self.free] = X
        return P

    def batch(self, X) -> np.ndarray:
        P = np.ascontiguousarray(self.expand(X))
        s = self.samples
        if self.norm == "fro":
            return _rne.cost_batch(*self._arrays, P, s.q, s.qd, s.qdd, s.tau)
        return np.array([cost((s.tau - _rne.rne_batch(*self._arrays, p, s.q, s.qd, s.qdd)).T, self.norm) for p in P])

    def __call__(self, x) -> float:
        return float(self.batch(x)[0])


def _flat(params) -> np.ndarray:
    return params.flatten() if isinstance(params, DynamicParams) else np.asarray(params, dtype=float).ravel()


def resolve_free(free, n: int):
    """Accept parameter names or flat indices; ``None`` means all."""
    if free is None:
        return None
    return [param_index(f, n) if isinstance(f, str) else int(f) for f in free]


@dataclass
class EstimationRun:
    best_params: DynamicParams
    best_cost: float
    pso: PsoResult = field(repr=False)
    seed: int = 0

    @property
    def history(self) -> np.ndarray:
        return self.pso.history


def estimate(
    model: RobotModel,
    samples,
    box: SearchBox,
    pso_config: PsoConfig = PsoConfig(),
    free=None,
    base=None,
    norm: NormMode = "fro",
) -> EstimationRun:
    """One PSO estimation run; ``box`` spans the free parameters."""
    objective = EstimationObjective(model, samples, resolve_free(free, model.n), base, norm)
    if box.dim != objective.dim:
        raise ValueError(f"search box has {box.dim} dimensions, expected {objective.dim}")
    res = minimize(objective.batch, box, pso_config, vectorized=True)
    best = DynamicParams.unflatten(objective.expand(res.best_position)[0])
    return EstimationRun(best_params=best, best_cost=res.best_value, pso=res, seed=pso_config.seed)


def sensitivity_probe(model: RobotModel, samples, base, param_index: int, delta: float = 0.2, floor: float = 0.1, eps: float = 1e-12, norm: NormMode = "fro") -> float:
    """Largest relative cost change when one parameter moves by ``±delta``."""
    p0 = _flat(base).copy()
    objective = EstimationObjective(model, samples, norm=norm)
    step = delta * max(abs(p0[param_index]), floor)
    P = np.repeat(p0[None], 3, axis=0)
    P[1, param_index] += step
    P[2, param_index] -= step
    c = objective.batch(P)
    return float(np.max(np.abs(c[1:] - c[0])) / max(c[0], eps))


@dataclass
class ParameterStats:
    name: str
    link: int
    mean: float
    cv: float
    spread: float
    status: str
    sensitivity: Optional[float] = None
    true_value: Optional[float] = None


@dataclass
class EstimationReport:
    parameters: list
    runs: list = field(repr=False)
    settings: dict = field(default_factory=dict)

    @property
    def best_run(self) -> EstimationRun:
        return min(self.runs, key=lambda r: r.best_cost)

    def mean_params(self) -> DynamicParams:
        """Per-parameter means over runs (every run shares the fixed entries)."""
        return DynamicParams.unflatten(np.mean([r.best_params.flatten() for r in self.runs], axis=0))

    def by_name(self, name: str) -> ParameterStats:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "settings": self.settings,
            "runs": [{"seed": r.seed, "best_cost": r.best_cost, "params": r.best_params.flatten().tolist()} for r in self.runs],
            "parameters": [
                {
                    "name": p.name,
                    "link": p.link,
                    "true_value": p.true_value,
                    "mean": p.mean,
                    "cv": p.cv,
                    "spread": p.spread,
                    "status": p.status,
                    "sensitivity": p.sensitivity,
                }
                for p in self.parameters
            ],
        }


def _cv(x: np.ndarray) -> float:
    mean, std = float(np.mean(x)), float(np.std(x, ddof=1))
    if mean == 0.0:
        return 0.0 if std == 0.0 else np.inf
    return std / abs(mean)


def classify(
    model: RobotModel,
    samples,
    box: SearchBox,
    pso_config: PsoConfig = PsoConfig(),
    R: int = 10,
    delta: float = 0.2,
    cv_threshold: float = 0.15,
    sens_threshold: float = 0.01,
    floor: float = 0.1,
    free=None,
    base=None,
    true_params: Optional[DynamicParams] = None,
    norm: NormMode = "fro",
    workers: int = 1,
) -> EstimationReport:
    """Repeat :func:`estimate` ``R`` times and grade every searched parameter.

    Run ``r`` uses seed ``pso_config.seed + r``. A coefficient of variation at
    or below ``cv_threshold`` marks the parameter identifiable; otherwise the
    best run is probed and a relative cost change above ``sens_threshold``
    gives SI/NUI, anything less UI.
    """
    if R < 2:
        raise ValueError("classification needs at least two runs")
    samples = _as_sample_set(samples)
    free_idx = resolve_free(free, model.n)
    seeds = [(pso_config.seed + r) % 2**64 for r in range(1, R + 1)]

    def run(seed):
        cfg = PsoConfig(**{**pso_config.__dict__, "seed": seed})
        return estimate(model, samples, box, cfg, free_idx, base, norm)

    runs = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(run, s) for s in seeds]
        for s, fut in zip(seeds, futures):
            try:
                runs.append(fut.result())
            except Exception as exc:
                raise ClassificationError(f"estimation run with seed {s} failed: {exc}", runs) from exc
    for r in runs:
        log.info("run seed=%d cost=%.6g", r.seed, r.best_cost)

    names = param_names(model.n)
    idx = list(range(NPARAM * model.n)) if free_idx is None else free_idx
    est = np.array([r.best_params.flatten() for r in runs])
    truth = true_params.flatten() if true_params is not None else None
    best = min(runs, key=lambda r: r.best_cost).best_params
    stats = []
    for k in idx:
        col = est[:, k]
        cv = _cv(col)
        sens = None
        if cv <= cv_threshold:
            status = I_STATUS
        else:
            sens = sensitivity_probe(model, samples, best, k, delta, floor, norm=norm)
            status = SI_NUI_STATUS if sens > sens_threshold else UI_STATUS
        stats.append(
            ParameterStats(
                name=names[k],
                link=k // NPARAM + 1,
                mean=float(np.mean(col)),
                cv=cv,
                spread=float(np.max(col) - np.min(col)),
                status=status,
                sensitivity=sens,
                true_value=None if truth is None else float(truth[k]),
            )
        )
    settings = {
        "runs": R,
        "seeds": seeds,
        "cv_threshold": cv_threshold,
        "sens_threshold": sens_threshold,
        "delta": delta,
        "floor": floor,
        "norm": norm,
    }
    return EstimationReport(parameters=stats, runs=runs, settings=settings)


@dataclass
class Verification:
    t: np.ndarray
    tau_true: np.ndarray
    tau_est: np.ndarray

    @property
    def rms_relative_error(self) -> np.ndarray:
        err = np.sqrt(np.mean((self.tau_est - self.tau_true) ** 2, axis=0))
        ref = np.sqrt(np.mean(self.tau_true**2, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(ref > 0, err / np.where(ref > 0, ref, 1.0), np.where(err > 0, np.inf, 0.0))


def verify(model: RobotModel, true_params, est_params, traj: FourierTrajectory, N: int = 1000) -> Verification:
    """Drive both parameter sets along the noise-free trajectory on ``[0, T]``."""
    t = traj.T / N * np.arange(0, N + 1)
    q, qd, qdd = traj.states(t)
    return Verification(
        t=t,
        tau_true=inverse_dynamics_batch(model, true_params, q, qd, qdd),
        tau_est=inverse_dynamics_batch(model, est_params, q, qd, qdd),
    )


def default_param_box(n: int, free: Optional[Sequence[int]] = None) -> SearchBox:
    """Masses [0, 10], COM [-2, 2], inertia [-6, 6], friction [0, 3]."""
    lo = np.tile([0.0, -2, -2, -2, -6, -6, -6, -6, -6, -6, 0, 0], n)
    hi = np.tile([10.0, 2, 2, 2, 6, 6, 6, 6, 6, 6, 3, 3], n)
    if free is not None:
        lo, hi = lo[list(free)], hi[list(free)]
    return SearchBox(lo, hi)
