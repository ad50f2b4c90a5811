"""Experiment configuration (YAML), parsed strictly: unknown keys are errors."""
from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynamics import NPARAM, DHLink, DynamicParams, LinkDynamicParams, RobotModel, param_index
from .pso import PsoConfig, SearchBox
from .trajectory import FourierTrajectory, JointConstraints


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Range = tuple[float, float]


class LinkSection(_Strict):
    a: float = 0.0
    alpha: float = 0.0
    d: float = 0.0
    theta_offset: float = 0.0
    joint_kind: Literal["revolute", "prismatic"]


class RobotSection(_Strict):
    links: list[LinkSection] = Field(min_length=1)
    gravity: tuple[float, float, float] = (0.0, 0.0, -9.81)

    def build(self) -> RobotModel:
        return RobotModel(links=tuple(DHLink(**lk.model_dump()) for lk in self.links), gravity=self.gravity)


class LinkParamsSection(_Strict):
    m: float = 0.0
    s: tuple[float, float, float] = (0.0, 0.0, 0.0)
    inertia: tuple[float, float, float, float, float, float] = (0.0,) * 6
    fc: float = 0.0
    fv: float = 0.0


class ConstraintsSection(_Strict):
    q_min: list[float]
    q_max: list[float]
    qd_min: list[float]
    qd_max: list[float]
    qdd_min: list[float]
    qdd_max: list[float]
    margin: float = 0.02

    def build(self) -> JointConstraints:
        return JointConstraints(**self.model_dump())


class JointTrajectorySection(_Strict):
    offset: float = 0.0
    terms: list[tuple[float, float]] = Field(min_length=3, max_length=3)


class TrajectorySection(_Strict):
    T: float = 10.0
    joints: list[JointTrajectorySection] = Field(min_length=1)

    def build(self) -> FourierTrajectory:
        return FourierTrajectory.from_dict(self.model_dump())


class PsoSection(_Strict):
    swarm_size: int = 20
    iterations: int = 100
    c1: float = 1.3
    c2: float = 1.3
    w: float = 0.6
    w_end: Optional[float] = None
    vmax_fraction: float = 0.5

    def build(self, seed: int) -> PsoConfig:
        return PsoConfig(seed=seed, **self.model_dump())


class PlannerSection(_Strict):
    start: list[float]
    T: float = 10.0
    N: int = Field(100, ge=1)
    grid: Optional[int] = None
    mode: Literal["stable", "faithful"] = "stable"
    omega_max: float = Field(3.0, gt=0)
    amplitude_max: Optional[list[float]] = None
    pso: PsoSection = PsoSection()


class SamplingSection(_Strict):
    N: int = Field(100, ge=1)
    T: Optional[float] = None
    noise_level: float = Field(0.0, ge=0)


class BoxSection(_Strict):
    """Search ranges per parameter kind, with per-parameter overrides."""

    m: Range = (0.0, 10.0)
    s: Range = (-2.0, 2.0)
    inertia_diag: Range = (-6.0, 6.0)
    inertia_prod: Range = (-6.0, 6.0)
    fc: Range = (0.0, 3.0)
    fv: Range = (0.0, 3.0)
    overrides: dict[str, Range] = {}

    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        kinds = [self.m] + [self.s] * 3 + [self.inertia_diag] * 3 + [self.inertia_prod] * 3 + [self.fc, self.fv]
        lo = np.tile([k[0] for k in kinds], n).astype(float)
        hi = np.tile([k[1] for k in kinds], n).astype(float)
        for name, (a, b) in self.overrides.items():
            i = param_index(name, n)
            lo[i], hi[i] = a, b
        return lo, hi


class EstimatorSection(_Strict):
    pso: PsoSection = PsoSection()
    norm: Literal["fro", "spectral"] = "fro"
    free: Optional[list[str]] = None
    fixed: dict[str, float] = {}
    box: BoxSection = BoxSection()
    workers: int = Field(1, ge=1)


class ClassificationSection(_Strict):
    runs: int = 10
    cv_threshold: float = 0.15
    sens_threshold: float = 0.01
    delta: float = 0.2
    floor: float = 0.1

    @field_validator("runs")
    @classmethod
    def _runs(cls, v):
        if v < 2:
            raise ValueError("classification needs runs >= 2")
        return v


class VerificationSection(_Strict):
    N: int = Field(1000, ge=1)
    T: Optional[float] = None
    trajectory: TrajectorySection


class ExperimentConfig(_Strict):
    seed: int = Field(0, ge=0, lt=2**64)
    output_dir: str = "out"
    robot: RobotSection
    true_params: Optional[list[LinkParamsSection]] = None
    constraints: Optional[ConstraintsSection] = None
    trajectory: Optional[TrajectorySection] = None
    planner: Optional[PlannerSection] = None
    sampling: SamplingSection = SamplingSection()
    estimator: EstimatorSection = EstimatorSection()
    classification: ClassificationSection = ClassificationSection()
    verification: Optional[VerificationSection] = None

    @model_validator(mode="after")
    def _consistency(self):
        n = len(self.robot.links)
        if self.true_params is not None and len(self.true_params) != n:
            raise ValueError(f"true_params lists {len(self.true_params)} links, robot has {n}")
        if self.constraints is not None:
            for k, v in self.constraints.model_dump().items():
                if k != "margin" and len(v) != n:
                    raise ValueError(f"constraints.{k} has {len(v)} entries, robot has {n}")
        for name, tr in (("trajectory", self.trajectory), ("verification.trajectory", self.verification and self.verification.trajectory)):
            if tr is not None and len(tr.joints) != n:
                raise ValueError(f"{name} has {len(tr.joints)} joints, robot has {n}")
        if self.planner is not None:
            if len(self.planner.start) != n:
                raise ValueError(f"planner.start has {len(self.planner.start)} entries, robot has {n}")
            if self.planner.amplitude_max is not None and len(self.planner.amplitude_max) != n:
                raise ValueError(f"planner.amplitude_max has {len(self.planner.amplitude_max)} entries, robot has {n}")
        if self.trajectory is not None and self.sampling.T is not None and self.sampling.T != self.trajectory.T:
            raise ValueError(f"sampling.T={self.sampling.T} disagrees with trajectory.T={self.trajectory.T}")
        v = self.verification
        if v is not None and v.T is not None and v.T != v.trajectory.T:
            raise ValueError(f"verification.T={v.T} disagrees with verification.trajectory.T={v.trajectory.T}")
        return self

    # -- builders -------------------------------------------------------

    def robot_model(self) -> RobotModel:
        return self.robot.build()

    def true_dynamic_params(self) -> DynamicParams:
        if self.true_params is None:
            raise ConfigError("config has no true_params section")
        return DynamicParams([LinkDynamicParams(**lp.model_dump()) for lp in self.true_params])

    def joint_constraints(self) -> JointConstraints:
        if self.constraints is None:
            raise ConfigError("config has no constraints section")
        try:
            return self.constraints.build()
        except ValueError as exc:
            raise ConfigError(f"constraints: {exc}") from None

    def estimator_setup(self):
        """``(free_indices or None, base vector, SearchBox)`` for the estimator."""
        n = len(self.robot.links)
        est = self.estimator
        lo, hi = est.box.bounds(n)
        base = np.zeros(NPARAM * n)
        for name, val in est.fixed.items():
            base[param_index(name, n)] = val
        free = None
        if est.free is not None:
            free = [param_index(f, n) for f in est.free]
            lo, hi = lo[free], hi[free]
        try:
            box = SearchBox(lo, hi)
        except ValueError as exc:
            raise ConfigError(f"estimator.box: {exc}") from None
        return free, base, box


def load_config(path, seed: Optional[int] = None) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if seed is not None:
        raw["seed"] = seed
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        n = len(cfg.robot.links)
        for name in list(cfg.estimator.free or []) + list(cfg.estimator.fixed) + list(cfg.estimator.box.overrides):
            param_index(name, n)
        if cfg.constraints is not None:
            cfg.constraints.build()
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (``full`` or ``simplified``)."""
    from importlib.resources import files

    p = files("psoid") / "data" / f"cylindrical_{name}.yaml"
    return Path(str(p))
