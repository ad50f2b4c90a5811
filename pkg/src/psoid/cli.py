"""Command-line pipeline: plan, sample, estimate, classify, verify.

Exit codes: 0 success, 2 configuration or input error, 3 planning failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import yaml

from . import formats
from .config import ConfigError, ExperimentConfig, load_config
from .estimation import EstimationError, classify, estimate, generate_samples, verify
from .formats import SampleFormatError
from .trajectory import FourierTrajectory, PlanningError, build_qsam, default_planning_box, excitation_objective, gram_logdet, plan_trajectory

log = logging.getLogger("psoid")

EXIT_OK, EXIT_CONFIG, EXIT_PLAN = 0, 2, 3


def _outdir(cfg: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_trajectory(path) -> FourierTrajectory:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        return FourierTrajectory.from_dict(data)
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {path}: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed trajectory: {exc}") from None


def cmd_plan(cfg: ExperimentConfig, args) -> int:
    if cfg.planner is None:
        raise ConfigError("plan needs a planner section")
    cons = cfg.joint_constraints()
    pl = cfg.planner
    grid = pl.grid if pl.grid is not None else 10 * pl.N
    pso_cfg = pl.pso.build(cfg.seed)
    out = _outdir(cfg, args)
    try:
        box = default_planning_box(cons, pl.omega_max, pl.amplitude_max)
        traj = plan_trajectory(cons, pl.start, box, pso_cfg, N=pl.N, grid=grid, T=pl.T, mode=pl.mode)
    except PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_PLAN
    score = excitation_objective(traj, cons, pl.N, grid, pl.mode)
    Q = build_qsam(traj, pl.N)
    (out / "trajectory.yaml").write_text(yaml.safe_dump(traj.to_dict(), sort_keys=False), encoding="utf-8")
    traj.write_csv(out / "trajectory.csv", N=grid)
    formats.write_json(
        out / "plan.json",
        {"objective": score, "mode": pl.mode, "log_det": gram_logdet(Q), "N": pl.N, "grid": grid, "seed": cfg.seed, "feasible": True},
    )
    print(f"planned trajectory written to {out / 'trajectory.yaml'} (objective {score:.6g})")
    return EXIT_OK


def cmd_sample(cfg: ExperimentConfig, args) -> int:
    model = cfg.robot_model()
    truth = cfg.true_dynamic_params()
    out = _outdir(cfg, args)
    if args.trajectory:
        traj = _load_trajectory(args.trajectory)
    elif cfg.trajectory is not None:
        traj = cfg.trajectory.build()
    elif (out / "trajectory.yaml").exists():
        traj = _load_trajectory(out / "trajectory.yaml")
    else:
        raise ConfigError("sample needs a trajectory section, --trajectory, or a planned trajectory in the output directory")
    if traj.n != model.n:
        raise ConfigError(f"trajectory has {traj.n} joints, robot has {model.n}")
    if cfg.sampling.T is not None and cfg.sampling.T != traj.T:
        raise ConfigError(f"sampling.T={cfg.sampling.T} disagrees with trajectory T={traj.T}")
    cons = cfg.joint_constraints() if cfg.constraints is not None else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        samples = generate_samples(model, truth, traj, cfg.sampling.N, cfg.sampling.noise_level, cfg.seed, constraints=cons)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    formats.write_samples_csv(out / "samples.csv", samples)
    print(f"{len(samples)} samples written to {out / 'samples.csv'}")
    return EXIT_OK


def _samples_path(args, out: Path) -> Path:
    return Path(args.samples) if args.samples else out / "samples.csv"


def cmd_estimate(cfg: ExperimentConfig, args) -> int:
    model = cfg.robot_model()
    out = _outdir(cfg, args)
    samples = formats.read_samples_csv(_samples_path(args, out), model.n)
    free, base, box = cfg.estimator_setup()
    run = estimate(model, samples, box, cfg.estimator.pso.build(cfg.seed), free, base, cfg.estimator.norm)
    formats.write_json(
        out / "estimate.json",
        {"seed": cfg.seed, "best_cost": run.best_cost, "best_params": formats.params_to_list(run.best_params)},
    )
    run.pso.write_history_csv(out / "history.csv")
    print(f"best cost {run.best_cost:.6g}; result written to {out / 'estimate.json'}")
    return EXIT_OK


def cmd_classify(cfg: ExperimentConfig, args) -> int:
    model = cfg.robot_model()
    out = _outdir(cfg, args)
    samples = formats.read_samples_csv(_samples_path(args, out), model.n)
    free, base, box = cfg.estimator_setup()
    c = cfg.classification
    truth = cfg.true_dynamic_params() if cfg.true_params is not None else None
    report = classify(
        model,
        samples,
        box,
        cfg.estimator.pso.build(cfg.seed),
        R=c.runs,
        delta=c.delta,
        cv_threshold=c.cv_threshold,
        sens_threshold=c.sens_threshold,
        floor=c.floor,
        free=free,
        base=base,
        true_params=truth,
        norm=cfg.estimator.norm,
        workers=cfg.estimator.workers,
    )
    formats.write_report(out / "report.json", out / "report.csv", report)
    for p in report.parameters:
        print(f"{p.name:6s} mean {p.mean:9.4f}  cv {p.cv:8.3f}  spread {p.spread:8.4f}  {p.status}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    model = cfg.robot_model()
    truth = cfg.true_dynamic_params()
    out = _outdir(cfg, args)
    path = Path(args.estimate) if args.estimate else out / "estimate.json"
    if not path.exists():
        raise ConfigError(f"estimate file {path} not found")
    est = formats.read_estimate(path)
    if est.n != model.n:
        raise ConfigError(f"estimate has {est.n} links, robot has {model.n}")
    if cfg.verification is not None:
        traj, N = cfg.verification.trajectory.build(), cfg.verification.N
    elif cfg.trajectory is not None:
        traj, N = cfg.trajectory.build(), 1000
    else:
        raise ConfigError("verify needs a verification or trajectory section")
    v = verify(model, truth, est, traj, N)
    rms = v.rms_relative_error
    formats.write_verification_csv(out / "verify.csv", v)
    formats.write_json(out / "verify.json", {"rms_relative_error": [float(x) for x in rms], "N": N, "T": traj.T})
    for j, e in enumerate(rms, start=1):
        print(f"joint {j}: RMS relative torque error {100 * e:.2f}%")
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "classify": cmd_classify,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psoid", description="Regressor-free robot dynamic parameter identification with PSO")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment YAML file")
        p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        if name == "sample":
            p.add_argument("--trajectory", default=None, help="trajectory YAML written by 'plan'")
        if name in ("estimate", "classify"):
            p.add_argument("--samples", default=None, help="sample CSV (default: <out>/samples.csv)")
        if name == "verify":
            p.add_argument("--estimate", default=None, help="estimate.json or report.json (default: <out>/estimate.json)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, SampleFormatError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
