"""CSV and JSON file formats shared by the command-line tools."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import DynamicParams, LinkDynamicParams
from .estimation import EstimationReport, SampleSet, Verification


class SampleFormatError(ValueError):
    pass


def sample_header(n: int) -> list[str]:
    cols = ["t"]
    for prefix in ("q", "qd", "qdd", "tau"):
        cols += [f"{prefix}{j}" for j in range(1, n + 1)]
    return cols


def _fmt(x) -> str:
    return repr(float(x))


def write_samples_csv(path, samples: SampleSet):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sample_header(samples.n))
        for row in np.column_stack([samples.t, samples.q, samples.qd, samples.qdd, samples.tau]):
            w.writerow([_fmt(v) for v in row])


def read_samples_csv(path, n: int | None = None) -> SampleSet:
    """Parse a sample CSV; errors name the offending line."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SampleFormatError(f"{path}: empty file (no header)")
    header = [h.strip() for h in rows[0]]
    if (len(header) - 1) % 4 or len(header) < 5:
        raise SampleFormatError(f"{path}: line 1: header has {len(header)} columns, expected 1 + 4n")
    width = (len(header) - 1) // 4
    if header != sample_header(width):
        raise SampleFormatError(f"{path}: line 1: unexpected header {','.join(header)}")
    if n is not None and width != n:
        raise SampleFormatError(f"{path}: samples have {width} joints, robot has {n}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise SampleFormatError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise SampleFormatError(f"{path}: line {lineno}: {exc}") from None
        if not np.all(np.isfinite(vals)):
            raise SampleFormatError(f"{path}: line {lineno}: non-finite value")
        data.append(vals)
    if not data:
        raise SampleFormatError(f"{path}: no samples")
    a = np.array(data)
    k = width
    return SampleSet(t=a[:, 0], q=a[:, 1 : 1 + k], qd=a[:, 1 + k : 1 + 2 * k], qdd=a[:, 1 + 2 * k : 1 + 3 * k], tau=a[:, 1 + 3 * k :])


def params_to_list(params: DynamicParams) -> list[dict]:
    return [{"m": lp.m, "s": list(lp.s), "inertia": list(lp.inertia), "fc": lp.fc, "fv": lp.fv} for lp in params.per_link]


def params_from_list(items) -> DynamicParams:
    return DynamicParams([LinkDynamicParams(**item) for item in items])


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def read_estimate(path) -> DynamicParams:
    """Parameters from an estimate result, or the mean column of a report."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "best_params" in data:
        return params_from_list(data["best_params"])
    if "mean_params" in data:
        return params_from_list(data["mean_params"])
    raise ValueError(f"{path}: neither an estimate nor a classification report")


def write_report(json_path, csv_path, report: EstimationReport):
    data = report.to_dict()
    data["mean_params"] = params_to_list(report.mean_params())
    write_json(json_path, data)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "link", "param", "true_value", "mean", "cv", "spread", "status"])
        for p in report.parameters:
            w.writerow(
                [
                    p.name,
                    p.link,
                    p.name.rstrip("0123456789"),
                    "" if p.true_value is None else _fmt(p.true_value),
                    _fmt(p.mean),
                    _fmt(p.cv),
                    _fmt(p.spread),
                    p.status,
                ]
            )


def write_verification_csv(path, v: Verification):
    n = v.tau_true.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"tau_true_{j}" for j in range(1, n + 1)] + [f"tau_est_{j}" for j in range(1, n + 1)])
        for row in np.column_stack([v.t, v.tau_true, v.tau_est]):
            w.writerow([_fmt(x) for x in row])
