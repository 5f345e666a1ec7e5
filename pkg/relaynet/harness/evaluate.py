"""Comparison statistics over optimized test deployments, and their reports.

Differences are method minus baseline on the final max-flow of each
deployment; relative differences divide by the baseline's final max-flow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from relaynet.channel import ChannelParams, adjacency
from relaynet.errors import InputError
from relaynet.harness.training import predict
from relaynet.models import GraphModel
from relaynet.optimize.trajectory import Trajectory
from relaynet.spectral import endpoint_weights, lambda2, weighted_laplacian

logger = logging.getLogger(__name__)

MARGINS = (0.2, 0.3, 0.4)
FLOAT_FORMAT = "%.6g"


def truncated_mean(values, fraction: float) -> float:
    """Mean after dropping floor(fraction * N) values from each tail."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        raise InputError("cannot average an empty sample")
    if not 0.0 <= fraction < 0.5:
        raise InputError(f"truncation fraction must lie in [0, 0.5), got {fraction}")
    k = int(math.floor(fraction * values.size))
    return float(values[k:values.size - k].mean())


def histogram(values, bins: int) -> Tuple[np.ndarray, np.ndarray]:
    """Fixed-width bins over the observed range; a flat sample gets a unit-wide range."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return edges, counts


@dataclass
class Comparison:
    method: str
    baseline: str
    diffs: np.ndarray
    rel_diffs: np.ndarray
    avg_diff: float
    avg_rel_diff: float
    trunc_avg_diff: float
    trunc_avg_rel_diff: float
    wins: int
    ties: int
    losses: int
    margin_wins: Dict[float, int]
    hist_edges: np.ndarray
    hist_counts: np.ndarray


@dataclass
class Fidelity:
    name: str
    rel_errors: np.ndarray
    avg_rel_error: float
    trunc_avg_rel_error: float


@dataclass
class EvalReport:
    baseline: str
    deployment_ids: List[int]
    finals: Dict[str, np.ndarray]
    jammers: np.ndarray
    comparisons: Dict[str, Comparison]
    fidelity: Dict[str, Fidelity] = field(default_factory=dict)
    truncate_fraction: float = 0.1

    @property
    def methods(self) -> List[str]:
        return list(self.finals)

    def winners(self) -> List[str]:
        names = self.methods
        stacked = np.stack([self.finals[m] for m in names])
        return [names[i] for i in np.argmax(stacked, axis=0)]


def compare(method: str, baseline: str, finals: np.ndarray, base: np.ndarray, *, bins: int, fraction: float) -> Comparison:
    if np.any(base <= 0):
        raise InputError(f"baseline {baseline} has a zero final max-flow; relative differences are undefined")
    diffs = finals - base
    rel = diffs / base
    edges, counts = histogram(diffs, bins)
    return Comparison(
        method=method,
        baseline=baseline,
        diffs=diffs,
        rel_diffs=rel,
        avg_diff=float(diffs.mean()),
        avg_rel_diff=float(rel.mean()),
        trunc_avg_diff=truncated_mean(diffs, fraction),
        trunc_avg_rel_diff=truncated_mean(rel, fraction),
        wins=int(np.sum(diffs > 0)),
        ties=int(np.sum(diffs == 0)),
        losses=int(np.sum(diffs < 0)),
        margin_wins={m: int(np.sum(rel >= m)) for m in MARGINS},
        hist_edges=edges,
        hist_counts=counts,
    )


def evaluate(
    trajectories: Mapping[str, Mapping[int, Trajectory]],
    baseline: str,
    *,
    bins: int = 20,
    fraction: float = 0.1,
) -> EvalReport:
    """Compare every method's final max-flows with the baseline's.

    With a single method and no matching baseline the method is compared with itself.
    """
    if not trajectories:
        raise InputError("no trajectories to evaluate")
    if baseline not in trajectories:
        if len(trajectories) != 1:
            raise InputError(f"baseline {baseline!r} is not among the methods {sorted(trajectories)}")
        baseline = next(iter(trajectories))
        logger.info(f"Single method given; comparing {baseline} with itself")
    ids = sorted(trajectories[baseline])
    for method, runs in trajectories.items():
        if sorted(runs) != ids:
            raise InputError(f"{method} covers different deployments than {baseline}")
    if not ids:
        raise InputError("trajectory files contain no deployments")

    finals = {m: np.array([runs[i].final_flow for i in ids]) for m, runs in trajectories.items()}
    jammers = np.stack([trajectories[baseline][i].deployments[0].jammer for i in ids])
    comparisons = {
        m: compare(m, baseline, finals[m], finals[baseline], bins=bins, fraction=fraction) for m in finals
    }
    return EvalReport(baseline, ids, finals, jammers, comparisons, truncate_fraction=fraction)


def _fidelity(name: str, estimates: np.ndarray, truth: np.ndarray, fraction: float) -> Fidelity:
    rel = np.abs(estimates - truth) / np.abs(truth)
    return Fidelity(name, rel, float(rel.mean()), truncated_mean(rel, fraction))


def add_fidelity(
    report: EvalReport,
    trajectories: Mapping[str, Mapping[int, Trajectory]],
    params: ChannelParams,
    *,
    mfl_model: Optional[GraphModel] = None,
    endpoint_factor: float = 3.0,
    fraction: float = 0.01,
) -> EvalReport:
    """Relative error of the MFL output and of lambda_2 as max-flow estimates at final deployments."""
    ids = report.deployment_ids
    if mfl_model is not None and "mfl" in trajectories:
        finals = [trajectories["mfl"][i].final for i in ids]
        truth = np.array([trajectories["mfl"][i].final_flow for i in ids])
        report.fidelity["mfl"] = _fidelity("mfl", predict(mfl_model, params, finals), truth, fraction)
    source = "wcc" if "wcc" in trajectories else report.baseline
    runs = trajectories[source]
    estimates = []
    for i in ids:
        dep = runs[i].final
        W = endpoint_weights(dep.n, endpoint_factor)
        estimates.append(lambda2(weighted_laplacian(adjacency(params, dep), W))[0])
    truth = np.array([runs[i].final_flow for i in ids])
    report.fidelity["lambda2"] = _fidelity("lambda2", np.array(estimates), truth, fraction)
    return report


def summary_frame(report: EvalReport) -> pd.DataFrame:
    rows = []
    for c in report.comparisons.values():
        row = {
            "method": c.method,
            "baseline": c.baseline,
            "deployments": len(report.deployment_ids),
            "avg_diff": c.avg_diff,
            "avg_rel_diff": c.avg_rel_diff,
            "trunc_avg_diff": c.trunc_avg_diff,
            "trunc_avg_rel_diff": c.trunc_avg_rel_diff,
            "wins": c.wins,
            "ties": c.ties,
            "losses": c.losses,
        }
        row.update({f"wins_by_{int(round(m * 100))}pct": n for m, n in c.margin_wins.items()})
        rows.append(row)
    return pd.DataFrame(rows)


def deployments_frame(report: EvalReport) -> pd.DataFrame:
    frame = pd.DataFrame(
        {"deployment": report.deployment_ids, "jammer_x": report.jammers[:, 0], "jammer_y": report.jammers[:, 1]}
    )
    for method, finals in report.finals.items():
        frame[f"final_{method}"] = finals
    frame["winner"] = report.winners()
    return frame


def histogram_frame(c: Comparison) -> pd.DataFrame:
    return pd.DataFrame({"bin_left": c.hist_edges[:-1], "bin_right": c.hist_edges[1:], "count": c.hist_counts})


def fidelity_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"estimate": f.name, "samples": f.rel_errors.size, "avg_rel_error": f.avg_rel_error, "trunc_avg_rel_error": f.trunc_avg_rel_error}
            for f in report.fidelity.values()
        ]
    )


def summary_text(report: EvalReport) -> str:
    lines = [
        f"baseline: {report.baseline}",
        f"deployments: {len(report.deployment_ids)}",
        "relative difference denominator: baseline final max-flow",
        f"truncation: floor({report.truncate_fraction:g} * N) dropped from each tail",
        "",
    ]
    for c in report.comparisons.values():
        margins = ", ".join(f">= {int(round(m * 100))}%: {n}" for m, n in c.margin_wins.items())
        lines += [
            f"{c.method} vs {c.baseline}",
            f"  avg diff {c.avg_diff:.6g}   avg rel diff {c.avg_rel_diff:.6g}",
            f"  truncated avg diff {c.trunc_avg_diff:.6g}   truncated avg rel diff {c.trunc_avg_rel_diff:.6g}",
            f"  wins {c.wins}   ties {c.ties}   losses {c.losses}   wins by margin {margins}",
        ]
    for f in report.fidelity.values():
        lines.append(
            f"{f.name} as max-flow estimate: avg rel error {f.avg_rel_error:.6g}, truncated {f.trunc_avg_rel_error:.6g}"
        )
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_frame(report).to_csv(out / "summary.csv", index=False, float_format=FLOAT_FORMAT)
    deployments_frame(report).to_csv(out / "deployments.csv", index=False, float_format=FLOAT_FORMAT)
    for c in report.comparisons.values():
        histogram_frame(c).to_csv(out / f"histogram_{c.method}.csv", index=False, float_format=FLOAT_FORMAT)
    if report.fidelity:
        fidelity_frame(report).to_csv(out / "fidelity.csv", index=False, float_format=FLOAT_FORMAT)
    (out / "summary.txt").write_text(summary_text(report), encoding="utf-8")
    logger.info(f"Wrote evaluation report for {len(report.methods)} methods to {out}")
    return out
