"""Solver result container and self-consistency checking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import EeMetric, NetworkInstance, metric_value, rate

__all__ = ["SolveReport", "verify_report"]


@dataclass
class SolveReport:
    """Uniform result record produced by every solver.

    value is the achieved objective (the named metric, or the total rate for
    the sum-rate solver); link_ee holds the plain per-link efficiencies
    rate / consumed power, without priority weights.  Traces are empty when
    a solver has no corresponding notion (the full-power "solver" has none).
    """

    solver: str
    metric: str
    powers: np.ndarray
    value: float
    link_ee: np.ndarray
    link_rates: np.ndarray
    lambda_trace: list[float] = field(default_factory=list)
    brb_gap_trace: list[float] = field(default_factory=list)
    sca_objective_trace: list[float] = field(default_factory=list)
    outer_iterations: int = 0
    inner_work: int = 0
    wall_ms: float = 0.0
    status: str = "ok"

    def __post_init__(self):
        self.powers = np.asarray(self.powers, dtype=np.float64)
        self.link_ee = np.asarray(self.link_ee, dtype=np.float64)
        self.link_rates = np.asarray(self.link_rates, dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "metric": self.metric,
            "powers": self.powers.tolist(),
            "value": float(self.value),
            "link_ee": self.link_ee.tolist(),
            "link_rates": self.link_rates.tolist(),
            "lambda_trace": [float(v) for v in self.lambda_trace],
            "brb_gap_trace": [float(v) for v in self.brb_gap_trace],
            "sca_objective_trace": [float(v) for v in self.sca_objective_trace],
            "outer_iterations": int(self.outer_iterations),
            "inner_work": int(self.inner_work),
            "wall_ms": float(self.wall_ms),
            "status": self.status,
        }


def verify_report(instance: NetworkInstance, report: SolveReport) -> None:
    """Recompute the reported value from the reported powers and compare.

    Raises RuntimeError on mismatch beyond 1e-9 relative; called by the
    experiment drivers on every report so a solver bug cannot silently
    propagate into result files.
    """
    p = report.powers
    if p.shape != (instance.k,):
        raise RuntimeError(
            f"report powers have shape {p.shape}, expected ({instance.k},)"
        )
    if np.any(p < -1e-12) or np.any(p > instance.p_max_vec * (1 + 1e-9) + 1e-12):
        raise RuntimeError("reported powers violate the power budget box")
    if report.metric == "sum-rate":
        expected = float(rate(instance, np.maximum(p, 0.0)).sum())
    else:
        expected = metric_value(instance, EeMetric(report.metric), np.maximum(p, 0.0))
    err = abs(expected - report.value) / max(1.0, abs(expected))
    if err > 1e-9:
        raise RuntimeError(
            f"report value {report.value!r} disagrees with recomputed "
            f"{expected!r} (relative error {err:.3e})"
        )
    rates = rate(instance, np.maximum(p, 0.0))
    if np.max(np.abs(rates - report.link_rates)) > 1e-9 * max(
        1.0, float(np.max(np.abs(rates)))
    ):
        raise RuntimeError("reported per-link rates are inconsistent")
