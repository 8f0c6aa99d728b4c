"""Monte Carlo comparison of no-update, time-dependent and quantity-based pricing.

Each trial draws an age sensitivity kappa and a cost coefficient c from
truncated normals, builds f = delta**kappa and C = c*K**degree on [0, T], and
records outcomes for the three schemes. Draws come from a Philox counter-based
generator keyed by (seed, trial index), so any trial can be replayed alone.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .cost_models import Monomial, PowerLaw, check_one_update_viability
from .market import MarketInstance, OutcomeReport, QuantityBased, UpdatePolicy, evaluate_outcome
from .pricing import solve_quantity_based, solve_time_dependent

SCHEMES = ("none", "time", "quantity")
METRICS = ("aggregate_aoi", "aoi_cost", "social_cost", "profit", "payment")
MAX_REJECTIONS = 10_000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioDistribution:
    horizon: float = 30.0
    kappa_mean: float = 1.5
    kappa_sd: float = 0.2
    kappa_range: Tuple[float, float] = (1.0, 2.0)
    c_mean: float = 6.0
    c_sd: float = 1.5
    c_range: Tuple[float, float] = (2.0, 10.0)
    op_cost_degree: int = 3
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.kappa_range, self.c_range):
            if lo > hi:
                raise ValueError("empty sampling range")
        if self.kappa_sd <= 0 or self.c_sd <= 0:
            raise ValueError("standard deviations must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.kappa_range[0] < 1:
            raise ValueError("kappa range must lie in [1, inf)")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    kappa: float
    c: float
    metrics: Dict[str, Dict[str, float]]
    viable: bool = True

    def row(self) -> List[float]:
        return [self.metrics[s][m] for s in SCHEMES for m in METRICS]


def csv_columns() -> List[str]:
    return ["trial", "kappa", "c"] + [f"{s}_{m}" for s in SCHEMES for m in METRICS]


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    if lo == hi:
        return float(lo)
    for _ in range(MAX_REJECTIONS):
        v = rng.normal(mean, sd)
        if lo <= v <= hi:
            return float(v)
    raise SamplingError(f"no draw of N({mean}, {sd}) landed in [{lo}, {hi}]")


def trial_generator(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial_index])))


def sample_scenario(dist: ScenarioDistribution, trial_index: int) -> Tuple[float, float]:
    rng = trial_generator(dist.seed, trial_index)
    kappa = _truncated_normal(rng, dist.kappa_mean, dist.kappa_sd, *dist.kappa_range)
    c = _truncated_normal(rng, dist.c_mean, dist.c_sd, *dist.c_range)
    return kappa, c


def raw_aggregate_aoi(policy: UpdatePolicy, horizon: float) -> float:
    """Integral of the age itself (not its cost) over the horizon."""
    return math.fsum(x * x / 2.0 for x in policy.intervals(horizon))


def _metrics(outcome: OutcomeReport, horizon: float) -> Dict[str, float]:
    return {
        "aggregate_aoi": raw_aggregate_aoi(outcome.policy, horizon),
        "aoi_cost": outcome.aggregate_aoi_cost,
        "social_cost": outcome.social_cost,
        "profit": outcome.profit,
        "payment": outcome.payment,
    }


def evaluate_params(kappa: float, c: float, horizon: float = 30.0, degree: int = 3,
                    trial: int = 0) -> TrialRecord:
    instance = MarketInstance(horizon, PowerLaw(kappa), Monomial(c, degree))
    viable = check_one_update_viability(instance)
    none = evaluate_outcome(instance, QuantityBased((0.0,)), UpdatePolicy(()))
    td = solve_time_dependent(instance)
    qb = solve_quantity_based(instance)
    return TrialRecord(
        trial=trial,
        kappa=kappa,
        c=c,
        metrics={
            "none": _metrics(none, horizon),
            "time": _metrics(evaluate_outcome(instance, td.scheme, td.policy), horizon),
            "quantity": _metrics(evaluate_outcome(instance, qb.scheme, qb.policy), horizon),
        },
        viable=viable,
    )


def run_trial(dist: ScenarioDistribution, trial_index: int) -> TrialRecord:
    kappa, c = sample_scenario(dist, trial_index)
    return evaluate_params(kappa, c, dist.horizon, dist.op_cost_degree, trial_index)


def summarize(records: Sequence[TrialRecord]) -> dict:
    summary: dict = {"trials": len(records), "mean": {}, "std": {}}
    for s in SCHEMES:
        summary["mean"][s], summary["std"][s] = {}, {}
        for m in METRICS:
            vals = np.array([r.metrics[s][m] for r in records])
            mean = float(np.mean(vals))
            summary["mean"][s][m] = mean
            summary["std"][s][m] = float(np.sqrt(np.mean((vals - mean) ** 2)))
    mean = summary["mean"]

    def ratio(m):
        den = mean["time"][m]
        return mean["quantity"][m] / den if den else math.nan

    summary["ratios"] = {
        "profit_quantity_over_time": ratio("profit"),
        "social_cost_quantity_over_time": ratio("social_cost"),
        "aggregate_aoi_quantity_over_time": ratio("aggregate_aoi"),
    }
    summary["degenerate_trials"] = [r.trial for r in records if not r.viable]
    return summary


def run_monte_carlo(dist: ScenarioDistribution, workers: int = 1) -> Tuple[List[TrialRecord], dict]:
    """All trials in index order plus their summary."""
    indices = range(dist.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: run_trial(dist, i), indices))
    else:
        records = [run_trial(dist, i) for i in indices]
    return records, summarize(records)


def fmt(x: float) -> str:
    return f"{x:.12g}"


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns())
    for r in records:
        w.writerow([r.trial, fmt(r.kappa), fmt(r.c)] + [fmt(v) for v in r.row()])
    return buf.getvalue()
