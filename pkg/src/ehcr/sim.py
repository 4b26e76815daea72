"""Monte Carlo sweeps over slot count, harvesting efficiency, interference
threshold and channel scenario.

Trial ``k`` draws its channels from ``trial_seed(base_seed, k)`` in every
cell, so all cells of one trial see the same standard-exponential draws,
scaled by the scenario variances, and an ``m``-slot cell uses the first
``m`` slots of the longest draw.  Cells therefore differ only in the swept
parameter, and comparisons between them are paired.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ehcr.channel import SCENARIOS, sample_realization, scenario_variances, trial_seed
from ehcr.model import ChannelRealization, SystemParams, derived_coefficients
from ehcr.myopic import solve_myopic
from ehcr.offline import SolverConfig, solve_offline

log = logging.getLogger(__name__)

POLICIES = ("offline", "myopic")
AGGREGATE_HEADER = ["m", "eta", "p_int", "scenario", "policy", "avg_sum_rate", "stderr", "trials"]
TRIAL_HEADER = ["trial", "seed", "policy", "m", "eta", "p_int", "scenario", "sum_rate", "converged"]
SERIES_HEADER = ["figure", "series", "m", "avg_sum_rate", "stderr", "trials"]


@dataclass(frozen=True)
class SweepSpec:
    slot_counts: tuple[int, ...] = tuple(range(5, 55, 5))
    etas: tuple[float, ...] = (0.1, 0.3, 0.5)
    p_ints: tuple[float, ...] = (0.05, 0.1, 0.5)
    scenarios: tuple[str, ...] = ("baseline",)
    trials: int = 1000
    base_seed: int = 1
    policies: tuple[str, ...] = POLICIES
    params: SystemParams = field(default_factory=SystemParams)

    def __post_init__(self):
        for name in ("slot_counts", "etas", "p_ints", "scenarios", "policies"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, value)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(int(m) != m or m < 1 for m in self.slot_counts):
            raise ValueError("slot counts must be positive integers")
        for s in self.scenarios:
            scenario_variances(s)
        for pol in self.policies:
            if pol not in POLICIES:
                raise ValueError(f"unknown policy {pol!r}")
        for eta in self.etas:
            replace(self.params, eta=eta)
        for p_int in self.p_ints:
            replace(self.params, p_int=p_int)


@dataclass(frozen=True)
class AggregateResult:
    m: int
    eta: float
    p_int: float
    scenario: str
    policy: str
    avg_sum_rate: float
    stderr: float
    trials: int
    excluded: int = 0

    @property
    def key(self):
        return (self.m, self.eta, self.p_int, self.scenario, self.policy)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    policy: str
    m: int
    eta: float
    p_int: float
    scenario: str
    sum_rate: float
    converged: bool


@dataclass(frozen=True)
class SeriesRow:
    figure: str
    series: str
    m: int
    avg_sum_rate: float
    stderr: float
    trials: int


class FigureGapError(ValueError):
    def __init__(self, figure_id, missing):
        self.missing = sorted(missing, key=repr)
        listed = ", ".join(map(str, self.missing[:10]))
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"{figure_id}: aggregates lack cells {listed}{more}")


def run_trial(params: SystemParams, realization: ChannelRealization, policies=POLICIES, config=None):
    """Sum rate and convergence flag of each policy on one realization.

    Returns ``{policy: (sum_rate, converged)}``.
    """
    instance = derived_coefficients(params, realization)
    out = {}
    for policy in policies:
        if policy == "offline":
            sol = solve_offline(instance, config)
        elif policy == "myopic":
            sol = solve_myopic(instance)
        else:
            raise ValueError(f"unknown policy {policy!r}")
        out[policy] = (sol.sum_rate, sol.converged)
    return out


def _cells(spec: SweepSpec):
    for scenario in spec.scenarios:
        for m in spec.slot_counts:
            for eta in spec.etas:
                for p_int in spec.p_ints:
                    yield scenario, m, eta, p_int


def _trial_unit(args):
    """All cells of one trial: ``[(cell, policy, sum_rate, converged), ...]``."""
    spec, trial, config = args
    seed = trial_seed(spec.base_seed, trial)
    longest = max(spec.slot_counts)
    draws = {s: sample_realization(SCENARIOS[s], longest, seed) for s in spec.scenarios}
    rows = []
    for scenario, m, eta, p_int in _cells(spec):
        params = replace(spec.params, eta=eta, p_int=p_int)
        result = run_trial(params, draws[scenario].head(m), spec.policies, config)
        for policy in spec.policies:
            rate, ok = result[policy]
            rows.append(((scenario, m, eta, p_int), policy, rate, ok))
    return trial, seed, rows


def run_sweep(spec: SweepSpec, threads: int | None = None, config: SolverConfig | None = None,
              keep_trials: bool = False):
    """Run every cell for every trial and average the sum rates.

    Trials run in parallel on ``threads`` worker processes (default: CPU
    count); results are reduced in trial order, so the output does not
    depend on the worker count.  Non-converged offline solves are dropped
    from the averages and counted in ``AggregateResult.excluded``.

    Returns the aggregates, plus the per-trial records when ``keep_trials``.
    """
    threads = threads or os.cpu_count() or 1
    jobs = [(spec, k, config) for k in range(spec.trials)]
    if threads > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            units = list(pool.map(_trial_unit, jobs, chunksize=max(1, spec.trials // (8 * threads))))
    else:
        units = [_trial_unit(j) for j in jobs]

    sums: dict = {}
    records = []
    for trial, seed, rows in units:
        for (scenario, m, eta, p_int), policy, rate, ok in rows:
            bucket = sums.setdefault((m, eta, p_int, scenario, policy), ([], [0]))
            if ok and math.isfinite(rate):
                bucket[0].append(rate)
            else:
                bucket[1][0] += 1
            if keep_trials:
                records.append(TrialRecord(trial, seed, policy, m, eta, p_int, scenario, rate, ok))

    aggregates = []
    for scenario, m, eta, p_int in _cells(spec):
        for policy in spec.policies:
            rates, excluded = sums[(m, eta, p_int, scenario, policy)]
            k = len(rates)
            avg = float(np.mean(rates)) if k else math.nan
            se = float(np.std(rates, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
            aggregates.append(AggregateResult(m, eta, p_int, scenario, policy, avg, se, k, excluded[0]))
            if excluded[0]:
                log.warning("cell m=%d eta=%g p_int=%g %s %s: %d trials excluded",
                            m, eta, p_int, scenario, policy, excluded[0])
    for agg in aggregates:
        log.info("m=%d eta=%g p_int=%g scenario=%s policy=%s avg=%.6f se=%.6f",
                 agg.m, agg.eta, agg.p_int, agg.scenario, agg.policy, agg.avg_sum_rate, agg.stderr)
    if keep_trials:
        return aggregates, records
    return aggregates


def figure_series(aggregates, figure_id: str, eta: float = 0.3, p_int: float = 0.1):
    """Rows of the series behind one figure, ordered by series then ``m``.

    fig2: offline rate versus ``m`` for every (eta, p_int) in the baseline
    scenario.  fig3: offline and myopic versus ``m`` at ``eta`` for every
    p_int.  fig4: offline versus ``m`` for each of the five scenarios at
    (``eta``, ``p_int``).
    """
    table = {a.key: a for a in aggregates}
    ms = sorted({a.m for a in aggregates})
    if figure_id == "fig2":
        pairs = sorted({(a.eta, a.p_int) for a in aggregates if a.scenario == "baseline"})
        wanted = [(f"eta={e:g},p_int={p:g}", e, p, "baseline", "offline") for e, p in pairs]
    elif figure_id == "fig3":
        p_list = sorted({a.p_int for a in aggregates if a.scenario == "baseline" and a.eta == eta})
        wanted = [(f"{pol},p_int={p:g}", eta, p, "baseline", pol) for p in p_list for pol in POLICIES]
    elif figure_id == "fig4":
        wanted = [(s, eta, p_int, s, "offline") for s in SCENARIOS]
    else:
        raise ValueError(f"unknown figure id {figure_id!r}")
    if not wanted or not ms:
        raise FigureGapError(figure_id, [("no cells",)])
    missing = []
    rows = []
    for label, e, p, scenario, policy in wanted:
        for m in ms:
            agg = table.get((m, e, p, scenario, policy))
            if agg is None:
                missing.append((m, e, p, scenario, policy))
                continue
            rows.append(SeriesRow(figure_id, label, m, agg.avg_sum_rate, agg.stderr, agg.trials))
    if missing:
        raise FigureGapError(figure_id, missing)
    return rows


def _fmt(x) -> str:
    return repr(float(x))


def write_aggregates(path, aggregates) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for a in aggregates:
            w.writerow([a.m, _fmt(a.eta), _fmt(a.p_int), a.scenario, a.policy,
                        _fmt(a.avg_sum_rate), _fmt(a.stderr), a.trials])


def write_trials(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_HEADER)
        for r in records:
            w.writerow([r.trial, r.seed, r.policy, r.m, _fmt(r.eta), _fmt(r.p_int), r.scenario,
                        _fmt(r.sum_rate), str(r.converged).lower()])


def write_series(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for r in rows:
            w.writerow([r.figure, r.series, r.m, _fmt(r.avg_sum_rate), _fmt(r.stderr), r.trials])


def read_aggregates(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != AGGREGATE_HEADER:
            raise ValueError(f"{path}: header must be {','.join(AGGREGATE_HEADER)}")
        return [
            AggregateResult(int(r["m"]), float(r["eta"]), float(r["p_int"]), r["scenario"], r["policy"],
                            float(r["avg_sum_rate"]), float(r["stderr"]), int(r["trials"]))
            for r in reader
        ]
