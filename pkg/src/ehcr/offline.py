"""Offline optimal policy via a primal log-barrier interior-point method.

Variables are the transmit fractions ``alpha`` and spent energies ``E`` of
all slots.  The program

    max   sum_i alpha_i * log2(1 + theta_i * E_i / alpha_i)
    s.t.  sum_{j<=i} E_j <= sum_{j<=i} (1 - alpha_j) * eta * pp     (causality)
          h_sp_i * E_i <= alpha_i * p_int                            (interference)
          E >= 0,  0 <= alpha <= 1

is concave with affine constraints.  Each centering step runs damped Newton
with backtracking on ``-t * objective - sum(log(slack))``; the multiplier
of a constraint at the end of the last stage is ``1 / (t * slack)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ehcr import _barrier
from ehcr.model import LN2, Instance, PolicySolution, StructureError, make_solution


@dataclass(frozen=True)
class SolverConfig:
    barrier_t0: float = 1.0
    barrier_mu: float = 10.0
    outer_tol: float = 1e-8
    newton_tol: float = 1e-9
    max_newton: int = 100
    backtrack: tuple[float, float] = (0.01, 0.5)

    def __post_init__(self):
        if not self.barrier_mu > 1:
            raise ValueError("barrier_mu must exceed 1")
        if not (self.barrier_t0 > 0 and self.outer_tol > 0 and self.newton_tol > 0):
            raise ValueError("barrier_t0 and tolerances must be positive")
        a, b = self.backtrack
        if not (0 < a < 0.5 and 0 < b < 1):
            raise ValueError("backtrack needs 0 < a < 0.5 and 0 < b < 1")


@dataclass(frozen=True)
class KktReport:
    stat_alpha_residual: float
    stat_energy_residual: float
    comp_slack_residual: float
    primal_feas_violation: float
    dual_feas_violation: float

    def worst(self) -> float:
        return max(self.stat_alpha_residual, self.stat_energy_residual, self.comp_slack_residual)


DUAL_NAMES = ("lambda", "gamma", "mu", "nu", "kappa")


def strictly_feasible_start(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Half-slot transmission spending a quarter of what either cap allows."""
    p = instance.params
    h = instance.channels.h_sp
    if p.harvest_per_slot <= 0 or (p.p_int <= 0 and np.any(h > 0)):
        raise StructureError("instance has no strictly feasible point; short-circuit instead")
    cap = np.full(instance.m, 0.5 * p.harvest_per_slot)
    coupled = h > 0
    cap[coupled] = np.minimum(cap[coupled], 0.5 * p.p_int / h[coupled])
    return np.full(instance.m, 0.5), 0.5 * cap


def _short_circuit(instance: Instance, reason: str) -> PolicySolution:
    m = instance.m
    p = instance.params
    theta, h = instance.theta, instance.channels.h_sp
    lam = np.zeros(m)
    gamma = np.zeros(m)
    nu = np.zeros(m)
    if p.harvest_per_slot <= 0:
        # nothing to spend: a single terminal causality multiplier prices energy
        lam[-1] = float(np.max(theta)) / LN2
        nu = lam[-1] - theta / LN2
    else:
        coupled = h > 0
        gamma[coupled] = theta[coupled] / (LN2 * h[coupled])
        nu[~coupled] = theta[~coupled] / LN2
        nu = np.where(coupled, 0.0, nu)
    duals = {"lambda": lam, "gamma": gamma, "mu": np.zeros(m), "nu": nu, "kappa": np.zeros(m)}
    return make_solution(
        instance, np.ones(m), np.zeros(m), "offline",
        converged=True, duals=duals, short_circuit=reason,
        newton_iterations=0, stages=0, barrier_t=None, gap=0.0,
    )


def solve_offline(instance: Instance, config: SolverConfig | None = None) -> PolicySolution:
    cfg = config or SolverConfig()
    p = instance.params
    m = instance.m
    h = instance.channels.h_sp
    if p.harvest_per_slot <= 0:
        return _short_circuit(instance, "no harvest")
    if p.p_int <= 0 and np.all(h > 0):
        return _short_circuit(instance, "zero interference threshold")

    # with p_int = 0, coupled slots cannot transmit; they only harvest
    pinned = (h > 0) if p.p_int <= 0 else np.zeros(m, dtype=bool)
    free = ~pinned
    w = p.harvest_per_slot
    pinned_before = np.cumsum(pinned) - pinned
    offset = (w * pinned_before[free]).astype(float)
    theta = np.ascontiguousarray(instance.theta[free])
    h_free = np.ascontiguousarray(h[free], dtype=float)
    has_int = p.p_int > 0
    n = int(free.sum())
    n_ineq = n * (5 if has_int else 4)

    if pinned.any():
        alpha, energy = np.full(n, 0.5), np.full(n, 0.25 * w)
    else:
        alpha, energy = strictly_feasible_start(instance)
    a_ls, b_ls = cfg.backtrack
    t = cfg.barrier_t0
    total_newton = 0
    stages = 0
    while True:
        alpha, energy, its, dec, ok = _barrier.center(
            t / LN2, alpha, energy, theta, offset, w, p.p_int, h_free, has_int,
            a_ls, b_ls, cfg.newton_tol, cfg.max_newton,
        )
        total_newton += its
        stages += 1
        # earlier stages only warm-start the next one; the multipliers and
        # the gap bound come from the last centering alone
        converged = ok
        if n_ineq / t < cfg.outer_tol:
            break
        t *= cfg.barrier_mu

    c, g = _barrier.slacks(alpha, energy, offset, w, p.p_int, h_free)
    duals_free = {
        "lambda": 1.0 / (t * c),
        "gamma": 1.0 / (t * g) if has_int else np.zeros(n),
        "mu": 1.0 / (t * (1.0 - alpha)),
        "nu": 1.0 / (t * energy),
        "kappa": 1.0 / (t * alpha),
    }
    alpha = _trim_harvest(alpha, energy, theta, c, w)
    full_alpha = np.zeros(m)
    full_energy = np.zeros(m)
    full_alpha[free] = alpha
    full_energy[free] = energy
    # silent slots after the last free one harvest for nobody; idle them
    trailing = pinned & (np.arange(m) > np.flatnonzero(free)[-1])
    full_alpha[trailing] = 1.0
    duals = {}
    for name, vals in duals_free.items():
        arr = np.zeros(m)
        arr[free] = vals
        duals[name] = arr
    if pinned.any():
        _fill_pinned_duals(instance, pinned, duals)
    return make_solution(
        instance, full_alpha, full_energy, "offline",
        converged=converged, duals=duals, newton_iterations=total_newton,
        stages=stages, barrier_t=t, gap=n_ineq / t, final_decrement=dec,
    )


def _trim_harvest(alpha, energy, theta, causality_slack, w):
    """Stop harvesting energy that the barrier point leaves unspent.

    The barrier keeps the final causality slack at about ``1 / (t * lambda)``.
    Raising ``alpha_j`` by ``d`` removes ``w * d`` of harvest and shrinks the
    causality slacks from slot ``j`` on; the rate of a slot is nondecreasing
    in ``alpha`` at fixed energy, so the objective cannot drop.  The whole
    excess goes to the eligible slot where the rate is least curved in
    ``alpha``, which keeps the barrier multipliers valid; if no single slot
    can absorb it, slots are filled from the end.
    """
    alpha = alpha.copy()
    slack = causality_slack.copy()
    excess = slack[-1]
    if excess <= 0.0:
        return alpha
    need = excess / w
    tail_min = np.minimum.accumulate(slack[::-1])[::-1]
    eligible = (tail_min >= excess) & (1.0 - alpha >= need)
    if eligible.any():
        u = theta * energy / alpha
        curvature = np.where(eligible, u * u / (alpha * (1.0 + u) ** 2), np.inf)
        j = int(np.argmin(curvature))
        alpha[j] = min(1.0, alpha[j] + need)
        return alpha
    for j in range(alpha.size - 1, -1, -1):
        if slack[-1] <= 0.0:
            break
        room = min(1.0 - alpha[j], float(np.min(slack[j:])) / w)
        if room <= 0.0:
            continue
        alpha[j] = min(1.0, alpha[j] + room)
        slack[j:] -= w * room
    return alpha


def _fill_pinned_duals(instance, pinned, duals):
    """Multipliers of silent slots (alpha = E = 0), chosen to zero their stationarity."""
    theta, h = instance.theta, instance.channels.h_sp
    w = instance.params.harvest_per_slot
    tail = np.cumsum(duals["lambda"][::-1])[::-1]
    gamma = np.maximum(0.0, (theta / LN2 - tail) / np.where(h > 0, h, 1.0))
    duals["gamma"][pinned] = gamma[pinned]
    duals["nu"][pinned] = (tail + gamma * h - theta / LN2)[pinned]
    # trailing silent slots idle at alpha = 1, where the tail sum is zero
    duals["kappa"][pinned] = (w * tail)[pinned]
    duals["mu"][pinned] = 0.0


def kkt_report(instance: Instance, solution: PolicySolution) -> KktReport:
    """Residuals of stationarity, complementary slackness and feasibility.

    The Lagrangian includes multipliers for ``E >= 0`` (``nu``) and
    ``alpha >= 0`` (``kappa``) next to the causality (``lambda``),
    interference (``gamma``) and ``alpha <= 1`` (``mu``) ones.
    """
    duals = solution.diagnostics.get("duals")
    if duals is None or any(k not in duals for k in DUAL_NAMES):
        raise StructureError("solution carries no dual estimates")
    lam, gam, mu, nu, kap = (np.asarray(duals[k], dtype=float) for k in DUAL_NAMES)
    if any(v.size != instance.m for v in (lam, gam, mu, nu, kap)) or solution.m != instance.m:
        raise StructureError("dual vectors do not match the instance length")
    p = instance.params
    a, e = np.asarray(solution.alpha), np.asarray(solution.energy)
    th, h, w = instance.theta, instance.channels.h_sp, p.harvest_per_slot

    pos = a > 0
    u = np.where(pos, th * e / np.where(pos, a, 1.0), 0.0)
    tail = np.cumsum(lam[::-1])[::-1]
    stat_a = u / (LN2 * (1.0 + u)) - np.log1p(u) / LN2 + w * tail - p.p_int * gam + mu - kap
    stat_e = -th / (LN2 * (1.0 + u)) + tail + gam * h - nu

    causality = np.cumsum(w * (1.0 - a) - e)
    interference = a * p.p_int - h * e
    comp = np.concatenate([lam * causality, gam * interference, mu * (1.0 - a), nu * e, kap * a])
    violation = np.concatenate([-causality, -interference, -e, -a, a - 1.0])
    multipliers = np.concatenate([lam, gam, mu, nu, kap])
    return KktReport(
        stat_alpha_residual=float(np.max(np.abs(stat_a))),
        stat_energy_residual=float(np.max(np.abs(stat_e))),
        comp_slack_residual=float(np.max(np.abs(comp))),
        primal_feas_violation=float(max(0.0, np.max(violation))),
        dual_feas_violation=float(min(0.0, np.min(multipliers))),
    )


def depletion_residual(instance: Instance, solution: PolicySolution) -> float:
    """Harvested minus spent energy over the horizon, in joules."""
    a, e = np.asarray(solution.alpha), np.asarray(solution.energy)
    return float(np.sum((1.0 - a) * instance.params.harvest_per_slot) - np.sum(e))
