"""Grid-search references for one- and two-slot instances.

For fixed transmit fractions the rate of a slot is nondecreasing in its
energy (``d/dE alpha*log2(1 + theta*E/alpha) = theta/(ln2 (1 + theta*E/alpha)) >= 0``),
so every slot that is not followed by another decision spends the most
energy its constraints allow.  Only the remaining choices are gridded.
Every candidate is feasible, so oracle values are lower bounds on the
optimum.
"""

from __future__ import annotations

import numpy as np

from ehcr.model import LN2, Instance, PolicySolution, StructureError, make_solution
from ehcr.myopic import myopic_objective


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    k = int(np.floor((hi - lo) / step + 1e-9))
    pts = lo + step * np.arange(k + 1)
    if pts[-1] < hi:
        pts = np.append(pts, hi)
    return pts


def _rate(alpha, energy, theta):
    pos = alpha > 0
    return np.where(pos, alpha * np.log1p(theta * energy / np.where(pos, alpha, 1.0)), 0.0) / LN2


def _cap(alpha, p_int, h_sp):
    """Most energy a slot may spend at transmit fraction ``alpha``.

    A silent slot spends nothing; otherwise the interference threshold caps it.
    """
    alpha = np.asarray(alpha, dtype=float)
    cap = np.full_like(alpha, np.inf) if h_sp == 0 else alpha * p_int / h_sp
    return np.where(alpha > 0, cap, 0.0)


def oracle_offline_m1(instance: Instance, grid_step: float = 1e-3) -> PolicySolution:
    if instance.m != 1:
        raise StructureError(f"oracle_offline_m1 needs m = 1, got {instance.m}")
    w = instance.params.harvest_per_slot
    alpha = _grid(grid_step, 1.0, grid_step)
    energy = np.minimum((1.0 - alpha) * w, _cap(alpha, instance.params.p_int, instance.channels.h_sp[0]))
    rates = _rate(alpha, energy, instance.theta[0])
    best = int(np.argmax(rates))
    return make_solution(instance, [alpha[best]], [energy[best]], "oracle", grid_step=grid_step)


def oracle_offline_m2(instance: Instance, grid_step: float = 5e-3) -> PolicySolution:
    if instance.m != 2:
        raise StructureError(f"oracle_offline_m2 needs m = 2, got {instance.m}")
    p = instance.params
    w = p.harvest_per_slot
    th1, th2 = instance.theta
    h1, h2 = instance.channels.h_sp
    a_grid = _grid(0.0, 1.0, grid_step)
    a2 = a_grid[None, :]
    cap2 = _cap(a2, p.p_int, h2)
    best = (-1.0, 0.0, 0.0, 0.0, 0.0)
    for a1 in a_grid:
        cum1 = (1.0 - a1) * w
        top1 = min(cum1, float(_cap(np.array(a1), p.p_int, h1)))
        e1 = _grid(0.0, top1, grid_step * w) if top1 > 0 else np.zeros(1)
        e1 = e1[:, None]
        cum2 = cum1 + (1.0 - a2) * w
        e2 = np.maximum(np.minimum(cum2 - e1, cap2), 0.0)
        total = _rate(np.full_like(e1, a1), e1, th1) + _rate(a2 + 0.0 * e1, e2, th2)
        k = np.unravel_index(int(np.argmax(total)), total.shape)
        if total[k] > best[0]:
            best = (float(total[k]), a1, float(e1[k[0], 0]), float(a_grid[k[1]]), float(e2[k]))
    _, a1, e1, a2_best, e2 = best
    return make_solution(instance, [a1, a2_best], [e1, e2], "oracle", grid_step=grid_step)


def oracle_myopic_slot(zeta: float, psi: float, grid_step: float = 1e-4) -> float:
    """Best transmit fraction on the grid ``max(psi, grid_step), ..., 1``."""
    alpha = _grid(max(float(psi), grid_step), 1.0, grid_step)
    values = myopic_objective(alpha, zeta)
    return float(alpha[int(np.argmax(values))])
