"""Online myopic policy: every slot spends exactly what it harvests.

With ``E_i = (1 - alpha_i) * eta * pp`` the per-slot problem is

    max  alpha * log2(1 + zeta * (1 - alpha) / alpha)   s.t.  alpha >= psi

whose unconstrained maximizer is ``zeta / (zeta + z - 1)`` where ``z > 1``
solves ``z ln z - z + 1 = zeta``.  The interference cap becomes the lower
bound ``psi`` on the transmit fraction: the longer the slot transmits, the
lower the power needed to spend the harvest.
"""

from __future__ import annotations

import math

import numpy as np

from ehcr.model import DomainError, Instance, PolicySolution, make_solution

_BISECT_WIDTH = 1e-8
_RESIDUAL_TOL = 1e-12


def _excess(z: float) -> float:
    # z ln z - z + 1 written around z = 1 to avoid cancellation
    w = z - 1.0
    return (1.0 + w) * math.log1p(w) - w


def solve_z(zeta: float) -> float:
    """Root ``z >= 1`` of ``z ln z - z - zeta + 1 = 0``.

    Bisection on ``[1 + 1e-12, max(10, zeta + 2)]`` down to a bracket of
    width 1e-8, then Newton steps until the residual is below
    ``1e-12 * (1 + zeta)``.  Exactly 1 is returned for ``zeta == 0``.
    """
    zeta = float(zeta)
    if not math.isfinite(zeta) or zeta < 0:
        raise DomainError(f"zeta must be finite and nonnegative, got {zeta}")
    if zeta == 0.0:
        return 1.0
    tol = _RESIDUAL_TOL * (1.0 + zeta)
    lo, hi = 1.0 + 1e-12, max(10.0, zeta + 2.0)
    if _excess(lo) >= zeta:
        return lo
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if _excess(mid) < zeta:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    for _ in range(100):
        r = _excess(z) - zeta
        if r == 0.0:
            break
        z_new = z - r / math.log1p(z - 1.0)
        if not lo <= z_new <= hi:
            z_new = 0.5 * (lo + hi)
        if _excess(z_new) < zeta:
            lo = z_new
        else:
            hi = z_new
        # near z = 1 the slope vanishes, so stop on step size as well
        if abs(z_new - z) <= 4e-16 * z and abs(_excess(z_new) - zeta) <= tol:
            z = z_new
            break
        z = z_new
    return z


def unconstrained_alpha(zeta: float) -> float:
    if zeta == 0:
        return 0.0
    return zeta / (zeta + solve_z(zeta) - 1.0)


def myopic_slot(zeta: float, psi: float) -> float:
    """Optimal transmit fraction of one slot under full per-slot spending."""
    if not 0.0 <= psi <= 1.0:
        raise DomainError(f"psi must lie in [0, 1], got {psi}")
    return max(unconstrained_alpha(zeta), float(psi))


def myopic_objective(alpha, zeta):
    """Per-slot rate (bits/s/Hz) when the slot spends all its harvest."""
    a = np.asarray(alpha, dtype=float)
    pos = a > 0
    safe = np.where(pos, a, 1.0)
    out = np.where(pos, a * np.log1p(zeta * (1.0 - a) / safe) / math.log(2.0), 0.0)
    return float(out) if out.ndim == 0 else out


def solve_myopic(instance: Instance) -> PolicySolution:
    alpha = np.array([myopic_slot(z, p) for z, p in zip(instance.zeta, instance.psi)])
    energy = (1.0 - alpha) * instance.params.harvest_per_slot
    return make_solution(instance, alpha, energy, "myopic")
