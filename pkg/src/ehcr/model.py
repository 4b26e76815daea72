"""Physical parameters, channel containers and per-slot rate formulas.

Units: powers in watts, energies in joules, rates in bits/s/Hz.  The slot
length is fixed to one second, so a slot that transmits for a fraction
``alpha`` with energy ``E`` uses power ``E / alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

LN2 = math.log(2.0)


class StructureError(ValueError):
    """Inputs have inconsistent shapes or are missing required pieces."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain of the formula."""


class InconsistentSolutionError(ValueError):
    """A policy spends energy in a slot with no transmission time."""


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SystemParams:
    pp: float = 2.0
    eta: float = 0.3
    p_int: float = 0.1
    sigma_s2: float = 0.1
    sigma_p2: float = 0.1
    slot_seconds: float = 1.0

    def __post_init__(self):
        if not self.pp > 0:
            raise DomainError(f"pp must be positive, got {self.pp}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.p_int >= 0:
            raise DomainError(f"p_int must be nonnegative, got {self.p_int}")
        if not self.sigma_s2 > 0:
            raise DomainError(f"sigma_s2 must be positive, got {self.sigma_s2}")
        if not self.sigma_p2 > 0:
            raise DomainError(f"sigma_p2 must be positive, got {self.sigma_p2}")
        if self.slot_seconds != 1.0:
            raise DomainError("slot_seconds is fixed at 1.0")

    @property
    def harvest_per_slot(self) -> float:
        """Energy collected by harvesting for a whole slot, ``eta * pp``."""
        return self.eta * self.pp


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-slot channel power gains of the four links.

    ``pp``: PT->PR, ``ps``: PT->SR, ``sp``: ST->PR, ``ss``: ST->SR.
    """

    h_pp: np.ndarray
    h_ps: np.ndarray
    h_sp: np.ndarray
    h_ss: np.ndarray

    def __post_init__(self):
        lengths = set()
        for name in ("h_pp", "h_ps", "h_sp", "h_ss"):
            arr = _frozen(getattr(self, name), name)
            if np.any(arr < 0):
                raise DomainError(f"{name} has negative gains")
            object.__setattr__(self, name, arr)
            lengths.add(arr.size)
        if len(lengths) != 1:
            raise StructureError(f"gain sequences have mismatched lengths {sorted(lengths)}")
        if self.m < 1:
            raise StructureError("a realization needs at least one slot")

    @property
    def m(self) -> int:
        return int(self.h_ss.size)

    def __eq__(self, other):
        if not isinstance(other, ChannelRealization):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("h_pp", "h_ps", "h_sp", "h_ss")
        )

    def head(self, m: int) -> "ChannelRealization":
        """The first ``m`` slots."""
        return ChannelRealization(self.h_pp[:m], self.h_ps[:m], self.h_sp[:m], self.h_ss[:m])


@dataclass(frozen=True, eq=False)
class Instance:
    params: SystemParams
    channels: ChannelRealization
    theta: np.ndarray
    zeta: np.ndarray
    psi: np.ndarray

    @property
    def m(self) -> int:
        return self.channels.m


@dataclass(frozen=True, eq=False)
class PolicySolution:
    alpha: np.ndarray
    energy: np.ndarray
    power: np.ndarray
    slot_rates: np.ndarray
    sum_rate: float
    policy_tag: str
    converged: bool = True
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return int(self.alpha.size)


def derived_coefficients(params: SystemParams, channels: ChannelRealization) -> Instance:
    """Bundle params and channels with the per-slot coefficients.

    ``theta`` is the SNR per unit transmit power at the secondary receiver,
    ``zeta = theta * eta * pp`` the SNR of a full slot of harvest, and
    ``psi`` the smallest transmit fraction that keeps a fully spent slot of
    harvest under the interference cap.
    """
    if not isinstance(channels, ChannelRealization):
        raise StructureError("channels must be a ChannelRealization")
    theta = channels.h_ss / (params.sigma_s2 + channels.h_ps * params.pp)
    zeta = theta * params.harvest_per_slot
    load = channels.h_sp * params.harvest_per_slot
    denom = params.p_int + load
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(denom > 0, load / np.where(denom > 0, denom, 1.0), 1.0)
    # no ST->PR coupling means no interference restriction at all
    psi = np.where(channels.h_sp == 0, 0.0, psi)
    return Instance(params, channels, _frozen(theta, "theta"), _frozen(zeta, "zeta"), _frozen(psi, "psi"))


def slot_rate(alpha, energy, theta):
    """Rate ``alpha * log2(1 + theta * energy / alpha)`` of one slot.

    Works elementwise on arrays.  The value at ``alpha == 0`` is 0, the
    limit of the expression as the transmit fraction vanishes.
    """
    a = np.asarray(alpha, dtype=float)
    e = np.asarray(energy, dtype=float)
    th = np.asarray(theta, dtype=float)
    if np.any(a < 0) or np.any(a > 1) or np.any(e < 0) or np.any(th < 0):
        raise DomainError("slot_rate needs 0 <= alpha <= 1, energy >= 0, theta >= 0")
    pos = a > 0
    safe = np.where(pos, a, 1.0)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratio = th * e / safe
        # tiny alpha overflows the ratio; split the logarithm instead
        wide = safe * (np.log(th * e) - np.log(safe))
        nats = np.where(np.isfinite(ratio), safe * np.log1p(ratio), wide)
    out = np.where(pos, nats / LN2, 0.0)
    return float(out) if out.ndim == 0 else out


def sum_rate(alpha, energy, instance: Instance) -> float:
    a = np.asarray(alpha, dtype=float).reshape(-1)
    e = np.asarray(energy, dtype=float).reshape(-1)
    if a.size != instance.m or e.size != instance.m:
        raise StructureError(f"expected vectors of length {instance.m}, got {a.size} and {e.size}")
    return float(np.sum(slot_rate(a, e, instance.theta)))


def recover_power(alpha, energy) -> np.ndarray:
    """Transmit power per slot, ``E / alpha`` or 0 for a silent slot."""
    a = np.asarray(alpha, dtype=float).reshape(-1)
    e = np.asarray(energy, dtype=float).reshape(-1)
    if a.size != e.size:
        raise StructureError("alpha and energy differ in length")
    if np.any(a < 0) or np.any(a > 1) or np.any(e < 0):
        raise DomainError("recover_power needs alpha in [0, 1] and energy >= 0")
    silent = a == 0
    if np.any(silent & (e > 0)):
        idx = np.flatnonzero(silent & (e > 0)).tolist()
        raise InconsistentSolutionError(f"energy spent in slots {idx} with alpha = 0")
    return np.where(silent, 0.0, e / np.where(silent, 1.0, a))


def harvest_profile(alpha, params: SystemParams) -> np.ndarray:
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if np.any(a < 0) or np.any(a > 1):
        raise DomainError("alpha must lie in [0, 1]")
    return (1.0 - a) * params.harvest_per_slot


def make_solution(instance: Instance, alpha, energy, policy_tag: str, converged=True, **diagnostics) -> PolicySolution:
    """Assemble a :class:`PolicySolution`, filling power and rates."""
    a = _frozen(alpha, "alpha")
    e = _frozen(energy, "energy")
    power = _frozen(recover_power(a, e), "power")
    rates = _frozen(slot_rate(a, e, instance.theta), "slot_rates")
    return PolicySolution(
        alpha=a,
        energy=e,
        power=power,
        slot_rates=rates,
        sum_rate=float(np.sum(rates)),
        policy_tag=policy_tag,
        converged=bool(converged),
        diagnostics=dict(diagnostics),
    )
