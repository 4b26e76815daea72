"""Seeded block-fading channel draws and CSV channel traces.

Every link is Rayleigh faded, so its power gain is exponential with mean
equal to the configured variance.  Draws come from numpy's Philox
counter-based generator keyed directly by the 64-bit seed.  Slots are
generated row by row, hence the first ``k`` slots of an ``m``-slot draw
equal a ``k``-slot draw with the same seed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import astuple, dataclass

import numpy as np

from ehcr.model import ChannelRealization, DomainError, StructureError

TRACE_HEADER = ["slot", "h_pp", "h_ps", "h_sp", "h_ss"]
_MASK64 = (1 << 64) - 1


class TraceParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass(frozen=True)
class LinkVariances:
    v_pp: float = 1.0
    v_ps: float = 1.0
    v_sp: float = 1.0
    v_ss: float = 1.0

    def __post_init__(self):
        for name, v in zip(("v_pp", "v_ps", "v_sp", "v_ss"), astuple(self)):
            if not v > 0:
                raise DomainError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class Scenario:
    name: str
    variances: LinkVariances

    @classmethod
    def named(cls, name: str) -> "Scenario":
        return cls(name, scenario_variances(name))


SCENARIOS = {
    "baseline": LinkVariances(1.0, 1.0, 1.0, 1.0),
    "weak_st_pr": LinkVariances(1.0, 1.0, 0.1, 1.0),
    "weak_pt_sr": LinkVariances(1.0, 0.1, 1.0, 1.0),
    "strong_direct": LinkVariances(1.0, 0.1, 0.1, 1.0),
    "strong_interference": LinkVariances(0.1, 1.0, 1.0, 0.1),
}


def scenario_variances(name: str) -> LinkVariances:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed of Monte Carlo trial ``trial``: ``base_seed`` xor a mix of the index."""
    return (int(base_seed) ^ splitmix64(int(trial))) & _MASK64


def sample_realization(variances: LinkVariances, m: int, seed: int) -> ChannelRealization:
    if m < 1:
        raise StructureError(f"slot count must be at least 1, got {m}")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
    draws = rng.standard_exponential((m, 4)) * np.array(astuple(variances))
    return ChannelRealization(draws[:, 0], draws[:, 1], draws[:, 2], draws[:, 3])


def write_trace(path, realization: ChannelRealization) -> None:
    if not path:
        raise OSError("empty trace path")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        cols = (realization.h_pp, realization.h_ps, realization.h_sp, realization.h_ss)
        for i in range(realization.m):
            writer.writerow([i + 1] + [repr(float(c[i])) for c in cols])


def read_trace(path) -> ChannelRealization:
    if not path:
        raise OSError("empty trace path")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_HEADER:
            raise TraceParseError(path, 1, f"header must be {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise TraceParseError(path, lineno, f"expected {len(TRACE_HEADER)} fields, got {len(row)}")
            try:
                slot = int(row[0])
            except ValueError:
                raise TraceParseError(path, lineno, f"slot index {row[0]!r} is not an integer") from None
            if slot != len(rows) + 1:
                raise TraceParseError(path, lineno, f"slot index {slot}, expected {len(rows) + 1}")
            gains = []
            for name, text in zip(TRACE_HEADER[1:], row[1:]):
                try:
                    g = float(text)
                except ValueError:
                    raise TraceParseError(path, lineno, f"{name} value {text!r} is not numeric") from None
                if not np.isfinite(g) or g < 0:
                    raise TraceParseError(path, lineno, f"{name} must be a finite nonnegative gain, got {text}")
                gains.append(g)
            rows.append(gains)
    if not rows:
        raise TraceParseError(path, 2, "trace has no slots")
    arr = np.array(rows)
    return ChannelRealization(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
