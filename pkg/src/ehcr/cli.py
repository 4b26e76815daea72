"""Command-line entry point: ``ehcr gen-channels | solve | sweep | validate``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from ehcr.channel import (
    SCENARIOS,
    LinkVariances,
    read_trace,
    sample_realization,
    trial_seed,
    write_trace,
)
from ehcr.model import SystemParams, derived_coefficients, recover_power
from ehcr.myopic import myopic_objective, myopic_slot, solve_myopic, solve_z
from ehcr.offline import depletion_residual, kkt_report, solve_offline
from ehcr.oracle import oracle_myopic_slot, oracle_offline_m1, oracle_offline_m2
from ehcr.sim import (
    POLICIES,
    FigureGapError,
    SweepSpec,
    figure_series,
    run_sweep,
    write_aggregates,
    write_series,
    write_trials,
)

log = logging.getLogger("ehcr")

CONFIG_DEFAULTS = {
    "pp": 2.0,
    "eta": 0.3,
    "p_int": 0.1,
    "sigma_s2": 0.1,
    "sigma_p2": 0.1,
    "eta_list": [0.1, 0.3, 0.5],
    "p_int_list": [0.05, 0.1, 0.5],
    "scenarios": ["baseline"],
    "slot_counts": list(range(5, 55, 5)),
    "trials": 1000,
    "base_seed": 1,
    "policies": list(POLICIES),
}


class ConfigError(ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


def _number(key, value, lo=None, hi=None, lo_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ConfigError(key, f"{value!r} is out of range")
    if hi is not None and value > hi:
        raise ConfigError(key, f"{value!r} is out of range")
    return float(value)


def _integer(key, value, lo):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(key, f"expected an integer >= {lo}, got {value!r}")
    return value


def _list(key, value, item):
    if not isinstance(value, list) or not value:
        raise ConfigError(key, "expected a non-empty list")
    return [item(f"{key}[{i}]", v) for i, v in enumerate(value)]


def parse_config(doc: dict) -> tuple[SweepSpec, SystemParams]:
    """Validate a config document and build the sweep and base parameters."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")
    for key in doc:
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(key, "unknown key")
    cfg = {**CONFIG_DEFAULTS, **doc}

    def scenario(k, v):
        if v not in SCENARIOS:
            raise ConfigError(k, f"unknown scenario {v!r}")
        return v

    def policy(k, v):
        if v not in POLICIES:
            raise ConfigError(k, f"unknown policy {v!r}")
        return v

    params = SystemParams(
        pp=_number("pp", cfg["pp"], 0.0, lo_open=True),
        eta=_number("eta", cfg["eta"], 0.0, 1.0),
        p_int=_number("p_int", cfg["p_int"], 0.0),
        sigma_s2=_number("sigma_s2", cfg["sigma_s2"], 0.0, lo_open=True),
        sigma_p2=_number("sigma_p2", cfg["sigma_p2"], 0.0, lo_open=True),
    )
    base_seed = _integer("base_seed", cfg["base_seed"], 0)
    if base_seed >= 2**64:
        raise ConfigError("base_seed", "must fit in 64 bits")
    spec = SweepSpec(
        slot_counts=tuple(_list("slot_counts", cfg["slot_counts"], lambda k, v: _integer(k, v, 1))),
        etas=tuple(_list("eta_list", cfg["eta_list"], lambda k, v: _number(k, v, 0.0, 1.0))),
        p_ints=tuple(_list("p_int_list", cfg["p_int_list"], lambda k, v: _number(k, v, 0.0))),
        scenarios=tuple(_list("scenarios", cfg["scenarios"], scenario)),
        trials=_integer("trials", cfg["trials"], 1),
        base_seed=base_seed,
        policies=tuple(_list("policies", cfg["policies"], policy)),
        params=params,
    )
    return spec, params


def load_config(path) -> tuple[SweepSpec, SystemParams]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return parse_config(doc)


def config_document(spec: SweepSpec, params: SystemParams) -> dict:
    """Inverse of ``parse_config``."""
    return {
        "pp": params.pp,
        "eta": params.eta,
        "p_int": params.p_int,
        "sigma_s2": params.sigma_s2,
        "sigma_p2": params.sigma_p2,
        "eta_list": list(spec.etas),
        "p_int_list": list(spec.p_ints),
        "scenarios": list(spec.scenarios),
        "slot_counts": list(spec.slot_counts),
        "trials": spec.trials,
        "base_seed": spec.base_seed,
        "policies": list(spec.policies),
    }


def _variances(values):
    if len(values) == 1:
        if values[0] not in SCENARIOS:
            raise argparse.ArgumentTypeError(f"unknown scenario {values[0]!r}")
        return SCENARIOS[values[0]]
    if len(values) != 4:
        raise argparse.ArgumentTypeError("--variances takes a scenario name or 4 numbers")
    try:
        return LinkVariances(*(float(v) for v in values))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_gen_channels(args) -> int:
    realization = sample_realization(args.variances, args.slots, args.seed)
    write_trace(args.out, realization)
    return 0


def cmd_solve(args) -> int:
    params = load_config(args.config)[1] if args.config else SystemParams()
    instance = derived_coefficients(params, read_trace(args.trace))
    sol = solve_offline(instance) if args.policy == "offline" else solve_myopic(instance)
    power = recover_power(sol.alpha, sol.energy)
    if args.json:
        doc = {
            "policy": sol.policy_tag,
            "converged": bool(sol.converged),
            "slots": [
                {"slot": i + 1, "alpha": float(a), "energy": float(e), "power": float(p), "rate": float(r)}
                for i, (a, e, p, r) in enumerate(zip(sol.alpha, sol.energy, power, sol.slot_rates))
            ],
            "sum_rate": float(sol.sum_rate),
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"{'slot':>4} {'alpha':>22} {'energy':>22} {'power':>22} {'rate':>22}")
        for i, (a, e, p, r) in enumerate(zip(sol.alpha, sol.energy, power, sol.slot_rates)):
            print(f"{i + 1:>4} {float(a)!r:>22} {float(e)!r:>22} {float(p)!r:>22} {float(r)!r:>22}")
        print(f"sum_rate {float(sol.sum_rate)!r}")
    if not sol.converged:
        print("solver did not converge", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    spec, _ = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    result = run_sweep(spec, threads=args.threads, keep_trials=args.per_trial)
    aggregates, records = result if args.per_trial else (result, None)
    write_aggregates(os.path.join(args.out, "aggregates.csv"), aggregates)
    if records is not None:
        write_trials(os.path.join(args.out, "trials.csv"), records)
    for fig in ("fig2", "fig3", "fig4"):
        try:
            rows = figure_series(aggregates, fig)
        except FigureGapError as exc:
            log.info("skipping %s: %s", fig, exc)
            continue
        write_series(os.path.join(args.out, f"{fig}.csv"), rows)
    return 0


def _relative(a, b):
    return abs(a - b) / max(abs(b), 1e-12)


def validation_suites(instances: int, seed: int):
    """Yield ``(name, passed, detail)`` for each validation suite."""
    params = SystemParams()
    baseline = SCENARIOS["baseline"]

    def draws(m, count, salt):
        for k in range(count):
            yield derived_coefficients(params, sample_realization(baseline, m, trial_seed(seed ^ salt, k)))

    worst = max(
        _relative(solve_offline(inst).sum_rate, oracle_offline_m1(inst).sum_rate)
        for inst in draws(1, instances, 1)
    )
    yield "oracle m=1", worst <= 1e-3, f"worst relative gap {worst:.3g} (limit 1e-3)"

    worst = max(
        _relative(solve_offline(inst).sum_rate, oracle_offline_m2(inst).sum_rate)
        for inst in draws(2, min(instances, 50), 2)
    )
    yield "oracle m=2", worst <= 5e-3, f"worst relative gap {worst:.3g} (limit 5e-3)"

    rng = np.random.Generator(np.random.Philox(key=seed))
    zetas = rng.exponential(1.0, instances)
    psis = rng.uniform(0.0, 1.0, instances)
    gap = 0.0
    resid = 0.0
    for zeta, psi in zip(zetas, psis):
        closed = myopic_objective(myopic_slot(zeta, psi), zeta)
        grid = myopic_objective(oracle_myopic_slot(zeta, psi), zeta)
        gap = max(gap, grid - closed)
        z = solve_z(zeta)
        resid = max(resid, abs(z * math.log(z) - z - zeta + 1.0) / (1.0 + zeta))
    ok = gap <= 1e-6 and resid <= 1e-12
    yield "myopic closed form", ok, f"oracle excess {gap:.3g}, scaled root residual {resid:.3g}"

    kkt = 0.0
    dep = 0.0
    dom = math.inf
    converged = True
    for inst in draws(10, instances, 3):
        sol = solve_offline(inst)
        converged &= bool(sol.converged)
        kkt = max(kkt, kkt_report(inst, sol).worst() / (1.0 + abs(sol.sum_rate)))
        dep = max(dep, depletion_residual(inst, sol) / (inst.m * params.harvest_per_slot))
        dom = min(dom, sol.sum_rate - solve_myopic(inst).sum_rate)
    yield "kkt", converged and kkt <= 1e-4, f"worst scaled residual {kkt:.3g} (limit 1e-4)"
    yield "depletion", dep <= 1e-6, f"worst unspent fraction {dep:.3g} (limit 1e-6)"
    yield "dominance", dom >= -1e-6, f"min offline - myopic {dom:.3g} (limit -1e-6)"


def cmd_validate(args) -> int:
    failed = 0
    for name, ok, detail in validation_suites(args.instances, args.seed):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ehcr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-cell progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-channels", help="draw a channel trace")
    p.add_argument("--variances", nargs="+", required=True, metavar="V",
                   help="scenario name or four variances v_pp v_ps v_sp v_ss")
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_channels)

    p = sub.add_parser("solve", help="solve one trace")
    p.add_argument("--policy", choices=POLICIES, required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--config")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--per-trial", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the oracle, KKT and dominance checks")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen-channels":
        try:
            args.variances = _variances(args.variances)
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
        if args.slots < 1:
            parser.error("--slots must be at least 1")
    if args.command == "sweep" and args.threads is not None and args.threads < 1:
        parser.error("--threads must be at least 1")
    if args.command == "validate" and args.instances < 1:
        parser.error("--instances must be at least 1")
    if getattr(args, "seed", 0) is not None and not 0 <= getattr(args, "seed", 0) < 2**64:
        parser.error("--seed must fit in 64 bits")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"ehcr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
