"""Command-line interface.

One subcommand per experiment family.  Options resolve in three layers:
built-in defaults, then a flat ``key = value`` config file given with
``--config``, then explicit command-line flags.  Reports are canonical
JSON (sorted keys, repr floats); pass ``--timed`` to record wall-clock
fields, which are otherwise nulled so reruns are byte-identical.

Exit codes: 0 success, 2 usage or config error, 3 numerical failure
(instability, non-contraction, bracket failure), 4 acceptance failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import namedtuple

import numpy as np

from . import acceptance, reporting
from .backend import backend_name
from .blocks import REGIMES, sweep_blocks
from .continuity import convergence_study, run_family
from .evolution import (
    InstabilityError,
    NonContractionError,
    SolverConfig,
    picard_iterate,
    solve,
    write_snapshot,
)
from .illposedness import KINDS, inflation_sweep
from .semigroup import (
    kernel_l2_norm,
    log_t_grid,
    psi_envelope,
    smoothing_check,
    weighted_kernel_l2_norm,
)
from .spectral import Grid, SpectralField, SymbolParams, l2_norm, sobolev_norm

__all__ = ["main"]

Opt = namedtuple("Opt", "name type default help")


class UsageError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str):
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


_COMMON = [
    Opt("report", str, "-", "report destination path, '-' for stdout"),
    Opt("timed", _parse_bool, False, "record wall-clock fields (breaks rerun determinism)"),
]

_DATUM = [
    Opt("n_modes", int, 256, "grid size"),
    Opt("period", float, float(2.0 * np.pi), "spatial period"),
    Opt("seed", int, 0, "RNG seed for the datum"),
    Opt("band", float, 32.0, "frequency cutoff of the random datum"),
    Opt("decay", float, 1.0, "spectral decay rate of the datum"),
    Opt("l2_size", float, 0.1, "L2 norm of the datum"),
]

OPTIONS = {
    "simulate": _COMMON + _DATUM + [
        Opt("alpha", float, 1.0, "growth order"),
        Opt("beta", float, 2.0, "dissipation order"),
        Opt("dt", float, 1e-4, "time step"),
        Opt("t_end", float, 1.0, "final time"),
        Opt("scheme", str, "ifrk4", "time stepper: ifrk4 or etdrk4"),
        Opt("store_every", int, 100, "frame stride"),
        Opt("dealias", _parse_bool, True, "2/3-rule dealiasing"),
        Opt("sobolev_s", float, 2.0, "Sobolev index of the CSV norm column"),
        Opt("csv", str, "", "optional CSV output path"),
        Opt("snapshot", str, "", "optional binary snapshot path"),
    ],
    "semigroup-check": _COMMON + _DATUM + [
        Opt("alpha", float, 1.0, "growth order"),
        Opt("beta", float, 2.0, "dissipation order"),
        Opt("s", float, 0.0, "base regularity"),
        Opt("delta", float, 1.0, "regularity gain"),
        Opt("t_lo", float, 1e-3, "smallest sampled time"),
        Opt("t_hi", float, 1.0, "largest sampled time"),
    ],
    "kernel-rates": _COMMON + [
        Opt("alpha", float, 1.0, "growth order"),
        Opt("beta", float, 2.0, "dissipation order"),
        Opt("s", float, 0.0, "kernel weight exponent"),
        Opt("t_lo", float, 1e-3, "smallest sampled time"),
        Opt("t_hi", float, 1.0, "largest sampled time"),
        Opt("n_modes", int, 1 << 15, "frequency-grid size"),
        Opt("period", float, 256.0, "frequency-grid period"),
    ],
    "picard": _COMMON + _DATUM + [
        Opt("alpha", float, 1.0, "growth order"),
        Opt("beta", float, 2.0, "dissipation order"),
        Opt("horizon", float, 0.2, "iteration horizon T"),
        Opt("iters", int, 8, "number of Picard iterations"),
        Opt("panels", int, 24, "time panels for the Duhamel quadrature"),
        Opt("s", float, 2.0, "Sobolev index of the difference norms"),
    ],
    "inflation": _COMMON + [
        Opt("kind", str, "line-pair", f"datum kind: {', '.join(KINDS)}"),
        Opt("order", int, 2, "flow-map derivative order (2 or 3)"),
        Opt("alpha", float, 1.0, "growth order"),
        Opt("beta", float, 2.0, "dissipation order"),
        Opt("s", float, -1.25, "Sobolev index of the measured norm"),
        Opt("epsilon", float, 0.05, "time-exponent margin"),
        Opt("eps1", float, 1.0 / 64.0, "relative band width (wide-band cubic regime)"),
        Opt("n_list", _parse_floats, [float(2**k) for k in range(6, 13)],
            "comma-separated datum scales"),
    ],
    "blocks": _COMMON + [
        Opt("regime", str, "high-mod", f"interaction regime: {', '.join(REGIMES)}"),
        Opt("scales", int, 5, "dyadic scale range of the enumeration"),
        Opt("gamma", float, 2.0, "free exponent of the unbalanced low-modulation bound"),
        Opt("resolution", int, 8, "cells per shell side"),
        Opt("count", int, 120, "number of blocks"),
        Opt("seed", int, 0, "RNG seed for the power iterations"),
    ],
    "alpha-limit": _COMMON + _DATUM + [
        Opt("beta", float, 2.0, "dissipation order"),
        Opt("alphas", _parse_floats, [1.0, 1.5, 1.75, 1.9, 1.99],
            "comma-separated growth orders"),
        Opt("s0", float, 2.0, "datum regularity"),
        Opt("s", float, 0.75, "difference-norm regularity"),
        Opt("dt", float, 2e-3, "time step"),
        Opt("store_every", int, 8, "frame stride"),
    ],
    "check": _COMMON + [
        Opt("seed", int, 0, "battery seed"),
    ],
}


def _read_config(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key = value")
                key, _, val = line.partition("=")
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    return values


def _resolve(opts, args, config: dict) -> dict:
    known = {o.name: o for o in opts}
    for key in config:
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
    out = {}
    for o in opts:
        cli_val = getattr(args, o.name)
        if cli_val is not None:
            out[o.name] = cli_val
        elif o.name in config:
            try:
                out[o.name] = o.type(config[o.name])
            except ValueError as exc:
                raise UsageError(f"bad config value for {o.name!r}: {exc}") from exc
        else:
            out[o.name] = o.default
    return out


def _emit(report: dict, dest: str) -> None:
    blob = reporting.canonical_json(report)
    if dest == "-":
        sys.stdout.write(blob)
    else:
        with open(dest, "w") as fh:
            fh.write(blob)


def _datum(v: dict) -> SpectralField:
    grid = Grid(v["n_modes"], v["period"])
    return acceptance.random_band_limited_field(
        grid, v["band"], v["seed"], decay=v["decay"], size=v["l2_size"]
    )


def _run_simulate(v: dict) -> dict:
    p = SymbolParams(alpha=v["alpha"], beta=v["beta"])
    u0 = _datum(v)
    cfg = SolverConfig(
        dt=v["dt"], t_end=v["t_end"], scheme=v["scheme"],
        dealias=v["dealias"], store_every=v["store_every"],
    )
    traj = solve(u0, cfg, p)
    if v["csv"]:
        with open(v["csv"], "w") as fh:
            fh.write(reporting.trajectory_csv(traj, v["sobolev_s"]))
    if v["snapshot"]:
        write_snapshot(v["snapshot"], traj)
    final = SpectralField(traj.grid, traj.states[-1])
    payload = {
        "frames": traj.n_frames,
        "final_time": float(traj.times[-1]),
        "final_l2": l2_norm(final),
        "final_hs": sobolev_norm(final, v["sobolev_s"]),
        "backend": backend_name(),
    }
    return payload


def _run_semigroup_check(v: dict) -> dict:
    p = SymbolParams(alpha=v["alpha"], beta=v["beta"])
    u0 = _datum(v)
    rep = smoothing_check(u0, v["s"], v["delta"], p, log_t_grid(v["t_lo"], v["t_hi"]))
    return {
        "s": rep.s,
        "delta": rep.delta,
        "t_samples": rep.t_samples,
        "ratios": rep.ratios,
        "sup_ratio": rep.sup_ratio,
    }


def _run_kernel_rates(v: dict) -> dict:
    p = SymbolParams(alpha=v["alpha"], beta=v["beta"])
    grid = Grid(v["n_modes"], v["period"])
    s, b = v["s"], v["beta"]
    if s < 0.0:
        raise UsageError("kernel rates need s >= 0")
    rate = -s / b - 1.0 / (2.0 * b)
    r = max((3.0 + 2.0 * s) / b, 0.0) + 0.1
    rows = []
    for t in log_t_grid(v["t_lo"], v["t_hi"]):
        t = float(t)
        env = float(psi_envelope(t, p))
        plain = kernel_l2_norm(s, t, p, grid)
        weighted = weighted_kernel_l2_norm(s, t, p, grid)
        rows.append(
            {
                "t": t,
                "plain": plain,
                "plain_ratio": plain / (env * t**rate),
                "weighted": weighted,
                "weighted_ratio": weighted / (env * t ** (-0.5 * r)),
            }
        )
    return {
        "s": s,
        "rate_exponent": rate,
        "weighted_exponent": -0.5 * r,
        "rows": rows,
        "sup_plain_ratio": max(row["plain_ratio"] for row in rows),
        "sup_weighted_ratio": max(row["weighted_ratio"] for row in rows),
    }


def _run_picard(v: dict) -> dict:
    p = SymbolParams(alpha=v["alpha"], beta=v["beta"])
    u0 = _datum(v)
    res = picard_iterate(
        u0, v["horizon"], v["iters"], p, n_panels=v["panels"], s=v["s"]
    )
    return {
        "horizon": v["horizon"],
        "s": res.s,
        "diffs": res.diffs,
        "ratios": res.ratios,
        "contraction_ratio": res.contraction_ratio,
        "converged": res.converged,
    }


def _run_inflation(v: dict) -> dict:
    p = SymbolParams(alpha=v["alpha"], beta=v["beta"])
    return inflation_sweep(
        v["kind"], v["s"], p, v["n_list"],
        epsilon=v["epsilon"], order=v["order"], eps1=v["eps1"],
    )


def _run_blocks(v: dict) -> dict:
    if v["regime"] not in REGIMES:
        raise UsageError(f"unknown regime {v['regime']!r}")
    return sweep_blocks(
        v["regime"], scales=v["scales"], gamma=v["gamma"],
        resolution=v["resolution"], count=v["count"], seed=v["seed"],
    )


def _run_alpha_limit(v: dict) -> dict:
    grid = Grid(v["n_modes"], v["period"])
    u0 = acceptance.random_band_limited_field(
        grid, v["band"], v["seed"], decay=v["decay"], size=v["l2_size"], norm_s=v["s0"]
    )
    cfg = SolverConfig(dt=v["dt"], t_end=1.0, store_every=v["store_every"])
    fam = run_family(u0, v["alphas"], v["beta"], s0=v["s0"], cfg=cfg)
    return convergence_study(fam, s=v["s"])


def _run_check(v: dict):
    report = acceptance.run_all(seed=v["seed"], deterministic=not v["timed"])
    for crit in report["criteria"]:
        status = "PASS" if crit["passed"] else "FAIL"
        print(f"criterion {crit['id']:>2}  {crit['name']:<32} {status}")
    n_fail = sum(not c["passed"] for c in report["criteria"])
    print(f"{len(report['criteria']) - n_fail}/{len(report['criteria'])} criteria passed")
    return report, (0 if n_fail == 0 else 4)


_RUNNERS = {
    "simulate": _run_simulate,
    "semigroup-check": _run_semigroup_check,
    "kernel-rates": _run_kernel_rates,
    "picard": _run_picard,
    "inflation": _run_inflation,
    "blocks": _run_blocks,
    "alpha-limit": _run_alpha_limit,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdbo",
        description="pseudospectral laboratory for a growth-dissipative dispersive family",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in OPTIONS.items():
        sp = sub.add_parser(command, help=f"run the {command} experiment")
        sp.add_argument("--config", default=None, help="flat key = value config file")
        for o in opts:
            flag = "--" + o.name.replace("_", "-")
            if o.type is _parse_bool:
                sp.add_argument(flag, type=_parse_bool, default=None,
                                metavar="BOOL", help=o.help)
            else:
                sp.add_argument(flag, type=o.type, default=None, help=o.help)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _read_config(args.config) if args.config else {}
        v = _resolve(OPTIONS[args.command], args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    started = time.time()
    try:
        if args.command == "check":
            report, code = _run_check(v)
            if v["report"] != "-":
                _emit(report, v["report"])
            return code
        payload = _RUNNERS[args.command](v)
        report = reporting.finalize_report(
            payload,
            {k: val for k, val in v.items() if k not in ("report", "timed")},
            deterministic=not v["timed"],
            started_at=started,
        )
        _emit(report, v["report"])
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InstabilityError, NonContractionError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
