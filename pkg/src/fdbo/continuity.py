"""Uniform-in-alpha bounds and the strong limit of solutions as the
growth order approaches the dissipation order.

For a family of solves sharing the datum and the dissipation order
``beta``, the Sobolev size of every member is dominated by the Riccati
envelope

    g(t) = r e^{c t / 2} / (1 - r (e^{c t / 2} - 1)),    r = |u0|_{H^{s0}},

up to the blow-up time of g.  The constant c is not taken from theory:
it is calibrated once per grid as the smallest candidate making the
envelope hold for the pure dispersive member (alpha = beta), then
frozen for the whole family.  The convergence study measures

    D(a) = sup_t |u^a(t) - u^b(t)|_{H^s}

against the two drivers of the difference equation: the symbol gap peak
``A(a) = max_x (x^a - x^b)`` and the accumulated dissipation mismatch
``B(a)``, fitting one constant C with D^2 <= C (A + B) across the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .evolution import SolverConfig, Trajectory, solve
from .spectral import Grid, SpectralField, SymbolParams, sobolev_norm, symbol_peak

__all__ = [
    "FamilyRun",
    "uniform_bound_g",
    "g_blowup_time",
    "calibrate_growth_constant",
    "run_family",
    "torus_dissipativity",
    "convergence_study",
]

DEFAULT_C_CANDIDATES = tuple(float(c) for c in np.geomspace(0.25, 64.0, 25))


def g_blowup_time(u0_norm: float, c: float) -> float:
    """Blow-up time of the envelope: where its denominator vanishes."""
    if u0_norm <= 0 or c <= 0:
        raise ValueError("need positive datum norm and positive c")
    return (2.0 / c) * math.log1p(1.0 / u0_norm)


def uniform_bound_g(t: float, u0_norm: float, c: float) -> float:
    """Riccati envelope g(t); rejects t at or beyond its blow-up time."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t >= g_blowup_time(u0_norm, c):
        raise ValueError("t is at or beyond the envelope blow-up time")
    z = math.exp(0.5 * c * t)
    return u0_norm * z / (1.0 - u0_norm * (z - 1.0))


def _envelope_holds(traj: Trajectory, s0: float, u0_norm: float, c: float, horizon: float, tol: float = 0.0) -> bool:
    for t, coeffs in zip(traj.times, traj.states):
        if t > horizon:
            break
        size = sobolev_norm(SpectralField(traj.grid, coeffs), s0)
        if size > (1.0 + tol) * uniform_bound_g(float(t), u0_norm, c):
            return False
    return True


def calibrate_growth_constant(
    u0: SpectralField,
    beta: float,
    s0: float,
    cfg: SolverConfig,
    candidates=DEFAULT_C_CANDIDATES,
):
    """Smallest candidate c whose envelope dominates the pure dispersive run.

    Returns (c, T) with T half the g blow-up time for that c, and the
    reference trajectory used for the check.
    """
    r = sobolev_norm(u0, s0)
    cands = sorted(candidates)
    t_max = 0.5 * g_blowup_time(r, cands[0])
    n_steps = max(1, math.floor(t_max / cfg.dt))
    probe = replace(cfg, t_end=n_steps * cfg.dt)
    bo = solve(u0, probe, SymbolParams(alpha=beta, beta=beta))
    for c in cands:
        horizon = 0.5 * g_blowup_time(r, c)
        if _envelope_holds(bo, s0, r, c, horizon):
            return c, horizon, bo
    raise RuntimeError("no candidate growth constant dominates the reference run")


@dataclass(frozen=True)
class FamilyRun:
    beta: float
    alphas: tuple
    s0: float
    T: float
    c: float
    u0: SpectralField
    trajectories: dict
    envelope_ok: bool
    envelope_flags: dict


def run_family(
    u0: SpectralField,
    alphas,
    beta: float,
    s0: float,
    cfg: SolverConfig,
    c: float | None = None,
    tol: float = 0.05,
) -> FamilyRun:
    """Solve one trajectory per growth order on a common horizon.

    The pure dispersive member (alpha = beta) is always included; the
    horizon is half the envelope blow-up time for the calibrated c,
    rounded down to a step multiple.
    """
    alphas = sorted(set(float(a) for a in alphas) | {float(beta)})
    if any(a <= 0 or a > beta for a in alphas):
        raise ValueError("growth orders must lie in (0, beta]")
    r = sobolev_norm(u0, s0)
    if c is None:
        c, horizon, _ = calibrate_growth_constant(u0, beta, s0, cfg)
    else:
        horizon = 0.5 * g_blowup_time(r, c)
    n_steps = max(1, math.floor(horizon / cfg.dt))
    run_cfg = replace(cfg, t_end=n_steps * cfg.dt)
    trajectories = {}
    flags = {}
    for a in alphas:
        traj = solve(u0, run_cfg, SymbolParams(alpha=a, beta=beta))
        trajectories[a] = traj
        flags[a] = _envelope_holds(traj, s0, r, c, horizon, tol=tol)
    return FamilyRun(
        beta=float(beta), alphas=tuple(alphas), s0=float(s0), T=run_cfg.t_end,
        c=float(c), u0=u0, trajectories=trajectories,
        envelope_ok=all(flags.values()), envelope_flags=flags,
    )


def torus_dissipativity(w: SpectralField, alpha: float, beta: float, s: float) -> float:
    """Quadratic form sum (|k|^a - |k|^b) |<k>^s w_hat|^2; <= 0 on integer grids."""
    xi = w.grid.frequencies()
    axi = np.abs(xi)
    gap = axi**alpha - axi**beta
    gap[axi == 0.0] = 0.0
    weight = (1.0 + xi**2) ** s
    return float(w.grid.period * np.sum(gap * weight * np.abs(w.coeffs) ** 2))


def convergence_study(fam: FamilyRun, s: float) -> dict:
    """Difference norms against the theoretical drivers A and B.

    Requires s < s0 - max(beta/2, 1).  Returns a report with per-alpha
    D, A, B, the single fitted constant C = max D^2/(A+B), and the
    dissipativity form check over every stored difference field.
    """
    beta = fam.beta
    if s >= fam.s0 - max(0.5 * beta, 1.0):
        raise ValueError("need s < s0 - max(beta/2, 1)")
    ref = fam.trajectories[beta]
    D, A, B = [], [], []
    max_form = -math.inf
    integer_lattice = abs(ref.grid.period - 2.0 * math.pi) < 1e-12
    for a in fam.alphas:
        traj = fam.trajectories[a]
        if a == beta:
            D.append(0.0)
            A.append(0.0)
            B.append(0.0)
            continue
        diffs = []
        for coeffs, ref_coeffs in zip(traj.states, ref.states):
            w = SpectralField(traj.grid, coeffs - ref_coeffs)
            diffs.append(sobolev_norm(w, s))
            if integer_lattice:
                max_form = max(max_form, torus_dissipativity(w, a, beta, s))
        D.append(max(diffs))
        A.append(symbol_peak(SymbolParams(alpha=a, beta=beta)))
        xi = ref.grid.frequencies()
        axi = np.abs(xi)
        gap = axi ** (0.5 * a) - axi ** (0.5 * beta)
        weight = gap * (1.0 + xi**2) ** (0.5 * s)
        integrand = [
            math.sqrt(float(ref.grid.period * np.sum(np.abs(weight * coeffs) ** 2)))
            for coeffs in ref.states
        ]
        B.append(float(np.trapezoid(integrand, ref.times)))
    fitted = 0.0
    for d, a_val, b_val in zip(D, A, B):
        if a_val + b_val > 0:
            fitted = max(fitted, d * d / (a_val + b_val))
    return {
        "beta": beta,
        "alphas": list(fam.alphas),
        "s0": fam.s0,
        "s": s,
        "T": fam.T,
        "D": D,
        "A": A,
        "B": B,
        "fitted_C": fitted,
        "envelope_ok": fam.envelope_ok,
        "max_dissipativity_form": None if max_form == -math.inf else max_form,
    }
