"""Riccati envelope, growth-order family runs, and the limit study."""

import math

import numpy as np
import pytest

from conftest import make_datum
from fdbo.spectral import Grid, SpectralField, SymbolParams, sobolev_norm
from fdbo.evolution import SolverConfig
from fdbo.continuity import (
    calibrate_growth_constant,
    convergence_study,
    g_blowup_time,
    run_family,
    torus_dissipativity,
    uniform_bound_g,
)


def test_envelope_algebra():
    assert np.isclose(g_blowup_time(1.0, 1.0), 2.0 * math.log(2.0))
    assert np.isclose(uniform_bound_g(0.0, 0.7, 2.0), 0.7)
    ts = np.linspace(0.0, 0.9 * g_blowup_time(0.7, 2.0), 20)
    vals = [uniform_bound_g(float(t), 0.7, 2.0) for t in ts]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_envelope_domain_errors():
    with pytest.raises(ValueError):
        uniform_bound_g(-0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        uniform_bound_g(g_blowup_time(1.0, 1.0), 1.0, 1.0)
    with pytest.raises(ValueError):
        g_blowup_time(0.0, 1.0)


def test_torus_dissipativity_nonpositive():
    # integer frequencies: |k|^a <= |k|^b for every k when a <= b
    g = Grid(64, 2.0 * np.pi)
    for seed in range(4):
        w = make_datum(g, band=20, seed=seed)
        for a, b in ((0.5, 1.0), (1.0, 2.0), (1.9, 2.0)):
            assert torus_dissipativity(w, a, b, 0.75) <= 0.0


def test_torus_dissipativity_vanishes_below_mode_two():
    g = Grid(64, 2.0 * np.pi)
    w = make_datum(g, band=1, seed=0)
    assert torus_dissipativity(w, 0.5, 2.0, 1.0) == 0.0


def _family(seed=0, dt=4e-3, alphas=(1.5,), beta=2.0):
    g = Grid(64, 2.0 * np.pi)
    u0 = make_datum(g, band=8, seed=seed, size=0.5)
    cfg = SolverConfig(dt=dt, t_end=1.0, store_every=8)
    return run_family(u0, alphas, beta, s0=2.0, cfg=cfg)


def test_calibration_picks_dominating_constant():
    g = Grid(64, 2.0 * np.pi)
    u0 = make_datum(g, band=8, seed=0, size=0.5)
    cfg = SolverConfig(dt=4e-3, t_end=1.0, store_every=8)
    c, horizon, _ = calibrate_growth_constant(u0, 2.0, 2.0, cfg)
    assert c > 0.0
    r = sobolev_norm(u0, 2.0)
    assert np.isclose(horizon, 0.5 * g_blowup_time(r, c))


def test_family_run_envelope():
    fam = _family()
    assert fam.beta in fam.alphas  # dispersive member always present
    assert set(fam.trajectories) == set(fam.alphas)
    assert fam.envelope_ok
    assert fam.T > 0.0


def test_family_domain_errors():
    g = Grid(64, 2.0 * np.pi)
    u0 = make_datum(g, band=8, seed=0, size=0.5)
    cfg = SolverConfig(dt=4e-3, t_end=1.0)
    with pytest.raises(ValueError):
        run_family(u0, [2.5], 2.0, s0=2.0, cfg=cfg)  # alpha > beta


def test_convergence_study_structure():
    fam = _family(alphas=(1.0, 1.5))
    rep = convergence_study(fam, s=0.75)
    assert rep["alphas"] == sorted(rep["alphas"])
    k = rep["alphas"].index(2.0)
    assert rep["D"][k] == 0.0 and rep["A"][k] == 0.0 and rep["B"][k] == 0.0
    others = [d for i, d in enumerate(rep["D"]) if i != k]
    assert all(d > 0.0 for d in others)
    # closer growth order, smaller difference
    assert rep["D"][rep["alphas"].index(1.5)] < rep["D"][rep["alphas"].index(1.0)]
    assert rep["fitted_C"] > 0.0
    assert rep["max_dissipativity_form"] is not None
    assert rep["max_dissipativity_form"] <= 1e-12
    assert rep["envelope_ok"]


def test_convergence_study_regularity_guard():
    fam = _family()
    with pytest.raises(ValueError):
        convergence_study(fam, s=1.5)  # needs s < s0 - max(beta/2, 1)


def test_fitted_constant_stable_under_dt_halving():
    c1 = convergence_study(_family(dt=4e-3), s=0.75)["fitted_C"]
    c2 = convergence_study(_family(dt=2e-3), s=0.75)["fitted_C"]
    assert abs(c1 - c2) <= 0.05 * max(c1, c2)
