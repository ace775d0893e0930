"""Time steppers, energy balance, Picard iteration, snapshots."""

import numpy as np
import pytest

from conftest import make_datum
from fdbo.spectral import Grid, SpectralField, SymbolParams, l2_norm, sobolev_norm
from fdbo.semigroup import apply_semigroup
from fdbo.evolution import (
    InstabilityError,
    NonContractionError,
    SolverConfig,
    Trajectory,
    energy_balance,
    picard_iterate,
    read_snapshot,
    solve,
    spacetime_transform,
    stability_dt_bound,
    step,
    write_snapshot,
    xbs_norm,
    y_norm,
)
from fdbo.illposedness import u2_on_grid, u3_on_grid

P = SymbolParams(alpha=1.0, beta=2.0)


def test_linear_only_matches_semigroup(grid):
    u0 = make_datum(grid, band=20, seed=8)
    for scheme in ("ifrk4", "etdrk4"):
        cfg = SolverConfig(dt=1e-3, t_end=0.05, scheme=scheme, linear_only=True)
        traj = solve(u0, cfg, P)
        exact = apply_semigroup(u0, 0.05, P)
        err = l2_norm(SpectralField(grid, traj.states[-1] - exact.coeffs))
        assert err <= 1e-12 * l2_norm(u0)


def test_fourth_order_convergence(grid):
    u0 = make_datum(grid, band=10, seed=9, size=0.5)
    ref = solve(u0, SolverConfig(dt=2.5e-5, t_end=0.02, store_every=800), P)
    errs = []
    for dt in (8e-4, 4e-4, 2e-4):  # the next halving hits the 1e-13 floor
        traj = solve(u0, SolverConfig(dt=dt, t_end=0.02, store_every=int(round(0.02 / dt))), P)
        errs.append(l2_norm(SpectralField(grid, traj.states[-1] - ref.states[-1])))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 10.0 < r1 < 22.0
    assert 10.0 < r2 < 22.0


def test_schemes_agree(grid):
    u0 = make_datum(grid, band=10, seed=9, size=0.5)
    out = {}
    for scheme in ("ifrk4", "etdrk4"):
        cfg = SolverConfig(dt=5e-5, t_end=0.01, scheme=scheme, store_every=200)
        out[scheme] = solve(u0, cfg, P).states[-1]
    diff = l2_norm(SpectralField(grid, out["ifrk4"] - out["etdrk4"]))
    assert diff <= 1e-10 * l2_norm(u0)


def test_solve_validation(grid):
    u0 = make_datum(grid, band=5, seed=0)
    with pytest.raises(ValueError):
        solve(u0, SolverConfig(dt=3e-4, t_end=1e-3), P)  # not a step multiple
    with pytest.raises(ValueError):
        solve(u0, SolverConfig(dt=1e-3, t_end=1e-2, scheme="euler"), P)


def test_frame_layout(grid):
    u0 = make_datum(grid, band=5, seed=1)
    traj = solve(u0, SolverConfig(dt=1e-3, t_end=0.01, store_every=2), P)
    assert traj.n_frames == 6
    assert traj.times[0] == 0.0
    assert np.isclose(traj.times[-1], 0.01)
    assert np.allclose(traj.states[0], u0.coeffs)


def test_energy_balance_small(grid):
    # decaying spectrum keeps the centered-difference error of dE/dt tiny
    u0 = make_datum(grid, band=16, seed=10, size=0.1, decay=1.0)
    traj = solve(u0, SolverConfig(dt=1e-4, t_end=0.01, store_every=1), P)
    res = energy_balance(traj)
    assert len(res) == traj.n_frames - 2
    assert float(np.max(np.abs(res))) <= 1e-6


def test_energy_decays_without_growth(grid):
    # alpha = beta kills m; dealiased transport preserves L2 exactly
    u0 = make_datum(grid, band=12, seed=10, size=0.5)
    traj = solve(u0, SolverConfig(dt=1e-4, t_end=0.01, store_every=10),
                 SymbolParams(alpha=2.0, beta=2.0))
    norms = [np.sqrt(traj.grid.period * np.sum(np.abs(c) ** 2)) for c in traj.states]
    assert np.allclose(norms, norms[0], rtol=1e-10)


def test_stability_bound_and_blowup():
    g = Grid(128, 2.0 * np.pi)
    p = SymbolParams(alpha=1.0, beta=1.0)
    u0 = make_datum(g, band=10, seed=3, size=8.0)
    bound = stability_dt_bound(g, p, float(np.max(np.abs(u0.to_physical()))))
    assert 0.0 < bound < 0.1
    assert stability_dt_bound(g, p, 0.0) == np.inf
    dt = 50.0 * bound
    cfg = SolverConfig(dt=dt, t_end=40 * dt)
    with np.errstate(all="ignore"):
        with pytest.raises(InstabilityError):
            solve(u0, cfg, p)


def test_step_matches_solve(grid):
    u0 = make_datum(grid, band=8, seed=2, size=0.2)
    cfg = SolverConfig(dt=1e-3, t_end=1e-3)
    one = step(u0, 1e-3, cfg, P)
    traj = solve(u0, cfg, P)
    assert np.allclose(one.coeffs, traj.states[-1], atol=1e-15)


def test_picard_converges_to_solver(grid):
    u0 = make_datum(grid, band=8, seed=11, size=0.2)
    T = 0.1
    res = picard_iterate(u0, T, 10, P, n_panels=16, s=2.0)
    assert res.converged
    assert res.ratios[-1] < 1.0
    traj = solve(u0, SolverConfig(dt=1e-4, t_end=T, store_every=1000), P)
    final = SpectralField(grid, res.iterates[-1][-1])
    err = sobolev_norm(SpectralField(grid, final.coeffs - traj.states[-1]), 2.0)
    assert err <= 1e-6


def test_picard_taylor_expansion(grid):
    # solver state = eps u1 + eps^2 u2 + eps^3 u3 + O(eps^4)
    u0 = make_datum(grid, band=8, seed=11, size=1.0)
    T = 0.05
    p = SymbolParams(alpha=0.75, beta=1.5)
    u1 = apply_semigroup(u0, T, p)
    u2 = u2_on_grid(u0, T, p)
    u3 = u3_on_grid(u0, T, p)
    cfg = SolverConfig(dt=2e-4, t_end=T, store_every=250)
    rem = []
    for eps in (2e-2, 1e-2, 5e-3):
        traj = solve(SpectralField(grid, eps * u0.coeffs), cfg, p)
        model = eps * u1.coeffs + eps**2 * u2.coeffs + eps**3 * u3.coeffs
        rem.append(l2_norm(SpectralField(grid, traj.states[-1] - model)))
    assert 12.0 < rem[0] / rem[1] < 20.0
    assert 12.0 < rem[1] / rem[2] < 20.0


def test_picard_non_contraction(grid):
    u0 = make_datum(grid, band=12, seed=3, size=6.0)
    p = SymbolParams(alpha=1.0, beta=1.0)
    with pytest.raises(NonContractionError):
        picard_iterate(u0, 1.2, 8, p, n_panels=12, nodes_per_panel=4, s=1.0)


def test_picard_validation(grid):
    u0 = make_datum(grid, band=5, seed=0)
    with pytest.raises(ValueError):
        picard_iterate(u0, 0.0, 3, P)


def test_y_norm_closed_form():
    # dispersive-only single mode: both norms are time-independent
    g = Grid(64, 2.0 * np.pi)
    u0 = SpectralField.from_physical(g, np.cos(3.0 * g.nodes()))
    p = SymbolParams(alpha=2.0, beta=2.0)
    traj = solve(u0, SolverConfig(dt=1e-3, t_end=0.5, store_every=50, linear_only=True), p)
    s = -1.0
    got = y_norm(traj, s, 0.5, p.beta)
    root_pi = np.sqrt(np.pi)
    expect = root_pi * 10.0 ** (s / 2.0) + 0.5 ** (abs(s) / p.beta) * root_pi
    assert np.isclose(got, expect, rtol=1e-10)


def test_xbs_norm_single_cell():
    p = SymbolParams(alpha=1.0, beta=2.0)
    u_hat = np.array([[2.0 + 0.0j]])
    xi = np.array([3.0])
    tau = np.array([-9.0])  # tau + xi|xi| = 0, so mod = |m(3)| = 6
    got = xbs_norm(u_hat, xi, tau, b=0.5, s=1.0, p=p)
    expect = np.sqrt(4.0 * np.sqrt(37.0) * 10.0)
    assert np.isclose(got, expect, rtol=1e-12)
    with pytest.raises(ValueError):
        xbs_norm(u_hat, np.array([1.0, 2.0]), tau, 0.5, 1.0, p)


def test_spacetime_transform_layout(grid):
    u0 = make_datum(grid, band=6, seed=4, size=0.3)
    traj = solve(u0, SolverConfig(dt=1e-3, t_end=0.064, store_every=1), P)
    u_hat, xi, tau = spacetime_transform(traj, pad=2)
    assert u_hat.shape == (len(xi), len(tau))
    assert np.all(np.diff(tau) > 0.0)
    assert len(tau) == 2 * traj.n_frames


def test_snapshot_roundtrip(tmp_path, grid):
    u0 = make_datum(grid, band=9, seed=5, size=0.4)
    traj = solve(u0, SolverConfig(dt=1e-3, t_end=0.01, store_every=5), P)
    path = tmp_path / "traj.snap"
    write_snapshot(path, traj)
    back = read_snapshot(path)
    assert back.grid.n_modes == traj.grid.n_modes
    assert np.isclose(back.grid.period, traj.grid.period)
    assert back.params == traj.params
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.states, traj.states)  # bitwise
    # second write is byte-identical
    path2 = tmp_path / "traj2.snap"
    write_snapshot(path2, traj)
    assert path.read_bytes() == path2.read_bytes()


def test_snapshot_rejects_foreign_file(tmp_path):
    bad = tmp_path / "bad.snap"
    bad.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError):
        read_snapshot(bad)
