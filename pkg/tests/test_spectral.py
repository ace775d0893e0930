"""Grid layout, field invariants, norms, and the dealiased nonlinearity."""

import numpy as np
import pytest

from conftest import make_datum
from fdbo.spectral import (
    Grid,
    SpectralField,
    SymbolParams,
    dx,
    full_symbol,
    growth_dissipation_symbol,
    homogeneous_norm,
    l2_norm,
    nonlinearity,
    sobolev_norm,
    symbol_argmax,
    symbol_peak,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(7, 2.0 * np.pi)
    with pytest.raises(ValueError):
        Grid(129, 2.0 * np.pi)
    with pytest.raises(ValueError):
        Grid(128, 0.0)


def test_grid_layout():
    g = Grid(16, 4.0 * np.pi)
    xi = g.frequencies()
    assert xi[0] == 0.0
    assert np.isclose(xi[1], g.dxi)
    assert np.isclose(g.dxi, 2.0 * np.pi / g.period)
    assert g.nyquist_index() == 8
    assert xi[g.nyquist_index() + 1] < 0.0
    assert np.isclose(g.dx * g.n_modes, g.period)


def test_dealias_keep_is_maximal():
    # largest K with 3K < n: products of kept modes cannot alias back
    for n in (8, 64, 128, 256, 1024):
        g = Grid(n, 1.0)
        k = g.dealias_keep()
        assert 3 * k < n
        assert 3 * (k + 1) >= n


def test_symbol_params_validation():
    with pytest.raises(ValueError):
        SymbolParams(alpha=0.0, beta=1.0)
    with pytest.raises(ValueError):
        SymbolParams(alpha=2.0, beta=1.0)
    assert SymbolParams(alpha=1.5, beta=1.5).is_dispersive_only


def test_parseval(grid):
    u = make_datum(grid, band=20, seed=0, size=2.0)
    phys = u.to_physical()
    direct = np.sqrt(grid.dx * np.sum(phys**2))
    assert np.isclose(l2_norm(u), direct, rtol=1e-12)
    assert np.isclose(l2_norm(u), 2.0, rtol=1e-12)


def test_single_mode_norms():
    g = Grid(64, 2.0 * np.pi)
    u = SpectralField.from_physical(g, np.cos(3.0 * g.nodes()))
    root_pi = np.sqrt(np.pi)
    assert np.isclose(l2_norm(u), root_pi, rtol=1e-12)
    assert np.isclose(sobolev_norm(u, 1.0), root_pi * np.sqrt(10.0), rtol=1e-12)
    assert np.isclose(sobolev_norm(u, 0.0), l2_norm(u), rtol=1e-12)
    assert np.isclose(homogeneous_norm(u, 2.0), root_pi * 9.0, rtol=1e-12)


def test_hermitian_guard(grid):
    u = make_datum(grid, band=5, seed=1)
    assert u.hermitian_defect() <= 1e-14
    bad = u.coeffs.copy()
    bad[3] += 0.5  # breaks conj symmetry
    with pytest.raises(ValueError):
        SpectralField.from_coefficients(grid, bad)


def test_roundtrip_physical(grid):
    u = make_datum(grid, band=12, seed=2)
    v = SpectralField.from_physical(grid, u.to_physical())
    assert np.allclose(v.coeffs, u.coeffs, atol=1e-14)


def test_embedding_preserves_norms(grid):
    u = make_datum(grid, band=12, seed=3)
    v = u.embedded(512)
    assert v.grid.n_modes == 512
    assert np.isclose(l2_norm(v), l2_norm(u), rtol=1e-13)
    assert np.isclose(sobolev_norm(v, 1.5), sobolev_norm(u, 1.5), rtol=1e-13)
    # refinement nodes contain the coarse ones every 4th point
    assert np.allclose(v.to_physical()[::4], u.to_physical(), atol=1e-12)
    with pytest.raises(ValueError):
        u.embedded(64)


def test_dx_single_mode():
    g = Grid(64, 2.0 * np.pi)
    u = SpectralField.from_physical(g, np.sin(g.nodes()))
    du = dx(u)
    assert np.allclose(du.to_physical(), np.cos(g.nodes()), atol=1e-13)


def test_dx_kills_nyquist():
    g = Grid(16, 2.0 * np.pi)
    c = np.zeros(16, dtype=complex)
    c[8] = 1.0  # real Nyquist mode
    u = SpectralField(g, c)
    assert l2_norm(dx(u)) == 0.0


def test_nonlinearity_analytic():
    # u = sin x: u u_x = sin(2x)/2, coefficients -i/4 and i/4
    g = Grid(128, 2.0 * np.pi)
    u = SpectralField.from_physical(g, np.sin(g.nodes()))
    for dealias in (True, False):
        w = nonlinearity(u, dealias=dealias)
        expect = np.zeros(g.n_modes, dtype=complex)
        expect[2] = -0.25j
        expect[-2] = 0.25j
        assert np.allclose(w.coeffs, expect, atol=1e-14)


def test_nonlinearity_energy_neutral(grid):
    # dealiased advection form: Re<u, u u_x> vanishes to roundoff
    for seed in range(3):
        u = make_datum(grid, band=grid.dealias_keep(), seed=seed, size=1.5)
        w = nonlinearity(u, dealias=True)
        inner = grid.period * np.sum(np.conj(u.coeffs) * w.coeffs)
        assert abs(inner.real) <= 1e-12 * l2_norm(u) ** 3
        assert w.coeffs[0] == 0.0


def test_full_symbol_values():
    p = SymbolParams(alpha=0.5, beta=2.0)
    xi = np.array([-2.0, 0.0, 3.0])
    lam = full_symbol(xi, p)
    expect_re = np.abs(xi) ** 0.5 - np.abs(xi) ** 2
    expect_re[1] = 0.0
    expect_im = -xi * np.abs(xi)
    assert np.allclose(lam.real, expect_re, atol=1e-14)
    assert np.allclose(lam.imag, expect_im, atol=1e-14)


def test_symbol_peak_matches_brute_force():
    for a, b in [(0.5, 1.5), (1.9, 2.0), (1.0, 3.0)]:
        p = SymbolParams(alpha=a, beta=b)
        xs = np.concatenate(([0.0], np.logspace(-4, 4, 400001)))
        brute = float(np.max(growth_dissipation_symbol(xs, p)))
        peak = symbol_peak(p)
        assert peak >= brute - 1e-12
        assert peak <= brute + 1e-6 * max(1.0, brute)
        x_star = symbol_argmax(p)
        assert np.isclose(growth_dissipation_symbol(np.array([x_star]), p)[0], peak, rtol=1e-12)


def test_symbol_peak_dispersive_only():
    p = SymbolParams(alpha=1.5, beta=1.5)
    assert symbol_peak(p) == 0.0
    assert np.all(growth_dissipation_symbol(np.linspace(0, 9, 50), p) == 0.0)
