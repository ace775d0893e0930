"""Scalar kernels against mpmath, geometry helpers against brute force,
and numba twins against the numpy reference implementations."""

import math

import mpmath
import numpy as np
import pytest

from fdbo import backend, kernels
from fdbo.blocks import BlockSpec, _cells, resonance

mpmath.mp.dps = 40


def mp_phi1(z):
    z = mpmath.mpc(z)
    if z == 0:
        return mpmath.mpf(1)
    return mpmath.expm1(z) / z


def mp_g2(x, y):
    x, y = mpmath.mpc(x), mpmath.mpc(y)
    return (mp_phi1(x + y) - mp_phi1(y)) / x


SAMPLE_Z = [
    1e-8 + 0j,
    -2e-5 + 1e-5j,
    0.3 - 0.7j,
    -4.0 + 2.0j,
    -80.0 + 15.0j,
    0.0 + 3.0j,
]


def test_phi1_against_mpmath():
    for z in SAMPLE_Z:
        got = complex(kernels.phi1(np.array([z]))[0])
        ref = complex(mp_phi1(z))
        assert abs(got - ref) <= 1e-13 * max(1.0, abs(ref))
    assert kernels.phi1(np.array([0.0 + 0.0j]))[0] == 1.0


def test_phi1_series_direct_crossover():
    # branch switch at |z| = cut must not jump: compare nearly equal radii
    cut = kernels.PHI1_CUT
    for angle in np.linspace(0.0, 2.0 * np.pi, 17):
        z = cut * np.exp(1j * angle)
        below = kernels.phi1(np.array([(1.0 - 1e-9) * z]))[0]
        above = kernels.phi1(np.array([(1.0 + 1e-9) * z]))[0]
        assert abs(below - above) <= 1e-12


def test_cexpm1_against_numpy_and_mpmath():
    xs = np.array([-3.0, -1e-9, 0.0, 1e-9, 2.5])
    got = kernels.cexpm1(xs.astype(complex))
    assert np.allclose(got.real, np.expm1(xs), rtol=1e-14, atol=1e-300)
    for z in SAMPLE_Z:
        got = complex(kernels.cexpm1(np.array([z]))[0])
        ref = complex(mpmath.expm1(mpmath.mpc(z)))
        assert abs(got - ref) <= 1e-13 * max(1.0, abs(ref))


def test_g2_against_mpmath():
    # includes the near-diagonal and double-small regimes the series handles
    pairs = [
        (1e-9 + 0j, 0.5 - 0.2j),
        (1e-4 + 1e-4j, -1e-4 + 2e-4j),
        (0.4 - 0.1j, 0.4 + 0.1j),
        (-3.0 + 1.0j, 2.0 - 5.0j),
        (-40.0 + 3.0j, -7.0 - 2.0j),
        (0.2 + 0.0j, -0.2 + 1e-7j),
    ]
    for x, y in pairs:
        got = complex(kernels.g2(np.array([x]), np.array([y]))[0])
        ref = complex(mp_g2(x, y))
        assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_sigma_resonance_identity():
    # Im sigma(xi, xi1) equals the resonance function of the zero-sum triple
    rng = np.random.default_rng(0)
    for _ in range(50):
        xi, xi1 = rng.uniform(-20, 20, 2)
        sig = kernels.sigma_np(xi, xi1, 0.7, 1.8)
        h = resonance(xi1, xi - xi1, -xi)
        assert abs(sig.imag - h) <= 1e-12 * max(1.0, abs(h))


def test_sigma_vanishes_on_diagonal():
    sig = kernels.sigma_np(np.array([5.0]), np.array([5.0]), 1.0, 2.0)
    assert abs(sig[0]) == 0.0


def test_t3_profile_against_convolution():
    # 1_{w1} * 1_{w2} * 1_{w3} via dense numerical convolution
    rng = np.random.default_rng(1)
    for _ in range(8):
        w = rng.uniform(0.3, 3.0, 3)
        half = float(np.sum(w)) / 2.0
        m = 4001
        x = np.linspace(-half * 1.2, half * 1.2, m)
        dx_ = x[1] - x[0]
        box = lambda width: ((np.abs(x) <= width / 2.0).astype(float))
        conv = np.convolve(np.convolve(box(w[0]), box(w[1]), "same") * dx_, box(w[2]), "same") * dx_
        got = kernels.t3_profile(x, *w)
        assert np.max(np.abs(got - conv)) <= 5e-3 * np.max(conv)
        assert np.isclose(np.trapezoid(got, x), np.prod(w), rtol=1e-4)
        # support: exact zero left of the support, roundoff dust right of it
        assert np.all(got[x < -half] == 0.0)
        assert np.max(got[x > half], initial=0.0) <= 1e-12 * np.max(conv)


def test_t3_antiderivative_consistency():
    rng = np.random.default_rng(2)
    for _ in range(8):
        w = rng.uniform(0.3, 3.0, 3)
        half = float(np.sum(w)) / 2.0
        x = np.linspace(-half, half, 1001)
        T4 = kernels.t3_antiderivative(x, *w)
        dT = np.gradient(T4, x)
        T3 = kernels.t3_profile(x, *w)
        assert np.max(np.abs(dT - T3)) <= 2e-2 * np.max(T3)
        # telescoped window masses sum to the full box product
        total = kernels.t3_antiderivative(np.array([half]), *w)[0]
        assert np.isclose(total, np.prod(w), rtol=1e-12)
        assert kernels.t3_antiderivative(np.array([-half]), *w)[0] == 0.0


def test_t3_scalar_vector_agree():
    rng = np.random.default_rng(3)
    w = rng.uniform(0.5, 2.0, 3)
    for x in np.linspace(-3.0, 3.0, 41):
        assert kernels._t3_val(x, *w) == kernels.t3_profile(np.array([x]), *w)[0]
        assert kernels._t4_val(x, *w) == kernels.t3_antiderivative(np.array([x]), *w)[0]


def test_h_window_bounds_match_dense_sampling():
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(200):
        if checked >= 20:
            break
        n1, n2 = rng.uniform(1.0, 8.0, 2)
        h1, h2 = 0.25 * n1, 0.25 * n2
        c1 = rng.choice([-1.0, 1.0]) * rng.uniform(n1 + h1 / 2, 2 * n1 - h1 / 2)
        c2 = rng.choice([-1.0, 1.0]) * rng.uniform(n2 + h2 / 2, 2 * n2 - h2 / 2)
        # the third-cell slab: narrow band around -c1-c2
        c3 = -(c1 + c2)
        h3w = 0.2 * max(abs(c3), 1.0)
        lo, hi = kernels._h_window(c1, h1, c2, h2, c3, h3w)
        if hi < lo:
            continue
        checked += 1
        xs = np.linspace(c1 - h1 / 2, c1 + h1 / 2, 301)
        ys = np.linspace(c2 - h2 / 2, c2 + h2 / 2, 301)
        X, Y = np.meshgrid(xs, ys)
        Z = -X - Y
        inside = np.abs(Z - c3) <= h3w / 2
        if not inside.any():
            continue
        hv = -(X * np.abs(X) + Y * np.abs(Y) + Z * np.abs(Z))[inside]
        assert hv.min() >= lo - 1e-9 * max(1.0, abs(lo))
        assert hv.max() <= hi + 1e-9 * max(1.0, abs(hi))
        spread = max(hi - lo, 1e-12)
        assert hv.min() - lo <= 0.08 * spread + 1e-9
        assert hi - hv.max() <= 0.08 * spread + 1e-9
    assert checked >= 10


def _block_geometry(b: BlockSpec, r: int):
    geom = [_cells(float(b.N[i]), float(b.L[i]), r) for i in range(3)]
    (xc1, lc1, _), (xc2, lc2, _), (xc3, lc3, _) = geom
    hx = [float(b.N[i]) / r for i in range(3)]
    hl = [float(b.L[i]) / r for i in range(3)]
    return (xc1, xc2, xc3), (lc1, lc2, lc3), hx, hl


def test_block_pass_value_against_monte_carlo():
    # end-to-end check of the paired-cell integration, h smearing included
    b = BlockSpec(N=(8, 8, 2), L=(64, 64, 4), H=32)
    r = 2
    xcs, lcs, hx, hl = _block_geometry(b, r)
    rng = np.random.default_rng(1)
    f1, f2, f3 = (rng.random((2 * r, 2 * r)) for _ in range(3))
    out = np.zeros_like(f1)
    val, count = kernels.block_pass(0, f1, f2, f3, *xcs, *lcs, *hx, *hl, float(b.H), r, out)
    assert count > 0

    mc = np.random.default_rng(9)
    n = 2_000_000
    N1, N2, N3 = (float(x) for x in b.N)
    H = float(b.H)

    def draw(N, size):
        mag = mc.uniform(N, 2.0 * N, size)
        return np.where(mc.integers(0, 2, size) == 1, mag, -mag)

    X1, X2 = draw(N1, n), draw(N2, n)
    X3 = -X1 - X2
    hh = -(X1 * np.abs(X1) + X2 * np.abs(X2) + X3 * np.abs(X3))
    chi = ((hh >= H) & (hh < 2 * H)) | ((hh > -2 * H) & (hh <= -H))
    pts = np.where(chi & (np.abs(X3) >= N3) & (np.abs(X3) < 2.0 * N3))[0]

    def cell(X, N, h):
        k = np.clip(np.floor((np.abs(X) - N) / h).astype(int), 0, r - 1)
        return np.where(X >= 0.0, k, r + k)

    i1 = cell(X1[pts], N1, hx[0])
    i2 = cell(X2[pts], N2, hx[1])
    i3 = cell(X3[pts], N3, hx[2])
    hv = hh[pts]
    acc = np.zeros(len(pts))
    lc1, lc2, lc3 = lcs
    for j1 in range(2 * r):
        for j2 in range(2 * r):
            fb = f1[i1, j1] * f2[i2, j2]
            for j3 in range(2 * r):
                prof = kernels.t3_profile(lc1[j1] + lc2[j2] + lc3[j3] + hv, *hl)
                acc += prof * fb * f3[i3, j3]
    full = np.zeros(n)
    full[pts] = acc
    ref = float(np.mean(full)) * (2.0 * N1) * (2.0 * N2)
    err = 3.0 * float(np.std(full)) / math.sqrt(n) * (2.0 * N1) * (2.0 * N2)
    assert abs(val - ref) <= 0.05 * ref + err


def test_block_pass_gradient_matches_value():
    # mode-m output paired with f_m must reproduce the mode-0 value
    b = BlockSpec(N=(4, 4, 4), L=(16, 16, 16), H=16)
    r = 3
    xcs, lcs, hx, hl = _block_geometry(b, r)
    rng = np.random.default_rng(5)
    f1, f2, f3 = (rng.random((2 * r, 2 * r)) for _ in range(3))
    args = (*xcs, *lcs, *hx, *hl, float(b.H), r)
    out = np.zeros_like(f1)
    val, _ = kernels.block_pass(0, f1, f2, f3, *args, out)
    for mode, fm in ((1, f1), (2, f2), (3, f3)):
        grad = np.zeros_like(f1)
        kernels.block_pass(mode, f1, f2, f3, *args, grad)
        assert np.isclose(float(np.sum(grad * fm)), val, rtol=1e-10)


@pytest.mark.skipif(not backend.USE_NUMBA, reason="numba backend disabled")
class TestNumbaParity:
    def test_grid_sums(self):
        n = 64
        rng = np.random.default_rng(6)
        xi = np.fft.fftfreq(n, d=1.0 / n) * 1.0
        idx = np.array([1, 2, 3, 5, n - 5, n - 3, n - 2, n - 1], dtype=np.int64)
        coeffs = np.zeros(n, dtype=complex)
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        coeffs[idx[:4]] = z
        coeffs[idx[4:]] = np.conj(z[::-1])
        for t in (1e-4, 0.05):
            a2 = kernels.u2_grid_sum(idx, coeffs, xi, t, 0.8, 1.7, n)
            e2 = kernels._u2_grid_np(idx, coeffs, xi, t, 0.8, 1.7, n)
            assert np.allclose(a2, e2, rtol=1e-12, atol=1e-15)
            a3 = kernels.u3_grid_sum(idx, coeffs, xi, t, 0.8, 1.7, n)
            e3 = kernels._u3_grid_np(idx, coeffs, xi, t, 0.8, 1.7, n)
            assert np.allclose(a3, e3, rtol=1e-11, atol=1e-15)

    def test_meshes(self):
        rng = np.random.default_rng(7)
        xi_out = 33.0
        xi1 = rng.uniform(16, 32, (40, 40))
        xi2 = rng.uniform(-32, -16, (40, 40))
        for fn, ref in ((kernels.u3_mesh, kernels._u3_mesh_np),
                        (kernels.u3_resonant_mesh, kernels._u3r_mesh_np)):
            got = fn(xi_out, xi1, xi2, 1e-3, 1.0, 1.5)  # dispatcher flattens
            exp = ref(xi_out, xi1.ravel(), xi2.ravel(), 1e-3, 1.0, 1.5)
            assert np.allclose(got, exp, rtol=1e-11, atol=1e-300)

    def test_block_pass(self):
        specs = [
            BlockSpec(N=(8, 8, 2), L=(64, 64, 4), H=32),
            BlockSpec(N=(4, 4, 4), L=(16, 16, 16), H=16),
            BlockSpec(N=(16, 2, 16), L=(128, 32, 512), H=64),
        ]
        for si, b in enumerate(specs):
            r = 4
            xcs, lcs, hx, hl = _block_geometry(b, r)
            rng = np.random.default_rng(si)
            f1, f2, f3 = (rng.random((2 * r, 2 * r)) for _ in range(3))
            args = (*xcs, *lcs, *hx, *hl, float(b.H), r)
            for mode in range(4):
                out_nb = np.zeros_like(f1)
                out_np = np.zeros_like(f1)
                v_nb, c_nb = kernels._block_pass_nb(mode, f1, f2, f3, *args, out_nb)
                v_np, c_np = kernels._block_pass_np(mode, f1, f2, f3, *args, out_np)
                assert c_nb == c_np
                scale = max(abs(v_np), float(np.max(np.abs(out_np))), 1e-30)
                assert abs(v_nb - v_np) <= 1e-11 * scale
                assert np.max(np.abs(out_nb - out_np)) <= 1e-11 * scale
