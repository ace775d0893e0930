"""Hot numeric kernels, in matching numba and pure-numpy flavors.

Everything here is elementary but called inside tight loops:

* ``phi1(z) = (exp(z) - 1)/z`` and the divided difference
  ``g2(x, y) = (phi1(x + y) - phi1(y))/x`` (values of the analytic
  functions, removable singularities filled by series);
* closed-form convolution sums for the second and third flow-map
  derivatives on a periodic grid;
* the trilinear contraction passes of the dyadic-block power iteration.

The numpy implementations define the semantics; the numba ones must
agree to roundoff (see ``tests/test_kernels.py``).  Dispatch between the
two is decided once at import time by :mod:`fdbo.backend`.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend
from .backend import njit

# Series cutoffs.  phi1 follows the documented contract (series below
# 1e-4); the others are chosen so series and direct branches overlap
# with ~1e-11 relative agreement.
PHI1_CUT = 1e-4
G2_CUT = 1e-3
G1D_CUT = 0.5
_G1D_TERMS = 18


# ----------------------------------------------------------------------
# numpy reference implementations
# ----------------------------------------------------------------------

def cexpm1(z: np.ndarray) -> np.ndarray:
    """``exp(z) - 1`` for complex arrays without cancellation near 0."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    re = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    im = np.exp(x) * np.sin(y)
    return re + 1j * im


def phi1(z: np.ndarray) -> np.ndarray:
    """``(exp(z) - 1)/z``, extended by 1 at ``z = 0``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < PHI1_CUT
    zs = z[small]
    out[small] = 1.0 + zs * (0.5 + zs * (1.0 / 6.0 + zs / 24.0))
    zb = z[~small]
    out[~small] = cexpm1(zb) / zb
    return out


def _g1d(k: int, w: np.ndarray) -> np.ndarray:
    """k-th derivative of ``phi1`` (as analytic function of its argument)."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) <= G1D_CUT
    ws = w[small]
    acc = np.zeros_like(ws)
    # sum_m w^m / (m! (m + k + 1)), truncated far below double precision
    term = np.ones_like(ws)
    for m in range(_G1D_TERMS):
        acc = acc + term / (m + k + 1)
        term = term * ws / (m + 1)
    out[small] = acc
    wb = w[~small]
    if wb.size:
        # closed form (exp(w) p_k(w) + (-1)^(k+1) k!) / w^(k+1)
        # with p_k(w) = sum_i (-1)^(k-i) (k!/i!) w^i, built by Horner
        kfac = math.factorial(k)
        p = np.ones_like(wb)
        for i in range(k - 1, -1, -1):
            coeff = ((-1.0) ** (k - i)) * kfac / math.factorial(i)
            p = p * wb + coeff
        out[~small] = (np.exp(wb) * p + ((-1.0) ** (k + 1)) * kfac) / wb ** (k + 1)
    return out


def g2(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Divided difference ``(phi1(x + y) - phi1(y))/x``.

    Entire in both arguments; the ``x -> 0`` limit is ``phi1'(y)``.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
    out = np.empty_like(x)
    small = np.abs(x) < G2_CUT
    xs, ys = x[small], y[small]
    if xs.size:
        acc = _g1d(4, ys) / 24.0
        acc = _g1d(3, ys) / 6.0 + xs * acc
        acc = _g1d(2, ys) / 2.0 + xs * acc
        acc = _g1d(1, ys) + xs * acc
        out[small] = acc
    xb, yb = x[~small], y[~small]
    if xb.size:
        out[~small] = (phi1(xb + yb) - phi1(yb)) / xb
    return out


def sigma_np(xi, xi1, alpha: float, beta: float) -> np.ndarray:
    """Phase/damping mismatch ``lam(xi - xi1) + lam(xi1) - lam(xi)``."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    rem = xi - xi1
    a_xi, a_x1, a_rm = np.abs(xi), np.abs(xi1), np.abs(rem)
    if alpha == beta:
        re = np.zeros(np.broadcast(xi, xi1).shape)
    else:
        re = (
            a_rm**alpha - a_rm**beta
            + a_x1**alpha - a_x1**beta
            - a_xi**alpha + a_xi**beta
        )
    im = xi * a_xi - rem * a_rm - xi1 * a_x1
    return re + 1j * im


def _u2_grid_np(idx, coeffs, xi, t, alpha, beta, n):
    j1 = np.repeat(idx, len(idx))
    j2 = np.tile(idx, len(idx))
    xs = xi[j1] + xi[j2]
    sig = sigma_np(xs, xi[j2], alpha, beta)
    contrib = coeffs[j1] * coeffs[j2] * (t * phi1(sig * t))
    k = (j1 + j2) % n
    out = np.bincount(k, weights=contrib.real, minlength=n).astype(complex)
    out += 1j * np.bincount(k, weights=contrib.imag, minlength=n)
    return out


def _u3_grid_np(idx, coeffs, xi, t, alpha, beta, n):
    m = len(idx)
    j1 = np.repeat(idx, m)
    j2 = np.tile(idx, m)
    xi2 = xi[j1] + xi[j2]
    a = sigma_np(xi2, xi[j1], alpha, beta) * t
    pair = coeffs[j1] * coeffs[j2] * xi2 * t * t
    out = np.zeros(n, dtype=complex)
    for j3 in idx:
        full = xi2 + xi[j3]
        b = sigma_np(full, xi2, alpha, beta) * t
        contrib = pair * coeffs[j3] * g2(a, b)
        k = (j1 + j2 + j3) % n
        out += np.bincount(k, weights=contrib.real, minlength=n)
        out += 1j * np.bincount(k, weights=contrib.imag, minlength=n)
    return out


def _u3_mesh_np(xi_out, xi1, xi2, t, alpha, beta):
    """Integrand mesh ``xi2 * t^2 * g2(sigma(xi2, xi1) t, sigma(xi, xi2) t)``."""
    a = sigma_np(xi2, xi1, alpha, beta) * t
    b = sigma_np(xi_out, xi2, alpha, beta) * t
    return xi2 * t * t * g2(a, b)


def _u3r_mesh_np(xi_out, xi1, xi2, t, alpha, beta):
    """Resonant part of the cubic integrand: ``xi2 * t^2 * phi1(a + b) / a``.

    Keeps the slowly oscillating term of ``g2`` and drops the free-wave
    remainder.  Singular where sigma(xi2, xi1) vanishes, so callers must
    restrict to interaction sets on which that symbol stays away from zero.
    """
    a = sigma_np(xi2, xi1, alpha, beta) * t
    b = sigma_np(xi_out, xi2, alpha, beta) * t
    return xi2 * t * t * phi1(a + b) / a


# ----------------------------------------------------------------------
# numba twin implementations
# ----------------------------------------------------------------------

if backend.USE_NUMBA:

    @njit
    def _cexpm1_s(x: float, y: float) -> complex:
        sy = math.sin(0.5 * y)
        return complex(
            math.expm1(x) * math.cos(y) - 2.0 * sy * sy,
            math.exp(x) * math.sin(y),
        )

    @njit
    def _phi1_s(z: complex) -> complex:
        if abs(z) < PHI1_CUT:
            return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
        return _cexpm1_s(z.real, z.imag) / z

    @njit
    def _g1d_s(k: int, w: complex) -> complex:
        if abs(w) <= G1D_CUT:
            acc = 0.0 + 0.0j
            term = 1.0 + 0.0j
            for m in range(_G1D_TERMS):
                acc += term / (m + k + 1)
                term = term * w / (m + 1)
            return acc
        kfac = 1.0
        for q in range(2, k + 1):
            kfac *= q
        # p_k(w) by Horner; coefficient of w^i is (-1)^(k-i) k!/i!
        p = complex(1.0, 0.0)
        for i in range(k - 1, -1, -1):
            fi = 1.0
            for q in range(2, i + 1):
                fi *= q
            coeff = ((-1.0) ** (k - i)) * kfac / fi
            p = p * w + coeff
        ez = _cexpm1_s(w.real, w.imag) + 1.0
        return (ez * p + ((-1.0) ** (k + 1)) * kfac) / w ** (k + 1)

    @njit
    def _g2_s(x: complex, y: complex) -> complex:
        if abs(x) < G2_CUT:
            acc = _g1d_s(4, y) / 24.0
            acc = _g1d_s(3, y) / 6.0 + x * acc
            acc = _g1d_s(2, y) / 2.0 + x * acc
            return _g1d_s(1, y) + x * acc
        return (_phi1_s(x + y) - _phi1_s(y)) / x

    @njit
    def _sigma_s(xi: float, xi1: float, alpha: float, beta: float) -> complex:
        rem = xi - xi1
        a_xi, a_x1, a_rm = abs(xi), abs(xi1), abs(rem)
        if alpha == beta:
            re = 0.0
        else:
            re = (
                a_rm**alpha - a_rm**beta
                + a_x1**alpha - a_x1**beta
                - a_xi**alpha + a_xi**beta
            )
        im = xi * a_xi - rem * a_rm - xi1 * a_x1
        return complex(re, im)

    @njit
    def _u2_grid_nb(idx, coeffs, xi, t, alpha, beta, n):
        out = np.zeros(n, dtype=np.complex128)
        for p1 in range(len(idx)):
            j1 = idx[p1]
            for p2 in range(len(idx)):
                j2 = idx[p2]
                xs = xi[j1] + xi[j2]
                sig = _sigma_s(xs, xi[j2], alpha, beta)
                k = (j1 + j2) % n
                out[k] += coeffs[j1] * coeffs[j2] * (t * _phi1_s(sig * t))
        return out

    @njit
    def _u3_grid_nb(idx, coeffs, xi, t, alpha, beta, n):
        out = np.zeros(n, dtype=np.complex128)
        for p1 in range(len(idx)):
            j1 = idx[p1]
            for p2 in range(len(idx)):
                j2 = idx[p2]
                xi2 = xi[j1] + xi[j2]
                a = _sigma_s(xi2, xi[j1], alpha, beta) * t
                pair = coeffs[j1] * coeffs[j2] * xi2 * t * t
                for p3 in range(len(idx)):
                    j3 = idx[p3]
                    b = _sigma_s(xi2 + xi[j3], xi2, alpha, beta) * t
                    k = (j1 + j2 + j3) % n
                    out[k] += pair * coeffs[j3] * _g2_s(a, b)
        return out

    @njit
    def _u3_mesh_nb(xi_out, xi1, xi2, t, alpha, beta):
        out = np.empty(len(xi1), dtype=np.complex128)
        for i in range(len(xi1)):
            a = _sigma_s(xi2[i], xi1[i], alpha, beta) * t
            b = _sigma_s(xi_out, xi2[i], alpha, beta) * t
            out[i] = xi2[i] * t * t * _g2_s(a, b)
        return out

    @njit
    def _u3r_mesh_nb(xi_out, xi1, xi2, t, alpha, beta):
        out = np.empty(len(xi1), dtype=np.complex128)
        for i in range(len(xi1)):
            a = _sigma_s(xi2[i], xi1[i], alpha, beta) * t
            b = _sigma_s(xi_out, xi2[i], alpha, beta) * t
            out[i] = xi2[i] * t * t * _phi1_s(a + b) / a
        return out


# ----------------------------------------------------------------------
# dyadic-block contraction passes
# ----------------------------------------------------------------------

def _pp2(t: float) -> float:
    return t * t if t > 0.0 else 0.0


def _pp3(t: float) -> float:
    return t * t * t if t > 0.0 else 0.0


def _t3_val(x: float, w1: float, w2: float, w3: float) -> float:
    y = x + 0.5 * (w1 + w2 + w3)
    v = (
        _pp2(y) - _pp2(y - w1) - _pp2(y - w2) - _pp2(y - w3)
        + _pp2(y - w1 - w2) + _pp2(y - w1 - w3) + _pp2(y - w2 - w3)
        - _pp2(y - w1 - w2 - w3)
    )
    return 0.5 * v if v > 0.0 else 0.0


def _t4_val(x: float, w1: float, w2: float, w3: float) -> float:
    y = x + 0.5 * (w1 + w2 + w3)
    v = (
        _pp3(y) - _pp3(y - w1) - _pp3(y - w2) - _pp3(y - w3)
        + _pp3(y - w1 - w2) + _pp3(y - w1 - w3) + _pp3(y - w2 - w3)
        - _pp3(y - w1 - w2 - w3)
    )
    return v / 6.0 if v > 0.0 else 0.0


def t3_profile(x, w1, w2, w3):
    """Convolution of three centred box indicators of widths ``w1..w3``.

    ``t3_profile(s)`` is the exact area of the set of ``(u, v)`` with ``u``
    in box 1, ``v`` in box 2 and ``s - u - v`` in box 3; equivalently the
    measure of zero-sum triples across three cells whose centres sum to
    ``s``.  Support ``|s| < (w1+w2+w3)/2``, total mass ``w1*w2*w3``.
    """
    y = np.asarray(x, dtype=float) + 0.5 * (w1 + w2 + w3)
    q = lambda t: np.square(np.maximum(t, 0.0))
    v = (
        q(y) - q(y - w1) - q(y - w2) - q(y - w3)
        + q(y - w1 - w2) + q(y - w1 - w3) + q(y - w2 - w3)
        - q(y - w1 - w2 - w3)
    )
    return 0.5 * np.maximum(v, 0.0)


def t3_antiderivative(x, w1, w2, w3):
    """Antiderivative of :func:`t3_profile`, vanishing at ``-inf``."""
    y = np.asarray(x, dtype=float) + 0.5 * (w1 + w2 + w3)

    def c(t):
        t = np.maximum(t, 0.0)
        return t * t * t
    v = (
        c(y) - c(y - w1) - c(y - w2) - c(y - w3)
        + c(y - w1 - w2) + c(y - w1 - w3) + c(y - w2 - w3)
        - c(y - w1 - w2 - w3)
    )
    return np.maximum(v, 0.0) / 6.0


def _h3(x: float, y: float) -> float:
    z = -x - y
    return -(x * abs(x) + y * abs(y) + z * abs(z))


def _h_window(x1c, hx1, x2c, hx2, x3c, hx3):
    """Exact range of the resonance function over one frequency cell triple.

    The zero-sum set ``{(xi1, xi2) in c1 x c2 : -xi1 - xi2 in c3}`` is a
    convex polygon on which all three frequencies keep a fixed sign, so
    ``h`` has no interior critical points there: its extremes sit at
    polygon vertices or at one critical point per edge (``xi_j = -xi_k/2``
    on cell edges, equal split on zero-sum-slab edges).
    """
    x1lo, x1hi = x1c - 0.5 * hx1, x1c + 0.5 * hx1
    x2lo, x2hi = x2c - 0.5 * hx2, x2c + 0.5 * hx2
    ulo, uhi = -x3c - 0.5 * hx3, -x3c + 0.5 * hx3
    hmin = math.inf
    hmax = -math.inf
    for x in (x1lo, x1hi):
        for y in (x2lo, x2hi):
            if ulo <= x + y <= uhi:
                v = _h3(x, y)
                hmin = v if v < hmin else hmin
                hmax = v if v > hmax else hmax
    for u in (ulo, uhi):
        xa = max(x1lo, u - x2hi)
        xb = min(x1hi, u - x2lo)
        if xa <= xb:
            for x in (xa, xb, 0.5 * u):
                if xa <= x <= xb:
                    v = _h3(x, u - x)
                    hmin = v if v < hmin else hmin
                    hmax = v if v > hmax else hmax
    for x in (x1lo, x1hi):
        y = -0.5 * x
        if x2lo <= y <= x2hi and ulo <= x + y <= uhi:
            v = _h3(x, y)
            hmin = v if v < hmin else hmin
            hmax = v if v > hmax else hmax
    for y in (x2lo, x2hi):
        x = -0.5 * y
        if x1lo <= x <= x1hi and ulo <= x + y <= uhi:
            v = _h3(x, y)
            hmin = v if v < hmin else hmin
            hmax = v if v > hmax else hmax
    if hmin > hmax:  # tangency sliver below float resolution
        return 0.0, -1.0
    return hmin, hmax


def _block_pass_np(mode, f1, f2, f3, xc1, xc2, xc3, lc1, lc2, lc3,
                   hx1, hx2, hx3, hl1, hl2, hl3, H, r, out):
    """One contraction pass of the block trilinear form.

    Piecewise-constant factors are paired exactly: the zero-sum measure of
    every frequency and modulation cell triple is a triple-box profile.
    The resonance function is replaced by a uniform surrogate on its exact
    per-cell-triple range, so the modulation shift integrates in closed
    form.  mode 0 returns ``(form value, active triple count)``; modes
    1..3 accumulate the raw gradient in that factor into ``out``.
    """
    two_r = 2 * r
    Wx = 0.5 * (hx1 + hx2 + hx3)
    n3lo = abs(float(xc3[0])) - 0.5 * hx3
    n3hi = abs(float(xc3[r - 1])) + 0.5 * hx3
    S123 = lc1[:, None, None] + lc2[None, :, None] + lc3[None, None, :]
    value = 0.0
    count = 0
    for i1 in range(two_r):
        x1c = float(xc1[i1])
        g1 = f1[i1]
        for i2 in range(two_r):
            x2c = float(xc2[i2])
            u0 = x1c + x2c
            au0 = abs(u0)
            if au0 <= n3lo - Wx or au0 >= n3hi + Wx:
                continue
            g2v = f2[i2]
            for i3 in range(two_r):
                sc = u0 + float(xc3[i3])
                if sc <= -Wx or sc >= Wx:
                    continue
                axi = _t3_val(sc, hx1, hx2, hx3)
                if axi <= 0.0:
                    continue
                hmin, hmax = _h_window(x1c, hx1, x2c, hx2, float(xc3[i3]), hx3)
                for wlo, whi in ((H, 2.0 * H), (-2.0 * H, -H)):
                    if hmax > hmin:
                        olo = max(hmin, wlo)
                        ohi = min(hmax, whi)
                        if ohi <= olo:
                            continue
                        K = (
                            t3_antiderivative(S123 + ohi, hl1, hl2, hl3)
                            - t3_antiderivative(S123 + olo, hl1, hl2, hl3)
                        ) / (hmax - hmin)
                    else:
                        inside = (wlo <= hmin < whi) if wlo > 0.0 else (wlo < hmin <= whi)
                        if not inside:
                            continue
                        K = t3_profile(S123 + hmin, hl1, hl2, hl3)
                    count += 1
                    if mode == 0:
                        value += axi * float(np.einsum("abc,a,b,c->", K, g1, g2v, f3[i3]))
                    elif mode == 1:
                        out[i1] += axi * np.einsum("abc,b,c->a", K, g2v, f3[i3])
                    elif mode == 2:
                        out[i2] += axi * np.einsum("abc,a,c->b", K, g1, f3[i3])
                    else:
                        out[i3] += axi * np.einsum("abc,a,b->c", K, g1, g2v)
    if mode == 0:
        return value, count
    return 0.0, count


if backend.USE_NUMBA:

    @njit
    def _pp2_s(t):
        return t * t if t > 0.0 else 0.0

    @njit
    def _pp3_s(t):
        return t * t * t if t > 0.0 else 0.0

    @njit
    def _t3_s(x, w1, w2, w3):
        y = x + 0.5 * (w1 + w2 + w3)
        v = (
            _pp2_s(y) - _pp2_s(y - w1) - _pp2_s(y - w2) - _pp2_s(y - w3)
            + _pp2_s(y - w1 - w2) + _pp2_s(y - w1 - w3) + _pp2_s(y - w2 - w3)
            - _pp2_s(y - w1 - w2 - w3)
        )
        return 0.5 * v if v > 0.0 else 0.0

    @njit
    def _t4_s(x, w1, w2, w3):
        y = x + 0.5 * (w1 + w2 + w3)
        v = (
            _pp3_s(y) - _pp3_s(y - w1) - _pp3_s(y - w2) - _pp3_s(y - w3)
            + _pp3_s(y - w1 - w2) + _pp3_s(y - w1 - w3) + _pp3_s(y - w2 - w3)
            - _pp3_s(y - w1 - w2 - w3)
        )
        return v / 6.0 if v > 0.0 else 0.0

    @njit
    def _h3_s(x, y):
        z = -x - y
        return -(x * abs(x) + y * abs(y) + z * abs(z))

    @njit
    def _h_window_s(x1c, hx1, x2c, hx2, x3c, hx3):
        x1lo, x1hi = x1c - 0.5 * hx1, x1c + 0.5 * hx1
        x2lo, x2hi = x2c - 0.5 * hx2, x2c + 0.5 * hx2
        ulo, uhi = -x3c - 0.5 * hx3, -x3c + 0.5 * hx3
        hmin = math.inf
        hmax = -math.inf
        for x in (x1lo, x1hi):
            for y in (x2lo, x2hi):
                if ulo <= x + y <= uhi:
                    v = _h3_s(x, y)
                    hmin = v if v < hmin else hmin
                    hmax = v if v > hmax else hmax
        for u in (ulo, uhi):
            xa = max(x1lo, u - x2hi)
            xb = min(x1hi, u - x2lo)
            if xa <= xb:
                for x in (xa, xb, 0.5 * u):
                    if xa <= x <= xb:
                        v = _h3_s(x, u - x)
                        hmin = v if v < hmin else hmin
                        hmax = v if v > hmax else hmax
        for x in (x1lo, x1hi):
            y = -0.5 * x
            if x2lo <= y <= x2hi and ulo <= x + y <= uhi:
                v = _h3_s(x, y)
                hmin = v if v < hmin else hmin
                hmax = v if v > hmax else hmax
        for y in (x2lo, x2hi):
            x = -0.5 * y
            if x1lo <= x <= x1hi and ulo <= x + y <= uhi:
                v = _h3_s(x, y)
                hmin = v if v < hmin else hmin
                hmax = v if v > hmax else hmax
        if hmin > hmax:
            return 0.0, -1.0
        return hmin, hmax

    @njit
    def _block_pass_nb(mode, f1, f2, f3, xc1, xc2, xc3, lc1, lc2, lc3,
                       hx1, hx2, hx3, hl1, hl2, hl3, H, r, out):
        two_r = 2 * r
        Wx = 0.5 * (hx1 + hx2 + hx3)
        Wl = 0.5 * (hl1 + hl2 + hl3)
        n3lo = abs(xc3[0]) - 0.5 * hx3
        n3hi = abs(xc3[r - 1]) + 0.5 * hx3
        c3 = abs(lc3[0])
        cl3 = c3
        ch3 = abs(lc3[r - 1])
        value = 0.0
        count = 0
        for i1 in range(two_r):
            x1c = xc1[i1]
            for i2 in range(two_r):
                x2c = xc2[i2]
                u0 = x1c + x2c
                au0 = abs(u0)
                if au0 <= n3lo - Wx or au0 >= n3hi + Wx:
                    continue
                for i3 in range(two_r):
                    x3c = xc3[i3]
                    sc = u0 + x3c
                    if sc <= -Wx or sc >= Wx:
                        continue
                    axi = _t3_s(sc, hx1, hx2, hx3)
                    if axi <= 0.0:
                        continue
                    hmin, hmax = _h_window_s(x1c, hx1, x2c, hx2, x3c, hx3)
                    for w in range(2):
                        degen = hmax <= hmin
                        if w == 0:
                            wlo = H
                            whi = 2.0 * H
                            if degen and not (hmin >= wlo and hmin < whi):
                                continue
                        else:
                            wlo = -2.0 * H
                            whi = -H
                            if degen and not (hmin > wlo and hmin <= whi):
                                continue
                        if degen:
                            olo = hmin
                            ohi = hmin
                            inv = 0.0
                        else:
                            olo = hmin if hmin > wlo else wlo
                            ohi = hmax if hmax < whi else whi
                            if ohi <= olo:
                                continue
                            inv = 1.0 / (hmax - hmin)
                        count += 1
                        for j1 in range(two_r):
                            s1 = lc1[j1]
                            v1 = f1[i1, j1]
                            for j2 in range(two_r):
                                s12 = s1 + lc2[j2]
                                tlo = -s12 - Wl - ohi
                                thi = -s12 + Wl - olo
                                pos = thi > cl3 and tlo < ch3
                                neg = thi > -ch3 and tlo < -cl3
                                if not (pos or neg):
                                    continue
                                if mode == 1:
                                    coef = axi * f2[i2, j2]
                                elif mode == 2:
                                    coef = axi * v1
                                else:
                                    coef = axi * v1 * f2[i2, j2]
                                acc = 0.0
                                if pos:
                                    k0 = int(math.floor((tlo - c3) / hl3)) - 1
                                    k1 = int(math.floor((thi - c3) / hl3)) + 1
                                    if k0 < 0:
                                        k0 = 0
                                    if k1 > r - 1:
                                        k1 = r - 1
                                    for k in range(k0, k1 + 1):
                                        x = s12 + lc3[k]
                                        if degen:
                                            mass = _t3_s(x + olo, hl1, hl2, hl3)
                                        else:
                                            mass = (
                                                _t4_s(x + ohi, hl1, hl2, hl3)
                                                - _t4_s(x + olo, hl1, hl2, hl3)
                                            ) * inv
                                        if mass > 0.0:
                                            if mode == 0:
                                                value += coef * mass * f3[i3, k]
                                            elif mode == 3:
                                                out[i3, k] += coef * mass
                                            else:
                                                acc += mass * f3[i3, k]
                                if neg:
                                    k0 = int(math.floor((-thi - c3) / hl3)) - 1
                                    k1 = int(math.floor((-tlo - c3) / hl3)) + 1
                                    if k0 < 0:
                                        k0 = 0
                                    if k1 > r - 1:
                                        k1 = r - 1
                                    for k in range(k0, k1 + 1):
                                        j3 = r + k
                                        x = s12 + lc3[j3]
                                        if degen:
                                            mass = _t3_s(x + olo, hl1, hl2, hl3)
                                        else:
                                            mass = (
                                                _t4_s(x + ohi, hl1, hl2, hl3)
                                                - _t4_s(x + olo, hl1, hl2, hl3)
                                            ) * inv
                                        if mass > 0.0:
                                            if mode == 0:
                                                value += coef * mass * f3[i3, j3]
                                            elif mode == 3:
                                                out[i3, j3] += coef * mass
                                            else:
                                                acc += mass * f3[i3, j3]
                                if mode == 1:
                                    out[i1, j1] += coef * acc
                                elif mode == 2:
                                    out[i2, j2] += coef * acc
        if mode == 0:
            return value, count
        return 0.0, count


# ----------------------------------------------------------------------
# dispatchers
# ----------------------------------------------------------------------

def u2_grid_sum(idx, coeffs, xi, t, alpha, beta, n):
    """Convolution sum of the second flow-map derivative on a grid."""
    idx = np.asarray(idx, dtype=np.int64)
    if backend.USE_NUMBA:
        return _u2_grid_nb(idx, coeffs, xi, float(t), float(alpha), float(beta), n)
    return _u2_grid_np(idx, coeffs, xi, float(t), float(alpha), float(beta), n)


def u3_grid_sum(idx, coeffs, xi, t, alpha, beta, n):
    """Double convolution sum of the third flow-map derivative on a grid."""
    idx = np.asarray(idx, dtype=np.int64)
    if backend.USE_NUMBA:
        return _u3_grid_nb(idx, coeffs, xi, float(t), float(alpha), float(beta), n)
    return _u3_grid_np(idx, coeffs, xi, float(t), float(alpha), float(beta), n)


def u3_mesh(xi_out, xi1, xi2, t, alpha, beta):
    """Third-derivative integrand over flattened quadrature meshes."""
    xi1 = np.ascontiguousarray(xi1, dtype=float).ravel()
    xi2 = np.ascontiguousarray(xi2, dtype=float).ravel()
    if backend.USE_NUMBA:
        return _u3_mesh_nb(float(xi_out), xi1, xi2, float(t), float(alpha), float(beta))
    return _u3_mesh_np(float(xi_out), xi1, xi2, float(t), float(alpha), float(beta))


def u3_resonant_mesh(xi_out, xi1, xi2, t, alpha, beta):
    """Resonant component of the cubic integrand over flattened meshes."""
    xi1 = np.ascontiguousarray(xi1, dtype=float).ravel()
    xi2 = np.ascontiguousarray(xi2, dtype=float).ravel()
    if backend.USE_NUMBA:
        return _u3r_mesh_nb(float(xi_out), xi1, xi2, float(t), float(alpha), float(beta))
    return _u3r_mesh_np(float(xi_out), xi1, xi2, float(t), float(alpha), float(beta))


def block_pass(mode, f1, f2, f3, xc1, xc2, xc3, lc1, lc2, lc3,
               hx1, hx2, hx3, hl1, hl2, hl3, H, r, out):
    """Dispatch one power-iteration contraction pass."""
    args = (
        int(mode), f1, f2, f3, xc1, xc2, xc3, lc1, lc2, lc3,
        float(hx1), float(hx2), float(hx3),
        float(hl1), float(hl2), float(hl3),
        float(H), int(r), out,
    )
    if backend.USE_NUMBA:
        return _block_pass_nb(*args)
    return _block_pass_np(*args)
