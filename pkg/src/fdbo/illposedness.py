"""Flow-map derivatives and norm-inflation sweeps.

Expanding the mild solution around ``t = 0`` in powers of the datum
gives, per mode,

    u2_hat(xi, t) = -(1j xi / 2) e^{lam(xi) t}
                    integral  u0_hat(xi - xi1) u0_hat(xi1) t phi1(sigma t) dxi1,

    u3_hat(xi, t) = -(xi / 2) e^{lam(xi) t}
                    double integral  u0_hat(xi1) u0_hat(xi2 - xi1) u0_hat(xi - xi2)
                                     xi2 t^2 g2(sigma(xi2, xi1) t, sigma(xi, xi2) t),

with ``sigma(xi, xi1) = lam(xi - xi1) + lam(xi1) - lam(xi)`` the phase
mismatch and ``phi1``/``g2`` the entire kernels from :mod:`fdbo.kernels`.
For characteristic-band data the integrals run over explicit intervals
in continuous frequency; on a periodic grid they become convolution
sums, which is what the quadrature-Picard oracles check against.

The inflation experiments build frequency-localized data of unit Sobolev
size, evaluate the derivative norm on the interaction band at the
critical time ``t_N = N^(-beta-eps)``, and fit the growth exponent in
``N`` against the predicted one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .backend import thread_cap
from .kernels import g2, phi1
from .spectral import Grid, SpectralField, SymbolParams, full_symbol

__all__ = [
    "InflationDatum",
    "build_datum",
    "datum_bands",
    "torus_modes",
    "sigma",
    "eta",
    "u2_closed_form",
    "u3_closed_form",
    "u2_on_grid",
    "u3_on_grid",
    "picard_u2",
    "picard_u3",
    "u2_torus_coefficient",
    "measured_band",
    "band_hs_norm",
    "inflation_sweep",
    "fit_slope",
    "theoretical_slope",
]

KINDS = ("line-pair", "line-asym", "torus-two-mode")


@dataclass(frozen=True)
class InflationDatum:
    """Frequency-localized datum of approximately unit H^s size.

    kind
        ``line-pair``: mass ``N^-s omega^-1/2`` on ``[N, N+2 omega]`` and its
        mirror (real datum).  ``line-asym``: a low block on
        ``[omega/2, omega]`` and a high block on ``[N, N+omega]``, both
        mirrored.  ``torus-two-mode``: integer modes ``N`` and ``1-N``
        (plus conjugates), each of amplitude ``N^-s``.
    """

    kind: str
    N: float
    omega: float
    s: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown datum kind {self.kind!r}")
        if self.N <= 0 or self.omega <= 0:
            raise ValueError("need N > 0 and omega > 0")
        if self.kind != "torus-two-mode" and self.omega > self.N / 4:
            raise ValueError("band width omega must satisfy omega <= N/4")
        if self.kind == "torus-two-mode" and (self.N != int(self.N) or self.N < 2):
            raise ValueError("torus datum needs integer N >= 2")


def datum_bands(d: InflationDatum):
    """Characteristic bands ``(lo, hi, amplitude)`` of the real datum."""
    if d.kind == "line-pair":
        amp = d.N ** (-d.s) / math.sqrt(d.omega)
        return [
            (d.N, d.N + 2.0 * d.omega, amp),
            (-d.N - 2.0 * d.omega, -d.N, amp),
        ]
    if d.kind == "line-asym":
        a_low = 1.0 / math.sqrt(d.omega)
        a_high = d.N ** (-d.s) / math.sqrt(d.omega)
        return [
            (0.5 * d.omega, d.omega, a_low),
            (-d.omega, -0.5 * d.omega, a_low),
            (d.N, d.N + d.omega, a_high),
            (-d.N - d.omega, -d.N, a_high),
        ]
    raise ValueError("torus data are modal, not banded; use torus_modes")


def torus_modes(d: InflationDatum):
    """Integer modes ``(k, amplitude)`` of the (real) torus datum."""
    if d.kind != "torus-two-mode":
        raise ValueError("only torus-two-mode data are modal")
    n = int(d.N)
    a = d.N ** (-d.s)
    return [(n, a), (1 - n, a), (-n, a), (n - 1, a)]


def build_datum(d: InflationDatum, grid: Grid) -> SpectralField:
    """Sample the datum on a grid (real field, paper-normalized size).

    Band amplitudes are scaled by ``sqrt(2 pi)/L`` so the grid Sobolev
    norm reproduces the continuum integral ``int <xi>^2s |u0_hat|^2 dxi``.
    Requires every band to be at least 4 frequency spacings wide and to
    fit below the Nyquist frequency.
    """
    xi = grid.frequencies()
    coeffs = np.zeros(grid.n_modes, dtype=complex)
    if d.kind == "torus-two-mode":
        if abs(grid.period - 2.0 * np.pi) > 1e-12:
            raise ValueError("torus data need period 2*pi (integer frequencies)")
        for k, a in torus_modes(d):
            j = int(k) % grid.n_modes
            if abs(k) >= grid.nyquist_index():
                raise ValueError("torus mode exceeds the grid Nyquist index")
            coeffs[j] += a
        return SpectralField(grid, coeffs)
    bands = datum_bands(d)
    width = min(hi - lo for lo, hi, _ in bands)
    if width < 4.0 * grid.dxi:
        raise ValueError(
            f"band width {width:.4g} not resolvable: need >= 4 frequency spacings "
            f"({4.0 * grid.dxi:.4g})"
        )
    xmax = max(abs(lo) for lo, _, _ in bands + [(b[1], 0, 0) for b in bands])
    if xmax >= abs(xi[grid.nyquist_index()]):
        raise ValueError("datum bands exceed the grid Nyquist frequency")
    scale = math.sqrt(2.0 * np.pi) / grid.period
    for lo, hi, amp in bands:
        coeffs[(xi >= lo) & (xi <= hi)] += amp * scale
    return SpectralField(grid, coeffs)


def sigma(xi, xi1, p: SymbolParams):
    """Phase mismatch ``lam(xi - xi1) + lam(xi1) - lam(xi)``."""
    return kernels.sigma_np(xi, xi1, p.alpha, p.beta)


def eta(xi, xi1, xi2, p: SymbolParams):
    """Cubic phase mismatch ``sigma(xi, xi2) + sigma(xi2, xi1)``."""
    return sigma(xi, xi2, p) + sigma(xi2, xi1, p)


# ----------------------------------------------------------------------
# continuous-frequency closed forms for banded data
# ----------------------------------------------------------------------

def _gl_nodes(lo, hi, panels, q=12):
    x, w = np.polynomial.legendre.leggauss(q)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _osc_panels(fvals_at_ends: np.ndarray, cap: int = 256) -> int:
    """Panel count from an endpoint phase-variation estimate."""
    swing = float(np.max(np.abs(np.diff(fvals_at_ends))))
    return int(np.clip(1 + swing / 4.0, 1, cap))


def _u2_pair_integral(xi: float, lo: float, hi: float, t: float, p: SymbolParams, rtol: float) -> complex:
    ends = sigma(np.array([xi, xi]), np.array([lo, hi]), p) * t
    panels = _osc_panels(np.array([ends[0].imag, ends[1].imag]))
    prev = None
    for _ in range(8):
        nodes, w = _gl_nodes(lo, hi, panels)
        vals = t * phi1(sigma(xi, nodes, p) * t)
        cur = complex(np.sum(w * vals))
        if prev is not None and abs(cur - prev) <= rtol * abs(cur) + 1e-300:
            return cur
        prev = cur
        panels *= 2
    return prev


def u2_closed_form(d: InflationDatum, t: float, xi_grid, p: SymbolParams, rtol: float = 1e-9) -> np.ndarray:
    """Second flow-map derivative of banded data at listed frequencies."""
    if d.kind == "torus-two-mode":
        return np.array([u2_torus_coefficient(d, t, int(round(x)), p) for x in np.atleast_1d(xi_grid)])
    bands = datum_bands(d)
    xi_grid = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    out = np.zeros(len(xi_grid), dtype=complex)
    for i, xi in enumerate(xi_grid):
        acc = 0.0 + 0.0j
        for (alo, ahi, aamp) in bands:
            for (blo, bhi, bamp) in bands:
                lo = max(blo, xi - ahi)
                hi = min(bhi, xi - alo)
                if hi <= lo:
                    continue
                acc += aamp * bamp * _u2_pair_integral(xi, lo, hi, t, p, rtol)
        out[i] = acc
    return -0.5j * xi_grid * np.exp(full_symbol(xi_grid, p) * t) * out


def _u3_triple_integral(xi, a, b, c, t, p, rtol, part="full"):
    """Double integral over {xi1 in a, xi2-xi1 in b, xi-xi2 in c}."""
    mesh = kernels.u3_resonant_mesh if part == "resonant" else kernels.u3_mesh
    alo, ahi, aamp = a
    blo, bhi, bamp = b
    clo, chi, camp = c
    o_lo = max(xi - chi, alo + blo)
    o_hi = min(xi - clo, ahi + bhi)
    if o_hi <= o_lo:
        return 0.0 + 0.0j
    cuts = sorted({o_lo, o_hi, *(x for x in (alo + bhi, ahi + blo) if o_lo < x < o_hi)})
    total = 0.0 + 0.0j
    for plo, phi_ in zip(cuts[:-1], cuts[1:]):
        ends = sigma(np.array([xi, xi]), np.array([plo, phi_]), p) * t
        p_out = _osc_panels(np.array([ends[0].imag, ends[1].imag]))
        prev = None
        for level in range(7):
            n2, w2 = _gl_nodes(plo, phi_, p_out, q=10)
            i_lo = np.maximum(alo, n2 - bhi)
            i_hi = np.minimum(ahi, n2 - blo)
            # inner oscillation scale: sigma(xi2, .) across the inner interval
            s_lo = sigma(n2, i_lo, p) * t
            s_hi = sigma(n2, i_hi, p) * t
            p_in = int(np.clip(1 + np.max(np.abs(s_hi.imag - s_lo.imag)) / 4.0, 1, 256))
            n1, w1 = _gl_nodes(0.0, 1.0, p_in, q=10)
            # map the unit nodes onto each inner interval
            X1 = i_lo[:, None] + (i_hi - i_lo)[:, None] * n1[None, :]
            W = w2[:, None] * w1[None, :] * (i_hi - i_lo)[:, None]
            X2 = np.broadcast_to(n2[:, None], X1.shape)
            vals = mesh(xi, X1.ravel(), X2.ravel(), t, p.alpha, p.beta)
            cur = complex(np.sum(W.ravel() * vals))
            if prev is not None and abs(cur - prev) <= rtol * abs(cur) + 1e-300:
                break
            prev = cur
            p_out *= 2
        total += aamp * bamp * camp * cur
    return total


def u3_closed_form(
    d: InflationDatum,
    t: float,
    xi_grid,
    p: SymbolParams,
    rtol: float = 1e-8,
    part: str = "full",
) -> np.ndarray:
    """Third flow-map derivative of banded data at listed frequencies.

    ``part="resonant"`` integrates only the slowly oscillating term of the
    Duhamel kernel (the component that carries the predicted growth); the
    dropped free-wave remainder is smaller only once ``|sigma| t >> 1``.
    """
    bands = datum_bands(d)
    xi_grid = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    out = np.zeros(len(xi_grid), dtype=complex)
    for i, xi in enumerate(xi_grid):
        acc = 0.0 + 0.0j
        for a in bands:
            for b in bands:
                for c in bands:
                    acc += _u3_triple_integral(xi, a, b, c, t, p, rtol, part)
        out[i] = acc
    return -0.5 * xi_grid * np.exp(full_symbol(xi_grid, p) * t) * out


def u2_torus_coefficient(d: InflationDatum, t: float, k: int, p: SymbolParams) -> complex:
    """Exact modal sum for torus data (integer frequencies)."""
    modes = torus_modes(d)
    acc = 0.0 + 0.0j
    for k2, a2 in modes:
        for k1, a1 in modes:
            if k1 + k2 == k:
                acc += a1 * a2 * t * complex(phi1(sigma(float(k), float(k2), p) * t))
    lam = complex(full_symbol(float(k), p))
    return -0.5j * k * np.exp(lam * t) * acc


# ----------------------------------------------------------------------
# grid closed forms and quadrature-Picard oracles
# ----------------------------------------------------------------------

def _support(u0: SpectralField, order: int):
    idx = np.nonzero(np.abs(u0.coeffs) > 0.0)[0].astype(np.int64)
    if idx.size == 0:
        raise ValueError("datum has empty support")
    n = u0.grid.n_modes
    signed = np.where(idx >= n // 2, idx - n, idx)
    if order * int(np.max(np.abs(signed))) >= n // 2:
        raise ValueError("grid too small: interaction bands would alias")
    return idx


def u2_on_grid(u0: SpectralField, t: float, p: SymbolParams) -> SpectralField:
    """Closed-form second derivative as a grid field (convolution sum)."""
    grid = u0.grid
    idx = _support(u0, 2)
    xi = grid.frequencies()
    conv = kernels.u2_grid_sum(idx, u0.coeffs, xi, t, p.alpha, p.beta, grid.n_modes)
    out = -0.5j * xi * np.exp(full_symbol(xi, p) * t) * conv
    return SpectralField(grid, out)


def u3_on_grid(u0: SpectralField, t: float, p: SymbolParams) -> SpectralField:
    """Closed-form third derivative as a grid field (double convolution)."""
    grid = u0.grid
    idx = _support(u0, 3)
    xi = grid.frequencies()
    conv = kernels.u3_grid_sum(idx, u0.coeffs, xi, t, p.alpha, p.beta, grid.n_modes)
    out = -0.5 * xi * np.exp(full_symbol(xi, p) * t) * conv
    return SpectralField(grid, out)


def _fft_square(coeffs: np.ndarray) -> np.ndarray:
    n = len(coeffs)
    phys = np.fft.ifft(coeffs * n)
    return np.fft.fft(phys * phys) / n


def picard_u2(u0: SpectralField, t: float, p: SymbolParams, rtol: float = 1e-10) -> SpectralField:
    """Time-quadrature oracle ``-int_0^t S(t-tau) dx(u1^2)/2 dtau``."""
    grid = u0.grid
    _support(u0, 2)
    xi = grid.frequencies()
    lam = full_symbol(xi, p)
    prev = None
    panels = 2
    for _ in range(8):
        nodes, w = _gl_nodes(0.0, t, panels, q=10)
        acc = np.zeros(grid.n_modes, dtype=complex)
        for tau, wg in zip(nodes, w):
            u1 = np.exp(lam * tau) * u0.coeffs
            flux = 0.5j * xi * _fft_square(u1)
            acc -= wg * np.exp(lam * (t - tau)) * flux
        if prev is not None:
            err = np.linalg.norm(acc - prev)
            if err <= rtol * np.linalg.norm(acc) + 1e-300:
                return SpectralField(grid, acc)
        prev = acc
        panels *= 2
    return SpectralField(grid, prev)


def picard_u3(u0: SpectralField, t: float, p: SymbolParams, rtol: float = 1e-9) -> SpectralField:
    """Nested time-quadrature oracle ``-int_0^t S(t-tau) dx(u1 u2) dtau``."""
    grid = u0.grid
    _support(u0, 3)
    n = grid.n_modes
    xi = grid.frequencies()
    lam = full_symbol(xi, p)

    def inner_u2(tau: float, panels: int) -> np.ndarray:
        nodes, w = _gl_nodes(0.0, tau, panels, q=10)
        acc = np.zeros(n, dtype=complex)
        for tq, wg in zip(nodes, w):
            u1 = np.exp(lam * tq) * u0.coeffs
            acc -= wg * np.exp(lam * (tau - tq)) * (0.5j * xi * _fft_square(u1))
        return acc

    prev = None
    panels = 2
    for _ in range(7):
        nodes, w = _gl_nodes(0.0, t, panels, q=10)
        acc = np.zeros(n, dtype=complex)
        for tau, wg in zip(nodes, w):
            u1 = np.fft.ifft(np.exp(lam * tau) * u0.coeffs * n)
            u2 = np.fft.ifft(inner_u2(float(tau), panels) * n)
            cross = np.fft.fft(u1 * u2) / n
            acc -= wg * np.exp(lam * (t - tau)) * (1j * xi * cross)
        if prev is not None:
            err = np.linalg.norm(acc - prev)
            if err <= rtol * np.linalg.norm(acc) + 1e-300:
                return SpectralField(grid, acc)
        prev = acc
        panels *= 2
    return SpectralField(grid, prev)


# ----------------------------------------------------------------------
# inflation sweeps
# ----------------------------------------------------------------------

def measured_band(d: InflationDatum, order: int):
    """Interaction band whose H^s mass the sweep records."""
    if order == 2:
        if d.kind == "line-pair":
            return (-0.5 * d.omega, 0.5 * d.omega)
        if d.kind == "line-asym":
            return (d.N + 0.5 * d.omega, d.N + 2.0 * d.omega)
        raise ValueError("torus sweeps measure the k = 1 coefficient directly")
    if order == 3:
        if d.kind == "line-pair":
            return (d.N + 3.0 * d.omega, d.N + 4.0 * d.omega)
        raise ValueError("third-order sweeps use line-pair data")
    raise ValueError("order must be 2 or 3")


def band_hs_norm(
    d: InflationDatum,
    t: float,
    p: SymbolParams,
    s: float,
    order: int,
    band=None,
    rtol: float = 1e-6,
    part: str = "full",
) -> float:
    """H^s mass of the flow-map derivative restricted to a band.

    ``sqrt( int_band <xi>^{2s} |u_hat(xi)|^2 dxi )`` with the integrand
    split at the kink frequencies of the band intersections.
    """
    lo, hi = band if band is not None else measured_band(d, order)
    bands = datum_bands(d)
    edges = [b[0] for b in bands] + [b[1] for b in bands]
    if order == 2:
        kinks = {e1 + e2 for e1 in edges for e2 in edges}
        evaluate = lambda xs: u2_closed_form(d, t, xs, p)
    else:
        kinks = {e1 + e2 + e3 for e1 in edges for e2 in edges for e3 in edges}
        evaluate = lambda xs: u3_closed_form(d, t, xs, p, part=part)
    kinks.add(0.0)
    cuts = sorted({lo, hi, *(k for k in kinks if lo < k < hi)})
    total = 0.0
    for plo, phi_ in zip(cuts[:-1], cuts[1:]):
        prev = None
        panels = 1
        for _ in range(6):
            nodes, w = _gl_nodes(plo, phi_, panels, q=8)
            vals = np.abs(evaluate(nodes)) ** 2 * (1.0 + nodes**2) ** s
            cur = float(np.sum(w * vals))
            if prev is not None and abs(cur - prev) <= rtol * abs(cur) + 1e-300:
                break
            prev = cur
            panels *= 2
        total += cur
    return math.sqrt(total)


def fit_slope(N_values, norms) -> float:
    """Least-squares slope of ``log norm`` against ``log N``."""
    x = np.log(np.asarray(N_values, dtype=float))
    y = np.log(np.asarray(norms, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def theoretical_slope(kind: str, order: int, s: float, p: SymbolParams, epsilon: float) -> float:
    b = p.beta
    if order == 2:
        if kind == "line-asym":
            return 0.5 * (1.0 - b) - epsilon
        return -2.0 * s - b - epsilon
    if b < 2.0:
        return -2.0 * s - 0.5 * b - epsilon
    return -2.0 * s + 3.0 - 2.0 * b - 2.0 * epsilon


def _omega_rule(kind: str, order: int, N: float, p: SymbolParams, eps1: float) -> float:
    if order == 2:
        if kind == "line-pair":
            return 1.0
        if kind == "line-asym":
            return N ** (p.beta - 1.0)
        return 1.0
    if p.beta < 2.0:
        return N ** (0.5 * p.beta)
    return eps1 * N


def _sigma_bracket_ok(d: InflationDatum, p: SymbolParams) -> bool:
    """Dissipative-part bracket for the wide-band cubic experiment.

    Samples the measured band against the same-signed high-pair window
    ``xi2 ~ 2N`` and requires ``Re sigma(xi, xi2)`` to be negative with
    ``|Re sigma| / N^beta`` within a factor ~2 of ``2^beta``.  A too
    wide band pollutes the leading term and breaks the bracket; the
    sweep then retries with ``eps1 / 2``.
    """
    N, w = d.N, d.omega
    lo, hi = measured_band(d, 3)
    xs = np.linspace(lo, hi, 7)
    x2 = np.linspace(2.0 * N, 2.0 * N + 4.0 * w, 9)
    target = 2.0**p.beta
    for xi in xs:
        re = sigma(xi, x2, p).real
        if np.any(re >= 0.0):
            return False
        ratio = np.abs(re) / N**p.beta
        if np.any(ratio < 0.4 * target) or np.any(ratio > 2.5 * target):
            return False
    return True


def _u3_part(p: SymbolParams) -> str:
    """Component of the cubic derivative measured by third-order sweeps.

    In the narrow-band regime (beta < 2) the fitted power law belongs to
    the resonant component alone: the free-wave remainder oscillates with
    phase ``|sigma| t ~ N^{1 - beta/2 - eps}``, so it stops interfering
    only at scales N far beyond reach.  The wide-band regime (beta >= 2)
    drives ``|sigma| t`` large already at small N and the full derivative
    is measured directly.
    """
    return "resonant" if p.beta < 2.0 else "full"


def _sweep_value(kind, order, s, p, N, epsilon, eps1):
    omega = _omega_rule(kind, order, N, p, eps1)
    t_N = N ** (-p.beta - epsilon)
    d = InflationDatum(kind=kind, N=float(N), omega=omega, s=s)
    if kind == "torus-two-mode":
        val = abs(u2_torus_coefficient(d, t_N, 1, p))
    elif order == 3:
        val = band_hs_norm(d, t_N, p, s, order, part=_u3_part(p))
    else:
        val = band_hs_norm(d, t_N, p, s, order)
    return {"N": float(N), "t_N": t_N, "norm": val}


def inflation_sweep(
    kind: str,
    s: float,
    p: SymbolParams,
    N_list,
    epsilon: float = 0.05,
    order: int = 2,
    eps1: float = 1.0 / 64.0,
) -> dict:
    """Sweep the derivative norm over datum scales and fit the exponent.

    Returns a report with one entry per ``N`` plus the fitted and
    predicted slopes.  For the wide-band cubic regime (order 3,
    ``beta >= 2``) the relative band width ``eps1`` is halved until the
    dissipative bracket check passes.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown datum kind {kind!r}")
    if order == 3 and kind != "line-pair":
        raise ValueError("third-order sweeps use line-pair data")
    if order == 2 and kind == "line-asym" and p.beta >= 1.0:
        raise ValueError("asymmetric-pair sweeps target beta < 1")
    N_list = sorted(float(N) for N in N_list)
    if order == 3 and p.beta >= 2.0:
        for _ in range(7):
            trial = InflationDatum("line-pair", N_list[-1], eps1 * N_list[-1], s)
            if _sigma_bracket_ok(trial, p):
                break
            eps1 *= 0.5
        else:
            raise RuntimeError("dissipative bracket check failed at smallest eps1")
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        entries = list(
            pool.map(lambda N: _sweep_value(kind, order, s, p, N, epsilon, eps1), N_list)
        )
    fitted = fit_slope([e["N"] for e in entries], [e["norm"] for e in entries])
    report = {
        "kind": kind,
        "order": order,
        "alpha": p.alpha,
        "beta": p.beta,
        "s": s,
        "epsilon": epsilon,
        "entries": entries,
        "fitted_slope": fitted,
        "theoretical_slope": theoretical_slope(kind, order, s, p, epsilon),
    }
    if order == 3:
        report["component"] = _u3_part(p)
        if p.beta >= 2.0:
            report["eps1"] = eps1
    return report
