"""Spectral core: grids, symbols, norms, and the quadratic term.

Model family on a periodic box of length ``L`` (a large box standing in
for the line, or the native torus when ``L = 2*pi``):

    u_t + H u_xx - (D^alpha - D^beta) u + u u_x = 0,   0 < alpha <= beta,

with ``H`` the Hilbert transform (Fourier symbol ``-1j*sign(xi)``) and
``D^s`` the multiplier ``|xi|^s``.  On the Fourier side the linear part
acts mode-wise through

    lam(xi) = -1j*xi*|xi| + m(xi),      m(xi) = |xi|^alpha - |xi|^beta,

so ``alpha == beta`` kills growth and dissipation and leaves the pure
dispersive equation (unitary evolution).

Conventions, used consistently everywhere:

* coefficients are the normalized DFT ``fft(u) / n_modes`` in standard
  FFT ordering ``j = 0, 1, ..., n/2-1, -n/2, ..., -1``;
* frequencies are ``xi_j = 2*pi*j / L``;
* ``||u||_{L^2}^2 = L * sum_j |u_hat_j|^2`` (Parseval for the box);
* ``sign(0) = 0`` and ``m(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymbolParams",
    "Grid",
    "SpectralField",
    "hilbert_symbol",
    "dispersion_phase",
    "growth_dissipation_symbol",
    "full_symbol",
    "symbol_peak",
    "symbol_argmax",
    "l2_norm",
    "sobolev_norm",
    "homogeneous_norm",
    "dx",
    "nonlinearity",
]

# Relative tolerance for the Hermitian-symmetry (real field) check.
HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class SymbolParams:
    """Exponent pair ``0 < alpha <= beta`` of the growth-dissipation symbol."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= self.beta):
            raise ValueError(
                f"need 0 < alpha <= beta, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def is_dispersive_only(self) -> bool:
        """True when alpha == beta (symbol cancels, unitary evolution)."""
        return self.alpha == self.beta


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with an even number of modes."""

    n_modes: int
    period: float

    def __post_init__(self):
        if self.n_modes < 8 or self.n_modes % 2 != 0:
            raise ValueError(f"n_modes must be even and >= 8, got {self.n_modes}")
        if not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def dx(self) -> float:
        return self.period / self.n_modes

    @property
    def dxi(self) -> float:
        """Frequency spacing 2*pi/L."""
        return 2.0 * np.pi / self.period

    def nodes(self) -> np.ndarray:
        return np.arange(self.n_modes) * self.dx

    def frequencies(self) -> np.ndarray:
        """Angular frequencies 2*pi*j/L in FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_modes, d=self.dx)

    def nyquist_index(self) -> int:
        return self.n_modes // 2

    def dealias_keep(self) -> int:
        # Strict 2/3 rule: keep |j| <= K with 3K < n, so aliased images of
        # quadratic products always land outside the kept band.
        return (self.n_modes - 1) // 3

    def dealias_mask(self) -> np.ndarray:
        j = np.fft.fftfreq(self.n_modes, d=1.0 / self.n_modes)
        return np.abs(j) <= self.dealias_keep()


def hilbert_symbol(xi):
    """Fourier symbol of the Hilbert transform, ``-1j*sign(xi)``."""
    return -1j * np.sign(xi)


def dispersion_phase(xi):
    """Real phase ``theta(xi) = -xi*|xi|``: ``H u_xx`` has symbol ``1j*theta``."""
    xi = np.asarray(xi, dtype=float)
    return -xi * np.abs(xi)


def growth_dissipation_symbol(xi, p: SymbolParams):
    """``m(xi) = |xi|^alpha - |xi|^beta`` with ``m(0) = 0``.

    Positive on ``0 < |xi| < 1`` (growth) and negative for ``|xi| > 1``
    (dissipation); identically zero when ``alpha == beta``.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    if p.is_dispersive_only:
        return np.zeros_like(a)
    return a**p.alpha - a**p.beta


def full_symbol(xi, p: SymbolParams):
    """Complete linear symbol ``lam(xi) = 1j*dispersion_phase + m``."""
    return 1j * dispersion_phase(xi) + growth_dissipation_symbol(xi, p)


def symbol_argmax(p: SymbolParams) -> float:
    """Location of the maximum of ``m`` on ``[0, inf)``."""
    if p.is_dispersive_only:
        return 1.0
    return (p.alpha / p.beta) ** (1.0 / (p.beta - p.alpha))

def symbol_peak(p: SymbolParams) -> float:
    """Analytic maximum of ``m``: attained at ``(alpha/beta)^(1/(beta-alpha))``."""
    if p.is_dispersive_only:
        return 0.0
    r = p.alpha / p.beta
    e = 1.0 / (p.beta - p.alpha)
    return r ** (p.alpha * e) - r ** (p.beta * e)


class SpectralField:
    """A real periodic field stored by its normalized Fourier coefficients."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.n_modes,):
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match grid ({grid.n_modes},)"
            )
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_modes,):
            raise ValueError("physical sample count must equal n_modes")
        return cls(grid, np.fft.fft(values) / grid.n_modes)

    @classmethod
    def from_coefficients(cls, grid: Grid, coeffs: np.ndarray) -> "SpectralField":
        f = cls(grid, coeffs)
        defect = f.hermitian_defect()
        if defect > HERMITIAN_RTOL:
            raise ValueError(f"coefficients not Hermitian-symmetric (defect {defect:.3e})")
        return f

    def to_physical(self) -> np.ndarray:
        return np.fft.ifft(self.coeffs * self.grid.n_modes).real

    def hermitian_defect(self) -> float:
        """Relative departure from ``coeff(-xi) == conj(coeff(xi))``."""
        c = self.coeffs
        d = c - np.conj(c[-np.arange(len(c)) % len(c)])
        scale = float(np.max(np.abs(c)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(d))) / scale

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def embedded(self, n_modes: int) -> "SpectralField":
        """Same field on a finer grid (same period, more modes)."""
        n = self.grid.n_modes
        if n_modes < n:
            raise ValueError("target grid must be at least as fine")
        half = n // 2
        if abs(self.coeffs[half]) > 0.0:
            raise ValueError("cannot embed a field with energy at the Nyquist mode")
        fine = Grid(n_modes, self.grid.period)
        c = np.zeros(n_modes, dtype=complex)
        c[: half] = self.coeffs[: half]
        c[n_modes - half :] = self.coeffs[half:]
        return SpectralField(fine, c)


def l2_norm(u: SpectralField) -> float:
    """``sqrt(L * sum |u_hat|^2)``."""
    return float(np.sqrt(u.grid.period * np.sum(np.abs(u.coeffs) ** 2)))


def sobolev_norm(u: SpectralField, s: float) -> float:
    """Inhomogeneous norm ``sqrt(L * sum <xi>^{2s} |u_hat|^2)``."""
    xi = u.grid.frequencies()
    w = (1.0 + xi * xi) ** s
    return float(np.sqrt(u.grid.period * np.sum(w * np.abs(u.coeffs) ** 2)))


def homogeneous_norm(u: SpectralField, s: float) -> float:
    """Homogeneous norm ``sqrt(L * sum |xi|^{2s} |u_hat|^2)`` (s > 0)."""
    xi = np.abs(u.grid.frequencies())
    w = np.zeros_like(xi)
    nz = xi > 0.0
    w[nz] = xi[nz] ** (2.0 * s)
    if s == 0.0:
        w[~nz] = 1.0
    return float(np.sqrt(u.grid.period * np.sum(w * np.abs(u.coeffs) ** 2)))


def dx(u: SpectralField) -> SpectralField:
    """Spectral derivative; the (self-conjugate) Nyquist mode is zeroed."""
    xi = u.grid.frequencies()
    c = 1j * xi * u.coeffs
    c[u.grid.nyquist_index()] = 0.0
    return SpectralField(u.grid, c)


def nonlinearity(u: SpectralField, dealias: bool = True) -> SpectralField:
    """Quadratic term ``d/dx (u^2) / 2 = u u_x`` via collocation product.

    With ``dealias`` the strict 2/3 mask is applied to the factors and to
    the product, which makes the term exactly energy-neutral against ``u``
    (the discrete counterpart of ``integral(u^2 u_x) = 0``).  The zero
    mode of the result vanishes identically.
    """
    grid = u.grid
    c = u.coeffs
    if dealias:
        c = c * grid.dealias_mask()
    phys = np.fft.ifft(c * grid.n_modes).real
    prod = np.fft.fft(phys * phys) / grid.n_modes
    if dealias:
        prod *= grid.dealias_mask()
    xi = grid.frequencies()
    out = 0.5j * xi * prod
    out[grid.nyquist_index()] = 0.0
    return SpectralField(grid, out)
