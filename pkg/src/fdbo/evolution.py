"""Nonlinear evolution: steppers, energy ledger, Picard iteration.

The semidiscrete system for the Fourier coefficients is

    d/dt u_hat = lam(xi) u_hat - F[u u_x],

integrated with the linear part handled exactly (integrating-factor RK4
or ETDRK4).  A linear-only run therefore reproduces the semigroup to
roundoff.  The mild (Duhamel) form

    u(t) = S(t) u0 - int_0^t S(t - tau) (u u_x)(tau) dtau

drives the Picard iteration used for the contraction experiments; the
time integral is evaluated with composite Gauss-Legendre panels and the
semigroup applied exactly at the quadrature nodes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    SymbolParams,
    full_symbol,
    growth_dissipation_symbol,
    nonlinearity,
    sobolev_norm,
)

__all__ = [
    "SolverConfig",
    "Trajectory",
    "InstabilityError",
    "NonContractionError",
    "step",
    "solve",
    "stability_dt_bound",
    "energy_balance",
    "PicardResult",
    "picard_iterate",
    "y_norm",
    "xbs_norm",
    "spacetime_transform",
    "write_snapshot",
    "read_snapshot",
]

SNAPSHOT_MAGIC = b"FDBO"
SNAPSHOT_VERSION = 1


class InstabilityError(RuntimeError):
    """Raised when a stepped state stops being finite."""

    def __init__(self, time: float):
        super().__init__(f"non-finite state at t = {time:.6g}; reduce dt")
        self.time = time


class NonContractionError(RuntimeError):
    """Raised when Picard difference norms grow three iterations running."""

    def __init__(self, diffs):
        super().__init__(
            "Picard iteration is not contracting; successive difference norms: "
            + ", ".join(f"{d:.3e}" for d in diffs)
        )
        self.diffs = list(diffs)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    scheme: str = "ifrk4"
    dealias: bool = True
    linear_only: bool = False
    store_every: int = 1
    picard_max_iters: int = 25
    picard_tol: float = 1e-10

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_end < 0.0:
            raise ValueError("need dt > 0 and t_end >= 0")
        if self.scheme not in ("ifrk4", "etdrk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.store_every < 1:
            raise ValueError("store_every must be >= 1")


@dataclass
class Trajectory:
    """States sampled along a run; ``states[i]`` are coefficients at ``times[i]``."""

    grid: Grid
    params: SymbolParams
    times: np.ndarray
    states: np.ndarray

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.states[i])

    @property
    def n_frames(self) -> int:
        return len(self.times)


def stability_dt_bound(grid: Grid, p: SymbolParams, u_linf: float) -> float:
    """Advective step-size bound for the RK4 schemes.

    The linear part is integrated exactly, so only the transport term
    constrains dt: the RK4 imaginary-axis stability interval gives
    ``dt <= 2.8 / (max|u| * xi_max)``.
    """
    xi_max = float(np.max(np.abs(grid.frequencies())))
    if u_linf <= 0.0 or xi_max == 0.0:
        return np.inf
    return 2.8 / (u_linf * xi_max)


def _rhs_factory(grid: Grid, cfg: SolverConfig):
    if cfg.linear_only:
        zero = np.zeros(grid.n_modes, dtype=complex)
        return lambda c: zero
    def rhs(c):
        return -nonlinearity(SpectralField(grid, c), dealias=cfg.dealias).coeffs
    return rhs


def _ifrk4_stepper(grid: Grid, dt: float, p: SymbolParams, cfg: SolverConfig):
    # Classic RK4 applied to w(t) = exp(-lam (t - t_n)) u_hat, written out
    # so that only forward multipliers appear (no exp(+|Re lam| t) factors).
    lam = full_symbol(grid.frequencies(), p)
    e_half = np.exp(lam * (dt / 2.0))
    e_full = e_half * e_half
    rhs = _rhs_factory(grid, cfg)

    def do_step(c):
        g1 = rhs(c)
        u2 = e_half * (c + 0.5 * dt * g1)
        g2 = rhs(u2)
        u3 = e_half * c + 0.5 * dt * g2
        g3 = rhs(u3)
        u4 = e_full * c + dt * e_half * g3
        g4 = rhs(u4)
        return e_full * c + (dt / 6.0) * (
            e_full * g1 + 2.0 * e_half * (g2 + g3) + g4
        )

    return do_step


def _etdrk4_stepper(grid: Grid, dt: float, p: SymbolParams, cfg: SolverConfig):
    lam = full_symbol(grid.frequencies(), p)
    z = lam * dt
    e_full = np.exp(z)
    e_half = np.exp(z / 2.0)
    # Cauchy-integral evaluation of the phi coefficients on a unit circle
    # around each z (stable through the removable singularity at z = 0).
    m_pts = 32
    theta = (np.arange(m_pts) + 0.5) * (2.0 * np.pi / m_pts)
    zeta = z[:, None] + np.exp(1j * theta)[None, :]
    ez = np.exp(zeta)
    q = dt * np.mean((np.exp(zeta / 2.0) - 1.0) / zeta, axis=1)
    f1 = dt * np.mean((-4.0 - zeta + ez * (4.0 - 3.0 * zeta + zeta**2)) / zeta**3, axis=1)
    f2 = dt * np.mean((2.0 + zeta + ez * (-2.0 + zeta)) / zeta**3, axis=1)
    f3 = dt * np.mean((-4.0 - 3.0 * zeta - zeta**2 + ez * (4.0 - zeta)) / zeta**3, axis=1)
    rhs = _rhs_factory(grid, cfg)

    def do_step(c):
        n_v = rhs(c)
        a = e_half * c + q * n_v
        n_a = rhs(a)
        b = e_half * c + q * n_a
        n_b = rhs(b)
        cc = e_half * a + q * (2.0 * n_b - n_v)
        n_c = rhs(cc)
        return e_full * c + f1 * n_v + 2.0 * f2 * (n_a + n_b) + f3 * n_c

    return do_step


def _make_stepper(grid: Grid, dt: float, p: SymbolParams, cfg: SolverConfig):
    if cfg.scheme == "ifrk4":
        return _ifrk4_stepper(grid, dt, p, cfg)
    return _etdrk4_stepper(grid, dt, p, cfg)


def step(u: SpectralField, dt: float, cfg: SolverConfig, p: SymbolParams) -> SpectralField:
    """Advance one step of size ``dt`` (standalone; recomputes coefficients)."""
    advance = _make_stepper(u.grid, dt, p, cfg)
    c = advance(u.coeffs)
    if not np.all(np.isfinite(c.view(float))):
        raise InstabilityError(dt)
    return SpectralField(u.grid, c)


def solve(u0: SpectralField, cfg: SolverConfig, p: SymbolParams) -> Trajectory:
    """Fixed-step integration on ``[0, t_end]`` recording every ``store_every`` steps."""
    grid = u0.grid
    n_steps = int(round(cfg.t_end / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    advance = _make_stepper(grid, cfg.dt, p, cfg)
    times = [0.0]
    states = [u0.coeffs.copy()]
    c = u0.coeffs.copy()
    for k in range(1, n_steps + 1):
        c = advance(c)
        if not np.all(np.isfinite(c.view(float))):
            raise InstabilityError(k * cfg.dt)
        if k % cfg.store_every == 0 or k == n_steps:
            times.append(k * cfg.dt)
            states.append(c.copy())
    return Trajectory(grid=grid, params=p, times=np.array(times), states=np.array(states))


def energy_balance(traj: Trajectory) -> np.ndarray:
    """Normalized residual of the quadratic energy identity.

    For the exact flow ``(1/2) d/dt ||u||^2 - ||D^(alpha/2) u||^2
    + ||D^(beta/2) u||^2 = 0`` (the transport term is energy-neutral).
    Returns the centered-difference residual divided by ``||u||^2`` at
    the interior stored times.
    """
    if traj.n_frames < 3:
        raise ValueError("need at least three stored frames")
    L = traj.grid.period
    xi = np.abs(traj.grid.frequencies())
    p = traj.params
    wa = np.zeros_like(xi)
    wb = np.zeros_like(xi)
    nz = xi > 0
    wa[nz] = xi[nz] ** p.alpha
    wb[nz] = xi[nz] ** p.beta
    dens = np.abs(traj.states) ** 2
    energy = L * np.sum(dens, axis=1)
    grow = L * np.sum(dens * wa, axis=1)
    damp = L * np.sum(dens * wb, axis=1)
    dt2 = traj.times[2:] - traj.times[:-2]
    dedt = (energy[2:] - energy[:-2]) / dt2
    res = 0.5 * dedt - grow[1:-1] + damp[1:-1]
    return res / energy[1:-1]


# ----------------------------------------------------------------------
# Picard iteration on the mild formulation
# ----------------------------------------------------------------------

@dataclass
class PicardResult:
    times: np.ndarray              # panel-edge output times (0 .. T)
    iterates: list                 # coefficient arrays (n_times, n) per iterate
    diffs: np.ndarray              # sup-over-nodes H^s successive differences
    ratios: np.ndarray             # diffs[k+1] / diffs[k]
    converged: bool
    s: float

    @property
    def fixed_point(self) -> np.ndarray:
        return self.iterates[-1][-1]

    @property
    def contraction_ratio(self) -> float:
        return float(np.max(self.ratios)) if len(self.ratios) else np.nan


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    w = np.ones_like(nodes)
    for i in range(len(nodes)):
        for j in range(len(nodes)):
            if i != j:
                w[i] /= (nodes[i] - nodes[j])
    return w


def _interp_rows(values: np.ndarray, nodes: np.ndarray, bary: np.ndarray, x: float) -> np.ndarray:
    d = x - nodes
    hit = np.where(np.abs(d) < 1e-14)[0]
    if hit.size:
        return values[hit[0]]
    c = bary / d
    return (c[:, None] * values).sum(axis=0) / c.sum()


def picard_iterate(
    u0: SpectralField,
    T: float,
    iters: int,
    p: SymbolParams,
    n_panels: int = 24,
    nodes_per_panel: int = 5,
    s: float = 2.0,
    tol: float = 1e-10,
    dealias: bool = True,
) -> PicardResult:
    """Run the mild-form Picard iteration on ``[0, T]``.

    Iterates are collocated at Gauss-Legendre nodes inside uniform time
    panels; the Duhamel integral is summed panel by panel with the
    semigroup evaluated exactly at every node, and partial panels use the
    degree ``nodes_per_panel - 1`` collocation interpolant.  Raises
    :class:`NonContractionError` when the successive-difference norms
    grow three times in a row.
    """
    if T <= 0.0:
        raise ValueError("horizon T must be positive")
    grid = u0.grid
    n = grid.n_modes
    xi = grid.frequencies()
    lam = full_symbol(xi, p)
    M, q = n_panels, nodes_per_panel
    ref_x, ref_w = np.polynomial.legendre.leggauss(q)
    bary = _barycentric_weights(ref_x)
    edges = np.linspace(0.0, T, M + 1)
    half = (edges[1] - edges[0]) / 2.0
    taus = (edges[:-1, None] + edges[1:, None]) / 2.0 + half * ref_x[None, :]

    def nl(c):
        return nonlinearity(SpectralField(grid, c), dealias=dealias).coeffs

    def propagate(c, dt_):
        return np.exp(lam * dt_) * c

    def free(t_):
        return propagate(u0.coeffs, t_)

    def duhamel(F, U, t_star, j_panel, ref_target=None):
        """integral_0^{t_star} S(t_star - tau) f(tau) dtau, t_star in panel j."""
        acc = np.zeros(n, dtype=complex)
        for i in range(j_panel):
            for g in range(q):
                acc += ref_w[g] * half * propagate(F[i, g], t_star - taus[i, g])
        lo = edges[j_panel]
        if t_star > lo:
            h2 = (t_star - lo) / 2.0
            mid = (t_star + lo) / 2.0
            for g in range(q):
                tg = mid + h2 * ref_x[g]
                # local reference coordinate of tg inside panel j
                xg = (tg - (edges[j_panel] + edges[j_panel + 1]) / 2.0) / half
                ug = _interp_rows(U[j_panel], ref_x, bary, xg)
                acc += ref_w[g] * h2 * propagate(nl(ug), t_star - tg)
        return acc

    # iterate 0: the free evolution at all nodes
    U = np.empty((M, q, n), dtype=complex)
    for i in range(M):
        for g in range(q):
            U[i, g] = free(taus[i, g])

    def edge_values(U, F):
        out = np.empty((M + 1, n), dtype=complex)
        out[0] = u0.coeffs
        for j in range(1, M + 1):
            out[j] = free(edges[j]) - duhamel(F, U, edges[j], j)
        return out

    def hs(c):
        return sobolev_norm(SpectralField(grid, c), s)

    iterates = []
    diffs = []
    ratios = []
    F = np.empty_like(U)
    for i in range(M):
        for g in range(q):
            F[i, g] = nl(U[i, g])
    iterates.append(edge_values(U, F))
    converged = False
    grow_streak = 0
    for it in range(iters):
        U_new = np.empty_like(U)
        for i in range(M):
            for g in range(q):
                U_new[i, g] = free(taus[i, g]) - duhamel(F, U, taus[i, g], i)
        d = max(hs(U_new[i, g] - U[i, g]) for i in range(M) for g in range(q))
        diffs.append(d)
        if len(diffs) > 1:
            ratios.append(diffs[-1] / diffs[-2] if diffs[-2] > 0 else 0.0)
            if diffs[-1] > diffs[-2]:
                grow_streak += 1
                if grow_streak >= 3:
                    raise NonContractionError(diffs)
            else:
                grow_streak = 0
        U = U_new
        for i in range(M):
            for g in range(q):
                F[i, g] = nl(U[i, g])
        iterates.append(edge_values(U, F))
        if d <= tol * max(1.0, hs(u0.coeffs)):
            converged = True
            break
    return PicardResult(
        times=edges,
        iterates=iterates,
        diffs=np.array(diffs),
        ratios=np.array(ratios),
        converged=converged,
        s=s,
    )


# ----------------------------------------------------------------------
# norms used by the solution theory
# ----------------------------------------------------------------------

def y_norm(traj: Trajectory, s: float, T: float, beta: float) -> float:
    """``sup_{0 < t <= T} ( ||u(t)||_{H^s} + t^{|s|/beta} ||u(t)||_{L^2} )``."""
    L = traj.grid.period
    xi = traj.grid.frequencies()
    w = (1.0 + xi * xi) ** s
    best = 0.0
    for i, t in enumerate(traj.times):
        if t <= 0.0 or t > T * (1.0 + 1e-12):
            continue
        dens = np.abs(traj.states[i]) ** 2
        hs = np.sqrt(L * np.sum(w * dens))
        l2 = np.sqrt(L * np.sum(dens))
        best = max(best, hs + t ** (abs(s) / beta) * l2)
    return float(best)


def xbs_norm(u_hat: np.ndarray, xi: np.ndarray, tau: np.ndarray, b: float, s: float, p: SymbolParams) -> float:
    """Dispersive-weighted space-time norm of a gridded transform.

    ``u_hat[i, j]`` holds the transform at ``(xi[i], tau[j])``; the weight
    is ``< |tau + xi|xi|| + ||xi|^alpha - |xi|^beta| >^b <xi>^s`` and the
    L^2 sum uses the cell measure ``dxi * dtau``.
    """
    if u_hat.shape != (len(xi), len(tau)):
        raise ValueError("u_hat must be (n_xi, n_tau)")
    dxi = float(np.abs(xi[1] - xi[0])) if len(xi) > 1 else 1.0
    dtau = float(np.abs(tau[1] - tau[0])) if len(tau) > 1 else 1.0
    mod = np.abs(tau[None, :] + (xi * np.abs(xi))[:, None])
    mod = mod + np.abs(growth_dissipation_symbol(xi, p))[:, None]
    w2 = (1.0 + mod * mod) ** b * ((1.0 + xi * xi) ** s)[:, None]
    return float(np.sqrt(np.sum(w2 * np.abs(u_hat) ** 2) * dxi * dtau))


def spacetime_transform(traj: Trajectory, pad: int = 4, window: bool = True):
    """FFT a trajectory in time (Hann-windowed, zero-padded).

    Returns ``(u_hat, xi, tau)`` with ``u_hat`` of shape (n_xi, n_tau),
    approximating the continuous time transform via a Riemann sum.
    """
    n_t = traj.n_frames
    dt = float(traj.times[1] - traj.times[0])
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_t) / (n_t - 1)) if window else np.ones(n_t)
    data = traj.states * w[:, None]
    n_fft = pad * n_t
    u_hat = np.fft.fft(data, n=n_fft, axis=0) * dt
    tau = 2.0 * np.pi * np.fft.fftfreq(n_fft, d=dt)
    order = np.argsort(tau)
    return u_hat[order].T.copy(), traj.grid.frequencies(), tau[order]


# ----------------------------------------------------------------------
# binary snapshots
# ----------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIdddI")
_FRAME_T = struct.Struct("<d")


def write_snapshot(path, traj: Trajectory) -> None:
    """Write a trajectory in the versioned little-endian binary layout."""
    n = traj.grid.n_modes
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                SNAPSHOT_MAGIC,
                SNAPSHOT_VERSION,
                n,
                traj.grid.period,
                traj.params.alpha,
                traj.params.beta,
                traj.n_frames,
            )
        )
        buf = np.empty(2 * n, dtype="<f8")
        for i in range(traj.n_frames):
            fh.write(_FRAME_T.pack(float(traj.times[i])))
            buf[0::2] = traj.states[i].real
            buf[1::2] = traj.states[i].imag
            fh.write(buf.tobytes())


def read_snapshot(path) -> Trajectory:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, n, period, alpha, beta, n_frames = _HEADER.unpack(head)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError("not a spectral snapshot file")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        grid = Grid(n, period)
        p = SymbolParams(alpha, beta)
        times = np.empty(n_frames)
        states = np.empty((n_frames, n), dtype=complex)
        for i in range(n_frames):
            (times[i],) = _FRAME_T.unpack(fh.read(_FRAME_T.size))
            raw = np.frombuffer(fh.read(16 * n), dtype="<f8")
            states[i] = raw[0::2] + 1j * raw[1::2]
    return Trajectory(grid=grid, params=p, times=times, states=states)
