"""Fractional heat kernel ``K_t`` of ``exp(-t(-Delta)^alpha)``.

Closed forms exist for alpha = 1 (Gauss-Weierstrass) and alpha = 1/2
(Poisson).  For other alpha the kernel is synthesized spectrally from the
multiplier ``exp(-t|xi|^(2 alpha))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _fft
from .grid import SpaceTimeGrid

__all__ = [
    "ResolutionError",
    "KernelSlice",
    "EnvelopeReport",
    "GradientBoundReport",
    "heat_kernel",
    "poisson_kernel",
    "spectral_kernel",
    "multiplier",
    "min_resolvable_time",
    "envelope",
    "envelope_report",
    "gradient_bound_check",
]

GUARD = 1e-12
EPS_NEG = 1e-8
# largest synthesis torus per axis used by the automatic box extension
_MAX_EXTENDED = {1: 1 << 16, 2: 1 << 11}


class ResolutionError(ValueError):
    """The multiplier is not negligible at the grid's largest frequency."""

    def __init__(self, message: str, t_min: float):
        super().__init__(message)
        self.t_min = t_min


def _radius(x, n: int) -> NDArray:
    x = np.asarray(x, dtype=float)
    if n == 1 or x.ndim == 0:
        return np.abs(x)
    if x.shape[-1] != n:
        raise ValueError(f"points must have a trailing axis of length {n}")
    return np.sqrt(np.sum(x * x, axis=-1))


def heat_kernel(t: float, x, n: int):
    """``(4 pi t)^(-n/2) exp(-|x|^2 / (4t))``.

    ``x`` holds either distances ``|x|`` or points with a trailing axis of
    length ``n``.  The ``t**(-n/2)`` factor is what the Fourier definition
    and unit mass require.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    r = _radius(x, n)
    return (4 * np.pi * t) ** (-n / 2) * np.exp(-(r * r) / (4 * t))


def poisson_kernel(t: float, x, n: int):
    """``pi^(-(n+1)/2) Gamma((n+1)/2) t (t^2 + |x|^2)^(-(n+1)/2)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    r = _radius(x, n)
    c = math.gamma((n + 1) / 2) / np.pi ** ((n + 1) / 2)
    return c * t * (t * t + r * r) ** (-(n + 1) / 2)


def multiplier(abs_xi: NDArray, alpha: float, t: float) -> NDArray:
    """Fourier symbol of the semigroup, ``exp(-t |xi|^(2 alpha))``."""
    return np.exp(-t * abs_xi ** (2 * alpha))


def min_resolvable_time(alpha: float, grid: SpaceTimeGrid, guard: float = GUARD) -> float:
    """Smallest ``t`` with ``exp(-t xi_max^(2 alpha)) <= guard``."""
    return -math.log(guard) / grid.xi_max ** (2 * alpha)


def envelope(alpha: float, t: float, r, n: int):
    """Two-sided comparison profile ``t (t^(1/(2 alpha)) + |x|)^(-(n + 2 alpha))``."""
    return t * (t ** (1 / (2 * alpha)) + np.asarray(r, dtype=float)) ** (-(n + 2 * alpha))


@dataclass(frozen=True, eq=False)
class KernelSlice:
    """Kernel samples on the spatial points of ``grid``.

    ``values`` approximate the kernel on ``R^n`` when ``extend > 1`` (the
    synthesis runs on a torus ``extend`` times larger so the periodic images
    are far away).  ``total_mass`` is the integral over the synthesis torus;
    with ``extend == 1`` it equals ``integrate_slice`` of ``values``.
    """

    grid: SpaceTimeGrid
    alpha: float
    t: float
    values: NDArray
    extend: int = 1
    total_mass: float = 1.0
    eps_neg: float = EPS_NEG

    @property
    def window_mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    @property
    def min_value(self) -> float:
        return float(self.values.min())


def _auto_extend(grid: SpaceTimeGrid) -> int:
    p = 1
    while 2 * p * grid.N <= _MAX_EXTENDED[grid.n] and p < 64:
        p *= 2
    return p


def _rfft_axes(grid: SpaceTimeGrid) -> list[NDArray]:
    """Per-axis angular frequencies in ``rfftn`` layout (last axis halved)."""
    full = 2.0 * np.pi * np.fft.fftfreq(grid.N, d=grid.dx)
    half = 2.0 * np.pi * np.fft.rfftfreq(grid.N, d=grid.dx)
    return np.meshgrid(*([full] * (grid.n - 1) + [half]), indexing="ij")


def _origin_phase(grid: SpaceTimeGrid) -> NDArray:
    """``(-1)^(m_1 + ... + m_n)``: shifts the inverse DFT to samples starting at ``-L/2``."""
    m_full = np.abs(np.fft.fftfreq(grid.N, d=1.0 / grid.N))
    m_half = np.fft.rfftfreq(grid.N, d=1.0 / grid.N)
    mesh = np.meshgrid(*([m_full] * (grid.n - 1) + [m_half]), indexing="ij")
    return (-1.0) ** np.rint(sum(mesh))


def _synthesize(spectrum: NDArray, grid: SpaceTimeGrid) -> NDArray:
    """Inverse-transform a Hermitian half spectrum to samples at ``grid.x``."""
    axes = tuple(range(grid.n))
    return _fft.irfftn(spectrum * _origin_phase(grid), s=grid.slice_shape, axes=axes) / grid.cell_volume


def _extended(grid: SpaceTimeGrid, extend: int | None) -> tuple[SpaceTimeGrid, int]:
    p = _auto_extend(grid) if extend is None else int(extend)
    if p < 1:
        raise ValueError("extend must be >= 1")
    return SpaceTimeGrid(grid.n, grid.L * p, grid.N * p, 1.0, 2), p


def _window(grid: SpaceTimeGrid, p: int) -> tuple[slice, ...]:
    off = (p - 1) * grid.N // 2
    return tuple(slice(off, off + grid.N) for _ in range(grid.n))


def spectral_kernel(
    alpha: float,
    t: float,
    grid: SpaceTimeGrid,
    *,
    waive_guard: bool = False,
    extend: int | None = None,
    eps_neg: float = EPS_NEG,
) -> KernelSlice:
    """Synthesize ``K_t`` from its multiplier by an inverse DFT.

    Parameters
    ----------
    alpha : float
        Order in ``(0, 1]``.
    t : float
        Time, positive.  Unless ``waive_guard`` is set, ``t`` must satisfy
        ``exp(-t xi_max^(2 alpha)) <= 1e-12`` so that truncating the spectrum
        at the grid's Nyquist frequency is harmless.
    grid : SpaceTimeGrid
        Only the spatial part is used.
    extend : int, optional
        Synthesis torus side as a multiple of ``grid.L`` (same spacing).
        ``1`` gives the periodic kernel of the torus itself; the default
        picks the largest power of two within a memory budget.

    Raises
    ------
    ResolutionError
        If the guard fails; ``err.t_min`` is the smallest admissible time.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if t <= 0:
        raise ValueError("t must be positive")
    t_min = min_resolvable_time(alpha, grid)
    if t < t_min and not waive_guard:
        raise ResolutionError(
            f"t={t:g} is below the resolvable minimum {t_min:.4g} for this grid (alpha={alpha})", t_min
        )
    big, p = _extended(grid, extend)
    full = _synthesize(multiplier(big.rfft_abs_xi, alpha, t), big)
    mass = float(full.sum() * big.cell_volume)
    return KernelSlice(grid, alpha, t, np.ascontiguousarray(full[_window(grid, p)]), p, mass, eps_neg)


def spectral_gradient(alpha: float, t: float, grid: SpaceTimeGrid, *, extend: int | None = None,
                      waive_guard: bool = False) -> list[NDArray]:
    """Components of ``grad K_t`` on the grid by spectral differentiation."""
    t_min = min_resolvable_time(alpha, grid)
    if t < t_min and not waive_guard:
        raise ResolutionError(f"t={t:g} is below the resolvable minimum {t_min:.4g}", t_min)
    big, p = _extended(grid, extend)
    mult = multiplier(big.rfft_abs_xi, alpha, t)
    out = []
    for xi_ax in _rfft_axes(big):
        # the unpaired Nyquist mode cannot carry an odd derivative
        xi_ax = np.where(np.isclose(np.abs(xi_ax), np.pi / big.dx), 0.0, xi_ax)
        vals = _synthesize(1j * xi_ax * mult, big)
        out.append(np.ascontiguousarray(vals[_window(grid, p)]))
    return out


@dataclass(frozen=True)
class EnvelopeReport:
    """Empirical two-sided envelope constants and lower-bound pair ``(sigma, kappa)``."""

    alpha: float
    t: float
    n: int
    c_lower: float
    c_upper: float
    sigma: float
    kappa: float
    grid: dict
    region_radius: float
    kappa_table: list = field(default_factory=list)

    @property
    def spread(self) -> float:
        return self.c_upper / self.c_lower

    def to_record(self) -> dict:
        return {
            "alpha": self.alpha,
            "t": self.t,
            "n": self.n,
            "c_lower": self.c_lower,
            "c_upper": self.c_upper,
            "sigma": self.sigma,
            "kappa": self.kappa,
            "grid": self.grid,
        }


_SIGMA_LADDER = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0)


def envelope_report(
    alpha: float,
    t: float,
    grid: SpaceTimeGrid,
    region_radius: float | None = None,
    *,
    waive_guard: bool = False,
) -> EnvelopeReport:
    """Pointwise ratio of the kernel to the comparison profile over a window.

    ``c_lower``/``c_upper`` are the min/max of ``K_t / envelope`` over
    ``|x| <= region_radius`` (default ``L/4``).  ``sigma`` is the largest
    value on a fixed ladder whose ball ``|x| <= sigma t^(1/(2 alpha))`` fits in
    the window, and ``kappa = inf t^(n/(2 alpha)) K_t`` over that ball.
    """
    if not 0 < alpha < 1:
        raise ValueError("the two-sided envelope is stated for alpha in (0, 1)")
    rr = grid.L / 4 if region_radius is None else float(region_radius)
    if rr > grid.L / 4 + 1e-12:
        raise ValueError("region_radius must not exceed L/4")
    ks = spectral_kernel(alpha, t, grid, waive_guard=waive_guard)
    r = grid.radius
    inside = r <= rr
    vals = ks.values[inside]
    if vals.min() < -ks.eps_neg:
        raise ValueError(f"kernel undershoots to {vals.min():.3e} inside the window")
    ratio = vals / envelope(alpha, t, r[inside], grid.n)
    scale = t ** (1 / (2 * alpha))
    table = []
    for s in _SIGMA_LADDER:
        if s * scale > rr:
            break
        ball = r <= s * scale
        kap = float(ks.values[ball].min() * t ** (grid.n / (2 * alpha)))
        if kap <= 0:
            break
        table.append((s, kap))
    if not table:
        raise ValueError("window too small to resolve a lower-bound ball; enlarge L or shrink t")
    sigma, kappa = table[-1]
    return EnvelopeReport(
        alpha, t, grid.n, float(ratio.min()), float(ratio.max()), sigma, kappa, grid.describe(), rr, table
    )


@dataclass(frozen=True)
class GradientBoundReport:
    """``sup |grad K_1| (1 + |x|)^(n+1)`` on a grid and on its 2x refinement."""

    alpha: float
    value: float
    refined_value: float
    region_radius: float

    @property
    def relative_change(self) -> float:
        return abs(self.refined_value - self.value) / self.value


def _weighted_gradient_sup(alpha: float, grid: SpaceTimeGrid, rr: float, waive_guard: bool) -> float:
    comps = spectral_gradient(alpha, 1.0, grid, waive_guard=waive_guard)
    mag = np.sqrt(sum(c * c for c in comps))
    r = grid.radius
    inside = r <= rr
    return float(np.max(mag[inside] * (1 + r[inside]) ** (grid.n + 1)))


def gradient_bound_check(alpha: float, grid: SpaceTimeGrid, region_radius: float | None = None, *,
                         waive_guard: bool = False) -> GradientBoundReport:
    """Empirical constant in ``|grad K_1(x)| <~ (1 + |x|)^(-n-1)``, at two resolutions."""
    rr = grid.L / 4 if region_radius is None else float(region_radius)
    fine = SpaceTimeGrid(grid.n, grid.L, 2 * grid.N, grid.T, grid.M)
    return GradientBoundReport(
        alpha,
        _weighted_gradient_sup(alpha, grid, rr, waive_guard),
        _weighted_gradient_sup(alpha, fine, rr, waive_guard),
        rr,
    )
