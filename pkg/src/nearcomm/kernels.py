"""Smoothing kernels built from the standard C-infinity bump.

Two kernels are provided:

* a nonnegative mollifier f whose Fourier transform is supported in
  (-1/2, 1/2), realized as f = psi^2 where psi has transform
  exp(-1/(1 - (4x)^2)) on (-1/4, 1/4).  Smoothing a pair (a, b) with it
  contracts b onto the eigenvalue band |lambda_i - lambda_j| < 1/2 of a
  while moving b by at most k1 * ||[a, b]||;

* a smooth monotone step ramping 0 -> 1 across (-1/4, 1/4), whose
  derivative is a normalized bump.  Conjugation-Lipschitz constant
  c_const = integral of |t * (Fourier transform of the ramp slope)|...

Both kernels are evaluated where they are needed (eigenvalue differences,
eigenvalues) by Gauss-Legendre quadrature of the defining integrals, not by
interpolation of stored samples.  The constants k1 and c_const are computed
by checked quadrature and reported in diagnostics; nothing downstream
hard-codes them.
"""

from __future__ import annotations

import dataclasses
from functools import lru_cache

import numpy as np
import scipy.optimize

from ._quad import gl_nodes, simpson_uniform
from .errors import QuadratureError
from .hermitian import HermitianMatrix, as_array, hermitian_part, op_norm, \
    commutator, func_calc, spectral_decomp

BAND_HALF_WIDTH = 0.5          # Fourier support of the mollifier: (-1/2, 1/2)
RAMP_HALF_WIDTH = 0.25         # bump support for both kernels: (-1/4, 1/4)
_TIME_CUTOFF = 1200.0          # |psi(t)|^2 ~ 1e-19 here; tails are negligible
_FREQ_CUTOFF = 1000.0          # |slope transform| ~ 2e-9 here, tail ~ 1e-7


def _bump(u: np.ndarray) -> np.ndarray:
    """exp(-1/(1-u^2)) on (-1, 1), 0 outside; vectorized and warning-free."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    if np.any(inside):
        w = u[inside]
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            out[inside] = np.exp(-1.0 / (1.0 - w * w))
    return out


def _bump_quarter(x: np.ndarray) -> np.ndarray:
    """Bump rescaled to (-1/4, 1/4)."""
    return _bump(4.0 * np.asarray(x, dtype=float))


@lru_cache(maxsize=8)
def _autocorr_norm(k: int = 256) -> float:
    """A(0) = integral of the squared quarter-bump."""
    x, w = gl_nodes(-RAMP_HALF_WIDTH, RAMP_HALF_WIDTH, k)
    return float(w @ (_bump_quarter(x) ** 2))


def _autocorr(omega: np.ndarray, k: int = 200) -> np.ndarray:
    """A(omega) = integral g(y) g(y + omega) dy for the quarter-bump g.

    Supported in (-1/2, 1/2); evaluated by Gauss-Legendre on the overlap
    interval, vectorized over omega.
    """
    om = np.abs(np.asarray(omega, dtype=float))
    out = np.zeros_like(om)
    live = om < 2.0 * RAMP_HALF_WIDTH
    if not np.any(live):
        return out
    omv = om[live]
    lo = -RAMP_HALF_WIDTH
    hi = RAMP_HALF_WIDTH - omv                      # overlap upper edge
    base, wts = np.polynomial.legendre.leggauss(k)
    half = 0.5 * (hi - lo)
    nodes = lo + half[:, None] * (base[None, :] + 1.0)
    vals = _bump_quarter(nodes) * _bump_quarter(nodes + omv[:, None])
    out[live] = (vals @ wts) * half
    return out


def _psi(t: np.ndarray, k: int = 96) -> np.ndarray:
    """psi(t) = (1/pi) * integral_0^{1/4} g(x) cos(x t) dx, chunked in t."""
    t = np.asarray(t, dtype=float)
    x, w = gl_nodes(0.0, RAMP_HALF_WIDTH, k)
    gw = _bump_quarter(x) * w
    out = np.empty_like(t)
    flat = t.ravel()
    res = out.ravel()
    step = 65536
    for i in range(0, len(flat), step):
        block = flat[i:i + step]
        res[i:i + step] = np.cos(np.outer(block, x)) @ gw
    return out / np.pi


@dataclasses.dataclass(frozen=True)
class MollifierKernel:
    """Band-limiting mollifier with its Fourier samples and constants.

    fourier_values are samples of the transfer function F on fourier_grid;
    F vanishes identically outside (-1/2, 1/2), so the endpoint samples
    are exactly zero.  k1 = integral f(t) |t| dt controls how far smoothing
    can move an operator: ||b - b1|| <= k1 * ||[a, b]||.
    """

    grid_points: int
    fourier_grid: np.ndarray
    fourier_values: np.ndarray
    k1: float
    unit_mass_check: float

    def multiplier(self, omega) -> np.ndarray:
        """Transfer function F(omega); exactly 0.0 for |omega| >= 1/2.

        The zero outside the band is assigned, not computed, so banding
        statements hold structurally.
        """
        om = np.asarray(omega, dtype=float)
        return _autocorr(om) / _autocorr_norm()

    def time_profile(self, t) -> np.ndarray:
        """The mollifier f(t) itself (unit mass, nonnegative)."""
        z = _autocorr_norm() / (2.0 * np.pi)
        return _psi(np.asarray(t, dtype=float)) ** 2 / z

    def dump(self) -> dict:
        return {
            "grid": self.fourier_grid.tolist(),
            "values": self.fourier_values.tolist(),
            "k1": self.k1,
        }


@dataclasses.dataclass(frozen=True)
class StepKernel:
    """Smooth monotone 0 -> 1 ramp across (-1/4, 1/4) with its constant.

    c_const bounds commutator transfer through the ramp:
    ||[b, step(a)]|| <= c_const * ||[a, b]||.
    """

    grid_points: int
    ramp_grid: np.ndarray
    ramp_values: np.ndarray
    c_const: float

    def __call__(self, x) -> np.ndarray:
        return _step_eval(np.asarray(x, dtype=float))

    def dump(self) -> dict:
        return {
            "grid": self.ramp_grid.tolist(),
            "values": self.ramp_values.tolist(),
            "c_const": self.c_const,
        }


@lru_cache(maxsize=8)
def _slope_norm(k: int = 256) -> float:
    x, w = gl_nodes(-RAMP_HALF_WIDTH, RAMP_HALF_WIDTH, k)
    return float(w @ _bump_quarter(x))


def _step_eval(x: np.ndarray, k: int = 64) -> np.ndarray:
    """Cumulative integral of the normalized quarter-bump, clamped to {0, 1}."""
    scalar = np.isscalar(x) or np.asarray(x).ndim == 0
    v = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.where(v >= RAMP_HALF_WIDTH, 1.0, 0.0)
    mid = (v > -RAMP_HALF_WIDTH) & (v < RAMP_HALF_WIDTH)
    if np.any(mid):
        tv = v[mid]
        base, wts = np.polynomial.legendre.leggauss(k)
        half = 0.5 * (tv + RAMP_HALF_WIDTH)
        nodes = -RAMP_HALF_WIDTH + half[:, None] * (base[None, :] + 1.0)
        # the cumulative quadrature can overshoot [0, 1] by rounding noise
        out[mid] = np.clip((_bump_quarter(nodes) @ wts) * half / _slope_norm(),
                           0.0, 1.0)
    return float(out[0]) if scalar else out


def _slope_transform(t: np.ndarray, k: int = 256) -> np.ndarray:
    """(1/2pi) * integral phi(s) e^{-ist} ds for the normalized slope phi.

    phi is even, so the transform is real: (1/pi) integral_0^{1/4} phi cos(ts).
    The order k must resolve ~t/8 oscillation nodes; the default covers the
    integration range used for c_const with a 2x margin.
    """
    t = np.asarray(t, dtype=float)
    x, w = gl_nodes(0.0, RAMP_HALF_WIDTH, k)
    pw = _bump_quarter(x) * w / _slope_norm()
    flat = t.ravel()
    out = np.empty_like(flat)
    step = 65536
    for i in range(0, len(flat), step):
        block = flat[i:i + step]
        out[i:i + step] = np.cos(np.outer(block, x)) @ pw
    return (out / np.pi).reshape(t.shape)


def _abs_transform_integral(scan_step: float, gl_order: int,
                            transform_order: int = 256) -> float:
    """integral over R of |slope transform|, by sign-segmented quadrature.

    The transform is real and oscillatory; |.| has corners at its zeros, so
    each smooth segment between consecutive zeros is integrated separately.
    """
    grid = np.arange(0.0, _FREQ_CUTOFF + scan_step, scan_step)
    vals = _slope_transform(grid, transform_order)
    cuts = [0.0]
    sign_change = np.where(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    f_scalar = lambda t: float(_slope_transform(np.array([t]), transform_order)[0])
    for i in sign_change:
        cuts.append(float(scipy.optimize.brentq(
            f_scalar, grid[i], grid[i + 1], xtol=1e-13)))
    cuts.append(_FREQ_CUTOFF)
    base, wts = np.polynomial.legendre.leggauss(gl_order)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (hi - lo)
        nodes = lo + half * (base + 1.0)
        total += float(np.abs(_slope_transform(nodes, transform_order)) @ wts) * half
    tail = np.max(np.abs(_slope_transform(
        np.linspace(_FREQ_CUTOFF, _FREQ_CUTOFF + 100, 64), transform_order)))
    if tail > 1e-8:
        raise QuadratureError("slope transform tail not negligible at cutoff")
    return 2.0 * total


@lru_cache(maxsize=8)
def build_mollifier(grid_points: int = 256) -> MollifierKernel:
    """Construct the band-limiting mollifier kernel.

    grid_points controls the stored Fourier samples and the density of the
    time-domain quadrature used for k1; the defining integrals are checked
    by grid refinement and raise QuadratureError on disagreement.
    """
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    grid = np.linspace(-BAND_HALF_WIDTH, BAND_HALF_WIDTH, grid_points)
    a0 = _autocorr_norm()
    values = _autocorr(grid) / a0

    # k1 and the mass check share one fine time grid (integrands psi^2 * t
    # and psi^2); Richardson via the half-density subgrid.
    n_intervals = 8 * grid_points * 25          # even by construction
    t = np.linspace(0.0, _TIME_CUTOFF, 2 * n_intervals + 1)
    h = _TIME_CUTOFF / (2 * n_intervals)
    psi2 = _psi(t) ** 2
    z = a0 / (2.0 * np.pi)

    def checked(y, label):
        fine = simpson_uniform(y, h)
        coarse = simpson_uniform(y[::2], 2 * h)
        if abs(fine - coarse) > 1e-8 * max(1.0, abs(fine)):
            raise QuadratureError(f"{label}: refinement moved by "
                                  f"{abs(fine - coarse):.3e}")
        return fine

    k1 = 2.0 * checked(psi2 * t, "k1") / z
    mass = 2.0 * checked(psi2, "unit mass") / z

    grid.flags.writeable = False
    values.flags.writeable = False
    return MollifierKernel(grid_points=grid_points, fourier_grid=grid,
                           fourier_values=values, k1=k1, unit_mass_check=mass)


@lru_cache(maxsize=8)
def build_step(grid_points: int = 256) -> StepKernel:
    """Construct the smooth step kernel and its commutator constant."""
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    grid = np.linspace(-RAMP_HALF_WIDTH, RAMP_HALF_WIDTH, grid_points)
    values = _step_eval(grid)
    c1 = _abs_transform_integral(scan_step=0.25, gl_order=24, transform_order=256)
    c2 = _abs_transform_integral(scan_step=0.125, gl_order=48, transform_order=384)
    if abs(c1 - c2) > 1e-6 * max(1.0, abs(c2)):
        raise QuadratureError(f"c_const: refinement moved by {abs(c1 - c2):.3e}")
    grid.flags.writeable = False
    values.flags.writeable = False
    return StepKernel(grid_points=grid_points, ramp_grid=grid,
                      ramp_values=values, c_const=c2)


def band_smooth(a, b, kernel: MollifierKernel | None = None) -> HermitianMatrix:
    """Average b over the spectral flow of a, band-limiting it to |dl| < 1/2.

    In the eigenbasis of a the result is entrywise b_ij * F(l_i - l_j);
    entries with |l_i - l_j| >= 1/2 are exactly zero.  Guarantees
    ||b - b1|| <= k1 * ||[a, b]|| and ||[a, b1]|| <= ||[a, b]||.
    """
    if kernel is None:
        kernel = build_mollifier()
    dec = spectral_decomp(a)
    v = dec.basis
    bt = v.conj().T @ as_array(b) @ v
    delta = dec.eigenvalues[:, None] - dec.eigenvalues[None, :]
    mult = kernel.multiplier(delta)
    return hermitian_part(v @ (bt * mult) @ v.conj().T)


def lipschitz_commutator_check(a, b, kernel: StepKernel | None = None):
    """Measure ||[b, step(a)]|| against c_const * ||[a, b]||.

    Returns (lhs, rhs); lhs <= rhs up to quadrature slack.
    """
    if kernel is None:
        kernel = build_step()
    fa = func_calc(a, kernel)
    lhs = op_norm(commutator(as_array(b), fa.m))
    rhs = kernel.c_const * op_norm(commutator(a, b))
    return lhs, rhs


def kernel_dump(mollifier: MollifierKernel | None = None,
                step: StepKernel | None = None) -> dict:
    """Combined kernel fixture: Fourier samples plus both constants."""
    if mollifier is None:
        mollifier = build_mollifier()
    if step is None:
        step = build_step()
    return {
        "grid": mollifier.fourier_grid.tolist(),
        "values": mollifier.fourier_values.tolist(),
        "k1": mollifier.k1,
        "c_const": step.c_const,
    }
