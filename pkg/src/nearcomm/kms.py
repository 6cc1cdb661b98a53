"""Finite-dimensional Gibbs/KMS laboratory.

Everything here is exact linear algebra: the modular flow of a Gibbs
density is conjugation by matrix exponentials, entire in the complex time
parameter, so KMS boundary identities and perturbed functionals can be
computed and verified directly instead of via strip-analytic interpolation.

The centerpiece is a two-state comparison: two Hamiltonian perturbations
b1, b2 with respective invariant projections e1, e2 are coupled through a
doubled (block-diagonal) flow; a partial isometry v built from e1 e2 by
functional calculus carries e2 to e1, and the flat function
F(z) = phi(v beta_z(v*)) bounds |omega_2(e2) - omega_1(e1)| by
|c| * C * M * ||b1 - b2||, where C depends only on the fixed taper function
used to build v and M is the larger functional norm.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import fresnel

from ._quad import _leggauss, gl_nodes
from .errors import NearcommError, SpectralGapMissing
from .hermitian import HermitianMatrix, as_array, commutator, hermitian_part, op_norm
from .serialize import fmt_float

PROJECTION_ATOL = 1e-10
UNITARY_ATOL = 1e-10
INVARIANCE_ATOL = 1e-8

# taper profile: 0 below 1/2, cubic ramp on [1/2, 3/4], t^(-1/2) on
# [3/4, 9/8], cubic ramp back to 0 on [9/8, 11/8]
_KNOTS = (0.5, 0.75, 1.125, 1.375)


def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values))
    return m + math.log(float(np.sum(np.exp(values - m))))


@dataclasses.dataclass(frozen=True)
class KmsState:
    """Gibbs state exp(-c h)/Z for the flow generated by h."""

    h: HermitianMatrix
    c: float
    rho: np.ndarray
    z_partition: float

    def expect(self, x) -> complex:
        return complex(np.trace(self.rho @ as_array(x)))


def gibbs(h, c: float) -> KmsState:
    """Gibbs state at inverse-temperature parameter c (either sign, nonzero)."""
    if c == 0:
        raise ValueError("c must be nonzero")
    hm = hermitian_part(as_array(h))
    lam, v = np.linalg.eigh(hm.m)
    exponents = -c * lam
    shift = float(np.max(exponents))
    weights = np.exp(exponents - shift)
    rho = hermitian_part((v * (weights / weights.sum())) @ v.conj().T).m
    z = math.exp(_logsumexp(exponents))
    return KmsState(h=hm, c=float(c), rho=rho, z_partition=z)


def _flow_factor(h: np.ndarray, z: complex) -> np.ndarray:
    """exp(izh) for complex z, via eigendecomposition (exact, entire)."""
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(1j * z * lam)) @ v.conj().T


def boundary_residual(rho: np.ndarray, h, c: float, x, y, t_samples) -> float:
    """max_t |F(t+ic) - Tr(rho alpha_t(y) x)| with F(z) = Tr(rho x alpha_z(y)).

    Zero (to rounding) exactly when rho is the Gibbs density for (h, c);
    arbitrary densities make this a negative control.
    """
    hm = as_array(h)
    xm, ym = as_array(x), as_array(y)
    lam, v = np.linalg.eigh(hermitian_part(hm).m)

    def alpha(z, w):
        e = (v * np.exp(1j * z * lam)) @ v.conj().T
        e_inv = (v * np.exp(-1j * z * lam)) @ v.conj().T
        return e @ w @ e_inv

    worst = 0.0
    for t in t_samples:
        lhs = np.trace(rho @ xm @ alpha(t + 1j * c, ym))
        rhs = np.trace(rho @ alpha(float(t), ym) @ xm)
        worst = max(worst, abs(complex(lhs - rhs)))
    return worst


def kms_verify(state: KmsState, x, y, t_samples=(-1.0, 0.0, 1.0)) -> float:
    return boundary_residual(state.rho, state.h.m, state.c, x, y, t_samples)


@dataclasses.dataclass(frozen=True)
class PerturbedFunctional:
    """Positive functional with density exp(-c(h+b)) / Z of the base state.

    Unnormalized on purpose: weight = value(1) is the functional norm, the
    quantity the two-state inequality needs.
    """

    base: KmsState
    perturb: HermitianMatrix
    density: np.ndarray
    weight: float

    def value(self, x) -> complex:
        return complex(np.trace(self.density @ as_array(x)))

    def normalized_density(self) -> np.ndarray:
        return self.density / self.weight


def perturbed_functional(state: KmsState, b) -> PerturbedFunctional:
    bm = hermitian_part(as_array(b))
    c = state.c
    lam_h = np.linalg.eigvalsh(state.h.m)
    mu, w = np.linalg.eigh(state.h.m + bm.m)
    log_z_base = _logsumexp(-c * lam_h)
    density = hermitian_part((w * np.exp(-c * mu - log_z_base)) @ w.conj().T).m
    weight = math.exp(_logsumexp(-c * mu) - log_z_base)
    return PerturbedFunctional(base=state, perturb=bm, density=density, weight=weight)


@dataclasses.dataclass(frozen=True)
class SymmetryActionResult:
    """Image of a Gibbs state under the corrected action of Ad w."""

    density: np.ndarray
    residual: float
    cocycle_norm: float


def trace_norm(x: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(x, compute_uv=False)))


def symmetry_action(state: KmsState, w) -> SymmetryActionResult:
    """Push the state through Ad w and undo the motion with the flow cocycle.

    The correction multiplies w rho w* by the analytically continued cocycle
    alpha_{ic}(w) w*, which restores exp(-ch)/Z exactly; the reported
    residual is the trace-norm distance to the original state and certifies
    that inner symmetries act trivially.
    """
    wm = as_array(w)
    n = wm.shape[0]
    if op_norm(wm.conj().T @ wm - np.eye(n)) > UNITARY_ATOL:
        raise ValueError("w is not unitary within 1e-10")
    c, hm = state.c, state.h.m
    e_minus = _flow_factor(hm, 1j * c)      # exp(-c h)
    e_plus = _flow_factor(hm, -1j * c)      # exp(c h)
    cocycle = e_minus @ wm @ e_plus @ wm.conj().T
    raw = cocycle @ wm @ state.rho @ wm.conj().T
    density = hermitian_part(raw).m
    density = density / float(np.trace(density).real)
    return SymmetryActionResult(density=density,
                                residual=trace_norm(density - state.rho),
                                cocycle_norm=op_norm(cocycle))


def _taper_coeffs():
    """Hermite cubics joining 0 to t^(-1/2) and back, matching values/slopes."""
    t0, t1, t2, t3 = _KNOTS
    def hermite(a, b, fa, fb, da, db):
        # cubic p with p(a)=fa, p(b)=fb, p'(a)=da, p'(b)=db, power basis at a
        h = b - a
        c0, c1 = fa, da
        c2 = (3 * (fb - fa) / h - 2 * da - db) / h
        c3 = (2 * (fa - fb) / h + da + db) / (h * h)
        return np.array([c0, c1, c2, c3]), a
    up = hermite(t0, t1, 0.0, t1 ** -0.5, 0.0, -0.5 * t1 ** -1.5)
    down = hermite(t2, t3, t2 ** -0.5, 0.0, -0.5 * t2 ** -1.5, 0.0)
    return up, down


def taper(t) -> np.ndarray:
    """The fixed isometry-building function: t^(-1/2) on [3/4, 9/8], smooth
    cubic ramps to 0 outside, identically 0 below 1/2."""
    t0, t1, t2, t3 = _KNOTS
    (cu, au), (cd, ad) = _taper_coeffs()
    tv = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(tv)
    mid = (tv >= t1) & (tv <= t2)
    out[mid] = tv[mid] ** -0.5
    for coeffs, origin, lo, hi in ((cu, au, t0, t1), (cd, ad, t2, t3)):
        seg = (tv > lo) & (tv < hi) & ~mid
        d = tv[seg] - origin
        out[seg] = coeffs[0] + d * (coeffs[1] + d * (coeffs[2] + d * coeffs[3]))
    return out


def _poly_segment_transform(coeffs: np.ndarray, a: float, b: float,
                            t: np.ndarray) -> np.ndarray:
    """Exact integral of the cubic (power basis at a) against exp(-itx) on [a,b]."""
    it = 1j * t
    out = np.zeros_like(t, dtype=np.complex128)
    # g with (d/dx - it) g = p gives antiderivative e^(-itx) g(x)
    def g_at(x):
        d = x - a
        p = coeffs[0] + d * (coeffs[1] + d * (coeffs[2] + d * coeffs[3]))
        p1 = coeffs[1] + d * (2 * coeffs[2] + 3 * d * coeffs[3])
        p2 = 2 * coeffs[2] + 6 * d * coeffs[3]
        p3 = 6 * coeffs[3]
        return -(p / it) - (p1 / it ** 2) - (p2 / it ** 3) - (p3 / it ** 4)
    return np.exp(-1j * t * b) * g_at(b) - np.exp(-1j * t * a) * g_at(a)


def _sqrt_segment_transform(a: float, b: float, t: np.ndarray) -> np.ndarray:
    """Exact integral of x^(-1/2) exp(-itx) on [a,b] (t > 0), via Fresnel."""
    scale = np.sqrt(2.0 * t / np.pi)
    s_hi, c_hi = fresnel(math.sqrt(b) * scale)
    s_lo, c_lo = fresnel(math.sqrt(a) * scale)
    return 2.0 * np.sqrt(np.pi / (2.0 * t)) * ((c_hi - c_lo) - 1j * (s_hi - s_lo))


def _taper_transform(t: np.ndarray) -> np.ndarray:
    """Fourier transform (2pi)^(-1) integral f(x) exp(-itx) dx, exact per piece."""
    t0, t1, t2, t3 = _KNOTS
    (cu, au), (cd, ad) = _taper_coeffs()
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t, dtype=np.complex128)
    small = np.abs(t) < 2.0
    if np.any(small):
        # closed forms cancel catastrophically near 0; per-piece quadrature is
        # exact here (integrand smooth between knots, oscillation < 1 cycle)
        acc = np.zeros(int(np.sum(small)), dtype=np.complex128)
        for lo, hi in zip(_KNOTS[:-1], _KNOTS[1:]):
            x, w = gl_nodes(lo, hi, 48)
            acc += (taper(x) * w) @ np.exp(-1j * np.outer(x, t[small]))
        out[small] = acc
    big = ~small
    if np.any(big):
        tb = np.abs(t[big])
        val = (_poly_segment_transform(cu, t0, t1, tb)
               + _sqrt_segment_transform(t1, t2, tb)
               + _poly_segment_transform(cd, t2, t3, tb))
        out[big] = np.where(t[big] >= 0, val, np.conj(val))
    return out / (2.0 * np.pi)


@functools.lru_cache(maxsize=1)
def isometry_function_constant() -> float:
    """C = sup|f| + 2 integral |t f^(t)| dt for the fixed taper f.

    The transform decays like t^(-3) (f is C^1 with piecewise-smooth second
    derivative), so the integral converges; beyond the quadrature cutoff the
    remainder is estimated from the measured t^(-2) envelope of |t f^|.
    """
    grid = np.linspace(_KNOTS[0], _KNOTS[3], 200001)
    sup_f = float(np.max(taper(grid)))

    cutoff = 50000.0
    panels = np.linspace(0.0, cutoff, 100001)
    base, wts = _leggauss(8)
    lo, hi = panels[:-1], panels[1:]
    half = 0.5 * (hi - lo)
    nodes = lo[:, None] + half[:, None] * (base[None, :] + 1.0)
    vals = np.abs(nodes * _taper_transform(nodes.ravel()).reshape(nodes.shape))
    integral = float(np.sum(vals @ wts * half))

    window = np.linspace(cutoff, 2 * cutoff, 20001)
    envelope = float(np.mean(np.abs(window * _taper_transform(window)) * window ** 2))
    tail = envelope / cutoff
    return sup_f + 2.0 * (integral + tail)


def close_projection_isometry(e1, e2) -> np.ndarray:
    """Partial isometry v (2n x 2n) with vv* = e1 (+) 0 and v*v = 0 (+) e2.

    Built as v = x f(x*x) from the corner placement of e1 e2; requires the
    spectrum of e2 e1 e2 to split into {0} and a cluster above 3/4, which
    holds whenever ||e1 - e2|| < 1/2.
    """
    e1m, e2m = as_array(e1), as_array(e2)
    n = e1m.shape[0]
    for name, em in (("e1", e1m), ("e2", e2m)):
        if op_norm(em @ em - em) > PROJECTION_ATOL or op_norm(em - em.conj().T) > PROJECTION_ATOL:
            raise ValueError(f"{name} is not an orthogonal projection within 1e-10")
    prod = e1m @ e2m
    gram = hermitian_part(prod.conj().T @ prod).m    # e2 e1 e2
    lam, w = np.linalg.eigh(gram)
    zero_tol = 1e-10
    lower_edge = float(_KNOTS[1])
    bad = (lam > zero_tol) & (lam < lower_edge)
    if np.any(bad):
        delta = op_norm(e1m - e2m)
        raise SpectralGapMissing(
            f"spectrum of e2 e1 e2 has value {float(lam[bad][0]):.6f} inside "
            f"({zero_tol:.0e}, {lower_edge}); ||e1-e2|| = {delta:.3f} is too large")
    f_vals = np.zeros_like(lam)
    upper = lam > zero_tol
    f_vals[upper] = lam[upper] ** -0.5
    corner = prod @ (w * f_vals) @ w.conj().T
    v = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    v[:n, n:] = corner
    return v


@dataclasses.dataclass(frozen=True)
class DoubledFlow:
    """Block-diagonal flow on 2n x 2n matrices with generators h+b1 and h+b2."""

    h: HermitianMatrix
    b1: HermitianMatrix
    b2: HermitianMatrix

    def generator_matrix(self) -> np.ndarray:
        k1 = self.h.m + self.b1.m
        k2 = self.h.m + self.b2.m
        n = k1.shape[0]
        k = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        k[:n, :n] = k1
        k[n:, n:] = k2
        return k

    def delta(self, x: np.ndarray) -> np.ndarray:
        return 1j * commutator(self.generator_matrix(), x)

    def evolve(self, z: complex, x: np.ndarray) -> np.ndarray:
        k = self.generator_matrix()
        e = _flow_factor(k, z)
        e_inv = _flow_factor(k, -z)
        return e @ x @ e_inv


def doubled_flow(h, b1, b2) -> DoubledFlow:
    return DoubledFlow(h=hermitian_part(as_array(h)),
                       b1=hermitian_part(as_array(b1)),
                       b2=hermitian_part(as_array(b2)))


@dataclasses.dataclass(frozen=True)
class TheoremBResult:
    """Measured two-sided data of the two-state comparison inequality."""

    lhs: float
    rhs: float
    delta_v_norm: float
    c_upper: float
    m_norm: float
    norm_b_diff: float
    boundary_consistency: float


def theorem_b_inequality(h, b1, b2, e1, e2, c: float, *,
                         constant: float | None = None) -> TheoremBResult:
    """Bound |omega_2(e2) - omega_1(e1)| by |c| C M ||b1 - b2||.

    omega_i is the perturbed functional of b_i; e_i must commute with h+b_i
    (the flow-invariance hypothesis).  Returns the measured left and right
    sides, the derivation norm ||delta_beta(v)||, and the consistency of the
    entire-continuation endpoints F(0) = omega_1(e1), F(ic) = omega_2(e2).
    """
    if c == 0:
        raise ValueError("c must be nonzero")
    flow = doubled_flow(h, b1, b2)
    e1m, e2m = as_array(e1), as_array(e2)
    scale = max(1.0, op_norm(flow.h.m + flow.b1.m), op_norm(flow.h.m + flow.b2.m))
    for name, bm, em in (("e1", flow.b1.m, e1m), ("e2", flow.b2.m, e2m)):
        drift = op_norm(commutator(flow.h.m + bm, em))
        if drift > INVARIANCE_ATOL * scale:
            raise ValueError(f"{name} is not flow-invariant: ||[h+b, e]|| = {drift:.3e}")

    v = close_projection_isometry(e1m, e2m)
    base = gibbs(flow.h.m, c)
    omega1 = perturbed_functional(base, flow.b1.m)
    omega2 = perturbed_functional(base, flow.b2.m)
    n = e1m.shape[0]
    rho_phi = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    rho_phi[:n, :n] = omega1.density
    rho_phi[n:, n:] = omega2.density

    def f_of(z):
        return complex(np.trace(rho_phi @ v @ flow.evolve(z, v.conj().T)))

    f0 = f_of(0.0)
    fic = f_of(1j * c)
    lhs = abs(fic - f0)
    c_upper = constant if constant is not None else isometry_function_constant()
    m_norm = max(omega1.weight, omega2.weight)
    norm_b_diff = op_norm(flow.b1.m - flow.b2.m)
    rhs = abs(c) * c_upper * m_norm * norm_b_diff
    delta_v_norm = op_norm(flow.delta(v))
    consistency = max(abs(f0 - complex(np.trace(omega1.density @ e1m))),
                      abs(fic - complex(np.trace(omega2.density @ e2m))))
    return TheoremBResult(lhs=lhs, rhs=rhs, delta_v_norm=delta_v_norm,
                          c_upper=c_upper, m_norm=m_norm,
                          norm_b_diff=norm_b_diff,
                          boundary_consistency=consistency)


DEFAULT_KMS_DIMS = (2, 3, 4, 5, 6, 7, 8)
KMS_HEADER = ("seed", "n", "c", "norm_b_diff", "lhs", "rhs", "margin")


def _random_hermitian(n: int, scale: float, rng) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (g + g.conj().T)


def _bottom_projection(m: np.ndarray, k: int) -> np.ndarray:
    cols = np.linalg.eigh(m)[1][:, :k]
    return cols @ cols.conj().T


def two_state_instance(n: int, c: float, rng, *,
                       perturb_scale: float = 0.05) -> TheoremBResult:
    """One random comparison instance: perturbations b1 and b2 = b1 + small
    difference, with e_i the bottom-half spectral projection of h + b_i (so
    flow invariance holds exactly)."""
    h = _random_hermitian(n, 1.0, rng)
    b1 = _random_hermitian(n, 0.2, rng)
    b2 = b1 + _random_hermitian(n, perturb_scale, rng)
    k = max(1, n // 2)
    e1 = _bottom_projection(h + b1, k)
    e2 = _bottom_projection(h + b2, k)
    return theorem_b_inequality(h, b1, b2, e1, e2, c)


def kms_experiment(trials: int, c: float, seed: int, *,
                   dims=DEFAULT_KMS_DIMS, perturb_scale: float = 0.05,
                   workers: int | None = None) -> list:
    """Seeded rows (seed, n, c, norm_b_diff, lhs, rhs, margin); margin is
    rhs - lhs, so a negative margin marks an inequality violation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def run(trial: int):
        n = dims[trial % len(dims)]
        rng = np.random.default_rng([seed, trial])
        try:
            res = two_state_instance(n, c, rng, perturb_scale=perturb_scale)
        except NearcommError as exc:
            raise NearcommError(
                f"instance trial={trial} (seed=[{seed}, {trial}], n={n}): {exc}"
            ) from exc
        return (trial, n, c, res.norm_b_diff, res.lhs, res.rhs,
                res.rhs - res.lhs)

    trial_ids = range(trials)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, trial_ids))
    return [run(t) for t in trial_ids]


def kms_rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(KMS_HEADER)
    for seed, n, c, diff, lhs, rhs, margin in rows:
        writer.writerow([seed, n, fmt_float(c), fmt_float(diff),
                         fmt_float(lhs), fmt_float(rhs), fmt_float(margin)])
    return buf.getvalue()
