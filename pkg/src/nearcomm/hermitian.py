"""Hermitian matrix core: decompositions, functional calculus, windows.

All tolerances are relative to max(1, ||A||) so behaviour is stable across
operator norm scales.  Eigenbases are made deterministic by re-orthonormalizing
degenerate clusters with a pivoted QR keyed to the input basis order.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg

from .errors import EigensolverError, FunctionDomainError

HERMITICITY_ATOL = 1e-12       # absolute entrywise check on construction
ENDPOINT_RTOL = 1e-12          # window endpoint assignment, times max(1, scale)
CLUSTER_RTOL = 1e-10           # eigenvalue cluster width, times max(1, ||A||)


def as_array(x) -> np.ndarray:
    """Unwrap a HermitianMatrix (or pass through an ndarray) as complex128."""
    if isinstance(x, HermitianMatrix):
        return x.m
    return np.asarray(x, dtype=np.complex128)


def hermitian_part(m) -> "HermitianMatrix":
    """Exactly symmetrize an almost-Hermitian array and wrap it."""
    arr = np.asarray(m, dtype=np.complex128)
    return HermitianMatrix(0.5 * (arr + arr.conj().T), _checked=True)


class HermitianMatrix:
    """Immutable complex square matrix with A = A*.

    Construction verifies self-adjointness entrywise to 1e-12 (absolute)
    and then stores the exactly symmetrized entries, read-only.
    """

    __slots__ = ("m", "n")

    def __init__(self, entries, _checked: bool = False):
        arr = np.array(entries, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if not _checked:
            asym = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
            if asym > HERMITICITY_ATOL:
                raise ValueError(
                    f"matrix is not self-adjoint: max |A - A*| entry = {asym:.3e}")
        arr = 0.5 * (arr + arr.conj().T)
        arr.flags.writeable = False
        object.__setattr__(self, "m", arr)
        object.__setattr__(self, "n", arr.shape[0])

    def __setattr__(self, name, value):
        raise AttributeError("HermitianMatrix is immutable")

    def __repr__(self):
        return f"HermitianMatrix(n={self.n})"


@dataclasses.dataclass(frozen=True)
class SpectralWindow:
    """Real interval with explicit open/closed endpoint flags.

    Eigenvalues within 1e-12 * max(1, scale) of an endpoint are assigned
    by the corresponding flag, never by raw comparison noise.
    """

    lower: float = -math.inf
    upper: float = math.inf
    lower_closed: bool = True
    upper_closed: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty window: [{self.lower}, {self.upper}]")

    def contains(self, values, scale: float = 1.0) -> np.ndarray:
        """Vectorized membership for eigenvalues, tolerance-aware at endpoints."""
        v = np.asarray(values, dtype=float)
        tol = ENDPOINT_RTOL * max(1.0, abs(scale))
        inside = np.ones(v.shape, dtype=bool)
        if math.isfinite(self.lower):
            at_lo = np.abs(v - self.lower) <= tol
            inside &= np.where(at_lo, self.lower_closed, v > self.lower)
        if math.isfinite(self.upper):
            at_hi = np.abs(v - self.upper) <= tol
            inside &= np.where(at_hi, self.upper_closed, v < self.upper)
        return inside

    def intersect(self, other: "SpectralWindow") -> "SpectralWindow":
        if self.lower > other.lower:
            lo, lo_c = self.lower, self.lower_closed
        elif self.lower < other.lower:
            lo, lo_c = other.lower, other.lower_closed
        else:
            lo, lo_c = self.lower, self.lower_closed and other.lower_closed
        if self.upper < other.upper:
            hi, hi_c = self.upper, self.upper_closed
        elif self.upper > other.upper:
            hi, hi_c = other.upper, other.upper_closed
        else:
            hi, hi_c = self.upper, self.upper_closed and other.upper_closed
        return SpectralWindow(lo, hi, lo_c, hi_c)


@dataclasses.dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and a unitary eigenbasis of a Hermitian matrix."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.basis
        return (v * self.eigenvalues) @ v.conj().T


def op_norm(x) -> float:
    """Operator (spectral) norm; max |eigenvalue| for Hermitian input."""
    arr = as_array(x)
    if arr.size == 0:
        return 0.0
    if np.max(np.abs(arr - arr.conj().T)) <= 1e-10 * max(1.0, np.max(np.abs(arr))):
        try:
            return float(np.max(np.abs(np.linalg.eigvalsh(arr))))
        except np.linalg.LinAlgError:
            pass
    return float(np.linalg.norm(arr, 2))


def commutator(a, b) -> np.ndarray:
    """[a, b] = ab - ba as a plain complex array."""
    am, bm = as_array(a), as_array(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return am @ bm - bm @ am


def _cluster_slices(eigenvalues: np.ndarray, scale: float):
    gap = CLUSTER_RTOL * max(1.0, scale)
    start = 0
    for i in range(1, len(eigenvalues) + 1):
        if i == len(eigenvalues) or eigenvalues[i] - eigenvalues[i - 1] > gap:
            yield slice(start, i)
            start = i


def spectral_decomp(a) -> SpectralDecomposition:
    """Eigendecomposition with deterministic degenerate-cluster bases.

    Within each near-degenerate cluster the LAPACK eigenvectors are replaced
    by a pivoted-QR basis of the cluster's spectral projection, which depends
    only on the subspace (and the input ordering), not on solver internals.
    """
    arr = as_array(a)
    try:
        vals, vecs = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigh failed on {arr.shape[0]}x{arr.shape[1]} "
                               f"matrix: {exc}") from exc
    scale = float(np.max(np.abs(vals))) if len(vals) else 0.0
    vecs = np.ascontiguousarray(vecs)
    for sl in _cluster_slices(vals, scale):
        k = sl.stop - sl.start
        if k <= 1:
            # fix a deterministic phase: largest-|entry| component made real > 0
            col = vecs[:, sl.start]
            idx = int(np.argmax(np.abs(col)))
            ph = col[idx]
            if abs(ph) > 0:
                vecs[:, sl.start] = col * (ph.conjugate() / abs(ph))
            continue
        block = vecs[:, sl]
        proj = block @ block.conj().T
        q, _, _ = scipy.linalg.qr(proj, pivoting=True, mode="economic")
        vecs[:, sl] = q[:, :k]
    vals.flags.writeable = False
    vecs.flags.writeable = False
    return SpectralDecomposition(eigenvalues=vals, basis=vecs)


def func_calc(a, f) -> HermitianMatrix:
    """Apply a real function to a Hermitian matrix through its spectrum."""
    dec = spectral_decomp(a)
    # out-of-domain values surface as non-finite entries and are rejected
    # below; numpy's own warnings would only duplicate that report
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        try:
            fv = np.asarray(f(dec.eigenvalues), dtype=float)
        except TypeError:
            fv = np.array([float(f(t)) for t in dec.eigenvalues])
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise FunctionDomainError(f"f failed on the spectrum: {exc}") from exc
    if fv.shape != dec.eigenvalues.shape:
        raise ValueError("f must map the eigenvalue vector to a same-length vector")
    if not np.all(np.isfinite(fv)):
        bad = dec.eigenvalues[~np.isfinite(fv)]
        raise FunctionDomainError(f"f undefined at eigenvalue(s) {bad}")
    v = dec.basis
    return hermitian_part((v * fv) @ v.conj().T)


def spectral_projection(a, window: SpectralWindow) -> HermitianMatrix:
    """Orthogonal projection onto the eigenspaces with eigenvalues in window."""
    dec = spectral_decomp(a)
    scale = float(np.max(np.abs(dec.eigenvalues))) if len(dec.eigenvalues) else 0.0
    mask = window.contains(dec.eigenvalues, scale)
    cols = dec.basis[:, mask]
    return hermitian_part(cols @ cols.conj().T)
