"""Desk-scale CAR algebra on fermionic Fock space.

Creation and annihilation operators are realized as explicit sparse
matrices on the 2^n-dimensional occupation-number space (Jordan-Wigner
form: raising matrix at the mode position, parity signs from all lower
mode indices).  On top of the representation sit quasi-free flows with
their second-quantized generators, finite-rank inner perturbations,
Wick-form operator assembly, and residual-vector extraction.

Conventions, fixed once:
  - mode 1 occupies the most significant bit of the basis index, so the
    occupation basis is lexicographic;
  - the one-particle inner product (eta|xi) is linear in the first
    argument, matching a*(eta) being linear in eta;
  - a(xi) is the adjoint of a*(xi), hence antilinear in xi.
"""

from __future__ import annotations

import dataclasses
import functools

import numpy as np
import scipy.sparse as sparse

from .hermitian import as_array, hermitian_part, op_norm

MAX_MODES = 12


def _popcount(values: np.ndarray, bits: int) -> np.ndarray:
    count = np.zeros_like(values)
    for b in range(bits):
        count += (values >> b) & 1
    return count


def _creator_matrix(n: int, k: int) -> sparse.csr_matrix:
    """a*(e_{k+1}) on 2^n dimensions; mode bit position is n-1-k."""
    dim = 1 << n
    pos = n - 1 - k
    states = np.arange(dim)
    src = states[(states >> pos) & 1 == 0]
    dst = src | (1 << pos)
    parity = _popcount(src >> (pos + 1), n) & 1
    signs = np.where(parity == 1, -1.0, 1.0).astype(np.complex128)
    return sparse.csr_matrix((signs, (dst, src)), shape=(dim, dim))


@dataclasses.dataclass(frozen=True, eq=False)
class FockRep:
    """Explicit CAR representation: creators a*(e_1)..a*(e_n) as sparse
    matrices on the lexicographic occupation basis."""

    modes: int
    creators: tuple

    @property
    def dim(self) -> int:
        return 1 << self.modes

    def identity(self) -> sparse.csr_matrix:
        return sparse.identity(self.dim, dtype=np.complex128, format="csr")


@functools.lru_cache(maxsize=None)
def fock_rep(n: int) -> FockRep:
    if not 1 <= n <= MAX_MODES:
        raise ValueError(f"mode count must be in [1, {MAX_MODES}], got {n}")
    return FockRep(modes=n, creators=tuple(_creator_matrix(n, k) for k in range(n)))


def a_star(rep: FockRep, xi) -> sparse.csr_matrix:
    """Creation operator a*(xi) = sum_k xi_k a*(e_k), linear in xi."""
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape != (rep.modes,):
        raise ValueError(f"vector has shape {xi.shape}, expected ({rep.modes},)")
    out = sparse.csr_matrix((rep.dim, rep.dim), dtype=np.complex128)
    for coeff, c in zip(xi, rep.creators):
        if coeff != 0:
            out = out + coeff * c
    return out


def annihilator(rep: FockRep, xi) -> sparse.csr_matrix:
    """a(xi) = a*(xi)*, antilinear in xi."""
    return a_star(rep, xi).conj().T.tocsr()


def second_quantize(rep: FockRep, h_one) -> sparse.csr_matrix:
    """dGamma(H) = sum_ij H_ij a*(e_i) a(e_j)."""
    hm = as_array(h_one)
    n = rep.modes
    if hm.shape != (n, n):
        raise ValueError(f"one-particle matrix has shape {hm.shape}, expected ({n}, {n})")
    out = sparse.csr_matrix((rep.dim, rep.dim), dtype=np.complex128)
    annihilators = [c.conj().T.tocsr() for c in rep.creators]
    for i in range(n):
        for j in range(n):
            if hm[i, j] != 0:
                out = out + hm[i, j] * (rep.creators[i] @ annihilators[j])
    return out


def number_operator(rep: FockRep) -> sparse.csr_matrix:
    return second_quantize(rep, np.eye(rep.modes))


@dataclasses.dataclass(frozen=True, eq=False)
class QuasiFreeFlow:
    """Flow alpha_t = Ad exp(it dGamma(H)) induced by U_t = exp(itH)."""

    rep: FockRep
    one_particle_h: np.ndarray
    second_quantized: sparse.csr_matrix

    def evolve(self, t: float, x) -> np.ndarray:
        lam, v = np.linalg.eigh(self.second_quantized.toarray())
        phase = np.exp(1j * t * lam)
        e = (v * phase) @ v.conj().T
        e_inv = (v * phase.conj()) @ v.conj().T
        xm = x.toarray() if sparse.issparse(x) else np.asarray(x, dtype=np.complex128)
        return e @ xm @ e_inv


def quasi_free_flow(rep: FockRep, h_one) -> QuasiFreeFlow:
    hm = hermitian_part(as_array(h_one)).m
    return QuasiFreeFlow(rep=rep, one_particle_h=hm,
                         second_quantized=second_quantize(rep, hm))


def quasi_free_generator(flow: QuasiFreeFlow, x):
    """delta_alpha(x) = [i dGamma(H), x]; on x = a*(xi) this is i a*(H xi).

    Sparse input gives sparse output, dense gives dense.
    """
    d = flow.second_quantized
    dim = flow.rep.dim
    shape = x.shape if sparse.issparse(x) else np.asarray(x).shape
    if shape != (dim, dim):
        raise ValueError(f"operator has shape {shape}, expected ({dim}, {dim})")
    return 1j * (d @ x - x @ d)


def inner_perturbation_from_rank(t_matrix) -> sparse.csr_matrix:
    """b = sum_i lambda_i a*(zeta_i) a(zeta_i) over the eigensystem of T.

    Satisfies [ib, a*(xi)] = i a*(T xi): the perturbation implements T on
    the one-particle space.
    """
    tm = hermitian_part(as_array(t_matrix)).m
    rep = fock_rep(tm.shape[0])
    lam, vecs = np.linalg.eigh(tm)
    out = sparse.csr_matrix((rep.dim, rep.dim), dtype=np.complex128)
    for val, col in zip(lam, vecs.T):
        if val != 0:
            created = a_star(rep, col)
            out = out + val * (created @ created.conj().T)
    return out


def rank_perturbation_norms(t_matrix) -> tuple[float, float]:
    """(‖b‖, Tr|T|) for b = inner_perturbation_from_rank(T).

    b is diagonal in the zeta-occupation basis with spectrum the subset sums
    of the eigenvalues, so ‖b‖ = max(sum of positive, -sum of negative);
    equality with Tr|T| holds exactly when the eigenvalues share a sign.
    """
    lam = np.linalg.eigvalsh(hermitian_part(as_array(t_matrix)).m)
    positive = float(np.sum(lam[lam > 0]))
    negative = float(-np.sum(lam[lam < 0]))
    return max(positive, negative), positive + negative


def _validate_indices(label: str, idx, n: int) -> tuple:
    idx = tuple(int(i) for i in idx)
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"{label} index out of range [0, {n}): {idx}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ValueError(f"{label} indices must be strictly increasing: {idx}")
    return idx


def wick_unitary(rep: FockRep, coeffs, family=None) -> tuple[sparse.csr_matrix, float]:
    """Assemble x = sum coeffs[mu, nu] a*(f_mu1)..a*(f_mup) a(f_nu1)..a(f_nuq).

    mu and nu are strictly increasing mode-index tuples; family (columns =
    orthonormal one-particle vectors) defaults to the standard basis.  The
    coefficients determine x independently of the family choice, so
    rebuilding against a rotated family reproduces the same unitarity
    defect.  Returns (x, ‖x*x - 1‖); the defect is a report, not an error.
    """
    n = rep.modes
    if family is None:
        fam = np.eye(n, dtype=np.complex128)
    else:
        fam = np.asarray(family, dtype=np.complex128)
        if fam.shape[0] != n:
            raise ValueError(f"family rows {fam.shape[0]} != mode count {n}")
        gram = fam.conj().T @ fam
        if op_norm(gram - np.eye(fam.shape[1])) > 1e-8:
            raise ValueError("family columns are not orthonormal within 1e-8")
    x = sparse.csr_matrix((rep.dim, rep.dim), dtype=np.complex128)
    for (mu, nu), coeff in coeffs.items():
        mu = _validate_indices("creation", mu, fam.shape[1])
        nu = _validate_indices("annihilation", nu, fam.shape[1])
        term = coeff * rep.identity()
        for i in mu:
            term = term @ a_star(rep, fam[:, i])
        for j in nu:
            term = term @ annihilator(rep, fam[:, j])
        x = x + term
    defect = op_norm((x.conj().T @ x - rep.identity()).toarray())
    return x.tocsr(), defect


@dataclasses.dataclass(frozen=True)
class ResidualVector:
    """Rayleigh decomposition H xi = c xi + eta_norm * eta_unit."""

    c: float
    eta_norm: float
    eta_unit: np.ndarray


def residual_vector(h, xi) -> ResidualVector:
    """Split H xi into its xi-component c = (H xi | xi) and the orthogonal
    remainder; eta_unit is the zero vector when the remainder is below 1e-12."""
    hm = hermitian_part(as_array(h)).m
    xv = np.asarray(xi, dtype=np.complex128)
    norm = float(np.linalg.norm(xv))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"xi must be a unit vector, got norm {norm}")
    image = hm @ xv
    c = float(np.vdot(xv, image).real)
    eta = image - c * xv
    eta_norm = float(np.linalg.norm(eta))
    unit = eta / eta_norm if eta_norm >= 1e-12 else np.zeros_like(xv)
    return ResidualVector(c=c, eta_norm=eta_norm, eta_unit=unit)
