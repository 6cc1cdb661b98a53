"""Spectral window projections that almost commute with an almost-commuting pair.

Given Hermitian (a, b) with small commutator, build a projection p trapped
between spectral projections of a,

    E_a[t+1/4, oo)  <=  p  <=  E_a(t-1/4, oo),

that almost commutes with both a and b.  Chaining these at integer cut
points t = k and differencing yields a partition of unity {p_k} subordinate
to unit-length spectral windows of a.

Construction per cut point: smooth step c = step(a - t) commutes with a and
almost commutes with b; joint diagonalization replaces (b, c) by an exactly
commuting pair (b1, c1); the spectral projection q of c1 above 1/2 is then
compressed to the window subspace ran E_a(t-1/4, t+1/4) and rounded back to
a projection q0 there; finally p = q0 + E_a[t+1/4, oo).  Because q0 is built
inside the explicit window column span, the sandwich certificates and the
chain monotonicity e_{k+1} <= e_k hold at rounding level by construction.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import LinSolverFailure, MonotonicityViolation, SandwichViolation
from .hermitian import (ENDPOINT_RTOL, HermitianMatrix, SpectralDecomposition,
                        as_array, commutator, hermitian_part, op_norm,
                        spectral_decomp)
from .jointdiag import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, SolverReport, commuting_approximation
from .kernels import RAMP_HALF_WIDTH, _step_eval

CERTIFICATE_TOL = 1e-9
PROJECTION_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class WindowProjectionResult:
    """Projection p with measured commutators and sandwich certificates.

    sandwich_lo = ||E_a[t+1/4,oo) (1-p)|| certifies the lower operator bound,
    sandwich_hi = ||p (1 - E_a(t-1/4,oo))|| the upper one.
    """

    p: HermitianMatrix
    comm_a: float
    comm_b: float
    sandwich_lo: float
    sandwich_hi: float
    inner_report: SolverReport | None = None


@dataclasses.dataclass(frozen=True)
class ProjectionPartition:
    """Partition of unity p_k = e_k - e_{k+1} subordinate to unit windows of a.

    projections maps k to p_k for k in k_range; edges keeps the monotone
    chain e_k (k_range plus one past the end) for invariant checks;
    comm_bounds maps k to (||[a, p_k]||, ||[b, p_k]||).
    """

    k_range: range
    projections: dict
    comm_bounds: dict
    edges: dict

    def items(self):
        return [(k, self.projections[k]) for k in self.k_range]

    def sum_residual(self) -> float:
        total = sum(self.projections[k].m for k in self.k_range)
        return op_norm(total - np.eye(total.shape[0]))

    def orthogonality_residual(self) -> float:
        worst = 0.0
        ks = list(self.k_range)
        for i, ki in enumerate(ks):
            for kj in ks[i + 1:]:
                worst = max(worst, op_norm(self.projections[ki].m @ self.projections[kj].m))
        return worst

    def chain_residual(self) -> float:
        worst = 0.0
        n = self.edges[self.k_range.start].m.shape[0]
        eye = np.eye(n)
        for k in self.k_range:
            e_lo, e_hi = self.edges[k].m, self.edges[k + 1].m
            worst = max(worst, op_norm(e_hi @ (eye - e_lo)))
        return worst


def _split_masks(eigvals: np.ndarray, t: float, scale: float):
    """Exactly partition eigenvalues into lo / window / hi at t -/+ 1/4.

    The closed side [t+1/4, oo) absorbs the endpoint tolerance band, so an
    eigenvalue at the boundary lands in hi and the open window stays open.
    """
    tol = ENDPOINT_RTOL * max(1.0, scale)
    hi = eigvals >= (t + RAMP_HALF_WIDTH) - tol
    lo = ~hi & (eigvals <= (t - RAMP_HALF_WIDTH) + tol)
    win = ~hi & ~lo
    return lo, win, hi


def _span_projection(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return np.zeros((cols.shape[0], cols.shape[0]), dtype=np.complex128)
    return cols @ cols.conj().T


def _window_core(am, bm, decomp: SpectralDecomposition, t: float, eps: float,
                 inner_tol: float, inner_sweeps: int, enforce: bool) -> WindowProjectionResult:
    lam, v = decomp.eigenvalues, decomp.basis
    scale = float(np.max(np.abs(lam))) if lam.size else 1.0
    lo, win, hi = _split_masks(lam, t, scale)
    v_lo, v_win, v_hi = v[:, lo], v[:, win], v[:, hi]
    e_hi = _span_projection(v_hi)

    report = None
    if not np.any(win):
        # no spectrum in the window: q0 = 0 regardless of b, so p = E_a[t+1/4,oo)
        pm = e_hi
        sel_cols = v_hi
    else:
        ramp = _step_eval(lam - t)
        cm = hermitian_part((v * ramp) @ v.conj().T).m
        pair = commuting_approximation(bm, cm, tol=inner_tol, max_sweeps=inner_sweeps)
        report = pair.report
        if not report.converged:
            raise LinSolverFailure(
                f"inner joint diagonalization stalled at t={t}: "
                f"offdiag energy {report.offdiag_energy:.3e} after {report.sweeps} sweeps")
        q_cols = pair.basis[:, pair.diag_b > 0.5]
        m_win = v_win.conj().T @ _span_projection(q_cols) @ v_win
        mu, w = np.linalg.eigh(hermitian_part(m_win).m)
        sel_cols = np.concatenate([v_win @ w[:, mu > 0.5], v_hi], axis=1)
        pm = _span_projection(sel_cols)

    pm = hermitian_part(pm).m
    n = pm.shape[0]
    eye = np.eye(n)
    sandwich_lo = op_norm(e_hi @ (eye - pm))
    sandwich_hi = op_norm(pm @ _span_projection(v_lo))
    proj_defect = op_norm(pm @ pm - pm)
    if sandwich_lo > CERTIFICATE_TOL or sandwich_hi > CERTIFICATE_TOL or proj_defect > PROJECTION_TOL:
        raise SandwichViolation(
            f"window projection at t={t} failed certificates: "
            f"lo={sandwich_lo:.3e} hi={sandwich_hi:.3e} proj={proj_defect:.3e}")
    comm_a = op_norm(commutator(am, pm))
    comm_b = op_norm(commutator(bm, pm))
    if enforce and not (comm_a < eps and comm_b < eps):
        raise SandwichViolation(
            f"window projection at t={t} exceeds commutator budget eps={eps:.3e}: "
            f"comm_a={comm_a:.3e} comm_b={comm_b:.3e} (commutator of inputs too large)")
    return WindowProjectionResult(p=HermitianMatrix(pm, _checked=True), comm_a=comm_a,
                                  comm_b=comm_b, sandwich_lo=sandwich_lo,
                                  sandwich_hi=sandwich_hi, inner_report=report)


def window_projection(a, b, t: float, eps: float, *,
                      enforce: bool = True) -> WindowProjectionResult:
    """Projection sandwiched by E_a[t+1/4,oo) and E_a(t-1/4,oo), almost
    commuting with a and b.

    Raises SandwichViolation when the certificates or (with enforce) the
    commutator budget eps fail; one automatic retry runs the inner solver
    with 10x tighter tolerance before the error surfaces.
    """
    am, bm = as_array(a), as_array(b)
    decomp = spectral_decomp(am)
    try:
        return _window_core(am, bm, decomp, t, eps, DEFAULT_TOL,
                            DEFAULT_MAX_SWEEPS, enforce)
    except (LinSolverFailure, SandwichViolation):
        return _window_core(am, bm, decomp, t, eps, DEFAULT_TOL / 10,
                            2 * DEFAULT_MAX_SWEEPS, enforce)


def _edge_range(eigvals: np.ndarray) -> range:
    kmin = math.floor(float(np.min(eigvals))) - 1
    kmax = math.ceil(float(np.max(eigvals))) + 1
    return range(kmin, kmax + 1)


def partition(a, b, eps: float, *, enforce: bool = True,
              workers: int | None = None) -> ProjectionPartition:
    """Partition of unity {p_k} subordinate to the unit spectral windows of a.

    Each edge projection e_k is built at cut point t = k with commutator
    budget eps/2, so every p_k = e_k - e_{k+1} meets budget eps.  The chain
    e_{k+1} <= e_k is verified; on violation the whole family is rebuilt
    once with 10x tighter inner tolerance, then MonotonicityViolation.
    """
    am, bm = as_array(a), as_array(b)
    decomp = spectral_decomp(am)
    ks = _edge_range(decomp.eigenvalues)

    def build_edges(inner_tol: float, inner_sweeps: int):
        def one(k):
            return _window_core(am, bm, decomp, float(k), eps / 2,
                                inner_tol, inner_sweeps, enforce)
        edge_ks = list(ks) + [ks.stop]
        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one, edge_ks))
        else:
            results = [one(k) for k in edge_ks]
        return dict(zip(edge_ks, results))

    def chain_ok(edges) -> bool:
        eye = np.eye(am.shape[0])
        return all(op_norm(edges[k + 1].p.m @ (eye - edges[k].p.m)) <= CERTIFICATE_TOL
                   for k in ks)

    edges = build_edges(DEFAULT_TOL, DEFAULT_MAX_SWEEPS)
    if not chain_ok(edges):
        edges = build_edges(DEFAULT_TOL / 10, 2 * DEFAULT_MAX_SWEEPS)
        if not chain_ok(edges):
            worst = max(op_norm(edges[k + 1].p.m @ (np.eye(am.shape[0]) - edges[k].p.m))
                        for k in ks)
            raise MonotonicityViolation(
                f"edge projections not nested after retry: worst residual {worst:.3e}")

    projections, comm_bounds = {}, {}
    for k in ks:
        pk = hermitian_part(edges[k].p.m - edges[k + 1].p.m)
        projections[k] = pk
        comm_bounds[k] = (op_norm(commutator(am, pk.m)), op_norm(commutator(bm, pk.m)))
    return ProjectionPartition(k_range=ks, projections=projections,
                               comm_bounds=comm_bounds,
                               edges={k: r.p for k, r in edges.items()})


def window_commutation_diagnostic(a, part: ProjectionPartition) -> float:
    """max_{j,k} ||[E_a(j-1/4, j+1/4), p_k]||, measured.

    The construction keeps these small but does not force exact zeros; the
    value is reported as a diagnostic rather than asserted.
    """
    am = as_array(a)
    decomp = spectral_decomp(am)
    lam, v = decomp.eigenvalues, decomp.basis
    scale = float(np.max(np.abs(lam)))
    worst = 0.0
    for j in part.k_range:
        _, win, _ = _split_masks(lam, float(j), scale)
        e_win = _span_projection(v[:, win])
        for k in part.k_range:
            worst = max(worst, op_norm(commutator(e_win, part.projections[k].m)))
    return worst
