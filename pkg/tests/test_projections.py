"""Window projections and the subordinate partition of unity."""

import numpy as np
import pytest

from nearcomm.errors import SandwichViolation
from nearcomm.hermitian import commutator, op_norm
from nearcomm.kernels import band_smooth
from nearcomm.projections import (partition, window_commutation_diagnostic,
                                  window_projection)

CERT_TOL = 1e-9


def random_hermitian(n, rng):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (g + g.conj().T)


def smoothed_pair(n, nu, rng, spread=3.0):
    """(a, smoothed b) with ||[a, b]|| ~ nu; smoothing keeps the partition
    inputs in the banded regime the construction expects."""
    a = np.diag(rng.uniform(0.0, spread, n)).astype(complex)
    b = np.diag(rng.uniform(-1.0, 1.0, n)).astype(complex)
    if nu > 0:
        d = random_hermitian(n, rng)
        d /= op_norm(commutator(a, d))
        b = b + nu * d
        b /= max(1.0, op_norm(b))
    return a, band_smooth(a, 0.5 * (b + b.conj().T)).m


class TestWindowProjection:
    def test_commuting_diagonal_literal(self):
        # spectrum {0.5, 1.5, 2.5}, cut at t=1: p = projection above 1.25
        a = np.diag([0.5, 1.5, 2.5]).astype(complex)
        b = np.diag([0.3, -0.2, 0.9]).astype(complex)
        res = window_projection(a, b, t=1.0, eps=1e-6)
        np.testing.assert_allclose(res.p.m, np.diag([0.0, 1.0, 1.0]), atol=1e-12)
        assert res.comm_a < 1e-12 and res.comm_b < 1e-12
        assert res.sandwich_lo < 1e-12 and res.sandwich_hi < 1e-12

    def test_empty_window_shortcut(self):
        # no eigenvalue inside (t - 1/4, t + 1/4): p is the plain spectral
        # projection and no inner solve happens
        a = np.diag([0.0, 2.0]).astype(complex)
        b = np.array([[0.1, 0.05], [0.05, -0.2]], dtype=complex)
        res = window_projection(a, b, t=1.0, eps=10.0)
        np.testing.assert_allclose(res.p.m, np.diag([0.0, 1.0]), atol=1e-12)
        assert res.inner_report is None

    def test_certificates_on_random_pairs(self):
        rng = np.random.default_rng(67)
        for _ in range(8):
            a, b1 = smoothed_pair(8, 1e-3, rng)
            t = float(np.median(np.linalg.eigvalsh(a).real))
            res = window_projection(a, b1, t=t, eps=0.05)
            assert op_norm(res.p.m @ res.p.m - res.p.m) < 1e-10
            assert res.sandwich_lo <= CERT_TOL
            assert res.sandwich_hi <= CERT_TOL
            assert res.comm_a < 0.05 and res.comm_b < 0.05

    def test_budget_violation_raises(self):
        # strongly non-commuting pair cannot meet a tiny budget
        rng = np.random.default_rng(71)
        a = random_hermitian(6, rng)
        b = random_hermitian(6, rng)
        t = float(np.median(np.linalg.eigvalsh(a).real))
        with pytest.raises(SandwichViolation, match="budget"):
            window_projection(a, b, t=t, eps=1e-10)

    def test_enforce_off_reports_instead(self):
        rng = np.random.default_rng(71)
        a = random_hermitian(6, rng)
        b = random_hermitian(6, rng)
        t = float(np.median(np.linalg.eigvalsh(a).real))
        res = window_projection(a, b, t=t, eps=1e-10, enforce=False)
        assert res.comm_b > 1e-10


class TestPartition:
    def test_sums_to_identity(self):
        rng = np.random.default_rng(73)
        a, b1 = smoothed_pair(8, 1e-3, rng)
        part = partition(a, b1, eps=0.05)
        assert part.sum_residual() <= CERT_TOL
        assert part.orthogonality_residual() <= CERT_TOL
        assert part.chain_residual() <= CERT_TOL

    def test_comm_bounds_within_budget(self):
        rng = np.random.default_rng(79)
        eps = 0.05
        a, b1 = smoothed_pair(8, 1e-4, rng)
        part = partition(a, b1, eps=eps)
        for k in part.k_range:
            ca, cb = part.comm_bounds[k]
            assert ca <= eps and cb <= eps

    def test_projections_subordinate_to_windows(self):
        # p_k lives inside the window (k - 1/4, k + 5/4) of the spectrum of a
        rng = np.random.default_rng(83)
        a, b1 = smoothed_pair(8, 1e-4, rng)
        part = partition(a, b1, eps=0.05)
        lam, v = np.linalg.eigh(a)
        for k in part.k_range:
            pk = part.projections[k].m
            outside = (lam <= k - 0.25 - 1e-9) | (lam >= k + 1.25 + 1e-9)
            cols = v[:, outside]
            assert op_norm(cols.conj().T @ pk @ cols) <= 1e-8

    def test_commuting_input_recovers_spectral_partition(self):
        a = np.diag([0.1, 0.9, 1.5, 2.6]).astype(complex)
        b = np.diag([0.2, -0.1, 0.4, -0.3]).astype(complex)
        part = partition(a, b, eps=1e-6)
        ranks = {k: int(round(np.trace(part.projections[k].m).real))
                 for k in part.k_range}
        assert sum(ranks.values()) == 4
        # eigenvalues 0.1 and 0.9 end up split across the k=0 edge cuts;
        # whatever the split, each projection commutes with both inputs
        for k in part.k_range:
            pk = part.projections[k].m
            assert op_norm(commutator(a, pk)) < 1e-9
            assert op_norm(commutator(b, pk)) < 1e-9

    def test_worker_count_does_not_change_result(self):
        rng = np.random.default_rng(89)
        a, b1 = smoothed_pair(8, 1e-3, rng)
        part1 = partition(a, b1, eps=0.05, workers=1)
        part3 = partition(a, b1, eps=0.05, workers=3)
        assert list(part1.k_range) == list(part3.k_range)
        for k in part1.k_range:
            np.testing.assert_array_equal(part1.projections[k].m,
                                          part3.projections[k].m)

    def test_window_commutation_diagnostic_small(self):
        rng = np.random.default_rng(97)
        a, b1 = smoothed_pair(6, 1e-4, rng)
        part = partition(a, b1, eps=0.05)
        assert window_commutation_diagnostic(a, part) < 0.05
