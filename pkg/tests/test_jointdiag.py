"""Joint Jacobi diagonalization: optimality, monotonicity, determinism."""

import numpy as np
import pytest

from nearcomm.hermitian import commutator, op_norm
from nearcomm.jointdiag import (_off_energy, _schedule, commuting_approximation,
                                joint_diagonalize)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def random_hermitian(n, rng):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (g + g.conj().T)


def almost_commuting_pair(n, scale, rng):
    a = np.diag(rng.uniform(-1.0, 1.0, n)).astype(complex)
    b = np.diag(rng.uniform(-1.0, 1.0, n)).astype(complex)
    b += scale * random_hermitian(n, rng)
    return a, 0.5 * (b + b.conj().T)


class TestSchedule:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 8])
    def test_round_robin_covers_all_pairs(self, n):
        rounds = _schedule(n)
        seen = set()
        for idx_i, idx_j in rounds:
            # pairs within one round are disjoint
            touched = list(idx_i) + list(idx_j)
            assert len(touched) == len(set(touched))
            seen.update(zip(idx_i.tolist(), idx_j.tolist()))
        assert seen == {(i, j) for i in range(n) for j in range(i + 1, n)}


class TestJointDiagonalize:
    def test_two_by_two_matches_brute_force(self):
        # scan the full plane-rotation family (angle, phase) and compare the
        # reachable off-diagonal energy with the solver's one-shot answer
        rng = np.random.default_rng(37)
        theta_grid = np.linspace(0.0, np.pi / 2, 241)
        phi_grid = np.linspace(-np.pi, np.pi, 240, endpoint=False)
        for _ in range(3):
            a = random_hermitian(2, rng)
            b = random_hermitian(2, rng)
            u, report = joint_diagonalize(a, b)
            best = np.inf
            for theta in theta_grid:
                for phi in phi_grid:
                    c, s = np.cos(theta), np.sin(theta) * np.exp(1j * phi)
                    v = np.array([[c, s], [-np.conj(s), c]])
                    stack = np.stack([v.conj().T @ a @ v, v.conj().T @ b @ v])
                    best = min(best, _off_energy(stack))
            # the scanned minimum can only overestimate the true optimum, so
            # the solver must land at or below it
            assert report.offdiag_energy <= best + 1e-6

    def test_unitarity(self):
        rng = np.random.default_rng(41)
        for n in (2, 4, 7):
            a, b = almost_commuting_pair(n, 0.05, rng)
            u, _ = joint_diagonalize(a, b)
            assert op_norm(u.conj().T @ u - np.eye(n)) < 1e-12

    def test_energy_trace_nonincreasing(self):
        rng = np.random.default_rng(43)
        a, b = almost_commuting_pair(6, 0.1, rng)
        _, report = joint_diagonalize(a, b)
        trace = np.asarray(report.trace)
        assert np.all(np.diff(trace) <= 1e-12 * max(1.0, trace[0]))

    def test_commuting_input_converges_immediately(self):
        a = np.diag([1.0, 2.0, 3.0]).astype(complex)
        b = np.diag([0.5, -0.5, 0.25]).astype(complex)
        _, report = joint_diagonalize(a, b)
        assert report.converged
        assert report.offdiag_energy == 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(47)
        a, b = almost_commuting_pair(8, 0.02, rng)
        u1, r1 = joint_diagonalize(a.copy(), b.copy())
        u2, r2 = joint_diagonalize(a.copy(), b.copy())
        np.testing.assert_array_equal(u1, u2)
        assert r1.trace == r2.trace

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            joint_diagonalize(np.eye(2), np.eye(3))


class TestCommutingApproximation:
    def test_result_commutes_structurally(self):
        rng = np.random.default_rng(53)
        for n in (3, 6):
            a, b = almost_commuting_pair(n, 0.05, rng)
            pair = commuting_approximation(a, b)
            scale = max(op_norm(a), op_norm(b), 1.0)
            assert pair.commutation_residual() < 1e-13 * scale
            assert op_norm(commutator(pair.a1().m, pair.b1().m)) < 1e-13 * scale

    def test_small_perturbation_small_distance(self):
        # sigma_z paired with a slightly tilted sigma_z: the pair is within
        # O(0.01) of commuting, the solver must not move farther than that
        a = SZ
        b = SZ + 0.01 * SX
        pair = commuting_approximation(a, b)
        assert pair.dist_a < 0.02
        assert pair.dist_b < 0.02
        assert pair.dist_a + pair.dist_b > 0  # inputs do not commute

    def test_exact_input_distance_zero(self):
        a = np.diag([1.0, 2.0]).astype(complex)
        b = np.diag([3.0, 4.0]).astype(complex)
        pair = commuting_approximation(a, b)
        assert pair.dist_a < 1e-14 and pair.dist_b < 1e-14

    def test_reconstruction_matches_diagonals(self):
        rng = np.random.default_rng(59)
        a, b = almost_commuting_pair(5, 0.03, rng)
        pair = commuting_approximation(a, b)
        u = pair.basis
        assert op_norm(pair.a1().m - (u * pair.diag_a) @ u.conj().T) < 1e-13
        assert op_norm(a - pair.a1().m) == pytest.approx(pair.dist_a, abs=1e-12)
        assert op_norm(b - pair.b1().m) == pytest.approx(pair.dist_b, abs=1e-12)

    def test_distance_scales_with_perturbation(self):
        dist = {}
        for scale in (1e-2, 1e-4):
            a, b = almost_commuting_pair(6, scale, np.random.default_rng(7))
            pair = commuting_approximation(a, b)
            dist[scale] = pair.dist_a + pair.dist_b
        assert dist[1e-4] < dist[1e-2]
