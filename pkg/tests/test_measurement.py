import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acl.errors import InvalidOutcomeCount, InvalidSize, NotNearProjective
from acl.linalg import Isometry, op_norm
from acl.measurement import (
    MeasurementSystem,
    PovmFamily,
    ProjectivePovm,
    correlation_matrix,
    max_commutator,
    random_measurement_system,
    random_povm,
    random_projective_povm,
    round_to_projective_povm,
    star_product,
    validate_povm,
    voiculescu_pair,
)

from conftest import denman_beavers_sqrt, random_hermitian, random_psd, svd_norm

seeds = st.integers(0, 2**63 - 1)


def coordinate_povm(n):
    return ProjectivePovm([np.diag(np.eye(n)[i]) for i in range(n)])


class TestValidate:
    def test_coordinate_projections(self):
        rep = validate_povm(coordinate_povm(2))
        assert rep.passed
        assert rep.sum_defect == 0.0
        assert rep.max_psd_violation == 0.0

    def test_single_outcome(self):
        assert validate_povm(PovmFamily([np.eye(3)])).passed

    def test_sum_defect(self):
        rep = validate_povm(PovmFamily([0.6 * np.eye(2), 0.6 * np.eye(2)]))
        assert not rep.passed
        assert rep.sum_defect == pytest.approx(0.2, abs=1e-15)

    def test_negative_operator(self):
        rep = validate_povm(PovmFamily([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])]))
        assert not rep.passed
        assert rep.max_psd_violation == pytest.approx(0.5)


class TestStarProduct:
    def test_projection_fixed_point(self, rng):
        Q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        P = Q[:, :2] @ Q[:, :2].T
        assert op_norm(star_product(P, P) - P) <= 1e-12

    def test_commuting_is_product(self, rng):
        Q = np.linalg.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))[0]
        A = Q @ np.diag(rng.uniform(0, 1, 5)) @ Q.conj().T
        B = Q @ np.diag(rng.uniform(0, 1, 5)) @ Q.conj().T
        assert op_norm(star_product(A, B) - A @ B) <= 1e-9

    def test_against_denman_beavers(self, rng):
        A, B = random_psd(rng, 4), random_psd(rng, 4)
        rA, rB = denman_beavers_sqrt(A), denman_beavers_sqrt(B)
        oracle = (rA @ B @ rA + rB @ A @ rB) / 2
        assert op_norm(star_product(A, B) - oracle) <= 1e-8 * max(1, op_norm(oracle))

    @given(seeds, st.integers(1, 6))
    def test_symmetric_and_psd(self, seed, n):
        rng = np.random.default_rng(seed)
        A, B = random_psd(rng, n), random_psd(rng, n)
        S = star_product(A, B)
        assert op_norm(S - star_product(B, A)) <= 1e-12 * max(1, op_norm(S))
        assert np.linalg.eigvalsh(S)[0] >= -1e-9 * max(1, op_norm(S))

    @given(seeds, st.integers(1, 5), st.integers(1, 4), st.integers(1, 4))
    def test_products_sum_to_identity(self, seed, n, ma, mb):
        rng = np.random.default_rng(seed)
        A = random_povm(n, ma, int(rng.integers(2**32)))
        B = random_povm(n, mb, int(rng.integers(2**32)))
        total = sum(star_product(a, b) for a in A for b in B)
        assert op_norm(total - np.eye(n)) <= 1e-9


class TestCorrelation:
    def test_deterministic_outcome(self):
        m = d = 2
        fam = coordinate_povm(m)
        sys = MeasurementSystem([fam] * d, [fam] * d)
        X = correlation_matrix(sys, Isometry(np.eye(m)[:, :1]))
        for k in range(d):
            for l in range(d):
                expect = np.zeros((m, m))
                expect[0, 0] = 1
                got = np.array([[X.entry(k, i, l, j)[0, 0] for j in range(m)] for i in range(m)])
                assert np.allclose(got, expect, atol=1e-14)

    def test_commuting_system_matches_plain_products(self, rng):
        # A on the first tensor factor, B on the second: exactly commuting
        A = [random_povm(2, 3, s) for s in (1, 2)]
        B = [random_povm(3, 3, s) for s in (3, 4)]
        alice = [PovmFamily([np.kron(a, np.eye(3)) for a in f]) for f in A]
        bob = [PovmFamily([np.kron(np.eye(2), b) for b in f]) for f in B]
        sys = MeasurementSystem(alice, bob)
        assert max_commutator(sys) <= 1e-12
        V = Isometry(np.linalg.qr(rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2)))[0])
        X = correlation_matrix(sys, V)
        W = V.matrix
        for k in range(2):
            for l in range(2):
                for i in range(3):
                    for j in range(3):
                        plain = W.conj().T @ alice[k][i] @ bob[l][j] @ W
                        assert op_norm(X.entry(k, i, l, j) - plain) <= 1e-9

    def test_block_sums_random_system(self):
        sys = random_measurement_system(4, 2, 2, seed=11)
        X = correlation_matrix(sys, Isometry(np.eye(4)[:, :1]))
        # summation oracle: add every entry by hand
        for k in range(2):
            for l in range(2):
                total = sum(X.entry(k, i, l, j)[0, 0] for i in range(2) for j in range(2))
                assert abs(total - 1) <= 1e-10
        assert np.allclose(X.block_sums(), 1, atol=1e-10)
        assert X.min_block_eigenvalue() >= -1e-10


class TestMaxCommutator:
    def test_tensor_system(self):
        a = random_povm(2, 2, 5)
        b = random_povm(3, 2, 6)
        sys = MeasurementSystem(
            [PovmFamily([np.kron(x, np.eye(3)) for x in a])],
            [PovmFamily([np.kron(np.eye(2), y) for y in b])],
        )
        assert max_commutator(sys) <= 1e-12

    def test_diagonal(self):
        fam = PovmFamily([np.diag([0.3, 0.6]), np.diag([0.7, 0.4])])
        assert max_commutator(MeasurementSystem([fam], [fam])) == 0.0

    def test_clock_shift_spectral_projections(self):
        n = 4
        U, V = voiculescu_pair(n)
        _, QU = np.linalg.eig(U)
        wV, QV = np.linalg.eigh((V + V.conj().T) / 2 + 0.1 * (V - V.conj().T) / 2j)
        projU = [np.outer(QU[:, k], QU[:, k].conj()) for k in range(n)]
        projV = [np.outer(QV[:, k], QV[:, k].conj()) for k in range(n)]
        sys = MeasurementSystem([ProjectivePovm(projU)], [ProjectivePovm(projV)])
        direct = max(svd_norm(P @ Q - Q @ P) for P in projU for Q in projV)
        assert max_commutator(sys) == pytest.approx(direct, abs=1e-12)
        assert direct > 0.1


class TestGenerators:
    def test_random_povm_single_outcome(self):
        (A,) = random_povm(3, 1, 9)
        assert op_norm(A - np.eye(3)) <= 1e-10

    def test_random_povm_deterministic(self):
        a, b = random_povm(4, 3, 42), random_povm(4, 3, 42)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_random_povm_valid(self):
        rep = validate_povm(random_povm(4, 3, 42), 1e-10)
        assert rep.passed and rep.sum_defect <= 1e-10

    def test_random_povm_bad_args(self):
        with pytest.raises(InvalidSize):
            random_povm(0, 2, 1)

    def test_projective_full_rank_one(self):
        f = random_projective_povm(4, 4, 3)
        assert all(np.linalg.matrix_rank(P, tol=1e-8) == 1 for P in f)
        assert op_norm(sum(f.operators) - np.eye(4)) <= 1e-12

    def test_projective_single(self):
        (P,) = random_projective_povm(3, 1, 0)
        assert op_norm(P - np.eye(3)) <= 1e-12

    def test_projective_idempotent(self):
        f = random_projective_povm(4, 2, 7)
        assert all(op_norm(P @ P - P) <= 1e-10 for P in f)
        f.require_valid()

    def test_projective_partition_sizes(self):
        f = random_projective_povm(7, 3, 1)
        ranks = [round(np.trace(P).real) for P in f]
        assert ranks == [3, 2, 2]

    def test_projective_too_many_outcomes(self):
        with pytest.raises(InvalidOutcomeCount):
            random_projective_povm(2, 3, 0)


class TestVoiculescu:
    @pytest.mark.parametrize("n, expected", [
        (2, 2.0),
        (4, math.sqrt(2)),
        (100, 2 * math.sin(math.pi / 100)),
    ])
    def test_commutator(self, n, expected):
        U, V = voiculescu_pair(n)
        assert svd_norm(U @ V - V @ U) == pytest.approx(expected, abs=1e-10)
        assert op_norm(U.conj().T @ U - np.eye(n)) <= 1e-12
        assert op_norm(V.conj().T @ V - np.eye(n)) <= 1e-12

    def test_n100_value(self):
        U, V = voiculescu_pair(100)
        assert svd_norm(U @ V - V @ U) == pytest.approx(0.0628215, abs=1e-7)

    @pytest.mark.parametrize("n", [2, 3, 5, 16])
    def test_order_n(self, n):
        U, V = voiculescu_pair(n)
        I = np.eye(n)
        assert op_norm(np.linalg.matrix_power(U, n) - I) <= 1e-10
        assert op_norm(np.linalg.matrix_power(V, n) - I) <= 1e-10

    def test_too_small(self):
        with pytest.raises(InvalidSize):
            voiculescu_pair(1)


def perturbed(f, delta, rng):
    ops = []
    for P in f:
        H = random_hermitian(rng, f.dim)
        ops.append(P + delta * H / op_norm(H))
    return PovmFamily(ops)


class TestRounding:
    def test_fixed_point(self):
        f = random_projective_povm(6, 3, 2)
        g = round_to_projective_povm(f)
        assert all(op_norm(a - b) <= 1e-12 for a, b in zip(f, g))

    def test_perturb_and_recover(self, rng):
        f = random_projective_povm(6, 3, 8)
        g = round_to_projective_povm(perturbed(f, 1e-3, rng))
        g.require_valid()
        assert all(op_norm(a - b) <= 1e-2 for a, b in zip(f, g))

    def test_diagonal_threshold(self):
        g = round_to_projective_povm(PovmFamily([np.diag([0.95, 0.05]), np.diag([0.05, 0.95])]))
        assert np.allclose(g[0], np.diag([1, 0]), atol=1e-14)
        assert np.allclose(g[1], np.diag([0, 1]), atol=1e-14)

    def test_report_constant(self, rng):
        f = random_projective_povm(5, 2, 4)
        g, rep = round_to_projective_povm(perturbed(f, 1e-2, rng), return_report=True)
        assert rep.input_delta > 0
        assert rep.constant == pytest.approx(max(rep.deviations) / rep.input_delta)

    def test_far_from_projective(self):
        with pytest.raises(NotNearProjective):
            round_to_projective_povm(random_povm(4, 2, 1))

    @given(seeds, st.integers(2, 6), st.integers(1, 4))
    def test_idempotent(self, seed, dim, m):
        m = min(m, dim)
        rng = np.random.default_rng(seed)
        f = random_projective_povm(dim, m, seed)
        once = round_to_projective_povm(perturbed(f, 1e-3, rng))
        twice = round_to_projective_povm(once)
        assert all(op_norm(a - b) <= 1e-12 for a, b in zip(once, twice))
