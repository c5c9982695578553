import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acl.bell import (
    BellProblem,
    SeesawConfig,
    bell_objective,
    chsh_problem,
    epsilon_sweep,
    max_cross_commutator,
    normalize_first_unitaries,
    seesaw_commuting,
    seesaw_eps_commuting,
    tensor_split,
)
from acl.errors import DimensionMismatch, Infeasible
from acl.linalg import op_norm

from conftest import ginibre, qr_unitary

TSIRELSON = 2 * math.sqrt(2)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def qubit_chsh_witness():
    """Closed-form qubit optimum: U = (Z, X), V = ((Z + X)/sqrt2, (Z - X)/sqrt2).

    sum alpha_ij U_i (x) V_j = sqrt2 (Z (x) Z + X (x) X), whose norm is 2 sqrt2.
    """
    us = [Z, X]
    vs = [(Z + X) / math.sqrt(2), (Z - X) / math.sqrt(2)]
    return tensor_split(us, vs)


def random_problem(rng, d, n=1):
    return BellProblem(ginibre(rng, d * d * n, n).reshape(d, d, n, n) / 2)


class TestObjective:
    def test_single_block(self, rng):
        alpha = np.zeros((2, 2, 3, 3), dtype=complex)
        alpha[0, 0] = ginibre(rng, 3)
        prob = BellProblem(alpha)
        I = np.eye(4)
        assert bell_objective(prob, [I, I], [I, I]) == pytest.approx(op_norm(alpha[0, 0]))

    def test_zero(self):
        prob = BellProblem(np.zeros((2, 2)))
        I = np.eye(2)
        assert bell_objective(prob, [I, I], [I, I]) == 0.0

    def test_chsh_qubit_oracle(self):
        Us, Vs = qubit_chsh_witness()
        assert bell_objective(chsh_problem(), Us, Vs) == pytest.approx(TSIRELSON, abs=1e-6)

    def test_shape_errors(self):
        with pytest.raises(DimensionMismatch):
            bell_objective(chsh_problem(), [np.eye(2)], [np.eye(2)])
        with pytest.raises(DimensionMismatch):
            BellProblem(np.zeros((2, 3)))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
    def test_triangle_cap(self, seed, d, k):
        rng = np.random.default_rng(seed)
        prob = random_problem(rng, d, 2)
        Us = [qr_unitary(rng, k) for _ in range(d)]
        Vs = [qr_unitary(rng, k) for _ in range(d)]
        assert bell_objective(prob, Us, Vs) <= prob.triangle_cap() + 1e-9


class TestCommuting:
    def test_single_block_recovered(self, rng):
        alpha = np.zeros((2, 2, 2, 2), dtype=complex)
        alpha[0, 0] = ginibre(rng, 2)
        res = seesaw_commuting(BellProblem(alpha), SeesawConfig(dim_k=2, restarts=2))
        assert res.value == pytest.approx(op_norm(alpha[0, 0]), abs=1e-8)

    def test_chsh(self):
        res = seesaw_commuting(chsh_problem(), SeesawConfig(dim_k=2, fix_first=True))
        assert abs(res.value - TSIRELSON) <= 1e-4
        assert res.measured_eps == 0.0
        assert np.allclose(res.Us[0], np.eye(4)) and np.allclose(res.Vs[0], np.eye(4))

    def test_value_is_reevaluated(self):
        res = seesaw_commuting(chsh_problem(), SeesawConfig(dim_k=2, restarts=3))
        assert res.value == bell_objective(chsh_problem(), res.Us, res.Vs)

    def test_sweeps_monotone(self, rng):
        prob = random_problem(rng, 3)
        res = seesaw_commuting(prob, SeesawConfig(dim_k=3, restarts=4, max_sweeps=60))
        for hist in res.histories:
            vals = [v for v, _ in hist]
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))

    def test_nested_ansatz(self, rng):
        # embedding the dim-k optimum as u (+) 1 into dim k + 1 is feasible,
        # so the larger ansatz never does worse when seeded with it
        prob = random_problem(rng, 3)
        cfg = SeesawConfig(restarts=4, max_sweeps=100, seed=5)
        prev, local = None, None
        for k in (2, 3, 4):
            init = None
            if local is not None:
                init = tuple([embed(u, k) for u in fam] for fam in local)
            res = seesaw_commuting(prob, replace(cfg, dim_k=k), initial=init)
            if prev is not None:
                assert res.value >= prev - 1e-9
            prev = res.value
            local = local_factors(res, k)

    def test_deterministic(self, rng):
        prob = random_problem(rng, 2)
        a = seesaw_commuting(prob, SeesawConfig(seed=3, restarts=2))
        b = seesaw_commuting(prob, SeesawConfig(seed=3, restarts=2))
        assert a.value == b.value and a.restart_values == b.restart_values


def embed(u, k):
    out = np.eye(k, dtype=complex)
    out[: u.shape[0], : u.shape[0]] = u
    return out


def local_factors(res, k):
    # U = u (x) 1_k: u is read off the (p, 0), (q, 0) entries
    us = [U.reshape(k, k, k, k)[:, 0, :, 0] for U in res.Us]
    vs = [V.reshape(k, k, k, k)[0, :, 0, :] for V in res.Vs]
    return us, vs


class TestEpsCommuting:
    def test_needs_budget(self):
        with pytest.raises(ValueError):
            seesaw_eps_commuting(chsh_problem(), SeesawConfig())

    def test_large_eps_dominates_commuting(self, rng):
        prob = random_problem(rng, 3)
        cfg = SeesawConfig(dim_k=4, restarts=3, max_sweeps=80, seed=2)
        comm = seesaw_commuting(prob, SeesawConfig(dim_k=2, restarts=3, max_sweeps=80, seed=2))
        free = seesaw_eps_commuting(prob, replace(cfg, epsilon_budget=2.0))
        assert free.value >= comm.value - 1e-9

    def test_zero_budget_reproduces_commuting(self):
        cfg = SeesawConfig(dim_k=4, restarts=4, seed=1)
        comm = seesaw_commuting(chsh_problem(), SeesawConfig(dim_k=2, restarts=4, seed=1))
        zero = seesaw_eps_commuting(chsh_problem(), replace(cfg, epsilon_budget=0.0))
        assert zero.value == pytest.approx(comm.value, abs=1e-6)
        assert zero.measured_eps <= 1e-12

    def test_zero_budget_random_init_reports_only_feasible(self):
        cfg = SeesawConfig(dim_k=2, restarts=2, max_sweeps=5, init="random", epsilon_budget=0.0)
        with pytest.raises(Infeasible):
            seesaw_eps_commuting(chsh_problem(), cfg)

    def test_witness_feasible(self, rng):
        prob = random_problem(rng, 3)
        cfg = SeesawConfig(dim_k=4, restarts=2, max_sweeps=50, epsilon_budget=0.3)
        res = seesaw_eps_commuting(prob, cfg)
        assert max_cross_commutator(res.Us, res.Vs) <= 0.3 + 1e-12
        assert res.value == pytest.approx(bell_objective(prob, res.Us, res.Vs), abs=1e-12)

    def test_chsh_monotone_over_seeds(self):
        eps = [0.0, 0.1, 0.5, 1.0]
        for seed in range(5):
            sweep = epsilon_sweep(chsh_problem(), eps, SeesawConfig(dim_k=4, restarts=2, seed=seed))
            vals = sweep.values
            assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))

    def test_penalised_sweeps_monotone_in_augmented_objective(self, rng):
        prob = random_problem(rng, 3)
        cfg = SeesawConfig(dim_k=2, restarts=3, max_sweeps=40, epsilon_budget=0.2, init="random")
        res = seesaw_eps_commuting(prob, cfg)
        assert any(p > 0 for hist in res.histories for _, p in hist)
        for hist in res.histories:
            aug = [v - p for v, p in hist]
            assert all(b >= a - 1e-9 for a, b in zip(aug, aug[1:]))

    def test_d2_commuting_and_eps_agree(self, rng):
        for _ in range(3):
            prob = random_problem(rng, 2)
            comm = seesaw_commuting(prob, SeesawConfig(dim_k=2, restarts=4))
            eps = seesaw_eps_commuting(
                prob, SeesawConfig(dim_k=4, restarts=4, epsilon_budget=1e-4)
            )
            assert abs(comm.value - eps.value) <= 1e-3


class TestSweep:
    def test_single_entry(self):
        sweep = epsilon_sweep(chsh_problem(), [0.3], SeesawConfig(dim_k=2, restarts=2))
        direct = seesaw_eps_commuting(
            chsh_problem(), SeesawConfig(dim_k=2, restarts=2, epsilon_budget=0.3)
        )
        assert sweep.values == [direct.value]

    def test_chsh_bounds(self):
        sweep = epsilon_sweep(chsh_problem(), [0.01, 0.1, 1.0], SeesawConfig(dim_k=4))
        assert all(TSIRELSON - 0.05 <= v <= 4.0 + 1e-6 for v in sweep.values)
        assert all(f == "" for f in sweep.flags)

    def test_deterministic(self):
        cfg = SeesawConfig(dim_k=4, restarts=2, seed=7)
        a = epsilon_sweep(chsh_problem(), [0.0, 0.5], cfg)
        b = epsilon_sweep(chsh_problem(), [0.0, 0.5], cfg)
        assert a.rows() == b.rows()

    def test_rejects_descending(self):
        with pytest.raises(ValueError):
            epsilon_sweep(chsh_problem(), [0.5, 0.1], SeesawConfig())

    def test_infeasible_entries_are_gaps(self):
        cfg = SeesawConfig(dim_k=2, restarts=1, max_sweeps=3, init="random")
        sweep = epsilon_sweep(chsh_problem(), [0.0, 2.0], cfg)
        assert sweep.values[0] is None and sweep.flags[0] == "infeasible"
        assert sweep.values[1] is not None


class TestGauge:
    def test_already_normalised(self, rng):
        Us = [np.eye(3), qr_unitary(rng, 3)]
        Vs = [np.eye(3), qr_unitary(rng, 3)]
        nU, nV = normalize_first_unitaries(Us, Vs)
        assert all(np.allclose(a, b) for a, b in zip(Us + Vs, nU + nV))

    def test_tensor_split_stays_split(self, rng):
        us = [qr_unitary(rng, 2) for _ in range(3)]
        vs = [qr_unitary(rng, 2) for _ in range(3)]
        Us, Vs = tensor_split(us, vs)
        nU, nV = normalize_first_unitaries(Us, Vs)
        eU, eV = tensor_split([us[0].conj().T @ u for u in us], [v @ vs[0].conj().T for v in vs])
        assert all(op_norm(a - b) <= 1e-12 for a, b in zip(nU + nV, eU + eV))
        assert max_cross_commutator(nU, nV) <= 1e-12
        prob = random_problem(rng, 3)
        assert bell_objective(prob, nU, nV) == pytest.approx(bell_objective(prob, Us, Vs), abs=1e-10)

    def test_first_becomes_identity(self, rng):
        Us = [qr_unitary(rng, 4) for _ in range(3)]
        Vs = [qr_unitary(rng, 4) for _ in range(3)]
        nU, nV = normalize_first_unitaries(Us, Vs)
        assert op_norm(nU[0] - np.eye(4)) <= 1e-12
        assert op_norm(nV[0] - np.eye(4)) <= 1e-12
