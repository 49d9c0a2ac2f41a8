import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmoneylab.mathcore import Rng
from qmoneylab.quantumsim import DenseState, fidelity, haar_state
from qmoneylab.tdesign import (
    STRATEGIES,
    DesignSpec,
    MomentOperator,
    PreconditionError,
    QueryBudgetExceeded,
    BudgetedOracle,
    applicable_strategies,
    decode_index,
    design_moment,
    design_state,
    distinguisher_advantage,
    encode_index,
    field_mul_array,
    haar_moment,
    moment_distance,
    poly_values,
    symmetric_projector,
)


class TestStates:
    def test_all_zero_is_plus(self):
        s = DesignSpec.make(3, 2)
        np.testing.assert_allclose(design_state(s, "0" * 9).amplitudes, DenseState.plus(3).amplitudes)

    def test_constant_is_global_phase(self):
        s = DesignSpec.make(3, 0)
        for c in range(8):
            assert fidelity(design_state(s, encode_index(s, [c])), DenseState.plus(3)) == pytest.approx(1)

    def test_identity_polynomial(self):
        s = DesignSpec.make(2, 1)
        amps = design_state(s, encode_index(s, [0, 1])).amplitudes
        np.testing.assert_allclose(amps, [0.5 * np.exp(2j * np.pi * a / 4) for a in range(4)])

    def test_index_chunks(self):
        s = DesignSpec.make(2, 1)
        # chunk 0 = "01" -> 2, chunk 1 = "10" -> 1, little-endian within a chunk
        assert decode_index(s, "0110") == [2, 1]
        assert encode_index(s, [2, 1]) == "0110"

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            design_state(DesignSpec.make(2, 1), "011")

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 6), d=st.integers(0, 4), data=st.data())
    def test_flat_and_matches_scalar_eval(self, n, d, data):
        s = DesignSpec.make(n, d)
        coeffs = [data.draw(st.integers(0, (1 << n) - 1)) for _ in range(d + 1)]
        vals = poly_values(s, coeffs)
        for a in range(1 << n):
            assert vals[a] == s.field.poly_eval(coeffs, a)
        amps = design_state(s, encode_index(s, coeffs)).amplitudes
        np.testing.assert_allclose(np.abs(amps), 2 ** (-n / 2))

    def test_array_mul_matches_scalar(self):
        f = DesignSpec.make(5, 0).field
        a = np.arange(32)[:, None]
        b = np.arange(32)[None, :]
        table = field_mul_array(f, a, b)
        for x in range(32):
            for y in range(32):
                assert table[x, y] == f.mul(x, y)


class TestMoments:
    @pytest.mark.parametrize("n,d", [(1, 1), (2, 1), (2, 3), (3, 1), (3, 2)])
    def test_first_moment_maximally_mixed(self, n, d):
        m = design_moment(DesignSpec.make(n, d), 1)
        np.testing.assert_allclose(m.matrix, np.eye(2**n) / 2**n, atol=1e-9)

    def test_degree_zero_not_mixed(self):
        m = design_moment(DesignSpec.make(2, 0), 1)
        assert np.linalg.matrix_rank(m.matrix, tol=1e-9) == 1

    def test_exact_matches_bruteforce(self):
        # direct sum over every index string
        s = DesignSpec.make(2, 2)
        acc = np.zeros((16, 16), complex)
        for i in range(2**6):
            v = design_state(s, format(i, "06b")).amplitudes
            w = np.kron(v, v)
            acc += np.outer(w, w.conj())
        np.testing.assert_allclose(design_moment(s, 2).matrix, acc / 64, atol=1e-12)

    def test_mc_converges_to_exact(self):
        s = DesignSpec.make(2, 2)
        exact = design_moment(s, 2)
        mc = design_moment(s, 2, "mc", samples=20_000, rng=Rng(1))
        assert np.abs(mc.matrix - exact.matrix).max() <= 5 * mc.stderr

    def test_psd_trace_one(self):
        m = design_moment(DesignSpec.make(2, 2), 2)
        assert np.trace(m.matrix).real == pytest.approx(1)
        assert np.linalg.eigvalsh(m.matrix).min() > -1e-12

    def test_limits(self):
        with pytest.raises(ValueError):
            design_moment(DesignSpec.make(7, 2), 1)
        with pytest.raises(ValueError):
            design_moment(DesignSpec.make(2, 1), 7)
        with pytest.raises(ValueError):
            design_moment(DesignSpec.make(2, 1), 1, mode="mc")

    def test_distance_non_increasing_in_degree(self):
        h = haar_moment(2, 2)
        dists = [moment_distance(design_moment(DesignSpec.make(2, d), 2), h) for d in range(6)]
        assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
        # regression baseline from exact enumeration
        assert dists[3] == pytest.approx(0.3, abs=1e-9)
        assert dists[1] == pytest.approx(0.8, abs=1e-9)


class TestHaarMoment:
    def test_t1(self):
        np.testing.assert_allclose(haar_moment(3, 1).matrix, np.eye(8) / 8)

    def test_n1_t2(self):
        m = haar_moment(1, 2).matrix
        # symmetric subspace of two qubits: |00>, |11>, (|01>+|10>)/sqrt2
        sym = np.zeros((4, 4))
        sym[0, 0] = sym[3, 3] = 1
        sym[1, 1] = sym[2, 2] = sym[1, 2] = sym[2, 1] = 0.5
        np.testing.assert_allclose(m, sym / 3)
        assert np.trace(m) == pytest.approx(1)

    def test_permutation_invariant(self):
        p = symmetric_projector(1, 3)
        swap01 = np.zeros((8, 8))
        for i in range(8):
            b = [(i >> k) & 1 for k in range(3)]
            b[0], b[1] = b[1], b[0]
            swap01[sum(v << k for k, v in enumerate(b)), i] = 1
        np.testing.assert_array_equal(swap01 @ p, p)
        np.testing.assert_allclose(p @ p, p, atol=1e-12)

    def test_product_unitary_invariance(self):
        m = haar_moment(2, 2).matrix
        rng = Rng(2).generator
        for _ in range(100):
            us = []
            for _ in range(2):
                q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
                us.append(q)
            u = np.kron(us[1], us[0])
            uu = np.kron(u, u)
            assert np.abs(uu @ m @ uu.conj().T - m).max() < 1e-6

    def test_matches_haar_sampling(self):
        n, samples = 2, 100_000
        rng = Rng(3)
        vs = np.stack([haar_state(n, rng.split(i)).amplitudes for i in range(samples)])
        w = (vs[:, :, None] * vs[:, None, :]).reshape(samples, -1)
        outer = w[:, :, None] * w.conj()[:, None, :]
        mean = outer.mean(axis=0)
        se = np.sqrt(np.maximum(np.mean(np.abs(outer) ** 2, axis=0) - np.abs(mean) ** 2, 0) / samples)
        assert (np.abs(mean - haar_moment(n, 2).matrix) <= 5 * se + 1e-9).all()


class TestDistance:
    def test_zero_and_orthogonal(self):
        a = MomentOperator(1, np.diag([1.0, 0.0]))
        b = MomentOperator(1, np.diag([0.0, 1.0]))
        assert moment_distance(a, a) == 0
        assert moment_distance(a, b) == pytest.approx(2)
        assert moment_distance(a, b) == moment_distance(b, a)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            moment_distance(MomentOperator(1, np.eye(2)), MomentOperator(1, np.eye(4)))


class TestDistinguishers:
    spec = DesignSpec.make(8, 8)

    def test_precondition_refusal(self):
        with pytest.raises(PreconditionError):
            distinguisher_advantage(self.spec, 3, 1, "always", 10, Rng(0))
        with pytest.raises(PreconditionError):
            distinguisher_advantage(DesignSpec.make(8, 2), 2, 0, "always", 10, Rng(0))

    def test_always(self):
        r = distinguisher_advantage(self.spec, 1, 0, "always", 50, Rng(1))
        assert r.advantage == 0 and r.stderr == 0

    def test_swap_pairwise(self):
        r = distinguisher_advantage(self.spec, 2, 0, "swap", 300, Rng(2))
        assert r.advantage <= 1 / 16 + 5 * r.stderr

    def test_oracle_probe(self):
        r = distinguisher_advantage(self.spec, 1, 1, "oracle_probe", 300, Rng(3))
        assert r.bound == pytest.approx(4 * 9 / 256)
        assert r.advantage <= r.bound + 5 * r.stderr

    def test_collision_sees_flat_amplitudes(self):
        # design states are flat: collision probability exactly 2^-n; Haar gives 2/(2^n+1)
        r = distinguisher_advantage(self.spec, 2, 0, "collision", 500, Rng(4))
        assert r.accept_design == pytest.approx(1 / 256)
        assert r.accept_haar == pytest.approx(2 / 257, abs=5 * r.stderr)
        assert r.advantage <= r.bound

    def test_resource_checks(self):
        with pytest.raises(ValueError):
            distinguisher_advantage(self.spec, 1, 0, "collision", 10, Rng(0))
        with pytest.raises(ValueError):
            distinguisher_advantage(self.spec, 1, 0, "oracle_probe", 10, Rng(0))
        with pytest.raises(ValueError):
            distinguisher_advantage(self.spec, 1, 0, "guess", 10, Rng(0))
        assert set(applicable_strategies(2, 1)) == set(STRATEGIES)

    def test_budget_enforced(self):
        o = BudgetedOracle(DenseState.plus(2), 1)
        o(DenseState.basis(2, 0))
        with pytest.raises(QueryBudgetExceeded):
            o(DenseState.basis(2, 0))
        assert o.queries == 1
