import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qmoneylab.mathcore import Rng
from qmoneylab.quantumsim import DenseState, fidelity
from qmoneylab.stabilizer import (
    InvalidTableau,
    SignedPauli,
    StabilizerBatch,
    StabilizerTableau,
    canonical_form,
    commutes,
    count_stabilizer_states,
    enumerate_stabilizer_states,
    expectation,
    group_elements,
    measure_pauli,
    multiply_commuting,
    random_group_element,
    random_stabilizer_state,
    random_stabilizer_state_commutant,
    to_statevector,
)


def dense_expectation_plus(psi: DenseState, p: SignedPauli) -> float:
    v = psi.amplitudes
    return float(np.vdot(v, 0.5 * (v + p.apply(v))).real)


class TestSignedPauli:
    def test_labels_roundtrip(self):
        for lab in ["+XIZ", "-YY", "+I"]:
            assert SignedPauli.from_label(lab).label == lab

    def test_bits_roundtrip(self):
        rng = Rng(0)
        for _ in range(100):
            p = SignedPauli.random(5, rng)
            assert SignedPauli.from_bits(5, p.to_bits()) == p
            assert p.to_bits() < 1 << 11

    def test_commutes_basic(self):
        x0, z0 = SignedPauli.from_label("X"), SignedPauli.from_label("Z")
        assert commutes(x0, x0)
        assert not commutes(x0, z0)

    def test_commuting_fraction_exhaustive_n2(self):
        paulis = [SignedPauli(2, 0, x, z) for x in range(4) for z in range(4)]
        nonid = [p for p in paulis if not p.is_identity]
        pairs = [(a, b) for a in nonid for b in nonid]
        comm = sum(commutes(a, b) for a, b in pairs)
        # each non-identity Pauli commutes with 7 of the 15 non-identity ones
        assert comm == 15 * 7

    def test_commuting_fraction_random_n6(self):
        rng = Rng(3)
        trials = 10_000
        hits = sum(commutes(SignedPauli.random(6, rng), SignedPauli.random(6, rng)) for _ in range(trials))
        # uniform pairs: identity commutes with everything, so the exact rate is 1/2 + 1/2^(2n+1)... close to 1/2
        p = 0.5 + 0.5 / 4**6
        assert abs(hits / trials - p) < 5 * math.sqrt(p * (1 - p) / trials)

    def test_products_match_matrices(self):
        rng = Rng(4)
        for _ in range(200):
            a, b = SignedPauli.random(3, rng), SignedPauli.random(3, rng)
            k, c = a.times(b)
            np.testing.assert_allclose(a.matrix() @ b.matrix(), (1j**k) * c.matrix(), atol=1e-12)

    def test_matrix_is_hermitian_pauli(self):
        p = SignedPauli.from_label("-XYZ")
        m = p.matrix()
        np.testing.assert_allclose(m, m.conj().T)
        x = np.array([[0, 1], [1, 0]])
        y = np.array([[0, -1j], [1j, 0]])
        z = np.diag([1, -1])
        # qubit 0 is the least significant index bit, i.e. the rightmost kron factor
        np.testing.assert_allclose(m, -np.kron(z, np.kron(y, x)))

    def test_anticommuting_product_refused(self):
        with pytest.raises(ValueError):
            multiply_commuting(SignedPauli.from_label("X"), SignedPauli.from_label("Z"))


class TestTableau:
    def test_validation(self):
        with pytest.raises(InvalidTableau):
            StabilizerTableau.from_labels(["XI", "ZI"])
        with pytest.raises(InvalidTableau):
            StabilizerTableau.from_labels(["ZI", "ZI"])
        with pytest.raises(InvalidTableau):
            StabilizerTableau.from_labels(["ZI"])

    def test_zero_state_vector(self):
        psi = to_statevector(StabilizerTableau.zero_state(3))
        assert fidelity(psi, DenseState.basis(3, 0)) == pytest.approx(1)

    def test_plus_state_vector(self):
        psi = to_statevector(StabilizerTableau.from_labels(["+X"]))
        np.testing.assert_allclose(psi.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-12)

    def test_eigenstate_property(self):
        rng = Rng(5)
        for i in range(100):
            t = random_stabilizer_state(4, rng.split(i))
            v = to_statevector(t).amplitudes
            for g in t.generators:
                np.testing.assert_allclose(g.apply(v), v, atol=1e-9)

    def test_dense_limit(self):
        with pytest.raises(ValueError):
            to_statevector(StabilizerTableau.zero_state(13))


class TestCanonical:
    def test_idempotent_and_row_invariant(self):
        rng = Rng(6)
        for i in range(50):
            t = random_stabilizer_state(5, rng.split(i))
            c = canonical_form(t)
            assert canonical_form(c).generators == c.generators
            gens = list(t.generators)
            gens[0] = multiply_commuting(gens[0], gens[1])
            gens.reverse()
            assert canonical_form(StabilizerTableau(gens)).generators == c.generators

    def test_sixty_states_at_n2(self):
        assert len(enumerate_stabilizer_states(2)) == 60
        assert len(enumerate_stabilizer_states(1)) == 6

    def test_counting_formula(self):
        assert [count_stabilizer_states(n) for n in (1, 2, 3)] == [6, 60, 1080]

    def test_canonical_equal_iff_same_vector(self):
        rng = Rng(7)
        tabs = [random_stabilizer_state(2, rng.split(i)) for i in range(40)]
        for a in tabs:
            for b in tabs:
                same = fidelity(to_statevector(a), to_statevector(b)) > 1 - 1e-9
                assert same == (a.key() == b.key())


def _chi_square_uniform(counts: Counter, support: int) -> float:
    obs = np.array(list(counts.values()) + [0] * (support - len(counts)))
    return stats.chisquare(obs).pvalue


class TestSampling:
    @pytest.mark.parametrize("sampler", ["batch", "commutant"])
    def test_n1_uniform(self, sampler):
        rng = Rng(8)
        fn = random_stabilizer_state if sampler == "batch" else random_stabilizer_state_commutant
        trials = 60_000 if sampler == "batch" else 12_000
        if sampler == "batch":
            b = StabilizerBatch.sample(trials, 1, rng)
            keys = Counter(b.tableau(i).key() for i in range(trials))
        else:
            keys = Counter(fn(1, rng.split(i)).key() for i in range(trials))
        assert set(keys) == enumerate_stabilizer_states(1)
        sigma = math.sqrt(trials * (1 / 6) * (5 / 6))
        for c in keys.values():
            assert abs(c - trials / 6) < 5 * sigma

    @pytest.mark.parametrize("sampler", ["batch", "commutant"])
    def test_n2_uniform(self, sampler):
        rng = Rng(9)
        trials = 100_000 if sampler == "batch" else 12_000
        if sampler == "batch":
            b = StabilizerBatch.sample(trials, 2, rng)
            keys = Counter(b.tableau(i).key() for i in range(trials))
        else:
            keys = Counter(random_stabilizer_state_commutant(2, rng.split(i)).key() for i in range(trials))
        assert set(keys) == enumerate_stabilizer_states(2)
        assert _chi_square_uniform(keys, 60) > 1e-4

    def test_n3_support(self):
        b = StabilizerBatch.sample(30_000, 3, Rng(10))
        keys = {b.tableau(i).key() for i in range(len(b))}
        assert len(keys) == 1080

    def test_batch_states_valid(self):
        b = StabilizerBatch.sample(200, 9, Rng(11))
        for i in range(len(b)):
            b.tableau(i).validate()

    def test_random_pauli_plus_rate(self):
        # uniform signed Pauli on a random stabilizer state: +1 with probability 1/2
        rng = Rng(12)
        trials = 100_000
        b = StabilizerBatch.sample(trials, 4, rng.split("s"))
        from qmoneylab.stabilizer import random_paulis_batch

        s, x, z = random_paulis_batch(4, trials, rng.split("p"))
        e = b.expectations(np.arange(trials), s, x, z)
        draws = rng.split("m").random(trials)
        plus = np.where(e == 0, draws < 0.5, e == 1)
        assert abs(plus.mean() - 0.5) < 5 * math.sqrt(0.25 / trials)


class TestGroupElements:
    def test_empty_subset_is_identity(self):
        t = random_stabilizer_state(3, Rng(0))
        b = StabilizerBatch.from_tableaux([t])
        s, x, z = b.subset_products(np.array([0]), np.zeros((1, 3), dtype=bool))
        assert (s[0], x[0], z[0]) == (0, 0, 0)

    def test_sampled_elements_stabilize(self):
        rng = Rng(13)
        t = random_stabilizer_state(6, rng.split("t"))
        for i in range(10_000):
            e = random_group_element(t, rng.split(i))
            assert expectation(t, e) == 1
        m = measure_pauli(t, random_group_element(t, rng), rng)
        assert m.outcome == 1 and m.deterministic

    def test_uniform_over_group_n2(self):
        rng = Rng(14)
        t = random_stabilizer_state(2, rng.split("t"))
        elems = {(p.sign, p.x, p.z) for p in group_elements(t)}
        assert len(elems) == 4
        trials = 20_000
        c = Counter()
        for i in range(trials):
            e = random_group_element(t, rng.split(i))
            c[(e.sign, e.x, e.z)] += 1
        assert set(c) == elems
        sigma = math.sqrt(trials * 0.25 * 0.75)
        assert all(abs(v - trials / 4) < 5 * sigma for v in c.values())

    def test_batch_group_elements_stabilize(self):
        rng = Rng(15)
        b = StabilizerBatch.sample(500, 7, rng)
        idx = np.repeat(np.arange(500), 4)
        s, x, z = b.random_group_elements(idx, rng.split("g"))
        assert (b.expectations(idx, s, x, z) == 1).all()
        for r in range(0, 2000, 97):
            p = SignedPauli(7, int(s[r]), int(x[r]), int(z[r]))
            assert expectation(b.tableau(idx[r]), p) == 1


class TestMeasurement:
    def test_z_on_zero(self):
        t = StabilizerTableau.zero_state(1)
        m = measure_pauli(t, SignedPauli.from_label("Z"), Rng(0))
        assert m.outcome == 1 and m.deterministic and m.post is t

    def test_minus_z_on_zero(self):
        t = StabilizerTableau.zero_state(2)
        m = measure_pauli(t, SignedPauli.from_label("-ZZ"), Rng(0))
        assert m.outcome == -1 and m.deterministic

    def test_x_on_zero_unbiased(self):
        t = StabilizerTableau.zero_state(1)
        trials = 10_000
        plus = sum(measure_pauli(t, SignedPauli.from_label("X"), Rng(1).split(i)).outcome == 1 for i in range(trials))
        assert abs(plus / trials - 0.5) < 5 * math.sqrt(0.25 / trials)

    def test_repeat_deterministic(self):
        rng = Rng(2)
        t = random_stabilizer_state(4, rng.split("t"))
        p = SignedPauli.random(4, rng.split("p"))
        m1 = measure_pauli(t, p, rng.split(1))
        m2 = measure_pauli(m1.post, p, rng.split(2))
        assert m2.deterministic and m2.outcome == m1.outcome
        m1.post.validate()

    def test_batch_expectation_matches_tableau(self):
        rng = Rng(16)
        b = StabilizerBatch.sample(300, 5, rng)
        from qmoneylab.stabilizer import random_paulis_batch

        s, x, z = random_paulis_batch(5, 300, rng.split("p"))
        e = b.expectations(np.arange(300), s, x, z)
        for i in range(300):
            p = SignedPauli(5, int(s[i]), int(x[i]), int(z[i]))
            assert e[i] == expectation(b.tableau(i), p)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**32))
    def test_validity_preserved(self, n, seed):
        rng = Rng(seed)
        t = random_stabilizer_state(n, rng.split("t"))
        for i in range(6):
            t = measure_pauli(t, SignedPauli.random(n, rng.split("p", i)), rng.split("m", i)).post
            t.validate()


def dense_crosscheck(instances: int, seed: int) -> tuple[int, int]:
    """Compare outcome law and post-states with the dense simulator.

    Returns (checked, mismatches). Each instance: exact probability of +1 from the
    state vector must equal the tableau's (0, 1/2 or 1); every reachable outcome's
    post-state must match the projected vector; sampled outcomes are tallied too.
    """
    rng = Rng(seed)
    mismatches = 0
    for i in range(instances):
        n = 1 + i % 4
        t = random_stabilizer_state(n, rng.split("t", i))
        # bias towards group elements so deterministic branches get exercised
        if i % 3 == 0:
            p = random_group_element(t, rng.split("g", i))
            if i % 2:
                p = p.negate()
        else:
            p = SignedPauli.random(n, rng.split("p", i))
        psi = to_statevector(t)
        p_plus = dense_expectation_plus(psi, p)
        e = expectation(t, p)
        want = {1: 1.0, -1: 0.0, 0: 0.5}[e]
        if abs(p_plus - want) > 1e-9:
            mismatches += 1
            continue
        for j in range(4):
            m = measure_pauli(t, p, rng.split("m", i, j))
            v = psi.amplitudes
            proj = 0.5 * (v + m.outcome * p.apply(v))
            post = DenseState.normalized(proj)
            if fidelity(post, to_statevector(m.post)) < 1 - 1e-9:
                mismatches += 1
                break
    return instances, mismatches


def test_dense_crosscheck():
    checked, bad = dense_crosscheck(300, 17)
    assert bad == 0


def test_sampled_outcome_frequencies_match_dense():
    rng = Rng(18)
    t = random_stabilizer_state(3, rng.split("t"))
    p = SignedPauli.random(3, rng.split("p"))
    while expectation(t, p) != 0:
        p = SignedPauli.random(3, rng.split("p", p.to_bits()))
    trials = 10_000
    plus = sum(measure_pauli(t, p, rng.split(i)).outcome == 1 for i in range(trials))
    prob = dense_expectation_plus(to_statevector(t), p)
    assert abs(plus / trials - prob) < 5 * math.sqrt(prob * (1 - prob) / trials)
