import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmoneylab.mathcore import Rng
from qmoneylab.money_stabilizer import (
    BankKeys,
    MeasurementTable,
    ParseError,
    SchemeParams,
    accept_probability,
    attack_commuting,
    attack_gaussian,
    authenticate,
    commuting_threshold,
    deserialize,
    expected_row_rate,
    forge_note,
    from_json_file,
    mint,
    naive_forgery,
    note_accept_probability,
    null_false_positive_rate,
    reauthenticate_loop,
    row_expectations,
    sample_row_outcomes,
    serialize,
    to_json_file,
)
from qmoneylab.stabilizer import StabilizerBatch, enumerate_stabilizer_states, SignedPauli, expectation


@pytest.fixture(scope="module")
def keys():
    return BankKeys.generate(Rng(0))


def within_5sigma(hits, trials, p):
    return abs(hits / trials - p) <= 5 * math.sqrt(p * (1 - p) / trials) + 1e-12


class TestParams:
    def test_even_l_rejected(self):
        with pytest.raises(ValueError):
            SchemeParams(4, 2, 3, 0.5)

    def test_limits(self):
        with pytest.raises(ValueError):
            SchemeParams(33, 1, 1, 0.5)
        with pytest.raises(ValueError):
            SchemeParams(4, 10_001, 1001, 0.5)
        with pytest.raises(ValueError):
            SchemeParams(4, 3, 3, 1.5)
        with pytest.raises(ValueError):
            SchemeParams(4, 3, 3, 0.5, rule="unanimous")

    def test_regime_flags(self):
        r = SchemeParams(8, 20_001, 100, 0.05).regime()
        assert r["m_above_n_over_eps"] is False
        r = SchemeParams(2, 20_001, 320, 0.05).regime()
        assert r["m_above_n_over_eps"] and r["l_above_inv_eps_sq"]
        assert SchemeParams(16, 3, 8, 0.5).regime()["gaussian_regime"]

    def test_accept_counts(self):
        assert SchemeParams(8, 1001, 50, 0.2, rule="majority").accept_count() == 501
        # strictly above 1001 * 0.55 = 550.55
        assert SchemeParams(8, 1001, 50, 0.2).accept_count() == 551
        assert SchemeParams(8, 11, 5, 0.0).accept_count() == 6


class TestMint:
    @pytest.mark.parametrize("eps", [0.0, 0.2, 1.0])
    def test_row_rate(self, keys, eps):
        note = mint(SchemeParams(8, 2001, 50, eps), keys, Rng(1).split(eps))
        plus = sample_row_outcomes(note, Rng(2))
        assert within_5sigma(plus.sum(), plus.size, 0.5 + eps / 2)

    def test_eps_one_rows_stabilize(self, keys):
        note = mint(SchemeParams(6, 51, 20, 1.0), keys, Rng(3))
        assert (row_expectations(note.states, note.table) == 1).all()

    def test_uniform_row_unbiased_exhaustive(self):
        # every signed Pauli on every 2-qubit stabilizer state: Pr[+1] averages to 1/2
        from qmoneylab.stabilizer import StabilizerTableau

        total = 0.0
        count = 0
        for key in enumerate_stabilizer_states(2):
            t = StabilizerTableau([SignedPauli(2, s, x, z) for s, x, z in key])
            for v in range(32):
                e = expectation(t, SignedPauli.from_bits(2, v))
                total += (1 + e) / 2
                count += 1
        assert total / count == pytest.approx(0.5)

    def test_table_bits(self, keys):
        note = mint(SchemeParams(4, 3, 3, 0.5, rule="majority"), keys, Rng(4))
        assert note.table.bit_length == 9 * 3 * 3 == 81
        assert len(note.table.to_bytes()) == 11

    def test_small_table_bytes(self, keys):
        note = mint(SchemeParams(4, 1, 3, 0.5), keys, Rng(5))
        assert note.table.bit_length == 27 and len(note.table.to_bytes()) == 4

    def test_signature(self, keys):
        note = mint(SchemeParams(4, 5, 4, 0.5), keys, Rng(6))
        assert keys.public.verify(note.message(), note.sig)


class TestTableEncoding:
    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 12), l=st.integers(1, 5), m=st.integers(1, 5), seed=st.integers(0, 10**6))
    def test_roundtrip(self, n, l, m, seed):
        from qmoneylab.stabilizer import random_paulis_batch

        s, x, z = random_paulis_batch(n, (l, m), Rng(seed))
        t = MeasurementTable(n, s, x, z)
        data = t.to_bytes()
        assert len(data) == ((2 * n + 1) * l * m + 7) // 8
        assert MeasurementTable.from_bytes(data, n, l, m) == t

    def test_bit_layout(self):
        # one row +X_0 Z_1 on 2 qubits: bits [sign, x0, x1, z0, z1] = 0 1 0 0 1
        p = SignedPauli.from_label("+XZ")
        t = MeasurementTable(2, np.array([[p.sign]], np.uint8), np.array([[p.x]], np.uint64), np.array([[p.z]], np.uint64))
        assert t.to_bytes() == bytes([0b10010])
        assert p.to_bits() == 0b10010


class TestSerialization:
    def test_binary_roundtrip(self, keys):
        note = mint(SchemeParams(5, 7, 6, 0.3), keys, Rng(7))
        back = deserialize(serialize(note))
        assert back.table == note.table and back.sig == note.sig and back.params == note.params
        assert [back.states.tableau(i) for i in range(7)] == [note.states.tableau(i) for i in range(7)]
        assert serialize(back) == serialize(note)

    def test_json_roundtrip(self, keys):
        note = mint(SchemeParams(5, 7, 6, 0.3), keys, Rng(8))
        back = from_json_file(to_json_file(note))
        assert back.table == note.table and back.sig == note.sig
        assert authenticate(back, keys.public, Rng(9)).reason != "bad signature"

    def test_truncation_offset(self, keys):
        data = serialize(mint(SchemeParams(4, 3, 3, 0.5), keys, Rng(10)))
        with pytest.raises(ParseError) as exc:
            deserialize(data[:20])
        assert exc.value.offset == 9
        with pytest.raises(ParseError) as exc:
            deserialize(data[:-1])
        assert exc.value.offset > 20

    def test_bad_magic(self):
        with pytest.raises(ParseError) as exc:
            deserialize(b"XXXX\x01rest")
        assert exc.value.offset == 0

    def test_trailing_bytes(self, keys):
        data = serialize(mint(SchemeParams(4, 3, 3, 0.5), keys, Rng(11)))
        with pytest.raises(ParseError):
            deserialize(data + b"\x00")


class TestAuthenticate:
    def test_eps_one_always(self, keys):
        note = mint(SchemeParams(6, 31, 10, 1.0), keys, Rng(12))
        trace, post = reauthenticate_loop(note, keys.public, 20, Rng(13))
        assert all(trace)
        assert post.damage == 0.0
        assert [post.states.tableau(i) for i in range(31)] == [note.states.tableau(i) for i in range(31)]

    def test_tampered_table(self, keys):
        note = mint(SchemeParams(6, 31, 10, 0.5), keys, Rng(14))
        note.table.z[0, 0] ^= np.uint64(1)
        res = authenticate(note, keys.public, Rng(15))
        assert not res.accept and res.reason == "bad signature"
        assert res.post is note

    def test_tampered_sig(self, keys):
        note = mint(SchemeParams(6, 31, 10, 0.5), keys, Rng(16))
        bad = forge_note(note, note.states)
        bad.sig = bytes(32)
        assert authenticate(bad, keys.public, Rng(17)).reason == "bad signature"

    def test_other_bank_rejects(self, keys):
        note = mint(SchemeParams(6, 31, 10, 0.5), keys, Rng(18))
        other = BankKeys.generate(Rng(19))
        assert authenticate(note, other.public, Rng(20)).reason == "bad signature"

    def test_gap_small(self, keys):
        p = SchemeParams(8, 1001, 50, 0.2)
        g, f = [], []
        for i in range(30):
            note = mint(p, keys, Rng(21).split(i))
            g.append(authenticate(note, keys.public, Rng(22).split(i)).accept_probability)
            f.append(authenticate(naive_forgery(note, Rng(23).split(i)), keys.public, Rng(24).split(i)).accept_probability)
        assert np.mean(g) >= 0.999
        assert np.mean(f) <= 2e-3

    def test_majority_rule_does_not_separate_naive(self, keys):
        # an unrelated state answers +1 with probability exactly 1/2, which sits on a majority cut
        p = SchemeParams(8, 1001, 50, 0.2, rule="majority")
        note = mint(p, keys, Rng(25))
        probs = [authenticate(naive_forgery(note, Rng(26).split(i)), keys.public, Rng(27).split(i)).accept_probability
                 for i in range(10)]
        assert 0.3 < np.mean(probs) < 0.7

    def test_accept_probability_matches_binomial(self):
        assert accept_probability(10, 0, 11) == 0.0
        assert accept_probability(11, 0, 11) == 1.0
        assert accept_probability(0, 3, 2) == pytest.approx(0.5)

    def test_sampled_acceptance_matches_exact(self, keys):
        note = mint(SchemeParams(4, 21, 8, 0.3, rule="majority"), keys, Rng(28))
        trials = 3000
        hits = 0
        probs = []
        for i in range(trials):
            r = authenticate(note, keys.public, Rng(29).split(i))
            hits += r.accept
            probs.append(r.accept_probability)
        assert within_5sigma(hits, trials, float(np.mean(probs)))

    def test_collapse_mode_reject_branch(self, keys):
        note = naive_forgery(mint(SchemeParams(6, 41, 10, 0.5), keys, Rng(30)), Rng(31))
        res = authenticate(note, keys.public, Rng(32), mode="collapse")
        # every measured register becomes an eigenstate of its measured row
        assert res.plus_count >= 0
        res.post.states.tableau(0).validate()

    def test_rejecting_branch_stays_below_threshold(self, keys):
        p = SchemeParams(6, 41, 10, 0.5)
        note = naive_forgery(mint(p, keys, Rng(33)), Rng(34))
        for i in range(50):
            r = authenticate(note, keys.public, Rng(35).split(i))
            if not r.accept:
                assert r.plus_count < p.accept_count()

    def test_unknown_mode(self, keys):
        note = mint(SchemeParams(4, 3, 3, 0.5), keys, Rng(36))
        with pytest.raises(ValueError):
            authenticate(note, keys.public, Rng(0), mode="weak")

    def test_reauth_many(self, keys):
        p = SchemeParams(8, 2765, 50, 0.2)
        for i in range(5):
            trace, post = reauthenticate_loop(mint(p, keys, Rng(37).split(i)), keys.public, 100, Rng(38).split(i))
            assert all(trace)
            assert expected_row_rate(post.states, post.table) == pytest.approx(0.6, abs=0.02)


class TestGaussianAttack:
    def test_eps_one_all_rows(self, keys):
        note = mint(SchemeParams(10, 21, 6, 1.0), keys, Rng(40))
        f = attack_gaussian(note.table, note.params, Rng(41))
        e = row_expectations(f.states, note.table)
        # with eps = 1 and m <= n all rows commute; independent ones are all satisfied
        assert (e == 1).all()

    def test_weak_regime(self, keys):
        p = SchemeParams(16, 101, 8, 0.5)
        note = mint(p, keys, Rng(42))
        f = attack_gaussian(note.table, p, Rng(43))
        forged = forge_note(note, f.states)
        g = expected_row_rate(note.states, note.table)
        assert expected_row_rate(forged.states, forged.table) >= g - 0.05

    def test_strong_regime_collapse(self, keys):
        p = SchemeParams(8, 101, 512, 0.25)
        note = mint(p, keys, Rng(44))
        f = attack_gaussian(note.table, p, Rng(45))
        rate = expected_row_rate(f.states, note.table)
        assert rate - 0.5 < 0.5 * (expected_row_rate(note.states, note.table) - 0.5)

    def test_degree_order_is_commuting_attack_at_large_m(self, keys):
        # ranking rows by commuting degree exploits the bias once eps > 1/sqrt(m)
        p = SchemeParams(8, 51, 256, 0.5)
        note = mint(p, keys, Rng(46))
        f = attack_gaussian(note.table, p, Rng(47), order="degree")
        assert expected_row_rate(f.states, note.table) >= expected_row_rate(note.states, note.table) - 0.05

    def test_selected_rows_satisfied(self, keys):
        p = SchemeParams(6, 21, 12, 0.3)
        note = mint(p, keys, Rng(48))
        f = attack_gaussian(note.table, p, Rng(49))
        e = row_expectations(f.states, note.table)
        assert ((e == 1).sum(axis=1) >= f.selected).all()

    def test_unknown_order(self, keys):
        note = mint(SchemeParams(4, 3, 3, 0.5), keys, Rng(50))
        with pytest.raises(ValueError):
            attack_gaussian(note.table, note.params, Rng(0), order="best")


class TestCommutingAttack:
    def test_recovers_groups(self, keys):
        p = SchemeParams(8, 101, 400, 0.5)
        note = mint(p, keys, Rng(51))
        rep = attack_commuting(note.table, p, truth=note.states)
        assert rep.state_recovery_rate >= 0.95

    def test_false_positive_at_eps_zero(self, keys):
        p = SchemeParams(8, 51, 400, 0.0)
        note = mint(p, keys, Rng(52))
        rep = attack_commuting(note.table, p)
        fp = rep.false_positive_rate
        cells = 51 * 400
        assert rep.classified_fraction <= fp + 5 * math.sqrt(fp * (1 - fp) / cells) + 1 / cells

    def test_eps_one_classifies_everything(self, keys):
        p = SchemeParams(8, 11, 400, 1.0)
        note = mint(p, keys, Rng(53))
        rep = attack_commuting(note.table, p, truth=note.states)
        assert rep.classified_fraction == 1.0
        assert rep.note_recovered

    def test_threshold_and_null_rate(self):
        assert commuting_threshold(101, 1.5) == pytest.approx(50 + 1.5 * math.sqrt(101))
        from scipy import stats

        # cross-check the binomial tail against direct summation
        m, thr = 101, commuting_threshold(101, 1.5)
        direct = sum(math.comb(m - 1, k) for k in range(math.floor(thr) + 1, m)) / 2 ** (m - 1)
        assert null_false_positive_rate(m, 1.5) == pytest.approx(direct)
        assert stats.binom.sf(50, 100, 0.5) < 0.5


class TestBatchProjection:
    def test_matches_dense(self):
        from qmoneylab.stabilizer import random_paulis_batch, to_statevector

        n, B = 3, 150
        b = StabilizerBatch.sample(B, n, Rng(60))
        orig = b.copy()
        s, x, z = random_paulis_batch(n, (B,), Rng(61))
        idx = np.flatnonzero(b.expectations(np.arange(B), s, x, z) == 0)
        b.project(idx, s[idx], x[idx], z[idx])
        for r in idx:
            P = SignedPauli(n, int(s[r]), int(x[r]), int(z[r])).matrix()
            v = to_statevector(orig.tableau(r)).amplitudes
            w = v + P @ v
            w /= np.linalg.norm(w)
            u = to_statevector(b.tableau(r)).amplitudes
            assert abs(abs(np.vdot(u, w)) - 1) < 1e-9

    def test_rejects_deterministic(self):
        b = StabilizerBatch.sample(1, 2, Rng(62))
        g = b.tableau(0).generators[0]
        with pytest.raises(ValueError):
            b.project(np.array([0]), np.array([g.sign], np.uint8), np.array([g.x], np.uint64), np.array([g.z], np.uint64))


class TestExactAcceptance:
    def test_matches_enumeration(self, keys):
        import itertools

        p = SchemeParams(3, 5, 3, 0.4)
        note = naive_forgery(mint(p, keys, Rng(60)), Rng(61))
        e = row_expectations(note.states, note.table)
        total = 0.0
        # every choice of one row per state, then the unbiased rows by binomial tail
        for js in itertools.product(range(3), repeat=5):
            ev = e[np.arange(5), js]
            total += accept_probability(int((ev == 1).sum()), int((ev == 0).sum()), p.accept_count())
        assert note_accept_probability(note, keys.public) == pytest.approx(total / 3**5)

    def test_matches_sampling(self, keys):
        p = SchemeParams(4, 11, 5, 0.4)
        note = mint(p, keys, Rng(62))
        exact = note_accept_probability(note, keys.public)
        trials = 4000
        hits = sum(authenticate(note, keys.public, Rng(63).split(i)).accept for i in range(trials))
        assert abs(hits / trials - exact) <= 5 * math.sqrt(exact * (1 - exact) / trials)

    def test_bad_signature(self, keys):
        note = mint(SchemeParams(3, 3, 3, 0.5), keys, Rng(64))
        other = BankKeys.generate(Rng(65))
        assert note_accept_probability(note, other.public) == 0.0
