"""Stabilizer states as generator tableaux, plus a vectorized batch engine.

A signed Pauli is ``(-1)^sign * P_0 (x) ... (x) P_{n-1}`` with qubit k encoded by
bit k of ``x`` and ``z``: 00=I, 10=X, 01=Z, 11=Y. Products carry a phase i^e that
is computed word-parallel from the bit patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .mathcore import Rng, _eliminate
from .quantumsim import DenseState

MAX_QUBITS = 64
MAX_DENSE_QUBITS = 12

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTERS.items()}


def _popcount(v: int) -> int:
    return v.bit_count()


def product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent e (mod 4) with P1*P2 = i^e * P3, P3 the Hermitian Pauli with bits x1^x2, z1^z2."""
    y1, y2 = x1 & z1, x2 & z2
    xo1, xo2 = x1 & ~z1, x2 & ~z2
    zo1, zo2 = z1 & ~x1, z2 & ~x2
    plus = (y1 & zo2) | (xo1 & y2) | (zo1 & xo2)
    minus = (y1 & xo2) | (xo1 & zo2) | (zo1 & y2)
    return (_popcount(plus) - _popcount(minus)) % 4


@dataclass(frozen=True)
class SignedPauli:
    n: int
    sign: int
    x: int
    z: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count {self.n} out of range")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full or self.sign not in (0, 1):
            raise ValueError("Pauli bits do not fit the qubit count")

    @classmethod
    def identity(cls, n: int) -> "SignedPauli":
        return cls(n, 0, 0, 0)

    @classmethod
    def from_label(cls, label: str) -> "SignedPauli":
        """'+XIZ' or '-YY'; character k is qubit k."""
        sign = 0
        if label[0] in "+-":
            sign = int(label[0] == "-")
            label = label[1:]
        x = z = 0
        for k, ch in enumerate(label.upper()):
            bx, bz = _BITS[ch]
            x |= bx << k
            z |= bz << k
        return cls(len(label), sign, x, z)

    @classmethod
    def random(cls, n: int, rng: Rng) -> "SignedPauli":
        return cls(n, rng.bit(), rng.bits(n), rng.bits(n))

    @property
    def label(self) -> str:
        body = "".join(_LETTERS[((self.x >> k) & 1, (self.z >> k) & 1)] for k in range(self.n))
        return ("-" if self.sign else "+") + body

    def __repr__(self) -> str:
        return f"SignedPauli({self.label})"

    @property
    def vec(self) -> int:
        """Symplectic vector: x bits low, z bits high."""
        return self.x | (self.z << self.n)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def negate(self) -> "SignedPauli":
        return SignedPauli(self.n, self.sign ^ 1, self.x, self.z)

    def commutes(self, other: "SignedPauli") -> bool:
        return commutes(self, other)

    def times(self, other: "SignedPauli") -> tuple[int, "SignedPauli"]:
        """self*other = i^k * result with result Hermitian; k in {0, 1} (signs folded in)."""
        _same_n(self, other)
        e = product_phase(self.x, self.z, other.x, other.z)
        sign = self.sign ^ other.sign ^ (e >> 1)
        return e & 1, SignedPauli(self.n, sign, self.x ^ other.x, self.z ^ other.z)

    def to_bits(self) -> int:
        """[sign | x | z], little-endian, 2n+1 bits."""
        return self.sign | (self.x << 1) | (self.z << (self.n + 1))

    @classmethod
    def from_bits(cls, n: int, value: int) -> "SignedPauli":
        full = (1 << n) - 1
        return cls(n, value & 1, (value >> 1) & full, (value >> (n + 1)) & full)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """P|v> using P|b> = i^{|x&z|} (-1)^{|b&z|} |b^x>."""
        idx = np.arange(vec.shape[0])
        parity = np.bitwise_count(idx & self.z) & 1
        coef = (1j ** (_popcount(self.x & self.z) % 4)) * (-1) ** self.sign
        out = np.empty_like(vec)
        out[idx ^ self.x] = coef * np.where(parity, -vec, vec)
        return out

    def matrix(self) -> np.ndarray:
        dim = 1 << self.n
        return self.apply(np.eye(dim, dtype=np.complex128))


def _same_n(p: SignedPauli, q: SignedPauli) -> None:
    if p.n != q.n:
        raise ValueError(f"qubit counts differ: {p.n} vs {q.n}")


def symplectic(p: SignedPauli, q: SignedPauli) -> int:
    return (_popcount(p.x & q.z) + _popcount(p.z & q.x)) & 1


def commutes(p: SignedPauli, q: SignedPauli) -> bool:
    _same_n(p, q)
    return symplectic(p, q) == 0


def multiply_commuting(p: SignedPauli, q: SignedPauli) -> SignedPauli:
    k, out = p.times(q)
    if k:
        raise ValueError(f"{p} and {q} anticommute")
    return out


# ---------------------------------------------------------------- tableau

class InvalidTableau(ValueError):
    pass


class StabilizerTableau:
    """n commuting, independent signed Pauli generators."""

    __slots__ = ("n", "generators")

    def __init__(self, generators: Sequence[SignedPauli], *, check: bool = True):
        gens = tuple(generators)
        if not gens:
            raise InvalidTableau("empty tableau")
        self.n = gens[0].n
        self.generators = gens
        if check:
            self.validate()

    def validate(self) -> None:
        n, gens = self.n, self.generators
        if len(gens) != n or any(g.n != n for g in gens):
            raise InvalidTableau(f"need exactly {n} generators on {n} qubits")
        for a in range(n):
            for b in range(a + 1, n):
                if symplectic(gens[a], gens[b]):
                    raise InvalidTableau(f"generators {a} and {b} anticommute")
        if len(_eliminate([g.vec for g in gens], 2 * n)) != n:
            raise InvalidTableau("generators are dependent")

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "StabilizerTableau":
        return cls([SignedPauli.from_label(s) for s in labels])

    @classmethod
    def zero_state(cls, n: int) -> "StabilizerTableau":
        return cls([SignedPauli(n, 0, 0, 1 << k) for k in range(n)], check=False)

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.generators]

    def __repr__(self) -> str:
        return f"StabilizerTableau({', '.join(self.labels)})"

    def __eq__(self, other) -> bool:
        """Same state (same signed group)."""
        return isinstance(other, StabilizerTableau) and canonical_form(self).generators == canonical_form(other).generators

    def __hash__(self) -> int:
        return hash(canonical_form(self).generators)

    def key(self) -> tuple:
        return tuple((g.sign, g.x, g.z) for g in canonical_form(self).generators)


def _reduce_rows(gens: list[SignedPauli]) -> list[tuple[int, SignedPauli]]:
    """RREF over the symplectic vector (X block pivots first), tracking signs."""
    rows = list(gens)
    n2 = 2 * rows[0].n
    out: list[tuple[int, SignedPauli]] = []
    rank = 0
    for c in range(n2):
        pr = next((i for i in range(rank, len(rows)) if rows[i].vec >> c & 1), None)
        if pr is None:
            continue
        rows[pr], rows[rank] = rows[rank], rows[pr]
        piv = rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i].vec >> c & 1:
                rows[i] = multiply_commuting(rows[i], piv)
        out.append((c, piv))
        rank += 1
    for i, (c, _) in enumerate(out):
        out[i] = (c, rows[i])
    return out


def canonical_form(t: StabilizerTableau) -> StabilizerTableau:
    reduced = _reduce_rows(list(t.generators))
    if len(reduced) != t.n:
        raise InvalidTableau("generators are dependent")
    return StabilizerTableau([g for _, g in reduced], check=False)


def decompose(t: StabilizerTableau, p: SignedPauli) -> SignedPauli | None:
    """The group element with p's Pauli part (its sign tells +p or -p), or None if +-p is not in the group."""
    acc = SignedPauli.identity(t.n)
    v = p.vec
    for c, g in _reduce_rows(list(t.generators)):
        if v >> c & 1:
            acc = multiply_commuting(acc, g)
            v ^= g.vec
    if v:
        return None
    return acc


def random_group_element(t: StabilizerTableau, rng: Rng) -> SignedPauli:
    acc = SignedPauli.identity(t.n)
    mask = rng.bits(t.n)
    for k, g in enumerate(t.generators):
        if mask >> k & 1:
            acc = multiply_commuting(acc, g)
    return acc


def group_elements(t: StabilizerTableau) -> list[SignedPauli]:
    if t.n > 12:
        raise ValueError("group listing limited to n <= 12")
    out = []
    for mask in range(1 << t.n):
        acc = SignedPauli.identity(t.n)
        for k, g in enumerate(t.generators):
            if mask >> k & 1:
                acc = multiply_commuting(acc, g)
        out.append(acc)
    return out


@dataclass(frozen=True)
class PauliMeasurement:
    outcome: int
    deterministic: bool
    post: StabilizerTableau


def expectation(t: StabilizerTableau, p: SignedPauli) -> int:
    """+1 or -1 when the outcome is deterministic, 0 when it is unbiased."""
    _same_n(t.generators[0], p)
    if any(symplectic(g, p) for g in t.generators):
        return 0
    elem = decompose(t, p)
    return 1 if elem.sign == p.sign else -1


def measure_pauli(t: StabilizerTableau, p: SignedPauli, rng: Rng) -> PauliMeasurement:
    _same_n(t.generators[0], p)
    gens = list(t.generators)
    anti = [i for i, g in enumerate(gens) if symplectic(g, p)]
    if not anti:
        elem = decompose(t, p)
        return PauliMeasurement(1 if elem.sign == p.sign else -1, True, t)
    outcome = 1 if rng.bit() == 0 else -1
    a = anti[0]
    for b in anti[1:]:
        gens[b] = multiply_commuting(gens[b], gens[a])
    gens[a] = p if outcome == 1 else p.negate()
    return PauliMeasurement(outcome, False, StabilizerTableau(gens, check=False))


def to_statevector(t: StabilizerTableau) -> DenseState:
    if t.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense conversion limited to n <= {MAX_DENSE_QUBITS}")
    dim = 1 << t.n
    g = np.random.Generator(np.random.Philox(key=0x5EED))
    vec = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    for p in t.generators:
        vec = 0.5 * (vec + p.apply(vec))
    vec /= np.linalg.norm(vec)
    lead = vec[np.flatnonzero(np.abs(vec) > 1e-9)[0]]
    vec *= abs(lead) / lead
    return DenseState(vec, check=False)


# ---------------------------------------------------------------- sampling

def random_stabilizer_state(n: int, rng: Rng) -> StabilizerTableau:
    """Uniform over all n-qubit stabilizer states."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}")
    return StabilizerBatch.sample(1, n, rng).tableau(0)


def random_stabilizer_state_commutant(n: int, rng: Rng) -> StabilizerTableau:
    """Reference sampler: each generator uniform among Paulis commuting with and
    independent of the earlier ones, with a uniform sign."""
    from .mathcore import BitMatrix, gf2_solve

    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}")
    gens: list[SignedPauli] = []
    span_rows: list[int] = []
    full = (1 << n) - 1
    while len(gens) < n:
        # v commutes with g iff <g_swapped, v> = 0, one linear constraint per generator
        cons = [(g.z | (g.x << n)) for g in gens]
        if cons:
            _, basis = gf2_solve(BitMatrix(len(cons), 2 * n, cons), 0)
        else:
            basis = [1 << j for j in range(2 * n)]
        while True:
            mask = rng.bits(len(basis))
            v = 0
            for j, b in enumerate(basis):
                if mask >> j & 1:
                    v ^= b
            if len(_eliminate(span_rows + [v], 2 * n)) == len(span_rows) + 1:
                break
        span_rows.append(v)
        gens.append(SignedPauli(n, rng.bit(), v & full, v >> n))
    return StabilizerTableau(gens, check=False)


def count_stabilizer_states(n: int) -> int:
    """2^n * prod_{k=1..n} (2^k + 1)."""
    return (1 << n) * math.prod((1 << k) + 1 for k in range(1, n + 1))


def enumerate_stabilizer_states(n: int) -> set[tuple]:
    """Canonical keys of every stabilizer state by exhaustive generator search (n <= 3)."""
    if n > 3:
        raise ValueError("exhaustive enumeration limited to n <= 3")
    full = (1 << n) - 1
    paulis = [(v & full, v >> n) for v in range(1, 1 << (2 * n))]
    found: set[tuple] = set()
    seen_groups: set[frozenset] = set()

    def extend(chosen: list[tuple[int, int]], start: int):
        if len(chosen) == n:
            vecs = [x | (z << n) for x, z in chosen]
            span = {0}
            for v in vecs:
                span |= {s ^ v for s in span}
            key = frozenset(span)
            if key in seen_groups:
                return
            seen_groups.add(key)
            for signs in range(1 << n):
                gens = [SignedPauli(n, (signs >> k) & 1, x, z) for k, (x, z) in enumerate(chosen)]
                found.add(StabilizerTableau(gens, check=False).key())
            return
        for i in range(start, len(paulis)):
            x, z = paulis[i]
            cand = SignedPauli(n, 0, x, z)
            if any(symplectic(cand, SignedPauli(n, 0, a, b)) for a, b in chosen):
                continue
            vecs = [a | (b << n) for a, b in chosen] + [x | (z << n)]
            if len(_eliminate(vecs, 2 * n)) < len(vecs):
                continue
            extend(chosen + [(x, z)], i + 1)

    extend([], 0)
    return found


# ---------------------------------------------------------------- batch engine

_U64 = np.uint64


def _parity(a: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(a) & 1).astype(np.uint8)


def symplectic_batch(ax, az, bx, bz) -> np.ndarray:
    return _parity((ax & bz) ^ (az & bx))


def product_phase_batch(x1, z1, x2, z2) -> np.ndarray:
    y1, y2 = x1 & z1, x2 & z2
    xo1, xo2 = x1 & ~z1, x2 & ~z2
    zo1, zo2 = z1 & ~x1, z2 & ~x2
    plus = (y1 & zo2) | (xo1 & y2) | (zo1 & xo2)
    minus = (y1 & xo2) | (xo1 & zo2) | (zo1 & y2)
    return (np.bitwise_count(plus).astype(np.int64) - np.bitwise_count(minus).astype(np.int64)) % 4


def random_paulis_batch(n: int, shape, rng: Rng):
    """Uniform signed Paulis as (sign uint8, x uint64, z uint64) arrays."""
    g = rng.generator
    mask = _U64((1 << n) - 1) if n < 64 else _U64(0xFFFFFFFFFFFFFFFF)
    x = g.integers(0, 2**64, size=shape, dtype=np.uint64, endpoint=False) & mask
    z = g.integers(0, 2**64, size=shape, dtype=np.uint64, endpoint=False) & mask
    s = g.integers(0, 2, size=shape, dtype=np.uint8)
    return s, x, z


class StabilizerBatch:
    """B stabilizer states on n qubits held as numpy arrays.

    Besides the generators, every state keeps dual vectors ``d_k`` with
    <g_j, d_k> = [j == k], so the decomposition of a group element is read off
    with one symplectic product per generator.
    """

    def __init__(self, n, sign, gx, gz, dx, dz):
        self.n = n
        self.sign = sign
        self.gx, self.gz = gx, gz
        self.dx, self.dz = dx, dz

    def __len__(self) -> int:
        return self.sign.shape[0]

    def copy(self) -> "StabilizerBatch":
        return StabilizerBatch(self.n, self.sign.copy(), self.gx.copy(), self.gz.copy(),
                               self.dx.copy(), self.dz.copy())

    @classmethod
    def sample(cls, count: int, n: int, rng: Rng) -> "StabilizerBatch":
        """Uniform i.i.d. stabilizer states via a random symplectic basis.

        Each step draws v uniform nonzero in the current free space F and w in F with
        <v, w> = 1, then projects F onto the symplectic complement of {v, w}. The
        number of choices never depends on history, so (v_1, w_1, ...) is uniform
        over symplectic bases and span(v_k) is uniform over stabilizer groups.
        F is stored as a spanning set of 2n vectors; uniform coefficients over a
        spanning set give a uniform element of its span.
        """
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}")
        g = rng.generator
        B = count
        one = _U64(1)
        fx = np.zeros((B, 2 * n), dtype=np.uint64)
        fz = np.zeros((B, 2 * n), dtype=np.uint64)
        for k in range(n):
            fx[:, k] = one << _U64(k)
            fz[:, n + k] = one << _U64(k)
        gx = np.zeros((B, n), dtype=np.uint64)
        gz = np.zeros((B, n), dtype=np.uint64)
        dx = np.zeros((B, n), dtype=np.uint64)
        dz = np.zeros((B, n), dtype=np.uint64)

        def draw(rows: np.ndarray):
            c = g.integers(0, 2, size=(rows.size, 2 * n), dtype=np.uint8).astype(bool)
            vx = np.bitwise_xor.reduce(np.where(c, fx[rows], _U64(0)), axis=1)
            vz = np.bitwise_xor.reduce(np.where(c, fz[rows], _U64(0)), axis=1)
            return vx, vz

        all_rows = np.arange(B)
        for k in range(n):
            vx = np.zeros(B, dtype=np.uint64)
            vz = np.zeros(B, dtype=np.uint64)
            todo = all_rows
            while todo.size:
                ax, az = draw(todo)
                vx[todo], vz[todo] = ax, az
                todo = todo[(ax | az) == 0]
            wx = np.zeros(B, dtype=np.uint64)
            wz = np.zeros(B, dtype=np.uint64)
            todo = all_rows
            while todo.size:
                ax, az = draw(todo)
                wx[todo], wz[todo] = ax, az
                todo = todo[symplectic_batch(vx[todo], vz[todo], ax, az) == 0]
            gx[:, k], gz[:, k], dx[:, k], dz[:, k] = vx, vz, wx, wz
            a = symplectic_batch(fx, fz, wx[:, None], wz[:, None]).astype(bool)
            b = symplectic_batch(fx, fz, vx[:, None], vz[:, None]).astype(bool)
            fx ^= np.where(a, vx[:, None], _U64(0)) ^ np.where(b, wx[:, None], _U64(0))
            fz ^= np.where(a, vz[:, None], _U64(0)) ^ np.where(b, wz[:, None], _U64(0))
        sign = g.integers(0, 2, size=(B, n), dtype=np.uint8)
        return cls(n, sign, gx, gz, dx, dz)

    @classmethod
    def from_tableaux(cls, tabs: Sequence[StabilizerTableau]) -> "StabilizerBatch":
        n = tabs[0].n
        B = len(tabs)
        sign = np.zeros((B, n), dtype=np.uint8)
        gx = np.zeros((B, n), dtype=np.uint64)
        gz = np.zeros((B, n), dtype=np.uint64)
        dx = np.zeros((B, n), dtype=np.uint64)
        dz = np.zeros((B, n), dtype=np.uint64)
        for i, t in enumerate(tabs):
            duals = dual_vectors(t)
            for k, gen in enumerate(t.generators):
                sign[i, k], gx[i, k], gz[i, k] = gen.sign, gen.x, gen.z
                dx[i, k], dz[i, k] = duals[k]
        return cls(n, sign, gx, gz, dx, dz)

    def tableau(self, i: int) -> StabilizerTableau:
        n = self.n
        return StabilizerTableau(
            [SignedPauli(n, int(self.sign[i, k]), int(self.gx[i, k]), int(self.gz[i, k])) for k in range(n)],
            check=False,
        )

    def set_tableau(self, i: int, t: StabilizerTableau) -> None:
        duals = dual_vectors(t)
        for k, gen in enumerate(t.generators):
            self.sign[i, k], self.gx[i, k], self.gz[i, k] = gen.sign, gen.x, gen.z
            self.dx[i, k], self.dz[i, k] = duals[k]

    def subset_products(self, idx: np.ndarray, coeffs: np.ndarray):
        """Products of the generators of states ``idx`` selected by boolean ``coeffs`` (K, n)."""
        K = idx.shape[0]
        ax = np.zeros(K, dtype=np.uint64)
        az = np.zeros(K, dtype=np.uint64)
        s = np.zeros(K, dtype=np.uint8)
        for k in range(self.n):
            sel = coeffs[:, k]
            bx, bz, bs = self.gx[idx, k], self.gz[idx, k], self.sign[idx, k]
            e = product_phase_batch(ax, az, bx, bz)
            flip = (bs ^ (e >> 1).astype(np.uint8)) & sel
            s ^= flip.astype(np.uint8)
            ax = np.where(sel, ax ^ bx, ax)
            az = np.where(sel, az ^ bz, az)
        return s, ax, az

    def random_group_elements(self, idx: np.ndarray, rng: Rng):
        coeffs = rng.generator.integers(0, 2, size=(idx.shape[0], self.n), dtype=np.uint8).astype(bool)
        return self.subset_products(idx, coeffs)

    def expectations(self, idx: np.ndarray, ps, px, pz) -> np.ndarray:
        """For each (state idx[r], Pauli r): +1/-1 deterministic, 0 unbiased."""
        anti = np.zeros(idx.shape[0], dtype=bool)
        coeffs = np.zeros((idx.shape[0], self.n), dtype=bool)
        for k in range(self.n):
            anti |= symplectic_batch(self.gx[idx, k], self.gz[idx, k], px, pz).astype(bool)
            coeffs[:, k] = symplectic_batch(px, pz, self.dx[idx, k], self.dz[idx, k]).astype(bool)
        s, _, _ = self.subset_products(idx, coeffs)
        out = np.where(s == ps, 1, -1).astype(np.int8)
        out[anti] = 0
        return out


    def project(self, idx: np.ndarray, ps, px, pz) -> None:
        """In place: replace state idx[r] by its +1 post-measurement state for Pauli r.

        Each Pauli must be unbiased on its state. With a the first generator that
        anticommutes with p, the other anticommuting generators are multiplied by
        g_a, g_a becomes p, the dual of a becomes g_a and every other dual d_k picks
        up <p, d_k> g_a, which keeps <g_j, d_k> = [j == k].
        """
        idx = np.asarray(idx)
        if idx.size == 0:
            return
        n = self.n
        r = np.arange(idx.size)
        gx, gz, sg = self.gx[idx], self.gz[idx], self.sign[idx]
        dx, dz = self.dx[idx], self.dz[idx]
        anti = symplectic_batch(gx, gz, px[:, None], pz[:, None]).astype(bool)
        if not anti.any(axis=1).all():
            raise ValueError("projection needs a Pauli that is unbiased on its state")
        a = np.argmax(anti, axis=1)
        ax, az, asg = gx[r, a], gz[r, a], sg[r, a]
        cols = np.arange(n)[None, :]
        mul = anti & (cols != a[:, None])
        e = product_phase_batch(gx, gz, ax[:, None], az[:, None])
        flip = (asg[:, None] ^ (e >> 1).astype(np.uint8)) & mul
        sg = sg ^ flip.astype(np.uint8)
        gx = np.where(mul, gx ^ ax[:, None], gx)
        gz = np.where(mul, gz ^ az[:, None], gz)
        c = symplectic_batch(dx, dz, px[:, None], pz[:, None]).astype(bool) & (cols != a[:, None])
        dx = np.where(c, dx ^ ax[:, None], dx)
        dz = np.where(c, dz ^ az[:, None], dz)
        dx[r, a], dz[r, a] = ax, az
        gx[r, a], gz[r, a], sg[r, a] = px, pz, ps
        self.gx[idx], self.gz[idx], self.sign[idx] = gx, gz, sg
        self.dx[idx], self.dz[idx] = dx, dz

def dual_vectors(t: StabilizerTableau) -> list[tuple[int, int]]:
    """Vectors d_k with <g_j, d_k> = [j == k] (any particular solution)."""
    from .mathcore import BitMatrix, gf2_solve

    n = t.n
    # <g, d> = g.x.d.z + g.z.d.x  ->  row (g.z in the x slots, g.x in the z slots)
    rows = [g.z | (g.x << n) for g in t.generators]
    a = BitMatrix(n, 2 * n, rows)
    full = (1 << n) - 1
    out = []
    for k in range(n):
        sol = gf2_solve(a, 1 << k)
        if sol is None:
            raise InvalidTableau("generators are dependent")
        v = sol[0]
        out.append((v & full, v >> n))
    return out
