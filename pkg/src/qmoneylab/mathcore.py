"""Exact arithmetic substrate: GF(2) linear algebra, GF(2^n) fields, seeded RNG.

Bit vectors are Python ints throughout (bit ``j`` is column ``j``), which makes
row operations word-parallel without any packing bookkeeping.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

# A field element is its coefficient bit string: bit i holds the coefficient of x^i.
FieldElement = int


def bits_to_int(bits: Iterable[int]) -> int:
    """Pack a little-endian bit sequence into an int."""
    out = 0
    for i, b in enumerate(bits):
        if b & 1:
            out |= 1 << i
    return out


def int_to_bits(value: int, length: int) -> list[int]:
    return [(value >> i) & 1 for i in range(length)]


class BitMatrix:
    """Dense GF(2) matrix stored as one int per row."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: Sequence[int] | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimension")
        self.rows = rows
        self.cols = cols
        mask = (1 << cols) - 1
        if data is None:
            self.data = [0] * rows
        else:
            if len(data) != rows:
                raise ValueError(f"expected {rows} rows, got {len(data)}")
            self.data = [int(r) & mask for r in data]

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[int]]) -> "BitMatrix":
        rows = len(lists)
        cols = len(lists[0]) if rows else 0
        if any(len(r) != cols for r in lists):
            raise ValueError("ragged rows")
        return cls(rows, cols, [bits_to_int(r) for r in lists])

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr, dtype=np.uint8) & 1
        return cls.from_lists(arr.tolist())

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def random(cls, rows: int, cols: int, rng: "Rng") -> "BitMatrix":
        return cls(rows, cols, [rng.bits(cols) for _ in range(rows)])

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, list(self.data))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.data[i] >> j) & 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    def __repr__(self) -> str:
        body = "\n".join(
            "".join(str((r >> j) & 1) for j in range(self.cols)) for r in self.data
        )
        return f"BitMatrix({self.rows}x{self.cols})\n{body}"

    def to_array(self) -> np.ndarray:
        return np.array(
            [int_to_bits(r, self.cols) for r in self.data], dtype=np.uint8
        ).reshape(self.rows, self.cols)

    def transpose(self) -> "BitMatrix":
        out = [0] * self.cols
        for i, r in enumerate(self.data):
            while r:
                low = r & -r
                j = low.bit_length() - 1
                out[j] |= 1 << i
                r ^= low
        return BitMatrix(self.cols, self.rows, out)

    def mul_vec(self, x: int) -> int:
        """Return A·x as an int with one bit per row."""
        out = 0
        for i, r in enumerate(self.data):
            if (r & x).bit_count() & 1:
                out |= 1 << i
        return out


def _eliminate(rows: list[int], cols: int, rhs: list[int] | None = None):
    """In-place reduced row echelon form. Returns pivot columns in row order."""
    pivots: list[int] = []
    rank = 0
    nrows = len(rows)
    for c in range(cols):
        bit = 1 << c
        pr = next((i for i in range(rank, nrows) if rows[i] & bit), None)
        if pr is None:
            continue
        if pr != rank:
            rows[pr], rows[rank] = rows[rank], rows[pr]
            if rhs is not None:
                rhs[pr], rhs[rank] = rhs[rank], rhs[pr]
        prow = rows[rank]
        for i in range(nrows):
            if i != rank and rows[i] & bit:
                rows[i] ^= prow
                if rhs is not None:
                    rhs[i] ^= rhs[rank]
        pivots.append(c)
        rank += 1
        if rank == nrows:
            break
    return pivots


def gf2_rank(m: BitMatrix) -> int:
    return len(_eliminate(list(m.data), m.cols))


def gf2_rref(m: BitMatrix) -> tuple[BitMatrix, list[int]]:
    rows = list(m.data)
    pivots = _eliminate(rows, m.cols)
    return BitMatrix(m.rows, m.cols, rows), pivots


def gf2_solve(a: BitMatrix, b: int | Sequence[int]) -> tuple[int, list[int]] | None:
    """Solve a·x = b over GF(2).

    ``b`` is an int (bit i = row i) or a bit sequence of length ``a.rows``.
    Returns ``(particular, nullspace_basis)`` or ``None`` when inconsistent.
    """
    if not isinstance(b, int):
        if len(b) != a.rows:
            raise ValueError(f"rhs length {len(b)} != rows {a.rows}")
        b = bits_to_int(b)
    elif b >> a.rows:
        raise ValueError("rhs has bits beyond the row count")
    rows = list(a.data)
    rhs = [(b >> i) & 1 for i in range(a.rows)]
    pivots = _eliminate(rows, a.cols, rhs)
    rank = len(pivots)
    if any(rhs[i] for i in range(rank, a.rows)):
        return None
    x = 0
    for i, c in enumerate(pivots):
        if rhs[i]:
            x |= 1 << c
    pivot_set = set(pivots)
    basis = []
    for f in range(a.cols):
        if f in pivot_set:
            continue
        v = 1 << f
        for i, c in enumerate(pivots):
            if (rows[i] >> f) & 1:
                v |= 1 << c
        basis.append(v)
    return x, basis


def nullspace(a: BitMatrix) -> list[int]:
    return gf2_solve(a, 0)[1]


# ---------------------------------------------------------------- GF(2^n)

def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, q) == 0:
                return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(n: int) -> int:
    for cand in range(1 << n, 1 << (n + 1)):
        if is_irreducible(cand):
            return cand
    raise AssertionError(f"no irreducible polynomial of degree {n}")  # pragma: no cover


@dataclass(frozen=True)
class Field2n:
    """GF(2^n) with a fixed irreducible modulus (the x^n bit included)."""

    n: int
    modulus: int

    @property
    def order(self) -> int:
        return 1 << self.n

    def check(self, a: FieldElement) -> None:
        if not 0 <= a < self.order:
            raise ValueError(f"{a} is not an element of GF(2^{self.n})")

    def add(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return a ^ b

    def mul(self, a: FieldElement, b: FieldElement) -> FieldElement:
        top = self.order
        red = self.modulus
        out = 0
        while b:
            if b & 1:
                out ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= red
        return out

    def pow(self, a: FieldElement, e: int) -> FieldElement:
        out = 1
        while e:
            if e & 1:
                out = self.mul(out, a)
            a = self.mul(a, a)
            e >>= 1
        return out

    def inv(self, a: FieldElement) -> FieldElement:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^n)")
        return self.pow(a, self.order - 2) if self.n > 1 else 1

    def poly_eval(self, coeffs: Sequence[FieldElement], x: FieldElement) -> FieldElement:
        """Horner evaluation of sum coeffs[i] * x**i."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.mul(acc, x) ^ c
        return acc

    def mul_table(self) -> np.ndarray:
        return _mul_table(self.n, self.modulus)


@lru_cache(maxsize=16)
def _mul_table(n: int, modulus: int) -> np.ndarray:
    if n > 10:
        raise ValueError("multiplication table limited to n <= 10")
    f = Field2n(n, modulus)
    q = 1 << n
    table = np.empty((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(a, q):
            table[a, b] = table[b, a] = f.mul(a, b)
    table.setflags(write=False)
    return table


def field_make(n: int) -> Field2n:
    if not 1 <= n <= 16:
        raise ValueError("field degree must be in 1..16")
    return Field2n(n, smallest_irreducible(n))


def field_mul(f: Field2n, a: FieldElement, b: FieldElement) -> FieldElement:
    return f.mul(a, b)


def field_inv(f: Field2n, a: FieldElement) -> FieldElement:
    return f.inv(a)


def poly_eval(f: Field2n, coeffs: Sequence[FieldElement], x: FieldElement) -> FieldElement:
    return f.poly_eval(coeffs, x)


# ---------------------------------------------------------------- randomness

_MASK64 = (1 << 64) - 1


class Rng:
    """Counter-based (Philox) random source with labelled, reproducible splits.

    ``Rng(seed).split("trial", 3)`` always yields the same stream regardless of
    what the parent has already drawn, so trials are independent of scheduling.
    """

    def __init__(self, seed: int, path: tuple[str, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.path = tuple(path)
        h = hashlib.blake2b(digest_size=16, person=b"qmoneylab-rng")
        h.update(self.seed.to_bytes(8, "little"))
        for label in self.path:
            h.update(b"\x1f" + label.encode())
        self._gen = np.random.Generator(np.random.Philox(key=int.from_bytes(h.digest(), "little")))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={'/'.join(self.path) or '-'})"

    def split(self, *labels) -> "Rng":
        return Rng(self.seed, self.path + tuple(str(x) for x in labels))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def random(self, size=None):
        return self._gen.random(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def bit(self) -> int:
        return int(self._gen.integers(0, 2))

    def bits(self, k: int) -> int:
        """k uniformly random bits as a Python int."""
        if k <= 0:
            return 0
        nbytes = (k + 7) // 8
        raw = int.from_bytes(self._gen.bytes(nbytes), "little")
        return raw & ((1 << k) - 1)

    def choice(self, a, size=None, replace=True, p=None):
        return self._gen.choice(a, size=size, replace=replace, p=p)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
