"""Wiesner and BBBW private-key money on conjugate-coded qubits.

Each qubit is one of |0>, |1>, |+>, |-> described by ``(basis, value)`` with basis
0 = computational, 1 = Hadamard. Notes hold their qubits as an (k, 2) complex
array so adversaries can act on them with arbitrary single-qubit maps.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .mathcore import Rng

SQ2 = 1 / math.sqrt(2)
# rows indexed by 2*basis + value
BB84_STATES = np.array(
    [[1, 0], [0, 1], [SQ2, SQ2], [SQ2, -SQ2]],
    dtype=np.complex128,
)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def bb84_state(basis: int, value: int) -> np.ndarray:
    return BB84_STATES[2 * basis + value]


@dataclass(frozen=True)
class ConjugateNote:
    serial: str
    qubits: np.ndarray = field(compare=False)

    def __post_init__(self):
        q = np.array(self.qubits, dtype=np.complex128).reshape(-1, 2)
        q.setflags(write=False)
        object.__setattr__(self, "qubits", q)

    @property
    def size(self) -> int:
        return self.qubits.shape[0]

    def with_qubit(self, i: int, amp) -> "ConjugateNote":
        q = self.qubits.copy()
        q[i] = amp
        return ConjugateNote(self.serial, q)

    def apply(self, i: int, u: np.ndarray) -> "ConjugateNote":
        return self.with_qubit(i, u @ self.qubits[i])

    def to_json(self) -> str:
        return json.dumps(
            {
                "serial": self.serial,
                "qubits": [[[float(a.real), float(a.imag)] for a in q] for q in self.qubits],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConjugateNote":
        d = json.loads(text)
        return cls(d["serial"], np.array([[complex(*a) for a in q] for q in d["qubits"]]))


def note_from_description(serial: str, desc: Sequence[tuple[int, int]]) -> ConjugateNote:
    return ConjugateNote(serial, np.array([bb84_state(b, v) for b, v in desc]))


@dataclass(frozen=True)
class VerifyResult:
    accept: bool
    post: ConjugateNote | None
    reason: str = ""


def _measure_in_bases(note: ConjugateNote, desc: Sequence[tuple[int, int]], rng: Rng):
    """Measure every qubit in its recorded basis; returns (all match, post qubits)."""
    bases = np.array([b for b, _ in desc])
    values = np.array([v for _, v in desc])
    q = note.qubits
    # amplitude on the recorded-value eigenvector of the recorded basis
    want = BB84_STATES[2 * bases + values]
    p_match = np.abs(np.einsum("ij,ij->i", want.conj(), q)) ** 2
    p_match = np.clip(p_match, 0.0, 1.0)
    match = rng.random(len(desc)) < p_match
    outcome = np.where(match, values, 1 - values)
    post = BB84_STATES[2 * bases + outcome]
    return bool(match.all()), ConjugateNote(note.serial, post)


# ---------------------------------------------------------------- Wiesner

class BankDb:
    """Serial -> classical description. All access goes through one lock."""

    def __init__(self):
        self._entries: dict[str, list[tuple[int, int]]] = {}
        self._next = 0
        self._lock = threading.Lock()

    def issue(self, desc: list[tuple[int, int]]) -> str:
        with self._lock:
            serial = format(self._next, "032b")
            self._next += 1
            self._entries[serial] = desc
            return serial

    def lookup(self, serial: str) -> list[tuple[int, int]] | None:
        with self._lock:
            return self._entries.get(serial)

    def __len__(self) -> int:
        return len(self._entries)


def wiesner_mint(db: BankDb, n: int, rng: Rng) -> ConjugateNote:
    if n < 1:
        raise ValueError("a note needs at least one qubit")
    raw = rng.integers(0, 4, size=n)
    desc = [(int(r >> 1), int(r & 1)) for r in raw]
    serial = db.issue(desc)
    return note_from_description(serial, desc)


def wiesner_verify(db: BankDb, note: ConjugateNote, rng: Rng) -> VerifyResult:
    desc = db.lookup(note.serial)
    if desc is None:
        return VerifyResult(False, note, "unknown serial")
    if len(desc) != note.size:
        return VerifyResult(False, note, "length mismatch")
    ok, post = _measure_in_bases(note, desc, rng)
    return VerifyResult(ok, post, "" if ok else "qubit mismatch")


# ---------------------------------------------------------------- BBBW

class Prf:
    """Keyed function {0,1}^* -> {0,1}^output_len: HMAC-SHA256 in counter mode."""

    def __init__(self, seed: bytes, output_len: int):
        self._key = bytes(seed)
        self.output_len = output_len

    def __call__(self, data: str | bytes) -> int:
        if isinstance(data, str):
            data = data.encode()
        need = (self.output_len + 7) // 8
        out = b""
        ctr = 0
        while len(out) < need:
            out += hmac.new(self._key, ctr.to_bytes(4, "big") + data, hashlib.sha256).digest()
            ctr += 1
        return int.from_bytes(out[:need], "little") & ((1 << self.output_len) - 1)


def bbbw_description(seed: bytes, serial: str) -> list[tuple[int, int]]:
    """Blocks (b_{2i}, b_{2i+1}) of g_s(y): 00->|0>, 01->|1>, 10->|+>, 11->|->."""
    n = len(serial)
    if n % 2:
        raise ValueError("serial length must be even")
    g = Prf(seed, n)(serial)
    return [((g >> (2 * i)) & 1, (g >> (2 * i + 1)) & 1) for i in range(n // 2)]


def bbbw_mint(seed: bytes, serial: str, n: int) -> ConjugateNote:
    if n % 2:
        raise ValueError("n must be even")
    if len(serial) != n or set(serial) - {"0", "1"}:
        raise ValueError(f"serial must be a {n}-bit string")
    return note_from_description(serial, bbbw_description(seed, serial))


def bbbw_verify(seed: bytes, note: ConjugateNote, rng: Rng) -> VerifyResult:
    if len(note.serial) % 2 or note.size != len(note.serial) // 2:
        return VerifyResult(False, note, "malformed note")
    ok, post = _measure_in_bases(note, bbbw_description(seed, note.serial), rng)
    return VerifyResult(ok, post, "" if ok else "qubit mismatch")


# ---------------------------------------------------------------- banks with the two interfaces

class WiesnerBank:
    scheme = "wiesner"

    def __init__(self, n: int, rng: Rng):
        self.n = n
        self.db = BankDb()
        self._rng = rng

    def mint(self) -> ConjugateNote:
        return wiesner_mint(self.db, self.n, self._rng.split("mint", len(self.db)))

    def verify_q(self, note: ConjugateNote, rng: Rng) -> VerifyResult:
        return wiesner_verify(self.db, note, rng)

    def verify(self, note: ConjugateNote, rng: Rng) -> bool:
        return self.verify_q(note, rng).accept

    def accept_probability(self, note: ConjugateNote) -> float:
        desc = self.db.lookup(note.serial)
        if desc is None or len(desc) != note.size:
            return 0.0
        return exact_pass_probability(note, desc)


class BBBWBank:
    scheme = "bbbw"

    def __init__(self, n: int, rng: Rng):
        if n % 2:
            raise ValueError("n must be even")
        self.n = n
        self._seed = rng.split("seed").generator.bytes(32)
        self._rng = rng
        self._count = 0

    def mint(self) -> ConjugateNote:
        r = self._rng.split("serial", self._count)
        self._count += 1
        serial = format(r.bits(self.n), f"0{self.n}b")
        return bbbw_mint(self._seed, serial, self.n)

    def verify_q(self, note: ConjugateNote, rng: Rng) -> VerifyResult:
        return bbbw_verify(self._seed, note, rng)

    def verify(self, note: ConjugateNote, rng: Rng) -> bool:
        return self.verify_q(note, rng).accept

    def accept_probability(self, note: ConjugateNote) -> float:
        if len(note.serial) % 2 or note.size != len(note.serial) // 2:
            return 0.0
        return exact_pass_probability(note, bbbw_description(self._seed, note.serial))


def exact_pass_probability(note: ConjugateNote, desc: Sequence[tuple[int, int]]) -> float:
    want = np.array([bb84_state(b, v) for b, v in desc])
    return float(np.prod(np.abs(np.einsum("ij,ij->i", want.conj(), note.qubits)) ** 2))


# ---------------------------------------------------------------- counterfeiters

def measure_resend_qubits(qubits: np.ndarray, rng: Rng) -> np.ndarray:
    """Core of the measure-resend map on an (..., 2) array of qubits; returns the resent qubits."""
    shape = qubits.shape[:-1]
    bases = rng.integers(0, 2, size=shape)
    p0 = np.abs(np.einsum("...j,...j->...", BB84_STATES[2 * bases].conj(), qubits)) ** 2
    values = (rng.random(shape) >= p0).astype(int)
    return BB84_STATES[2 * bases + values]


def measure_resend_counterfeit(note: ConjugateNote, rng: Rng) -> tuple[ConjugateNote, ConjugateNote]:
    """Guess a basis per qubit, measure, and prepare the outcome twice."""
    q = measure_resend_qubits(note.qubits, rng)
    return ConjugateNote(note.serial, q), ConjugateNote(note.serial, q.copy())


def measure_resend_experiment(n: int, trials: int, rng: Rng) -> int:
    """Mint ``trials`` fresh n-qubit notes, counterfeit each, verify both copies.

    Vectorized over trials with the same per-qubit rules as the note-level
    functions. Returns the number of trials where both copies pass.
    """
    desc = rng.split("mint").integers(0, 4, size=(trials, n))
    genuine = BB84_STATES[desc]
    copy = measure_resend_qubits(genuine, rng.split("attack"))
    want = BB84_STATES[desc].conj()
    p = np.abs(np.einsum("tij,tij->ti", want, copy)) ** 2
    r = rng.split("verify")
    pass1 = (r.random(p.shape) < p).all(axis=1)
    pass2 = (r.random(p.shape) < p).all(axis=1)
    return int((pass1 & pass2).sum())


def measure_resend_rate(n: int) -> float:
    return (5 / 8) ** n


class AttackAborted(RuntimeError):
    pass


def query_attack(verify_oracle: Callable[[ConjugateNote], VerifyResult], note: ConjugateNote, rng: Rng):
    """Learn every qubit of ``note`` with one authenticator query per qubit.

    Flip qubit i with X and submit. X fixes |+> and |-> (up to sign), so an
    accept means the basis is Hadamard; a computational-basis qubit is flipped
    to the wrong value and rejected. The bank measures the other qubits in their
    own bases, so they come back untouched; undoing X restores qubit i. Its value
    is then read by measuring in the now-known basis.

    Returns ``(description, queries, restored note)``.
    """
    desc: list[tuple[int, int]] = []
    queries = 0
    current = note
    for i in range(note.size):
        res = verify_oracle(current.apply(i, PAULI_X))
        queries += 1
        if res.post is None:
            raise AttackAborted("authenticator does not return the post-measurement state")
        basis = 1 if res.accept else 0
        current = res.post.apply(i, PAULI_X)
        amp = current.qubits[i]
        p0 = abs(np.vdot(bb84_state(basis, 0), amp)) ** 2
        value = 0 if rng.random() < p0 else 1
        desc.append((basis, value))
        current = current.with_qubit(i, bb84_state(basis, value))
    return desc, queries, current


def bit_only_oracle(bank, rng: Rng) -> Callable[[ConjugateNote], VerifyResult]:
    """Plain private-key interface: the accept bit only, the note is kept by the bank."""
    counter = [0]

    def oracle(note: ConjugateNote) -> VerifyResult:
        counter[0] += 1
        return VerifyResult(bank.verify(note, rng.split("q", counter[0])), None)

    return oracle


def query_oracle(bank, rng: Rng) -> Callable[[ConjugateNote], VerifyResult]:
    counter = [0]

    def oracle(note: ConjugateNote) -> VerifyResult:
        counter[0] += 1
        return bank.verify_q(note, rng.split("q", counter[0]))

    return oracle


# ---------------------------------------------------------------- 1-qubit cloner search

def _cloner_projectors() -> np.ndarray:
    """P_s = |s s><s s| (x) I_anc on 2 output qubits + 1 ancilla qubit, s over the four states."""
    out = []
    for s in BB84_STATES:
        ss = np.kron(s, s)
        out.append(np.kron(np.outer(ss, ss.conj()), np.eye(2)))
    return np.array(out)


_PROJ = _cloner_projectors()


def cloner_value(v: np.ndarray) -> float:
    """Average both-copies-pass probability of the isometry v (8x2) over the four states."""
    total = 0.0
    for k, s in enumerate(BB84_STATES):
        out = v @ s
        total += float(np.vdot(out, _PROJ[k] @ out).real)
    return total / 4


def measure_prepare_value(theta: float, phi: float, prep0: np.ndarray, prep1: np.ndarray) -> float:
    """Measure along Bloch direction (theta, phi), prepare prep0 (x) prep0 or prep1 (x) prep1."""
    m0 = np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
    m1 = np.array([-np.exp(-1j * phi) * math.sin(theta / 2), math.cos(theta / 2)])
    total = 0.0
    for s in BB84_STATES:
        for m, prep in ((m0, prep0), (m1, prep1)):
            total += abs(np.vdot(m, s)) ** 2 * abs(np.vdot(s, prep)) ** 4
    return total / 4


def _isometry(params: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(params)
    return q


@dataclass
class ClonerResult:
    kind: str
    value: float
    params: np.ndarray
    evaluated: int


def optimize_cloner_1qubit(search_budget: int, rng: Rng) -> ClonerResult:
    """Random search over measure-and-prepare maps, then hill-climbing over 2 -> 8 isometries.

    Every candidate evaluated counts against ``search_budget``.
    """
    if search_budget < 10:
        raise ValueError("budget too small")
    g = rng.generator
    best = ClonerResult("measure-prepare", -1.0, np.zeros(0), 0)
    used = 0
    # measure-and-prepare: about a tenth of the budget
    for _ in range(max(1, search_budget // 10)):
        theta, phi = g.uniform(0, math.pi), g.uniform(0, 2 * math.pi)
        a = g.standard_normal(4) + 1j * g.standard_normal(4)
        p0, p1 = a[:2] / np.linalg.norm(a[:2]), a[2:] / np.linalg.norm(a[2:])
        val = measure_prepare_value(theta, phi, p0, p1)
        used += 1
        if val > best.value:
            best = ClonerResult("measure-prepare", val, np.concatenate([[theta, phi], p0, p1]), used)
    restarts = 8
    per_restart = (search_budget - used) // restarts
    for _ in range(restarts):
        x = g.standard_normal((8, 2)) + 1j * g.standard_normal((8, 2))
        cur = cloner_value(_isometry(x))
        used += 1
        step = 0.5
        for _ in range(per_restart - 1):
            cand = x + step * (g.standard_normal((8, 2)) + 1j * g.standard_normal((8, 2)))
            val = cloner_value(_isometry(cand))
            used += 1
            if val > cur:
                x, cur = cand, val
            else:
                step = max(step * 0.995, 1e-4)
        if cur > best.value:
            best = ClonerResult("isometry", cur, _isometry(x), used)
    best.evaluated = used
    return best
