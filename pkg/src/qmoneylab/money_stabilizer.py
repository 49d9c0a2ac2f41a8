"""Public-key money from random stabilizer states and a biased table of Pauli measurements.

A note holds l random stabilizer states |C_i>, an l x m table of signed Paulis and
a signature on the table. Row E_ij is a uniform signed Pauli with probability
1 - eps and a uniform element of the stabilizer group of |C_i> with probability
eps, so a genuine state answers +1 to a random row of its own table with
probability 1/2 + eps/2. Authentication measures one random row per state and
counts +1 outcomes. The default rule accepts when the count exceeds l(1/2 + eps/4),
halfway between the genuine rate and the rate 1/2 of an unrelated state; the
plain strict-majority rule is available as ``rule="majority"``.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .mathcore import BitMatrix, Rng, _eliminate, gf2_solve
from .stabilizer import (
    SignedPauli,
    StabilizerBatch,
    StabilizerTableau,
    random_paulis_batch,
    symplectic_batch,
)

MAX_N = 32
MAX_CELLS = 10**7
RULES = ("midpoint", "majority")


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True)
class SchemeParams:
    n: int
    l: int
    m: int
    eps: float
    slack: float = 8.0
    rule: str = "midpoint"

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must be in 1..{MAX_N}")
        if self.l < 1 or self.l % 2 == 0:
            raise ValueError("l must be a positive odd number (strict majority)")
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.l * self.m > MAX_CELLS:
            raise ValueError(f"l*m exceeds {MAX_CELLS}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}")

    def accept_count(self) -> int:
        """Smallest number of +1 outcomes that authenticates."""
        if self.rule == "majority":
            return self.l // 2 + 1
        return math.floor(self.l * (0.5 + self.eps / 4)) + 1

    def regime(self) -> dict:
        """Checks of n/eps << m << 1/eps^2 << l with '<<' read as ratio >= slack."""
        s = self.slack
        inv_sq = math.inf if self.eps == 0 else 1 / self.eps**2
        n_over_eps = math.inf if self.eps == 0 else self.n / self.eps
        out = {
            "m_above_n_over_eps": self.m >= s * n_over_eps,
            "m_below_inv_eps_sq": s * self.m <= inv_sq,
            "l_above_inv_eps_sq": self.l >= s * inv_sq,
            "gaussian_regime": self.m <= n_over_eps,
            "commuting_regime": self.eps > 1 / math.sqrt(self.m),
        }
        out["valid"] = out["m_above_n_over_eps"] and out["m_below_inv_eps_sq"] and out["l_above_inv_eps_sq"]
        return out

    def as_dict(self) -> dict:
        return {"n": self.n, "l": self.l, "m": self.m, "eps": self.eps, "rule": self.rule}

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeParams":
        return cls(d["n"], d["l"], d["m"], d["eps"], rule=d.get("rule", "midpoint"))


# ---------------------------------------------------------------- table

@dataclass
class MeasurementTable:
    n: int
    sign: np.ndarray  # (l, m) uint8
    x: np.ndarray  # (l, m) uint64
    z: np.ndarray  # (l, m) uint64

    @property
    def shape(self) -> tuple[int, int]:
        return self.sign.shape

    def row(self, i: int, j: int) -> SignedPauli:
        return SignedPauli(self.n, int(self.sign[i, j]), int(self.x[i, j]), int(self.z[i, j]))

    @property
    def bit_length(self) -> int:
        l, m = self.shape
        return (2 * self.n + 1) * l * m

    def to_bytes(self) -> bytes:
        """Rows i-major, each 2n+1 bits [sign | x | z] little-endian, LSB-first packing."""
        n = self.n
        l, m = self.shape
        cells = l * m
        bits = np.zeros((cells, 2 * n + 1), dtype=np.uint8)
        bits[:, 0] = self.sign.reshape(-1)
        xs, zs = self.x.reshape(-1), self.z.reshape(-1)
        for k in range(n):
            bits[:, 1 + k] = (xs >> np.uint64(k)) & np.uint64(1)
            bits[:, 1 + n + k] = (zs >> np.uint64(k)) & np.uint64(1)
        return np.packbits(bits.reshape(-1), bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, n: int, l: int, m: int) -> "MeasurementTable":
        need = ((2 * n + 1) * l * m + 7) // 8
        if len(data) != need:
            raise ValueError(f"table needs {need} bytes, got {len(data)}")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        bits = bits[: (2 * n + 1) * l * m].reshape(l * m, 2 * n + 1).astype(np.uint64)
        weights = np.uint64(1) << np.arange(n, dtype=np.uint64)
        x = (bits[:, 1 : 1 + n] * weights).sum(axis=1, dtype=np.uint64)
        z = (bits[:, 1 + n :] * weights).sum(axis=1, dtype=np.uint64)
        return cls(n, bits[:, 0].astype(np.uint8).reshape(l, m), x.reshape(l, m), z.reshape(l, m))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MeasurementTable)
            and self.n == other.n
            and np.array_equal(self.sign, other.sign)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )


# ---------------------------------------------------------------- signature stub

class SignatureVerifier:
    """Public verification interface of the signature stub.

    The stub is an HMAC: whoever holds this object could in principle sign too.
    It stands in for an ordinary public-key signature and is only as strong as
    the assumption that counterfeiters never call anything but ``verify``.
    """

    def __init__(self, key: bytes):
        self.__key = key

    def verify(self, message: bytes, sig: bytes) -> bool:
        return hmac.compare_digest(_mac(self.__key, message), sig)


class BankKeys:
    def __init__(self, signing_key: bytes):
        self._signing_key = signing_key
        self.public = SignatureVerifier(signing_key)

    @classmethod
    def generate(cls, rng: Rng) -> "BankKeys":
        return cls(rng.split("signing-key").generator.bytes(32))

    def sign(self, message: bytes) -> bytes:
        return _mac(self._signing_key, message)


def _mac(key: bytes, message: bytes) -> bytes:
    return hmac.new(key, message, hashlib.sha256).digest()


def _signed_message(p: SchemeParams, table_bytes: bytes) -> bytes:
    return f"stab-note|{p.n}|{p.l}|{p.m}|{p.eps!r}|{p.rule}|".encode() + table_bytes


# ---------------------------------------------------------------- banknote

@dataclass
class StabBanknote:
    params: SchemeParams
    states: StabilizerBatch
    table: MeasurementTable
    sig: bytes
    damage: float = 0.0  # accumulated trace-distance bound from coherent authentications

    def message(self) -> bytes:
        return _signed_message(self.params, self.table.to_bytes())

    def with_states(self, states: StabilizerBatch, damage: float = 0.0) -> "StabBanknote":
        return replace(self, states=states, damage=damage)


def mint(params: SchemeParams, keys: BankKeys, rng: Rng) -> StabBanknote:
    n, l, m = params.n, params.l, params.m
    states = StabilizerBatch.sample(l, n, rng.split("states"))
    sign, x, z = random_paulis_batch(n, (l, m), rng.split("uniform-rows"))
    cond = rng.split("bias").random((l, m)) < params.eps
    ii, jj = np.nonzero(cond)
    if ii.size:
        gs, gx, gz = states.random_group_elements(ii, rng.split("group-rows"))
        sign[ii, jj], x[ii, jj], z[ii, jj] = gs, gx, gz
    table = MeasurementTable(n, sign, x, z)
    sig = keys.sign(_signed_message(params, table.to_bytes()))
    return StabBanknote(params, states, table, sig)


def row_expectations(states: StabilizerBatch, table: MeasurementTable) -> np.ndarray:
    """(l, m) array: +1/-1 when row E_ij is deterministic on state i, 0 when unbiased."""
    l, m = table.shape
    idx = np.repeat(np.arange(l), m)
    e = states.expectations(idx, table.sign.reshape(-1), table.x.reshape(-1), table.z.reshape(-1))
    return e.reshape(l, m)


def expected_row_rate(states: StabilizerBatch, table: MeasurementTable) -> float:
    """Mean over all rows of Pr[+1] for the given states."""
    e = row_expectations(states, table).astype(float)
    return float(((1 + e) / 2).mean())


def sample_row_outcomes(note: StabBanknote, rng: Rng) -> np.ndarray:
    """Measure every table row on its own fresh copy of the state; returns +1 indicators."""
    e = row_expectations(note.states, note.table)
    coin = rng.random(e.shape) < 0.5
    return np.where(e == 0, coin, e == 1)


# ---------------------------------------------------------------- authentication

@dataclass
class AuthResult:
    accept: bool
    post: StabBanknote
    reason: str = ""
    plus_count: int = -1
    accept_probability: float = float("nan")


def accept_probability(det_plus: int, random_count: int, threshold: int) -> float:
    """Pr[det_plus + Bin(random_count, 1/2) >= threshold]."""
    need = threshold - det_plus
    if need <= 0:
        return 1.0
    return float(stats.binom.sf(need - 1, random_count, 0.5))


def note_accept_probability(note: StabBanknote, verifier: SignatureVerifier) -> float:
    """Exact acceptance probability of one authentication, averaged over the random row choice.

    Register i reads +1 with probability q_i = mean_j (1 + e_ij)/2, independently, so the
    +1 count is Poisson-binomial.
    """
    if not verifier.verify(note.message(), note.sig):
        return 0.0
    q = ((1 + row_expectations(note.states, note.table)) / 2).mean(axis=1)
    pmf = np.zeros(q.size + 1)
    pmf[0] = 1.0
    for i, qi in enumerate(q):
        pmf[1:i + 2] = pmf[1:i + 2] * (1 - qi) + pmf[:i + 1] * qi
        pmf[0] *= 1 - qi
    return float(min(1.0, pmf[note.params.accept_count():].sum()))


def authenticate(note: StabBanknote, verifier: SignatureVerifier, rng: Rng, mode: str = "coherent") -> AuthResult:
    """Signature check, then the counting measurement over one random row per state.

    ``mode="coherent"``: the two-outcome counting measurement is performed on the
    whole note and uncomputed. Acceptance is sampled with its exact probability p.
    On acceptance the registers are kept and sqrt(1 - p), the trace distance of
    the true post-state from the input, is added to ``damage``. On rejection each
    register is collapsed by its own row (a refinement of the rejecting branch).

    ``mode="collapse"``: every register is measured projectively by its row and
    the note carries the collapsed states forward.
    """
    if mode not in ("coherent", "collapse"):
        raise ValueError(f"unknown mode {mode!r}")
    if not verifier.verify(note.message(), note.sig):
        return AuthResult(False, note, "bad signature")
    p = note.params
    l, m = p.l, p.m
    j = rng.integers(0, m, size=l)
    rows = np.arange(l)
    e = note.states.expectations(rows, note.table.sign[rows, j], note.table.x[rows, j], note.table.z[rows, j])
    det_plus = int((e == 1).sum())
    rand_idx = np.flatnonzero(e == 0)
    threshold = p.accept_count()
    prob = accept_probability(det_plus, rand_idx.size, threshold)
    if mode == "coherent":
        accept = bool(rng.random() < prob)
        if accept:
            post = note.with_states(note.states, note.damage + math.sqrt(max(0.0, 1.0 - prob)))
            return AuthResult(True, post, "", -1, prob)
        # rejecting branch: sample the random outcomes conditioned on too few +1s
        limit = threshold - det_plus  # number of random +1s must stay below this
        ks = np.arange(0, min(limit, rand_idx.size + 1))
        pmf = stats.binom.pmf(ks, rand_idx.size, 0.5)
        k = int(rng.choice(ks, p=pmf / pmf.sum()))
        plus_mask = np.zeros(rand_idx.size, dtype=bool)
        plus_mask[rng.permutation(rand_idx.size)[:k]] = True
    else:
        plus_mask = rng.random(rand_idx.size) < 0.5
        k = int(plus_mask.sum())
    plus = det_plus + k
    states = _collapse(note, j, rand_idx, plus_mask)
    accept = plus >= threshold
    return AuthResult(accept, note.with_states(states, note.damage), "" if accept else "minority", plus, prob)


def _collapse(note: StabBanknote, j: np.ndarray, rand_idx: np.ndarray, plus_mask: np.ndarray) -> StabilizerBatch:
    """Post-states after each unbiased register reads its sampled outcome."""
    states = note.states.copy()
    if rand_idx.size:
        t = note.table
        cols = j[rand_idx]
        # the -1 branch of row E is the +1 branch of -E
        ps = t.sign[rand_idx, cols] ^ (~plus_mask).astype(np.uint8)
        states.project(rand_idx, ps, t.x[rand_idx, cols], t.z[rand_idx, cols])
    return states


def reauthenticate_loop(note: StabBanknote, verifier: SignatureVerifier, count: int, rng: Rng,
                        mode: str = "coherent") -> tuple[list[bool], StabBanknote]:
    trace = []
    for r in range(count):
        res = authenticate(note, verifier, rng.split("pass", r), mode)
        trace.append(res.accept)
        note = res.post
    return trace, note


# ---------------------------------------------------------------- attacks

def _commuting_degrees(sign, x, z) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise commutation matrix and degree (commuting partners among the others)."""
    comm = symplectic_batch(x[:, None], z[:, None], x[None, :], z[None, :]) == 0
    np.fill_diagonal(comm, False)
    return comm, comm.sum(axis=1)


def _greedy_commuting_set(n: int, order, sign, x, z) -> list[int]:
    """Rows in ``order`` kept when they commute with and are independent of those kept."""
    chosen: list[int] = []
    basis: dict[int, int] = {}  # pivot bit -> reduced vector
    for r in order:
        r = int(r)
        xr, zr = int(x[r]), int(z[r])
        v = xr | (zr << n)
        if v == 0:
            continue
        ok = True
        for c in chosen:
            xc, zc = int(x[c]), int(z[c])
            if ((xr & zc).bit_count() + (zr & xc).bit_count()) & 1:
                ok = False
                break
        if not ok:
            continue
        for piv in sorted(basis, reverse=True):
            if v >> piv & 1:
                v ^= basis[piv]
        if v == 0:
            continue
        basis[v.bit_length() - 1] = v
        chosen.append(r)
        if len(chosen) == n:
            break
    return chosen


def complete_tableau(n: int, gens: list[SignedPauli], rng: Rng) -> StabilizerTableau:
    """Extend commuting independent generators to a full tableau with random extra rows."""
    gens = list(gens)
    full = (1 << n) - 1
    vecs = [g.vec for g in gens]
    while len(gens) < n:
        cons = [g.z | (g.x << n) for g in gens]
        if cons:
            _, basis = gf2_solve(BitMatrix(len(cons), 2 * n, cons), 0)
        else:
            basis = [1 << b for b in range(2 * n)]
        while True:
            mask = rng.bits(len(basis))
            v = 0
            for b, vec in enumerate(basis):
                if mask >> b & 1:
                    v ^= vec
            if len(_eliminate(vecs + [v], 2 * n)) == len(vecs) + 1:
                break
        vecs.append(v)
        gens.append(SignedPauli(n, rng.bit(), v & full, v >> n))
    return StabilizerTableau(gens, check=False)


@dataclass
class GaussianForgery:
    states: StabilizerBatch
    selected: np.ndarray  # rows satisfied by construction, per state
    order: str


def attack_gaussian(table: MeasurementTable, params: SchemeParams, rng: Rng, order: str = "target",
                    restarts: int = 64) -> GaussianForgery:
    """Per state, keep a maximal commuting independent subset of its rows and solve for a
    stabilizer state that has every kept row as a +1 stabilizer.

    ``order="target"`` tries table order, then up to ``restarts - 1`` random orders, keeping
    the largest subset and stopping once it reaches min(n, ceil(eps*m)) rows.
    ``order="index"`` is a single pass in table order.  Neither looks at row statistics.
    ``order="degree"`` visits rows by commuting-degree (descending, ties by index).
    """
    if order not in ("target", "degree", "index"):
        raise ValueError(f"unknown order {order!r}")
    n = params.n
    l, m = table.shape
    target = min(n, math.ceil(params.eps * m - 1e-9))
    tabs = []
    sizes = np.zeros(l, dtype=int)
    for i in range(l):
        s, x, z = table.sign[i], table.x[i], table.z[i]
        if order == "degree":
            _, deg = _commuting_degrees(s, x, z)
            chosen = _greedy_commuting_set(n, np.lexsort((np.arange(m), -deg)), s, x, z)
        else:
            chosen = _greedy_commuting_set(n, np.arange(m), s, x, z)
            if order == "target":
                perm_rng = rng.split("order", i)
                for _ in range(restarts - 1):
                    if len(chosen) >= target:
                        break
                    alt = _greedy_commuting_set(n, perm_rng.permutation(m), s, x, z)
                    if len(alt) > len(chosen):
                        chosen = alt
        sizes[i] = len(chosen)
        gens = [SignedPauli(n, int(s[c]), int(x[c]), int(z[c])) for c in chosen]
        tabs.append(complete_tableau(n, gens, rng.split("complete", i)))
    return GaussianForgery(StabilizerBatch.from_tableaux(tabs), sizes, order)


@dataclass
class CommutingReport:
    recovered: list  # StabilizerTableau or None per state
    classified_fraction: float
    threshold: float
    false_positive_rate: float  # null-model probability a uniform row clears the threshold
    state_recovery_rate: float | None = None
    note_recovered: bool | None = None


def commuting_threshold(m: int, c: float) -> float:
    return (m - 1) / 2 + c * math.sqrt(m)


def null_false_positive_rate(m: int, c: float) -> float:
    """Pr[Bin(m-1, 1/2) > threshold]: a uniform row's degree clearing the cut."""
    thr = commuting_threshold(m, c)
    return float(stats.binom.sf(math.floor(thr), m - 1, 0.5))


def attack_commuting(table: MeasurementTable, params: SchemeParams, c: float = 1.5,
                     truth: StabilizerBatch | None = None) -> CommutingReport:
    """Classify rows whose commuting-degree exceeds (m-1)/2 + c*sqrt(m) as conditioned,
    then rebuild each group from the classified rows (highest degree first)."""
    n = params.n
    l, m = table.shape
    thr = commuting_threshold(m, c)
    recovered = []
    classified = 0
    for i in range(l):
        s, x, z = table.sign[i], table.x[i], table.z[i]
        _, deg = _commuting_degrees(s, x, z)
        marked = np.flatnonzero(deg > thr)
        classified += marked.size
        visit = marked[np.lexsort((marked, -deg[marked]))]
        chosen = _greedy_commuting_set(n, visit, s, x, z)
        if len(chosen) < n:
            recovered.append(None)
            continue
        recovered.append(StabilizerTableau(
            [SignedPauli(n, int(s[r]), int(x[r]), int(z[r])) for r in chosen], check=False))
    report = CommutingReport(recovered, classified / (l * m), thr, null_false_positive_rate(m, c))
    if truth is not None:
        hits = [t is not None and t.key() == truth.tableau(i).key() for i, t in enumerate(recovered)]
        report.state_recovery_rate = float(np.mean(hits))
        report.note_recovered = bool(all(hits))
    return report


def forge_note(note: StabBanknote, states: StabilizerBatch) -> StabBanknote:
    """Counterfeit that reuses the genuine table and signature with new states."""
    return StabBanknote(note.params, states, note.table, note.sig)


def naive_forgery(note: StabBanknote, rng: Rng) -> StabBanknote:
    return forge_note(note, StabilizerBatch.sample(note.params.l, note.params.n, rng))


# ---------------------------------------------------------------- serialization

MAGIC = b"QMSN\x01"


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


def serialize(note: StabBanknote) -> bytes:
    """MAGIC | u32 header len | header JSON | u64 table len | table | u32 sim len | sim JSON.

    The simulation section holds the register tableaux and exists only because the
    quantum part is simulated classically.
    """
    p = note.params
    header = json.dumps({**p.as_dict(), "sig": note.sig.hex()}, sort_keys=True).encode()
    table = note.table.to_bytes()
    sim = json.dumps(_states_to_jsonable(note), sort_keys=True).encode()
    return b"".join([
        MAGIC,
        struct.pack("<I", len(header)), header,
        struct.pack("<Q", len(table)), table,
        struct.pack("<I", len(sim)), sim,
    ])


def _states_to_jsonable(note: StabBanknote) -> dict:
    st = note.states
    return {
        "simulation_only": True,
        "damage": note.damage,
        "sign": st.sign.tolist(),
        "x": [[int(v) for v in row] for row in st.gx],
        "z": [[int(v) for v in row] for row in st.gz],
    }


def _states_from_jsonable(d: dict, n: int) -> StabilizerBatch:
    tabs = []
    for sg, xs, zs in zip(d["sign"], d["x"], d["z"]):
        tabs.append(StabilizerTableau([SignedPauli(n, s, x, z) for s, x, z in zip(sg, xs, zs)]))
    return StabilizerBatch.from_tableaux(tabs)


def deserialize(data: bytes) -> StabBanknote:
    pos = 0

    def take(k: int, what: str) -> bytes:
        nonlocal pos
        if pos + k > len(data):
            raise ParseError(f"truncated {what}: need {k} bytes", pos)
        chunk = data[pos : pos + k]
        pos += k
        return chunk

    if take(len(MAGIC), "magic") != MAGIC:
        raise ParseError("bad magic", 0)
    (hlen,) = struct.unpack("<I", take(4, "header length"))
    hstart = pos
    try:
        header = json.loads(take(hlen, "header"))
        params = SchemeParams.from_dict(header)
        sig = bytes.fromhex(header["sig"])
    except ParseError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid header ({exc})", hstart) from None
    (tlen,) = struct.unpack("<Q", take(8, "table length"))
    expected = ((2 * params.n + 1) * params.l * params.m + 7) // 8
    if tlen != expected:
        raise ParseError(f"table length {tlen} != {expected}", pos - 8)
    table = MeasurementTable.from_bytes(take(tlen, "table"), params.n, params.l, params.m)
    (slen,) = struct.unpack("<I", take(4, "simulation length"))
    sstart = pos
    try:
        sim = json.loads(take(slen, "simulation section"))
        states = _states_from_jsonable(sim, params.n)
    except ParseError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid simulation section ({exc})", sstart) from None
    if pos != len(data):
        raise ParseError("trailing bytes", pos)
    return StabBanknote(params, states, table, sig, float(sim.get("damage", 0.0)))


def to_json_file(note: StabBanknote) -> str:
    """Text banknote: JSON header, base64 table, simulation-only state section."""
    p = note.params
    return json.dumps(
        {
            "header": {**p.as_dict(), "sig": note.sig.hex()},
            "table": base64.b64encode(note.table.to_bytes()).decode(),
            "simulation": _states_to_jsonable(note),
        },
        sort_keys=True,
    )


def from_json_file(text: str) -> StabBanknote:
    d = json.loads(text)
    h = d["header"]
    params = SchemeParams.from_dict(h)
    table = MeasurementTable.from_bytes(base64.b64decode(d["table"]), params.n, params.l, params.m)
    states = _states_from_jsonable(d["simulation"], params.n)
    return StabBanknote(params, states, table, bytes.fromhex(h["sig"]), float(d["simulation"].get("damage", 0.0)))
