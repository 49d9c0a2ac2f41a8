"""Quantum copy-protection candidates for point functions f_s(x) = [x = s], with pirates.

Scheme A (circuit states): a public pseudorandom generator expands s into the
description of a circuit U_s over {H, T, CNOT} and the program is U_s|0^m>.
Evaluating x projects onto U_x|0^m> with the two-outcome measurement
{U_x|0><0|U_x^-1, complement}; on x = s this is an exact eigenstate.

Scheme B (coset states): s is encoded as an involution tau_s of N = 2n+2 points
and each register holds (|sigma> + |sigma tau_s>)/sqrt2 for a uniform sigma.
Evaluating x runs a controlled right-multiplication by tau_x between Hadamards
on a control qubit; outcome |1> proves x != s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .mathcore import Rng
from .money_conjugate import Prf
from .quantumsim import DenseState, Gate, apply_circuit, fidelity, inverse_circuit

PRG_KEY = b"qmoneylab/scheme-a/prg"
GATE_CODES = ("H", "T", "CNOT")
CODE_BITS = 2  # ceil(log2 3)
# fresh registers hold 2 points; each distinct wrong-input test can double the support
MAX_SUPPORT = 1 << 12


def _check_bits(s: str) -> str:
    if not s or any(c not in "01" for c in s):
        raise ValueError(f"{s!r} is not a bit string")
    return s


@dataclass(frozen=True)
class PointKey:
    s: str

    def __post_init__(self):
        _check_bits(self.s)

    @property
    def n(self) -> int:
        return len(self.s)

    def __call__(self, x: str) -> int:
        return int(x == self.s)


# ---------------------------------------------------------------- scheme A

def address_bits(m: int) -> int:
    return max(1, math.ceil(math.log2(m)))


def gate_bit_cost(m: int) -> int:
    return CODE_BITS + 2 * address_bits(m)


def decode_circuit(bits: str, m: int, L: int) -> list[Gate]:
    """Read L gates, each as 2 code bits (value mod 3 picks H, T, CNOT) and two
    address fields (value mod m). One-qubit gates use the first address; a CNOT
    whose addresses coincide targets the next qubit. Fields are little-endian."""
    if m < 2:
        raise ValueError("circuits need at least 2 qubits")
    cost = gate_bit_cost(m)
    if len(bits) < cost * L:
        raise ValueError(f"need {cost * L} bits for {L} gates, got {len(bits)}")
    ab = address_bits(m)

    def read(pos: int, width: int) -> int:
        return sum(int(bits[pos + k]) << k for k in range(width))

    gates = []
    for g in range(L):
        pos = g * cost
        kind = GATE_CODES[read(pos, CODE_BITS) % 3]
        a = read(pos + CODE_BITS, ab) % m
        b = read(pos + CODE_BITS + ab, ab) % m
        if kind == "CNOT":
            gates.append(Gate("CNOT", (a, b if b != a else (a + 1) % m)))
        else:
            gates.append(Gate(kind, (a,)))
    return gates


def encode_circuit(gates: list[Gate], m: int) -> str:
    """Canonical bits that decode to ``gates``."""
    ab = address_bits(m)

    def write(v: int, width: int) -> str:
        return "".join(str((v >> k) & 1) for k in range(width))

    out = []
    for g in gates:
        if g.kind not in GATE_CODES:
            raise ValueError(f"gate {g.kind} is outside {{H, T, CNOT}}")
        a = g.targets[0]
        b = g.targets[1] if g.kind == "CNOT" else 0
        out.append(write(GATE_CODES.index(g.kind), CODE_BITS) + write(a, ab) + write(b, ab))
    return "".join(out)


@dataclass(frozen=True)
class SchemeAConfig:
    m: int
    L: int | None = None  # default 20 m^2

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.L is not None and self.L < 1:
            raise ValueError("L must be positive")

    @property
    def length(self) -> int:
        return self.L if self.L is not None else 20 * self.m**2

    @property
    def prg_bits(self) -> int:
        return gate_bit_cost(self.m) * self.length


def prg(s: str, nbits: int) -> str:
    """Public expansion of s to nbits bits (keyed hash in counter mode, fixed public key)."""
    v = Prf(PRG_KEY, nbits)(s)
    return "".join(str((v >> k) & 1) for k in range(nbits))


def circuit_for(s: str, cfg: SchemeAConfig) -> list[Gate]:
    return decode_circuit(prg(_check_bits(s), cfg.prg_bits), cfg.m, cfg.length)


@lru_cache(maxsize=4096)
def _program_vector(s: str, m: int, L: int) -> np.ndarray:
    cfg = SchemeAConfig(m, L)
    vec = apply_circuit(DenseState.basis(m, 0), circuit_for(s, cfg)).amplitudes
    vec.setflags(write=False)
    return vec


def program_state(s: str, cfg: SchemeAConfig) -> DenseState:
    """U_s|0^m>, cached per (s, m, L)."""
    return DenseState(_program_vector(s, cfg.m, cfg.length), check=False)


@dataclass
class ProgramA:
    cfg: SchemeAConfig
    copies: list[DenseState]
    damage: float = 0.0  # accumulated trace-distance bound

    @property
    def k(self) -> int:
        return len(self.copies)

    def to_json(self) -> str:
        return json.dumps({
            "scheme": "a", "simulation_only": True, "m": self.cfg.m, "L": self.cfg.length,
            "damage": self.damage,
            "copies": [[[float(a.real), float(a.imag)] for a in c.amplitudes] for c in self.copies],
        })

    @classmethod
    def from_json(cls, text: str) -> "ProgramA":
        d = json.loads(text)
        copies = [DenseState(np.array([complex(re, im) for re, im in c])) for c in d["copies"]]
        return cls(SchemeAConfig(d["m"], d["L"]), copies, d["damage"])


def schemeA_vend(key: PointKey, cfg: SchemeAConfig, k: int = 1) -> ProgramA:
    if k < 1:
        raise ValueError("k must be at least 1")
    return ProgramA(cfg, [program_state(key.s, cfg)] * k)


@dataclass
class EvalResult:
    bit: int
    post: object
    accept_probabilities: list[float] = field(default_factory=list)


def _eval_copy_projector(state: DenseState, target: DenseState, rng: Rng) -> tuple[bool, DenseState, float]:
    v, t = state.amplitudes, target.amplitudes
    amp = np.vdot(t, v)
    p = min(1.0, abs(amp) ** 2)
    if np.array_equal(v, t) or p >= 1.0 - 1e-12:
        # eigenstate of the projector: nothing moves
        return True, state, 1.0
    if rng.random() < p:
        return True, DenseState(t * (amp / abs(amp)), check=False), p
    rest = v - amp * t
    return False, DenseState(rest / np.linalg.norm(rest), check=False), p


def _eval_copy_circuit(state: DenseState, circuit: list[Gate], rng: Rng) -> tuple[bool, DenseState, float]:
    back = apply_circuit(state, inverse_circuit(circuit)).amplitudes
    p = min(1.0, abs(back[0]) ** 2)
    if p >= 1.0 - 1e-12:
        return True, state, 1.0
    out = np.zeros_like(back)
    if rng.random() < p:
        out[0] = back[0] / abs(back[0])
        accept = True
    else:
        out[:] = back
        out[0] = 0
        out /= np.linalg.norm(out)
        accept = False
    return accept, apply_circuit(DenseState(out, check=False), circuit), p


def schemeA_eval(prog: ProgramA, x: str, rng: Rng, method: str = "projector") -> EvalResult:
    """Two-outcome test of every copy against U_x|0^m>; returns 1 iff all copies pass.

    ``method="circuit"`` literally runs U_x^-1, tests for |0^m> and runs U_x again;
    ``method="projector"`` applies the same projector U_x|0><0|U_x^-1 directly.
    Damage accumulates sqrt(1 - p) per copy, p being its pass probability.
    """
    _check_bits(x)
    if method == "projector":
        target = program_state(x, prog.cfg)
        step = lambda st, r: _eval_copy_projector(st, target, r)  # noqa: E731
    elif method == "circuit":
        circuit = circuit_for(x, prog.cfg)
        step = lambda st, r: _eval_copy_circuit(st, circuit, r)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    copies = list(prog.copies)
    probs = []
    damage = prog.damage
    bit = 1
    for i, c in enumerate(copies):
        ok, post, p = step(c, rng.split("copy", i))
        probs.append(p)
        copies[i] = post
        damage += math.sqrt(max(0.0, 1.0 - p))
        if not ok:
            bit = 0
            break
    return EvalResult(bit, ProgramA(prog.cfg, copies, damage), probs)


# ---------------------------------------------------------------- scheme B

Perm = tuple[int, ...]


def compose(a: Perm, b: Perm) -> Perm:
    """(a b)(i) = a(b(i)): apply b first."""
    return tuple(a[i] for i in b)


def involution_encode(s: str) -> Perm:
    """tau_s on N = 2n+2 points: the anchor swap (2n, 2n+1) times (2i, 2i+1) for s_i = 1 (0-indexed)."""
    _check_bits(s)
    n = len(s)
    p = list(range(2 * n + 2))
    p[2 * n], p[2 * n + 1] = 2 * n + 1, 2 * n
    for i, c in enumerate(s):
        if c == "1":
            p[2 * i], p[2 * i + 1] = 2 * i + 1, 2 * i
    return tuple(p)


@dataclass
class CosetRegister:
    support: dict  # Perm -> complex amplitude

    def __post_init__(self):
        if not 1 <= len(self.support) <= MAX_SUPPORT:
            raise ValueError(f"register support must have 1..{MAX_SUPPORT} points")

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.support.values()))

    def right_multiply(self, tau: Perm) -> "CosetRegister":
        return CosetRegister({compose(p, tau): a for p, a in self.support.items()})


def _combine(a: dict, b: dict, sign: int) -> dict:
    out = dict(a)
    for p, v in b.items():
        out[p] = out.get(p, 0) + sign * v
    return {p: v for p, v in out.items() if abs(v) > 1e-15}


@dataclass
class ProgramB:
    N: int
    registers: list[CosetRegister]
    damaged: list[bool]

    @property
    def k(self) -> int:
        return len(self.registers)

    def usable(self) -> list[int]:
        return [i for i, d in enumerate(self.damaged) if not d]

    def to_json(self) -> str:
        return json.dumps({
            "scheme": "b", "simulation_only": True, "N": self.N, "damaged": self.damaged,
            "registers": [[[list(p), [float(a.real), float(a.imag)]] for p, a in sorted(r.support.items())]
                          for r in self.registers],
        })

    @classmethod
    def from_json(cls, text: str) -> "ProgramB":
        d = json.loads(text)
        regs = [CosetRegister({tuple(p): complex(re, im) for p, (re, im) in r}) for r in d["registers"]]
        return cls(d["N"], regs, list(d["damaged"]))


class ProgramDepleted(RuntimeError):
    """Every register has been flagged as damaged."""


def schemeB_vend(key: PointKey, k: int, rng: Rng) -> ProgramB:
    if k < 1:
        raise ValueError("k must be at least 1")
    tau = involution_encode(key.s)
    N = len(tau)
    amp = 1 / math.sqrt(2)
    regs = []
    for i in range(k):
        sigma = tuple(int(v) for v in rng.split("sigma", i).permutation(N))
        regs.append(CosetRegister({sigma: amp, compose(sigma, tau): amp}))
    return ProgramB(N, regs, [False] * k)


def _register_test(reg: CosetRegister, tau: Perm, rng: Rng) -> tuple[int, CosetRegister, float]:
    """Controlled right-multiplication by tau between Hadamards; returns (outcome, post, Pr[0])."""
    moved = reg.right_multiply(tau)
    if moved.support == reg.support:
        return 0, reg, 1.0
    plus = _combine(reg.support, moved.support, +1)
    minus = _combine(reg.support, moved.support, -1)
    p0 = sum(abs(v) ** 2 for v in plus.values()) / 4
    outcome = 0 if rng.random() < p0 else 1
    branch = plus if outcome == 0 else minus
    norm = math.sqrt(sum(abs(v) ** 2 for v in branch.values()))
    return outcome, CosetRegister({p: v / norm for p, v in branch.items()}), p0


def schemeB_eval(prog: ProgramB, x: str, rng: Rng) -> EvalResult:
    """Test usable registers in order; answer 0 at the first |1> outcome, else 1.

    When the answer is 0, registers that read |0> on this input are flagged as
    damaged and skipped by later evaluations.
    """
    tau = involution_encode(x)
    if len(tau) != prog.N:
        raise ValueError("input length does not match the program")
    usable = prog.usable()
    if not usable:
        raise ProgramDepleted("all registers are damaged")
    regs = list(prog.registers)
    damaged = list(prog.damaged)
    probs = []
    passed = []
    bit = 1
    for i in usable:
        outcome, regs[i], p0 = _register_test(regs[i], tau, rng.split("register", i))
        probs.append(p0)
        if outcome == 1:
            bit = 0
            break
        passed.append(i)
    if bit == 0:
        for i in passed:
            damaged[i] = True
    return EvalResult(bit, ProgramB(prog.N, regs, damaged), probs)


# ---------------------------------------------------------------- pirates

def split_program(prog):
    """Two programs holding half of the copies/registers each."""
    if prog.k % 2:
        raise ValueError("splitting needs an even number of copies")
    h = prog.k // 2
    if isinstance(prog, ProgramA):
        return ProgramA(prog.cfg, prog.copies[:h], prog.damage), ProgramA(prog.cfg, prog.copies[h:], prog.damage)
    if isinstance(prog, ProgramB):
        return (ProgramB(prog.N, prog.registers[:h], prog.damaged[:h]),
                ProgramB(prog.N, prog.registers[h:], prog.damaged[h:]))
    raise TypeError("unknown program type")


def _single(prog, i: int):
    if isinstance(prog, ProgramA):
        return ProgramA(prog.cfg, [prog.copies[i]], prog.damage)
    return ProgramB(prog.N, [prog.registers[i]], [prog.damaged[i]])


def _standin(prog, rng: Rng):
    """Maximally mixed stand-in: a uniformly random basis state of the register space."""
    if isinstance(prog, ProgramA):
        m = prog.cfg.m
        return ProgramA(prog.cfg, [DenseState.basis(m, int(rng.integers(0, 1 << m)))])
    perm = tuple(int(v) for v in rng.permutation(prog.N))
    return ProgramB(prog.N, [CosetRegister({perm: 1.0 + 0j})], [False])


@dataclass
class MixOutput:
    slots: list  # three single-copy programs
    genuine: list[bool]


def trivial_mix_pirate(prog, rng: Rng) -> MixOutput:
    """Place the two genuine copies in two of three random slots; fill the other with a stand-in."""
    if prog.k != 2:
        raise ValueError("the mixing pirate takes exactly two copies")
    blank = int(rng.integers(0, 3))
    slots, genuine = [], []
    it = iter(range(2))
    for j in range(3):
        if j == blank:
            slots.append(_standin(prog, rng.split("standin")))
            genuine.append(False)
        else:
            slots.append(_single(prog, next(it)))
            genuine.append(True)
    return MixOutput(slots, genuine)


def slot_fidelity(slot: ProgramA, key: PointKey) -> float:
    """Fidelity of a single-copy scheme-A slot with the genuine program."""
    return fidelity(slot.copies[0], program_state(key.s, slot.cfg))


@dataclass
class LearnResult:
    key: PointKey
    queries: int
    program: object
    source_after: object


def learnability_pirate(family: list[str], prog, rng: Rng, vend=None) -> LearnResult:
    """Identify which member of a small point-function family the program computes by
    evaluating it on the family's keys (all but the last), then vend a fresh program."""
    if not 1 <= len(family) <= 64:
        raise ValueError("family size must be in 1..64")
    if len(set(family)) != len(family):
        raise ValueError("family contains indistinct functions")
    evaluate = schemeA_eval if isinstance(prog, ProgramA) else schemeB_eval
    queries = 0
    found = family[-1]
    for j, x in enumerate(family[:-1]):
        res = evaluate(prog, x, rng.split("query", j))
        prog = res.post
        queries += 1
        if res.bit:
            found = x
            break
    key = PointKey(found)
    if vend is None:
        if isinstance(prog, ProgramA):
            fresh = schemeA_vend(key, prog.cfg, prog.k)
        else:
            fresh = schemeB_vend(key, prog.k, rng.split("vend"))
    else:
        fresh = vend(key)
    return LearnResult(key, queries, fresh, prog)


@dataclass
class PgmResult:
    success: float
    gram: np.ndarray | None
    max_pair_fidelity: float  # single-copy max root fidelity, |<psi_s|psi_t>| for pure states
    k: int


def pgm_success_from_gram(gram: np.ndarray) -> float:
    """Pretty-good-measurement success for equiprobable pure states with this Gram matrix."""
    w, v = np.linalg.eigh(gram)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    return float(np.mean(np.abs(np.diag(root)) ** 2))


def pgm_pirate(keyspace: list[str], k: int, scheme: str = "a", cfg: SchemeAConfig | None = None) -> PgmResult:
    """Success probability of identifying the key from k copies with the pretty good measurement.

    Scheme A: Gram matrix of |psi_s>^{(x)k}, entries <psi_s|psi_t>^k.
    Scheme B: each register is the mixed state (I + R_s)/N!, R_s right-multiplication by
    tau_s. These commute, so the measurement is classical: k outcomes uniform over the
    characters c of the group generated by the tau with c.v_s = 0, v_s = (s, 1).
    """
    if not 1 <= len(keyspace) <= 16:
        raise ValueError("keyspace size must be in 1..16")
    if len(set(keyspace)) != len(keyspace):
        raise ValueError("keys must be distinct")
    if k < 1:
        raise ValueError("k must be at least 1")
    if scheme == "a":
        if cfg is None:
            raise ValueError("scheme A needs a config")
        vecs = np.stack([program_state(s, cfg).amplitudes for s in keyspace])
        g1 = vecs.conj() @ vecs.T
        fid = np.abs(g1)
        np.fill_diagonal(fid, 0)
        gram = g1**k
        return PgmResult(pgm_success_from_gram(gram), gram, float(fid.max()) if len(keyspace) > 1 else 0.0, k)
    if scheme == "b":
        return _pgm_scheme_b(keyspace, k)
    raise ValueError(f"unknown scheme {scheme!r}")


def _pgm_scheme_b(keyspace: list[str], k: int) -> PgmResult:
    n = len(keyspace[0])
    if any(len(s) != n for s in keyspace) or n > 10:
        raise ValueError("scheme B keys must share a length <= 10")
    dim = n + 1
    vs = [sum(int(c) << i for i, c in enumerate(s)) | (1 << n) for s in keyspace]

    def dot(a: int, b: int) -> int:
        return (a & b).bit_count() & 1

    def span_add(basis: tuple, c: int) -> tuple:
        for b in basis:
            c = min(c, c ^ b)
        if c == 0:
            return basis
        out = []
        for b in basis:
            out.append(min(b, b ^ c))
        out.append(c)
        return tuple(sorted(out, reverse=True))

    def consistent(basis: tuple) -> int:
        return sum(all(dot(b, v) == 0 for b in basis) for v in vs)

    total = 0.0
    for v in vs:
        allowed = [c for c in range(1 << dim) if dot(c, v) == 0]
        dist = {(): 1.0}
        for _ in range(k):
            nxt: dict = {}
            for basis, p in dist.items():
                for c in allowed:
                    b2 = span_add(basis, c)
                    nxt[b2] = nxt.get(b2, 0.0) + p / len(allowed)
            dist = nxt
        total += sum(p / consistent(b) for b, p in dist.items())
    # distinct keys: commuting half-rank projectors meeting in a quarter, root fidelity 1/2
    return PgmResult(total / len(vs), None, 0.5 if len(vs) > 1 else 0.0, k)
