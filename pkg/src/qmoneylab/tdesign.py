"""Polynomial-phase state designs, their moment operators and distinguisher experiments.

A design state on n qubits is indexed by the d+1 coefficients of a polynomial p
over GF(2^n) and has amplitude 2^{-n/2} exp(2 pi i int(p(a)) / 2^n) at basis
state a, where a is read as a field element and int() reinterprets a field
element as an n-bit integer (bit k = coefficient of x^k). Index strings hold the
coefficients in n-bit chunks, chunk i being the coefficient of x^i.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mathcore import Field2n, Rng, field_make
from .quantumsim import DenseState, ReflectionOracle, haar_state

EXACT_INDEX_LIMIT = 1 << 20
MOMENT_DIM_LIMIT = 1 << 12


@dataclass(frozen=True)
class DesignSpec:
    n: int
    d: int
    field: Field2n

    @classmethod
    def make(cls, n: int, d: int) -> "DesignSpec":
        if d < 0:
            raise ValueError("degree must be non-negative")
        return cls(n, d, field_make(n))

    @property
    def index_length(self) -> int:
        return self.n * (self.d + 1)


@dataclass
class MomentOperator:
    t: int
    matrix: np.ndarray
    stderr: float = 0.0  # largest entrywise standard error (Monte Carlo mode only)
    samples: int = 0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# ---------------------------------------------------------------- field arithmetic on arrays

def field_mul_array(f: Field2n, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product in GF(2^n) of two integer arrays."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
    a = a.copy()
    out = np.zeros(a.shape, dtype=np.int64)
    top, red = f.order, f.modulus
    for k in range(f.n):
        out ^= np.where((b >> k) & 1, a, 0)
        a = a << 1
        a = np.where(a & top, a ^ red, a)
    return out


def power_table(f: Field2n, d: int) -> np.ndarray:
    """(d+1, 2^n) array with row i holding a^i for every field element a."""
    xs = np.arange(f.order, dtype=np.int64)
    rows = [np.ones(f.order, dtype=np.int64)]
    for _ in range(d):
        rows.append(field_mul_array(f, rows[-1], xs))
    return np.stack(rows)


# ---------------------------------------------------------------- states

def decode_index(spec: DesignSpec, index) -> list[int]:
    """Coefficients from an index bit string (str of 0/1 or a bit sequence)."""
    bits = [int(c) for c in index]
    if len(bits) != spec.index_length:
        raise ValueError(f"index must have {spec.index_length} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("index must be a bit string")
    n = spec.n
    return [sum(bits[i * n + k] << k for k in range(n)) for i in range(spec.d + 1)]


def encode_index(spec: DesignSpec, coeffs) -> str:
    if len(coeffs) != spec.d + 1:
        raise ValueError("need d+1 coefficients")
    return "".join(str((c >> k) & 1) for c in coeffs for k in range(spec.n))


def poly_values(spec: DesignSpec, coeffs) -> np.ndarray:
    """int(p(a)) for all field elements a."""
    f = spec.field
    xs = np.arange(f.order, dtype=np.int64)
    acc = np.zeros(f.order, dtype=np.int64)
    for c in reversed(list(coeffs)):
        f.check(int(c))
        acc = field_mul_array(f, acc, xs) ^ int(c)
    return acc


def _amplitudes(n: int, values: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * values / (1 << n)) / math.sqrt(1 << n)


def design_state_from_coeffs(spec: DesignSpec, coeffs) -> DenseState:
    return DenseState(_amplitudes(spec.n, poly_values(spec, coeffs)), check=False)


def design_state(spec: DesignSpec, index) -> DenseState:
    return design_state_from_coeffs(spec, decode_index(spec, index))


def random_design_state(spec: DesignSpec, rng: Rng) -> DenseState:
    coeffs = rng.integers(0, spec.field.order, size=spec.d + 1)
    return design_state_from_coeffs(spec, [int(c) for c in coeffs])


# ---------------------------------------------------------------- moments

def _tensor_power_rows(amps: np.ndarray, t: int) -> np.ndarray:
    """Rows psi^{(x)t} for a (K, N) array of states."""
    out = amps
    for _ in range(t - 1):
        out = (out[:, :, None] * amps[:, None, :]).reshape(amps.shape[0], -1)
    return out


def _check_moment_dim(n: int, t: int) -> None:
    if t < 1:
        raise ValueError("t must be at least 1")
    if (1 << (n * t)) > MOMENT_DIM_LIMIT:
        raise ValueError(f"2^(n t) exceeds {MOMENT_DIM_LIMIT}")


def design_moment(spec: DesignSpec, t: int, mode: str = "exact", samples: int = 0,
                  rng: Rng | None = None, chunk: int = 4096) -> MomentOperator:
    """Average of (|phi><phi|)^{(x)t} over all indices (exact) or sampled indices (mc)."""
    _check_moment_dim(spec.n, t)
    n, d = spec.n, spec.d
    dim = 1 << (n * t)
    acc = np.zeros((dim, dim), dtype=np.complex128)
    if mode == "exact":
        if (1 << spec.index_length) > EXACT_INDEX_LIMIT:
            raise ValueError(f"2^(n(d+1)) exceeds {EXACT_INDEX_LIMIT}; use mode='mc'")
        # p(a) is GF(2)-linear in the coefficients: XOR of c_i * a^i over i
        f = spec.field
        powers = power_table(f, d)
        cs = np.arange(f.order, dtype=np.int64)
        contrib = [field_mul_array(f, cs[:, None], powers[i][None, :]) for i in range(d + 1)]
        total = 0
        # the constant coefficient is enumerated in bulk, the others in the outer loop
        inner = contrib[0]
        for outer in itertools.product(range(f.order), repeat=d):
            base = np.zeros(f.order, dtype=np.int64)
            for i, c in enumerate(outer, start=1):
                base ^= contrib[i][c]
            vals = inner ^ base[None, :]
            for s in range(0, vals.shape[0], chunk):
                rows = _tensor_power_rows(_amplitudes(n, vals[s : s + chunk]), t)
                acc += rows.T @ rows.conj()
            total += vals.shape[0]
        return MomentOperator(t, acc / total)
    if mode == "mc":
        if samples < 2 or rng is None:
            raise ValueError("mc mode needs samples >= 2 and an rng")
        sq = np.zeros((dim, dim))
        chunk = max(1, min(chunk, (1 << 24) // (dim * dim)))
        for s in range(0, samples, chunk):
            k = min(chunk, samples - s)
            coeffs = rng.split("mc", s).integers(0, spec.field.order, size=(k, d + 1))
            vals = np.stack([poly_values(spec, row) for row in coeffs])
            rows = _tensor_power_rows(_amplitudes(n, vals), t)
            outer = rows[:, :, None] * rows.conj()[:, None, :]
            acc += outer.sum(axis=0)
            sq += (np.abs(outer) ** 2).sum(axis=0)
        mean = acc / samples
        var = np.maximum(sq / samples - np.abs(mean) ** 2, 0.0)
        return MomentOperator(t, mean, float(np.sqrt(var.max() / (samples - 1))), samples)
    raise ValueError(f"unknown mode {mode!r}")


def symmetric_projector(n: int, t: int) -> np.ndarray:
    """Projector onto the symmetric subspace of (C^{2^n})^{(x)t}."""
    _check_moment_dim(n, t)
    N = 1 << n
    dim = N**t
    idx = np.arange(dim)
    digits = np.stack([(idx // N**k) % N for k in range(t)])  # digit k = register k
    out = np.zeros((dim, dim))
    perms = list(itertools.permutations(range(t)))
    for perm in perms:
        target = sum(digits[perm[k]] * N**k for k in range(t))
        out[target, idx] += 1.0
    return out / len(perms)


def haar_moment(n: int, t: int) -> MomentOperator:
    N = 1 << n
    return MomentOperator(t, symmetric_projector(n, t) / math.comb(N + t - 1, t))


def moment_distance(a: MomentOperator, b: MomentOperator) -> float:
    """Trace norm of a - b."""
    if a.matrix.shape != b.matrix.shape:
        raise ValueError("moment operators have different dimensions")
    return float(np.linalg.svd(a.matrix - b.matrix, compute_uv=False).sum())


# ---------------------------------------------------------------- distinguishers

class PreconditionError(ValueError):
    """The advantage bound does not apply to the requested (n, d, t, T)."""


class QueryBudgetExceeded(RuntimeError):
    pass


class BudgetedOracle:
    """Reflection oracle that refuses more than ``budget`` queries."""

    def __init__(self, target: DenseState, budget: int):
        self._inner = ReflectionOracle(target)
        self.budget = budget

    @property
    def queries(self) -> int:
        return self._inner.queries

    @property
    def num_qubits(self) -> int:
        return self._inner.num_qubits

    def __call__(self, s: DenseState) -> DenseState:
        if self._inner.queries >= self.budget:
            raise QueryBudgetExceeded(f"budget of {self.budget} queries used up")
        return self._inner(s)


def _swap_accept(a: DenseState, b: DenseState) -> float:
    return 0.5 * (1.0 + abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def _always(copies, oracle) -> float:
    return 1.0


def _parity(copies, oracle) -> float:
    p = np.abs(copies[0].amplitudes) ** 2
    even = np.bitwise_count(np.arange(p.size, dtype=np.uint64)) % 2 == 0
    return float(p[even].sum())


def _swap(copies, oracle) -> float:
    out = 1.0
    for i in range(len(copies)):
        for j in range(i + 1, len(copies)):
            out *= _swap_accept(copies[i], copies[j])
    return out


def _collision(copies, oracle) -> float:
    p = np.abs(copies[0].amplitudes) ** 2
    q = np.abs(copies[1].amplitudes) ** 2
    return float(p @ q)


def _oracle_probe(copies, oracle) -> float:
    probe = oracle(DenseState.plus(oracle.num_qubits))
    return _swap_accept(probe, copies[0])


def _combined(copies, oracle) -> float:
    first = _collision(copies, oracle) if len(copies) >= 2 else _parity(copies, oracle)
    if oracle.budget == 0:
        return first
    probe = oracle(DenseState.basis(oracle.num_qubits, 0))
    return first * abs(probe.amplitudes[0]) ** 2


@dataclass(frozen=True)
class Strategy:
    name: str
    min_copies: int
    min_queries: int
    accept: Callable  # (copies, oracle) -> acceptance probability


STRATEGIES = {
    s.name: s
    for s in [
        Strategy("always", 0, 0, _always),
        Strategy("parity", 1, 0, _parity),
        Strategy("swap", 2, 0, _swap),
        Strategy("collision", 2, 0, _collision),
        Strategy("oracle_probe", 1, 1, _oracle_probe),
        Strategy("combined", 1, 0, _combined),
    ]
}


def applicable_strategies(t: int, T: int) -> list[str]:
    return [s.name for s in STRATEGIES.values() if s.min_copies <= t and s.min_queries <= T]


def advantage_bound(n: int, t: int, T: int) -> float:
    return 4 * (t + 2 * T) ** 2 / 2**n


def check_precondition(spec: DesignSpec, t: int, T: int) -> None:
    limit = min(spec.d / 2, math.sqrt(2**spec.n / 2))
    if t < 1 or T < 0:
        raise PreconditionError("need t >= 1 and T >= 0")
    if t + 2 * T > limit:
        raise PreconditionError(f"t + 2T = {t + 2 * T} exceeds min(d/2, sqrt(2^n/2)) = {limit:.3f}")


@dataclass
class DistinguisherResult:
    strategy: str
    t: int
    T: int
    advantage: float
    stderr: float
    bound: float
    accept_design: float
    accept_haar: float
    trials: int


def _run_strategy(strategy: Strategy, state: DenseState, t: int, T: int) -> float:
    oracle = BudgetedOracle(state, T)
    p = strategy.accept([state] * t, oracle)
    assert oracle.queries <= T
    return p


def distinguisher_advantage(spec: DesignSpec, t: int, T: int, strategy: str, trials: int,
                            rng: Rng) -> DistinguisherResult:
    """|Pr[accept | design state] - Pr[accept | Haar state]| with its Monte Carlo error.

    Each trial draws one state from each ensemble and records the strategy's exact
    acceptance probability on it, so the only noise comes from the state draws.
    """
    check_precondition(spec, t, T)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {sorted(STRATEGIES)}")
    strat = STRATEGIES[strategy]
    if strat.min_copies > t or strat.min_queries > T:
        raise ValueError(f"strategy {strategy!r} needs t >= {strat.min_copies} and T >= {strat.min_queries}")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    pd = np.empty(trials)
    ph = np.empty(trials)
    for k in range(trials):
        pd[k] = _run_strategy(strat, random_design_state(spec, rng.split("design", k)), t, T)
        ph[k] = _run_strategy(strat, haar_state(spec.n, rng.split("haar", k)), t, T)
    diff = pd.mean() - ph.mean()
    stderr = math.sqrt(pd.var(ddof=1) / trials + ph.var(ddof=1) / trials)
    return DistinguisherResult(strategy, t, T, abs(float(diff)), stderr, advantage_bound(spec.n, t, T),
                               float(pd.mean()), float(ph.mean()), trials)
