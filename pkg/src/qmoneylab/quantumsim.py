"""Dense pure-state simulator.

Qubit 0 is the least-significant bit of the basis index. States are immutable
values; every operation returns a new :class:`DenseState`.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mathcore import Rng

MAX_QUBITS = 22
NORM_TOL = 1e-10


class NoProgressWarning(RuntimeWarning):
    pass


class DenseState:
    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, *, check: bool = True):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        dim = amps.shape[0]
        n = dim.bit_length() - 1
        if dim < 1 or 1 << n != dim:
            raise ValueError(f"length {dim} is not a power of two")
        if check and abs(np.vdot(amps, amps).real - 1.0) > NORM_TOL:
            raise ValueError("state is not normalized")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.num_qubits = n

    @classmethod
    def normalized(cls, vec) -> "DenseState":
        vec = np.asarray(vec, dtype=np.complex128)
        nrm = np.linalg.norm(vec)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(vec / nrm)

    @classmethod
    def basis(cls, n: int, index: int = 0) -> "DenseState":
        v = np.zeros(1 << n, dtype=np.complex128)
        v[index] = 1.0
        return cls(v)

    @classmethod
    def plus(cls, n: int) -> "DenseState":
        return cls(np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def tensor(self, other: "DenseState") -> "DenseState":
        # other occupies the high qubits
        return DenseState(np.kron(other.amplitudes, self.amplitudes), check=False)

    def inner(self, other: "DenseState") -> complex:
        """<self|other>."""
        _same_dim(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_json(self) -> str:
        return json.dumps([[float(a.real), float(a.imag)] for a in self.amplitudes])

    @classmethod
    def from_json(cls, text: str) -> "DenseState":
        pairs = json.loads(text)
        return cls(np.array([complex(re, im) for re, im in pairs]))

    def __repr__(self) -> str:
        return f"DenseState(n={self.num_qubits})"


def _same_dim(a: DenseState, b: DenseState) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


# ---------------------------------------------------------------- gates

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_FIXED = {
    "H": _H,
    "T": np.diag([1, np.exp(1j * math.pi / 4)]).astype(np.complex128),
    "TDG": np.diag([1, np.exp(-1j * math.pi / 4)]).astype(np.complex128),
    "S": np.diag([1, 1j]).astype(np.complex128),
    "SDG": np.diag([1, -1j]).astype(np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.diag([1, -1]).astype(np.complex128),
}
_INVERSE_KIND = {"T": "TDG", "TDG": "T", "S": "SDG", "SDG": "S"}


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated targets {self.targets}")
        if kind == "CNOT":
            if len(self.targets) != 2:
                raise ValueError("CNOT takes (control, target)")
        elif kind == "CUSTOM":
            if self.matrix is None:
                raise ValueError("custom gate needs a matrix")
            u = np.asarray(self.matrix, dtype=np.complex128)
            if u.shape != (1 << len(self.targets),) * 2:
                raise ValueError("matrix shape does not match targets")
            if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=NORM_TOL):
                raise ValueError("custom matrix is not unitary")
            object.__setattr__(self, "matrix", u)
        elif kind in _FIXED:
            if len(self.targets) != 1:
                raise ValueError(f"{kind} acts on one qubit")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    def inverse(self) -> "Gate":
        if self.kind == "CUSTOM":
            return Gate("CUSTOM", self.targets, self.matrix.conj().T)
        return Gate(_INVERSE_KIND.get(self.kind, self.kind), self.targets)


def _apply_1q(vec: np.ndarray, n: int, q: int, u: np.ndarray) -> np.ndarray:
    psi = vec.reshape(1 << (n - q - 1), 2, 1 << q)
    out = np.einsum("ab,ibj->iaj", u, psi)
    return out.reshape(-1)


def _apply_diag(vec: np.ndarray, n: int, q: int, phase: complex) -> np.ndarray:
    out = vec.copy()
    psi = out.reshape(1 << (n - q - 1), 2, 1 << q)
    psi[:, 1, :] *= phase
    return out


def _apply_cnot(vec: np.ndarray, n: int, c: int, t: int) -> np.ndarray:
    idx = np.arange(vec.shape[0])
    src = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
    return vec[src]


def _apply_custom(vec: np.ndarray, n: int, targets: Sequence[int], u: np.ndarray) -> np.ndarray:
    k = len(targets)
    # numpy axis a corresponds to qubit n-1-a
    psi = vec.reshape((2,) * n)
    axes = [n - 1 - t for t in targets]
    # matrix index bit j belongs to targets[j]; reshaped tensor index order is msb first
    ut = u.reshape((2,) * (2 * k))
    out_axes = list(range(k))
    in_axes = list(range(k, 2 * k))
    # reorder so that tensor axis i <-> targets[k-1-i]
    psi = np.moveaxis(psi, [axes[k - 1 - i] for i in range(k)], list(range(k)))
    res = np.tensordot(ut, psi, axes=(in_axes, list(range(k))))
    res = np.moveaxis(res, out_axes, [axes[k - 1 - i] for i in range(k)])
    return res.reshape(-1)


def apply_gate_vec(vec: np.ndarray, n: int, g: Gate) -> np.ndarray:
    """Gate application on a raw amplitude vector (no validation, no copy of the result)."""
    kind = g.kind
    if kind == "CNOT":
        return _apply_cnot(vec, n, *g.targets)
    if kind == "CUSTOM":
        return _apply_custom(vec, n, g.targets, g.matrix)
    q = g.targets[0]
    if kind in ("T", "TDG", "S", "SDG", "Z"):
        return _apply_diag(vec, n, q, _FIXED[kind][1, 1])
    return _apply_1q(vec, n, q, _FIXED[kind])


def apply_gate(s: DenseState, g: Gate) -> DenseState:
    if any(t < 0 or t >= s.num_qubits for t in g.targets):
        raise ValueError(f"targets {g.targets} out of range for {s.num_qubits} qubits")
    return DenseState(apply_gate_vec(s.amplitudes, s.num_qubits, g), check=False)


def apply_circuit(s: DenseState, gates: Sequence[Gate]) -> DenseState:
    n = s.num_qubits
    for g in gates:
        if any(t < 0 or t >= n for t in g.targets):
            raise ValueError(f"targets {g.targets} out of range for {n} qubits")
    vec = s.amplitudes
    for g in gates:
        vec = apply_gate_vec(vec, n, g)
    return DenseState(vec, check=False)


def inverse_circuit(gates: Sequence[Gate]) -> list[Gate]:
    return [g.inverse() for g in reversed(gates)]


# ---------------------------------------------------------------- states and metrics

def haar_state(n: int, rng: Rng) -> DenseState:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}")
    dim = 1 << n
    z = rng.normal(dim) + 1j * rng.normal(dim)
    return DenseState.normalized(z)


def fidelity(a: DenseState, b: DenseState) -> float:
    _same_dim(a, b)
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, f))


def trace_distance(a: DenseState, b: DenseState) -> float:
    return math.sqrt(max(0.0, 1.0 - fidelity(a, b)))


# ---------------------------------------------------------------- projectors and measurement

@dataclass(frozen=True)
class Projector:
    """Two-outcome projective measurement.

    ``target`` given: rank-1 projector onto that state. Otherwise accept when the
    measured ``qubits`` read ``pattern`` (bit i of pattern for qubits[i]).
    """

    target: DenseState | None = None
    qubits: tuple[int, ...] = ()
    pattern: int = 0

    @classmethod
    def onto(cls, state: DenseState) -> "Projector":
        return cls(target=state)

    @classmethod
    def basis_pattern(cls, qubits: Sequence[int], pattern: int) -> "Projector":
        return cls(qubits=tuple(qubits), pattern=int(pattern))

    @classmethod
    def all_zero(cls, n: int) -> "Projector":
        return cls(qubits=tuple(range(n)), pattern=0)

    def mask(self, n: int) -> np.ndarray:
        idx = np.arange(1 << n)
        keep = np.ones(1 << n, dtype=bool)
        for i, q in enumerate(self.qubits):
            keep &= ((idx >> q) & 1) == ((self.pattern >> i) & 1)
        return keep

    def apply(self, vec: np.ndarray, n: int) -> np.ndarray:
        """Unnormalized P·vec."""
        if self.target is not None:
            t = self.target.amplitudes
            return t * np.vdot(t, vec)
        return np.where(self.mask(n), vec, 0)

    def matrix(self, n: int) -> np.ndarray:
        if self.target is not None:
            t = self.target.amplitudes
            return np.outer(t, t.conj())
        return np.diag(self.mask(n).astype(np.complex128))


@dataclass(frozen=True)
class Measurement:
    outcome: int
    prob_yes: float
    post: DenseState


def measure_projector(s: DenseState, p: Projector, rng: Rng) -> Measurement:
    n = s.num_qubits
    if p.target is not None:
        _same_dim(s, p.target)
    elif any(q < 0 or q >= n for q in p.qubits):
        raise ValueError("projector qubits out of range")
    yes = p.apply(s.amplitudes, n)
    prob_yes = float(np.vdot(yes, yes).real)
    prob_yes = min(1.0, max(0.0, prob_yes))
    if prob_yes > 1.0 - 1e-12:
        prob_yes = 1.0
    elif prob_yes < 1e-15:
        prob_yes = 0.0
    outcome = 1 if rng.random() < prob_yes else 0
    if outcome:
        if prob_yes == 1.0 and np.allclose(yes, s.amplitudes, atol=1e-12):
            post = s
        else:
            post = DenseState(yes / math.sqrt(prob_yes), check=False)
    else:
        no = s.amplitudes - yes
        post = DenseState(no / math.sqrt(1.0 - prob_yes), check=False)
    return Measurement(outcome, prob_yes, post)


# ---------------------------------------------------------------- oracle access

def reflection_oracle(s: DenseState, target: DenseState) -> DenseState:
    """(I - 2|target><target|) applied to s."""
    _same_dim(s, target)
    t = target.amplitudes
    return DenseState(s.amplitudes - 2.0 * t * np.vdot(t, s.amplitudes), check=False)


class ReflectionOracle:
    """Black-box U_psi that counts its queries."""

    def __init__(self, target: DenseState):
        self._target = target
        self.queries = 0

    @property
    def num_qubits(self) -> int:
        return self._target.num_qubits

    def __call__(self, s: DenseState) -> DenseState:
        self.queries += 1
        return reflection_oracle(s, self._target)


def grover_iterate(state: DenseState, start: DenseState, oracle) -> DenseState:
    """One amplification step: reflect through the target, then about the start state."""
    v = oracle(state).amplitudes
    a = start.amplitudes
    v = 2.0 * a * np.vdot(a, v) - v
    return DenseState(v, check=False)


def amplitude_amplify(start: DenseState, target: DenseState, iterations: int) -> DenseState:
    _same_dim(start, target)
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if abs(start.inner(target)) < 1e-14:
        warnings.warn("start has zero overlap with target; amplification makes no progress",
                      NoProgressWarning, stacklevel=2)
        return start
    state = start
    for _ in range(iterations):
        state = grover_iterate(state, start, lambda s: reflection_oracle(s, target))
    return state


def amplified_overlap(a: float, iterations: int) -> float:
    """Closed form |<target|G^j start>| = |sin((2j+1) arcsin a)|."""
    return abs(math.sin((2 * iterations + 1) * math.asin(min(1.0, a))))


def iterations_to_reach(a: float, fidelity_target: float, cap: int) -> int | None:
    """Smallest j <= cap with sin^2((2j+1)theta) >= fidelity_target, else None."""
    theta = math.asin(min(1.0, a))
    for j in range(cap + 1):
        if math.sin((2 * j + 1) * theta) ** 2 >= fidelity_target:
            return j
    return None
