"""Security games and scaling experiments with deterministic, serializable reports.

Wealth game: a counterfeiter receives k genuine notes and returns k + r registers,
each authenticated independently; wealth is the sum of acceptance probabilities.

Pirate game: a pirate receives k programs and returns k + r registers;
a freeloader answers one input per register and the report counts correct answers
against the budget k + (1 - delta) r.

Scaling: queries to a reflection oracle needed to prepare a copy of a Haar-random
state by amplitude amplification, as a function of the number of qubits.

Schemes, counterfeiters, pirates and freeloaders are looked up by string id.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from . import copyprotect as cp
from . import money_conjugate as mc
from . import money_stabilizer as ms
from .mathcore import Rng
from .quantumsim import DenseState, ReflectionOracle, fidelity, grover_iterate, haar_state

class UnknownId(KeyError):
    pass


def wilson_interval(hits: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(hits), int(trials)).proportion_ci(0.95, method="wilson")
    return (float(ci.low), float(ci.high))


def _lookup(registry: dict, key: str, what: str):
    if key not in registry:
        raise UnknownId(f"unknown {what} {key!r}; known: {', '.join(sorted(registry))}")
    return registry[key]


def _clean(obj):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(f"{v:.12g}")
    return obj


def to_json(report) -> str:
    d = asdict(report) if hasattr(report, "__dataclass_fields__") else report
    return json.dumps(_clean(d), sort_keys=True, indent=2) + "\n"


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(_clean({c: r.get(c, "") for c in columns}))
    return buf.getvalue()


# ---------------------------------------------------------------- money schemes

class MoneyScheme:
    """One secret key per trial. ``notes`` are minted under it and scored exactly."""

    id = ""

    def __init__(self, rng: Rng, **cfg):
        self.rng = rng

    def mint(self):
        raise NotImplementedError

    def accept_probability(self, note) -> float:
        raise NotImplementedError

    def naive(self, note, rng: Rng):
        """A forgery made without looking at quantum data; ``note`` may be None."""
        raise NotImplementedError

    def query_oracle(self, rng: Rng):
        return None


class WiesnerScheme(MoneyScheme):
    id = "wiesner"

    def __init__(self, rng: Rng, n: int = 8):
        super().__init__(rng)
        self.n = n
        self.bank = mc.WiesnerBank(n, rng.split("bank"))

    def mint(self):
        return self.bank.mint()

    def accept_probability(self, note) -> float:
        return self.bank.accept_probability(note)

    def naive(self, note, rng: Rng):
        serial = note.serial if note is not None else format(rng.bits(32), "032b")
        raw = rng.integers(0, 4, size=self.n)
        return mc.note_from_description(serial, [(int(r >> 1), int(r & 1)) for r in raw])

    def query_oracle(self, rng: Rng):
        return mc.query_oracle(self.bank, rng)


class BBBWScheme(WiesnerScheme):
    id = "bbbw"

    def __init__(self, rng: Rng, n: int = 16):
        MoneyScheme.__init__(self, rng)
        self.n = n
        self.bank = mc.BBBWBank(n, rng.split("bank"))

    def naive(self, note, rng: Rng):
        serial = note.serial if note is not None else format(rng.bits(self.n), f"0{self.n}b")
        raw = rng.integers(0, 4, size=self.n // 2)
        return mc.note_from_description(serial, [(int(r >> 1), int(r & 1)) for r in raw])


class StabilizerScheme(MoneyScheme):
    id = "stabilizer"

    def __init__(self, rng: Rng, n: int = 8, l: int = 1001, m: int = 50, eps: float = 0.2,
                 rule: str = "midpoint"):
        super().__init__(rng)
        self.params = ms.SchemeParams(n, l, m, eps, rule=rule)
        self.keys = ms.BankKeys.generate(rng.split("keys"))
        self._count = 0

    def mint(self):
        self._count += 1
        return ms.mint(self.params, self.keys, self.rng.split("mint", self._count))

    def accept_probability(self, note) -> float:
        return ms.note_accept_probability(note, self.keys.public)

    def naive(self, note, rng: Rng):
        if note is not None:
            return ms.naive_forgery(note, rng)
        # no table to copy: a self-made table with a guessed signature
        fake = ms.mint(self.params, ms.BankKeys.generate(rng.split("fake-keys")), rng.split("fake"))
        return fake


MONEY_SCHEMES = {c.id: c for c in (WiesnerScheme, BBBWScheme, StabilizerScheme)}


def identity_counterfeiter(scheme: MoneyScheme, notes: list, r: int, rng: Rng) -> list:
    """Keep the k genuine notes and add r naive forgeries."""
    extra = [scheme.naive(notes[i % len(notes)] if notes else None, rng.split("naive", i)) for i in range(r)]
    return list(notes) + extra


def query_counterfeiter(scheme: MoneyScheme, notes: list, r: int, rng: Rng) -> list:
    """Learn each note through the authenticator that returns the post-measurement state,
    then print k + r notes from the learned descriptions."""
    oracle = scheme.query_oracle(rng.split("oracle"))
    if oracle is None:
        raise ValueError(f"scheme {scheme.id!r} has no query interface")
    if not notes:
        return identity_counterfeiter(scheme, notes, r, rng)
    learned = []
    for i, note in enumerate(notes):
        desc, _, _ = mc.query_attack(oracle, note, rng.split("attack", i))
        learned.append(mc.note_from_description(note.serial, desc))
    return [learned[i % len(learned)] for i in range(len(notes) + r)]


def gaussian_counterfeiter(scheme: MoneyScheme, notes: list, r: int, rng: Rng) -> list:
    """Keep the genuine notes and forge r more from the public tables."""
    if not isinstance(scheme, StabilizerScheme):
        raise ValueError("the gaussian counterfeiter targets stabilizer money")
    out = list(notes)
    for i in range(r):
        if not notes:
            out.append(scheme.naive(None, rng.split("blind", i)))
            continue
        src = notes[i % len(notes)]
        f = ms.attack_gaussian(src.table, src.params, rng.split("attack", i))
        out.append(ms.forge_note(src, f.states))
    return out


COUNTERFEITERS = {
    "identity": identity_counterfeiter,
    "query": query_counterfeiter,
    "gaussian": gaussian_counterfeiter,
}


@dataclass
class WealthReport:
    scheme: str
    config: dict
    k: int
    r: int
    counterfeiter: str
    trials: int
    register_probabilities: list[float]
    wealth: float
    wealth_ci: tuple[float, float]
    sampled_accepts: list[int]
    register_ci: list[tuple[float, float]]
    seed_note: str = ""


def run_wealth_game(scheme: str, counterfeiter: str, k: int, r: int, trials: int, rng: Rng,
                    config: dict | None = None) -> WealthReport:
    """Fresh key per trial; every output register is scored exactly and also authenticated once."""
    cls = _lookup(MONEY_SCHEMES, scheme, "scheme")
    attack = _lookup(COUNTERFEITERS, counterfeiter, "counterfeiter")
    if k < 0 or r < 0 or trials < 1:
        raise ValueError("k, r must be non-negative and trials positive")
    config = dict(config or {})
    total = k + r
    probs = np.zeros(total)
    hits = np.zeros(total, dtype=int)
    for t in range(trials):
        tr = rng.split("trial", t)
        bank = cls(tr.split("scheme"), **config)
        notes = [bank.mint() for _ in range(k)]
        out = attack(bank, notes, r, tr.split("counterfeiter"))
        if len(out) != total:
            raise ValueError(f"counterfeiter returned {len(out)} registers, expected {total}")
        coin = tr.split("authenticate").random(total)
        for i, note in enumerate(out):
            p = bank.accept_probability(note)
            probs[i] += p
            hits[i] += int(coin[i] < p)
    probs /= trials
    cis = [wilson_interval(int(h), trials) for h in hits]
    return WealthReport(
        scheme, config, k, r, counterfeiter, trials, probs.tolist(), float(probs.sum()),
        (float(sum(c[0] for c in cis)), float(sum(c[1] for c in cis))), hits.tolist(), cis,
    )


# ---------------------------------------------------------------- pirate game

def _vend(scheme: str, key: cp.PointKey, k: int, cfg: dict, rng: Rng):
    if scheme == "a":
        return cp.schemeA_vend(key, cp.SchemeAConfig(cfg.get("m", 6), cfg.get("L")), k)
    if scheme == "b":
        return cp.schemeB_vend(key, k, rng)
    raise UnknownId(f"unknown scheme {scheme!r}")


def _evaluate(prog, x: str, rng: Rng) -> int:
    if isinstance(prog, cp.ProgramA):
        return cp.schemeA_eval(prog, x, rng).bit
    return cp.schemeB_eval(prog, x, rng).bit


def _copies(prog) -> list:
    """Single-copy programs, one per copy."""
    return [cp._single(prog, i) for i in range(prog.k)]


def _join(parts: list):
    if not parts:
        return None
    if isinstance(parts[0], cp.ProgramA):
        return cp.ProgramA(parts[0].cfg, [c for p in parts for c in p.copies])
    return cp.ProgramB(parts[0].N, [g for p in parts for g in p.registers], [d for p in parts for d in p.damaged])


# The vendor hands out k programs of ``amp`` copies each. A register handed to a
# freeloader is ("program", prog), ("key", s) for a classical description, or
# ("none", None) for padding.

def baseline_pirate(progs: list, r: int, ctx: dict, rng: Rng) -> list:
    return [("program", p) for p in progs] + [("none", None)] * r


def split_pirate(progs: list, r: int, ctx: dict, rng: Rng) -> list:
    """Halve programs (largest first) until there are k + r registers or nothing splits."""
    regs = list(progs)
    while len(regs) < len(progs) + r:
        i = max(range(len(regs)), key=lambda j: regs[j].k)
        if regs[i].k < 2:
            break
        h = regs[i].k // 2
        copies = _copies(regs[i])
        regs[i:i + 1] = [_join(copies[:h]), _join(copies[h:])]
    out = [("program", p) for p in regs]
    return out + [("none", None)] * (len(progs) + r - len(out))


def mix_pirate(progs: list, r: int, ctx: dict, rng: Rng) -> list:
    """Two genuine programs and one stand-in in random slots (k = 2, r = 1, one copy each)."""
    if len(progs) != 2 or r != 1 or any(p.k != 1 for p in progs):
        raise ValueError("the mixing pirate plays k = 2, r = 1 with single-copy programs")
    out = cp.trivial_mix_pirate(_join(progs), rng)
    return [("program", s) for s in out.slots]


@lru_cache(maxsize=64)
def _pgm_cached(keyspace: tuple, k: int, scheme: str, cfg):
    return cp.pgm_pirate(list(keyspace), k, scheme, cfg)


def pgm_pirate(progs: list, r: int, ctx: dict, rng: Rng) -> list:
    """Guess the key with the pretty good measurement on every copy held, then hand out the key."""
    keyspace = ctx["keyspace"]
    joined = _join(progs)
    scheme = "a" if isinstance(joined, cp.ProgramA) else "b"
    res = _pgm_cached(tuple(keyspace), joined.k, scheme, joined.cfg if scheme == "a" else None)
    s = ctx["key"].s
    if rng.random() < res.success or len(keyspace) == 1:
        guess = s
    else:
        # every wrong key yields the same expected count under the input distribution
        others = [t for t in keyspace if t != s]
        guess = others[int(rng.integers(0, len(others)))]
    return [("key", guess)] * (len(progs) + r)


def learn_pirate(progs: list, r: int, ctx: dict, rng: Rng) -> list:
    """Query all held copies together on the family to find the key, then hand out the key."""
    res = cp.learnability_pirate(ctx["keyspace"], _join(progs), rng)
    return [("key", res.key.s)] * (len(progs) + r)


PIRATES = {
    "baseline": baseline_pirate,
    "split": split_pirate,
    "mix": mix_pirate,
    "pgm": pgm_pirate,
    "learn": learn_pirate,
}


def honest_freeloader(register, x: str, rng: Rng) -> int:
    kind, payload = register
    if kind == "program":
        return _evaluate(payload, x, rng)
    if kind == "key":
        return int(payload == x)
    return int(rng.bit())


def coin_freeloader(register, x: str, rng: Rng) -> int:
    return int(rng.bit())


FREELOADERS = {"honest": honest_freeloader, "coin": coin_freeloader}


def sample_input(s: str, rng: Rng) -> str:
    """x = s with probability 1/2, otherwise uniform over the other strings."""
    n = len(s)
    if rng.random() < 0.5:
        return s
    v = int(rng.integers(0, (1 << n) - 1))
    if v >= int(s, 2):
        v += 1
    return format(v, f"0{n}b")


def wrong_acceptance(scheme: str, keyspace: list[str], cfg: dict, amp: int = 1) -> float:
    """Mean over keys s and inputs x != s of Pr[an amp-copy program accepts x]."""
    if scheme == "b":
        return 0.5**amp
    c = cp.SchemeAConfig(cfg.get("m", 6), cfg.get("L"))
    n = len(keyspace[0])
    vals = []
    for s in keyspace:
        a = cp.program_state(s, c).amplitudes
        for v in range(1 << n):
            x = format(v, f"0{n}b")
            if x != s:
                vals.append(abs(np.vdot(cp.program_state(x, c).amplitudes, a)) ** (2 * amp))
    return float(np.mean(vals))


@dataclass
class PirateReport:
    scheme: str
    config: dict
    k: int
    r: int
    amp: int
    pirate: str
    freeloader: str
    trials: int
    expected_correct: float
    stderr: float
    ci: tuple[float, float]
    delta: float
    budget: float
    eps: float
    baseline_prediction: float
    implied_delta: float
    per_register: list[float] = field(default_factory=list)


def run_pirate_game(scheme: str, pirate: str, freeloader: str, k: int, r: int, trials: int, rng: Rng,
                    config: dict | None = None, delta: float = 0.5) -> PirateReport:
    """Fresh uniform key per trial from the keyspace of n-bit strings; inputs from ``sample_input``.

    ``config`` keys: n (key length, default 3), amp (copies per program, default 1), m and L
    for scheme A. ``eps`` is half the wrong-input acceptance of one program, so an honest
    register answers correctly with probability 1 - eps.
    """
    attack = _lookup(PIRATES, pirate, "pirate")
    answer = _lookup(FREELOADERS, freeloader, "freeloader")
    if scheme not in ("a", "b"):
        raise UnknownId(f"unknown scheme {scheme!r}")
    if k < 1 or r < 0 or trials < 1:
        raise ValueError("need k >= 1, r >= 0, trials >= 1")
    config = dict(config or {})
    n = int(config.get("n", 3))
    amp = int(config.get("amp", 1))
    if amp < 1:
        raise ValueError("amp must be at least 1")
    keyspace = [format(v, f"0{n}b") for v in range(1 << n)]
    total = k + r
    counts = np.zeros(trials)
    per = np.zeros(total)
    for t in range(trials):
        tr = rng.split("trial", t)
        key = cp.PointKey(keyspace[int(tr.split("key").integers(0, len(keyspace)))])
        progs = [_vend(scheme, key, amp, config, tr.split("vend", j)) for j in range(k)]
        regs = attack(progs, r, {"keyspace": keyspace, "key": key}, tr.split("pirate"))
        if len(regs) != total:
            raise ValueError(f"pirate returned {len(regs)} registers, expected {total}")
        for i, reg in enumerate(regs):
            x = sample_input(key.s, tr.split("input", i))
            ok = answer(reg, x, tr.split("freeloader", i)) == key(x)
            counts[t] += ok
            per[i] += ok
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    lo, hi = wilson_interval(int(counts.sum()), trials * total)
    eps = 0.5 * wrong_acceptance(scheme, keyspace, config, amp)
    return PirateReport(
        scheme, config, k, r, amp, pirate, freeloader, trials, mean, stderr, (lo * total, hi * total),
        delta, k + (1 - delta) * r, eps, (1 - eps) * k + r / 2,
        (k + r - mean) / r if r else float("nan"), (per / trials).tolist(),
    )


# ---------------------------------------------------------------- no-cloning scaling

def _amplify_until(start: DenseState, oracle: ReflectionOracle, target: DenseState, fid: float, cap: int):
    """Grover iterations from ``start`` until the fidelity target; returns (queries used, reached)."""
    state = start
    used0 = oracle.queries
    if fidelity(state, target) >= fid:
        return 0, True
    while oracle.queries - used0 < cap:
        state = grover_iterate(state, start, oracle)
        if fidelity(state, target) >= fid:
            return oracle.queries - used0, True
    return oracle.queries - used0, False


def amplify_strategy(target: DenseState, held: int, fid: float, cap: int, rng: Rng) -> tuple[int, bool]:
    """Amplify from |+...+>; held copies are kept untouched."""
    oracle = ReflectionOracle(target)
    return _amplify_until(DenseState.plus(target.num_qubits), oracle, target, fid, cap)


def measured_start_strategy(target: DenseState, held: int, fid: float, cap: int, rng: Rng) -> tuple[int, bool]:
    """Measure one held copy in the computational basis and amplify from the outcome, twice:
    once to replace the consumed copy and once for the new register. Falls back to |+...+>
    without held copies."""
    if held < 1:
        return amplify_strategy(target, held, fid, cap, rng)
    p = np.abs(target.amplitudes) ** 2
    x = int(rng.choice(p.size, p=p / p.sum()))
    start = DenseState.basis(target.num_qubits, x)
    oracle = ReflectionOracle(target)
    q1, ok1 = _amplify_until(start, oracle, target, fid, cap)
    if not ok1:
        return q1, False
    q2, ok2 = _amplify_until(start, oracle, target, fid, cap - q1)
    return q1 + q2, ok2


SCALING_STRATEGIES = {"amplify": amplify_strategy, "measured_start": measured_start_strategy}


@dataclass
class ScalingReport:
    strategy: str
    held_copies: int
    fidelity_target: float
    trials: int
    n_values: list[int]
    mean_log2_queries: list[float]
    median_queries: list[float]
    capped: list[int]
    cap: list[int]
    slope: float
    intercept: float
    residuals: list[float]


def query_cap(n: int) -> int:
    return int(math.ceil(64 * 2 ** (n / 2)))


def run_nocloning_scaling(n_values, fidelity_target: float, strategy: str, trials: int, rng: Rng,
                          held_copies: int = 0) -> ScalingReport:
    """Per n: Haar target, count reflection queries until a new register reaches the target
    fidelity, then fit mean log2(queries) against n. Zero-query runs count as one query."""
    run = _lookup(SCALING_STRATEGIES, strategy, "strategy")
    ns = [int(n) for n in n_values]
    if not ns or min(ns) < 1 or max(ns) > 10:
        raise ValueError("n values must lie in 1..10")
    if not 0 < fidelity_target < 1:
        raise ValueError("fidelity target must lie in (0, 1)")
    means, medians, capped, caps = [], [], [], []
    for n in ns:
        cap = query_cap(n)
        qs = np.zeros(trials)
        flags = 0
        for t in range(trials):
            tr = rng.split("n", n, "trial", t)
            target = haar_state(n, tr.split("target"))
            q, ok = run(target, held_copies, fidelity_target, cap, tr.split("strategy"))
            qs[t] = max(q, 1)
            flags += not ok
        means.append(float(np.log2(qs).mean()))
        medians.append(float(np.median(qs)))
        capped.append(flags)
        caps.append(cap)
    if len(ns) >= 2:
        slope, intercept = np.polyfit(ns, means, 1)
        resid = (np.array(means) - (slope * np.array(ns) + intercept)).tolist()
    else:
        slope, intercept, resid = float("nan"), float("nan"), [0.0]
    return ScalingReport(strategy, held_copies, fidelity_target, trials, ns, means, medians, capped, caps,
                         float(slope), float(intercept), resid)


# ---------------------------------------------------------------- stabilizer attack sweep

SWEEP_COLUMNS = ["n", "eps", "l", "m", "notes", "regime", "genuine_rate", "forged_rate",
                 "margin_ratio", "margin_ratio_stderr", "genuine_accept", "forged_accept"]


def stab_attack_sweep(n: int, eps: float, l: int, ms_values, notes: int, rng: Rng,
                      order: str = "target") -> list[dict]:
    """Per m: mint notes, forge each with the Gaussian attack, report per-row +1 rates.

    ``margin_ratio`` is (forged - 1/2) / (genuine - 1/2) pooled over notes.
    """
    rows = []
    keys = ms.BankKeys.generate(rng.split("keys"))
    for m in ms_values:
        p = ms.SchemeParams(n, l, int(m), eps)
        g_rates, f_rates, g_acc, f_acc = [], [], [], []
        for i in range(notes):
            r = rng.split("m", int(m), "note", i)
            note = ms.mint(p, keys, r.split("mint"))
            f = ms.attack_gaussian(note.table, p, r.split("attack"), order=order)
            forged = ms.forge_note(note, f.states)
            g_rates.append(ms.expected_row_rate(note.states, note.table))
            f_rates.append(ms.expected_row_rate(forged.states, forged.table))
            g_acc.append(ms.note_accept_probability(note, keys.public))
            f_acc.append(ms.note_accept_probability(forged, keys.public))
        g, f = np.array(g_rates), np.array(f_rates)
        ratio = (f.mean() - 0.5) / (g.mean() - 0.5) if g.mean() > 0.5 else float("nan")
        # delta-method stderr of the ratio of means
        if notes > 1 and g.mean() > 0.5:
            a, b = f - 0.5, g - 0.5
            cov = np.cov(a, b)
            ra = ratio
            var = (cov[0, 0] - 2 * ra * cov[0, 1] + ra * ra * cov[1, 1]) / (notes * b.mean() ** 2)
            se = float(math.sqrt(max(var, 0.0)))
        else:
            se = float("nan")
        regime = "weak" if m <= n / eps else ("strong" if m >= 8 * n / eps else "between")
        rows.append({
            "n": n, "eps": eps, "l": l, "m": int(m), "notes": notes, "regime": regime,
            "genuine_rate": float(g.mean()), "forged_rate": float(f.mean()),
            "margin_ratio": float(ratio), "margin_ratio_stderr": se,
            "genuine_accept": float(np.mean(g_acc)), "forged_accept": float(np.mean(f_acc)),
        })
    return rows
