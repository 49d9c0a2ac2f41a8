"""Command-line front end.

Every subcommand accepts --seed, --trials, --out and --config. The resolved seed is
printed to stderr. Reports go to --out (JSON, or CSV for sweeps) or to stdout.
Exit codes: 0 ok, 1 a checked property failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from dataclasses import asdict

import numpy as np

from . import copyprotect as cp
from . import experiments as ex
from . import money_conjugate as mc
from . import money_stabilizer as ms
from . import tdesign as td
from .mathcore import Rng

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


# ---------------------------------------------------------------- commands

def cmd_mint_wiesner(a, rng):
    bank = mc.WiesnerBank(a.n, rng.split("wiesner-bank"))
    notes = [bank.mint() for _ in range(a.count)]
    return {"kind": "wiesner-notes", "simulation_only": True, "n": a.n, "count": a.count,
            "notes": [json.loads(nt.to_json()) for nt in notes]}, EXIT_OK


def cmd_verify(a, rng):
    """Rebuild the bank from the seed that minted the notes and verify each one."""
    data = _read_json(a.notes)
    bank = mc.WiesnerBank(data["n"], rng.split("wiesner-bank"))
    for _ in range(data["count"]):
        bank.mint()
    results = []
    for i, raw in enumerate(data["notes"]):
        note = mc.ConjugateNote.from_json(json.dumps(raw))
        res = bank.verify_q(note, rng.split("verify", i))
        results.append({"serial": note.serial, "accept": res.accept, "reason": res.reason,
                        "accept_probability": bank.accept_probability(note)})
    ok = all(r["accept"] for r in results)
    return {"kind": "verify", "results": results}, EXIT_OK if ok else EXIT_FAIL


def cmd_attack_queries(a, rng):
    cls = ex.MONEY_SCHEMES[a.scheme]
    successes, queries = 0, []
    for t in range(a.trials):
        tr = rng.split("trial", t)
        bank = cls(tr.split("scheme"), n=a.n)
        note = bank.mint()
        oracle = bank.query_oracle(tr.split("oracle"))
        desc, q, _ = mc.query_attack(oracle, note, tr.split("attack"))
        forged = mc.note_from_description(note.serial, desc)
        successes += bank.accept_probability(forged) >= 1.0 - 1e-9
        queries.append(q)
    rate = successes / a.trials
    return {"kind": "attack-queries", "scheme": a.scheme, "n": a.n, "trials": a.trials,
            "success_rate": rate, "ci": ex.wilson_interval(successes, a.trials),
            "queries_per_note": float(np.mean(queries))}, EXIT_OK


def cmd_attack_clone(a, rng):
    hits = mc.measure_resend_experiment(a.n, a.trials, rng.split("measure-resend"))
    cl = mc.optimize_cloner_1qubit(a.budget, rng.split("cloner"))
    return {"kind": "attack-clone", "n": a.n, "trials": a.trials,
            "measure_resend_both_pass": hits / a.trials,
            "measure_resend_ci": ex.wilson_interval(hits, a.trials),
            "predicted": mc.measure_resend_rate(a.n), "bound": 0.75**a.n,
            "cloner_kind": cl.kind, "cloner_value": cl.value, "cloner_evaluated": cl.evaluated}, EXIT_OK


def _stab_keys(rng):
    return ms.BankKeys.generate(rng.split("stab-bank"))


def _stab_params(a):
    return ms.SchemeParams(a.n, a.l, a.m, a.eps, rule=a.rule)


def cmd_mint_stab(a, rng):
    note = ms.mint(_stab_params(a), _stab_keys(rng), rng.split("mint"))
    return json.loads(ms.to_json_file(note)), EXIT_OK


def cmd_auth_stab(a, rng):
    keys = _stab_keys(rng)
    note = ms.from_json_file(open(a.note).read())
    trace, post = ms.reauthenticate_loop(note, keys.public, a.count, rng.split("auth"))
    return {"kind": "auth-stab", "accepts": trace, "all_accepted": all(trace),
            "exact_accept_probability": ms.note_accept_probability(note, keys.public),
            "damage_bound": post.damage}, EXIT_OK if all(trace) else EXIT_FAIL


def cmd_attack_stab(a, rng):
    p = _stab_params(a)
    keys = _stab_keys(rng)
    rows = []
    for i in range(a.trials):
        r = rng.split("note", i)
        note = ms.mint(p, keys, r.split("mint"))
        if a.mode == "gaussian":
            f = ms.attack_gaussian(note.table, p, r.split("attack"), order=a.order)
            forged = ms.forge_note(note, f.states)
            rows.append({"genuine_rate": ms.expected_row_rate(note.states, note.table),
                         "forged_rate": ms.expected_row_rate(f.states, note.table),
                         "forged_accept": ms.note_accept_probability(forged, keys.public)})
        else:
            rep = ms.attack_commuting(note.table, p, truth=note.states)
            rows.append({"classified_fraction": rep.classified_fraction,
                         "state_recovery_rate": rep.state_recovery_rate,
                         "note_recovered": rep.note_recovered,
                         "false_positive_rate": rep.false_positive_rate})
    return {"kind": "attack-stab", "mode": a.mode, "params": p.as_dict(), "regime": p.regime(),
            "notes": rows}, EXIT_OK


def cmd_sweep_stab(a, rng):
    rows = ex.stab_attack_sweep(a.n, a.eps, a.l, _int_list(a.ms), a.trials, rng, order=a.order)
    return ex.to_csv(rows, ex.SWEEP_COLUMNS), EXIT_OK


def cmd_tdesign_moment(a, rng):
    spec = td.DesignSpec.make(a.n, a.d)
    mom = td.design_moment(spec, a.t, a.mode, samples=a.samples, rng=rng.split("moment"))
    dist = td.moment_distance(mom, td.haar_moment(a.n, a.t))
    return {"kind": "tdesign-moment", "n": a.n, "d": a.d, "t": a.t, "mode": a.mode,
            "distance_to_haar": dist, "stderr": mom.stderr}, EXIT_OK


def cmd_tdesign_distinguish(a, rng):
    spec = td.DesignSpec.make(a.n, a.d)
    names = td.applicable_strategies(a.t, a.T) if a.strategy == "all" else [a.strategy]
    out = []
    for name in names:
        out.append(asdict(td.distinguisher_advantage(spec, a.t, a.T, name, a.trials, rng.split(name))))
    within = all(r["advantage"] <= r["bound"] + 5 * r["stderr"] for r in out)
    return {"kind": "tdesign-distinguish", "n": a.n, "d": a.d, "results": out,
            "within_bound": within}, EXIT_OK if within else EXIT_FAIL


def _program_from_file(path):
    d = _read_json(path)
    text = json.dumps(d)
    return cp.ProgramA.from_json(text) if d.get("scheme") == "a" else cp.ProgramB.from_json(text)


def cmd_vend(a, rng):
    key = cp.PointKey(a.key)
    if a.scheme == "a":
        prog = cp.schemeA_vend(key, cp.SchemeAConfig(a.m), a.k)
    else:
        prog = cp.schemeB_vend(key, a.k, rng.split("vend"))
    return json.loads(prog.to_json()), EXIT_OK


def cmd_eval(a, rng):
    prog = _program_from_file(a.program)
    if isinstance(prog, cp.ProgramA):
        res = cp.schemeA_eval(prog, a.x, rng.split("eval"))
    else:
        res = cp.schemeB_eval(prog, a.x, rng.split("eval"))
    return {"kind": "eval", "x": a.x, "bit": res.bit, "accept_probabilities": res.accept_probabilities,
            "program_after": json.loads(res.post.to_json())}, EXIT_OK


def cmd_pirate(a, rng):
    prog = _program_from_file(a.program)
    if a.strategy == "split":
        parts = cp.split_program(prog)
        return {"kind": "pirate", "strategy": "split",
                "programs": [json.loads(p.to_json()) for p in parts]}, EXIT_OK
    if a.strategy == "mix":
        out = cp.trivial_mix_pirate(prog, rng.split("mix"))
        return {"kind": "pirate", "strategy": "mix", "genuine": out.genuine,
                "programs": [json.loads(p.to_json()) for p in out.slots]}, EXIT_OK
    family = a.family.split(",") if a.family else None
    if not family:
        raise ConfigError("--family is required for learn and pgm")
    if a.strategy == "learn":
        res = cp.learnability_pirate(family, prog, rng.split("learn"))
        return {"kind": "pirate", "strategy": "learn", "key": res.key.s, "queries": res.queries,
                "program": json.loads(res.program.to_json())}, EXIT_OK
    scheme = "a" if isinstance(prog, cp.ProgramA) else "b"
    res = cp.pgm_pirate(family, prog.k, scheme, prog.cfg if scheme == "a" else None)
    return {"kind": "pirate", "strategy": "pgm", "success": res.success,
            "max_pair_fidelity": res.max_pair_fidelity, "k": res.k}, EXIT_OK


def cmd_pirate_game(a, rng):
    cfg = {"n": a.n, "amp": a.amp, "m": a.m}
    rep = ex.run_pirate_game(a.scheme, a.pirate, a.freeloader, a.k, a.r, a.trials, rng, cfg, a.delta)
    return asdict(rep), EXIT_OK


def cmd_wealth_game(a, rng):
    cfg = {"n": a.n}
    if a.scheme == "stabilizer":
        cfg.update({"l": a.l, "m": a.m, "eps": a.eps})
    rep = ex.run_wealth_game(a.scheme, a.counterfeiter, a.k, a.r, a.trials, rng, cfg)
    return asdict(rep), EXIT_OK


def cmd_scaling(a, rng):
    rep = ex.run_nocloning_scaling(_int_list(a.ns), a.fidelity, a.strategy, a.trials, rng, a.held)
    return asdict(rep), EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, trials: int) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (random if omitted; always printed)")
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--config", default=None, help="JSON file of option defaults")


def _stab_opts(p, n=8, l=1001, m=50, eps=0.2):
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--l", type=int, default=l)
    p.add_argument("--m", type=int, default=m)
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--rule", choices=ms.RULES, default="midpoint")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmoneylab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, func, help, trials=1):
        p = sub.add_parser(name, help=help, description=help)
        _common(p, trials)
        p.set_defaults(func=func)
        return p

    p = add("mint-wiesner", cmd_mint_wiesner, "mint Wiesner notes from a seeded bank")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--count", type=int, default=1)
    p = add("verify", cmd_verify, "verify Wiesner notes against the bank rebuilt from --seed")
    p.add_argument("--notes", required=True)
    p = add("attack-queries", cmd_attack_queries, "learn notes through the state-returning authenticator", 100)
    p.add_argument("--scheme", choices=["wiesner", "bbbw"], default="bbbw")
    p.add_argument("--n", type=int, default=16)
    p = add("attack-clone", cmd_attack_clone, "measure-resend rate and 1-qubit cloner search", 10000)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--budget", type=int, default=4000)

    p = add("mint-stab", cmd_mint_stab, "mint a stabilizer banknote")
    _stab_opts(p)
    p = add("auth-stab", cmd_auth_stab, "authenticate a stabilizer banknote repeatedly")
    p.add_argument("--note", required=True)
    p.add_argument("--count", type=int, default=1)
    p = add("attack-stab", cmd_attack_stab, "run an attack on freshly minted stabilizer notes", 5)
    _stab_opts(p, l=101, m=8, eps=0.5)
    p.add_argument("--mode", choices=["gaussian", "commuting"], default="gaussian")
    p.add_argument("--order", choices=["target", "degree", "index"], default="target")
    p = add("sweep-stab", cmd_sweep_stab, "Gaussian attack sweep over m (CSV)", 3)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--l", type=int, default=101)
    p.add_argument("--ms", default="8,16,32,64,128,256,512")
    p.add_argument("--order", choices=["target", "degree", "index"], default="target")

    p = add("tdesign-moment", cmd_tdesign_moment, "moment operator distance to Haar")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--samples", type=int, default=10000)
    p = add("tdesign-distinguish", cmd_tdesign_distinguish, "distinguisher advantage against the bound", 500)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--T", type=int, default=0)
    p.add_argument("--strategy", default="all")

    p = add("vend", cmd_vend, "vend a copy-protected point-function program")
    p.add_argument("--scheme", choices=["a", "b"], default="b")
    p.add_argument("--key", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, default=8)
    p = add("eval", cmd_eval, "evaluate a program file on an input")
    p.add_argument("--program", required=True)
    p.add_argument("--x", required=True)
    p = add("pirate", cmd_pirate, "apply a pirate to a program file")
    p.add_argument("--program", required=True)
    p.add_argument("--strategy", choices=["split", "mix", "learn", "pgm"], required=True)
    p.add_argument("--family", default=None, help="comma-separated candidate keys")
    p = add("pirate-game", cmd_pirate_game, "copy-protection security game", 200)
    p.add_argument("--scheme", choices=["a", "b"], default="b")
    p.add_argument("--pirate", choices=sorted(ex.PIRATES), default="baseline")
    p.add_argument("--freeloader", choices=sorted(ex.FREELOADERS), default="honest")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--amp", type=int, default=1)
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--delta", type=float, default=0.5)
    p = add("wealth-game", cmd_wealth_game, "quantum money security game", 20)
    p.add_argument("--scheme", choices=sorted(ex.MONEY_SCHEMES), default="stabilizer")
    p.add_argument("--counterfeiter", choices=sorted(ex.COUNTERFEITERS), default="identity")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--l", type=int, default=1001)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--eps", type=float, default=0.2)
    p = add("scaling", cmd_scaling, "no-cloning query scaling by amplitude amplification", 200)
    p.add_argument("--ns", default="3,4,5,6,7,8")
    p.add_argument("--fidelity", type=float, default=0.9)
    p.add_argument("--strategy", choices=sorted(ex.SCALING_STRATEGIES), default="amplify")
    p.add_argument("--held", type=int, default=0)
    return parser


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: list[str]):
    """Config values become defaults; explicit flags still win."""
    path = args.config
    try:
        cfg = _read_json(path)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    for name, value in cfg.items():
        a = actions.get(name)
        if a is None or name in ("help", "config", "func"):
            raise ConfigError(f"{path}: unknown field {name!r} for {args.command}")
        try:
            if a.type is not None and value is not None:
                value = a.type(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}: field {name!r}: {e}") from e
        if a.choices is not None and value not in a.choices:
            raise ConfigError(f"{path}: field {name!r} must be one of {list(a.choices)}")
        subparser.set_defaults(**{name: value})
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
    except ConfigError as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return EXIT_USAGE
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    print(f"seed: {seed}", file=sys.stderr)
    if args.trials < 1:
        print("error: --trials must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        report, code = args.func(args, Rng(seed))
    except (ConfigError, ex.UnknownId, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = report if isinstance(report, str) else ex.to_json(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
