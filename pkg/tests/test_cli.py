import json

import pytest

from qmoneylab.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help(capsys):
    code, out, _ = run(["--help"], capsys)
    assert code == 0 and "usage" in out


def test_unknown_subcommand(capsys):
    code, _, err = run(["print-money"], capsys)
    assert code == 2 and "usage" in err


def test_unknown_flag(capsys):
    assert run(["scaling", "--bogus"], capsys)[0] == 2


def test_seed_printed_and_resolved(capsys):
    _, _, err = run(["tdesign-moment", "--seed", "42"], capsys)
    assert "seed: 42" in err
    _, _, err = run(["tdesign-moment"], capsys)
    assert err.startswith("seed: ")


def test_same_seed_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["pirate-game", "--seed", "3", "--trials", "20", "--out", str(p)], capsys)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ns": "3,4", "trials": 4}))
    code, out, _ = run(["scaling", "--seed", "1", "--config", str(cfg)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["n_values"] == [3, 4] and rep["trials"] == 4
    # explicit flags win over the config
    code, out, _ = run(["scaling", "--seed", "1", "--config", str(cfg), "--trials", "2"], capsys)
    assert json.loads(out)["trials"] == 2


@pytest.mark.parametrize("payload,needle", [
    ({"nope": 1}, "unknown field 'nope'"),
    ({"trials": "many"}, "field 'trials'"),
    ({"strategy": "clone"}, "field 'strategy'"),
    ([1, 2], "top level"),
])
def test_bad_config(tmp_path, capsys, payload, needle):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(payload))
    code, _, err = run(["scaling", "--config", str(cfg)], capsys)
    assert code == 2
    assert str(cfg) in err and needle in err


def test_wiesner_roundtrip(tmp_path, capsys):
    notes = tmp_path / "notes.json"
    assert run(["mint-wiesner", "--seed", "5", "--n", "6", "--count", "3", "--out", str(notes)], capsys)[0] == 0
    code, out, _ = run(["verify", "--seed", "5", "--notes", str(notes)], capsys)
    assert code == 0 and all(r["accept"] for r in json.loads(out)["results"])
    # a different seed is a different bank
    assert run(["verify", "--seed", "6", "--notes", str(notes)], capsys)[0] == 1


def test_stabilizer_mint_auth(tmp_path, capsys):
    note = tmp_path / "note.json"
    args = ["--n", "6", "--l", "201", "--m", "8", "--eps", "0.5"]
    assert run(["mint-stab", "--seed", "2", "--out", str(note)] + args, capsys)[0] == 0
    code, out, _ = run(["auth-stab", "--seed", "2", "--note", str(note), "--count", "3"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["accepts"] == [True] * 3
    assert run(["auth-stab", "--seed", "9", "--note", str(note)], capsys)[0] == 1


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(["sweep-stab", "--seed", "1", "--trials", "1", "--n", "8", "--l", "11",
                      "--ms", "8,128", "--out", str(out)], capsys)
    lines = out.read_text().splitlines()
    assert code == 0 and len(lines) == 3 and lines[0].startswith("n,eps,l,m")


def test_vend_eval_pirate(tmp_path, capsys):
    prog = tmp_path / "p.json"
    assert run(["vend", "--seed", "1", "--scheme", "b", "--key", "011", "--k", "6", "--out", str(prog)], capsys)[0] == 0
    assert json.loads(prog.read_text())["simulation_only"] is True
    code, out, _ = run(["eval", "--seed", "1", "--program", str(prog), "--x", "011"], capsys)
    assert code == 0 and json.loads(out)["bit"] == 1
    code, out, _ = run(["pirate", "--seed", "1", "--program", str(prog), "--strategy", "split"], capsys)
    assert [len(p["registers"]) for p in json.loads(out)["programs"]] == [3, 3]
    code, out, _ = run(["pirate", "--seed", "1", "--program", str(prog), "--strategy", "learn",
                        "--family", "000,011,111"], capsys)
    assert json.loads(out)["key"] == "011"
    assert run(["pirate", "--seed", "1", "--program", str(prog), "--strategy", "pgm"], capsys)[0] == 2


def test_games_and_attacks(capsys):
    code, out, _ = run(["attack-queries", "--seed", "1", "--trials", "5"], capsys)
    assert code == 0 and json.loads(out)["success_rate"] == 1.0
    code, out, _ = run(["wealth-game", "--seed", "1", "--trials", "2", "--scheme", "bbbw",
                        "--counterfeiter", "query", "--n", "8", "--k", "1", "--r", "1"], capsys)
    assert code == 0 and json.loads(out)["wealth"] == pytest.approx(2)
    code, out, _ = run(["tdesign-distinguish", "--seed", "1", "--trials", "20"], capsys)
    assert code == 0 and json.loads(out)["within_bound"]
    code, out, _ = run(["attack-clone", "--seed", "1", "--trials", "100", "--budget", "50"], capsys)
    assert code == 0 and json.loads(out)["cloner_value"] <= 0.75 + 1e-9
