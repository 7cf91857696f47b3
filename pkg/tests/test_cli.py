import json

import pytest

from selfsim.cli import main, parse_grid, parse_levels, UsageError


@pytest.fixture
def run(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SSS_SEED", raising=False)

    def _run(*argv):
        code = main(list(argv))
        out, err = capsys.readouterr()
        return code, out, err

    return _run


def test_levels_and_grids():
    assert parse_levels("1..4") == [1, 2, 3, 4]
    assert parse_levels("2,5") == [2, 5]
    with pytest.raises(UsageError):
        parse_levels("-1..2")
    assert parse_grid(["lam=-1:1:3"]) == {"lam": [-1.0, 0.0, 1.0]}
    assert parse_grid(["mu=1/2,2"]) == {"mu": [0.5, 2.0]}


def test_nucleus_adding_machine(run, tmp_path):
    code, out, _ = run("nucleus", "--group", "adding-machine")
    assert code == 0
    assert out.count("\n") == 1
    assert "size=3" in out
    assert (tmp_path / "nucleus.txt").read_text().split() == ["e", "a", "a'"]


def test_nucleus_failure_exit_code(run):
    code, out, _ = run("nucleus", "--group", "sidki")
    assert code == 1 and "failed" in out


def test_spectrum_level_one(run, tmp_path):
    code, out, _ = run("spectrum", "--group", "grigorchuk", "--operator", "a+b+c+d", "--level", "1")
    assert code == 0
    rows = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert rows[1] == "eigenvalue"
    assert [float(v) for v in rows[2:]] == [2.0, 4.0]


def test_schur_verify_exit_and_summary(run, tmp_path):
    code, out, _ = run("schur-verify", "--group", "grigorchuk", "--pencil", "R2", "--map", "F", "--block", "0",
                       "--levels", "1..4", "--samples", "20", "--seed", "7")
    assert code == 0
    assert out.startswith("MAX_DEV ")
    assert float(out.split()[1]) <= 1e-8
    assert (tmp_path / "schur-verify.txt").read_text().splitlines()[-1].startswith("MAX_DEV")


def test_schur_verify_wrong_map_breaches(run):
    code, out, _ = run("schur-verify", "--group", "grigorchuk", "--pencil", "R", "--map", "G", "--block", "0",
                       "--levels", "2", "--samples", "5", "--seed", "1", "--scale", "1")
    assert code == 1


def test_basilica_block_zero_unsupported(run):
    code, out, err = run("schur-verify", "--group", "basilica", "--pencil", "R", "--map", "basilica",
                         "--block", "0", "--seed", "1")
    assert code == 2
    assert out.startswith("UNSUPPORTED")
    assert "finitely supported inverse" in err


def test_stochastic_commands_need_seed(run, monkeypatch):
    code, _, err = run("walk", "simulate", "--family", "grigorchuk", "--value", "1/3")
    assert code == 2 and "seed" in err
    monkeypatch.setenv("SSS_SEED", "4")
    code, out, _ = run("walk", "simulate", "--family", "grigorchuk", "--value", "1/3", "--samples", "2000")
    assert code == 0 and "samples=2000" in out


def test_unknown_names_list_choices(run):
    code, _, err = run("nucleus", "--group", "nope")
    assert code == 2 and "grigorchuk" in err
    code, _, err = run("schur-verify", "--group", "grigorchuk", "--pencil", "Q", "--map", "F", "--seed", "1")
    assert code == 2 and "available" in err
    code, _, err = run("dynamics", "eval", "--map", "nope", "--point", "1,1")
    assert code == 2 and "available" in err


def test_bad_usage_exit_two(run):
    assert run("bogus")[0] == 2
    assert run("expand", "--group", "grigorchuk", "--operator", "a +", "--level", "1")[0] == 2
    assert run("group", "--group", "grigorchuk", "--element", "a", "--act", "012")[0] == 2


@pytest.mark.parametrize("argv", [
    ("group", "--group", "grigorchuk"),
    ("expand", "--group", "grigorchuk", "--operator", "a+b", "--level", "3"),
    ("spectrum", "--group", "hanoi", "--operator", "a+b+c", "--level", "2"),
    ("sweep", "--group", "grigorchuk", "--pencil", "R", "--spectral", "mu", "--grid", "lam=-1:1:3"),
    ("schur-verify", "--group", "hanoi", "--pencil", "Delta", "--map", "hanoi", "--seed", "1"),
    ("dynamics", "identity", "--map", "H,F", "--rhs", "G", "--seed", "1"),
    ("walk", "schur", "--family", "basilica", "--value", "2", "--letter", "1"),
    ("nucleus", "--group", "grigorchuk"),
])
def test_dry_run_writes_nothing(run, tmp_path, argv):
    code, out, _ = run(*argv, "--dry-run")
    assert code == 0 and out.startswith("dry-run")
    assert list(tmp_path.iterdir()) == []


def test_group_query(run, tmp_path):
    code, out, _ = run("group", "--group", "grigorchuk", "--element", "b", "--act", "101", "--section", "1")
    assert code == 0
    doc = json.loads((tmp_path / "group.json").read_text())
    assert doc["query"]["act"] == "100"
    assert doc["query"]["section"] == "c"


def test_group_from_file(run, tmp_path):
    (tmp_path / "odometer.json").write_text(json.dumps(
        {"alphabet_size": 2, "states": {"t": {"output": [1, 0], "sections": ["e", "t"]}}}))
    code, out, _ = run("nucleus", "--automaton", "odometer.json")
    assert code == 0 and "size=3" in out


def test_expand_export(run, tmp_path):
    code, out, _ = run("expand", "--group", "gw", "--operator", "b + c - b*c - 1", "--level", "4")
    assert code == 0 and "zero=true" in out
    assert (tmp_path / "expand.txt").read_text() == "# level=4 dim=16\n"


def test_sweep_with_curves_and_svg(run, tmp_path):
    code, out, _ = run("sweep", "--group", "hanoi", "--pencil", "Delta", "--spectral", "x", "--grid", "y=-2:2:9",
                       "--level", "2", "--curves", "--svg", "hanoi.svg")
    assert code == 0 and "curve_max_residual" in out
    assert (tmp_path / "hanoi.svg").read_text().startswith("<?xml")


def test_dynamics_commands(run, tmp_path):
    assert run("dynamics", "eval", "--map", "H", "--point", "1,1", "--exact")[1].split()[3] == "value=4,-2"
    code, out, _ = run("dynamics", "eval", "--map", "F", "--point", "0,1")
    assert code == 1 and "singular" in out
    code, out, _ = run("dynamics", "semiconj", "--map", "F", "--seed", "3")
    assert code == 0 and out.startswith("MAX_RESIDUAL")
    code, out, _ = run("dynamics", "semiconj", "--map", "G", "--seed", "3")
    assert code == 1
    code, out, _ = run("dynamics", "orbit", "--map", "hanoi-f", "--seeds=-2,0", "--depth", "2")
    assert code == 0
    code, out, _ = run("dynamics", "attractor", "--map", "halve", "--points", "50", "--seed", "1", "--svg", "h.svg")
    assert code == 0 and (tmp_path / "h.svg").exists()


def test_walk_commands(run):
    code, out, _ = run("walk", "search", "--family", "grigorchuk", "--value", "0.45")
    assert code == 0 and "coefficient=1/2" in out
    code, out, _ = run("walk", "search", "--family", "grigorchuk", "--value", "0.45", "--letter", "1")
    assert code == 0 and "degenerate=true" in out
    code, out, _ = run("walk", "matrix", "--group", "basilica", "--measure", "1/4 a + 1/4 a' + 1/4 b + 1/4 b'")
    assert code == 0 and "total_mass=2" in out
    code, out, _ = run("walk", "family-map", "--family", "grigorchuk", "--value", "1/3")
    assert "value=1/3" in out


def test_output_is_deterministic(run, tmp_path):
    outputs = []
    for workers in ("1", "2"):
        run("walk", "simulate", "--family", "basilica", "--value", "1", "--letter", "1", "--samples", "10000",
            "--seed", "5", "--workers", workers, "--out", f"w{workers}.txt")
        outputs.append((tmp_path / f"w{workers}.txt").read_bytes())
    assert outputs[0] == outputs[1]
