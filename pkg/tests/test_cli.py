import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from orbint import cli
from orbint import scenarios as S
from orbint.config import Range, ScenarioConfig, format_value, parse_config, parse_schedule, parse_value
from orbint.errors import ConfigError, QuadratureFailure


# ---------------------------------------------------------------- config format


def test_parse_example_config():
    cfg = parse_config('''
[scenario]
name = "jessen-dyadic"
levels = "dyadic:0..14"
sample_size = 1000
seed = 7

[tolerances]
tol = 1e-6

[truncation]
window = -2.0..2.0
''')
    assert cfg.name == "jessen-dyadic" and cfg.seed == 7
    assert cfg.get("truncation", "window") == Range(-2.0, 2.0)
    assert cfg.get("tolerances", "tol") == 1e-6


@pytest.mark.parametrize("text", [
    '[scenario]\nname = "x"\nbogus = 1\n',
    '[nope]\nname = "x"\n',
    '[scenario]\nname = unquoted\n',
    '[scenario]\nsample_size = 3\n',
    '[scenario]\nname = "x"\nsample_size = "many"\n',
    '[scenario]\nname = "x"\nname = "y"\n',
    'name = "x"\n',
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_unknown_param_rejected():
    with pytest.raises(ConfigError):
        parse_config('[scenario]\nname = "x"\n[params]\nwat = 1\n', {"delta": 0.75})
    with pytest.raises(ConfigError):
        parse_config('[scenario]\nname = "x"\n[params]\ndelta = "a"\n', {"delta": 0.75})


def test_schedules():
    assert parse_schedule("dyadic:0..14") == ("dyadic", 0, 14)
    assert parse_schedule("all:1..10000") == ("all", 1, 10000)
    for bad in ("dyadic:3..1", "fib:1..3", "all:1-3"):
        with pytest.raises(ConfigError):
            parse_schedule(bad)


scalars = st.one_of(
    st.integers(-10**9, 10**9),
    st.floats(allow_nan=False, allow_infinity=False),
    st.booleans(),
    st.text(st.characters(blacklist_characters='"\n\r\\', blacklist_categories=("Cs", "Cc")), max_size=12),
)


@settings(max_examples=200, deadline=None)
@given(scalars)
def test_value_round_trip(v):
    back = parse_value(format_value(v))
    assert back == v and type(back) is type(v)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from(["delta", "factor", "bound"]), st.floats(-1e6, 1e6), max_size=3),
       st.integers(0, 2**31), st.integers(1, 10**6))
def test_config_emit_parse_identity(params, seed, size):
    cfg = ScenarioConfig()
    cfg.set("scenario", "name", "jessen-dyadic")
    cfg.set("scenario", "seed", seed)
    cfg.set("scenario", "sample_size", size)
    cfg.set("truncation", "window", Range(-1.5, 2.0))
    for k, v in params.items():
        cfg.set("params", k, v)
    back = parse_config(cfg.to_text())
    assert back.sections == cfg.sections


# ---------------------------------------------------------------- list


def test_list_default_has_all_scenarios(capsys):
    assert cli.main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 14
    names = [ln.split()[0] for ln in lines]
    assert names == sorted(names)


def test_list_filter(capsys):
    cli.main(["list", "--filter", "lattice"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("civin-lattice-2d")


def test_list_json_round_trips(capsys):
    cli.main(["list", "--json"])
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 14
    assert json.loads(json.dumps(rows)) == rows
    for r in rows:
        cfg = parse_config(r["config_text"], S.get(r["name"]).params)
        assert cfg.to_json() == r["defaults"]


# ---------------------------------------------------------------- run


def _write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_run_jessen_defaults(tmp_path):
    cfg = _write(tmp_path, '[scenario]\nname = "jessen-dyadic"\n')
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    raw = (out / "jessen-dyadic.csv").read_bytes()
    assert b"\r" not in raw
    text = raw.decode("utf-8")
    assert text.splitlines()[0] == cli.CSV_HEADER
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 1000 * 15
    r = rows[-1]
    assert repr(float(r["value_re"])) == r["value_re"]
    assert float(r["abs_error"]) == abs(float(r["value_re"]) - float(r["reference_re"]))
    summary = json.loads((out / "jessen-dyadic.json").read_text())
    assert summary["passed"] and summary["config"]["scenario"]["seed"] == 0


def test_run_reproduces_from_echo(tmp_path):
    cfg = _write(tmp_path, '[scenario]\nname = "rational-E-counterexample"\nsample_size = 20\n')
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(cfg), "--out", str(a), "--seed", "11"]) == 0
    summary = json.loads((a / "rational-E-counterexample.json").read_text())
    assert summary["config"]["scenario"]["seed"] == 11
    echo = _write(tmp_path, summary["config_text"], "echo.txt")
    assert cli.main(["run", str(echo), "--out", str(b)]) == 0
    assert (a / "rational-E-counterexample.csv").read_bytes() == (b / "rational-E-counterexample.csv").read_bytes()


def test_unknown_scenario_exit_two_no_files(tmp_path):
    cfg = _write(tmp_path, '[scenario]\nname = "no-such-thing"\n')
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_bad_thread_env_exit_two(tmp_path, monkeypatch):
    monkeypatch.setenv("ORBINT_THREADS", "lots")
    cfg = _write(tmp_path, '[scenario]\nname = "restricted-E"\n')
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_bad_instance_and_schedule_exit_two(tmp_path):
    for text in ('[scenario]\nname = "jessen-dyadic"\ninstance = "affine-self"\n',
                 '[scenario]\nname = "jessen-dyadic"\nlevels = "all:1..10"\n',
                 '[scenario]\nname = "jessen-dyadic"\n[params]\nbogus = 1\n'):
        assert cli.main(["run", str(_write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file_exit_two(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.txt")]) == 2


def test_verdict_failure_exit_one(tmp_path):
    text = '[scenario]\nname = "jessen-dyadic"\nsample_size = 50\n[params]\nbound = 0.001\n'
    out = tmp_path / "out"
    assert cli.main(["run", str(_write(tmp_path, text)), "--out", str(out)]) == 1
    summary = json.loads((out / "jessen-dyadic.json").read_text())
    assert not summary["passed"]
    assert not summary["verdicts"]["final_median_below_bound"]["passed"]


def test_numerical_failure_exit_three(tmp_path, monkeypatch):
    def boom(cfg):
        raise QuadratureFailure("nan in quadrature")

    sc = S.REGISTRY["restricted-E"]
    monkeypatch.setitem(S.REGISTRY, "restricted-E", S.Scenario(sc.name, sc.description, sc.defaults, boom))
    out = tmp_path / "out"
    assert cli.main(["run", str(_write(tmp_path, '[scenario]\nname = "restricted-E"\n')), "--out", str(out)]) == 3
    assert not out.exists()


def test_plot_script_emitted(tmp_path):
    cfg = _write(tmp_path, '[scenario]\nname = "restricted-E"\nsample_size = 3\n')
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out), "--emit-plot-script"]) == 0
    script = (out / "restricted-E_plot.py").read_text()
    compile(script, "plot", "exec")
    assert "restricted-E.csv" in script


def test_output_paths_from_config(tmp_path):
    text = '[scenario]\nname = "restricted-E"\nsample_size = 2\n[output]\ncsv = "t.csv"\njson = "s.json"\n'
    out = tmp_path / "o"
    assert cli.main(["run", str(_write(tmp_path, text)), "--out", str(out)]) == 0
    assert (out / "t.csv").exists() and (out / "s.json").exists()


def test_rational_counterexample_report(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(_write(tmp_path, '[scenario]\nname = "rational-E-counterexample"\n')),
                     "--out", str(out)]) == 0
    v = json.loads((out / "rational-E-counterexample.json").read_text())["verdicts"]
    assert v["lattice_side_exact"]["passed"] and v["ambient_side_zero"]["passed"]
    assert v["irrational_shifts_both_zero"]["passed"]


def test_bad_arguments_exit_two():
    assert cli.main(["frobnicate"]) == 2
