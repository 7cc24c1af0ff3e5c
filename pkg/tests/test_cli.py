import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _configs import SMALL, write
from mbwave import io as mio
from mbwave.cli import main
from mbwave.config import ConfigError, parse_config, parse_grid

CSV_HEADERS = {
    "optimal-times": {"optimal_times.csv": "name,value,closed_form"},
    "region": {"region_left.csv": None, "region_right.csv": None},
    "identity-check": {"identities.csv": "name,n,eps,points,closed_residual,fd_residual,"
                                         "fd_residual_coarse,fd_ratio,fd_exact,pass"},
    "carleman-check": {"carleman.csv": "grid_nt,grid_nx,box,grad,zero,boundary,C_emp"},
    "simulate": {"energy.csv": "t,energy", "field.csv": "t,x,value"},
    "observability-scan": {"scan.csv": "window,min_ratio,median_ratio,optimal_T_marker",
                           "beam.csv": "window,beam_ratio"},
    "hum": {"control_side1.csv": "tau,control_value", "control_side2.csv": "tau,control_value"},
}


def test_optimal_times_prints(tmp_path, capsys):
    assert main(["optimal-times", "--config", str(write(tmp_path, "optimal-times")),
                 "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "T=2 T-=0.5 T+=1.5" in out and "PASS" in out


def test_malformed_speed_exit_2(tmp_path, capsys):
    cfg = {"domain": {"lam1": {"kind": "linear", "slope": 0.0},
                      "lam2": {"kind": "linear", "slope": 1.2, "intercept": 1.0},
                      "t_min": 0.0, "t_max": 2.0}, "window": [0.0, 2.0]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "timelike margin violated" in capsys.readouterr().err


@pytest.mark.parametrize("text,needle", [
    ('{"window": [0, 1],\n "grid": [10 20]}', "line 2"),
    ('{"windw": [0, 1]}', "windw"),
    ('{"seed": -1}', "seed"),
    ('{"grid": [2, 100]}', "grid[0]"),
    ('{"delta": 1.5}', "delta"),
    ('[1, 2]', "top level"),
])
def test_config_errors_are_precise(text, needle):
    with pytest.raises(ConfigError, match=None) as e:
        parse_config(text)
    assert needle in str(e.value)


def test_grid_parse():
    assert parse_grid("400x1200") == (400, 1200)
    with pytest.raises(ConfigError):
        parse_grid("400by1200")


def test_seed_override_validated(tmp_path):
    p = write(tmp_path, "optimal-times")
    assert main(["optimal-times", "--config", str(p), "--out", str(tmp_path / "o"),
                 "--seed", "-3"]) == 2


@pytest.mark.parametrize("sub", list(SMALL))
def test_subcommand_artifacts(tmp_path, sub):
    out = tmp_path / "out"
    code = main([sub, "--config", str(write(tmp_path, sub)), "--out", str(out)])
    assert code in (0, 1)
    man = json.loads((out / "manifest.json").read_text())
    assert list(man)[:6] == list(mio.MANIFEST_KEYS)
    assert man["subcommand"] == sub and len(man["config_sha256"]) == 64
    assert isinstance(man["wall_ms"], float) and man["pass"] == (code == 0)
    for name, header in CSV_HEADERS[sub].items():
        got, rows = mio.read_csv(out / name)
        if header is not None:
            assert ",".join(got) == header
        assert rows and all(len(r) == len(got) for r in rows)


def test_small_runs_pass(tmp_path):
    for sub in ("optimal-times", "region", "identity-check", "simulate", "hum"):
        assert main([sub, "--config", str(write(tmp_path, sub)), "--out", str(tmp_path / sub)]) == 0


def test_simulate_binary_matches_csv(tmp_path):
    out = tmp_path / "o"
    main(["simulate", "--config", str(write(tmp_path, "simulate")), "--out", str(out)])
    vals, (t0, t1) = mio.read_field_binary(out / "field.bin")
    _, rows = mio.read_csv(out / "field.csv")
    first = np.array([float(r[2]) for r in rows[:vals.shape[1]]])
    assert np.array_equal(first, vals[0]) and (t0, t1) == (0.0, 1.0)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_floats(x):
    assert float(mio.fmt(x)) == x


def test_fmt_special_values():
    assert mio.fmt(True) == "1" and mio.fmt(np.int64(7)) == "7"
    assert mio.fmt(math.nan) == "nan" and mio.fmt(-math.inf) == "-inf"


def test_write_csv_rejects_ragged(tmp_path):
    with pytest.raises(ValueError):
        mio.write_csv(tmp_path / "x.csv", "a,b", [(1, 2), (3,)])


def test_json_writer_full_precision(tmp_path):
    p = mio.write_json(tmp_path / "x.json", {"a": 0.1 + 0.2, "b": [1, 2.5], "c": None,
                                             "d": math.inf, "e": {"f": True}})
    back = json.loads(p.read_text())
    assert back["a"] == 0.1 + 0.2 and back["d"] is None and back["e"]["f"] is True
