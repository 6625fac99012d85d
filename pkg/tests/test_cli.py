import json
import time

import numpy as np
import pytest

from nlmc.cli import main
from nlmc.errors import ParseError, ValidationError
from nlmc.scenario import bundled_scenarios, parse_scenario, scenario_from_dict

TABLE = {
    "name": "flip",
    "kernel": {"table": {"h_knots": [0, 1], "rows": [[[0, 1], [0, 1]], [[1, 0], [1, 0]]]}},
    "aggregator": {"linear": [0, 1]},
    "h_domain": [0, 1],
    "dynamics": {"mu0": [0.3, 0.7], "steps": 20},
}


def _write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def test_parse_bundled_example2():
    sc = parse_scenario("example2")
    assert sc.builtin == "example2" and sc.h_domain == (0.0, 1.0)


def test_parse_error_reports_line_and_column(tmp_path):
    path = _write(tmp_path, '{\n  "name": "x",\n  "h_domain": [0, 1\n}')
    with pytest.raises(ParseError) as exc:
        parse_scenario(path)
    assert ":4:1:" in str(exc.value)


def test_missing_h_domain_names_the_field():
    with pytest.raises(ValidationError) as exc:
        scenario_from_dict({"name": "x", "kernel": {"builtin": "example2"}})
    assert exc.value.field == "h_domain"


def test_unknown_builtin_lists_known_ids():
    with pytest.raises(ValidationError) as exc:
        scenario_from_dict({"name": "x", "kernel": {"builtin": "nope"}, "h_domain": [0, 1]})
    assert "example2" in str(exc.value) and "lindley" in str(exc.value)


def test_unknown_field_rejected():
    with pytest.raises(ValidationError) as exc:
        scenario_from_dict({"name": "x", "colour": "red"})
    assert exc.value.field == "colour"


def test_solve_example3_report(tmp_path, capsys):
    assert main(["solve", "--scenario", "example3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "equilibria: 2" in out
    assert "DPreserving  SD          FAILS" in out
    eq = (tmp_path / "equilibria.csv").read_text().strip().split("\n")
    assert eq[0] == "h,p0,p1,p2,residual" and len(eq) == 3
    assert (tmp_path / "phi.csv").read_text().startswith("h,phi\n")


def test_simulate_example5(tmp_path, capsys):
    assert main(["simulate", "--scenario", "example5", "--steps", "100", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "cycle: period 2, onset 0" in out
    assert "cesaro: (0.50" in out
    assert "cesaro invariant: false" in out
    assert len((tmp_path / "trajectory.csv").read_text().strip().split("\n")) == 102


def test_queue_mm1(capsys):
    assert main(["queue", "--scenario", "mm1"]) == 0
    assert "lambda: 0.618033988749" in capsys.readouterr().out


def test_nleq_cor1(capsys):
    assert main(["nleq", "--scenario", "cor1"]) == 0
    out = capsys.readouterr().out
    assert "a*: 0.41666666666" in out or "a*: 0.41666666667" in out


def test_exit_codes(tmp_path, capsys):
    assert main(["solve", "--scenario", "example2", "--require-certified"]) == 2
    assert main(["solve", "--scenario", "example4", "--require-certified"]) == 0
    assert main(["solve", "--scenario", str(tmp_path / "missing.json")]) == 1
    bad = _write(tmp_path, {"name": "x", "kernel": {"builtin": "example2"}, "h_domain": [0, 5]})
    assert main(["solve", "--scenario", bad]) == 1
    err = capsys.readouterr().err
    assert "h_domain" in err


def test_table_scenario_certify_and_simulate(tmp_path, capsys):
    path = _write(tmp_path, TABLE)
    assert main(["certify", "--scenario", path, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "certificates.txt").exists()
    assert main(["simulate", "--scenario", path]) == 0
    assert "cycle: period 2" in capsys.readouterr().out


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--scenario", "example2", "--out", str(out), "--seed", "3"]) == 0
    for name in ("report.txt", "phi.csv", "equilibria.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("name", bundled_scenarios())
def test_bundled_scenarios_run_quickly(name, tmp_path):
    sc = parse_scenario(name)
    t0 = time.perf_counter()
    assert main([sc.command, "--scenario", name, "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - t0 < 10.0


def test_all_bundled_ids_shipped():
    names = set(bundled_scenarios())
    assert names == {"example1i", "example1ii", "example2", "example3", "example4", "example5", "example7",
                     "mm1", "mg1", "cor1", "wealth", "lindley"}


def test_app_block_scenarios(tmp_path, capsys):
    noise = {"values": [-1, 0, 1], "probs": [0.25, 0.5, 0.25]}
    ar = {
        "name": "ar",
        "kernel": {"app": "ar", "a": 0.5, "noise": noise, "grid": {"start": -4, "stop": 4, "num": 17},
                   "m": [min(1.0, max(0.0, (x + 2) / 4)) for x in np.linspace(-4, 4, 17)]},
        "h_domain": [0, 1],
    }
    assert main(["solve", "--scenario", _write(tmp_path, ar, "ar.json"), "--require-certified"]) == 0
    assert "verdict: UniqueCertified" in capsys.readouterr().out
    affine = {
        "name": "affine",
        "kernel": {"app": "affine", "a": [0.5, 0.5], "beta": [0.1, -0.1], "gamma": [0.2, -0.3],
                   "noise": noise, "grid": {"start": -4, "stop": 4, "num": 9}},
        "family": "cone_O",
        "h_domain": [-2, 2],
    }
    assert main(["certify", "--scenario", _write(tmp_path, affine, "affine.json"), "--require-certified"]) == 0
    assert "AffineCone   LinearCone  holds" in capsys.readouterr().out
    missing = {"name": "bad", "kernel": {"app": "ar", "a": 0.5}, "h_domain": [0, 1]}
    assert main(["solve", "--scenario", _write(tmp_path, missing, "bad.json")]) == 1
