import csv
import json

import pytest

from witten_novikov.cli import load_scenario, run


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_verify_thm1_report(tmp_path, capsys):
    assert run(["verify", "thm1", "s1_basic", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_thm1.json").read_text())
    counts = [c for c in report["checks"] if c["check"] == "thm1_small_count"]
    assert len(counts) == 5
    for c in counts:
        assert c["value"] == [1, 1] and c["pass"]
        assert set(c) == {"check", "params", "value", "reference", "residual", "pass"}
    assert report["scenario"]["sizes"] == [256]
    assert "PASS thm1_small_count" in capsys.readouterr().out


def test_instanton_table(tmp_path):
    assert run(["instantons", "s1_basic", "--level", "10", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "instantons.csv")
    assert [float(r["class_value"]) for r in rows] == pytest.approx([0.6848533, 3.8264459], abs=1e-7)
    assert sorted(int(r["sign"]) for r in rows) == [-1, 1]
    assert list(rows[0]) == ["source", "target", "class_value", "sign", "p"]


def test_unknown_scenario(tmp_path, capsys):
    assert run(["spectrum", "nope", "--out", str(tmp_path)]) == 1
    assert "unknown scenario" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"manifold": "circle",\n "a": }')
    assert run(["spectrum", "--scenario", str(bad), "--out", str(tmp_path)]) == 1
    assert "line 2" in capsys.readouterr().err
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"manifold": "circle", "colour": 1}')
    assert run(["spectrum", str(unknown), "--out", str(tmp_path)]) == 1
    assert "colour" in capsys.readouterr().err
    order = tmp_path / "order.json"
    order.write_text('{"builtin": "s1_basic", "t_grid": [20, 10]}')
    assert run(["spectrum", str(order), "--out", str(tmp_path)]) == 1
    assert "t_grid" in capsys.readouterr().err
    assert run(["spectrum", "s1_basic", "--t", "10,x", "--out", str(tmp_path)]) == 1


def test_verify_needs_check(tmp_path):
    assert run(["verify", "s1_basic", "--out", str(tmp_path)]) == 1
    assert run(["frobnicate", "s1_basic"]) == 1


def test_failing_check_exit_code(tmp_path):
    cfg = tmp_path / "strict.json"
    cfg.write_text(json.dumps({"builtin": "s1_basic", "tolerances": {"reg": 1e-30, "linearity": 1e-30}}))
    assert run(["verify", "reg", str(cfg), "--out", str(tmp_path)]) == 2
    report = json.loads((tmp_path / "verify_reg.json").read_text())
    assert not all(c["pass"] for c in report["checks"])


def test_zeta_and_orbits(tmp_path):
    assert run(["verify", "zeta", "catmap_suspension", "--out", str(tmp_path)]) == 0
    assert run(["verify", "zeta", "circle_diffeo", "--out", str(tmp_path)]) == 0
    assert run(["orbits", "catmap_suspension", "--level", "3", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "orbits.csv")
    assert sum(1 for r in rows if r["class_value"] == "2") == 3  # N_2 = 5: one 2-cycle, one fixed point
    zeta = read_csv(tmp_path / "zeta.csv")
    assert [r["coefficient"] for r in zeta] == ["-1", "-5/2", "-16/3"]
    assert run(["orbits", "s1_basic", "--out", str(tmp_path)]) == 1


def test_spectrum_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["spectrum", "s1_basic", "--t", "10,20", "--seed", "7", "--out", str(d)]) == 0
    assert (a / "spectrum.csv").read_bytes() == (b / "spectrum.csv").read_bytes()
    rows = read_csv(a / "spectrum.csv")
    assert list(rows[0]) == ["t", "q", "index", "eigenvalue"]
    assert len(rows) == 2 * 2 * 8


def test_rho_and_torsion(tmp_path):
    assert run(["rho", "s1_basic", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "rho.csv")[0].keys() >= {"s", "volume", "shell_integral"}
    assert run(["torsion", "s1_basic", "--t", "15", "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "torsion.csv")[0]
    assert abs(float(row["t_hat_monodromy"])) < 1e-6


def test_builtins_resolve():
    for name in ("s1_basic", "t2_product", "catmap_suspension", "circle_diffeo"):
        assert load_scenario(name).name == name
