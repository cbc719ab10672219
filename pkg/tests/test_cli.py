# tests/test_cli.py

import pytest
import yaml

import finsler_lab
from finslab import settings
from finsler_lab import EXIT_EVALUATION, EXIT_OK, EXIT_PREDICATE, EXIT_USAGE, main


def test_catalog_listing(capsys):
    assert main(["catalog"]) == EXIT_OK
    entries = yaml.safe_load(capsys.readouterr().out)
    assert "funk_type" in [e["name"] for e in entries]


def test_compute_prints_labeled_components(capsys):
    code = main(["compute", "--metric", "euclid_parallel", "--params", "b=0.3", "phi=matsumoto",
                 "--x", "0.1,0", "--y", "1,0", "--what", "G"])
    assert code == EXIT_OK
    report = yaml.safe_load(capsys.readouterr().out)
    assert report["what"] == "G"
    assert report["components"]["G^1"] == pytest.approx(0.0, abs=1e-12)


def test_usage_errors(capsys):
    assert main(["compute", "--metric", "euclid_parallel"]) == EXIT_USAGE
    assert main(["compute", "--metric", "nope", "--x", "0,0", "--y", "1,0"]) == EXIT_USAGE
    assert main(["classify", "--metric", "square", "--params", "b"]) == EXIT_USAGE
    assert main(["classify", "--metric", "square", "--grid", "4x4"]) == EXIT_USAGE
    assert "Erro de uso" in capsys.readouterr().err


def test_argparse_rejects_unknown_action():
    with pytest.raises(SystemExit):
        main(["plot"])


def test_evaluation_error_exit_code(capsys):
    code = main(["compute", "--metric", "funk_type", "--x", "0,0", "--y", "0,0", "--what", "G"])
    assert code == EXIT_EVALUATION
    assert "Erro de avaliação" in capsys.readouterr().err


def test_classify_exit_codes(capsys):
    base = ["classify", "--grid", "8x8", "--predicates", "berwald"]
    assert main(base + ["--metric", "euclid_parallel"]) == EXIT_OK
    assert main(base + ["--metric", "funk_type"]) == EXIT_PREDICATE
    capsys.readouterr()


def test_ode_phi_csv_output(tmp_path, capsys):
    out = tmp_path / "phi.csv"
    code = main(["ode-phi", "--k", "0", "--Q0p", "0.5", "--points", "3", "--format", "csv", "--out", str(out)])
    assert code == EXIT_OK
    text = out.read_text(encoding="utf-8")
    assert text == capsys.readouterr().out
    assert text.splitlines()[0] == "s,phi,Q,residual"
    assert len(text.splitlines()) == 4


def test_tolerance_parsing():
    single = finsler_lab._tolerances(["1e-3"])
    assert single["berwald"] == single["isotropic_s"] == 1e-3
    assert finsler_lab._tolerances(["1e-3", "gdw=1e-7"])["gdw"] == 1e-7


def test_grid_and_params_parsing():
    args = finsler_lab.build_parser().parse_args(
        ["classify", "--metric", "uni", "--params", "k=0.2", "a=x", "--grid", "10x12",
         "--box=-1:1,0:0.5", "--seed", "4"])
    assert finsler_lab._params(args.params) == {"k": 0.2, "a": "x"}
    assert finsler_lab._grid(args) == {"x_points": 10, "y_directions": 12, "box": [(-1.0, 1.0), (0.0, 0.5)],
                                      "seed": 4}


def test_ode_phi_defaults_come_from_settings(monkeypatch):
    args = finsler_lab.build_parser().parse_args(["ode-phi"])
    assert (args.k, args.n, args.b, args.points) == (
        settings.ODE_DEFAULT_K, settings.ODE_DEFAULT_N, settings.ODE_DEFAULT_B, settings.ODE_TABLE_POINTS)
    monkeypatch.setattr(settings, "ODE_DEFAULT_K", 0.25)
    assert finsler_lab.build_parser().parse_args(["ode-phi"]).k == 0.25
