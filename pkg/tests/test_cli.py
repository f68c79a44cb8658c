import os

import numpy as np
import pytest

from swrdd import io
from swrdd.cli import main
from swrdd.config import parse_config, parse_config_text
from swrdd.errors import ParseError
from swrdd.transmission import TransmissionSpec

SMALL = ["--T", "0.03", "--dx", "0.05"]


def test_defaults_and_preset():
    cfg = parse_config_text('preset = "harmonic_neg"\nn_sub = 2\n')
    assert cfg.potential == "harmonic_neg" and cfg.u0 == "gaussian" and cfg.n_sub == 2
    assert (cfg.T, cfg.dt, cfg.dx, cfg.tol) == (0.5, 1e-3, 1e-2, 1e-10)
    x = np.array([0.0, 2.0])
    assert np.allclose(cfg.make_potential().at(0.0, x), -x ** 2)


def test_soliton_preset():
    cfg = parse_config_text('preset = "cubic_nls"')
    assert cfg.u0 == "soliton" and cfg.make_potential().kind == "nonlinear"


def test_transmission_table():
    cfg = parse_config_text('[transmission]\nfamily = "pade"\norder = 4\nm = 20\n')
    assert cfg.transmission == TransmissionSpec("pade", 4, m=20)


@pytest.mark.parametrize("text,needle", [
    ('potential = ""', "potential"),
    ("dt = -1e-3", "dt"),
    ("dt = 0.0", "dt"),
    ("bogus = 1", "bogus"),
    ('[transmission]\nfamily = "gauge"\norder = 3', "transmission"),
    ('[transmission]\nwhat = 1', "what"),
    ('[extra]\na = 1', "extra"),
    ("n_sub = 0", "n_sub"),
    ('n_sub = "two"', "n_sub"),
    ("T = 0.5\ndt = 0.3", "multiple"),
    ("n_sub = 2\ndt = \nT = 0.5", "line 2"),
    ('potential = "expr:x +* 2"', "potential"),
    ('preset = "nope"', "preset"),
])
def test_parse_errors_name_the_key(text, needle):
    with pytest.raises(ParseError) as info:
        parse_config_text(text)
    assert needle in str(info.value)


def test_inline_expression():
    cfg = parse_config_text('potential = "expr:0.5*x**2"')
    assert np.isclose(cfg.make_potential().at(0.0, np.array([2.0]))[0], 2.0)


def test_parse_config_file(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('preset = "linear_tx"\nn_sub = 4\nalgorithm = "preconditioned"\nkrylov = "gmres"\n')
    cfg = parse_config(p)
    assert cfg.algorithm == "preconditioned" and cfg.n_sub == 4
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.toml")


def test_coeffs_command(capsys):
    assert main(["coeffs", "--n", "5"]) == 0
    out = capsys.readouterr().out.splitlines()
    alpha = [float(line.split(",")[1]) for line in out[1:7]]
    assert alpha == [1, 1, 0.5, 0.5, 0.375, 0.375]


def test_coeffs_with_pade(capsys):
    assert main(["coeffs", "--n", "2", "--pade-m", "3"]) == 0
    assert "k,a_k,d_k" in capsys.readouterr().out


def test_run_writes_bundle(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", "--preset", "harmonic_neg", "--n-subdomains", "2", "--out", str(out)]
                + SMALL)
    assert code == 0
    for name in ("convergence_history.csv", "solution_final.csv", "report.csv"):
        raw = (out / name).read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
    x, u = io.read_solution(out / "solution_final.csv")
    assert x.size == 2 * 420 + 1 and np.isfinite(u).all()
    header = (out / "solution_final.csv").read_text().splitlines()[0]
    assert header == "x,re,im,abs"


def test_solution_csv_roundtrip(tmp_path, rng):
    x = np.linspace(-1, 1, 7)
    u = rng.normal(size=7) + 1j * rng.normal(size=7)
    io.write_solution(tmp_path / "s.csv", x, u)
    x2, u2 = io.read_solution(tmp_path / "s.csv")
    assert np.array_equal(x, x2) and np.array_equal(u, u2)


def test_compare_reports_small_error(tmp_path, capsys):
    code = main(["compare", "--preset", "harmonic_neg", "--n-subdomains", "4",
                 "--algorithm", "new", "--out", str(tmp_path)] + SMALL)
    assert code == 0
    rows = dict(line.split(",", 1) for line in (tmp_path / "report.csv").read_text().splitlines())
    assert float(rows["rel_l2_error"]) <= 1e-7


def test_not_converged_exit_code_and_partial_history(tmp_path, capsys):
    code = main(["run", "--preset", "harmonic_neg", "--n-subdomains", "3", "--maxit", "2",
                 "--out", str(tmp_path)] + SMALL)
    assert code == 2
    lines = (tmp_path / "convergence_history.csv").read_text().splitlines()
    assert lines[0] == "iter,residual" and len(lines) == 3


def test_error_exit_code(tmp_path, capsys):
    assert main(["run", "--preset", "linear_tx", "--algorithm", "new", "--out", str(tmp_path)]
                + SMALL) == 1
    assert "error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 1


def test_reference_and_probe(tmp_path, capsys):
    assert main(["reference", "--preset", "harmonic_neg", "--out", str(tmp_path / "r")]
                + SMALL) == 0
    rows = dict(line.split(",", 1) for line in (tmp_path / "r" / "report.csv").read_text()
                .splitlines())
    assert float(rows["mass_rel_drift"]) < 1e-10
    assert main(["probe", "--preset", "harmonic_neg", "--n-subdomains", "3",
                 "--out", str(tmp_path / "p")] + SMALL) == 0
    assert len(os.listdir(tmp_path / "p")) == 6


def test_sweep_robin(tmp_path, capsys):
    assert main(["sweep-robin", "--preset", "harmonic_neg", "--p-values", "20,40",
                 "--out", str(tmp_path)] + SMALL) == 0
    lines = (tmp_path / "sweep_robin.csv").read_text().splitlines()
    assert lines[0] == "p,iterations,converged" and len(lines) == 3


def test_threads_env_override(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SWRDD_THREADS", "3")
    from swrdd.cli import build_parser, config_from_args
    args = build_parser().parse_args(["run", "--threads", "1"])
    assert config_from_args(args).threads == 3


def test_algorithm_name_aliases():
    from swrdd.cli import build_parser
    args = build_parser().parse_args(["run", "--algorithm", "ClassicalFP", "--krylov", "Bicgstab"])
    assert args.algorithm == "classical_fp" and args.krylov == "bicgstab"
