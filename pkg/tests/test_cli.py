import json
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from mvparticles.cli import main
from mvparticles.config import ConfigError, parse_config
from mvparticles.experiments import blowup_metrics
from mvparticles.scheme import read_curve_csv

from conftest import TWO_PHI_MINUS_ONE


def write_cfg(tmp_path, body, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(body)
    return p


RECIP = """
scheme = "{scheme}"
N = {N}
seed = 1
[model]
alpha = {alpha}
horizon = {T}
[law]
kind = "reciprocal_exp"
rate = 1.0
[mesh]
kind = "uniform"
n = {n}
"""

GAMMA_LIST = """
scheme = "{scheme}"
N = {N}
seed = 2
n_seeds = {seeds}
[model]
alpha = {alpha}
horizon = {T}
[law]
kind = "gamma"
shape = 1.5
scale = 0.5
[mesh]
kind = "uniform"
n_list = {n_list}
"""


def run(*argv):
    return main([str(a) for a in argv])


def test_simulate_example(tmp_path):
    cfg = write_cfg(tmp_path, RECIP.format(scheme="bridge", N=100_000, alpha=0.8, T=2.0, n=200))
    out = tmp_path / "out"
    assert run("simulate", "--config", cfg, "--out", out) == 0
    curve = read_curve_csv(out / "loss.csv")
    assert curve.mesh.n == 200 and curve.values[0] == 0
    assert np.all(np.diff(curve.values) >= 0)
    summary = json.loads((out / "summary.json").read_text())
    assert 0 < summary["loss_at_evaluation_time"] < 1
    assert summary["evaluation_time"] == 2.0
    rate = np.loadtxt(out / "loss_rate.csv", delimiter=",", skiprows=1)
    assert rate.shape == (201, 2)
    assert (out / "timing.json").exists()


def test_simulate_alpha_zero_matches_first_passage_cdf(tmp_path):
    body = """
scheme = "bridge"
N = 100000
seed = 3
[model]
alpha = 0.0
horizon = 1.0
[law]
kind = "dirac"
y0 = 1.0
[mesh]
n = 64
"""
    out = tmp_path / "a0"
    assert run("simulate", "--config", write_cfg(tmp_path, body), "--out", out) == 0
    curve = read_curve_csv(out / "loss.csv")
    t = curve.times[1:]
    exact = np.array([math.erfc(1 / math.sqrt(2 * s)) for s in t])
    tol = 4 * np.sqrt(exact * (1 - exact) / 1e5) + 1e-12
    assert np.all(np.abs(curve.values[1:] - exact) < tol)
    assert abs(curve.values[-1] - TWO_PHI_MINUS_ONE) < 0.0059


def test_simulate_single_step(tmp_path):
    cfg = write_cfg(tmp_path, RECIP.format(scheme="plain", N=1000, alpha=0.8, T=2.0, n=1))
    out = tmp_path / "one"
    assert run("simulate", "--config", cfg, "--out", out) == 0
    lines = (out / "loss.csv").read_text().splitlines()
    assert lines[0] == "t,L" and len(lines) == 3
    assert lines[1] == "0,0"
    assert not (out / "loss_rate.csv").exists()


def test_reruns_are_byte_identical_and_ignore_workers(tmp_path):
    cfg = write_cfg(tmp_path, RECIP.format(scheme="bridge", N=70_000, alpha=0.8, T=2.0, n=30))
    outs = []
    for i, w in enumerate([1, 1, 4]):
        out = tmp_path / f"r{i}"
        assert run("simulate", "--config", cfg, "--out", out, "--workers", w) == 0
        outs.append(out)
    for name in ("loss.csv", "loss_rate.csv", "summary.json"):
        ref = (outs[0] / name).read_bytes()
        assert b"\r\n" not in ref
        for o in outs[1:]:
            assert (o / name).read_bytes() == ref


def test_seed_override_changes_result(tmp_path):
    cfg = write_cfg(tmp_path, RECIP.format(scheme="plain", N=2000, alpha=0.8, T=2.0, n=20))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run("simulate", "--config", cfg, "--out", tmp_path / "b", "--seed", 99) == 0
    a = json.loads((tmp_path / "a" / "summary.json").read_text())
    b = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert b["config"]["seed"] == 99
    assert a["loss_at_horizon"] != b["loss_at_horizon"]


def test_converge_writes_errors_and_order(tmp_path):
    cfg = write_cfg(tmp_path, GAMMA_LIST.format(scheme="plain", N=4000, seeds=2, alpha=0.8, T=2.0, n_list="[10, 20, 40, 80, 160]"))
    out = tmp_path / "conv"
    assert run("converge", "--config", cfg, "--out", out) == 0
    rows = (out / "errors.csv").read_text().splitlines()
    assert rows[0] == "n,error" and [r.split(",")[0] for r in rows[1:]] == ["10", "20", "40", "80"]
    order = json.loads((out / "order.json").read_text())["order"]
    assert set(order) >= {"fitted_order", "ci95", "mesh_sizes", "errors"}


@pytest.mark.parametrize("n_list", ["[10, 30, 60, 120, 240]", "[10, 20, 40]"])
def test_converge_rejects_non_doubling(tmp_path, capsys, n_list):
    cfg = write_cfg(tmp_path, GAMMA_LIST.format(scheme="plain", N=100, seeds=1, alpha=0.8, T=2.0, n_list=n_list))
    assert run("converge", "--config", cfg, "--out", tmp_path / "x") == 2
    assert "n_list" in capsys.readouterr().err


def test_blowup_outputs(tmp_path):
    cfg = write_cfg(tmp_path, GAMMA_LIST.format(scheme="plain", N=3000, seeds=1, alpha=1.5, T=0.008, n_list="[20, 40, 80, 160]"))
    out = tmp_path / "bu"
    assert run("blowup", "--config", cfg, "--out", out) == 0
    for n in (20, 40, 80, 160):
        assert read_curve_csv(out / f"loss_n{n}.csv").mesh.n == n
    assert (out / "metrics.csv").read_text().splitlines()[0] == "n,d1,d2,d3"
    assert set(json.loads((out / "order.json").read_text())["orders"]) == {"d1", "d2", "d3"}
    assert len((out / "jumps.csv").read_text().splitlines()) == 5


def test_blowup_small_alpha_has_no_jump(tmp_path):
    cfg = parse_config(GAMMA_LIST.format(scheme="plain", N=20_000, seeds=1, alpha=0.1, T=0.008, n_list="[100, 200, 400, 800]"))
    _, _, jumps, _ = blowup_metrics(cfg)
    assert all(j.size < 0.05 for _, _, j, _ in jumps)


def test_same_seed_same_mesh_metrics_are_zero():
    cfg = parse_config(GAMMA_LIST.format(scheme="bridge", N=2000, seeds=1, alpha=1.5, T=0.008, n_list="[10, 20, 40, 80]"))
    from mvparticles.analysis import metric_d1, metric_d2, metric_d3
    from mvparticles.experiments import paired_curves

    a = paired_curves(cfg, 5)
    b = paired_curves(cfg, 5)
    for x, y in zip(a, b):
        assert metric_d1(x, y) == 0 and metric_d2(x, y) == 0 and metric_d3(x, y) == 0


DENSITY = """
scheme = "{scheme}"
N = {N}
seed = 4
evaluation_time = {t}
[model]
alpha = {alpha}
horizon = {T}
[law]
kind = "{kind}"
{law}
[mesh]
n = {n}
"""


@pytest.mark.parametrize("scheme", ["plain", "bridge"])
def test_density_concentrates_near_dirac(tmp_path, scheme):
    body = DENSITY.format(scheme=scheme, N=100_000, t=1e-3, alpha=0.0, T=1e-3, kind="dirac", law="y0 = 5.0", n=4)
    out = tmp_path / scheme
    assert run("density", "--config", write_cfg(tmp_path, body), "--out", out) == 0
    data = np.loadtxt(out / "density.csv", delimiter=",", skiprows=1)
    mode = data[np.argmax(data[:, 1]), 0]
    assert abs(mode - 5.0) < 0.2
    assert trapezoid(data[:, 1], data[:, 0]) == pytest.approx(1.0, abs=1e-3)


def test_density_no_survivors(tmp_path, capsys):
    body = DENSITY.format(scheme="plain", N=1000, t=1.0, alpha=1e6, T=1.0, kind="gamma", law="shape = 1.5\nscale = 0.5", n=10)
    assert run("density", "--config", write_cfg(tmp_path, body), "--out", tmp_path / "d") == 3
    assert "no survivors" in capsys.readouterr().err


def test_density_shifts_across_jump(tmp_path):
    means, alive = [], []
    for t in (0.001, 0.008):
        body = DENSITY.format(scheme="plain", N=20_000, t=t, alpha=1.5, T=0.008, kind="gamma", law="shape = 1.5\nscale = 0.5", n=400)
        out = tmp_path / f"t{t}"
        assert run("density", "--config", write_cfg(tmp_path, body, f"{t}.toml"), "--out", out) == 0
        d = np.loadtxt(out / "density.csv", delimiter=",", skiprows=1)
        means.append(trapezoid(d[:, 0] * d[:, 1], d[:, 0]))
        alive.append(json.loads((out / "summary.json").read_text())["survivors"])
    # the cascade removes most particles and pushes the rest towards 0
    assert alive[1] < 0.5 * alive[0]
    assert means[1] < means[0] - 0.05


def test_theory_json(tmp_path, capsys):
    assert run("theory", "--alpha", 1, "--beta", 1, "--B", 1, "--B-hat", 1, "--out", tmp_path) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["T_star"] == pytest.approx(0.45927498816746496, rel=1e-12)
    assert res["residual"] < 1e-12
    assert res["extension_condition"] is False
    assert json.loads((tmp_path / "theory.json").read_text()) == res


def test_theory_rejects_bad_alpha(capsys):
    assert run("theory", "--alpha", 0, "--beta", 1, "--B", 1, "--B-hat", 1) == 2


BAD_FIELDS = [
    ("alpha = 0.8", "alpha = -1.0", "model.alpha", 6),
    ("horizon = 2.0", "horizon = 0.0", "model.horizon", 7),
    ('kind = "reciprocal_exp"', 'kind = "cauchy"', "law.kind", 9),
    ("rate = 1.0", "rate = -2.0", "law.rate", 10),
    ("n = 30", "n = 0", "mesh.n", 13),
    ('scheme = "bridge"', 'scheme = "euler"', "scheme", 2),
    ("N = 500", "N = 0", "N", 3),
]


@pytest.mark.parametrize("old,new,field,line", BAD_FIELDS)
def test_config_errors_name_field_and_line(tmp_path, capsys, old, new, field, line):
    body = RECIP.format(scheme="bridge", N=500, alpha=0.8, T=2.0, n=30).replace(old, new)
    cfg = write_cfg(tmp_path, body)
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 2
    err = capsys.readouterr().err
    assert field in err
    assert f"{cfg}:{line}:" in err


def test_config_unknown_key_and_eval_time(tmp_path):
    base = RECIP.format(scheme="bridge", N=500, alpha=0.8, T=2.0, n=30)
    with pytest.raises(ConfigError, match="model.gamma"):
        parse_config(base.replace("horizon = 2.0", "horizon = 2.0\ngamma = 1"))
    with pytest.raises(ConfigError, match="evaluation_time"):
        parse_config("evaluation_time = 3.0\n" + base)
    with pytest.raises(ConfigError, match="n_list"):
        parse_config(base.replace("n = 30", "n_list = [10, 15]"))


def test_missing_config_and_unwritable_output(tmp_path):
    assert run("simulate", "--config", tmp_path / "nope.toml") == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = write_cfg(tmp_path, RECIP.format(scheme="bridge", N=500, alpha=0.8, T=2.0, n=30))
    assert run("simulate", "--config", cfg, "--out", blocker) == 2
