"""Rate fitting, report serialisation and reduced-size runs of every experiment."""

import csv
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from endpoint_lab import experiments as ex
from endpoint_lab.grid import Grid


# ---------------------------------------------------------------------------
# fit_rate

def test_fit_exact_line():
    fit = ex.fit_rate([(1, 3), (2, 5), (3, 7), (4, 9)], kind="linear")
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(1.0, abs=1e-12)
    assert fit.max_residual < 1e-12
    np.testing.assert_allclose(fit.predict([5, 6]), [11, 13])


def test_fit_sqrt_loglog():
    N = np.arange(4, 12)
    fit = ex.fit_rate(zip(N, 3.0 * np.sqrt(N)))
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.predict(16.0) == pytest.approx(12.0, rel=1e-12)


def test_fit_noisy_line():
    rng = np.random.default_rng(5)
    x = np.linspace(1, 10, 40)
    y = x + 0.05 * rng.standard_normal(x.size)
    fit = ex.fit_rate(zip(x, y), kind="linear")
    assert 0.97 <= fit.slope <= 1.03


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-3, 3), c=st.floats(0.1, 10))
def test_fit_power_law_recovers_exponent(a, c):
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = ex.fit_rate(zip(x, c * x ** a))
    assert fit.slope == pytest.approx(a, abs=1e-9)


@pytest.mark.parametrize("points,kind", [
    ([(1, 1), (2, 2)], "loglog"),
    ([(1, 1), (2, -2), (3, 3)], "loglog"),
    ([(1, 1), (1, 2), (1, 3)], "linear"),
    ([(1, 1), (2, float("nan")), (3, 3)], "linear"),
    ([(1, 1), (2, 2), (3, 3)], "cubic"),
])
def test_fit_rejects(points, kind):
    with pytest.raises(ValueError):
        ex.fit_rate(points, kind=kind)


# ---------------------------------------------------------------------------
# reports

def _toy_report():
    rep = ex.ExperimentReport("toy", {"a": 1, "z": 1 + 2j}, grid={"L": 1.0, "M": 8}, seeds=[3])
    rep.tables["data"] = [{"n": 1, "v": 0.1}, {"n": 2, "v": np.float64(0.2)}]
    rep.fits["v"] = ex.fit_rate([(1, 1), (2, 2), (4, 4)])
    rep.plot_series.append(("data", "n", "v"))
    rep.check("first", True, np.float64(1.5), "<= 2")
    rep.check("second", False, [1, 2], "increasing")
    return rep


def test_report_json_and_csv(tmp_path):
    rep = _toy_report()
    assert not rep.passed
    assert rep.criterion("first").passed
    with pytest.raises(KeyError):
        rep.criterion("missing")
    paths = rep.write(tmp_path, emit_plot_data=True)
    names = sorted(p.rsplit("/", 1)[-1] for p in paths)
    assert names == ["toy.json", "toy_data.csv", "toy_plot.csv"]
    d = json.loads((tmp_path / "toy.json").read_text())
    assert d["passed"] is False and d["parameters"]["z"] == [1.0, 2.0]
    assert d["fits"]["v"]["slope"] == pytest.approx(1.0)
    assert [c["name"] for c in d["criteria"]] == ["first", "second"]
    lines = (tmp_path / "toy_data.csv").read_text().splitlines()
    assert lines[0].startswith("# toy/data schema v")
    rows = list(csv.DictReader(lines[1:]))
    assert float(rows[1]["v"]) == 0.2
    plot = (tmp_path / "toy_plot.csv").read_text().splitlines()
    assert plot[1] == "x,y,series" and plot[2].endswith("data:v")


def test_report_without_plot_data(tmp_path):
    paths = _toy_report().write(tmp_path)
    assert not (tmp_path / "toy_plot.csv").exists()
    assert len(paths) == 2


# ---------------------------------------------------------------------------
# helpers

def test_level_count_closed_form():
    # (7/8)2^s < k < (9/8)2^s holds 2^(s-2) - 1 integers once s >= 3
    assert ex.level_count(2) == 2
    for s in range(3, 14):
        assert ex.level_count(s) == 2 * (2 ** (s - 2) - 1)


def test_lp_integral_single_level():
    # one level: int_0^{pi/4} (2^-s(1-1/p) min(2^s, 1/sin 2x))^p dx with p = 2, s = 2
    val = ex.lp_integral(2.0, 1)
    x0 = 0.5 * math.asin(0.25)
    exact = 0.25 * ((16.0 * x0) + 0.5 * (1.0 / math.tan(2 * x0)))
    assert val == pytest.approx(exact, rel=1e-9)


# ---------------------------------------------------------------------------
# reduced runs

def test_h1_counterexample_small():
    rep = ex.run_h1_counterexample(N_list=range(4, 8))
    assert rep.passed
    assert rep.criterion("||f_N||_H1 slope").value == pytest.approx(0.5, abs=1e-9)
    assert rep.criterion("||T f_N||_1 slope").value == pytest.approx(1.0, abs=1e-9)


def test_h1_counterexample_deterministic():
    a = ex.run_h1_counterexample(N_list=range(4, 7)).to_dict()
    b = ex.run_h1_counterexample(N_list=range(4, 7)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_lp_counterexample_small():
    rep = ex.run_lp_counterexample(4 / 3, N_list=range(9, 12))
    assert rep.criterion("exactness T f_N = Phi0 * count scalar").passed
    assert rep.criterion("scalar: symbol path vs integer count").passed
    assert rep.criterion("Dirichlet closed form of f_N").passed
    assert rep.seeds == [ex.DEFAULT_SEED]


def test_lp_counterexample_rejects_p():
    for p in (1.0, 0.5, float("inf")):
        with pytest.raises(ValueError):
            ex.run_lp_counterexample(p, N_list=range(9, 12))


def test_l1_blowup_small():
    rep = ex.run_l1_blowup(0.5, eps_list=[2.0 ** -k for k in range(6, 10)])
    assert rep.passed
    assert rep.criterion("||f_eps||_1 = 2").value < 1e-12
    with pytest.raises(ValueError):
        ex.run_l1_blowup(0.0)


def test_l1_blowup_clamps_unresolvable_eps():
    eps = [2.0 ** -k for k in range(6, 10)] + [1e-9]
    with pytest.warns(UserWarning, match="dropped"):
        rep = ex.run_l1_blowup(0.5, eps_list=eps, refine_check=False)
    assert rep.warnings and "1e-09" in rep.warnings[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ValueError):
            ex.run_l1_blowup(0.5, eps_list=[1e-9, 1e-10, 1e-11])


def test_weak_type_failure_small():
    rep = ex.run_weak_type_failure(eps_list=[2.0 ** -k for k in range(5, 9)], refine_check=False)
    assert rep.passed
    weak = rep.criterion("weak quasinorm strictly increasing in ln(1/eps)").value
    assert all(b > a for a, b in zip(weak, weak[1:]))


def test_weak_type_exploratory_carries_no_criteria():
    rep = ex.run_weak_type_exploratory(0.5, eps_list=[0.3, 0.22, 0.16], grid=Grid(1.25, 2 ** 7))
    assert rep.exploratory and rep.criteria == []
    assert rep.to_dict()["note"].startswith("exploratory")
    assert len(rep.tables["data"]) == 3
    with pytest.raises(ValueError):
        ex.run_weak_type_exploratory(0.0)


def test_h1l1_atoms_small_structure():
    rep = ex.run_h1_l1_boundedness(0.0, r_list=[0.125, 0.5, 2.0], n_atoms=3, oracle_check=True)
    assert rep.criterion("grid apply vs direct oracle (Haar, r=1)").passed
    assert rep.criterion("max/median of ||T b||_1").value <= ex.BOUNDED_RATIO
    assert len(rep.seeds) >= 2
    for bad in ({"rho": 1.0}, {"rho": 0.5, "method": "magic"}, {"rho": 0.5, "n_atoms": 0}):
        with pytest.raises(ValueError):
            ex.run_h1_l1_boundedness(**bad)


def test_kernel_bounds_small():
    rep = ex.run_kernel_bounds(grid=Grid(8, 2 ** 10), n_y=8)
    assert rep.passed
    assert rep.criterion("rho=1/2: sup_{1<=|x-y|<=8} |k||x-y|^2 finite").value == 0.0
