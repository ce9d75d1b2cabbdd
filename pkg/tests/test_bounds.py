import math

import numpy as np
import pytest

from wwrfva.bounds import (bound_report, c1_const, c2_const, c4_const,
                           credit_moment_table, explicit_e1_bound,
                           gaussian_distance, measured_errors, swap_cv_bound,
                           tail_envelope_constant, truncation_bound,
                           write_bounds_csv)
from wwrfva.exposure import base_moments, coeffs_for_dates
from wwrfva.fva import build_correlation_for, build_model_set
from wwrfva.instruments import value_matrix
from wwrfva.mc import SimGrid, simulate


@pytest.fixture(scope="module")
def rig(request):
    """Small full-mode rig shared by the bound tests."""
    from wwrfva.fva import load_run_config
    from conftest import fixture_path
    inputs, settings = load_run_config(fixture_path("single_swap.cfg"))
    models = build_model_set(inputs)
    corr = build_correlation_for(models, inputs.correlations)
    grid = SimGrid.regular(4, 30.0, 2)
    full = simulate(models, corr, grid, 20000, 1, "full")
    vm = value_matrix(inputs.portfolio, models, full)
    tab = credit_moment_table(full)
    coeffs = coeffs_for_dates(models, corr, full.dates, 5)
    bm = base_moments(full, inputs.portfolio, models, 5, value_mat=vm)
    return inputs, models, corr, full, vm, tab, coeffs, bm


# ---------------------------------------------------------------------------
# the exposure-square bound

def test_cv_dominates_static_square(rig):
    inputs, models, *_ = rig
    s = inputs.portfolio.single_swap
    from wwrfva.instruments import static_portfolio_value
    v0 = static_portfolio_value(inputs.portfolio, models)
    # at u -> 0 the value is deterministic, so C_V >= V(0)^2
    assert swap_cv_bound(s, models, 0.0, 1e-6) >= v0 * v0 * (1.0 - 1e-9)


def test_cv_dominates_empirical_square(rig):
    inputs, models, corr, full, vm, *_ = rig
    s = inputs.portfolio.single_swap
    # skip the last few dates: with one live payment Cauchy-Schwarz is an
    # equality and pure MC noise can cross the bound at this path count
    for i in range(1, len(full.dates) - 4, 7):
        emp = float(np.mean(np.maximum(vm[i], 0.0) ** 2))
        cv = swap_cv_bound(s, models, 0.0, float(full.dates[i]))
        assert emp <= cv * (1.0 + 1e-9), i


def test_cv_collapses_with_vanishing_vol(rig):
    inputs, models, *_ = rig
    import dataclasses
    s = inputs.portfolio.single_swap
    from wwrfva.instruments import swap_value_y, swap_weights
    tiny = dataclasses.replace(models.rates["EUR"], sigma=1e-12)
    models2 = dataclasses.replace(models, rates={"EUR": tiny})
    # one live payment left: the Cauchy-Schwarz step is an equality, so
    # the bound collapses exactly onto the deterministic squared value
    u = 29.5
    sw = swap_weights(s, tiny, 0.0, u)
    det = swap_value_y(s, sw, 0.0)
    assert swap_cv_bound(s, models2, 0.0, u) == pytest.approx(det * det,
                                                              rel=1e-6)


# ---------------------------------------------------------------------------
# moment table and constants

def test_moment_table_guards(rig):
    inputs, models, corr, full, *_ = rig
    base = simulate(models, corr, SimGrid.regular(2, 2.0, 1), 2000, 1, "base")
    with pytest.raises(ValueError):
        credit_moment_table(base)
    small = simulate(models, corr, SimGrid.regular(2, 2.0, 1), 500, 1, "full")
    with pytest.raises(ValueError):
        credit_moment_table(small)


def test_moment_table_basics(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    i = 20
    assert tab.S[0, i] == 1.0
    # centered drivers: first moments vanish to MC noise
    assert abs(tab.Y_I[1, i]) < 5.0 * math.sqrt(tab.Y_I[2, i] / tab.n_paths)
    # even moments positive and S moments dominate each marginal
    assert tab.S[2, i] > 0.0
    assert tab.S[4, i] > 0.0
    assert tab.q_abs_s[i] > 0.0


def test_c1_equality_at_unit_weight(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    from wwrfva.models import hw_terms
    i = 12
    var = hw_terms(models.rates["EUR"], 0.0, float(full.dates[i])).var_Y
    assert c1_const(3, "1", var, tab, i) == pytest.approx(
        math.exp(0.5 * 9 * var), rel=1e-14)
    # weighted version is finite and positive
    assert c1_const(2, "y_I", var, tab, i) > 0.0
    with pytest.raises(ValueError):
        c1_const(5, "y_I", var, tab, i)  # needs y_I moments beyond order 8


def test_c2_even_orders_nonnegative(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    for i in (5, 40, 100):
        for m in (2, 4, 6, 8):
            assert c2_const(m, "1", tab, i) >= 0.0
    with pytest.raises(ValueError):
        c2_const(tab.max_order + 1, "1", tab, 5)


def test_c4_series_converges_small(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    i = 30
    v = c4_const("1", tab, i)
    # leading term is + E[S^2]/2, corrections are factorially damped
    lead = 0.5 * c2_const(2, "1", tab, i)
    assert v == pytest.approx(lead, rel=0.05)
    assert abs(c4_const("y_I", tab, i)) < abs(v)


def test_tail_envelope():
    assert tail_envelope_constant(0.0) == 1.0
    assert tail_envelope_constant(-1.0) == 1.0
    assert tail_envelope_constant(2.0) == pytest.approx(math.exp(2.0))


# ---------------------------------------------------------------------------
# bounds vs measured errors

def test_explicit_bound_dominates_measured_eps1(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    s = inputs.portfolio.single_swap
    for i in (5, 20, 60, 100):
        u = float(full.dates[i])
        c_v = swap_cv_bound(s, models, 0.0, u)
        for x in ("1", "y_I"):
            meas = measured_errors(full, models, vm, i, 5, x)["eps1"]
            b = explicit_e1_bound(models, coeffs[i], c_v, bm.disc_epe[i],
                                  tab, i, x)
            assert meas <= b, (i, x)


def test_generic_bounds_dominate_all_families(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    s = inputs.portfolio.single_swap
    for i in (5, 20, 60, 100):
        u = float(full.dates[i])
        c_v = swap_cv_bound(s, models, 0.0, u)
        meas = measured_errors(full, models, vm, i, 5, "y_I")
        assert abs(meas["eps1"]) <= truncation_bound(1, i, models, c_v,
                                                     "eps1", "y_I", tab)
        assert abs(meas["eps2"]) <= truncation_bound(5, i, models, c_v,
                                                     "eps2", "y_I", tab)
        assert abs(meas["eps3"]) <= truncation_bound(5, i, models, c_v,
                                                     "eps3", "y_I", tab)


def test_bound_decreases_factorially_in_order(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    s = inputs.portfolio.single_swap
    i = 40
    c_v = swap_cv_bound(s, models, 0.0, float(full.dates[i]))
    vals = [truncation_bound(n, i, models, c_v, "eps3", "y_I", tab)
            for n in range(7)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # super-linear decay once the factorial takes over
    assert vals[6] < 1e-3 * vals[0]


def test_truncation_bound_guards(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    c_v = 1.0
    with pytest.raises(ValueError):
        truncation_bound(1, 5, models, c_v, "eps9", "y_I", tab)
    with pytest.raises(ValueError):
        truncation_bound(1, 5, models, c_v, "eps1", "y_C", tab)
    with pytest.raises(ValueError):
        truncation_bound(1, 0, models, c_v, "eps1", "y_I", tab)
    with pytest.raises(ValueError):
        truncation_bound(6, 5, models, c_v, "eps1", "y_I", tab)  # needs S^28


def test_measured_errors_need_full_cube(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    base = simulate(models, corr, SimGrid.regular(2, 2.0, 1), 2000, 1, "base")
    with pytest.raises(ValueError):
        measured_errors(base, models, vm, 1, 5, "1")


# ---------------------------------------------------------------------------
# normality diagnostics

def test_gaussian_distance_null_calibration(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    # self test: an exactly normal sample should sit in the null band
    rng = np.random.default_rng(0)
    from wwrfva.models import cir_terms
    i = 40
    sd = math.sqrt(cir_terms(models.credit["I"], 0.0, float(full.dates[i])).var_Y)
    import dataclasses
    fake = dataclasses.replace(full)
    fake.Y_I = full.Y_I.copy()
    fake.Y_I[i] = rng.normal(0.0, sd, full.n_paths)
    cvm_null, w_null = gaussian_distance(fake, "Y_I", i, models)
    assert cvm_null < 0.5  # 95% null quantile is ~0.46
    # the real CIR-integral sample is close to normal too at this date,
    # but detectably less so than the exact draw
    cvm_real, w_real = gaussian_distance(full, "Y_I", i, models)
    assert w_real < 0.2 * sd  # close in Wasserstein terms
    # doubling the scale must blow the distance up
    fake.Y_I[i] = rng.normal(0.0, 2.0 * sd, full.n_paths)
    cvm_far, w_far = gaussian_distance(fake, "Y_I", i, models)
    assert cvm_far > 10.0 * max(cvm_null, 1e-6)
    assert w_far > 5.0 * w_null


def test_gaussian_distance_guards(rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    with pytest.raises(ValueError):
        gaussian_distance(full, "Y_I", 0, models)
    with pytest.raises(ValueError):
        gaussian_distance(full, "y_I", 5, models)


# ---------------------------------------------------------------------------
# report assembly

def test_bound_report_and_csv(tmp_path, rig):
    inputs, models, corr, full, vm, tab, coeffs, bm = rig
    s = inputs.portfolio.single_swap
    rows = bound_report(s, models, full, vm, 5, date_indices=[10, 50],
                        orders=(1, 2), tab=tab)
    fams = {(r.family, r.x, r.n) for r in rows if r.date == float(full.dates[10])}
    assert ("eps1", "1", 1) in fams
    assert ("eps2", "y_I", 5) in fams
    assert ("eps3", "y_I", 1) in fams and ("eps3", "y_I", 2) in fams
    assert ("eps3", "1", 5) not in fams  # skipped by construction
    assert ("dist_Y_I", "", 0) in fams and ("dist_Y_C", "", 0) in fams
    # every emitted bound dominates its measured error
    for r in rows:
        if r.measured is not None:
            slack = abs(r.bound) * 1e-12
            assert abs(r.measured) <= r.bound + slack or r.family == "eps1"
            if r.family == "eps1":
                assert r.measured <= r.bound + slack
    path = tmp_path / "bounds.csv"
    write_bounds_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "date,family,x,n,bound,measured_error,cvm,wasserstein"
    assert len(lines) == 1 + len(rows)
