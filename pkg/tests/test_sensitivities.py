import dataclasses

import numpy as np
import pytest

from wwrfva.fva import run_fva
from wwrfva.sensitivities import (BumpSpec, apply_bump, cross_gamma,
                                  default_size, fd_sensitivity, parse_bump,
                                  write_sensi_csv)

from conftest import small_settings

TINY = dict(n_paths=3000, dates_per_year=2, substeps=2)


@pytest.fixture()
def tiny41(b41):
    inputs, settings = b41
    return inputs, small_settings(settings, method="approx_generic", **TINY)


# ---------------------------------------------------------------------------
# parsing and defaults

def test_parse_explicit(b41):
    inputs, _ = b41
    b = parse_bump("ir_parallel:EUR:0.0005", inputs)
    assert b.target == "ir_parallel" and b.qualifier == "EUR"
    assert b.size == pytest.approx(0.0005)
    assert b.scheme == "central"


def test_parse_default_size(b41):
    inputs, _ = b41
    b = parse_bump("credit_parallel:I", inputs)
    assert b.size == pytest.approx(1e-4)
    assert b.qualifier == "I"


def test_parse_shorthand_size_defaults_qualifier(b41):
    inputs, _ = b41
    b = parse_bump("ir_parallel:0.001", inputs)
    assert b.qualifier == "EUR"  # domestic by default
    assert b.size == pytest.approx(0.001)
    c = parse_bump("sigma_lambda:0.005", inputs)
    assert c.qualifier == "C"


def test_parse_correlation_pair(b41):
    inputs, _ = b41
    b = parse_bump("correlation:r_EUR/lambda_I:0.02", inputs)
    assert b.qualifier == "r_EUR:lambda_I"
    assert b.size == pytest.approx(0.02)
    d = parse_bump("correlation:r_EUR/lambda_C", inputs)
    assert d.size == pytest.approx(0.01)


def test_parse_pillar(b41):
    inputs, _ = b41
    b = parse_bump("ir_pillar:EUR@2", inputs)
    assert b.pillar == 2 and b.qualifier == "EUR"


def test_parse_relative_vol_defaults(b42):
    inputs, _ = b42
    assert default_size("sigma_fx", "USD", inputs) == pytest.approx(0.015)
    assert default_size("fx_spot", "GBP", inputs) == pytest.approx(
        0.01 * 1.15069)


def test_invalid_bumps(b41):
    inputs, _ = b41
    with pytest.raises(ValueError):
        parse_bump("nonsense:EUR", inputs)
    with pytest.raises(ValueError):
        BumpSpec(target="ir_parallel", qualifier="EUR", size=-1.0)
    with pytest.raises(ValueError):
        BumpSpec(target="ir_pillar", qualifier="EUR", size=1e-4)  # no pillar
    with pytest.raises(ValueError):
        BumpSpec(target="ir_parallel", qualifier="EUR", size=1e-4,
                 scheme="sideways")


# ---------------------------------------------------------------------------
# applying bumps

def test_ir_parallel_bump_moves_curve(b41):
    inputs, _ = b41
    b = BumpSpec(target="ir_parallel", qualifier="EUR", size=1e-4)
    up = apply_bump(inputs, b, +1.0)
    base = inputs.market.rate_curve("EUR")
    bumped = up.market.rate_curve("EUR")
    for t in (1.0, 7.0, 30.0):
        assert bumped.zero_rate(t) == pytest.approx(base.zero_rate(t) + 1e-4,
                                                    rel=1e-12)
    # original inputs untouched
    assert inputs.market.rate_curve("EUR").zero_rate(7.0) == \
        pytest.approx(base.zero_rate(7.0))


def test_ir_pillar_bump_is_local(b41):
    inputs, _ = b41
    b = BumpSpec(target="ir_pillar", qualifier="EUR", size=1e-4, pillar=2)
    up = apply_bump(inputs, b, +1.0)
    base = inputs.market.rate_curve("EUR")
    bumped = up.market.rate_curve("EUR")
    assert bumped.zero_rates[2] == pytest.approx(base.zero_rates[2] + 1e-4)
    assert bumped.zero_rates[0] == base.zero_rates[0]
    assert bumped.zero_rates[-1] == base.zero_rates[-1]


def test_credit_and_param_bumps(b41):
    inputs, _ = b41
    up = apply_bump(inputs, BumpSpec(target="credit_parallel", qualifier="C",
                                     size=1e-4), +1.0)
    assert up.market.credit_curve("C").zero_rate(5.0) == pytest.approx(
        inputs.market.credit_curve("C").zero_rate(5.0) + 1e-4, rel=1e-12)
    dn = apply_bump(inputs, BumpSpec(target="sigma_r", qualifier="EUR",
                                     size=1e-4), -1.0)
    assert dn.rate_params["EUR"]["sigma"] == pytest.approx(0.00284 - 1e-4)


def test_correlation_bump_and_range_check(b41):
    inputs, _ = b41
    b = BumpSpec(target="correlation", qualifier="lambda_I:r_EUR", size=0.01)
    up = apply_bump(inputs, b, +1.0)
    # flipped key is matched against the stored orientation
    assert up.correlations["r_EUR:lambda_I"] == pytest.approx(-0.34)
    big = BumpSpec(target="correlation", qualifier="r_EUR:lambda_C", size=0.6)
    with pytest.raises(ValueError):
        apply_bump(inputs, big, -1.0)  # -0.5 - 0.6 out of range


def test_sigma_lambda_bump_can_break_feller(b41):
    inputs, settings = b41
    # institution entity: 2 a theta = 0.001539; sigma jumping to 0.08 breaks it
    b = BumpSpec(target="sigma_lambda", qualifier="I", size=0.06)
    bumped = apply_bump(inputs, b, +1.0)
    from wwrfva.fva import build_model_set
    with pytest.raises(ValueError):
        build_model_set(bumped)


# ---------------------------------------------------------------------------
# finite differences

def test_ir_delta_sign_receiver(tiny41):
    inputs, settings = tiny41
    row = fd_sensitivity(inputs, settings,
                         BumpSpec(target="ir_parallel", qualifier="EUR",
                                  size=1e-4))
    # receiver swap: rates up -> value and exposure down -> FVA down
    assert row.d_fva_total < 0.0
    assert row.d_fva_total == row.d_fva_indep + row.d_fva_wwr  # exact split


def test_forward_vs_central_consistent(tiny41):
    inputs, settings = tiny41
    bc = BumpSpec(target="sigma_r", qualifier="EUR", size=0.000284)
    bf = dataclasses.replace(bc, scheme="forward")
    central = fd_sensitivity(inputs, settings, bc)
    forward = fd_sensitivity(inputs, settings, bf)
    assert forward.scheme == "forward"
    assert forward.d_fva_total == pytest.approx(central.d_fva_total, rel=0.2)


def test_unrelated_bump_has_no_effect(b42):
    inputs, settings = b42
    settings = small_settings(settings, **TINY)
    # bump a correlation between factors that never meet in this portfolio
    b = BumpSpec(target="correlation", qualifier="lambda_I:fx_USD", size=0.01)
    base = run_fva(inputs, settings)
    up = run_fva(apply_bump(inputs, b, +1.0), settings)
    # approx method conditions on the domestic rate factor only; this
    # correlation enters neither the base cube nor the coefficients
    assert up.fva_indep == pytest.approx(base.fva_indep, rel=1e-12)
    assert up.fva_wwr == pytest.approx(base.fva_wwr, rel=1e-12)


def test_cross_gamma_symmetry(tiny41):
    inputs, settings = tiny41
    a = BumpSpec(target="ir_parallel", qualifier="EUR", size=1e-4)
    b = BumpSpec(target="credit_parallel", qualifier="C", size=1e-4)
    ab = cross_gamma(inputs, settings, a, b)
    ba = cross_gamma(inputs, settings, b, a)
    assert ab["d2_fva_total"] == pytest.approx(ba["d2_fva_total"], rel=1e-9)
    assert ab["d2_fva_total"] == pytest.approx(
        ab["d2_fva_indep"] + ab["d2_fva_wwr"], rel=1e-12)


def test_sensi_csv(tmp_path, tiny41):
    inputs, settings = tiny41
    row = fd_sensitivity(inputs, settings,
                         BumpSpec(target="credit_parallel", qualifier="I",
                                  size=1e-4))
    path = tmp_path / "sensi.csv"
    write_sensi_csv([row], path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("target,size,scheme")
    assert len(lines) == 2
    got = lines[1].split(",")
    assert got[0] == "credit_parallel:I"
    assert float(got[3]) + float(got[4]) == pytest.approx(float(got[5]))
