"""Regenerate the YAML fixtures shipped under fixtures/.

Rate curves are synthetic (gently sloped). Credit curves are written as
the survival curves implied by the intensity-model parameters of each
fixture, so the deterministic shift of the fitted intensity is ~0 and
closed-form checks are as clean as possible.
"""

import os
import sys

import yaml

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from wwrfva.curves import Curve
from wwrfva.models import CirppParams, _cir_a, _cir_b  # noqa: E402

PILLARS = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0]
RATE_CURVES = {
    "EUR": [0.004, 0.005, 0.007, 0.009, 0.011, 0.012],
    "USD": [0.010, 0.012, 0.015, 0.018, 0.020, 0.021],
    "GBP": [0.007, 0.0085, 0.011, 0.0135, 0.0155, 0.0165],
}

CREDIT_PARAMS = {
    # label -> (x0, a, theta, sigma)
    "I_base": (0.0016939, 0.05, 0.015390, 0.02),
    "C_single": (0.0063774, 0.2, 0.035447, 0.08),
    "C_portfolio": (0.0098774, 0.05, 0.041033, 0.02),
    "I_stressed": (0.00052392, 0.15, 0.012475, 0.04),
    "C_stressed": (0.0063774, 0.2, 0.035447, 0.0801),
}


def implied_credit_zero_rates(x0, a, theta, sigma):
    dummy = Curve(label="flat", times=(1.0,), zero_rates=(0.01,))
    p = CirppParams(x0=x0, a=a, theta=theta, sigma=sigma, lgd=0.6, curve=dummy)
    return [float((x0 * _cir_b(p, t) - _cir_a(p, t)) / t) for t in PILLARS]


def curve_entry(label, rates):
    return {"label": label, "times": PILLARS,
            "zero_rates": [round(r, 10) for r in rates]}


def market_doc(currencies, credit_labels, fx_spots=None):
    doc = {
        "domestic": "EUR",
        "curves": [curve_entry(c, RATE_CURVES[c]) for c in currencies],
        "credit_curves": [
            curve_entry(out_label, implied_credit_zero_rates(*CREDIT_PARAMS[key]))
            for out_label, key in credit_labels.items()],
    }
    if fx_spots:
        doc["fx_spots"] = fx_spots
    return doc


def dump(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    print("wrote", path)


def main():
    out = os.path.join(os.path.dirname(__file__), "..", "fixtures")
    os.makedirs(out, exist_ok=True)

    dump(os.path.join(out, "market_single_swap.yaml"),
         market_doc(["EUR"], {"I": "I_base", "C": "C_single"}))
    dump(os.path.join(out, "market_portfolio.yaml"),
         market_doc(["EUR", "USD", "GBP"],
                    {"I": "I_base", "C": "C_portfolio"},
                    fx_spots={"USD": 0.91802, "GBP": 1.15069}))
    dump(os.path.join(out, "market_portfolio_stressed.yaml"),
         market_doc(["EUR", "USD", "GBP"],
                    {"I": "I_stressed", "C": "C_stressed"},
                    fx_spots={"USD": 0.91802, "GBP": 1.15069}))

    dump(os.path.join(out, "portfolio_single_swap.yaml"), {
        "instruments": [{
            "type": "swap", "direction": "receiver", "currency": "EUR",
            "notional": 10000.0, "fixed_rate": 0.013,
            "expiry": 1.0, "maturity": 30.0, "frequency": 1}]})

    swaps = []
    for ccy, k1, k10 in (("EUR", 0.013, 0.013),
                         ("USD", 0.021, 0.021),
                         ("GBP", 0.017, 0.017)):
        for expiry, rate in ((1.0, k1), (10.0, k10)):
            swaps.append({"type": "swap", "direction": "receiver",
                          "currency": ccy, "notional": 10000.0,
                          "fixed_rate": rate, "expiry": expiry,
                          "maturity": 30.0, "frequency": 1})
    dump(os.path.join(out, "portfolio_swaps.yaml"), {"instruments": swaps})


if __name__ == "__main__":
    main()
