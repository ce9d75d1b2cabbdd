"""Instruments and their valuation as functions of the rate drivers.

A swap's value at a monitoring date u is an explicit function of the
zero-mean rate driver y of its currency: V(u; y) = phi * N * (-1_{u>T0}
+ sum_k wbar_k exp(-y B_k)). Both the Monte Carlo benchmark and the
analytic approximation price through this single function, so the two
branches cannot drift apart. The positivity boundary ystar is the
unique root of a monotone auxiliary function (a Jamshidian-style
decomposition), found by bracketed bisection plus Newton polish.

FX forwards are valued exactly on paths from the two reconstructed
zero-coupon bonds and the FX level; their positivity region under the
single-driver projection is a half-line in the domestic rate driver
with a closed-form threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import yaml

from .mc import CorrelationMatrix, ScenarioCube, fx_factor, rate_factor
from .models import Hw1fParams, ModelSet, hw_terms, sigma_ratio


# ---------------------------------------------------------------------------
# instrument records

@dataclass(frozen=True)
class Swap:
    """Fixed-for-float swap; phi=+1 receives fixed, phi=-1 pays fixed."""

    currency: str
    notional: float
    fixed_rate: float
    schedule: tuple[float, ...]  # T_0 (expiry) .. T_m (maturity)
    phi: int = 1

    def __post_init__(self):
        if self.phi not in (-1, 1):
            raise ValueError("phi must be +1 (receiver) or -1 (payer)")
        if len(self.schedule) < 2:
            raise ValueError("schedule needs at least expiry and one payment")
        for i in range(1, len(self.schedule)):
            if self.schedule[i] <= self.schedule[i - 1]:
                raise ValueError("schedule must be strictly increasing")
        if self.notional <= 0.0:
            raise ValueError("notional must be positive")
        if self.fixed_rate < 0.0:
            raise ValueError("fixed_rate must be nonnegative")

    @property
    def expiry(self) -> float:
        return self.schedule[0]

    @property
    def maturity(self) -> float:
        return self.schedule[-1]

    @property
    def accruals(self) -> np.ndarray:
        return np.diff(np.asarray(self.schedule))

    @classmethod
    def regular(cls, currency: str, notional: float, fixed_rate: float,
                expiry: float, maturity: float, frequency: int = 1,
                direction: str = "receiver") -> "Swap":
        n = round((maturity - expiry) * frequency)
        if n < 1 or abs(expiry + n / frequency - maturity) > 1e-9:
            raise ValueError("maturity - expiry must be a whole number of periods")
        sched = tuple(expiry + k / frequency for k in range(n + 1))
        phi = {"receiver": 1, "payer": -1}.get(direction)
        if phi is None:
            raise ValueError("direction must be 'receiver' or 'payer'")
        return cls(currency=currency, notional=notional, fixed_rate=fixed_rate,
                   schedule=sched, phi=phi)


@dataclass(frozen=True)
class FxForward:
    """Buys (phi=+1) or sells (phi=-1) one unit of foreign per unit notional at strike."""

    currency: str  # the foreign currency
    notional: float
    strike: float
    maturity: float
    phi: int = 1

    def __post_init__(self):
        if self.maturity <= 0.0:
            raise ValueError("maturity must be positive")
        if self.strike <= 0.0:
            raise ValueError("strike must be positive")
        if self.notional <= 0.0:
            raise ValueError("notional must be positive")
        if self.phi not in (-1, 1):
            raise ValueError("phi must be +1 (buy foreign) or -1 (sell foreign)")


Instrument = Union[Swap, FxForward]


@dataclass(frozen=True)
class Portfolio:
    instruments: tuple[Instrument, ...]

    def __post_init__(self):
        if not self.instruments:
            raise ValueError("portfolio is empty")

    @property
    def currencies(self) -> set[str]:
        return {inst.currency for inst in self.instruments}

    @property
    def horizon(self) -> float:
        return max(inst.maturity for inst in self.instruments)

    @property
    def single_swap(self) -> Optional[Swap]:
        """The swap, if the portfolio is exactly one swap; else None."""
        if len(self.instruments) == 1 and isinstance(self.instruments[0], Swap):
            return self.instruments[0]
        return None


def load_portfolio(path) -> Portfolio:
    """Read a portfolio file (YAML list under 'instruments')."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "instruments" not in doc:
        raise ValueError(f"portfolio file {path}: expected an 'instruments' list")
    out: list[Instrument] = []
    for entry in doc["instruments"]:
        kind = entry.get("type")
        if kind == "swap":
            out.append(Swap.regular(
                currency=str(entry["currency"]), notional=float(entry["notional"]),
                fixed_rate=float(entry["fixed_rate"]), expiry=float(entry["expiry"]),
                maturity=float(entry["maturity"]),
                frequency=int(entry.get("frequency", 1)),
                direction=str(entry.get("direction", "receiver"))))
        elif kind == "fx_forward":
            out.append(FxForward(
                currency=str(entry["currency"]), notional=float(entry["notional"]),
                strike=float(entry["strike"]), maturity=float(entry["maturity"]),
                phi={"buy": 1, "sell": -1}[str(entry.get("direction", "buy"))]))
        else:
            raise ValueError(f"unknown instrument type {kind!r}")
    return Portfolio(instruments=tuple(out))


# ---------------------------------------------------------------------------
# swap valuation in terms of the rate driver

@dataclass(frozen=True)
class SwapWeights:
    """Deterministic valuation bundle of one swap at one monitoring date."""

    beta: int                 # index of the first live payment date
    const: float              # -1 if u is past expiry, else 0
    w: np.ndarray             # raw weights, live dates only (k >= beta)
    wbar: np.ndarray          # weights with deterministic exponent folded in
    B: np.ndarray             # driver loadings B(u, T_k), live dates only
    pay_times: np.ndarray     # live payment dates


def swap_weights(s: Swap, rp: Hw1fParams, t: float, u: float) -> SwapWeights:
    """Weights of the value function V(u; y) given time-t information."""
    pay = np.asarray(s.schedule)
    m = len(pay) - 1
    if u > pay[-1]:
        raise ValueError(f"monitoring date {u} is past swap maturity {pay[-1]}")
    tau = s.accruals
    w = np.empty(m + 1)
    w[0] = -1.0
    w[1:m] = s.fixed_rate * tau[:-1]
    w[m] = 1.0 + s.fixed_rate * tau[-1]
    # first live index: 0 up to and including expiry, else the next payment date
    beta = int(np.searchsorted(pay, u, side="left")) if u > pay[0] else 0
    const = -1.0 if u > pay[0] else 0.0
    mu = hw_terms(rp, t, u).mu
    live = pay[beta:]
    B = np.empty(len(live))
    A_bar = np.empty(len(live))
    for i, T in enumerate(live):
        terms = hw_terms(rp, u, T)
        B[i] = terms.B
        A_bar[i] = terms.A_bar
    wbar = w[beta:] * np.exp(A_bar - mu * B)
    return SwapWeights(beta=beta, const=const, w=w[beta:], wbar=wbar, B=B,
                       pay_times=live)


def swap_value_y(s: Swap, sw: SwapWeights, y):
    """Swap value at the monitoring date as a function of the rate driver y."""
    y = np.asarray(y, dtype=float)
    expo = np.exp(-np.multiply.outer(y, sw.B))
    val = s.phi * s.notional * (sw.const + expo @ sw.wbar)
    return float(val) if val.ndim == 0 else val


def _d_parts(sw: SwapWeights):
    """Coefficients c_k > 0 and exponents b_k > 0 of the monotone root function.

    The value is zero iff d(y) := sum_k c_k exp(-y b_k) equals 1; d is
    strictly decreasing, so the root (if the sum is nonempty) is unique.
    """
    if sw.const == 0.0:
        # normalize by the (negative) expiry-date term
        c = sw.wbar[1:] / (-sw.wbar[0])
        b = sw.B[1:] - sw.B[0]
    else:
        c = sw.wbar.copy()
        b = sw.B.copy()
    return c, b


def ystar(s: Swap, sw: SwapWeights, sd_y: float) -> float:
    """Positivity boundary: the y with V(u; y) = 0, or +/-inf when one-signed.

    Returns +inf when the value is positive for every y (indicator constant 1
    for a receiver) and -inf when never positive.
    """
    c, b = _d_parts(sw)
    if len(c) == 0 or np.all(c == 0.0):
        # no live cash flows beyond the normalizer: d = 0 < 1 everywhere
        return -math.inf
    if np.any(c < 0.0):
        raise ValueError("negative weights: root function not monotone")

    def log_d(y: float) -> float:
        z = np.log(c[c > 0.0]) - y * b[c > 0.0]
        zmax = z.max()
        return zmax + math.log(np.exp(z - zmax).sum())

    f0 = log_d(0.0)
    lo = hi = 0.0
    flo = fhi = f0
    k = 1.0
    while k <= 64.0:
        lo, hi = -k * sd_y, k * sd_y
        flo, fhi = log_d(lo), log_d(hi)
        if flo >= 0.0 >= fhi:
            break
        k *= 2.0
    else:
        # no sign change in the widest bracket: positivity is constant
        return math.inf if f0 > 0.0 else -math.inf

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if log_d(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-8:
            break
    root = 0.5 * (lo + hi)
    # Newton polish on log d (monotone decreasing, nearly linear)
    for _ in range(3):
        mask = c > 0.0
        e = c[mask] * np.exp(-root * b[mask])
        sd_ = e.sum()
        val = math.log(sd_)
        deriv = -(b[mask] * e).sum() / sd_
        root -= val / deriv
    return root


def positive_indicator(s: Swap, y, ystar_value: float):
    """1 where the swap value is nonnegative, from the boundary alone."""
    y = np.asarray(y, dtype=float)
    below = (y <= ystar_value).astype(float)
    out = (1.0 if s.phi == -1 else 0.0) + s.phi * below
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# FX forward: exact pathwise value and single-driver projection

@dataclass(frozen=True)
class FxForwardTerms:
    """Deterministic bundle of one FX forward at one monitoring date."""

    delta: float              # projected forward FX level
    w1: float                 # coefficient of the foreign-bond leg
    w2: float                 # coefficient of the strike leg
    eta: float                # loading of the domestic rate driver
    B_dom: float              # domestic bond loading B_d(u, T)
    ystar: float              # threshold in the domestic driver (+-inf if constant)
    constant_indicator: Optional[int]  # set when |eta| is degenerate


def fx_forward_terms(fwd: FxForward, models: ModelSet, corr: CorrelationMatrix,
                     t: float, u: float) -> FxForwardTerms:
    if u > fwd.maturity:
        raise ValueError("monitoring date past forward maturity")
    dom = models.domestic
    f = fwd.currency
    rp_d, rp_f = models.rates[dom], models.rates[f]
    td_u = hw_terms(rp_d, t, u)
    tf_u = hw_terms(rp_f, t, u)
    td_T = hw_terms(rp_d, u, fwd.maturity)
    tf_T = hw_terms(rp_f, u, fwd.maturity)
    fx = models.fx[f]
    tau = u - t
    mu_fx = (math.log(fx.spot) + td_u.M + td_u.int_b - tf_u.M - tf_u.int_b
             - 0.5 * fx.sigma_fx ** 2 * tau)
    w1 = math.exp(mu_fx + tf_T.A_bar - tf_u.mu * tf_T.B)
    w2 = fwd.strike * math.exp(td_T.A_bar - td_u.mu * td_T.B)
    delta = w1 / math.exp(td_T.A_bar - td_u.mu * td_T.B)

    if tau <= 0.0:
        # degenerate at the valuation date: value sign is deterministic
        log_m = math.log(fwd.strike / delta)
        return FxForwardTerms(delta=delta, w1=w1, w2=w2, eta=0.0, B_dom=td_T.B,
                              ystar=0.0, constant_indicator=int(log_m <= 0.0))

    sd_yd = math.sqrt(td_u.var_y)
    rho_d_fx = corr.entry(rate_factor(dom), fx_factor(f))
    rho_d_f = corr.entry(rate_factor(dom), rate_factor(f))
    sig_fx_noise = fx.sigma_fx * math.sqrt(tau) / sd_yd
    eta = (rho_d_fx * sig_fx_noise
           - rho_d_f * (sigma_ratio(tf_u.var_Y, td_u.var_y)
                        + tf_T.B * sigma_ratio(tf_u.var_y, td_u.var_y))
           + sigma_ratio(td_u.var_Y, td_u.var_y) + td_T.B)
    log_m = math.log(fwd.strike / delta)
    if abs(eta) < 1e-12:
        return FxForwardTerms(delta=delta, w1=w1, w2=w2, eta=eta, B_dom=td_T.B,
                              ystar=math.inf, constant_indicator=int(log_m <= 0.0))
    return FxForwardTerms(delta=delta, w1=w1, w2=w2, eta=eta, B_dom=td_T.B,
                          ystar=log_m / eta, constant_indicator=None)


def fx_forward_value_projected(terms: FxForwardTerms, y):
    """Value (unit notional, buy direction) under the single-driver projection."""
    y = np.asarray(y, dtype=float)
    out = (terms.w1 * np.exp(-y * (-terms.eta + terms.B_dom))
           - terms.w2 * np.exp(-y * terms.B_dom))
    return float(out) if out.ndim == 0 else out


def fx_forward_positive_indicator(fwd: FxForward, terms: FxForwardTerms, y):
    """1 where the projected forward value (times direction) is nonnegative."""
    y = np.asarray(y, dtype=float)
    if terms.constant_indicator is not None:
        base = np.full(y.shape, float(terms.constant_indicator))
    else:
        ge = (y >= terms.ystar).astype(float)
        sgn = 1.0 if terms.eta > 0.0 else -1.0
        base = sgn * ge + (1.0 if terms.eta < 0.0 else 0.0)
    out = base if fwd.phi == 1 else 1.0 - base
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# pathwise portfolio valuation on a scenario cube

def _swap_values_on_cube(s: Swap, models: ModelSet, cube: ScenarioCube,
                         date_index: int) -> np.ndarray:
    u = cube.dates[date_index]
    if u > s.maturity:
        return np.zeros(cube.n_paths)
    sw = swap_weights(s, models.rates[s.currency], 0.0, u)
    return swap_value_y(s, sw, cube.y_r[s.currency][date_index])


def _fx_forward_values_on_cube(fwd: FxForward, models: ModelSet,
                               cube: ScenarioCube, date_index: int) -> np.ndarray:
    """Exact pathwise value from reconstructed bonds and the FX level (domestic)."""
    u = cube.dates[date_index]
    if u > fwd.maturity:
        return np.zeros(cube.n_paths)
    dom = models.domestic
    f = fwd.currency
    td_u = hw_terms(models.rates[dom], 0.0, u)
    tf_u = hw_terms(models.rates[f], 0.0, u)
    td_T = hw_terms(models.rates[dom], u, fwd.maturity)
    tf_T = hw_terms(models.rates[f], u, fwd.maturity)
    p_d = np.exp(td_T.A_bar - (td_u.mu + cube.y_r[dom][date_index]) * td_T.B)
    p_f = np.exp(tf_T.A_bar - (tf_u.mu + cube.y_r[f][date_index]) * tf_T.B)
    x_u = np.exp(cube.ln_fx[f][date_index])
    return fwd.phi * fwd.notional * (p_f * x_u - p_d * fwd.strike)


def instrument_values_on_cube(inst: Instrument, models: ModelSet,
                              cube: ScenarioCube, date_index: int) -> np.ndarray:
    """Per-path value at one date, converted to the domestic currency."""
    if isinstance(inst, Swap):
        vals = _swap_values_on_cube(inst, models, cube, date_index)
        if inst.currency != models.domestic:
            if inst.currency not in cube.ln_fx:
                raise KeyError(f"cube has no FX slab for {inst.currency}")
            vals = vals * np.exp(cube.ln_fx[inst.currency][date_index])
        return vals
    if isinstance(inst, FxForward):
        return _fx_forward_values_on_cube(inst, models, cube, date_index)
    raise TypeError(f"unknown instrument {type(inst)!r}")


def portfolio_values(p: Portfolio, models: ModelSet, cube: ScenarioCube,
                     date_index: int) -> np.ndarray:
    """Per-path portfolio value at one date, in domestic currency."""
    total = np.zeros(cube.n_paths)
    for inst in p.instruments:
        total += instrument_values_on_cube(inst, models, cube, date_index)
    return total


def portfolio_value(p: Portfolio, models: ModelSet, cube: ScenarioCube,
                    path: int, date_index: int) -> float:
    return float(portfolio_values(p, models, cube, date_index)[path])


def value_matrix(p: Portfolio, models: ModelSet, cube: ScenarioCube) -> np.ndarray:
    """Portfolio values for every (date, path) pair."""
    out = np.empty((len(cube.dates), cube.n_paths))
    for i in range(len(cube.dates)):
        out[i] = portfolio_values(p, models, cube, i)
    return out


def static_portfolio_value(p: Portfolio, models: ModelSet) -> float:
    """Date-0 portfolio value from the curves alone (no simulation)."""
    total = 0.0
    for inst in p.instruments:
        if isinstance(inst, Swap):
            curve = models.rates[inst.currency].curve
            pay = np.asarray(inst.schedule)
            tau = inst.accruals
            v = (-curve.discount(pay[0]) + curve.discount(pay[-1])
                 + inst.fixed_rate * float(np.sum(tau * curve.discount(pay[1:]))))
            v *= inst.phi * inst.notional
            if inst.currency != models.domestic:
                v *= models.fx[inst.currency].spot
            total += v
        elif isinstance(inst, FxForward):
            dom_curve = models.rates[models.domestic].curve
            f_curve = models.rates[inst.currency].curve
            total += inst.phi * inst.notional * (
                f_curve.discount(inst.maturity) * models.fx[inst.currency].spot
                - dom_curve.discount(inst.maturity) * inst.strike)
        else:
            raise TypeError(f"unknown instrument {type(inst)!r}")
    return total
