"""Closed-form affine quantities for the rate, credit and FX processes.

Every process is split as state = x + b with a deterministic shift b that
fits the market curve, and x decomposed into a deterministic mean plus a
zero-mean driver:

    x(u) = mu(t,u) + y(t,u),      int_t^u x dv = M(t,u) + Y(t,u).

The functions below return the means, variances, the shift integrals
int_t^u b dv (via market-curve ratios, never via differentiated forwards)
and the deterministic discount-like factor H = exp(-M - int_b), so that
exp(-int state dv) = H * exp(-Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import Curve


# ---------------------------------------------------------------------------
# numerically stable primitives (the mean reversion can be as small as 1e-5,
# so all (1 - exp(-a*tau))/a style ratios get a series branch)

def bfac(a: float, tau):
    """(1 - exp(-a*tau)) / a, stable for a -> 0 (limit: tau)."""
    tau = np.asarray(tau, dtype=float)
    x = a * tau
    small = np.abs(x) < 1e-4
    x_safe = np.where(small, 1.0, x)
    direct = -np.expm1(-x_safe) / x_safe * tau
    series = tau * (1.0 - x / 2.0 + x * x / 6.0 - x**3 / 24.0 + x**4 / 120.0)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def int_bfac(a: float, tau):
    """integral_0^tau B(s) ds = (tau - B(tau))/a, stable for a -> 0 (limit: tau^2/2)."""
    tau = np.asarray(tau, dtype=float)
    x = a * tau
    small = np.abs(x) < 1e-3
    a_safe = a if a != 0.0 else 1.0
    direct = (tau - bfac(a_safe, tau)) / a_safe
    series = tau * tau * (0.5 - x / 6.0 + x * x / 24.0 - x**3 / 120.0 + x**4 / 720.0)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def _phi(x):
    """x - 2(1 - e^-x) + (1 - e^-2x)/2, the kernel of the integrated OU variance."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.01
    direct = x + 2.0 * np.expm1(-x) - 0.5 * np.expm1(-2.0 * x)
    series = (x**3 / 3.0 - x**4 / 4.0 + 7.0 * x**5 / 60.0 - x**6 / 24.0
              + 31.0 * x**7 / 2520.0 - x**8 / 320.0)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def hw_a(a: float, sigma: float, tau):
    """A(t,u) of the Hull-White ZCB: sigma^2/(2a^3) * phi(a*tau), stable for a -> 0."""
    tau = np.asarray(tau, dtype=float)
    x = a * tau
    small = np.abs(x) < 0.01
    if np.all(small):
        # phi(x)/a^3 = tau^3 * (series in x) keeps precision when a ~ 0
        series = tau**3 * (1.0 / 3.0 - x / 4.0 + 7.0 * x * x / 60.0 - x**3 / 24.0
                           + 31.0 * x**4 / 2520.0 - x**5 / 320.0)
        out = 0.5 * sigma * sigma * series
    else:
        a_safe = a if a != 0.0 else 1.0
        direct = 0.5 * sigma * sigma * _phi(x) / a_safe**3
        series = 0.5 * sigma * sigma * tau**3 * (
            1.0 / 3.0 - x / 4.0 + 7.0 * x * x / 60.0 - x**3 / 24.0
            + 31.0 * x**4 / 2520.0 - x**5 / 320.0)
        out = np.where(small, series, direct)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# parameter records

@dataclass(frozen=True)
class QuantoAdjust:
    """Correlation/vol pair for a foreign rate simulated under the domestic measure."""

    rho_rf_fx: float
    sigma_fx: float

    def __post_init__(self):
        if not -1.0 <= self.rho_rf_fx <= 1.0:
            raise ValueError("quanto correlation must be in [-1, 1]")
        if self.sigma_fx <= 0.0:
            raise ValueError("quanto sigma_fx must be positive")


@dataclass(frozen=True)
class Hw1fParams:
    """Mean-reverting Gaussian short-rate factor fitted to `curve`."""

    x0: float
    a: float
    sigma: float
    curve: Curve
    quanto: Optional[QuantoAdjust] = None

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class CirppParams:
    """Square-root intensity factor plus shift fitted to the survival curve."""

    x0: float
    a: float
    theta: float
    sigma: float
    lgd: float
    curve: Curve

    def __post_init__(self):
        if self.x0 < 0.0:
            raise ValueError("x0 must be nonnegative")
        if self.a <= 0.0 or self.theta <= 0.0 or self.sigma <= 0.0:
            raise ValueError("a, theta, sigma must be positive")
        if not 0.0 < self.lgd <= 1.0:
            raise ValueError("lgd must be in (0, 1]")
        if not feller_check(self):
            raise ValueError(
                f"Feller condition violated: 2*a*theta = {2 * self.a * self.theta:.6g} "
                f"<= sigma^2 = {self.sigma ** 2:.6g}")

    @property
    def h(self) -> float:
        return math.sqrt(self.a * self.a + 2.0 * self.sigma * self.sigma)


def feller_check(p) -> bool:
    """True iff 2*a*theta > sigma^2 (state stays away from zero)."""
    return 2.0 * p.a * p.theta > p.sigma * p.sigma


@dataclass(frozen=True)
class GbmFxParams:
    """Lognormal FX level, domestic units per foreign unit."""

    spot: float
    sigma_fx: float

    def __post_init__(self):
        if self.spot <= 0.0 or self.sigma_fx <= 0.0:
            raise ValueError("spot and sigma_fx must be positive")


@dataclass(frozen=True)
class ModelSet:
    """All calibrated processes of one run, keyed by currency/entity."""

    domestic: str
    rates: dict[str, Hw1fParams]
    fx: dict[str, GbmFxParams]
    credit: dict[str, CirppParams]

    def __post_init__(self):
        if self.domestic not in self.rates:
            raise ValueError("domestic currency has no rate model")
        for ccy in self.fx:
            if ccy not in self.rates:
                raise ValueError(f"fx model for {ccy} without a rate model")

    @property
    def foreign_currencies(self) -> list[str]:
        return [c for c in self.rates if c != self.domestic]


# ---------------------------------------------------------------------------
# term bundles

@dataclass(frozen=True)
class HwTerms:
    B: float
    A: float
    mu: float
    M: float
    var_y: float
    var_Y: float
    int_b: float
    H: float

    @property
    def A_bar(self) -> float:
        """A minus the shift integral; exponent of the fitted ZCB."""
        return self.A - self.int_b


@dataclass(frozen=True)
class CirTerms:
    B: float
    A: float
    mu: float
    M: float
    var_y: float
    var_Y: float
    int_b: float
    H: float
    exp_Yy: float

    @property
    def A_bar(self) -> float:
        return self.A - self.int_b


def _hw_int_b(p: Hw1fParams, t: float, u: float) -> float:
    """integral_t^u b dv from the market-curve ratio (exact curve fit)."""
    a_t = hw_a(p.a, p.sigma, t)
    a_u = hw_a(p.a, p.sigma, u)
    b_t = bfac(p.a, t)
    b_u = bfac(p.a, u)
    return (p.curve.log_discount(t) - p.curve.log_discount(u)
            - a_t + a_u - p.x0 * (b_u - b_t))


def hw_terms(p: Hw1fParams, t: float, u: float, x_t: Optional[float] = None) -> HwTerms:
    """All closed-form quantities of the Gaussian rate factor over (t, u).

    `x_t` defaults to p.x0, which is only correct for t = 0; pass the state
    explicitly when conditioning on a later time.
    """
    if u < t:
        raise ValueError("u must be >= t")
    if x_t is None:
        x_t = p.x0
    tau = u - t
    B = bfac(p.a, tau)
    A = hw_a(p.a, p.sigma, tau)
    mu = x_t * math.exp(-p.a * tau)
    M = x_t * B
    if p.quanto is not None:
        drift = p.quanto.rho_rf_fx * p.sigma * p.quanto.sigma_fx
        mu -= drift * B
        M -= drift * int_bfac(p.a, tau)
    var_y = p.sigma * p.sigma * bfac(2.0 * p.a, tau)
    var_Y = 2.0 * A
    int_b = _hw_int_b(p, t, u)
    H = math.exp(-M - int_b)
    return HwTerms(B=B, A=A, mu=mu, M=M, var_y=var_y, var_Y=var_Y, int_b=int_b, H=H)


def _cir_b(p: CirppParams, tau):
    """CIR ZCB exponent slope, written so exp(h*tau) never overflows."""
    h = p.h
    e = np.exp(-h * np.asarray(tau, dtype=float))
    out = 2.0 * (1.0 - e) / (2.0 * h * e + (p.a + h) * (1.0 - e))
    return float(out) if np.ndim(out) == 0 else out


def _cir_a(p: CirppParams, tau):
    h = p.h
    tau = np.asarray(tau, dtype=float)
    e = np.exp(-h * tau)
    # denominator 2h + (a+h)(e^{h tau} - 1) = e^{h tau} * (2h e^{-h tau} + (a+h)(1 - e^{-h tau}))
    log_den = h * tau + np.log(2.0 * h * e + (p.a + h) * (1.0 - e))
    out = (2.0 * p.a * p.theta / (p.sigma * p.sigma)) * (
        math.log(2.0 * h) + 0.5 * (p.a + h) * tau - log_den)
    return float(out) if np.ndim(out) == 0 else out


def _cir_int_b(p: CirppParams, t: float, u: float) -> float:
    a_t = _cir_a(p, t)
    a_u = _cir_a(p, u)
    b_t = _cir_b(p, t)
    b_u = _cir_b(p, u)
    return (p.curve.log_discount(t) - p.curve.log_discount(u)
            - a_t + a_u - p.x0 * (b_u - b_t))


def cir_terms(p: CirppParams, t: float, u: float, x_t: Optional[float] = None) -> CirTerms:
    """All closed-form quantities of the square-root credit factor over (t, u)."""
    if u < t:
        raise ValueError("u must be >= t")
    if x_t is None:
        x_t = p.x0
    if x_t < 0.0:
        raise ValueError("x_t must be nonnegative")
    tau = u - t
    a, th, sg = p.a, p.theta, p.sigma
    e1 = math.exp(-a * tau)
    e2 = math.exp(-2.0 * a * tau)
    B_lin = bfac(a, tau)
    mu = x_t * e1 + th * (1.0 - e1)
    M = x_t * B_lin + th * a * int_bfac(a, tau)
    var_y = (sg * sg / a) * (1.0 - e1) * (mu - 0.5 * th * (1.0 - e1))
    var_Y = ((sg * sg * x_t / a**3) * (1.0 - 2.0 * a * tau * e1 - e2)
             + (sg * sg * th / a**3) * (a * tau - 3.0 * (1.0 - e1)
                                        + 2.0 * a * tau * e1 + 0.5 * (1.0 - e1) ** 2))
    exp_Yy = ((sg * sg * x_t / (a * a)) * e1 * (a * tau - 1.0 + e1)
              + (sg * sg * th / (a * a)) * (0.5 * (1.0 - e2) - a * tau * e1))
    B = _cir_b(p, tau)
    A = _cir_a(p, tau)
    int_b = _cir_int_b(p, t, u)
    H = math.exp(-M - int_b)
    return CirTerms(B=B, A=A, mu=mu, M=M, var_y=max(var_y, 0.0), var_Y=max(var_Y, 0.0),
                    int_b=int_b, H=H, exp_Yy=exp_Yy)


@dataclass(frozen=True)
class FxTerms:
    mu_fx: float
    var_lnfx: float


def fx_terms(dom: Hw1fParams, fgn: Hw1fParams, fx: GbmFxParams,
             rho_dom_fgn: float, rho_dom_fx: float, rho_fgn_fx: float,
             t: float, u: float) -> FxTerms:
    """Mean and variance of the log FX level at u, conditional on t = 0 data."""
    if u < t:
        raise ValueError("u must be >= t")
    tau = u - t
    dom_terms = hw_terms(dom, t, u)
    fgn_terms = hw_terms(fgn, t, u)
    sx = fx.sigma_fx
    mu_fx = (math.log(fx.spot) + dom_terms.M + dom_terms.int_b
             - fgn_terms.M - fgn_terms.int_b - 0.5 * sx * sx * tau)
    # cov of the two integrated rate drivers, written as a sum of stable
    # int_bfac pieces: (1-e^-as)(1-e^-fs) = (1-e^-as) + (1-e^-fs) - (1-e^-(a+f)s)
    a_d, a_f = dom.a, fgn.a
    int_bb = (a_d * int_bfac(a_d, tau) + a_f * int_bfac(a_f, tau)
              - (a_d + a_f) * int_bfac(a_d + a_f, tau))
    cov_YY = rho_dom_fgn * dom.sigma * fgn.sigma * int_bb / (a_d * a_f) \
        if a_d != 0.0 and a_f != 0.0 else rho_dom_fgn * dom.sigma * fgn.sigma * tau**3 / 3.0
    var = (dom_terms.var_Y + fgn_terms.var_Y + sx * sx * tau
           - 2.0 * cov_YY
           + 2.0 * rho_dom_fx * dom.sigma * sx * int_bfac(a_d, tau)
           - 2.0 * rho_fgn_fx * fgn.sigma * sx * int_bfac(a_f, tau))
    return FxTerms(mu_fx=mu_fx, var_lnfx=max(var, 0.0))


def sigma_ratio(var_x: float, var_y_r: float) -> float:
    """Scaling sqrt(Var[x]/Var[y_r]) mapping any driver onto the rate driver."""
    if var_y_r <= 0.0:
        raise ValueError("reference variance must be positive (u > t required)")
    if var_x < 0.0:
        raise ValueError("var_x must be nonnegative")
    return math.sqrt(var_x / var_y_r)
