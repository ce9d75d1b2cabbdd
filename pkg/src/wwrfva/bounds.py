"""Error diagnostics for the Gaussian WWR approximation.

Three layers:

* a product-level second-moment bound C_V on E[((V)+)^2] for a single
  swap, assembled in closed form from the value-function weights;
* truncation bounds on the tail of each Taylor series that the
  approximation drops, per error family, compared against the same
  errors measured directly on the jointly simulated paths;
* distribution diagnostics quantifying how far the integrated credit
  drivers are from the matched normal (the approximation treats them as
  exact normals).

Higher moments of the credit drivers have no closed form; they are
estimated once per run from a dedicated jointly simulated cube and
cached in a CreditMomentTable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .exposure import WwrCoeffs, normal_moments
from .instruments import Swap, swap_weights
from .mc import ScenarioCube
from .models import ModelSet, cir_terms, hw_terms

# Tail probability defining the clipped domain on which the exponential
# envelope of the Taylor tail is evaluated; the clipped mass is reported.
TAIL_CLIP = 1e-4

FAMILIES = ("eps1", "eps2", "eps3")
X_CHOICES = ("1", "y_I")


# ---------------------------------------------------------------------------
# product-level second-moment bound

def swap_cv_bound(s: Swap, models: ModelSet, t: float, u: float) -> float:
    """Closed-form upper bound on E[((V(u))+)^2] for a single swap.

    The square of the value function is expanded; the pure cross terms
    are kept exactly and the squared sum over live payment dates is
    bounded by Cauchy-Schwarz, leaving only lognormal expectations of
    the zero-mean rate driver.
    """
    rp = models.rates[s.currency]
    sw = swap_weights(s, rp, t, u)
    var = hw_terms(rp, t, u).var_y
    n_live = len(sw.wbar)
    const = sw.const
    sq = (const * const
          + 2.0 * const * float(np.sum(sw.wbar * np.exp(0.5 * sw.B ** 2 * var)))
          + n_live * float(np.sum(sw.wbar ** 2 * np.exp(2.0 * sw.B ** 2 * var))))
    return s.notional * s.notional * sq


# ---------------------------------------------------------------------------
# empirical credit-driver moments

@dataclass
class CreditMomentTable:
    """Per-date empirical moments of the integrated credit drivers.

    S denotes the sum of the two integrated intensity drivers. All
    drivers are the zero-mean stochastic parts. `q_abs_s` is the upper
    tail quantile of |S| at probability TAIL_CLIP used for the
    exponential envelope constant.
    """

    dates: np.ndarray
    max_order: int
    n_paths: int
    Y_I: np.ndarray        # [order, date] E[Y_I^k]
    Y_C: np.ndarray        # [order, date]
    YI_yI: np.ndarray      # [order, date] E[Y_I^k y_I]
    y_I: np.ndarray        # [order up to 8, date] E[y_I^k]
    S: np.ndarray          # [order, date]   E[(Y_I + Y_C)^k]
    S2_x: dict = field(default_factory=dict)   # x -> E[x^2 S^2] per date
    S4_x: dict = field(default_factory=dict)   # x -> E[x^4 S^4] per date
    q_abs_s: np.ndarray = None
    clip_mass: float = TAIL_CLIP


def credit_moment_table(cube: ScenarioCube, max_order: int = 16) -> CreditMomentTable:
    """Estimate all credit moments the bounds need from a full cube."""
    if cube.mode != "full" or cube.y_I is None:
        raise ValueError("credit moments need a full-mode cube")
    if cube.n_paths < 1000:
        raise ValueError("too few paths for stable higher moments")
    n = len(cube.dates)
    k = max_order + 1
    tab = CreditMomentTable(
        dates=cube.dates.copy(), max_order=max_order, n_paths=cube.n_paths,
        Y_I=np.zeros((k, n)), Y_C=np.zeros((k, n)), YI_yI=np.zeros((k, n)),
        y_I=np.zeros((9, n)), S=np.zeros((k, n)), q_abs_s=np.zeros(n))
    tab.S2_x = {"1": np.zeros(n), "y_I": np.zeros(n)}
    tab.S4_x = {"1": np.zeros(n), "y_I": np.zeros(n)}
    for i in range(n):
        yi, YI, YC = cube.y_I[i], cube.Y_I[i], cube.Y_C[i]
        s = YI + YC
        pI = np.ones_like(YI)
        pC = np.ones_like(YC)
        pS = np.ones_like(s)
        for j in range(k):
            tab.Y_I[j, i] = pI.mean()
            tab.Y_C[j, i] = pC.mean()
            tab.S[j, i] = pS.mean()
            tab.YI_yI[j, i] = (pI * yi).mean()
            if j <= 8:
                tab.y_I[j, i] = (yi ** j).mean() if j else 1.0
            pI = pI * YI
            pC = pC * YC
            pS = pS * s
        s2 = s * s
        yi2 = yi * yi
        tab.S2_x["1"][i] = s2.mean()
        tab.S4_x["1"][i] = (s2 * s2).mean()
        tab.S2_x["y_I"][i] = (yi2 * s2).mean()
        tab.S4_x["y_I"][i] = (yi2 * yi2 * s2 * s2).mean()
        tab.q_abs_s[i] = np.quantile(np.abs(s), 1.0 - TAIL_CLIP) if i else 0.0
    return tab


# ---------------------------------------------------------------------------
# the explicit constants of the closed-form bound

def c1_const(m: int, x: str, var_Yr: float, tab: CreditMomentTable,
             i: int) -> float:
    """Upper bound on E[e^{-m Y_r} x^m] (equality at x = 1)."""
    e_small = math.exp(0.5 * m * m * var_Yr)
    if x == "1":
        return e_small
    if 2 * m > 8:
        raise ValueError("y_I moments available up to order 8 only")
    ex_m = tab.y_I[m, i]
    ex_2m = tab.y_I[2 * m, i]
    spread = math.sqrt(max(ex_2m - ex_m * ex_m, 0.0))
    big = math.sqrt(max(math.exp(2.0 * m * m * var_Yr) - e_small * e_small, 0.0))
    return big * spread + e_small * ex_m


def c2_const(m: int, x: str, tab: CreditMomentTable, i: int) -> float:
    """Binomial cross-moment E[(Y_I + Y_C)^m x] from marginal moments."""
    if m > tab.max_order:
        raise ValueError(f"credit moments available up to order {tab.max_order}")
    left = tab.YI_yI if x == "y_I" else tab.Y_I
    total = 0.0
    for j in range(m + 1):
        total += math.comb(m, j) * left[m - j, i] * tab.Y_C[j, i]
    return total


def c3_const(x: str, var_Yr: float, tab: CreditMomentTable, i: int) -> float:
    c2_8 = c2_const(8, "1", tab, i)
    c2_4 = c2_const(4, "1", tab, i)
    c1_4 = c1_const(4, x, var_Yr, tab, i)
    c1_2 = c1_const(2, x, var_Yr, tab, i)
    inner = (math.sqrt(max(c2_8 - c2_4 * c2_4, 0.0))
             * math.sqrt(2.0 * (c1_4 + c1_2 * c1_2))
             + c2_4 * c1_2)
    return math.sqrt(max(inner, 0.0))


def c4_const(x: str, tab: CreditMomentTable, i: int, start: int = 2,
             rel_tol: float = 1e-12, max_terms: int = 50) -> float:
    """Alternating tail series of the survival expansion beyond `start`-1."""
    total = 0.0
    scale = 0.0
    for m in range(start, min(tab.max_order, max_terms) + 1):
        term = ((-1.0) ** m / math.factorial(m)) * c2_const(m, x, tab, i)
        total += term
        scale = max(scale, abs(term))
        # alternating, factorially damped series: the remainder is of the
        # order of the first dropped term
        if m > start and abs(term) <= rel_tol * max(scale, 1e-300):
            return total
    if abs(term) > 1e-8 * max(scale, 1e-300):
        raise ValueError("survival tail series did not converge; "
                         "increase the credit moment order")
    return total


def tail_envelope_constant(q_abs: float) -> float:
    """Constant C with |tail_{n+1}(z)| <= C z^{n+1}/(n+1)! on |z| <= q."""
    return max(1.0, math.exp(q_abs))


def explicit_e1_bound(models: ModelSet, coeffs: WwrCoeffs, c_v: float,
                      disc_epe: float, tab: CreditMomentTable, i: int,
                      x: str) -> float:
    """Closed-form upper bound on the survival-expansion error at one date.

    First piece bounds the covariance-like term through the product
    bound and the moment constants; second piece is the exact mean term
    of the expansion tail.
    """
    var_Yr = hw_terms(models.rates[models.domestic], 0.0, tab.dates[i]).var_Y
    c_t2 = tail_envelope_constant(tab.q_abs_s[i])
    first = coeffs.H_rIC * math.sqrt(c_v) * c_t2 * c3_const(x, var_Yr, tab, i) / 2.0
    second = coeffs.H_IC * disc_epe * c4_const(x, tab, i)
    return first - second


# ---------------------------------------------------------------------------
# generic truncation bounds per error family

def _gauss_even_moment(variance: float, order: int) -> float:
    """E[Z^order] for Z ~ N(0, variance), order even."""
    return float(normal_moments(variance, order)[order])


def truncation_bound(n: int, i: int, models: ModelSet, c_v: float,
                     family: str, x: str, tab: CreditMomentTable) -> float:
    """Bound on one dropped Taylor tail: sqrt(C_V) C_T/(n+1)! sqrt(E[Y^{2(n+1)} xbar^2]).

    The cross moment is relaxed into marginal moments via the
    correlation inequality. Family selects which series was truncated:
    eps1 the survival expansion (credit driver sum, empirical moments),
    eps2/eps3 the discounting expansion (rate driver, normal moments).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if x not in X_CHOICES:
        raise ValueError(f"x must be one of {X_CHOICES}")
    if n < 0 or i < 1:
        raise ValueError("need n >= 0 and an interior date")
    u = float(tab.dates[i])
    rp = models.rates[models.domestic]
    var_Yr = hw_terms(rp, 0.0, u).var_Y
    h_ric = _h_ric(models, u)

    if family == "eps1":
        # credit-sum tail against xbar = e^{-Y_r} x
        m2, m4 = 2 * (n + 1), 4 * (n + 1)
        if m4 > tab.max_order:
            raise ValueError("credit moment order too low for this n")
        ey2 = tab.S[m2, i]
        ey4 = tab.S[m4, i]
        c1_2 = c1_const(2, x, var_Yr, tab, i)
        c1_4 = c1_const(4, x, var_Yr, tab, i)
        xbar_spread = math.sqrt(2.0 * (c1_4 + c1_2 * c1_2))
        cross = (math.sqrt(max(ey4 - ey2 * ey2, 0.0)) * xbar_spread
                 + ey2 * c1_2)
        c_t = tail_envelope_constant(tab.q_abs_s[i])
    else:
        # rate tail; xbar = x (-S) for eps2, x for eps3, with plain moments
        m2, m4 = 2 * (n + 1), 4 * (n + 1)
        ey2 = _gauss_even_moment(var_Yr, m2)
        ey4 = _gauss_even_moment(var_Yr, m4)
        if family == "eps2":
            ex2 = tab.S2_x[x][i]
            ex4 = tab.S4_x[x][i]
        else:
            if x == "1":
                ex2 = ex4 = 1.0
            else:
                ex2 = tab.y_I[2, i]
                ex4 = tab.y_I[4, i]
        cross = (math.sqrt(max(ey4 - ey2 * ey2, 0.0))
                 * math.sqrt(max(ex4 - ex2 * ex2, 0.0))
                 + ey2 * ex2)
        q = stats.norm.ppf(1.0 - 0.5 * TAIL_CLIP) * math.sqrt(var_Yr)
        c_t = tail_envelope_constant(q)

    return (h_ric * math.sqrt(max(c_v, 0.0)) * c_t
            / math.factorial(n + 1) * math.sqrt(max(cross, 0.0)))


def _h_ric(models: ModelSet, u: float) -> float:
    h = hw_terms(models.rates[models.domestic], 0.0, u).H
    for ent in ("I", "C"):
        h *= cir_terms(models.credit[ent], 0.0, u).H
    return h


def _h_ic(models: ModelSet, u: float) -> float:
    h = 1.0
    for ent in ("I", "C"):
        h *= cir_terms(models.credit[ent], 0.0, u).H
    return h


# ---------------------------------------------------------------------------
# directly measured errors (full cube)

def _tail_terms(z: np.ndarray, start: int) -> np.ndarray:
    """exp(-z) minus its Taylor polynomial of degree start-1."""
    out = np.exp(-z)
    term = np.ones_like(z)
    for j in range(start):
        out -= term
        term = term * (-z) / (j + 1)
    return out


def measured_errors(cube: ScenarioCube, models: ModelSet, value_mat: np.ndarray,
                    i: int, n_r: int, x: str) -> dict[str, float]:
    """Direct estimates of the three dropped tails at one date.

    eps1 is the covariance of the discounted positive exposure with the
    survival-expansion tail; eps2/eps3 are the rate-expansion tails
    against the plain positive exposure.
    """
    if cube.mode != "full" or cube.y_I is None:
        raise ValueError("measured errors need a full-mode cube")
    u = float(cube.dates[i])
    pos = np.maximum(value_mat[i], 0.0)
    h = cube.pathwise_discount(i) * pos
    s = cube.Y_I[i] + cube.Y_C[i]
    xv = cube.y_I[i] if x == "y_I" else 1.0
    t2 = _tail_terms(s, 2) * xv
    e1 = _h_ic(models, u) * (np.mean(h * t2) - h.mean() * np.mean(t2))
    yr = cube.Y_r[cube.domestic][i]
    tr = _tail_terms(yr, n_r + 1)
    h_ric = _h_ric(models, u)
    e2 = h_ric * np.mean(tr * xv * (-s) * pos)
    e3 = h_ric * np.mean(tr * xv * pos)
    return {"eps1": float(e1), "eps2": float(e2), "eps3": float(e3)}


# ---------------------------------------------------------------------------
# distribution diagnostics

def gaussian_distance(cube: ScenarioCube, factor: str, i: int,
                      models: ModelSet) -> tuple[float, float]:
    """(Cramer-von Mises statistic, 1-Wasserstein distance) of an
    integrated credit driver against the matched centered normal."""
    if cube.mode != "full" or cube.Y_I is None:
        raise ValueError("distance diagnostics need a full-mode cube")
    if cube.n_paths < 1000:
        raise ValueError("too few paths for a stable distance estimate")
    if i < 1:
        raise ValueError("date 0 is degenerate")
    if factor == "Y_I":
        sample = cube.Y_I[i]
        ent = "I"
    elif factor == "Y_C":
        sample = cube.Y_C[i]
        ent = "C"
    else:
        raise ValueError("factor must be Y_I or Y_C")
    var = cir_terms(models.credit[ent], 0.0, float(cube.dates[i])).var_Y
    sd = math.sqrt(var)
    res = stats.cramervonmises(sample, "norm", args=(0.0, sd))
    srt = np.sort(sample)
    grid = stats.norm.ppf((np.arange(len(srt)) + 0.5) / len(srt), scale=sd)
    w1 = float(np.mean(np.abs(srt - grid)))
    return float(res.statistic), w1


# ---------------------------------------------------------------------------
# report assembly

@dataclass
class BoundRow:
    date: float
    family: str
    x: str
    n: int
    bound: float
    measured: Optional[float] = None
    cvm: Optional[float] = None
    wasserstein: Optional[float] = None


def bound_report(s: Swap, models: ModelSet, cube_full: ScenarioCube,
                 value_mat: np.ndarray, n_r: int,
                 date_indices: Optional[list[int]] = None,
                 orders: tuple[int, ...] = (1, 2, 3),
                 tab: Optional[CreditMomentTable] = None) -> list[BoundRow]:
    """Per-date, per-family truncation bounds with their measured errors,
    plus the normality distances of both credit drivers."""
    if tab is None:
        tab = credit_moment_table(cube_full)
    if date_indices is None:
        date_indices = list(range(1, len(cube_full.dates)))
    rows: list[BoundRow] = []
    for i in date_indices:
        u = float(cube_full.dates[i])
        c_v = swap_cv_bound(s, models, 0.0, u)
        meas_1 = measured_errors(cube_full, models, value_mat, i, n_r, "1")
        meas_y = measured_errors(cube_full, models, value_mat, i, n_r, "y_I")
        for x, meas in (("1", meas_1), ("y_I", meas_y)):
            for fam in FAMILIES:
                if fam == "eps3" and x == "1":
                    continue
                n_eff = 1 if fam == "eps1" else n_r
                rows.append(BoundRow(
                    date=u, family=fam, x=x, n=n_eff,
                    bound=truncation_bound(n_eff, i, models, c_v, fam, x, tab),
                    measured=meas[fam]))
        for fam_extra in orders:
            rows.append(BoundRow(
                date=u, family="eps3", x="y_I", n=fam_extra,
                bound=truncation_bound(fam_extra, i, models, c_v, "eps3",
                                       "y_I", tab)))
        cvm_i, w_i = gaussian_distance(cube_full, "Y_I", i, models)
        cvm_c, w_c = gaussian_distance(cube_full, "Y_C", i, models)
        rows.append(BoundRow(date=u, family="dist_Y_I", x="", n=0, bound=0.0,
                             cvm=cvm_i, wasserstein=w_i))
        rows.append(BoundRow(date=u, family="dist_Y_C", x="", n=0, bound=0.0,
                             cvm=cvm_c, wasserstein=w_c))
    return rows


def write_bounds_csv(rows: list[BoundRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,family,x,n,bound,measured_error,cvm,wasserstein\n")
        for r in rows:
            def f(v):
                return "" if v is None else repr(float(v))
            fh.write(f"{r.date!r},{r.family},{r.x},{r.n},{f(r.bound)},"
                     f"{f(r.measured)},{f(r.cvm)},{f(r.wasserstein)}\n")
