"""Test statistics and the impact regression.

Welch's unequal-variance t-test, one-way ANOVA, scale-only standardization
and homoskedastic OLS, with two-star significance (5% and 1%, two-tailed).
Critical values come from exact Student-t / F quantiles, switching to the
normal limit above 200 degrees of freedom.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import f as f_dist
from scipy.stats import t as t_dist

NORMAL_CRIT_P05 = 1.959963984540054
NORMAL_CRIT_P01 = 2.5758293035489004
NORMAL_LIMIT_DOF = 200


class Significance(str, Enum):
    NONE = ""
    P05 = "*"
    P01 = "**"


class DegenerateSampleError(ValueError):
    """Sample has no usable variation for the requested statistic."""


class SingularDesignError(ValueError):
    """Regression design matrix is rank deficient."""


@dataclass(frozen=True, slots=True)
class TTestResult:
    t: float
    dof: float
    signif: Significance
    degenerate: bool = False


@dataclass(frozen=True, slots=True)
class AnovaResult:
    f: float
    df_between: int
    df_within: int
    signif: Significance
    degenerate: bool = False


@dataclass(frozen=True, slots=True)
class RegressionResult:
    names: tuple[str, ...]  # intercept first
    coef: tuple[float, ...]
    t_stats: tuple[float, ...]
    signif: tuple[Significance, ...]
    std_errors: tuple[float, ...]
    r_square: float
    n_rows: int


def _t_signif(t: float, dof: float) -> Significance:
    a = abs(t)
    if dof > NORMAL_LIMIT_DOF:
        c05, c01 = NORMAL_CRIT_P05, NORMAL_CRIT_P01
    else:
        c05 = float(t_dist.ppf(0.975, dof))
        c01 = float(t_dist.ppf(0.995, dof))
    if a >= c01:
        return Significance.P01
    if a >= c05:
        return Significance.P05
    return Significance.NONE


def _f_signif(f_value: float, dfb: int, dfw: int) -> Significance:
    c05 = float(f_dist.ppf(0.95, dfb, dfw))
    c01 = float(f_dist.ppf(0.99, dfb, dfw))
    if f_value >= c01:
        return Significance.P01
    if f_value >= c05:
        return Significance.P05
    return Significance.NONE


def welch_t(x, y) -> TTestResult:
    """Two-sample Welch t with Welch-Satterthwaite degrees of freedom.

    Sign convention: positive when mean(x) > mean(y). Two samples with zero
    variance and equal means give t = 0 by convention; unequal means flag an
    infinite statistic.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = x.size, y.size
    if nx < 2 or ny < 2:
        raise ValueError("welch_t needs at least two observations per sample")
    mx, my = x.mean(), y.mean()
    vx = x.var(ddof=1)
    vy = y.var(ddof=1)
    if vx == 0.0 and vy == 0.0:
        if mx == my:
            return TTestResult(0.0, float(nx + ny - 2), Significance.NONE)
        t = np.inf if mx > my else -np.inf
        return TTestResult(float(t), float(nx + ny - 2), Significance.P01, degenerate=True)
    se2 = vx / nx + vy / ny
    t = (mx - my) / np.sqrt(se2)
    denom = (vx / nx) ** 2 / (nx - 1) + (vy / ny) ** 2 / (ny - 1)
    dof = se2 ** 2 / denom if denom > 0.0 else float(nx + ny - 2)
    return TTestResult(float(t), float(dof), _t_signif(float(t), float(dof)))


def anova_oneway(groups) -> AnovaResult:
    """One-way fixed-effects ANOVA: F = MS_between / MS_within."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError("anova needs at least two groups")
    if any(a.size < 1 for a in arrays):
        raise ValueError("every group needs at least one observation")
    n_total = sum(a.size for a in arrays)
    if n_total <= k:
        raise ValueError("no within-group degrees of freedom")
    grand = sum(a.sum() for a in arrays) / n_total
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(((a - a.mean()) ** 2).sum() for a in arrays)
    dfb = k - 1
    dfw = n_total - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            return AnovaResult(0.0, dfb, dfw, Significance.NONE, degenerate=True)
        return AnovaResult(float("inf"), dfb, dfw, Significance.P01, degenerate=True)
    f_value = (ss_between / dfb) / (ss_within / dfw)
    return AnovaResult(float(f_value), dfb, dfw, _f_signif(float(f_value), dfb, dfw))


def standardize(values) -> tuple[np.ndarray, float]:
    """Divide a series by its population standard deviation (no centering).

    Returns the scaled series and the scale factor used.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise ValueError("standardize needs at least two values")
    scale = float(arr.std(ddof=0))
    if scale == 0.0:
        raise DegenerateSampleError("zero variance, cannot standardize")
    return arr / scale, scale


def ols_fit(x, y, names: tuple[str, ...] | None = None) -> RegressionResult:
    """Ordinary least squares with an intercept and classical standard errors.

    x holds the regressor columns without the intercept; coefficient order in
    the result is (alpha, then the columns of x). Raises SingularDesignError
    on rank deficiency.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, p = x.shape
    if y.shape != (n,):
        raise ValueError("response length does not match design rows")
    if n < p + 2:
        raise ValueError(f"need at least {p + 2} rows for {p} regressors")
    design = np.column_stack([np.ones(n), x])
    if np.linalg.matrix_rank(design) < p + 1:
        raise SingularDesignError("design matrix is rank deficient")
    beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    ss_res = float(resid @ resid)
    dof = n - p - 1
    sigma2 = ss_res / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    se = np.sqrt(np.diag(cov))
    t_stats = np.empty(p + 1)
    for i in range(p + 1):
        if se[i] > 0.0:
            t_stats[i] = beta[i] / se[i]
        else:
            t_stats[i] = 0.0 if beta[i] == 0.0 else np.copysign(np.inf, beta[i])
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot > 0.0:
        r_square = 1.0 - ss_res / ss_tot
    else:
        r_square = 1.0 if ss_res <= 1e-30 else 0.0
    if names is None:
        names = ("alpha",) + tuple(f"beta{i}" for i in range(1, p + 1))
    signif = tuple(_t_signif(float(t), dof) for t in t_stats)
    return RegressionResult(
        names,
        tuple(float(b) for b in beta),
        tuple(float(t) for t in t_stats),
        signif,
        tuple(float(s) for s in se),
        float(r_square),
        n,
    )


def regression_battery(pi, c_f, c, s, v_p) -> dict[str, RegressionResult]:
    """Pooled and per-side impact regressions on one standardized panel.

    PI, C_f, C and V_p are scaled by their panel-wide population standard
    deviations; the sell dummy S is never scaled. The pooled model carries
    the dummy (beta3); the per-side models drop it and keep the paper's
    coefficient numbering (beta1, beta2, beta4).
    """
    pi = np.asarray(pi, dtype=float)
    s = np.asarray(s, dtype=float)
    pi_s, _ = standardize(pi)
    cf_s, _ = standardize(c_f)
    c_s, _ = standardize(c)
    vp_s, _ = standardize(v_p)

    out: dict[str, RegressionResult] = {}
    pooled_x = np.column_stack([cf_s, c_s, s, vp_s])
    out["all"] = ols_fit(pooled_x, pi_s, ("alpha", "beta1", "beta2", "beta3", "beta4"))
    for label, mask in (("purchases", s == 0.0), ("sales", s == 1.0)):
        if mask.sum() < 5:
            raise ValueError(f"too few rows for the {label} model")
        side_x = np.column_stack([cf_s[mask], c_s[mask], vp_s[mask]])
        out[label] = ols_fit(side_x, pi_s[mask], ("alpha", "beta1", "beta2", "beta4"))
    return out
