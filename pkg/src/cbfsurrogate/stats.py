"""Statistical battery: Pearson correlation, BH-FDR, two-sample t-test,
chi-square on 2x2 tables, linear covariate adjustment, relative CBF.

Correlations with degenerate variance are reported with an explicit
``undefined`` flag, never as r = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc


@dataclass
class StatResult:
    """One test outcome: statistic (r, t or chi2), df, two-sided p, n."""

    statistic: float
    df: float
    p: float
    n: int
    fdr_p: float | None = None
    undefined: bool = False


def t_cdf(t: float, df: float) -> float:
    """Student-t CDF via the regularized incomplete beta function."""
    if df <= 0:
        raise ValueError(f"df must be > 0, got {df}")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t < 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * betainc(0.5 * df, 0.5, x)
    return tail if t < 0 else 1.0 - tail


def _two_sided_p(t: float, df: float) -> float:
    return 2.0 * t_cdf(-abs(t), df)


def pearson(x, y) -> StatResult:
    """Pearson r with two-sided p from the t transform, df = n - 2.

    Zero variance in either argument yields an undefined result.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D of equal length")
    n = x.size
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:  # exact constancy, immune to mean rounding
        return StatResult(statistic=math.nan, df=n - 2, p=math.nan, n=n, undefined=True)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return StatResult(statistic=math.nan, df=n - 2, p=math.nan, n=n, undefined=True)
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        return StatResult(statistic=r, df=n - 2, p=0.0, n=n)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return StatResult(statistic=r, df=n - 2, p=_two_sided_p(t, n - 2), n=n)


def fdr_bh(pvals) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(pvals, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("pvals must be a non-empty 1-D sequence")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    q = p[order] * m / np.arange(1, m + 1)
    q = np.minimum.accumulate(q[::-1])[::-1]
    q = np.minimum(q, 1.0)
    out = np.empty(m)
    out[order] = q
    return out


def ttest2(a, b, welch: bool = False) -> StatResult:
    """Two-sample t-test, pooled-variance Student by default, Welch optional."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("each group needs at least 2 observations")
    va = 0.0 if np.ptp(a) == 0.0 else float(a.var(ddof=1))
    vb = 0.0 if np.ptp(b) == 0.0 else float(b.var(ddof=1))
    diff = float(a.mean() - b.mean())
    if welch:
        se2 = va / na + vb / nb
        if se2 == 0.0:
            if diff == 0.0:
                return StatResult(statistic=0.0, df=na + nb - 2, p=1.0, n=na + nb)
            return StatResult(statistic=math.nan, df=na + nb - 2, p=math.nan, n=na + nb, undefined=True)
        df = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
        t = diff / math.sqrt(se2)
    else:
        df = na + nb - 2
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        if pooled == 0.0:
            if diff == 0.0:
                return StatResult(statistic=0.0, df=df, p=1.0, n=na + nb)
            return StatResult(statistic=math.nan, df=df, p=math.nan, n=na + nb, undefined=True)
        t = diff / math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    return StatResult(statistic=t, df=df, p=_two_sided_p(t, df), n=na + nb)


def chisq_2x2(counts) -> StatResult:
    """Pearson chi-square on a 2x2 table, df = 1, no continuity correction."""
    obs = np.asarray(counts, dtype=float)
    if obs.shape != (2, 2) or np.any(obs < 0):
        raise ValueError("counts must be a 2x2 table of non-negative values")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    total = obs.sum()
    if np.any(rows == 0) or np.any(cols == 0):
        raise ValueError("all row and column sums must be positive")
    expected = np.outer(rows, cols) / total
    chi2 = float(((obs - expected) ** 2 / expected).sum())
    p = math.erfc(math.sqrt(chi2 / 2.0))
    return StatResult(statistic=chi2, df=1.0, p=p, n=int(total))


def adjust_covariates(y, age, sex) -> np.ndarray:
    """Residualize y on [1, age, sex] by OLS and add back mean(y).

    Constant or collinear covariate columns are dropped (the intercept is
    always kept), so the output is exactly y when no covariate varies.
    """
    y = np.asarray(y, dtype=float)
    age = np.asarray(age, dtype=float)
    sex = np.asarray(sex, dtype=float)
    n = y.size
    if age.size != n or sex.size != n:
        raise ValueError("y, age and sex must have equal length")
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    columns = [np.ones(n)]
    for cov in (age, sex):
        if np.ptp(cov) == 0.0:
            continue
        candidate = np.column_stack(columns + [cov])
        if np.linalg.matrix_rank(candidate) == candidate.shape[1]:
            columns.append(cov)
    design = np.column_stack(columns)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise ValueError("covariate design is rank-deficient")
    residuals = y - design @ coef
    return residuals + y.mean()


def relative_cbf(region_cbf: float, lobar_cbf: float) -> float:
    """Region CBF normalized by its lobar CBF (dimensionless)."""
    if lobar_cbf <= 0:
        raise ValueError(f"lobar CBF must be positive, got {lobar_cbf}")
    return region_cbf / lobar_cbf
