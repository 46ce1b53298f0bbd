"""Paired t-tests, Bonferroni adjustment, OLS with diagnostics and backward AIC stepwise."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .tdist import f_sf, t_sf2

INTERCEPT = "(Intercept)"
# residual norm below this fraction of ||y|| is treated as an exact fit
PERFECT_FIT_RTOL = 1e-10
# column whose residual after projection on earlier columns is below this
# fraction of its norm is treated as linearly dependent
RANK_RTOL = 1e-10


class DegeneratePairingError(ValueError):
    pass


class RankDeficientError(ValueError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"design matrix is rank deficient: column {column!r} is a linear combination of earlier columns")


class PerfectFitError(ValueError):
    pass


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    mean_a: float
    mean_b: float
    sd_a: float
    sd_b: float


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must be equal-length vectors (got {a.shape} and {b.shape})")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = a - b
    if np.ptp(d) == 0:
        raise DegeneratePairingError("degenerate pairing: the paired differences have zero variance")
    sd = float(np.std(d, ddof=1))
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    return TTestResult(
        t=t,
        df=n - 1,
        p=t_sf2(t, n - 1),
        mean_a=float(np.mean(a)),
        mean_b=float(np.mean(b)),
        sd_a=float(np.std(a, ddof=1)),
        sd_b=float(np.std(b, ddof=1)),
    )


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list[float]:
    """min(1, m * p) for each p; ``m`` defaults to the number of p-values."""
    p_values = list(p_values)
    if m is None:
        m = len(p_values)
    if m < 1:
        raise ValueError("number of comparisons must be at least 1")
    if not p_values or m < len(p_values):
        raise ValueError(f"m={m} must be at least the number of p-values ({len(p_values)}), which must be >= 1")
    return [min(1.0, m * p) for p in p_values]


def stars(p: float | None) -> str:
    if p is None or not math.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


@dataclass(frozen=True)
class Coefficient:
    name: str
    estimate: float
    std_error: float
    t: float
    p: float


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]
    coef: tuple[float, ...]
    std_error: tuple[float, ...]
    t: tuple[float, ...]
    p: tuple[float, ...]
    n: int
    df_model: int
    df_residual: int
    rss: float
    r2: float
    adjusted_r2: float
    residual_std_error: float
    f_statistic: float
    f_p: float
    has_intercept: bool

    @property
    def n_params(self) -> int:
        return len(self.names)

    @property
    def perfect_fit(self) -> bool:
        return self.rss == 0.0

    @property
    def aic(self) -> float:
        """n ln(RSS/n) + 2p, p counting every estimated coefficient."""
        if self.rss == 0.0:
            return -math.inf
        return self.n * math.log(self.rss / self.n) + 2 * self.n_params

    def coefficient(self, name: str) -> Coefficient:
        k = self.names.index(name)
        return Coefficient(name, self.coef[k], self.std_error[k], self.t[k], self.p[k])

    def __iter__(self):
        for k in range(len(self.names)):
            yield self.coefficient(self.names[k])


def design_matrix(columns: Mapping[str, Sequence[float]], intercept: bool = True) -> tuple[np.ndarray, tuple[str, ...]]:
    names = list(columns)
    cols = [np.asarray(columns[c], dtype=float) for c in names]
    if not cols and not intercept:
        raise ValueError("empty design")
    n = len(cols[0]) if cols else None
    if intercept:
        if n is None:
            raise ValueError("intercept-only design needs a row count; pass at least one column or build X directly")
        cols.insert(0, np.ones(n))
        names.insert(0, INTERCEPT)
    return np.column_stack(cols), tuple(names)


def intercept_only(n: int) -> tuple[np.ndarray, tuple[str, ...]]:
    return np.ones((n, 1)), (INTERCEPT,)


def _intercept_index(X: np.ndarray, names: Sequence[str]) -> int | None:
    if INTERCEPT in names:
        return list(names).index(INTERCEPT)
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.all(col == col[0]) and col[0] != 0:
            return j
    return None


def ols_fit(X, y, names: Sequence[str] | None = None) -> RegressionResult:
    """Least squares via Householder QR, with R-style summary diagnostics.

    ``X`` must already contain the intercept column when one is wanted.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != len(y):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if names is None:
        names = tuple(f"x{j}" for j in range(p))
    names = tuple(names)
    if len(names) != p:
        raise ValueError("one name per design column required")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("design matrix and response must be finite")
    if n <= p:
        raise ValueError(f"need more observations than coefficients (n={n}, coefficients={p})")

    Q, R = np.linalg.qr(X, mode="reduced")
    col_norms = np.linalg.norm(X, axis=0)
    for j in range(p):
        if abs(R[j, j]) <= RANK_RTOL * col_norms[j] or col_norms[j] == 0:
            raise RankDeficientError(names[j])
    qty = Q.T @ y
    beta = np.linalg.solve(R, qty)
    resid = y - X @ beta
    rss = float(resid @ resid)
    if rss <= (PERFECT_FIT_RTOL * float(np.linalg.norm(y))) ** 2:
        rss = 0.0

    icpt = _intercept_index(X, names)
    has_intercept = icpt is not None
    df_resid = n - p
    df_model = p - 1 if has_intercept else p
    if has_intercept:
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)

    sigma2 = rss / df_resid
    r_inv = np.linalg.inv(R)
    se = np.sqrt(sigma2 * np.sum(r_inv ** 2, axis=1))
    if rss == 0.0:
        tvals = np.full(p, math.nan)
        pvals = np.full(p, math.nan)
    else:
        tvals = beta / se
        pvals = np.array([t_sf2(float(tv), df_resid) for tv in tvals])

    if tss > 0:
        r2 = 1.0 - rss / tss
        adj = 1.0 - (1.0 - r2) * (n - (1 if has_intercept else 0)) / df_resid
    else:
        r2 = adj = math.nan
    if df_model > 0 and tss > 0:
        if rss == 0.0:
            f_stat, f_p = math.inf, 0.0
        else:
            f_stat = ((tss - rss) / df_model) / sigma2
            f_p = f_sf(f_stat, df_model, df_resid)
    else:
        f_stat = f_p = math.nan

    return RegressionResult(
        names=names,
        coef=tuple(float(b) for b in beta),
        std_error=tuple(float(s) for s in se),
        t=tuple(float(t) for t in tvals),
        p=tuple(float(q) for q in pvals),
        n=n,
        df_model=df_model,
        df_residual=df_resid,
        rss=rss,
        r2=r2,
        adjusted_r2=adj,
        residual_std_error=math.sqrt(sigma2),
        f_statistic=f_stat,
        f_p=f_p,
        has_intercept=has_intercept,
    )


@dataclass(frozen=True)
class StepwiseResult:
    fit: RegressionResult
    retained: tuple[str, ...]
    eliminated: tuple[str, ...]
    aic_trace: tuple[float, ...]
    full_fit: RegressionResult


def stepwise_aic_backward(X, y, names: Sequence[str] | None = None) -> StepwiseResult:
    """Backward elimination on AIC = n ln(RSS/n) + 2p.

    Each step drops the predictor whose removal gives the lowest AIC, provided
    that AIC is strictly below the current one.  Ties go to the earliest
    column.  The intercept is never dropped.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if names is None:
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    names = tuple(names)
    icpt = _intercept_index(X, names)
    if icpt is None:
        raise ValueError("backward stepwise selection requires an intercept column")

    def fit(cols: list[int]) -> RegressionResult:
        res = ols_fit(X[:, cols], y, [names[c] for c in cols])
        if res.rss == 0.0:
            raise PerfectFitError(
                f"model {[names[c] for c in cols]} fits exactly (RSS = 0); AIC = n ln(RSS/n) + 2p is undefined"
            )
        return res

    current = list(range(X.shape[1]))
    full = best_fit = fit(current)
    trace = [full.aic]
    eliminated = []
    while True:
        candidates = [c for c in current if c != icpt]
        if not candidates:
            break
        step_best = None
        step_drop = None
        for c in candidates:
            res = fit([k for k in current if k != c])
            if step_best is None or res.aic < step_best.aic:
                step_best, step_drop = res, c
        if step_best.aic < trace[-1]:
            current.remove(step_drop)
            eliminated.append(names[step_drop])
            best_fit = step_best
            trace.append(step_best.aic)
        else:
            break
    retained = tuple(names[c] for c in current if c != icpt)
    return StepwiseResult(best_fit, retained, tuple(eliminated), tuple(trace), full)
