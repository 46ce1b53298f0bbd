"""Freeze high-precision oracle values used by the test suite.

Everything here is computed with mpmath at 50 significant digits from first
principles (incomplete beta for the t CDF, normal equations for OLS, textbook
formulas for the paired t statistic).  Nothing from ``etmp`` is imported, so
the frozen numbers stay independent of the code they check.

    python scripts/make_reference_values.py  # rewrites tests/data/reference_values.json
"""
import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 50
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "reference_values.json"

T_GRID = [-30, -10, -5, -4.2552, -3, -2.5, -2, -1.5, -1, -0.75, -0.5, -0.25, 0,
          0.25, 0.5, 0.75, 1, 1.5, 2, 2.5, 3, 4.9635, 7.4842, 10, 30]
T_DFS = [1, 3, 18, 30]


def t_cdf(t, df):
    t = mp.mpf(t)
    df = mp.mpf(df)
    tail = mp.betainc(df / 2, mp.mpf(1) / 2, 0, df / (df + t * t), regularized=True)
    return 1 - tail / 2 if t > 0 else tail / 2


def t_two_sided(t, df):
    t = mp.mpf(t)
    df = mp.mpf(df)
    return mp.betainc(df / 2, mp.mpf(1) / 2, 0, df / (df + t * t), regularized=True)


def f_sf(f, d1, d2):
    f, d1, d2 = mp.mpf(f), mp.mpf(d1), mp.mpf(d2)
    return mp.betainc(d2 / 2, d1 / 2, 0, d2 / (d2 + d1 * f), regularized=True)


def paired(a, b):
    a = [mp.mpf(v) for v in a]
    b = [mp.mpf(v) for v in b]
    n = len(a)
    d = [x - y for x, y in zip(a, b)]
    mean = mp.fsum(d) / n
    sd = mp.sqrt(mp.fsum((x - mean) ** 2 for x in d) / (n - 1))
    t = mean / (sd / mp.sqrt(n))
    return {"t": float(t), "df": n - 1, "p": float(t_two_sided(t, n - 1))}


def ols(X, y):
    Xm = mp.matrix([[mp.mpf(v) for v in row] for row in X])
    ym = mp.matrix([mp.mpf(v) for v in y])
    n, p = Xm.rows, Xm.cols
    xtx = Xm.T * Xm
    beta = mp.lu_solve(xtx, Xm.T * ym)
    resid = ym - Xm * beta
    rss = mp.fsum(resid[i] ** 2 for i in range(n))
    ybar = mp.fsum(ym) / n
    tss = mp.fsum((ym[i] - ybar) ** 2 for i in range(n))
    df_res = n - p
    sigma2 = rss / df_res
    inv = mp.inverse(xtx)
    se = [mp.sqrt(sigma2 * inv[j, j]) for j in range(p)]
    tvals = [beta[j] / se[j] for j in range(p)]
    r2 = 1 - rss / tss
    f = ((tss - rss) / (p - 1)) / sigma2
    return {
        "coef": [float(beta[j]) for j in range(p)],
        "std_error": [float(s) for s in se],
        "t": [float(t) for t in tvals],
        "p": [float(t_two_sided(t, df_res)) for t in tvals],
        "rss": float(rss),
        "r2": float(r2),
        "adjusted_r2": float(1 - (1 - r2) * (n - 1) / df_res),
        "residual_std_error": float(mp.sqrt(sigma2)),
        "f_statistic": float(f),
        "f_p": float(f_sf(f, p - 1, df_res)),
        "df_residual": df_res,
    }


def paired_datasets():
    rng = np.random.default_rng(20240611)
    sets = [{"name": "four_pairs", "a": [1, 2, 3, 4], "b": [2, 2, 4, 3]}]
    for name, n, shift in (("n19_selected_vs_combined", 19, -0.09), ("n19_selected_vs_average", 19, 0.12),
                           ("n2", 2, 0.3), ("n10", 10, 0.05), ("n30", 30, -0.02), ("n31", 31, 0.4)):
        a = np.round(rng.uniform(0.05, 0.45, n), 6)
        b = np.round(a - shift + rng.normal(0, 0.08, n), 6)
        sets.append({"name": name, "a": a.tolist(), "b": b.tolist()})
    for s in sets:
        s.update(paired(s["a"], s["b"]))
    return sets


def ols_datasets():
    rng = np.random.default_rng(19740101)
    sets = []
    x1 = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    x2 = [2.5, 0.5, 3.0, 1.0, 4.5, 2.0, 5.5, 3.5]
    y = [3.1, 2.9, 6.2, 5.0, 9.8, 7.9, 12.6, 11.1]
    sets.append({"name": "eight_rows_two_predictors", "X": [[1.0, a, b] for a, b in zip(x1, x2)], "y": y})
    for name, n, k in (("n19_one_predictor", 19, 1), ("n19_two_predictors", 19, 2), ("n19_six_predictors", 19, 6),
                       ("n20_four_predictors", 20, 4), ("n50_three_predictors", 50, 3)):
        Z = np.round(rng.normal(size=(n, k)), 6)
        beta = rng.normal(size=k + 1)
        yy = np.round(beta[0] + Z @ beta[1:] + rng.normal(0, 0.7, n), 6)
        sets.append({"name": name, "X": np.column_stack([np.ones(n), Z]).tolist(), "y": yy.tolist()})
    for s in sets:
        s.update(ols(s["X"], s["y"]))
    return sets


def main():
    doc = {
        "t_cdf": {
            "t": T_GRID,
            "values": {str(df): [float(t_cdf(t, df)) for t in T_GRID] for df in T_DFS},
        },
        "paired_t": paired_datasets(),
        "ols": ols_datasets(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
