import json
from pathlib import Path

import numpy as np
import pytest

from etmp.model import Aoi, DialogueOption, DialogueTree, GazeTrace, Interaction, Rect

DATA = Path(__file__).parent / "data"


def make_interaction(iid, scores, scene="s1", next_ids=None, top=100.0, height=80.0, gap=20.0):
    """Options o1..ok stacked vertically, AOIs 400 px wide, non-overlapping."""
    options, aois = [], []
    for k, s in enumerate(scores):
        oid = f"{iid}.o{k + 1}"
        nxt = next_ids[k] if next_ids else None
        options.append(DialogueOption(oid, f"option {k + 1}", s, nxt))
        aois.append(Aoi(f"{oid}.aoi", oid, Rect(100.0, top + k * (height + gap), 400.0, height)))
    return Interaction(iid, scene, tuple(options), tuple(aois))


def make_tree(*score_lists, scene="s1"):
    return DialogueTree(tuple(make_interaction(f"Q{i + 1}", s, scene) for i, s in enumerate(score_lists)))


@pytest.fixture(scope="session")
def reference_values():
    return json.loads((DATA / "reference_values.json").read_text())


def random_trace(rng, n_max=80):
    """Clustered gaze with jumps, jittered timing and a few invalid samples."""
    n = int(rng.integers(2, n_max))
    step = rng.integers(4, 16, n)
    t = np.cumsum(step) - step[0]
    centres = rng.uniform(0, 2000, (int(rng.integers(1, 6)), 2))
    which = np.sort(rng.integers(0, len(centres), n))
    xy = centres[which] + rng.normal(0, rng.uniform(1, 25), (n, 2))
    valid = rng.random(n) > 0.1
    xy[~valid] = np.nan
    return GazeTrace(t, xy[:, 0], xy[:, 1], valid)


def subset_aic_table(X, y):
    """AIC = n ln(RSS/n) + 2p for every subset of the non-intercept columns (column 0)."""
    from itertools import combinations

    n, p = X.shape
    table = {}
    for r in range(p):
        for sub in combinations(range(1, p), r):
            cols = [0, *sub]
            beta = np.linalg.lstsq(X[:, cols], y, rcond=None)[0]
            rss = float(np.sum((y - X[:, cols] @ beta) ** 2))
            table[frozenset(sub)] = n * np.log(rss / n) + 2 * len(cols)
    return table


def backward_oracle(table, p):
    """Greedy backward walk over a precomputed AIC table; ties to the lowest column."""
    current = frozenset(range(1, p))
    trace = [table[current]]
    while current:
        best = min(sorted(current), key=lambda c: table[current - {c}])
        if table[current - {best}] < trace[-1]:
            current = current - {best}
            trace.append(table[current])
        else:
            break
    return current, trace


def stepwise_dataset(rng, n=20, k=None):
    """Intercept + k predictors; a random subset carries signal, some predictors correlated."""
    k = int(rng.integers(1, 5)) if k is None else k
    Z = rng.normal(size=(n, k))
    if k > 1 and rng.random() < 0.5:
        Z[:, 1] += rng.uniform(0, 1.5) * Z[:, 0]
    beta = rng.normal(0, 1, k) * (rng.random(k) < 0.5)
    y = 1.0 + Z @ beta + rng.normal(0, 1, n)
    return np.column_stack([np.ones(n), Z]), y
