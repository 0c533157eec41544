"""Independent reference implementations the tests check the package against."""

import itertools

import numpy as np


def direct_counts(pred, lab, grp):
    """Loop-based tallies: (accuracy, f1, spd_signed)."""
    tp = tn = fp = fn = 0
    sel = {0: 0, 1: 0}
    size = {0: 0, 1: 0}
    for p, y, g in zip(pred, lab, grp):
        if p and y:
            tp += 1
        elif p and not y:
            fp += 1
        elif not p and y:
            fn += 1
        else:
            tn += 1
        size[g] += 1
        sel[g] += p
    acc = (tp + tn) / len(pred)
    f1 = 0.0 if tp == 0 else 2 * (tp / (tp + fp)) * (tp / (tp + fn)) / (tp / (tp + fp) + tp / (tp + fn))
    spd = sel[1] / size[1] - sel[0] / size[0]
    return acc, f1, spd


def _dominated_by(a, b):
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def peel_ranks(points):
    """Rank by repeatedly removing everything no remaining point dominates (O(N^3))."""
    remaining = set(range(len(points)))
    ranks = [None] * len(points)
    r = 0
    while remaining:
        front = {i for i in remaining if not any(_dominated_by(points[i], points[j]) for j in remaining)}
        for i in front:
            ranks[i] = r
        remaining -= front
        r += 1
    return ranks


def peel_ranks_np(points):
    """Same peeling as ``peel_ranks`` with the pairwise test vectorized (still O(N^3))."""
    P = np.asarray(points, dtype=float)
    ranks = np.full(len(P), -1)
    remaining = np.arange(len(P))
    r = 0
    while remaining.size:
        Q = P[remaining]
        le = (Q[None, :, :] <= Q[:, None, :]).all(axis=2)
        lt = (Q[None, :, :] < Q[:, None, :]).any(axis=2)
        beaten = (le & lt).any(axis=1)
        ranks[remaining[~beaten]] = r
        remaining = remaining[beaten]
        r += 1
    return ranks.tolist()


def pareto_set(points):
    return [p for p in points if not any(_dominated_by(p, q) for q in points)]


def central_diff(f, w, b, h=1e-5):
    gw = np.zeros_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        gw[j] = (f(w + e, b) - f(w - e, b)) / (2 * h)
    return gw, (f(w, b + h) - f(w, b - h)) / (2 * h)


def rel_err(analytic, numeric):
    a, n = np.append(*analytic), np.append(*numeric)
    return np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), 1e-300)


def hinge_point_away_from_kink(rng, X, y, dim, h=1e-5, margin=1e-3):
    """Random (w, b) whose margins all stay clear of 1 under +/- h perturbations."""
    s = 2 * y - 1
    reach = h * (np.abs(X).sum(axis=1) + 1) + margin
    while True:
        w, b = rng.normal(size=dim), float(rng.normal())
        if np.all(np.abs(s * (X @ w + b) - 1) > reach):
            return w, b


def all_masks(n):
    for bits in itertools.product([0, 1], repeat=n):
        if any(bits):
            yield np.array(bits, dtype=bool)
