"""Slow reference implementations used to check the fast code paths."""

import numpy as np


def ks_bruteforce(sample1, sample2):
    """Sum over coordinates of the largest ECDF gap, by explicit loops."""
    a = np.atleast_2d(np.asarray(sample1, dtype=float).T).T
    b = np.atleast_2d(np.asarray(sample2, dtype=float).T).T
    total = 0.0
    for j in range(a.shape[1]):
        col_a, col_b = list(a[:, j]), list(b[:, j])
        best = 0.0
        for x in col_a + col_b:
            fa = sum(1 for v in col_a if v <= x) / len(col_a)
            fb = sum(1 for v in col_b if v <= x) / len(col_b)
            best = max(best, abs(fa - fb))
        total += best
    return total


def auc_pair_count(scores, labels):
    """(#concordant + 0.5 * #tied) / (n1 * n0) over all positive/negative pairs."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    conc = sum(1 for p in pos for q in neg if p > q)
    ties = sum(1 for p in pos for q in neg if p == q)
    return (conc + 0.5 * ties) / (len(pos) * len(neg))
