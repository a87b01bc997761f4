"""Independent nested-loop reference implementations used as test oracles.

Everything here is written with plain Python loops and explicit formulas,
deliberately avoiding the vectorized production code paths.
"""

import math


def ref_knn_lists(coords, k):
    """k-NN index lists by exhaustive search, ties broken by index."""
    n = len(coords)
    out = []
    for i in range(n):
        cand = []
        for j in range(n):
            if j == i:
                continue
            d = math.dist(coords[i], coords[j])
            cand.append((d, j))
        cand.sort()
        out.append([j for _, j in cand[:k]])
    return out


def ref_neighbor_counts(list_of_lists, n):
    """Co-neighbor counts over runs, then elementwise max with the transpose."""
    K = [[0] * n for _ in range(n)]
    for lists in list_of_lists:
        for j in range(n):
            for l in lists[j]:
                K[j][l] += 1
    for a in range(n):
        for b in range(n):
            m = max(K[a][b], K[b][a])
            K[a][b] = K[b][a] = m
    return K


def ref_quantile(values, lam):
    """Linear-interpolation quantile of a list (between order statistics)."""
    v = sorted(values)
    if len(v) == 1:
        return v[0]
    h = (len(v) - 1) * lam
    lo = math.floor(h)
    frac = h - lo
    if lo + 1 >= len(v):
        return v[-1]
    return v[lo] + frac * (v[lo + 1] - v[lo])


def ref_local_stability(K, N, lam):
    scores = []
    for row in K:
        pos = [c / N for c in row if c > 0]
        scores.append(ref_quantile(pos, lam))
    return scores


def ref_median(values):
    v = sorted(values)
    m = len(v)
    if m % 2 == 1:
        return v[m // 2]
    return 0.5 * (v[m // 2 - 1] + v[m // 2])


def ref_rareness(list_of_lists, n, k, eps=1e-12):
    """Pairwise shared-neighbor similarity and rareness scores."""
    N = len(list_of_lists)
    W = [[1.0] * N for _ in range(N)]
    for i in range(N):
        for j in range(i + 1, N):
            fracs = []
            for l in range(n):
                shared = len(set(list_of_lists[i][l]) & set(list_of_lists[j][l]))
                fracs.append(shared / k)
            W[i][j] = W[j][i] = ref_median(fracs)
    m = []
    v = []
    for i in range(N):
        col = [W[r][i] for r in range(N) if r != i]
        mu = sum(col) / len(col)
        m.append(mu)
        v.append(sum((x - mu) ** 2 for x in col) / len(col))
    R = []
    for i in range(N):
        den = m[i] * max(v[i], eps)
        R.append(math.inf if den == 0.0 else 1.0 / den)
    return W, m, v, R


def ref_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    dx = math.sqrt(sum((a - mx) ** 2 for a in x))
    dy = math.sqrt(sum((b - my) ** 2 for b in y))
    return num / (dx * dy)


def ref_spearman_rho(x, y):
    """Spearman rho via mid-ranked Pearson."""

    def midranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        ranks = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for t in range(i, j + 1):
                ranks[order[t]] = avg
            i = j + 1
        return ranks

    return ref_pearson(midranks(x), midranks(y))


def ref_bh(pvals):
    """Benjamini-Hochberg step-up adjustment."""
    m = len(pvals)
    order = sorted(range(m), key=lambda i: pvals[i])
    adj = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        running = min(running, pvals[i] * m / rank)
        adj[i] = running
    return adj
