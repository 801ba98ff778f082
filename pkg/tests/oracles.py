"""Independent reference computations used as test oracles.

These deliberately avoid the package's own helpers: they loop over plain
edge tuples and use exact rational arithmetic where it matters.
"""

from __future__ import annotations

from fractions import Fraction


def edge_triples(g):
    return [(e.src, e.dst, e.kind.value) for e in g.edges]


def brute_force_preservation(a, b, h, strict_kind=True):
    """Return (violated source edges, violated target edges) by nested loops."""
    a_edges, b_edges = edge_triples(a), edge_triples(b)
    fwd = 0
    for (u, v, k) in a_edges:
        found = False
        if u in h and v in h:
            for (x, y, k2) in b_edges:
                if x == h[u] and y == h[v] and (k == k2 or not strict_kind):
                    found = True
        if not found:
            fwd += 1
    bwd = 0
    for (x, y, k2) in b_edges:
        found = False
        for (u, v, k) in a_edges:
            if u in h and v in h and h[u] == x and h[v] == y and (k == k2 or not strict_kind):
                found = True
        if not found:
            bwd += 1
    return fwd, bwd


def brute_force_alpha_beta(a, b, h, strict_kind=True):
    fwd, bwd = brute_force_preservation(a, b, h, strict_kind)
    na, nb = len(a.edges), len(b.edges)
    # exact rational value, rounded once
    alpha = 1.0 if na == 0 else float(1 - Fraction(fwd, na))
    beta = 1.0 if nb == 0 else float(1 - Fraction(bwd, nb))
    return alpha, beta


def exact_weighted_harmonic(alpha: Fraction, beta: Fraction, gamma: Fraction) -> Fraction:
    if gamma == 0:
        return beta
    if gamma == 1:
        return alpha
    if alpha == 0 or beta == 0:
        return Fraction(0)
    return 1 / (gamma / alpha + (1 - gamma) / beta)


def fnv1a_64_reference(data: bytes) -> int:
    # written from the published FNV-1a definition
    h = 14695981039346656037
    for byte in data:
        h ^= byte
        h = (h * 1099511628211) % 2**64
    return h


def greedy_boundary_matches(pred, gold, tol):
    """Plain O(n*m) greedy matcher: each prediction takes the first unused gold in range."""
    used = [False] * len(gold)
    matches = 0
    for p in pred:
        for i, g in enumerate(gold):
            if not used[i] and abs(p - g) <= tol:
                used[i] = True
                matches += 1
                break
    return matches
