"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import numpy as np


def naive_heights(rows, direction) -> list[float]:
    # Plain Python accumulation in feature order.
    out = []
    for row in np.asarray(rows, dtype=float):
        acc = 0.0
        for x, d in zip(row, direction):
            acc = acc + float(x) * float(d)
        out.append(acc)
    return out


def naive_ecc(rows, edges, direction, thresholds) -> list[int]:
    """Build the sublevel subgraph from scratch at every threshold."""
    h = naive_heights(rows, direction)
    curve = []
    for t in thresholds:
        vertices = {v for v, hv in enumerate(h) if hv <= t}
        n_edges = sum(1 for u, v in edges if u in vertices and v in vertices)
        curve.append(len(vertices) - n_edges)
    return curve


def brute_force_ring_bonds(num_atoms: int, edges) -> list[bool]:
    """A bond lies on a cycle iff its endpoints stay connected without it."""
    flags = []
    for k, (a, b) in enumerate(edges):
        adj = {i: set() for i in range(num_atoms)}
        for j, (u, v) in enumerate(edges):
            if j != k:
                adj[u].add(v)
                adj[v].add(u)
        seen, stack = {a}, [a]
        while stack:
            x = stack.pop()
            for y in adj[x] - seen:
                seen.add(y)
                stack.append(y)
        flags.append(b in seen)
    return flags


def dense_ridge(X, y, lam):
    """Ridge via the augmented (intercept-column) normal equations."""
    X = np.asarray(X, dtype=float)
    n, w = X.shape
    A = np.hstack([np.ones((n, 1)), X])
    penalty = np.eye(w + 1) * lam * n
    penalty[0, 0] = 0.0
    beta = np.linalg.solve(A.T @ A + penalty, A.T @ np.asarray(y, dtype=float))
    return beta[1:], beta[0]


def random_graph(rng, max_nodes: int = 20, max_dim: int = 9):
    n = int(rng.integers(1, max_nodes + 1))
    dim = int(rng.integers(1, max_dim + 1))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    p = rng.uniform(0.0, 0.5)
    edges = [pr for pr in pairs if rng.random() < p]
    rows = rng.normal(size=(n, dim))
    return rows, np.array(edges, dtype=np.int64).reshape(-1, 2), dim
