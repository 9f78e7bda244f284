import numpy as np
import pytest

from lllsample.csp import AtomicCSP, AtomicConstraint


def uniform_csp(n, size, constraints):
    return AtomicCSP(
        n=n,
        domains=(size,) * n,
        constraints=tuple(AtomicConstraint(tuple(v), tuple(f)) for v, f in constraints),
    )


def star_instance(alphabet, k, delta, n_stars=6):
    """Uniform-alphabet instance with degree exactly delta: disjoint stars of
    delta constraints sharing one hub variable."""
    cons, n = [], 0
    for _ in range(n_stars):
        hub = n
        n += 1
        for _ in range(delta):
            others = tuple(range(n, n + k - 1))
            n += k - 1
            cons.append(((hub, *others), (0,) * k))
    return uniform_csp(n, alphabet, cons)


def random_graph(n, p, rng):
    adj = {u: set() for u in range(n)}
    for u in range(n):
        for w in range(u + 1, n):
            if rng.random() < p:
                adj[u].add(w)
                adj[w].add(u)
    return {u: sorted(vs) for u, vs in adj.items()}


def connected_subgraph(adj, size, rng):
    start = int(rng.integers(len(adj)))
    seen = [start]
    frontier = list(adj[start])
    while frontier and len(seen) < size:
        u = frontier.pop(int(rng.integers(len(frontier))))
        if u in seen:
            continue
        seen.append(u)
        frontier.extend(w for w in adj[u] if w not in seen)
    return seen


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
