"""Shared builders: the worked 4-vertex example with its closed-form
spectrum, and seeded random graph corpora."""

from plap.cli import gen_graph
from plap.core import EigenpairCertificate, WeightedGraph, residual


def diamond_graph() -> WeightedGraph:
    """Unit 4-cycle 1-2-3-4 with a (2, 4) chord.

    Every eigenpair of this graph has a closed form for every p, which
    makes it the workhorse fixture for exactness checks.
    """
    vertices = [(i, 1.0, 0.0) for i in (1, 2, 3, 4)]
    edges = [(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0), (2, 4, 1.0)]
    return WeightedGraph(vertices, edges)


def diamond_pairs(p: float):
    """All five (eigenvalue, values on vertices 1..4) pairs of the diamond.

    The list covers the whole spectrum: the flat ground state, the two
    chord-symmetric pairs, the fully alternating top, and the asymmetric
    pair whose value involves 2^(1/(p-1)).
    """
    t = 2.0 ** (1.0 / (p - 1.0))
    return [
        (0.0, [1.0, 1.0, 1.0, 1.0]),
        (2.0, [1.0, 0.0, -1.0, 0.0]),
        (2.0 + 2.0 ** (p - 1.0), [0.0, 1.0, 0.0, -1.0]),
        (2.0 ** p, [1.0, -1.0, 1.0, -1.0]),
        (1.0 + (1.0 + t) ** (p - 1.0), [1.0, 0.0, 1.0, -t]),
    ]


def certify(H, lam, f, tol=1e-8):
    """Certificate carrying the measured residual of (lam, f)."""
    return EigenpairCertificate(lam, f, residual(H, f, lam), tol)


def random_tree(rng, n=None, weighted=True):
    n = n if n is not None else rng.randint(2, 12)
    return gen_graph("tree", n, rng, weighted=weighted)


def random_connected_graph(rng, n=None, weighted=True):
    n = n if n is not None else rng.randint(4, 12)
    return gen_graph("graph", n, rng, weighted=weighted)


def random_forest(rng):
    """One random weighted tree (70%) or a forest of 2-3 smaller trees."""
    r = rng.random()
    m = 1 if r < 0.7 else (2 if r < 0.9 else 3)
    verts, edges, base = [], [], 0
    for _ in range(m):
        n = rng.randint(2, 12) if m == 1 else rng.randint(2, 6)
        t = gen_graph("tree", n, rng, weighted=True)
        verts += [(base + i, float(t.rho[i]), float(t.kappa[i]))
                  for i in range(t.n)]
        edges += [(base + u, base + v, w) for u, v, w in t.edges]
        base += t.n
    return WeightedGraph(verts, edges)


def copy_forest(rng, copies):
    """``copies`` disjoint copies of one random weighted tree, so every
    eigenvalue is shared by all components."""
    t = gen_graph("tree", rng.randint(2, 5), rng, weighted=True)
    verts, edges = [], []
    for c in range(copies):
        base = c * t.n
        verts += [(base + i, float(t.rho[i]), float(t.kappa[i]))
                  for i in range(t.n)]
        edges += [(base + u, base + v, w) for u, v, w in t.edges]
    return WeightedGraph(verts, edges)
