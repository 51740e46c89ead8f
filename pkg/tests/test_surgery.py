"""Eigenpair-preserving surgery: compensated edge and vertex removal, the
interlacing checks, and the two reduction pipelines."""

import math
import random

import numpy as np
import pytest

from conftest import certify, diamond_graph, random_connected_graph, random_tree
from plap.core import (
    EigenpairCertificate,
    Operator,
    VertexFunction,
    WeightedGraph,
    is_forest,
    residual,
)
from plap.oracle import p2_spectrum
from plap.surgery import (
    reduce_to_forest,
    reduce_to_nodal_union,
    remove_edge,
    remove_node,
    verify_weyl_edge,
    verify_weyl_nodes,
)
from plap.treespec import Spectrum, SpectrumEntry, tree_spectrum


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_remove_edge_alternating_pair(p):
    """Removing the chord under the fully alternating eigenfunction costs
    nothing: alpha = 1 makes both compensations vanish."""
    H = Operator(diamond_graph(), p)
    lam = 2.0 ** p
    f = VertexFunction([1.0, -1.0, 1.0, -1.0])
    H2, step = remove_edge(H, certify(H, lam, f), (2, 4))
    assert step.kind == "edge"
    assert step.alpha == 1.0
    assert step.removed_weight == 1.0
    assert step.kappa_deltas == {2: 0.0, 4: 0.0}
    assert len(H2.graph.edges) == 4
    assert not H2.graph.has_edge(2, 4)
    assert np.all(H2.graph.kappa == 0.0)
    assert residual(H2, f, lam) < 1e-12


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_remove_edge_sign_change(p):
    """A sign-change edge turns into equal potentials phi(2) at both ends."""
    g = WeightedGraph.unit(2, [(0, 1)])
    H = Operator(g, p)
    lam = 2.0 ** (p - 1.0)
    f = VertexFunction([1.0, -1.0])
    H2, step = remove_edge(H, certify(H, lam, f), (0, 1))
    assert step.alpha == -1.0
    want = 2.0 ** (p - 1.0)
    assert math.isclose(step.kappa_deltas[0], want, rel_tol=1e-13)
    assert math.isclose(step.kappa_deltas[1], want, rel_tol=1e-13)
    assert len(H2.graph.edges) == 0
    assert residual(H2, f, lam) < 1e-13


def test_remove_edge_guards():
    H = Operator(diamond_graph(), 2.0)
    cert = certify(H, 2.0, VertexFunction([1.0, 0.0, -1.0, 0.0]))
    with pytest.raises(ValueError):
        remove_edge(H, cert, (1, 2))  # endpoint inside the zero band
    good = certify(H, 2.0 ** 2, VertexFunction([1.0, -1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        remove_edge(H, good, (1, 3))  # no such edge


def test_remove_node_folds_weights():
    H = Operator(diamond_graph(), 2.0)
    H1 = remove_node(H, 2)
    assert H1.graph.ids == (1, 3, 4)
    km = dict(zip(H1.graph.ids, H1.graph.kappa))
    assert km == {1: 1.0, 3: 1.0, 4: 1.0}
    H2 = remove_node(H1, 4)
    km = dict(zip(H2.graph.ids, H2.graph.kappa))
    assert km == {1: 2.0, 3: 2.0}
    assert len(H2.graph.edges) == 0
    # (1, 0, -1, 0) at lambda = 2 survives both removals, at any p
    for p in (1.5, 2.0, 3.0):
        Hp = Operator(H2.graph, p)
        assert residual(Hp, VertexFunction([1.0, -1.0]), 2.0) < 1e-13


def test_remove_node_guards():
    lone = Operator(WeightedGraph([(0, 1.0, 0.0)], []), 2.0)
    with pytest.raises(ValueError):
        remove_node(lone, 0)
    H = Operator(diamond_graph(), 2.0)
    with pytest.raises(ValueError):
        remove_node(H, 99)


def _plain_spectrum(vals):
    entries = []
    for v in sorted(set(vals)):
        entries.append(SpectrumEntry(v, vals.count(v)))
    return Spectrum(tuple(entries))


def test_verify_weyl_edge_synthetic():
    before = _plain_spectrum([0.0, 1.0, 2.0])
    good_pos = _plain_spectrum([-0.5, 0.5, 1.5])
    rep = verify_weyl_edge(before, good_pos, +1.0)
    assert rep.ok and rep.checked == 3 and rep.failures == ()
    bad_pos = _plain_spectrum([0.5, 1.5, 2.5])
    rep = verify_weyl_edge(before, bad_pos, +1.0)
    assert not rep.ok and rep.failures
    # the same shifted spectrum is fine for the opposite sign case
    rep = verify_weyl_edge(before, bad_pos, -1.0)
    assert rep.ok
    with pytest.raises(ValueError):
        verify_weyl_edge(before, _plain_spectrum([0.0, 1.0]), +1.0)
    with pytest.raises(ValueError):
        verify_weyl_edge(before, good_pos, 0.0)


def test_verify_weyl_nodes_synthetic():
    before = _plain_spectrum([0.0, 1.0, 2.0, 3.0])
    rep = verify_weyl_nodes(before, _plain_spectrum([0.5, 1.5, 2.5]), 1)
    assert rep.ok and rep.checked == 3
    rep = verify_weyl_nodes(before, _plain_spectrum([1.5, 2.5, 3.5]), 1)
    assert not rep.ok
    with pytest.raises(ValueError):
        verify_weyl_nodes(before, _plain_spectrum([0.5, 1.5]), 1)


def test_weyl_on_diamond_surgery():
    H = Operator(diamond_graph(), 2.0)
    before = p2_spectrum(H)
    f = VertexFunction([1.0, -1.0, 1.0, -1.0])
    H2, step = remove_edge(H, certify(H, 4.0, f), (2, 4))
    rep = verify_weyl_edge(before, p2_spectrum(H2), step.alpha)
    assert rep.ok
    H3 = remove_node(H, 2)
    rep = verify_weyl_nodes(before, p2_spectrum(H3), 1)
    assert rep.ok


def test_reduce_to_nodal_union_diamond():
    H = Operator(diamond_graph(), 2.0)
    cert = certify(H, 2.0, VertexFunction([1.0, 0.0, -1.0, 0.0]))
    H2, rep = reduce_to_nodal_union(H, cert)
    assert rep.nu == 2
    assert sorted(rep.components) == [(1,), (3,)]
    assert rep.multiplicity_after == 2
    assert rep.residual_after < 1e-12
    assert np.allclose(rep.component_minima, [2.0, 2.0], atol=1e-9)
    km = dict(zip(H2.graph.ids, H2.graph.kappa))
    assert km == {1: 2.0, 3: 2.0}
    kinds = [s.kind for s in rep.steps]
    assert kinds.count("node") == 2


def test_reduce_to_nodal_union_tree_p3():
    g = WeightedGraph.unit(4, [(0, 1), (1, 2), (2, 3)])
    H = Operator(g, 3.0)
    spec = tree_spectrum(H)
    from plap.treespec import forest_eigenbasis
    lam = spec.entries[1].value
    f = forest_eigenbasis(H, lam)[0]
    H2, rep = reduce_to_nodal_union(H, certify(H, lam, f))
    assert rep.nu >= 2
    assert len(rep.component_minima) == rep.nu
    for m in rep.component_minima:
        assert abs(m - lam) <= 1e-8 * max(1.0, abs(lam))
    assert rep.residual_after < 1e-9


def test_reduce_rejects_invalid_certificates():
    H = Operator(diamond_graph(), 2.0)
    f = VertexFunction([1.0, 0.0, -1.0, 0.0])
    stale = EigenpairCertificate(2.05, f, residual(H, f, 2.05), 1e-8)
    assert not stale.valid
    with pytest.raises(ValueError):
        reduce_to_nodal_union(H, stale)
    with pytest.raises(ValueError):
        reduce_to_forest(H, stale)


def test_reduce_to_forest_cuts_cycles():
    rng = random.Random(17)
    for _ in range(5):
        g = random_connected_graph(rng, n=rng.randint(4, 9))
        H = Operator(g, 2.0)
        spec = p2_spectrum(H)
        e = spec.entries[-1]
        cert = certify(H, e.value, e.basis[0])
        H2, steps = reduce_to_forest(H, cert, seed=3)
        assert is_forest(H2.graph)
        fmap = cert.function.as_mapping(g)
        f2 = VertexFunction.from_mapping(
            H2.graph, {vid: fmap[vid] for vid in H2.graph.ids})
        assert residual(H2, f2, e.value) < 1e-9
        # same seed, same cuts
        H3, _ = reduce_to_forest(H, cert, seed=3)
        assert H3.graph == H2.graph


def test_reduce_to_forest_on_flat_function():
    """The flat ground state of a potential-free graph survives cutting all
    the way down to a spanning tree."""
    g = WeightedGraph.unit(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)])
    H = Operator(g, 2.5)
    f = VertexFunction([1.0] * 5)
    H2, steps = reduce_to_forest(H, certify(H, 0.0, f, tol=1e-10), seed=0)
    assert is_forest(H2.graph)
    assert len(H2.graph.edges) == 4
    assert residual(H2, f, 0.0) < 1e-13
    edge_steps = [s for s in steps if s.kind == "edge"]
    assert len(edge_steps) == 2
    for s in edge_steps:
        assert s.alpha == 1.0  # flat ratio: compensations vanish
