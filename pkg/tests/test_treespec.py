"""Forest spectra through generating functions: rooting, zero hunting,
the count rule, and eigenbasis reconstruction."""

import math
import random

import numpy as np
import pytest

from conftest import copy_forest, random_tree
from plap.core import Operator, VertexFunction, WeightedGraph, residual
from plap.oracle import p2_spectrum
from plap.treespec import (
    RootedTree,
    cluster_tagged,
    eigenbasis,
    eval_g,
    forest_eigenbasis,
    node_zeros,
    root_tree,
    subtree_operator,
    tree_spectrum,
)

# A 4-path whose spectrum at p = 1.2 contains two distinct eigenvalues
# only ~4e-10 apart; naive clustering would merge them into an
# inconsistent group.
NEAR_DEGENERATE_PATH = WeightedGraph(
    [(0, 1.8150442642115856, 0.2326921562572941),
     (1, 1.6594760855068769, -0.04046770469005234),
     (2, 0.9549451167586636, 0.5985177562565476),
     (3, 1.74660176229755, 0.12437740739804126)],
    [(0, 1, 0.8117277118068909),
     (1, 2, 1.2678374875329237),
     (2, 3, 1.901231538700668)])

# A 10-vertex tree where, at p = 1.2, one generating-function zero sits
# less than one ulp from its pole near 5.055; the hunt must emit the
# boundary point and the count rule must still close.
COALESCENT_TREE = WeightedGraph(
    [(0, 0.8958888794557998, 0.1323151636955482),
     (1, 1.2780988190094544, 0.1760027395454007),
     (2, 1.3332285933049195, -0.13540056627898034),
     (3, 1.0807013260246745, -0.20981407046300826),
     (4, 1.9915688549024277, 0.044582697000914884),
     (5, 0.6597320436030973, -0.2126982139992215),
     (6, 1.6490256623085522, 0.3643478688636219),
     (7, 0.621135932334554, -0.17351316807135886),
     (8, 1.1778252603633284, 0.6907066698861075),
     (9, 0.90108102841634, 0.832379758188122)],
    [(0, 1, 1.4092395062943968),
     (0, 2, 0.6245509014532014),
     (2, 3, 0.758753305298982),
     (3, 4, 1.514561331962748),
     (4, 5, 1.5704494680413577),
     (2, 6, 0.9378713907252595),
     (5, 7, 1.94865562361786),
     (6, 8, 0.5498844793924254),
     (3, 9, 1.1360372950672766)])

# An 11-vertex tree whose p = 1.2 eigenfunction at lambda ~ 1.0362 needs
# two adjacent values closer than one ulp; the gap is not representable
# in doubles, so the reconstruction's defect floors around 7e-4 even
# though the eigenvalue and all multiplicities stay exact.
SUB_ULP_TIE_TREE = WeightedGraph(
    [(0, 1.9241212409340909, -0.08760038996419395),
     (1, 0.6205373922613429, 0.8438578246378576),
     (2, 0.958689357187549, 0.7915236781918602),
     (3, 0.8116248221022235, -0.8549551316580732),
     (4, 1.2700392470876847, 0.09735420364114233),
     (5, 1.5108483597203093, 0.2819659317000194),
     (6, 1.0426881233876621, 0.5197350155585163),
     (7, 1.2725049966078463, -0.710599784974723),
     (8, 1.3761599024750857, -0.2956911667512596),
     (9, 1.3180419049104026, -0.6834668476792614),
     (10, 0.8788559874204024, -0.470539984891468)],
    [(0, 1, 1.9340803544978644),
     (1, 2, 0.8812026454144097),
     (0, 3, 1.24255356233042),
     (3, 4, 0.958053388393387),
     (3, 5, 0.9222905643476169),
     (5, 6, 0.6055135519408572),
     (0, 7, 1.6654498007676635),
     (5, 8, 1.4811843986003057),
     (6, 9, 1.7545715465429843),
     (5, 10, 1.2152827621116096)])


def test_cluster_tagged_groups_nearby_values():
    tagged = [(1.0, "a"), (1.0 + 1e-12, "b"), (2.0, "c")]
    groups = list(cluster_tagged(tagged))
    assert len(groups) == 2
    center, vals, verts = groups[0]
    assert set(verts) == {"a", "b"}
    assert math.isclose(center, 1.0, rel_tol=1e-9)
    assert groups[1][2] == ["c"]


def test_root_tree_structure():
    g = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    T = root_tree(g, 0)
    assert isinstance(T, RootedTree)
    assert T.parent == [-1, 0, 1]
    assert T.children == ((1,), (2,), ())
    assert T.order[-1] == 0  # children come before their parent
    T2 = root_tree(g, 1)
    assert T2.parent[1] == -1
    assert set(T2.children[1]) == {0, 2}


def test_node_zeros_equal_subtree_spectrum():
    """The zeros of g_u are the spectrum of the subtree at u with the
    parent edge absorbed into the potential."""
    g = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    H = Operator(g, 2.0)
    T = root_tree(g, 0)
    assert np.allclose(node_zeros(T, H, 0), [0.0, 1.0, 3.0], atol=1e-9)
    assert np.allclose(node_zeros(T, H, 2), [1.0], atol=1e-9)
    sub = subtree_operator(H, T, 1)
    assert float(sub.graph.kappa[sub.graph.index_of(1)]) == 1.0
    assert np.allclose(node_zeros(T, H, 1), tree_spectrum(sub).flat(),
                       atol=1e-9)

    rng = random.Random(4)
    for _ in range(5):
        t = random_tree(rng, n=rng.randint(3, 8))
        H = Operator(t, 2.0)
        T = root_tree(t, 0)
        u = rng.choice([v for v in range(t.n) if T.parent[v] != -1])
        zs = node_zeros(T, H, u)
        want = tree_spectrum(subtree_operator(H, T, u)).flat()
        assert np.allclose(zs, want, atol=1e-8 * max(1.0, max(map(abs, want))))


def test_subtree_operator_drop_root():
    g = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    H = Operator(g, 2.0)
    T = root_tree(g, 0)
    sub = subtree_operator(H, T, 1, drop_root=True)
    assert sub.graph.ids == (2,)
    assert float(sub.graph.kappa[0]) == 1.0  # edge to the dropped root


def test_eval_g_values_and_poles():
    g = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    H = Operator(g, 2.0)
    T = root_tree(g, 0)
    # a unit leaf at p = 2 has g(lam) = 1 - lam
    assert eval_g(T, H, 2, 0.25) == 0.75
    # the leaf's zero is the parent's pole
    assert eval_g(T, H, 1, 1.0) == math.inf
    # g decreases between consecutive poles
    assert eval_g(T, H, 1, 0.5) > eval_g(T, H, 1, 0.9)


def test_tree_spectrum_frozen_cases():
    k2 = WeightedGraph.unit(2, [(0, 1)])
    assert np.allclose(tree_spectrum(Operator(k2, 2.0)).flat(), [0.0, 2.0],
                       atol=1e-9)

    path3 = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    assert np.allclose(tree_spectrum(Operator(path3, 2.0)).flat(),
                       [0.0, 1.0, 3.0], atol=1e-9)

    star = WeightedGraph.unit(4, [(0, 1), (0, 2), (0, 3)])
    spec = tree_spectrum(Operator(star, 2.0))
    assert np.allclose(spec.flat(), [0.0, 1.0, 1.0, 4.0], atol=1e-9)
    assert [e.mult for e in spec.entries] == [1, 2, 1]


def test_tree_spectrum_weighted_k2_closed_form():
    """For a two-vertex graph the top eigenvalue has the closed form
    omega (rho0^s + rho1^s)^(p-1) / (rho0 rho1) with s = 1/(p-1)."""
    rho0, rho1, omega = 2.0, 0.5, 1.5
    g = WeightedGraph([(0, rho0, 0.0), (1, rho1, 0.0)], [(0, 1, omega)])
    for p in (1.5, 2.0, 3.0):
        s = 1.0 / (p - 1.0)
        want = omega * (rho0 ** s + rho1 ** s) ** (p - 1.0) / (rho0 * rho1)
        vals = tree_spectrum(Operator(g, p)).flat()
        assert abs(vals[0]) < 1e-9
        assert math.isclose(vals[1], want, rel_tol=1e-9)


def test_tree_spectrum_invariant_under_relabeling():
    rng = random.Random(9)
    t = random_tree(rng, n=7)
    perm = list(range(7))
    rng.shuffle(perm)
    relabeled = WeightedGraph(
        [(perm[i], float(t.rho[i]), float(t.kappa[i])) for i in range(7)],
        [(perm[u], perm[v], w) for u, v, w in t.edges])
    for p in (1.6, 3.0):
        a = tree_spectrum(Operator(t, p))
        b = tree_spectrum(Operator(relabeled, p))
        assert [e.mult for e in a.entries] == [e.mult for e in b.entries]
        assert np.allclose(a.values(), b.values(), atol=1e-9)


def test_forest_spectrum_merges_components():
    g = WeightedGraph([(0, 1.0, 0.0), (1, 1.0, 0.0),
                       (2, 1.0, 0.0), (3, 1.0, 0.0)],
                      [(0, 1, 1.0), (2, 3, 2.0)])
    spec = tree_spectrum(Operator(g, 2.0))
    assert np.allclose(spec.flat(), [0.0, 0.0, 2.0, 4.0], atol=1e-9)
    assert spec.entries[0].mult == 2

    rng = random.Random(12)
    twin = copy_forest(rng, 2)
    single = WeightedGraph(
        [(i, float(twin.rho[i]), float(twin.kappa[i]))
         for i in range(twin.n // 2)],
        [(u, v, w) for u, v, w in twin.edges if u < twin.n // 2])
    for p in (1.5, 2.0):
        sd = tree_spectrum(Operator(twin, p))
        ss = tree_spectrum(Operator(single, p))
        assert np.allclose(sd.values(), ss.values(), atol=1e-9)
        assert [e.mult for e in sd.entries] == [2 * e.mult for e in ss.entries]


def test_tree_spectrum_rejects_cycles():
    g = WeightedGraph.unit(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(ValueError):
        tree_spectrum(Operator(g, 2.0))


def test_tree_spectrum_matches_dense_route():
    rng = random.Random(21)
    for _ in range(30):
        t = random_tree(rng)
        H = Operator(t, 2.0)
        a = tree_spectrum(H)
        b = p2_spectrum(H)
        assert [e.mult for e in a.entries] == [e.mult for e in b.entries]
        for x, y in zip(a.values(), b.values()):
            assert abs(x - y) <= 1e-7 * max(1.0, abs(y))


def test_tree_spectrum_count_is_exact():
    rng = random.Random(33)
    for _ in range(20):
        t = random_tree(rng)
        for p in (1.5, 3.7):
            assert tree_spectrum(Operator(t, p)).total == t.n


def test_eigenbasis_path3_known_functions():
    g = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    H = Operator(g, 2.0)
    T = root_tree(g, 0)
    funcs = eigenbasis(H, T, 1.0)
    assert len(funcs) == 1
    v = funcs[0].values
    assert abs(v[1]) < 1e-12
    assert math.isclose(v[0], -v[2], rel_tol=1e-9)
    assert residual(H, funcs[0], 1.0) < 1e-10

    Hp = Operator(g, 3.0)
    for e in tree_spectrum(Hp).entries:
        for f in eigenbasis(Hp, T, e.value):
            assert residual(Hp, f, e.value) < 1e-9


def test_eigenbasis_star_multiplicity():
    star = WeightedGraph.unit(4, [(0, 1), (0, 2), (0, 3)])
    H = Operator(star, 2.0)
    T = root_tree(star, 0)
    funcs = eigenbasis(H, T, 1.0)
    assert len(funcs) == 2
    mat = np.stack([f.values for f in funcs])
    assert np.linalg.matrix_rank(mat, tol=1e-8) == 2
    for f in funcs:
        assert abs(f.values[0]) < 1e-12  # all vanish at the center
        assert residual(H, f, 1.0) < 1e-10


def test_eigenbasis_rejects_non_eigenvalues():
    g = WeightedGraph.unit(3, [(0, 1), (1, 2)])
    H = Operator(g, 2.0)
    T = root_tree(g, 0)
    with pytest.raises(ValueError):
        eigenbasis(H, T, 0.5)


def test_forest_eigenbasis_embeds_per_component():
    g = WeightedGraph([(0, 1.0, 0.0), (1, 1.0, 0.0),
                       (2, 1.0, 0.0), (3, 1.0, 0.0)],
                      [(0, 1, 1.0), (2, 3, 2.0)])
    H = Operator(g, 2.0)
    funcs = forest_eigenbasis(H, 4.0)  # only the omega = 2 component
    assert len(funcs) == 1
    v = funcs[0].values
    assert v[0] == 0.0 and v[1] == 0.0
    assert residual(H, funcs[0], 4.0) < 1e-10
    zero_funcs = forest_eigenbasis(H, 0.0)  # both components
    assert len(zero_funcs) == 2
    with pytest.raises(ValueError):
        forest_eigenbasis(H, 1.2345)


def test_near_degenerate_cluster_is_split():
    """Two eigenvalues only ~4e-10 apart must stay distinct: merging them
    would double-count a vertex and break the count rule."""
    H = Operator(NEAR_DEGENERATE_PATH, 1.2)
    spec = tree_spectrum(H)
    assert spec.total == 4
    for e in spec.entries:
        for f in forest_eigenbasis(H, e.value):
            assert residual(H, f, e.value) < 1e-8


def test_zero_pole_coalescence_keeps_count():
    """When a generating-function zero collapses onto its pole at float
    resolution, the boundary point must still be counted and the basis
    reconstruction must stay accurate."""
    for p in (1.2, 2.0, 3.7):
        H = Operator(COALESCENT_TREE, p)
        assert tree_spectrum(H).total == 10
    H = Operator(COALESCENT_TREE, 1.2)
    for e in tree_spectrum(H).entries:
        for f in forest_eigenbasis(H, e.value):
            assert residual(H, f, e.value) < 1e-8


def test_sub_ulp_tie_keeps_count_and_value():
    """At p = 1.2 this tree's eigenfunction near lambda = 1.0362 needs two
    adjacent values whose true gap is below one ulp, so no double-precision
    function can push the defect under ~7e-4. The eigenvalue grid and the
    multiplicities are combinatorial and stay exact; only the reconstructed
    function's defect floors."""
    H = Operator(SUB_ULP_TIE_TREE, 1.2)
    spec = tree_spectrum(H)
    assert spec.total == 11
    lam = min(spec.values(), key=lambda v: abs(v - 1.036229155505207))
    assert math.isclose(lam, 1.036229155505207, rel_tol=1e-9)
    worst = 0.0
    for e in spec.entries:
        for f in forest_eigenbasis(H, e.value):
            worst = max(worst, residual(H, f, e.value))
    assert worst < 1e-2  # the documented representability floor
    # the same tree is unremarkable away from p < 2
    for p in (2.0, 3.7):
        Hp = Operator(SUB_ULP_TIE_TREE, p)
        for e in tree_spectrum(Hp).entries:
            for f in forest_eigenbasis(Hp, e.value):
                assert residual(Hp, f, e.value) < 1e-8
