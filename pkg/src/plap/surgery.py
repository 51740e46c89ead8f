"""Eigenpair-preserving graph surgery and interlacing verification.

Removing an edge whose endpoints carry nonzero values of an eigenfunction,
while compensating both endpoint potentials with the terms the edge used to
contribute, keeps that eigenpair intact; removing a vertex where the
eigenfunction vanishes, while moving its edge weights into the neighbors'
potentials, does the same. Each removal shifts the rest of the spectrum in
a controlled way, and the verify_* functions check those interlacing
patterns on full before/after spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from ._unionfind import UnionFind
from .core import (EigenpairCertificate, Operator, VertexFunction,
                   WeightedGraph, connected_components, induced_subgraph,
                   is_forest, phi, residual)
from .nodal import ZERO_BAND_REL, analyze, sign_pattern
from .treespec import Spectrum


@dataclass(frozen=True)
class SurgeryStep:
    """Record of one removal: what went, the ratio used, and the potential
    compensation applied per vertex id."""

    kind: str  # "edge" | "node"
    target: tuple
    alpha: float | None
    kappa_deltas: dict
    removed_weight: float | None
    before: Operator
    after: Operator


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    checked: int
    failures: tuple


def remove_edge(H: Operator, cert: EigenpairCertificate, e0) -> tuple[Operator, SurgeryStep]:
    """Remove edge ``e0`` = (u0, v0), compensating both potentials so the
    certified eigenpair survives on the smaller graph.

    With alpha = f(v0)/f(u0), u0's potential grows by
    omega * phi(1 - alpha) and v0's by omega * phi(1 - 1/alpha). Both
    endpoint values must sit outside the zero band.
    """
    g = H.graph
    u0, v0 = e0
    iu = g.index_of(u0)
    iv = g.index_of(v0)
    w = None
    for j, wj in g.adj[iu]:
        if j == iv:
            w = wj
            break
    if w is None:
        raise ValueError(f"no edge between {u0!r} and {v0!r}")
    x = cert.function.values
    if len(x) != g.n:
        raise ValueError("certificate function does not match the graph")
    band = ZERO_BAND_REL * float(max(abs(x.min()), abs(x.max())))
    fu, fv = float(x[iu]), float(x[iv])
    if abs(fu) <= band or abs(fv) <= band:
        raise ValueError("edge removal needs nonzero values at both endpoints")
    alpha = fv / fu
    d_u = w * phi(1.0 - alpha, H.p)
    d_v = w * phi(1.0 - 1.0 / alpha, H.p)
    kappa = g.kappa.copy()
    kappa[iu] += d_u
    kappa[iv] += d_v
    vertices = [(g.ids[i], float(g.rho[i]), float(kappa[i])) for i in range(g.n)]
    edges = [(g.ids[i], g.ids[j], wj) for i, j, wj in g.edges
             if {i, j} != {iu, iv}]
    H2 = Operator(WeightedGraph(vertices, edges), H.p)
    step = SurgeryStep(kind="edge", target=(u0, v0), alpha=alpha,
                       kappa_deltas={u0: d_u, v0: d_v}, removed_weight=w,
                       before=H, after=H2)
    return H2, step


def remove_node(H: Operator, u0) -> Operator:
    """Remove vertex ``u0``, folding each incident edge weight into the
    neighbor's potential.

    Eigenpairs whose function vanishes at u0 survive by restriction; the
    caller is trusted on that point since no function is involved here.
    """
    g = H.graph
    iu = g.index_of(u0)
    if g.n == 1:
        raise ValueError("cannot remove the last vertex")
    delta = {j: wj for j, wj in g.adj[iu]}
    keep = [i for i in range(g.n) if i != iu]
    return Operator(induced_subgraph(g, keep, delta), H.p)


def _slack(x: float) -> float:
    return 1e-8 * max(1.0, abs(x))


def verify_weyl_edge(spec_before: Spectrum, spec_after: Spectrum,
                     alpha_sign: float) -> CheckReport:
    """Check the one-sided shift pattern of a compensated edge removal.

    With eta the after-values and lambda the before-values, a negative
    ratio alpha forces eta_{k-1} <= lambda_k <= eta_k, a positive one
    eta_k <= lambda_k <= eta_{k+1}, for every k (missing neighbors count as
    -inf / +inf).
    """
    lam = spec_before.flat()
    eta = spec_after.flat()
    if len(lam) != len(eta):
        raise ValueError("edge removal must preserve the vertex count")
    if alpha_sign == 0 or not math.isfinite(alpha_sign):
        raise ValueError("alpha must have a definite sign")
    neg = alpha_sign < 0
    failures = []
    checked = 0
    n = len(lam)
    for k in range(1, n + 1):
        lk = lam[k - 1]
        sl = _slack(lk)
        if neg:
            lo = eta[k - 2] if k >= 2 else -math.inf
            hi = eta[k - 1]
        else:
            lo = eta[k - 1]
            hi = eta[k] if k <= n - 1 else math.inf
        checked += 1
        if not (lo - sl <= lk <= hi + sl):
            failures.append(
                f"value {k}: {lk} outside [{lo}, {hi}] after edge removal")
    return CheckReport(ok=not failures, checked=checked,
                       failures=tuple(failures))


def verify_weyl_nodes(spec_before: Spectrum, spec_after: Spectrum,
                      n: int) -> CheckReport:
    """Check the two-sided squeeze of removing ``n`` vertices:
    lambda_k <= eta_k <= lambda_{k+n} for every k on the smaller graph."""
    lam = spec_before.flat()
    eta = spec_after.flat()
    if len(eta) != len(lam) - n:
        raise ValueError(f"after-spectrum should be {n} values shorter")
    failures = []
    checked = 0
    for k in range(1, len(eta) + 1):
        ek = eta[k - 1]
        sl = _slack(ek)
        lo = lam[k - 1]
        hi = lam[k + n - 1]
        checked += 1
        if not (lo - sl <= ek <= hi + sl):
            failures.append(
                f"value {k}: {ek} outside [{lo}, {hi}] after removing {n} vertices")
    return CheckReport(ok=not failures, checked=checked,
                       failures=tuple(failures))


@dataclass(frozen=True)
class ReductionReport:
    """Outcome of cutting a graph into the nodal domains of an eigenpair."""

    eigenvalue: float
    nu: int
    components: tuple
    residual_after: float
    component_minima: tuple
    multiplicity_after: int | None
    steps: tuple


def reduce_to_nodal_union(H: Operator, cert: EigenpairCertificate,
                          first_tol: float = 1e-7) -> tuple[Operator, ReductionReport]:
    """Split the graph into the nodal domains of a certified eigenpair.

    Zero vertices are removed first (weights folded into neighbors), then
    every strict sign-change edge is cut with potential compensation. The
    components of the result are exactly the nodal domains; on each, the
    restricted function must be a first eigenfunction, and at p = 2 the
    eigenvalue's multiplicity on the union must equal the domain count.
    Violations raise AssertionError.
    """
    if not cert.valid:
        raise ValueError("certificate residual exceeds its tolerance")
    g = H.graph
    lam = cert.eigenvalue
    rep = analyze(g, cert.function)
    if rep.nu == 0:
        raise ValueError("the certified function vanishes identically")
    s, _band = sign_pattern(g, cert.function)
    fmap = cert.function.as_mapping(g)

    steps = []
    H1 = H
    for i in range(g.n):
        if s[i] == 0:
            before = H1
            H1 = remove_node(H1, g.ids[i])
            steps.append(SurgeryStep(kind="node", target=(g.ids[i],),
                                     alpha=None, kappa_deltas={},
                                     removed_weight=None, before=before,
                                     after=H1))
    f1 = VertexFunction.from_mapping(
        H1.graph, {vid: fmap[vid] for vid in H1.graph.ids})
    cert1 = EigenpairCertificate(lam, f1, residual(H1, f1, lam), cert.tol)

    cut = [(g.ids[i], g.ids[j]) for i, j, _w in g.edges
           if s[i] != 0 and s[j] != 0 and s[i] != s[j]]
    H2 = H1
    for e in cut:
        H2, step = remove_edge(H2, cert1, e)
        steps.append(step)
    res_after = residual(H2, f1, lam)

    comps = connected_components(H2.graph)
    if len(comps) != rep.nu:
        raise AssertionError(
            f"{len(comps)} components after the cuts, expected {rep.nu} domains")
    smap = {g.ids[i]: int(s[i]) for i in range(g.n)}
    minima = []
    comp_ids = []
    for comp in comps:
        ids = [H2.graph.ids[i] for i in comp]
        comp_ids.append(tuple(ids))
        signs_here = {smap[vid] for vid in ids}
        if len(signs_here) != 1 or 0 in signs_here:
            raise AssertionError("a component mixes signs after the cuts")
        sub = Operator(induced_subgraph(H2.graph, comp), H.p)
        lam1 = _first_value(sub, first_tol)
        minima.append(lam1)
        if abs(lam1 - lam) > _slack(lam):
            raise AssertionError(
                f"component minimum {lam1} != eigenvalue {lam}")
    mult_after = None
    if H.p == 2.0:
        from .oracle import p2_spectrum
        entry = p2_spectrum(H2).find(lam)
        mult_after = entry.mult
        if mult_after != rep.nu:
            raise AssertionError(
                f"multiplicity {mult_after} after the cuts, expected {rep.nu}")
    report = ReductionReport(eigenvalue=lam, nu=rep.nu,
                             components=tuple(comp_ids),
                             residual_after=res_after,
                             component_minima=tuple(minima),
                             multiplicity_after=mult_after,
                             steps=tuple(steps))
    return H2, report


def _first_value(H: Operator, tol: float) -> float:
    """Smallest eigenvalue of a connected operator: dense route at p = 2,
    descent route otherwise — deliberately independent of the tree
    machinery so the reduction acts as a cross-check."""
    if H.p == 2.0:
        from .oracle import p2_spectrum
        return p2_spectrum(H).entries[0].value
    from .core import first_eigenpair
    return first_eigenpair(H, tol=tol).eigenvalue


def reduce_to_forest(H: Operator, cert: EigenpairCertificate,
                     seed: int = 0) -> tuple[Operator, list[SurgeryStep]]:
    """Cut a certified eigenpair's graph down to a forest.

    Zero vertices go first; the surviving function is nowhere zero, so any
    non-spanning-tree edge can be cut with compensation. The chosen forest
    depends on ``seed`` only.
    """
    if not cert.valid:
        raise ValueError("certificate residual exceeds its tolerance")
    g = H.graph
    s, _band = sign_pattern(g, cert.function)
    fmap = cert.function.as_mapping(g)
    steps = []
    H1 = H
    for i in range(g.n):
        if s[i] == 0:
            before = H1
            H1 = remove_node(H1, g.ids[i])
            steps.append(SurgeryStep(kind="node", target=(g.ids[i],),
                                     alpha=None, kappa_deltas={},
                                     removed_weight=None, before=before,
                                     after=H1))
    f1 = VertexFunction.from_mapping(
        H1.graph, {vid: fmap[vid] for vid in H1.graph.ids})
    cert1 = EigenpairCertificate(cert.eigenvalue, f1,
                                 residual(H1, f1, cert.eigenvalue), cert.tol)
    g1 = H1.graph
    order = list(range(len(g1.edges)))
    Random(seed).shuffle(order)
    uf = UnionFind(g1.n)
    extra = []
    for idx in order:
        i, j, _w = g1.edges[idx]
        if not uf.union(i, j):
            extra.append((g1.ids[i], g1.ids[j]))
    H2 = H1
    for e in extra:
        H2, step = remove_edge(H2, cert1, e)
        steps.append(step)
    if not is_forest(H2.graph):
        raise AssertionError("cutting the extra edges did not yield a forest")
    return H2, steps
