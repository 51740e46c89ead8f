"""Command-line interface: JSON graph documents in, one JSON report out.

Verbs:
  spectrum   eigenvalues (optionally eigenbases) of the document's operator
  oracle     dense p = 2 reference spectrum
  nodal      nodal-domain report for the document's function
  check      nodal bounds and removal interlacing for certified eigenpairs
  surgery    eigenpair-preserving edge/vertex removal
  gen        seeded example documents (tree | graph | path | star | cycle)

Exit codes: 0 success, 2 bad input, 3 outside the implemented routes,
4 violated invariant. stdout carries exactly one JSON document; everything
else goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import nodal as nodal_mod
from . import oracle as oracle_mod
from . import surgery as surgery_mod
from . import treespec
from .core import (EigenpairCertificate, Operator, VertexFunction,
                   WeightedGraph, _id_key, connected_components, is_forest,
                   residual)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPABILITY = 3
EXIT_VIOLATION = 4


class CapabilityError(Exception):
    """Valid request, but outside what any implemented route covers."""


DOC_KEYS = {"p", "vertices", "edges", "boundary", "function"}
VERTEX_KEYS = {"id", "rho", "kappa"}
EDGE_KEYS = {"u", "v", "omega"}


def _load_json(path: str):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def _check_id(raw):
    if isinstance(raw, bool) or not isinstance(raw, (int, str)):
        raise ValueError(f"vertex id must be an integer or string, got {raw!r}")
    return raw


def _warn_unknown(obj: dict, known: set, what: str, strict: bool):
    unknown = sorted(set(obj) - known)
    if unknown:
        msg = f"unknown {what} fields: {', '.join(unknown)}"
        if strict:
            raise ValueError(msg)
        print(f"warning: {msg}", file=sys.stderr)


def parse_document(doc, strict: bool = False):
    """Graph document -> (graph, p or None, boundary ids, function or None)."""
    if not isinstance(doc, dict):
        raise ValueError("document must be a JSON object")
    _warn_unknown(doc, DOC_KEYS, "document", strict)
    if "vertices" not in doc or "edges" not in doc:
        raise ValueError("document needs 'vertices' and 'edges'")
    vertices = []
    for obj in doc["vertices"]:
        if not isinstance(obj, dict):
            raise ValueError("vertex entries must be objects")
        _warn_unknown(obj, VERTEX_KEYS, "vertex", strict)
        if "id" not in obj:
            raise ValueError("every vertex needs an 'id'")
        vertices.append((_check_id(obj["id"]), float(obj.get("rho", 1.0)),
                         float(obj.get("kappa", 0.0))))
    edges = []
    for obj in doc["edges"]:
        if not isinstance(obj, dict):
            raise ValueError("edge entries must be objects")
        _warn_unknown(obj, EDGE_KEYS, "edge", strict)
        if "u" not in obj or "v" not in obj:
            raise ValueError("every edge needs 'u' and 'v'")
        edges.append((_check_id(obj["u"]), _check_id(obj["v"]),
                      float(obj.get("omega", 1.0))))
    g = WeightedGraph(vertices, edges)
    p = float(doc["p"]) if "p" in doc and doc["p"] is not None else None
    boundary = [_check_id(b) for b in doc.get("boundary", [])]
    for b in boundary:
        g.index_of(b)
    func = _function_from_json(g, doc["function"]) if "function" in doc else None
    return g, p, boundary, func


def _function_from_json(g: WeightedGraph, obj) -> VertexFunction:
    if not isinstance(obj, dict):
        raise ValueError("'function' must map vertex ids to numbers")
    bykey = {}
    for vid in g.ids:
        key = str(vid)
        if key in bykey:
            raise ValueError(f"ids {bykey[key]!r} and {vid!r} collide as JSON keys")
        bykey[key] = vid
    mapping = {}
    for key, val in obj.items():
        if key not in bykey:
            raise ValueError(f"function key {key!r} matches no vertex")
        mapping[bykey[key]] = float(val)
    return VertexFunction.from_mapping(g, mapping)


def _function_json(g: WeightedGraph, f: VertexFunction) -> dict:
    pairs = sorted(f.as_mapping(g).items(), key=lambda kv: _id_key(kv[0]))
    return {str(vid): float(val) for vid, val in pairs}


def graph_document(g: WeightedGraph, p=None, function=None, boundary=None) -> dict:
    """Canonical document for a graph: vertices and edges in sorted id order."""
    doc = {}
    if p is not None:
        doc["p"] = float(p)
    order = sorted(range(g.n), key=lambda i: _id_key(g.ids[i]))
    doc["vertices"] = [{"id": g.ids[i], "rho": float(g.rho[i]),
                        "kappa": float(g.kappa[i])} for i in order]
    items = []
    for i, j, w in g.edges:
        a, b = g.ids[i], g.ids[j]
        if _id_key(b) < _id_key(a):
            a, b = b, a
        items.append((a, b, float(w)))
    items.sort(key=lambda t: (_id_key(t[0]), _id_key(t[1])))
    doc["edges"] = [{"u": a, "v": b, "omega": w} for a, b, w in items]
    if boundary:
        doc["boundary"] = sorted(boundary, key=_id_key)
    if function is not None:
        doc["function"] = _function_json(g, function)
    return doc


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _resolve_p(doc_p, arg_p) -> float:
    if arg_p is not None:
        return float(arg_p)
    if doc_p is not None:
        return float(doc_p)
    raise ValueError("no p: the document has none and --p was not given")


def full_spectrum(H: Operator) -> treespec.Spectrum:
    """Complete spectrum by whichever route covers the operator."""
    if H.p == 2.0:
        return oracle_mod.p2_spectrum(H)
    if is_forest(H.graph):
        return treespec.tree_spectrum(H)
    raise CapabilityError(
        "exact spectra are available for p = 2 (any graph) or forests (any p)")


def _eigenpairs_of(H: Operator, spec: treespec.Spectrum):
    """(value, function) for a full eigenbasis, by the spectrum's route."""
    pairs = []
    for e in spec.entries:
        if H.p == 2.0:
            funcs = list(e.basis)
        else:
            funcs = treespec.forest_eigenbasis(H, e.value)
        if len(funcs) != e.mult:
            raise AssertionError(
                f"{len(funcs)} eigenfunctions for multiplicity {e.mult}")
        pairs.extend((e.value, f) for f in funcs)
    return pairs


def cmd_spectrum(args) -> int:
    g, p, _boundary, _func = parse_document(_load_json(args.file), args.strict)
    p = _resolve_p(p, args.p)
    H = Operator(g, p)
    spec = full_spectrum(H)
    out = {"p": p, "n": g.n,
           "spectrum": [{"value": e.value, "mult": e.mult} for e in spec.entries]}
    if args.eigenbasis:
        basis_out = []
        for value, funcs in _grouped(_eigenpairs_of(H, spec)):
            rows = []
            for f in funcs:
                r = residual(H, f, value)
                if r > args.tol:
                    raise AssertionError(
                        f"reconstructed eigenfunction at {value} has residual {r}")
                rows.append(_function_json(g, f))
            basis_out.append(rows)
        out["eigenbasis"] = basis_out
    _emit(out)
    return EXIT_OK


def _grouped(pairs):
    groups: list = []
    for value, f in pairs:
        if groups and groups[-1][0] == value:
            groups[-1][1].append(f)
        else:
            groups.append((value, [f]))
    return groups


def cmd_oracle(args) -> int:
    g, p, _boundary, _func = parse_document(_load_json(args.file), args.strict)
    p = _resolve_p(p, args.p)
    if p != 2.0:
        raise CapabilityError("the dense reference route only covers p = 2")
    H = Operator(g, 2.0)
    spec = oracle_mod.p2_spectrum(H)
    out = {"p": 2.0, "n": g.n,
           "spectrum": [{"value": e.value, "mult": e.mult} for e in spec.entries]}
    if args.eigenbasis:
        out["eigenbasis"] = [[_function_json(g, f) for f in e.basis]
                             for e in spec.entries]
    _emit(out)
    return EXIT_OK


def cmd_nodal(args) -> int:
    g, _p, _boundary, func = parse_document(_load_json(args.file), args.strict)
    if args.function is not None:
        func = _function_from_json(g, json.loads(args.function))
    if func is None:
        raise ValueError("nodal analysis needs a document 'function' or --function")
    rep = nodal_mod.analyze(g, func)
    bip, info = nodal_mod.is_bipartite(g)
    out = {
        "nu": rep.nu, "zeta": rep.zeta, "z": rep.z, "ez": rep.ez, "l": rep.l,
        "beta": rep.beta, "c": rep.c, "beta_prime": rep.beta_prime,
        "zero_band": rep.zero_band,
        "domains": [{"sign": sg, "vertices": list(vs)} for sg, vs in rep.domains],
        "sign_change_identity": {
            "lhs": rep.zeta,
            "rhs": len(g.edges) - rep.ez + rep.z - g.n + rep.nu - rep.l,
            "holds": True,
        },
        "bipartite": bip,
    }
    if bip:
        out["sides"] = [list(info[0]), list(info[1])]
    else:
        out["odd_cycle"] = list(info)
    _emit(out)
    return EXIT_OK


def _bound_row(lam: float, rep: nodal_mod.BoundReport) -> dict:
    row = {"name": rep.kind, "lambda": lam, "bound": rep.bound,
           "observed": rep.observed, "pass": rep.satisfied}
    if rep.k is not None:
        row["k"] = rep.k
    if rep.m is not None:
        row["m"] = rep.m
    return row


def cmd_check(args) -> int:
    g, p, _boundary, func = parse_document(_load_json(args.file), args.strict)
    p = _resolve_p(p, args.p)
    H = Operator(g, p)
    tol = args.tol
    which = args.bounds
    spec = full_spectrum(H)

    if args.all:
        pairs = _eigenpairs_of(H, spec)
    else:
        if args.lam is None:
            raise ValueError("check needs --lambda (or --all)")
        if args.function is not None:
            func = _function_from_json(g, json.loads(args.function))
        if func is None:
            raise ValueError("check needs a function (--function or document)")
        r = residual(H, func, args.lam)
        if r > tol:
            raise ValueError(
                f"not an eigenpair: residual {r:.3e} exceeds tol {tol:.3e}")
        pairs = [(args.lam, func)]

    position_bounds = which in ("upper", "lower", "all")
    if position_bounds and len(connected_components(g)) != 1:
        raise ValueError(
            "position bounds need a connected graph; use --bounds weyl")

    rows = []
    ok_all = True
    for lam, f in pairs:
        cert = EigenpairCertificate(lam, f, residual(H, f, lam), tol)
        if which in ("upper", "all"):
            for rep in nodal_mod.check_upper(H, cert, spec):
                rows.append(_bound_row(lam, rep))
                ok_all = ok_all and rep.satisfied
        if which in ("lower", "all"):
            for rep in nodal_mod.check_lower(H, cert, spec):
                rows.append(_bound_row(lam, rep))
                ok_all = ok_all and rep.satisfied
        if which in ("weyl", "all"):
            for row in _weyl_edge_rows(H, cert, spec):
                rows.append(row)
                ok_all = ok_all and row["pass"]
    if which in ("weyl", "all") and g.n > 1:
        for i in range(g.n):
            vid = g.ids[i]
            H2 = surgery_mod.remove_node(H, vid)
            rep = surgery_mod.verify_weyl_nodes(spec, full_spectrum(H2), 1)
            rows.append({"name": "weyl-node", "vertex": vid, "pass": rep.ok,
                         "checked": rep.checked, "failures": list(rep.failures)})
            ok_all = ok_all and rep.ok
    _emit({"p": p, "checks": rows, "all_pass": ok_all})
    return EXIT_OK if ok_all else EXIT_VIOLATION


def _weyl_edge_rows(H: Operator, cert: EigenpairCertificate,
                    spec: treespec.Spectrum):
    g = H.graph
    x = cert.function.values
    band = nodal_mod.ZERO_BAND_REL * float(max(abs(x.max()), abs(x.min())))
    rows = []
    for i, j, _w in g.edges:
        if abs(x[i]) <= band or abs(x[j]) <= band:
            continue
        u, v = g.ids[i], g.ids[j]
        H2, step = surgery_mod.remove_edge(H, cert, (u, v))
        rep = surgery_mod.verify_weyl_edge(spec, full_spectrum(H2), step.alpha)
        rows.append({"name": "weyl-edge", "edge": [u, v],
                     "lambda": cert.eigenvalue, "alpha": step.alpha,
                     "pass": rep.ok, "checked": rep.checked,
                     "failures": list(rep.failures)})
    return rows


def _parse_vertex_id(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return text


def cmd_surgery(args) -> int:
    g, p, _boundary, func = parse_document(_load_json(args.file), args.strict)
    p = _resolve_p(p, args.p)
    H = Operator(g, p)
    if args.function is not None:
        func = _function_from_json(g, json.loads(args.function))
    edges = []
    for spec_str in args.remove_edge or []:
        parts = [s for s in spec_str.split(",") if s.strip()]
        if len(parts) != 2:
            raise ValueError(f"--remove-edge wants 'u,v', got {spec_str!r}")
        edges.append((_parse_vertex_id(parts[0]), _parse_vertex_id(parts[1])))
    nodes = [_parse_vertex_id(s) for s in args.remove_node or []]
    if not edges and not nodes:
        raise ValueError("nothing to do: give --remove-edge and/or --remove-node")
    if edges and func is None:
        raise ValueError("edge removal needs a function (--function or document)")

    fmap = func.as_mapping(g) if func is not None else None
    lam = args.lam
    for u, v in edges:
        f_now = VertexFunction.from_mapping(
            H.graph, {vid: fmap[vid] for vid in H.graph.ids})
        cert = EigenpairCertificate(lam if lam is not None else 0.0, f_now,
                                    0.0, args.tol)
        H, step = surgery_mod.remove_edge(H, cert, (u, v))
        d_u, d_v = step.kappa_deltas[u], step.kappa_deltas[v]
        print(f"removed edge ({u!r}, {v!r}): alpha={step.alpha:.12g}, "
              f"kappa[{u!r}] += {d_u:.12g}, kappa[{v!r}] += {d_v:.12g}",
              file=sys.stderr)
    for u in nodes:
        if fmap is not None:
            vals = [abs(fmap[vid]) for vid in H.graph.ids]
            band = nodal_mod.ZERO_BAND_REL * max(vals)
            if abs(fmap[u]) > band:
                raise ValueError(
                    f"the function does not vanish at {u!r}; removal would "
                    f"break the eigenpair")
        iu = H.graph.index_of(u)
        deltas = {H.graph.ids[j]: wj for j, wj in H.graph.adj[iu]}
        H = surgery_mod.remove_node(H, u)
        if fmap is not None:
            del fmap[u]
        moved = ", ".join(f"kappa[{vid!r}] += {w:.12g}"
                          for vid, w in sorted(deltas.items(),
                                               key=lambda kv: _id_key(kv[0])))
        print(f"removed vertex {u!r}: {moved}", file=sys.stderr)

    f_final = None
    if fmap is not None:
        f_final = VertexFunction.from_mapping(
            H.graph, {vid: fmap[vid] for vid in H.graph.ids})
        if lam is not None:
            res = residual(H, f_final, lam)
            print(f"residual after surgery: {res:.3e}", file=sys.stderr)
    _emit(graph_document(H.graph, p=p, function=f_final))
    return EXIT_OK


def gen_graph(kind: str, n: int, rng: random.Random,
              weighted: bool = False) -> WeightedGraph:
    """Deterministic example graphs; all randomness comes from ``rng``."""
    if n < 1:
        raise ValueError("need at least one vertex")
    if weighted:
        vertices = [(i, rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0))
                    for i in range(n)]
    else:
        vertices = [(i, 1.0, 0.0) for i in range(n)]
    if kind == "path":
        eids = [(i - 1, i) for i in range(1, n)]
    elif kind == "star":
        eids = [(0, i) for i in range(1, n)]
    elif kind == "cycle":
        if n < 3:
            raise ValueError("a cycle needs at least three vertices")
        eids = [(i - 1, i) for i in range(1, n)] + [(n - 1, 0)]
    elif kind == "tree":
        eids = [(rng.randrange(i), i) for i in range(1, n)]
    elif kind == "graph":
        eids = [(rng.randrange(i), i) for i in range(1, n)]
        have = {frozenset(e) for e in eids}
        cands = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if frozenset((i, j)) not in have]
        rng.shuffle(cands)
        if cands:
            eids += cands[:rng.randint(1, max(1, n // 2))]
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    edges = [(u, v, rng.uniform(0.5, 2.0) if weighted else 1.0)
             for u, v in eids]
    return WeightedGraph(vertices, edges)


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    g = gen_graph(args.kind, args.n, rng, args.weighted)
    _emit(graph_document(g, p=2.0))
    print(f"seed: {args.seed}", file=sys.stderr)
    return EXIT_OK


def _add_common(sp, with_p: bool = True):
    sp.add_argument("file", help="graph document: a JSON path, or - for stdin")
    if with_p:
        sp.add_argument("--p", type=float, default=None,
                        help="override the document's p")
        sp.add_argument("--tol", type=float, default=1e-8,
                        help="residual / matching tolerance")
    sp.add_argument("--strict", action="store_true",
                    help="reject unknown document fields")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plap",
        description="spectral toolkit for the generalized graph p-Laplacian")
    sub = ap.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("spectrum", help="exact spectrum of the document")
    _add_common(sp)
    sp.add_argument("--eigenbasis", action="store_true",
                    help="also emit a full eigenbasis")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("oracle", help="dense p = 2 reference spectrum")
    _add_common(sp)
    sp.add_argument("--eigenbasis", action="store_true")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("nodal", help="nodal-domain report for a function")
    _add_common(sp, with_p=False)
    sp.add_argument("--function", default=None,
                    help="inline JSON function, overrides the document's")
    sp.set_defaults(func=cmd_nodal)

    sp = sub.add_parser("check", help="verify bounds for certified eigenpairs")
    _add_common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="eigenvalue to certify")
    sp.add_argument("--function", default=None,
                    help="inline JSON eigenfunction")
    sp.add_argument("--all", action="store_true",
                    help="check every eigenpair of a computed eigenbasis")
    sp.add_argument("--bounds", choices=["upper", "lower", "weyl", "all"],
                    default="all")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("surgery", help="remove edges/vertices, compensated")
    _add_common(sp)
    sp.add_argument("--remove-edge", action="append", metavar="U,V",
                    help="edge to remove (repeatable, applied in order)")
    sp.add_argument("--remove-node", action="append", metavar="U",
                    help="vertex to remove (repeatable, applied after edges)")
    sp.add_argument("--function", default=None,
                    help="inline JSON eigenfunction")
    sp.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="eigenvalue, for the residual report")
    sp.set_defaults(func=cmd_surgery)

    sp = sub.add_parser("gen", help="generate an example document")
    sp.add_argument("kind", choices=["tree", "graph", "path", "star", "cycle"])
    sp.add_argument("n", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--weighted", action="store_true",
                    help="random weights instead of unit data")
    sp.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"violated invariant: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
