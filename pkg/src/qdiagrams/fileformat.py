"""JSON interchange format for diagrams.

Complex numbers are ``[re, im]`` pairs; matrices are lists of rows of such
pairs.  Edge endpoints are ``{"node": id, "port": k}`` or
``{"boundary": "input" | "output", "port": k}``; the side of a node port is
implied by the position (``from`` is an output port, ``to`` an input port)
unless an explicit ``"side"`` is given.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .diagram import Box, Diagram, Discard, Edge, Effect, End, MixedPrep, Spider, StatePrep, Wire
from .errors import ArgumentError, ParseError

FORMAT_VERSION = 1

_TOP = {"version", "scalar", "inputs", "outputs", "nodes", "edges"}
_NODE = {
    "spider": {"basis", "phases", "inputs", "outputs", "doubled", "conj"},
    "box": {"name", "matrix", "kraus", "in_dims", "out_dims", "doubled", "conj_arrows"},
    "state": {"vector", "doubled", "conj_arrows"},
    "effect": {"covector", "doubled", "conj_arrows"},
    "discard": {"dim", "weight"},
    "mixed": {"rho"},
}
_COMMON = {"id", "kind", "tag"}
_EDGE = {"id", "from", "to", "thickness", "arrow"}
_ENDPOINT = {"node", "boundary", "port", "side"}
_WIRE = {"thickness", "dim"}


# ---------------------------------------------------------------- encoding


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _vec(v) -> list:
    return [_c(z) for z in np.asarray(v).ravel()]


def _mat(m) -> list:
    return [[_c(z) for z in row] for row in np.asarray(m)]


def _thickness(flag: bool) -> str:
    return "thick" if flag else "thin"


def _node_dict(nid: int, g, tag) -> dict:
    rec: dict = {"id": nid, "kind": g.kind}
    if tag is not None:
        rec["tag"] = tag
    if isinstance(g, Spider):
        rec.update(basis=g.basis, phases=list(g.phases), inputs=[_thickness(t) for t in g.thick_in],
                   outputs=[_thickness(t) for t in g.thick_out], doubled=g.doubled, conj=g.conj)
    elif isinstance(g, Box):
        rec["name"] = g.name
        if len(g.kraus) == 1 and not g.doubled:
            rec["matrix"] = _mat(g.kraus[0])
        else:
            rec["kraus"] = [_mat(k) for k in g.kraus]
        rec.update(in_dims=list(g.in_dims), out_dims=list(g.out_dims), doubled=g.doubled,
                   conj_arrows=g.conj_arrows)
    elif isinstance(g, StatePrep):
        rec.update(vector=_vec(g.vector), doubled=g.doubled, conj_arrows=g.conj_arrows)
    elif isinstance(g, Effect):
        rec.update(covector=_vec(g.covector), doubled=g.doubled, conj_arrows=g.conj_arrows)
    elif isinstance(g, Discard):
        rec["dim"] = g.dim
        if g.weight is not None:
            rec["weight"] = _mat(g.weight)
    elif isinstance(g, MixedPrep):
        rec["rho"] = _mat(g.rho)
    return rec


def _endpoint(end: End, position: str) -> dict:
    if end.node is None:
        rec = {"boundary": "input" if end.side == "in" else "output", "port": end.index}
        natural = "in" if position == "from" else "out"
    else:
        rec = {"node": end.node, "port": end.index}
        natural = "out" if position == "from" else "in"
    if end.side != natural:
        rec["side"] = end.side
    return rec


def to_dict(d: Diagram) -> dict:
    return {
        "version": FORMAT_VERSION,
        "scalar": {"re": d.scalar.real, "im": d.scalar.imag},
        "inputs": [{"thickness": _thickness(w.thick), "dim": w.dim} for w in d.inputs],
        "outputs": [{"thickness": _thickness(w.thick), "dim": w.dim} for w in d.outputs],
        "nodes": [_node_dict(nid, d.nodes[nid], d.tags.get(nid)) for nid in sorted(d.nodes)],
        "edges": [
            {"id": eid, "from": _endpoint(e.a, "from"), "to": _endpoint(e.b, "to"),
             "thickness": _thickness(e.thick), "arrow": "forward" if e.arrow else "backward"}
            for eid, e in sorted(d.edges.items())
        ],
    }


def dumps(d: Diagram) -> str:
    return json.dumps(to_dict(d), indent=2, ensure_ascii=False)


def save(d: Diagram, path) -> None:
    Path(path).write_text(dumps(d) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- decoding


def _keys(rec, allowed: set, where: str, strict: bool) -> None:
    if not isinstance(rec, dict):
        raise ParseError(f"{where}: expected an object")
    if strict:
        extra = set(rec) - allowed
        if extra:
            raise ParseError(f"{where}: unknown field(s) {sorted(extra)}")


def _req(rec: dict, key: str, where: str):
    if key not in rec:
        raise ParseError(f"{where}: missing field {key!r}")
    return rec[key]


def _pc(x, where: str) -> complex:
    if not (isinstance(x, (list, tuple)) and len(x) == 2
            and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in x)):
        raise ParseError(f"{where}: expected a [re, im] pair, got {x!r}")
    return complex(x[0], x[1])


def _pvec(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ParseError(f"{where}: expected a non-empty list of [re, im] pairs")
    return np.array([_pc(x, where) for x in v])


def _pmat(m, where: str) -> np.ndarray:
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ParseError(f"{where}: expected a matrix of [re, im] pairs")
    rows = [[_pc(x, where) for x in r] for r in m]
    if len({len(r) for r in rows}) != 1:
        raise ParseError(f"{where}: ragged matrix")
    return np.array(rows)


def _pthick(x, where: str) -> bool:
    if x not in ("thin", "thick"):
        raise ParseError(f"{where}: thickness must be 'thin' or 'thick', got {x!r}")
    return x == "thick"


def _pbool(rec: dict, key: str, where: str) -> bool:
    v = rec.get(key, False)
    if not isinstance(v, bool):
        raise ParseError(f"{where}: {key!r} must be true or false")
    return v


def _pint(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 0:
        raise ParseError(f"{where}: expected a non-negative integer, got {x!r}")
    return x


def _pdims(x, where: str) -> tuple:
    if not isinstance(x, list):
        raise ParseError(f"{where}: expected a list of dimensions")
    return tuple(_pint(t, where) for t in x)


def _node(rec: dict, strict: bool):
    where = f"node {rec.get('id', '?')}"
    kind = _req(rec, "kind", where)
    if kind not in _NODE:
        raise ParseError(f"{where}: unknown kind {kind!r}")
    _keys(rec, _NODE[kind] | _COMMON, where, strict)
    if kind == "spider":
        phases = _req(rec, "phases", where)
        if not isinstance(phases, list) or not all(isinstance(p, (int, float)) and not isinstance(p, bool)
                                                   for p in phases):
            raise ParseError(f"{where}: phases must be a list of numbers")
        ins = [_pthick(t, where) for t in rec.get("inputs", [])]
        outs = [_pthick(t, where) for t in rec.get("outputs", [])]
        basis = _req(rec, "basis", where)
        if not isinstance(basis, str):
            raise ParseError(f"{where}: basis must be a string")
        return Spider(basis, tuple(phases), tuple(ins), tuple(outs),
                      _pbool(rec, "doubled", where), _pbool(rec, "conj", where))
    if kind == "box":
        if ("matrix" in rec) == ("kraus" in rec):
            raise ParseError(f"{where}: give exactly one of 'matrix' or 'kraus'")
        if "matrix" in rec:
            ks = (_pmat(rec["matrix"], where),)
        else:
            if not isinstance(rec["kraus"], list) or not rec["kraus"]:
                raise ParseError(f"{where}: 'kraus' must be a non-empty list of matrices")
            ks = tuple(_pmat(k, where) for k in rec["kraus"])
        name = rec.get("name", "A")
        if not isinstance(name, str):
            raise ParseError(f"{where}: name must be a string")
        in_dims = _pdims(rec["in_dims"], where) if "in_dims" in rec else (ks[0].shape[1],)
        out_dims = _pdims(rec["out_dims"], where) if "out_dims" in rec else (ks[0].shape[0],)
        return Box(name, ks, in_dims, out_dims, _pbool(rec, "doubled", where), _pbool(rec, "conj_arrows", where))
    if kind == "state":
        return StatePrep(_pvec(_req(rec, "vector", where), where), _pbool(rec, "doubled", where),
                         _pbool(rec, "conj_arrows", where))
    if kind == "effect":
        return Effect(_pvec(_req(rec, "covector", where), where), _pbool(rec, "doubled", where),
                      _pbool(rec, "conj_arrows", where))
    if kind == "discard":
        w = rec.get("weight")
        dim = _pint(rec.get("dim", 2), where)
        return Discard(dim, None if w is None else _pmat(w, where))
    return MixedPrep(_pmat(_req(rec, "rho", where), where))


def _end(rec, position: str, where: str, strict: bool) -> End:
    _keys(rec, _ENDPOINT, where, strict)
    port = _pint(_req(rec, "port", where), where)
    if "node" in rec and "boundary" in rec:
        raise ParseError(f"{where}: endpoint names both a node and a boundary")
    if "node" in rec:
        nid = _pint(rec["node"], where)
        side = rec.get("side", "out" if position == "from" else "in")
    elif "boundary" in rec:
        b = rec["boundary"]
        if b not in ("input", "output"):
            raise ParseError(f"{where}: boundary must be 'input' or 'output'")
        nid = None
        side = rec.get("side", "in" if b == "input" else "out")
    else:
        raise ParseError(f"{where}: endpoint needs 'node' or 'boundary'")
    if side not in ("in", "out"):
        raise ParseError(f"{where}: side must be 'in' or 'out'")
    return End(nid, side, port)


def from_dict(obj, strict: bool = True) -> Diagram:
    _keys(obj, _TOP, "document", strict)
    version = _req(obj, "version", "document")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version!r}")
    sc = obj.get("scalar", {"re": 1.0, "im": 0.0})
    _keys(sc, {"re", "im"}, "scalar", strict)
    try:
        scalar = complex(float(sc.get("re", 0.0)), float(sc.get("im", 0.0)))
    except (TypeError, ValueError):
        raise ParseError("scalar: re and im must be numbers") from None
    wires = {}
    for side in ("inputs", "outputs"):
        lst = obj.get(side, [])
        if not isinstance(lst, list):
            raise ParseError(f"{side}: expected a list")
        ws = []
        for k, w in enumerate(lst):
            _keys(w, _WIRE, f"{side}[{k}]", strict)
            ws.append(Wire(_pthick(_req(w, "thickness", f"{side}[{k}]"), f"{side}[{k}]"),
                           _pint(w.get("dim", 2), f"{side}[{k}]")))
        wires[side] = ws
    try:
        d = Diagram(wires["inputs"], wires["outputs"], scalar)
    except ArgumentError as exc:
        raise ParseError(str(exc)) from None
    nodes = obj.get("nodes", [])
    edges = obj.get("edges", [])
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise ParseError("nodes and edges must be lists")
    for rec in nodes:
        if not isinstance(rec, dict):
            raise ParseError("node records must be objects")
        nid = _pint(_req(rec, "id", "node"), "node id")
        try:
            g = _node(rec, strict)
            tag = rec.get("tag")
            if tag is not None and not isinstance(tag, str):
                raise ParseError(f"node {nid}: tag must be a string")
            d.add(g, tag, node_id=nid)
        except ArgumentError as exc:
            raise ParseError(f"node {nid}: {exc}") from None
    for k, rec in enumerate(edges):
        where = f"edge {rec.get('id', k) if isinstance(rec, dict) else k}"
        _keys(rec, _EDGE, where, strict)
        eid = _pint(rec.get("id", k), where)
        if eid in d.edges:
            raise ParseError(f"{where}: duplicate edge id")
        a = _end(_req(rec, "from", where), "from", where, strict)
        b = _end(_req(rec, "to", where), "to", where, strict)
        thick = _pthick(_req(rec, "thickness", where), where)
        arrow = rec.get("arrow", "forward")
        if arrow not in ("forward", "backward"):
            raise ParseError(f"{where}: arrow must be 'forward' or 'backward'")
        d.edges[eid] = Edge(a, b, thick, arrow == "forward")
    return d


def loads(text: str, strict: bool = True) -> Diagram:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    return from_dict(obj, strict)


def load(path, strict: bool = True) -> Diagram:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text, strict)
