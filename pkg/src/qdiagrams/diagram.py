"""Open-graph string diagrams with their structural functors."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

import networkx as nx
import numpy as np

from . import bases
from .errors import ArgumentError, BasisLookupError, CompositionError
from .tensor import as_scalar

PHASE_TOL = 1e-12


def _frozen_array(a, ndim: int | None = None) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if ndim is not None and arr.ndim != ndim:
        raise ArgumentError(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("payload entries must be finite")
    arr.setflags(write=False)
    return arr


def _wrap(theta: float) -> float:
    t = float(np.mod(theta, 2 * np.pi))
    return 0.0 if abs(t) < PHASE_TOL or abs(t - 2 * np.pi) < PHASE_TOL else t


# ---------------------------------------------------------------- generators

Port = tuple  # (thick: bool, dim: int)


@dataclass(frozen=True, eq=False)
class Spider:
    """∑_j e^{iα_j} |b_j⟩^{⊗n}⟨b_j|^{⊗m} in basis ``basis``.

    A non-doubled spider with some thick legs is a bastard spider.  With
    ``conj`` set the tensor is the entrywise conjugate.
    """

    basis: str
    phases: tuple
    thick_in: tuple = ()
    thick_out: tuple = ()
    doubled: bool = False
    conj: bool = False

    kind = "spider"

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        object.__setattr__(self, "thick_in", tuple(bool(t) for t in self.thick_in))
        object.__setattr__(self, "thick_out", tuple(bool(t) for t in self.thick_out))

    @classmethod
    def make(cls, basis: str = "z", n_in: int = 0, n_out: int = 0, phase=None, *,
             thick_in=None, thick_out=None, doubled: bool = False, conj: bool = False) -> "Spider":
        """Build a spider; ``phase`` is a single angle for qubits or a full phase vector."""
        try:
            dim = bases.get_basis(basis).dim
        except BasisLookupError:
            dim = 2
        if phase is None:
            phases = (0.0,) * dim
        elif np.ndim(phase) == 0:
            phases = (0.0, float(phase)) + (0.0,) * (dim - 2)
        else:
            phases = tuple(phase)
        if thick_in is None:
            thick_in = (doubled,) * n_in
        if thick_out is None:
            thick_out = (doubled,) * n_out
        return cls(basis, phases, tuple(thick_in), tuple(thick_out), doubled, conj)

    @property
    def dim(self) -> int:
        try:
            return bases.get_basis(self.basis).dim
        except BasisLookupError:
            return len(self.phases)

    @property
    def n_in(self) -> int:
        return len(self.thick_in)

    @property
    def n_out(self) -> int:
        return len(self.thick_out)

    @property
    def in_ports(self) -> tuple:
        return tuple((t, self.dim) for t in self.thick_in)

    @property
    def out_ports(self) -> tuple:
        return tuple((t, self.dim) for t in self.thick_out)

    @property
    def polar(self) -> bool:
        return False

    @property
    def is_bastard(self) -> bool:
        return not self.doubled and any(self.thick_in + self.thick_out)

    @property
    def zero_phase(self) -> bool:
        return all(abs(_wrap(p)) < PHASE_TOL for p in self.phases)

    def dagger(self) -> "Spider":
        return replace(self, phases=tuple(_wrap(-p) for p in self.phases),
                       thick_in=self.thick_out, thick_out=self.thick_in)

    def conjugate(self) -> "Spider":
        return replace(self, conj=not self.conj)


@dataclass(frozen=True, eq=False)
class Box:
    """A linear map (thin) or a CP map given by Kraus operators (doubled).

    Each Kraus matrix has shape (∏ out_dims, ∏ in_dims).
    """

    name: str
    kraus: tuple
    in_dims: tuple = (2,)
    out_dims: tuple = (2,)
    doubled: bool = False
    conj_arrows: bool = False

    kind = "box"

    def __post_init__(self):
        ks = self.kraus
        if isinstance(ks, np.ndarray) and ks.ndim == 2:
            ks = (ks,)
        object.__setattr__(self, "kraus", tuple(_frozen_array(k, 2) for k in ks))
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))

    @classmethod
    def from_matrix(cls, matrix, name: str = "A", in_dims=None, out_dims=None) -> "Box":
        m = np.asarray(matrix, dtype=complex)
        if in_dims is None:
            in_dims = (m.shape[1],) if m.shape[1] > 1 else ()
        if out_dims is None:
            out_dims = (m.shape[0],) if m.shape[0] > 1 else ()
        return cls(name, (m,), tuple(in_dims), tuple(out_dims))

    @property
    def matrix(self) -> np.ndarray:
        if len(self.kraus) != 1:
            raise ArgumentError(f"box {self.name!r} has {len(self.kraus)} Kraus operators")
        return self.kraus[0]

    @property
    def in_ports(self) -> tuple:
        return tuple((self.doubled, d) for d in self.in_dims)

    @property
    def out_ports(self) -> tuple:
        return tuple((self.doubled, d) for d in self.out_dims)

    @property
    def polar(self) -> bool:
        return not self.doubled

    def dagger(self) -> "Box":
        return replace(self, name=_suffix(self.name, "†"), kraus=tuple(k.conj().T for k in self.kraus),
                       in_dims=self.out_dims, out_dims=self.in_dims)

    def conjugate(self) -> "Box":
        return replace(self, name=_suffix(self.name, "*"), kraus=tuple(k.conj() for k in self.kraus),
                       conj_arrows=not self.conj_arrows)

    def transpose_box(self) -> "Box":
        """The rotated box, stored upright as the transposed map."""
        return replace(self, name=_suffix(self.name, "ᵀ"), kraus=tuple(k.T for k in self.kraus),
                       in_dims=self.out_dims, out_dims=self.in_dims)


def _suffix(name: str, mark: str) -> str:
    return name[:-1] if name.endswith(mark) else name + mark


@dataclass(frozen=True, eq=False)
class StatePrep:
    vector: np.ndarray
    doubled: bool = False
    conj_arrows: bool = False

    kind = "state"

    def __post_init__(self):
        object.__setattr__(self, "vector", _frozen_array(self.vector, 1))

    @property
    def in_ports(self) -> tuple:
        return ()

    @property
    def out_ports(self) -> tuple:
        return ((self.doubled, self.vector.shape[0]),)

    @property
    def polar(self) -> bool:
        return not self.doubled

    def dagger(self) -> "Effect":
        return Effect(self.vector.conj(), self.doubled, self.conj_arrows)

    def conjugate(self) -> "StatePrep":
        return StatePrep(self.vector.conj(), self.doubled, not self.conj_arrows)


@dataclass(frozen=True, eq=False)
class Effect:
    """Linear functional with coefficients ``covector`` (⟨φ| has covector conj(φ))."""

    covector: np.ndarray
    doubled: bool = False
    conj_arrows: bool = False

    kind = "effect"

    def __post_init__(self):
        object.__setattr__(self, "covector", _frozen_array(self.covector, 1))

    @property
    def in_ports(self) -> tuple:
        return ((self.doubled, self.covector.shape[0]),)

    @property
    def out_ports(self) -> tuple:
        return ()

    @property
    def polar(self) -> bool:
        return not self.doubled

    def dagger(self) -> StatePrep:
        return StatePrep(self.covector.conj(), self.doubled, self.conj_arrows)

    def conjugate(self) -> "Effect":
        return Effect(self.covector.conj(), self.doubled, not self.conj_arrows)


@dataclass(frozen=True, eq=False)
class Discard:
    """Trace on one thick wire, optionally weighted: ρ ↦ tr(Wᵀρ)."""

    dim: int = 2
    weight: np.ndarray | None = None

    kind = "discard"

    def __post_init__(self):
        if self.weight is not None:
            w = _frozen_array(self.weight, 2)
            object.__setattr__(self, "weight", w)
            object.__setattr__(self, "dim", w.shape[0])

    @property
    def in_ports(self) -> tuple:
        return ((True, self.dim),)

    @property
    def out_ports(self) -> tuple:
        return ()

    @property
    def polar(self) -> bool:
        return False

    @property
    def is_plain(self) -> bool:
        return self.weight is None or np.allclose(self.weight, np.eye(self.dim), atol=PHASE_TOL, rtol=0)

    def weight_matrix(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) if self.weight is None else np.array(self.weight)

    def dagger(self) -> "MixedPrep":
        return MixedPrep(self.weight_matrix().conj().T)

    def conjugate(self) -> "Discard":
        return Discard(self.dim, None if self.weight is None else self.weight.conj())


@dataclass(frozen=True, eq=False)
class MixedPrep:
    """Preparation of a (not necessarily normalised) density matrix on a thick wire."""

    rho: np.ndarray

    kind = "mixed"

    def __post_init__(self):
        r = _frozen_array(self.rho, 2)
        if r.shape[0] != r.shape[1]:
            raise ArgumentError("density matrix must be square")
        object.__setattr__(self, "rho", r)

    @classmethod
    def identity(cls, dim: int = 2) -> "MixedPrep":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def in_ports(self) -> tuple:
        return ()

    @property
    def out_ports(self) -> tuple:
        return ((True, self.dim),)

    @property
    def polar(self) -> bool:
        return False

    @property
    def is_plain(self) -> bool:
        return bool(np.allclose(self.rho, np.eye(self.dim), atol=PHASE_TOL, rtol=0))

    def dagger(self) -> Discard:
        return Discard(self.dim, self.rho.conj().T)

    def conjugate(self) -> "MixedPrep":
        return MixedPrep(self.rho.conj())


Generator = Union[Spider, Box, StatePrep, Effect, Discard, MixedPrep]


# ---------------------------------------------------------------- graph


@dataclass(frozen=True, order=True)
class End:
    """One end of an edge.

    ``node=None`` denotes a boundary port: side ``"in"`` is a diagram input
    (it produces a wire), side ``"out"`` a diagram output.
    """

    node: int | None
    side: str
    index: int

    @property
    def is_boundary(self) -> bool:
        return self.node is None

    @property
    def producing(self) -> bool:
        return (self.side == "out") != (self.node is None)

    def swapped(self) -> "End":
        return End(self.node, "in" if self.side == "out" else "out", self.index)

    def __str__(self) -> str:
        where = "boundary" if self.node is None else f"node {self.node}"
        return f"{where} {self.side}[{self.index}]"

    def sort_key(self):
        return (-1 if self.node is None else self.node, self.side, self.index)


@dataclass(frozen=True)
class Edge:
    """Edge from producing end ``a`` to consuming end ``b``.

    ``arrow`` True means the drawn arrow points a → b.
    """

    a: End
    b: End
    thick: bool = False
    arrow: bool = True


@dataclass(frozen=True)
class Wire:
    thick: bool = False
    dim: int = 2


def _sort_key(end: End):
    return end.sort_key()


class Diagram:
    """Nodes, edges, ordered boundary wires and a global scalar.

    Building methods mutate in place; the structural operations below
    (compose, parallel, flip_diagram, ...) never modify their arguments.
    """

    def __init__(self, inputs: Iterable[Wire] = (), outputs: Iterable[Wire] = (), scalar=1.0):
        self.nodes: dict[int, Generator] = {}
        self.edges: dict[int, Edge] = {}
        self.inputs: list[Wire] = list(inputs)
        self.outputs: list[Wire] = list(outputs)
        self.scalar: complex = as_scalar(scalar)
        self.tags: dict[int, str] = {}

    # -- building
    def add(self, gen: Generator, tag: str | None = None, node_id: int | None = None) -> int:
        nid = self.next_node_id() if node_id is None else int(node_id)
        if nid in self.nodes:
            raise ArgumentError(f"node id {nid} already used")
        self.nodes[nid] = gen
        if tag is not None:
            self.tags[nid] = tag
        return nid

    def next_node_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    def next_edge_id(self) -> int:
        return max(self.edges, default=-1) + 1

    def add_input(self, thick: bool = False, dim: int = 2) -> End:
        self.inputs.append(Wire(thick, dim))
        return End(None, "in", len(self.inputs) - 1)

    def add_output(self, thick: bool = False, dim: int = 2) -> End:
        self.outputs.append(Wire(thick, dim))
        return End(None, "out", len(self.outputs) - 1)

    def port(self, end: End) -> Port:
        """(thick, dim) of the port an end sits on."""
        if end.node is None:
            wires = self.inputs if end.side == "in" else self.outputs
            w = wires[end.index]
            return (w.thick, w.dim)
        g = self.nodes[end.node]
        ports = g.in_ports if end.side == "in" else g.out_ports
        return ports[end.index]

    def connect(self, a: End, b: End, arrow: bool | None = None, thick: bool | None = None,
                edge_id: int | None = None) -> int:
        """Add an edge from producing end ``a`` to consuming end ``b``."""
        if thick is None:
            try:
                thick = self.port(a)[0]
            except (KeyError, IndexError):
                thick = self.port(b)[0]
        if arrow is None:
            arrow = self._natural_arrow(a, b)
        eid = self.next_edge_id() if edge_id is None else int(edge_id)
        if eid in self.edges:
            raise ArgumentError(f"edge id {eid} already used")
        self.edges[eid] = Edge(a, b, bool(thick), bool(arrow))
        return eid

    def _natural_arrow(self, a: End, b: End) -> bool:
        for end in (a, b):
            if end.node is not None and end.node in self.nodes:
                g = self.nodes[end.node]
                if g.polar:
                    return not g.conj_arrows
        return True

    def copy(self) -> "Diagram":
        d = Diagram(self.inputs, self.outputs, self.scalar)
        d.nodes = dict(self.nodes)
        d.edges = dict(self.edges)
        d.tags = dict(self.tags)
        return d

    # -- queries
    def incidence(self) -> dict[End, list[int]]:
        inc: dict[End, list[int]] = {}
        for eid in sorted(self.edges):
            e = self.edges[eid]
            inc.setdefault(e.a, []).append(eid)
            inc.setdefault(e.b, []).append(eid)
        return inc

    def edge_at(self, end: End) -> int | None:
        for eid, e in sorted(self.edges.items()):
            if e.a == end or e.b == end:
                return eid
        return None

    def node_edges(self, nid: int) -> list[int]:
        return [eid for eid, e in sorted(self.edges.items()) if e.a.node == nid or e.b.node == nid]

    def node_ends(self, nid: int) -> list[End]:
        g = self.nodes[nid]
        return ([End(nid, "in", i) for i in range(len(g.in_ports))]
                + [End(nid, "out", i) for i in range(len(g.out_ports))])

    @property
    def is_closed(self) -> bool:
        return not self.inputs and not self.outputs

    def signature(self) -> tuple:
        return (tuple(self.inputs), tuple(self.outputs))

    def has_thick(self) -> bool:
        if any(w.thick for w in self.inputs + self.outputs):
            return True
        if any(e.thick for e in self.edges.values()):
            return True
        return any(any(t for t, _ in g.in_ports + g.out_ports) for g in self.nodes.values())

    def __repr__(self) -> str:
        return (f"Diagram({len(self.nodes)} nodes, {len(self.edges)} edges, "
                f"{len(self.inputs)}→{len(self.outputs)}, scalar={self.scalar:.6g})")


# ---------------------------------------------------------------- builders


def from_generator(g: Generator, tag: str | None = None) -> Diagram:
    """A single generator with every port wired to the boundary in order."""
    d = Diagram()
    n = d.add(g, tag)
    for i, (thick, dim) in enumerate(g.in_ports):
        d.connect(d.add_input(thick, dim), End(n, "in", i))
    for j, (thick, dim) in enumerate(g.out_ports):
        d.connect(End(n, "out", j), d.add_output(thick, dim))
    return d


def identity(n: int = 1, thick: bool = False, dim: int = 2) -> Diagram:
    d = Diagram()
    for _ in range(n):
        d.connect(d.add_input(thick, dim), d.add_output(thick, dim), arrow=True, thick=thick)
    return d


def scalar_diagram(z) -> Diagram:
    return Diagram(scalar=z)


def state(v, doubled: bool = False) -> Diagram:
    return from_generator(StatePrep(v, doubled))


def effect(covector, doubled: bool = False) -> Diagram:
    return from_generator(Effect(covector, doubled))


def bra(v) -> Diagram:
    """The effect ⟨v|."""
    return effect(np.conj(np.asarray(v, dtype=complex)))


def box(matrix, name: str = "A", in_dims=None, out_dims=None) -> Diagram:
    return from_generator(Box.from_matrix(matrix, name, in_dims, out_dims))


def spider(basis: str = "z", n_in: int = 0, n_out: int = 0, phase=None, **kw) -> Diagram:
    return from_generator(Spider.make(basis, n_in, n_out, phase, **kw))


def cup(thick: bool = False) -> Diagram:
    """∑_i |ii⟩ as a zero-phase z spider with two outputs."""
    return spider("z", 0, 2, doubled=thick)


def cap(thick: bool = False) -> Diagram:
    return spider("z", 2, 0, doubled=thick)


# ---------------------------------------------------------------- structural ops


def _remap_end(end: End, node_map: dict[int, int], boundary) -> object:
    if end.node is None:
        return boundary(end)
    return End(node_map[end.node], end.side, end.index)


def _assemble(inputs, outputs, scalar, node_list, edge_list) -> Diagram:
    d = Diagram(inputs, outputs, scalar)
    for nid, g, tag in node_list:
        d.add(g, tag, node_id=nid)
    for k, (a, b, thick, arrow) in enumerate(edge_list):
        d.edges[k] = Edge(a, b, thick, arrow)
    return d


def _relabel(d: Diagram, offset: int):
    node_map = {old: offset + k for k, old in enumerate(sorted(d.nodes))}
    nodes = [(node_map[old], d.nodes[old], d.tags.get(old)) for old in sorted(d.nodes)]
    return node_map, nodes


def compose(top: Diagram, bottom: Diagram) -> Diagram:
    """``top ∘ bottom``: bottom's outputs are plugged into top's inputs."""
    if len(bottom.outputs) != len(top.inputs):
        raise CompositionError(f"arity mismatch: {len(bottom.outputs)} outputs vs {len(top.inputs)} inputs")
    for j, (wb, wt) in enumerate(zip(bottom.outputs, top.inputs)):
        if wb != wt:
            raise CompositionError(f"wire {j}: {wb} does not match {wt}")
    bmap, bnodes = _relabel(bottom, 0)
    tmap, tnodes = _relabel(top, len(bnodes))
    lower: dict[int, tuple] = {}
    upper: dict[int, tuple] = {}
    edges = []
    for eid in sorted(bottom.edges):
        e = bottom.edges[eid]
        a = _remap_end(e.a, bmap, lambda x: x)
        if e.b.node is None:
            lower[e.b.index] = (a, e.thick, e.arrow)
        else:
            edges.append((a, _remap_end(e.b, bmap, lambda x: x), e.thick, e.arrow))
    for eid in sorted(top.edges):
        e = top.edges[eid]
        b = _remap_end(e.b, tmap, lambda x: x)
        if e.a.node is None:
            upper[e.a.index] = (b, e.thick, e.arrow)
        else:
            edges.append((_remap_end(e.a, tmap, lambda x: x), b, e.thick, e.arrow))
    polar = {nid: g for nid, g, _ in bnodes + tnodes}
    for j in sorted(lower):
        if j not in upper:
            raise CompositionError(f"wire {j} is dangling")
        a, thick, arrow_lo = lower[j]
        b, _, arrow_up = upper[j]
        if a.node is not None and polar[a.node].polar:
            arrow = arrow_lo
        elif b.node is not None and polar[b.node].polar:
            arrow = arrow_up
        else:
            arrow = arrow_lo
        edges.append((a, b, thick, arrow))
    edges.sort(key=lambda t: (_sort_key(t[0]), _sort_key(t[1])))
    return _assemble(bottom.inputs, top.outputs, bottom.scalar * top.scalar, bnodes + tnodes, edges)


def parallel(left: Diagram, right: Diagram) -> Diagram:
    lmap, lnodes = _relabel(left, 0)
    rmap, rnodes = _relabel(right, len(lnodes))
    n_in, n_out = len(left.inputs), len(left.outputs)

    def shift(end: End) -> End:
        return End(None, end.side, end.index + (n_in if end.side == "in" else n_out))

    edges = []
    for eid in sorted(left.edges):
        e = left.edges[eid]
        edges.append((_remap_end(e.a, lmap, lambda x: x), _remap_end(e.b, lmap, lambda x: x), e.thick, e.arrow))
    for eid in sorted(right.edges):
        e = right.edges[eid]
        edges.append((_remap_end(e.a, rmap, shift), _remap_end(e.b, rmap, shift), e.thick, e.arrow))
    return _assemble(left.inputs + right.inputs, left.outputs + right.outputs,
                     left.scalar * right.scalar, lnodes + rnodes, edges)


def tensor_all(diagrams: Sequence[Diagram]) -> Diagram:
    out = Diagram()
    for d in diagrams:
        out = parallel(out, d)
    return out


def compose_all(*diagrams: Diagram) -> Diagram:
    """Compose bottom-to-top: ``compose_all(a, b, c) = c ∘ b ∘ a``."""
    out = diagrams[0]
    for d in diagrams[1:]:
        out = compose(d, out)
    return out


def flip_diagram(d: Diagram, kind: str) -> Diagram:
    if kind == "transpose":
        return flip_diagram(flip_diagram(d, "dagger"), "conjugate")
    if kind == "dagger":
        out = Diagram(d.outputs, d.inputs, d.scalar.conjugate())
        for nid in sorted(d.nodes):
            out.add(d.nodes[nid].dagger(), d.tags.get(nid), node_id=nid)
        for eid in sorted(d.edges):
            e = d.edges[eid]
            out.edges[eid] = Edge(e.b.swapped(), e.a.swapped(), e.thick, e.arrow)
        return out
    if kind == "conjugate":
        out = Diagram(d.inputs, d.outputs, d.scalar.conjugate())
        for nid in sorted(d.nodes):
            out.add(d.nodes[nid].conjugate(), d.tags.get(nid), node_id=nid)
        for eid in sorted(d.edges):
            e = d.edges[eid]
            out.edges[eid] = replace(e, arrow=not e.arrow)
        return out
    raise ArgumentError(f"unknown flip kind {kind!r}")


def permute_outputs(d: Diagram, order: Sequence[int]) -> Diagram:
    """Reorder output wires: new output k is old output ``order[k]``."""
    if sorted(order) != list(range(len(d.outputs))):
        raise ArgumentError(f"{order} is not a permutation of the outputs")
    inverse = {old: new for new, old in enumerate(order)}
    out = d.copy()
    out.outputs = [d.outputs[k] for k in order]
    for eid, e in d.edges.items():
        if e.b.node is None:
            out.edges[eid] = replace(e, b=End(None, "out", inverse[e.b.index]))
    return out


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    nodes: tuple = ()
    edges: tuple = ()

    def __str__(self) -> str:
        where = []
        if self.nodes:
            where.append("nodes " + ",".join(map(str, self.nodes)))
        if self.edges:
            where.append("edges " + ",".join(map(str, self.edges)))
        suffix = f" [{'; '.join(where)}]" if where else ""
        return f"{self.kind}: {self.message}{suffix}"


def _end_exists(d: Diagram, end: End) -> bool:
    if end.side not in ("in", "out") or end.index < 0:
        return False
    if end.node is None:
        wires = d.inputs if end.side == "in" else d.outputs
        return end.index < len(wires)
    if end.node not in d.nodes:
        return False
    g = d.nodes[end.node]
    return end.index < len(g.in_ports if end.side == "in" else g.out_ports)


def _generator_violations(nid: int, g) -> list[Violation]:
    out = []
    if isinstance(g, Spider):
        try:
            b = bases.get_basis(g.basis)
        except BasisLookupError:
            return [Violation("basis", f"unknown basis {g.basis!r}", (nid,))]
        if len(g.phases) != b.dim:
            out.append(Violation("phase", f"{len(g.phases)} phases for a dimension-{b.dim} basis", (nid,)))
        elif abs(_wrap(g.phases[0])) > PHASE_TOL:
            out.append(Violation("phase", "phases[0] must be 0", (nid,)))
        if not all(np.isfinite(g.phases)):
            out.append(Violation("phase", "phases must be finite", (nid,)))
        if g.doubled and not all(g.thick_in + g.thick_out):
            out.append(Violation("thickness", "doubled spider with a thin leg", (nid,)))
    elif isinstance(g, Box):
        if not g.kraus:
            out.append(Violation("payload", f"box {g.name!r} has no matrix", (nid,)))
        if not g.doubled and len(g.kraus) != 1:
            out.append(Violation("payload", f"thin box {g.name!r} needs exactly one matrix", (nid,)))
        shape = (int(np.prod(g.out_dims, dtype=int)), int(np.prod(g.in_dims, dtype=int)))
        for k in g.kraus:
            if k.shape != shape:
                out.append(Violation("payload", f"box {g.name!r} matrix shape {k.shape} != ports {shape}", (nid,)))
                break
    elif isinstance(g, (Discard, MixedPrep)):
        m = g.weight if isinstance(g, Discard) else g.rho
        if m is not None and m.shape != (g.dim, g.dim):
            out.append(Violation("payload", "matrix does not match wire dimension", (nid,)))
    return out


def validate(d: Diagram) -> list[Violation]:
    """Report every structural problem; an empty list means the diagram is well formed."""
    out: list[Violation] = []
    for nid in sorted(d.nodes):
        out.extend(_generator_violations(nid, d.nodes[nid]))
    seen: dict[End, list[int]] = {}
    for eid in sorted(d.edges):
        e = d.edges[eid]
        ok = True
        for end in (e.a, e.b):
            if not _end_exists(d, end):
                out.append(Violation("incidence", f"edge end {end} does not exist", edges=(eid,)))
                ok = False
            else:
                seen.setdefault(end, []).append(eid)
        if not ok:
            continue
        nodes = tuple(n for n in (e.a.node, e.b.node) if n is not None)
        if not e.a.producing or e.b.producing:
            bad = e.b if e.b.producing else e.a
            what = "producing" if e.b.producing else "consuming"
            out.append(Violation("orientation", f"edge joins {bad} as a {what} end in the wrong position",
                                 nodes, (eid,)))
        for end in (e.a, e.b):
            thick, dim = d.port(end)
            if thick != e.thick:
                want, got = ("thick" if thick else "thin"), ("thick" if e.thick else "thin")
                out.append(Violation("thickness", f"{got} edge at {want} port {end}", nodes, (eid,)))
            if end.node is not None and not e.thick:
                g = d.nodes[end.node]
                if g.polar and e.arrow != (not g.conj_arrows):
                    out.append(Violation("orientation", f"arrow direction conflicts with {end}", nodes, (eid,)))
        if d.port(e.a)[1] != d.port(e.b)[1]:
            out.append(Violation("dimension", f"dimension {d.port(e.a)[1]} at {e.a} vs {d.port(e.b)[1]} at {e.b}",
                                 nodes, (eid,)))
    all_ends = [End(None, "in", i) for i in range(len(d.inputs))]
    all_ends += [End(None, "out", j) for j in range(len(d.outputs))]
    for nid in sorted(d.nodes):
        all_ends += d.node_ends(nid)
    for end in all_ends:
        hits = seen.get(end, [])
        if len(hits) != 1:
            nodes = () if end.node is None else (end.node,)
            out.append(Violation("incidence", f"{end} has {len(hits)} incident edges", nodes, tuple(hits)))
    return out


# ---------------------------------------------------------------- isomorphism


def _payload_key(g, ignore_spider_sides: bool) -> tuple:
    def arr(a):
        return tuple(np.round(np.asarray(a).ravel(), 9).tolist())

    if isinstance(g, Spider):
        legs = (tuple(sorted(g.thick_in + g.thick_out)) if ignore_spider_sides
                else (g.thick_in, g.thick_out))
        return ("spider", g.basis, tuple(round(_wrap(p), 9) for p in g.phases), g.doubled, g.conj, legs)
    if isinstance(g, Box):
        return ("box", tuple(arr(k) for k in g.kraus), g.in_dims, g.out_dims, g.doubled)
    if isinstance(g, StatePrep):
        return ("state", arr(g.vector), g.doubled)
    if isinstance(g, Effect):
        return ("effect", arr(g.covector), g.doubled)
    if isinstance(g, Discard):
        return ("discard", arr(g.weight_matrix()))
    return ("mixed", arr(g.rho))


def to_graph(d: Diagram, ignore_spider_sides: bool = False) -> nx.Graph:
    """Port graph: generator nodes, port nodes, boundary nodes."""
    G = nx.Graph()
    for nid, g in d.nodes.items():
        G.add_node(("g", nid), key=_payload_key(g, ignore_spider_sides))
        for end in d.node_ends(nid):
            if isinstance(g, Spider) and ignore_spider_sides:
                key = ("leg", d.port(end)[0])
            else:
                key = ("port", end.side, end.index)
            G.add_node(("p", end), key=key)
            G.add_edge(("g", nid), ("p", end))
    for side, wires in (("in", d.inputs), ("out", d.outputs)):
        for i, w in enumerate(wires):
            end = End(None, side, i)
            G.add_node(("p", end), key=("boundary", side, i, w.thick, w.dim))
    for e in d.edges.values():
        G.add_edge(("p", e.a), ("p", e.b), thick=e.thick)
    return G


def isomorphic(a: Diagram, b: Diagram, ignore_spider_sides: bool = False, scalar_tol: float = 1e-9) -> bool:
    """Graph isomorphism with equal payloads and scalars."""
    if abs(a.scalar - b.scalar) > scalar_tol or a.signature() != b.signature():
        return False
    ga, gb = to_graph(a, ignore_spider_sides), to_graph(b, ignore_spider_sides)
    return nx.is_isomorphic(ga, gb, node_match=lambda x, y: x["key"] == y["key"],
                            edge_match=lambda x, y: x.get("thick") == y.get("thick"))
