"""Doubling (the CPM construction) plus channels and the classical encode/decode spiders."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import bases
from .diagram import (Box, Diagram, Discard, Edge, Effect, MixedPrep, Spider, StatePrep, Wire,
                      flip_diagram, from_generator, tensor_all)
from .errors import ArgumentError, DimensionError
from .evaluator import Superoperator
from .tensor import default_tol


@dataclass(frozen=True, eq=False)
class Channel:
    """A CP map as a Kraus family; each operator has shape (∏ out_dims, ∏ in_dims)."""

    kraus: tuple
    label: str = "Φ"
    in_dims: tuple | None = None
    out_dims: tuple | None = None

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ArgumentError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ks):
            raise DimensionError("Kraus operators must be matrices of one common shape")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)
        in_dims = tuple(self.in_dims) if self.in_dims is not None else (shape[1],)
        out_dims = tuple(self.out_dims) if self.out_dims is not None else (shape[0],)
        if int(np.prod(in_dims)) != shape[1] or int(np.prod(out_dims)) != shape[0]:
            raise DimensionError(f"dims {in_dims}->{out_dims} do not match Kraus shape {shape}")
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def normalization_deviation(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(total - np.eye(self.d_in))))

    def is_trace_preserving(self, tol: float | None = None) -> bool:
        tol = default_tol() if tol is None else tol
        return self.normalization_deviation() <= tol

    def superoperator(self) -> Superoperator:
        return Superoperator.from_kraus(self.kraus, self.in_dims, self.out_dims)

    def as_box(self) -> Box:
        return Box(self.label, self.kraus, self.in_dims, self.out_dims, doubled=True)

    def diagram(self) -> Diagram:
        return from_generator(self.as_box())

    @classmethod
    def identity(cls, dim: int = 2) -> "Channel":
        return cls((np.eye(dim),), "id")

    @classmethod
    def unitary(cls, u, label: str = "U") -> "Channel":
        return cls((u,), label)


@dataclass(frozen=True, eq=False)
class Isometry:
    """V : in → env ⊗ out, rows indexed env-major."""

    matrix: np.ndarray
    env_dim: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] % self.env_dim:
            raise DimensionError(f"isometry shape {m.shape} incompatible with env_dim {self.env_dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def d_out(self) -> int:
        return self.matrix.shape[0] // self.env_dim

    def isometry_deviation(self) -> float:
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(self.d_in))))

    def kraus(self) -> tuple:
        return tuple(self.matrix[k * self.d_out:(k + 1) * self.d_out] for k in range(self.env_dim))

    def trace_out_env(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        full = self.matrix @ rho @ self.matrix.conj().T
        r = full.reshape(self.env_dim, self.d_out, self.env_dim, self.d_out)
        return np.einsum("kikj->ij", r)

    def as_box(self, name: str = "V") -> Box:
        return Box(name, (self.matrix,), (self.d_in,), (self.env_dim, self.d_out))


def purify(c: Channel) -> Isometry:
    """V|φ⟩ = ∑_k |k⟩_env ⊗ K_k|φ⟩."""
    return Isometry(np.vstack(c.kraus), len(c.kraus))


def apply_channel(c: Channel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (c.d_in, c.d_in):
        raise DimensionError(f"state of shape {rho.shape} for a channel on dimension {c.d_in}")
    return sum(k @ rho @ k.conj().T for k in c.kraus)


# ---------------------------------------------------------------- doubling


def _double_generator(g):
    if isinstance(g, Spider):
        if any(g.thick_in + g.thick_out) or g.doubled:
            raise ArgumentError("cannot double a diagram that already has thick legs")
        return replace(g, thick_in=(True,) * g.n_in, thick_out=(True,) * g.n_out, doubled=True)
    if isinstance(g, Box):
        if g.doubled:
            raise ArgumentError("cannot double a doubled box")
        return replace(g, doubled=True, conj_arrows=False)
    if isinstance(g, StatePrep):
        if g.doubled:
            raise ArgumentError("cannot double a doubled state")
        return StatePrep(g.vector, doubled=True)
    if isinstance(g, Effect):
        if g.doubled:
            raise ArgumentError("cannot double a doubled effect")
        return Effect(g.covector, doubled=True)
    raise ArgumentError(f"{type(g).__name__} is already a mixed-state generator")


def double(d: Diagram) -> Diagram:
    """Replace every generator and wire by its doubled counterpart."""
    if d.has_thick():
        raise ArgumentError("double() expects a diagram without thick elements")
    out = Diagram([Wire(True, w.dim) for w in d.inputs], [Wire(True, w.dim) for w in d.outputs],
                  abs(d.scalar) ** 2)
    for nid in sorted(d.nodes):
        out.add(_double_generator(d.nodes[nid]), d.tags.get(nid), node_id=nid)
    for eid in sorted(d.edges):
        e = d.edges[eid]
        out.edges[eid] = Edge(e.a, e.b, True, True)
    return out


def encode(basis_id: str) -> Diagram:
    """Thin wire in, thick wire out: ∑_i |ii⟩⟨i| in the given basis."""
    b = bases.get_basis(basis_id)
    return from_generator(Spider(basis_id, (0.0,) * b.dim, (False,), (True,)))


def decode(basis_id: str) -> Diagram:
    return flip_diagram(encode(basis_id), "dagger")


def discard(n_thick: int = 1, dim: int = 2) -> Diagram:
    if n_thick < 0:
        raise ArgumentError("n_thick must be non-negative")
    return tensor_all([from_generator(Discard(dim)) for _ in range(n_thick)])


def fully_mixed(dim: int = 2) -> Diagram:
    """The dagger of discard: prepares d·(I/d), the identity matrix."""
    return flip_diagram(discard(1, dim), "dagger")


def mixed_state(rho) -> Diagram:
    return from_generator(MixedPrep(rho))
