"""Tensor semantics of diagrams and superoperator extraction.

A thick leg is a pair of adjacent thin legs, conjugate copy first.  The
doubled tensor of a density matrix ρ therefore has entries T[c, p] = ρ[p, c].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import bases
from .diagram import Box, Diagram, Discard, Effect, End, MixedPrep, Spider, StatePrep, validate
from .errors import ArgumentError, DimensionError, ValidationError
from .tensor import IN, OUT, Tensor, default_tol


def _outer(vectors) -> np.ndarray:
    return reduce(np.multiply.outer, vectors, np.ones((), dtype=complex))


def interleave_double(a: np.ndarray) -> np.ndarray:
    """conj(a) ⊗ a with the legs ordered (c0, p0, c1, p1, ...)."""
    n = a.ndim
    t = np.multiply.outer(a.conj(), a)
    order = [k for i in range(n) for k in (i, n + i)]
    return np.transpose(t, order)


def _spider_array(g: Spider) -> np.ndarray:
    b = bases.get_basis(g.basis)
    total = None
    for j in range(b.dim):
        v = b.states[:, j]
        if g.doubled:
            vecs = [v] * g.n_out + [v.conj()] * g.n_in
        else:
            vecs = []
            for thick in g.thick_out:
                vecs += [v.conj(), v] if thick else [v]
            for thick in g.thick_in:
                vecs += [v, v.conj()] if thick else [v.conj()]
        term = np.exp(1j * g.phases[j]) * _outer(vecs)
        total = term if total is None else total + term
    if g.doubled:
        total = interleave_double(total)
    return total.conj() if g.conj else total


def generator_array(g) -> np.ndarray:
    """Generator tensor as a bare array, legs ordered outputs then inputs."""
    if isinstance(g, Spider):
        return _spider_array(g)
    if isinstance(g, Box):
        shape = g.out_dims + g.in_dims
        if not g.doubled:
            return g.matrix.reshape(shape)
        return sum(interleave_double(k.reshape(shape)) for k in g.kraus)
    if isinstance(g, StatePrep):
        return interleave_double(g.vector) if g.doubled else np.array(g.vector)
    if isinstance(g, Effect):
        return interleave_double(g.covector) if g.doubled else np.array(g.covector)
    if isinstance(g, Discard):
        return g.weight_matrix()
    if isinstance(g, MixedPrep):
        return np.array(g.rho).T
    raise ArgumentError(f"unknown generator {g!r}")


def _leg_roles(ports, role) -> list[str]:
    roles = []
    for thick, _ in ports:
        roles += [role, role] if thick else [role]
    return roles


def generator_tensor(g) -> Tensor:
    roles = _leg_roles(g.out_ports, OUT) + _leg_roles(g.in_ports, IN)
    return Tensor(generator_array(g), roles)


def _contract_network(tensors: list[tuple[np.ndarray, list]], open_labels: list) -> np.ndarray:
    """Contract arrays whose axes carry labels; each internal label appears twice."""
    work = []
    for arr, labels in tensors:
        arr, labels = _self_trace(arr, list(labels))
        work.append((arr, labels))
    while True:
        best = None
        for i in range(len(work)):
            li = set(work[i][1])
            for j in range(i + 1, len(work)):
                shared = li.intersection(work[j][1])
                if not shared:
                    continue
                rest = (len(work[i][1]) + len(work[j][1]) - 2 * len(shared))
                size = work[i][0].size * work[j][0].size
                for lab in shared:
                    size //= work[i][0].shape[work[i][1].index(lab)] ** 2
                key = (rest, size, i, j)
                if best is None or key < best[0]:
                    best = (key, i, j, shared)
        if best is None:
            break
        _, i, j, shared = best
        (a, la), (b, lb) = work[i], work[j]
        shared = sorted(shared, key=la.index)
        ax_a = [la.index(s) for s in shared]
        ax_b = [lb.index(s) for s in shared]
        c = np.tensordot(a, b, axes=(ax_a, ax_b))
        lc = [x for x in la if x not in shared] + [x for x in lb if x not in shared]
        work = [w for k, w in enumerate(work) if k not in (i, j)] + [(c, lc)]
    arr, labels = work[0] if work else (np.ones((), dtype=complex), [])
    for a, la in work[1:]:
        arr = np.multiply.outer(arr, a)
        labels = labels + la
    if sorted(map(repr, labels)) != sorted(map(repr, open_labels)):
        raise ValidationError([f"unmatched legs after contraction: {labels} vs {open_labels}"])
    perm = [labels.index(lab) for lab in open_labels]
    return np.transpose(arr, perm) if perm else arr


def _self_trace(arr: np.ndarray, labels: list):
    dup = {lab for lab in labels if labels.count(lab) == 2}
    if not dup:
        return arr, labels
    ids = {lab: k for k, lab in enumerate(dict.fromkeys(labels))}
    sub = [ids[lab] for lab in labels]
    keep = [lab for lab in labels if lab not in dup]
    out = np.einsum(arr, sub, [ids[lab] for lab in keep])
    return out, keep


def evaluate(d: Diagram, check: bool = True) -> Tensor:
    """Contract the whole diagram; legs are outputs then inputs in boundary order."""
    if check:
        problems = validate(d)
        if problems:
            raise ValidationError(problems)
    end_labels: dict[End, list] = {}
    extra = []
    for eid in sorted(d.edges):
        e = d.edges[eid]
        n = 2 if e.thick else 1
        if e.a.node is None and e.b.node is None:
            dim = d.port(e.a)[1]
            la = [("e", eid, k, "a") for k in range(n)]
            lb = [("e", eid, k, "b") for k in range(n)]
            end_labels[e.a], end_labels[e.b] = la, lb
            for x, y in zip(la, lb):
                extra.append((np.eye(dim, dtype=complex), [y, x]))
        else:
            labs = [("e", eid, k) for k in range(n)]
            end_labels[e.a] = labs
            end_labels[e.b] = labs
    tensors = []
    for nid in sorted(d.nodes):
        g = d.nodes[nid]
        labels = []
        for j in range(len(g.out_ports)):
            labels += end_labels[End(nid, "out", j)]
        for i in range(len(g.in_ports)):
            labels += end_labels[End(nid, "in", i)]
        tensors.append((generator_array(g), labels))
    tensors += extra
    open_labels = []
    roles = []
    for j, w in enumerate(d.outputs):
        open_labels += end_labels[End(None, "out", j)]
        roles += [OUT] * (2 if w.thick else 1)
    for i, w in enumerate(d.inputs):
        open_labels += end_labels[End(None, "in", i)]
        roles += [IN] * (2 if w.thick else 1)
    arr = _contract_network(tensors, open_labels)
    return Tensor(arr * d.scalar, roles)


# ---------------------------------------------------------------- channels


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Matrix on row-major vectorised density matrices, |i⟩⟨j| ↦ index (i, j)."""

    matrix: np.ndarray
    in_dims: tuple
    out_dims: tuple

    @property
    def d_in(self) -> int:
        return int(np.prod(self.in_dims, dtype=int))

    @property
    def d_out(self) -> int:
        return int(np.prod(self.out_dims, dtype=int))

    @classmethod
    def from_kraus(cls, kraus, in_dims=None, out_dims=None) -> "Superoperator":
        ks = [np.asarray(k, dtype=complex) for k in kraus]
        m = sum(np.kron(k, k.conj()) for k in ks)
        return cls(m, tuple(in_dims or (ks[0].shape[1],)), tuple(out_dims or (ks[0].shape[0],)))

    @classmethod
    def identity(cls, dim: int = 2) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=complex), (dim,), (dim,))

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.d_in, self.d_in):
            raise DimensionError(f"input of shape {rho.shape}, expected {(self.d_in, self.d_in)}")
        return (self.matrix @ rho.reshape(-1)).reshape(self.d_out, self.d_out)

    def choi(self) -> np.ndarray:
        """J = ∑_kl |k⟩⟨l| ⊗ Φ(|k⟩⟨l|), input factor first."""
        do, di = self.d_out, self.d_in
        s = self.matrix.reshape(do, do, di, di)
        return np.transpose(s, (2, 0, 3, 1)).reshape(di * do, di * do)

    def is_completely_positive(self, tol: float | None = None) -> bool:
        tol = default_tol() if tol is None else tol
        j = self.choi()
        if np.max(np.abs(j - j.conj().T), initial=0.0) > tol:
            return False
        return bool(np.min(np.linalg.eigvalsh((j + j.conj().T) / 2)) >= -tol)

    def is_trace_preserving(self, tol: float | None = None) -> bool:
        tol = default_tol() if tol is None else tol
        do, di = self.d_out, self.d_in
        j = self.choi().reshape(di, do, di, do)
        partial = np.einsum("kili->kl", j)
        return bool(np.max(np.abs(partial - np.eye(di))) <= tol)

    def scaled(self, z) -> "Superoperator":
        return Superoperator(self.matrix * z, self.in_dims, self.out_dims)


def evaluate_channel(d: Diagram, check: bool = True) -> Superoperator:
    """Superoperator of a diagram whose boundary wires are all thick."""
    thin = [k for k, w in enumerate(d.inputs + d.outputs) if not w.thick]
    if thin:
        raise ValidationError([f"boundary wire {k} is thin; channels need thick boundaries" for k in thin])
    t = evaluate(d, check).data
    n_out, n_in = len(d.outputs), len(d.inputs)
    out_dims = tuple(w.dim for w in d.outputs)
    in_dims = tuple(w.dim for w in d.inputs)
    # axes: outputs (c, p) pairs, then inputs (c, p) pairs
    p_out = [2 * k + 1 for k in range(n_out)]
    c_out = [2 * k for k in range(n_out)]
    p_in = [2 * n_out + 2 * k + 1 for k in range(n_in)]
    c_in = [2 * n_out + 2 * k for k in range(n_in)]
    do = int(np.prod(out_dims, dtype=int))
    di = int(np.prod(in_dims, dtype=int))
    m = np.transpose(t, p_out + c_out + p_in + c_in).reshape(do * do, di * di)
    return Superoperator(m, in_dims, out_dims)


def check_density_matrix(rho, tol: float | None = None) -> np.ndarray:
    tol = default_tol() if tol is None else tol
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ArgumentError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ArgumentError("density matrix is not Hermitian")
    if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -tol:
        raise ArgumentError("density matrix is not positive semidefinite")
    if abs(np.trace(rho) - 1) > tol:
        raise ArgumentError(f"density matrix has trace {np.trace(rho).real:.12g}")
    return rho


def check_povm(elements, tol: float | None = None) -> float:
    """Return max |∑ E†E − 1|; raise if the family is not a POVM."""
    tol = default_tol() if tol is None else tol
    es = [np.asarray(e, dtype=complex) for e in elements]
    total = sum(e.conj().T @ e for e in es)
    dev = float(np.max(np.abs(total - np.eye(total.shape[0]))))
    if dev > tol:
        raise ArgumentError(f"POVM elements do not sum to the identity (deviation {dev:.3g})")
    return dev


def povm_probability(rho, element, tol: float | None = None) -> float:
    """tr(E†E ρ), clamped to [0, 1] when within tol of the interval."""
    tol = default_tol() if tol is None else tol
    rho = check_density_matrix(rho, tol)
    e = np.asarray(element, dtype=complex)
    if e.shape != rho.shape:
        raise DimensionError(f"element shape {e.shape} vs state shape {rho.shape}")
    p = complex(np.trace(e.conj().T @ e @ rho))
    if abs(p.imag) > tol or p.real < -tol or p.real > 1 + tol:
        raise ArgumentError(f"probability {p} outside [0, 1]")
    return float(min(1.0, max(0.0, p.real)))
