"""Dense complex tensors with output/input leg roles.

Legs are ordered outputs first, then inputs.  A tensor built by the
evaluator always follows that convention; hand-built tensors may use any
order, and the flips return canonical order.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError

OUT = "out"
IN = "in"

FLIP_KINDS = ("dagger", "conjugate", "transpose")


def default_tol() -> float:
    """Default absolute tolerance, overridable with ``QDIAGRAMS_TOL``."""
    raw = os.environ.get("QDIAGRAMS_TOL")
    if raw:
        try:
            value = float(raw)
        except ValueError:
            raise ArgumentError(f"QDIAGRAMS_TOL is not a number: {raw!r}") from None
        if value > 0 and np.isfinite(value):
            return value
        raise ArgumentError(f"QDIAGRAMS_TOL must be positive and finite: {raw!r}")
    return 1e-9


def as_scalar(value) -> complex:
    """Coerce to a finite Python complex."""
    z = complex(value)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ArgumentError(f"scalar must be finite, got {value!r}")
    return z


class Tensor:
    """Immutable dense complex array whose legs carry ``"out"``/``"in"`` roles."""

    __slots__ = ("_data", "_roles")

    def __init__(self, data, roles: Sequence[str] | None = None):
        arr = np.array(data, dtype=complex)
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("tensor entries must be finite")
        if roles is None:
            roles = (OUT,) * arr.ndim
        roles = tuple(roles)
        if len(roles) != arr.ndim:
            raise DimensionError(f"{len(roles)} roles given for a rank-{arr.ndim} array")
        for r in roles:
            if r not in (OUT, IN):
                raise ArgumentError(f"unknown leg role {r!r}")
        arr.setflags(write=False)
        self._data = arr
        self._roles = roles

    @classmethod
    def from_entries(cls, extents: Sequence[int], entries: Iterable, roles: Sequence[str]) -> "Tensor":
        flat = np.asarray(list(entries), dtype=complex)
        extents = tuple(int(e) for e in extents)
        if flat.size != int(np.prod(extents, dtype=int)):
            raise DimensionError(f"{flat.size} entries do not fill extents {extents}")
        return cls(flat.reshape(extents), roles)

    @classmethod
    def matrix(cls, m) -> "Tensor":
        """A 2-leg (out, in) tensor from a matrix."""
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2:
            raise DimensionError("matrix must be 2-dimensional")
        return cls(m, (OUT, IN))

    @classmethod
    def ket(cls, v) -> "Tensor":
        return cls(np.asarray(v, dtype=complex).reshape(-1), (OUT,))

    @classmethod
    def bra(cls, v) -> "Tensor":
        """The covector ⟨v| (entries conjugated)."""
        return cls(np.conj(np.asarray(v, dtype=complex).reshape(-1)), (IN,))

    @classmethod
    def scalar(cls, z) -> "Tensor":
        return cls(np.asarray(as_scalar(z)), ())

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def roles(self) -> tuple[str, ...]:
        return self._roles

    @property
    def extents(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def entries(self) -> np.ndarray:
        return self._data.reshape(-1)

    @property
    def rank(self) -> int:
        return self._data.ndim

    @property
    def n_out(self) -> int:
        return self._roles.count(OUT)

    @property
    def n_in(self) -> int:
        return self._roles.count(IN)

    def as_matrix(self) -> np.ndarray:
        """Group output legs into rows and input legs into columns."""
        outs = [i for i, r in enumerate(self._roles) if r == OUT]
        ins = [i for i, r in enumerate(self._roles) if r == IN]
        rows = int(np.prod([self.extents[i] for i in outs], dtype=int))
        cols = int(np.prod([self.extents[i] for i in ins], dtype=int))
        return np.transpose(self._data, outs + ins).reshape(rows, cols)

    def scaled(self, z) -> "Tensor":
        return Tensor(self._data * as_scalar(z), self._roles)

    def __mul__(self, z):
        if isinstance(z, Tensor):
            return NotImplemented
        return self.scaled(z)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Tensor(extents={self.extents}, roles={self._roles})"


def contract(a: Tensor, b: Tensor, pairs: Sequence[tuple[int, int]]) -> Tensor:
    """Sum over paired legs ``(leg of a, leg of b)``.

    Surviving legs of ``a`` come first, then those of ``b``.
    """
    pairs = [(int(i), int(j)) for i, j in pairs]
    left = [i for i, _ in pairs]
    right = [j for _, j in pairs]
    if len(set(left)) != len(left) or len(set(right)) != len(right):
        raise ArgumentError(f"duplicate leg in pairs {pairs}")
    for i, j in pairs:
        if not (0 <= i < a.rank and 0 <= j < b.rank):
            raise ArgumentError(f"leg pair {(i, j)} out of range")
        if a.extents[i] != b.extents[j]:
            raise DimensionError(f"extent mismatch on pair {(i, j)}: {a.extents[i]} vs {b.extents[j]}")
        if a.roles[i] == b.roles[j]:
            raise ArgumentError(f"pair {(i, j)} joins two {a.roles[i]!r} legs")
    data = np.tensordot(a.data, b.data, axes=(left, right))
    roles = [r for k, r in enumerate(a.roles) if k not in left]
    roles += [r for k, r in enumerate(b.roles) if k not in right]
    return Tensor(data, roles)


def tensor_product(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(np.multiply.outer(a.data, b.data), a.roles + b.roles)


def flip(a: Tensor, kind: str) -> Tensor:
    """Apply one of the three flips (see FLIP_KINDS).

    Dagger and transpose move the input legs to the front (they become
    outputs) and the output legs to the back, so a canonically ordered
    tensor stays canonical and flipping twice is the identity.
    """
    if kind == "conjugate":
        return Tensor(np.conj(a.data), a.roles)
    if kind not in ("dagger", "transpose"):
        raise ArgumentError(f"unknown flip kind {kind!r}")
    ins = [i for i, r in enumerate(a.roles) if r == IN]
    outs = [i for i, r in enumerate(a.roles) if r == OUT]
    data = np.transpose(a.data, ins + outs)
    if kind == "dagger":
        data = np.conj(data)
    return Tensor(data, (OUT,) * len(ins) + (IN,) * len(outs))


def max_deviation(a: Tensor, b: Tensor) -> float:
    if a.extents != b.extents or a.roles != b.roles:
        raise DimensionError(f"shape mismatch: {a.extents}/{a.roles} vs {b.extents}/{b.roles}")
    if a.rank == 0 and a.data.size == 1:
        return float(abs(a.data - b.data))
    return float(np.max(np.abs(a.data - b.data), initial=0.0))


def equal_up_to_scalar(a: Tensor, b: Tensor, tol: float | None = None) -> complex | None:
    """Return λ with a = λ·b, or None when no such λ exists."""
    tol = default_tol() if tol is None else tol
    if a.extents != b.extents or a.roles != b.roles:
        raise DimensionError(f"shape mismatch: {a.extents}/{a.roles} vs {b.extents}/{b.roles}")
    x, y = a.entries, b.entries
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx <= tol and ny <= tol:
        return 1 + 0j
    if ny <= tol:
        return None
    lam = complex(np.vdot(y, x) / np.vdot(y, y))
    if np.max(np.abs(x - lam * y), initial=0.0) <= tol:
        return lam
    return None
