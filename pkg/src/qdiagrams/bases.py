"""Registry of orthonormal qubit bases and Bloch-sphere helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, BasisLookupError

# Angle between ψ_0 and the z axis: cos α = 1/√3 puts ψ_0 on (1,1,1)/√3.
ALPHA = float(np.arccos(1 / np.sqrt(3)))
SQRT_I = np.exp(1j * np.pi / 4)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

ORTHONORMAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Basis:
    id: str
    states: np.ndarray  # columns are the basis vectors

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.states.imag) == 0))

    def state(self, j: int) -> np.ndarray:
        return self.states[:, j].copy()


_REGISTRY: dict[str, Basis] = {}


def pauli(u: int, v: int) -> np.ndarray:
    """E_uv = σ_z^u σ_x^v."""
    return np.linalg.matrix_power(SIGMA_Z, u) @ np.linalg.matrix_power(SIGMA_X, v)


def psi(g: int) -> np.ndarray:
    """The two states of the (0,0) cube basis."""
    c, s = np.cos(ALPHA / 2), np.sin(ALPHA / 2)
    if g == 0:
        return np.array([c, SQRT_I * s], dtype=complex)
    if g == 1:
        return np.array([s, -SQRT_I * c], dtype=complex)
    raise ArgumentError(f"g must be 0 or 1, got {g!r}")


def eight_state_id(u: int, v: int) -> str:
    if u not in (0, 1) or v not in (0, 1):
        raise ArgumentError(f"(u, v) must be bits, got {(u, v)}")
    return f"eight:{u}{v}"


EIGHT_STATE_IDS = tuple(eight_state_id(u, v) for u in (0, 1) for v in (0, 1))


def _orthonormal_deviation(states: np.ndarray) -> float:
    gram = states.conj().T @ states
    return float(np.max(np.abs(gram - np.eye(states.shape[1]))))


def register_basis(basis_id: str, states, *, replace: bool = False) -> Basis:
    """Register a basis given as a square matrix whose columns are the states."""
    m = np.array(states, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ArgumentError("basis states must form a square matrix of columns")
    if not np.all(np.isfinite(m)):
        raise ArgumentError("basis states must be finite")
    dev = _orthonormal_deviation(m)
    if dev > ORTHONORMAL_TOL:
        raise ArgumentError(f"basis {basis_id!r} is not orthonormal (deviation {dev:.3g})")
    if basis_id in _REGISTRY and not replace:
        raise ArgumentError(f"basis {basis_id!r} already registered")
    m.setflags(write=False)
    b = Basis(basis_id, m)
    _REGISTRY[basis_id] = b
    return b


def get_basis(basis_id: str) -> Basis:
    try:
        return _REGISTRY[basis_id]
    except KeyError:
        raise BasisLookupError(f"unknown basis {basis_id!r}") from None


def registered_bases() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def basis_states(basis_id: str) -> list[np.ndarray]:
    b = get_basis(basis_id)
    return [b.state(j) for j in range(b.dim)]


def change_matrix(basis_id: str) -> np.ndarray:
    """U_B with the basis states as columns."""
    return get_basis(basis_id).states.copy()


def verify_orthonormal(basis_id: str) -> float:
    return _orthonormal_deviation(get_basis(basis_id).states)


def bloch_vector(state, tol: float = 1e-9) -> np.ndarray:
    v = np.asarray(state, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise ArgumentError("Bloch vectors are defined for qubit states only")
    if abs(np.linalg.norm(v) - 1) > tol:
        raise ArgumentError(f"state is not unit norm (norm {np.linalg.norm(v):.12g})")
    return np.array([np.vdot(v, p @ v).real for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def cipherstate(u: int, v: int, g: int) -> np.ndarray:
    """|u,v,g⟩ = σ_z^u σ_x^v ψ_g."""
    return pauli(u, v) @ psi(g)


def _register_builtins() -> None:
    register_basis("z", np.eye(2))
    register_basis("x", np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    for u in (0, 1):
        for v in (0, 1):
            cols = np.column_stack([cipherstate(u, v, 0), cipherstate(u, v, 1)])
            register_basis(eight_state_id(u, v), cols)


_register_builtins()
