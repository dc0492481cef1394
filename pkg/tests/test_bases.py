import itertools

import numpy as np
import pytest

from qdiagrams import bases
from qdiagrams.bases import (ALPHA, EIGHT_STATE_IDS, basis_states, bloch_vector, change_matrix, cipherstate,
                             get_basis, pauli, psi, register_basis, verify_orthonormal)
from qdiagrams.errors import ArgumentError, BasisLookupError


def bloch_from_density(v):
    rho = np.outer(v, np.conj(v))
    return np.array([2 * rho[1, 0].real, 2 * rho[1, 0].imag, (rho[0, 0] - rho[1, 1]).real])


def test_z_and_x_states():
    z0, z1 = basis_states("z")
    assert np.allclose(z0, [1, 0]) and np.allclose(z1, [0, 1])
    x0, x1 = basis_states("x")
    assert np.allclose(x0, np.array([1, 1]) / np.sqrt(2))
    assert np.allclose(x1, np.array([1, -1]) / np.sqrt(2))


def test_cube_basis_states():
    c, s, r = np.cos(ALPHA / 2), np.sin(ALPHA / 2), np.exp(1j * np.pi / 4)
    p0, p1 = basis_states("eight:00")
    assert np.allclose(p0, [c, r * s], atol=1e-15)
    assert np.allclose(p1, [s, -r * c], atol=1e-15)


def test_bloch_of_zero_and_psi0():
    assert np.allclose(bloch_vector([1, 0]), [0, 0, 1])
    assert np.allclose(bloch_vector(psi(0)), np.ones(3) / np.sqrt(3), atol=1e-12)


@pytest.mark.parametrize("u,v,g", list(itertools.product((0, 1), repeat=3)))
def test_cipherstates_on_cube_corners(u, v, g):
    want = (-1) ** g * np.array([(-1) ** u, (-1) ** (u + v), (-1) ** v]) / np.sqrt(3)
    got = bloch_vector(cipherstate(u, v, g))
    assert np.max(np.abs(got - want)) < 1e-12
    assert np.max(np.abs(bloch_from_density(cipherstate(u, v, g)) - want)) < 1e-12


def test_cipherstates_form_a_cube():
    pts = [bloch_vector(cipherstate(*t)) for t in itertools.product((0, 1), repeat=3)]
    corners = [np.array(c) / np.sqrt(3) for c in itertools.product((-1, 1), repeat=3)]

    def distances(ps):
        return sorted(round(float(np.linalg.norm(a - b)), 9) for a, b in itertools.combinations(ps, 2))

    assert distances(pts) == distances(corners)
    assert len({tuple(np.round(p, 9)) for p in pts}) == 8


@pytest.mark.parametrize("bid", ["z", "x", *EIGHT_STATE_IDS])
def test_builtins_orthonormal(bid):
    assert verify_orthonormal(bid) <= 1e-12
    u = change_matrix(bid)
    assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12


def test_pauli_products():
    sx = np.array([[0, 1], [1, 0]])
    sz = np.diag([1, -1])
    assert np.allclose(pauli(0, 0), np.eye(2))
    assert np.allclose(pauli(1, 1), sz @ sx)
    assert abs(np.vdot(psi(0), psi(1))) < 1e-12


def test_registration_rules():
    with pytest.raises(ArgumentError):
        register_basis("bad", [[1, 1], [0, 1]])
    with pytest.raises(ArgumentError):
        register_basis("z", np.eye(2))
    b = register_basis("y-test", np.array([[1, 1], [1j, -1j]]) / np.sqrt(2), replace=True)
    assert get_basis("y-test") is b and not b.is_real
    with pytest.raises(BasisLookupError):
        get_basis("nope")
    with pytest.raises(KeyError):
        get_basis("nope")


def test_bloch_rejects_non_unit():
    with pytest.raises(ArgumentError):
        bloch_vector([1, 1])
    with pytest.raises(ArgumentError):
        psi(2)
    with pytest.raises(ArgumentError):
        bases.eight_state_id(2, 0)
