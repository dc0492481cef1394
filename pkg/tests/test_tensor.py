import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdiagrams.errors import ArgumentError, DimensionError
from qdiagrams.tensor import (IN, OUT, Tensor, contract, default_tol, equal_up_to_scalar, flip,
                              max_deviation, tensor_product)

from conftest import rand_c

SX = np.array([[0, 1], [1, 0]])
SY = np.array([[0, -1j], [1j, 0]])


def test_entries_and_roles_must_agree():
    t = Tensor.from_entries((2, 3), range(6), (OUT, IN))
    assert t.extents == (2, 3) and t.entries.size == 6
    with pytest.raises(DimensionError):
        Tensor.from_entries((2, 2), range(5), (OUT, IN))
    with pytest.raises(DimensionError):
        Tensor(np.zeros((2, 2)), (OUT,))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_entries_rejected(bad):
    with pytest.raises(ArgumentError):
        Tensor([1.0, bad])
    with pytest.raises(ArgumentError):
        Tensor.scalar(complex(bad, 0))


def test_tensors_are_immutable():
    t = Tensor.matrix(SX)
    with pytest.raises(ValueError):
        t.data[0, 0] = 5


def test_pauli_x_flips_zero_to_one():
    out = contract(Tensor.matrix(SX), Tensor.ket([1, 0]), [(1, 0)])
    assert np.allclose(out.data, [0, 1]) and out.roles == (OUT,)


def test_inner_product_is_sum_of_conjugated_products(rng):
    phi, psi = rand_c(rng, 3), rand_c(rng, 3)
    got = contract(Tensor.bra(phi), Tensor.ket(psi), [(0, 0)]).data
    assert abs(got - sum(np.conj(phi[i]) * psi[i] for i in range(3))) < 1e-12


def test_trace_of_identity_is_dimension():
    i2 = Tensor.matrix(np.eye(2))
    assert abs(contract(i2, i2, [(0, 1), (1, 0)]).data - 2) < 1e-12


@pytest.mark.parametrize("pairs, err", [([(1, 0), (1, 0)], ArgumentError), ([(0, 0)], ArgumentError)])
def test_contract_rejects_bad_pairs(pairs, err):
    with pytest.raises(err):
        contract(Tensor.matrix(SX), Tensor.ket([1, 0]), pairs)


def test_contract_extent_mismatch():
    with pytest.raises(DimensionError):
        contract(Tensor.matrix(SX), Tensor.ket([1, 0, 0]), [(1, 0)])


def test_ket_times_bra_is_outer_product(rng):
    psi, phi = rand_c(rng, 2), rand_c(rng, 2)
    t = tensor_product(Tensor.ket(psi), Tensor.bra(phi))
    assert np.allclose(t.as_matrix(), np.outer(psi, phi.conj()))


def test_scalar_product_and_basis_product():
    t = Tensor.matrix(SX)
    assert np.allclose(tensor_product(Tensor.scalar(2), t).data, 2 * SX)
    zz = tensor_product(Tensor.ket([1, 0]), Tensor.ket([1, 0]))
    assert np.allclose(zz.entries, [1, 0, 0, 0])


def test_flip_of_ket_is_bra(rng):
    psi = rand_c(rng, 2)
    assert max_deviation(flip(Tensor.ket(psi), "dagger"), Tensor.bra(psi)) < 1e-15


def test_pauli_y_flips():
    y = Tensor.matrix(SY)
    assert np.allclose(flip(y, "transpose").data, -SY)
    assert np.allclose(flip(y, "dagger").data, SY)


def test_conjugate_negates_spider_phases():
    a = 0.7
    spider = Tensor(np.array([1, 0, 0, np.exp(1j * a)]).reshape(2, 2), (OUT, IN))
    minus = Tensor(np.array([1, 0, 0, np.exp(-1j * a)]).reshape(2, 2), (OUT, IN))
    assert max_deviation(flip(spider, "conjugate"), minus) < 1e-15


def test_flip_unknown_kind():
    with pytest.raises(ArgumentError):
        flip(Tensor.matrix(SX), "rotate")


@pytest.mark.parametrize("kind", ["dagger", "conjugate", "transpose"])
def test_flip_twice_is_identity(kind, rng):
    t = Tensor(rand_c(rng, 2, 3, 2, 4), (OUT, OUT, IN, IN))
    assert max_deviation(flip(flip(t, kind), kind), t) == 0


def test_transpose_is_dagger_then_conjugate(rng):
    t = Tensor(rand_c(rng, 2, 3, 4), (OUT, IN, IN))
    assert max_deviation(flip(t, "transpose"), flip(flip(t, "dagger"), "conjugate")) == 0


def test_contract_associative_over_disjoint_pairs(rng):
    a = Tensor(rand_c(rng, 2, 3, 2), (OUT, OUT, OUT))
    b = Tensor(rand_c(rng, 3, 2, 2), (IN, IN, OUT))
    both = contract(a, b, [(0, 1), (1, 0)])
    first = contract(a, b, [(0, 1)])  # legs: a1 a2 | b0 b2
    step = Tensor(np.einsum("iijk->jk", first.data.transpose(0, 2, 1, 3)), (OUT, OUT))
    assert max_deviation(both, step) < 1e-12


def test_product_then_contraction_is_matrix_product(rng):
    a, b = rand_c(rng, 2, 2), rand_c(rng, 2, 2)
    got = contract(Tensor.matrix(a), Tensor.matrix(b), [(1, 0)]).data
    oracle = np.array([[sum(a[i, k] * b[k, j] for k in range(2)) for j in range(2)] for i in range(2)])
    assert np.allclose(got, oracle)


def test_scalar_match_examples():
    assert abs(equal_up_to_scalar(Tensor.matrix(3 * np.eye(2)), Tensor.matrix(np.eye(2))) - 3) < 1e-12
    assert equal_up_to_scalar(Tensor.matrix(SX), Tensor.matrix(np.diag([1, -1]))) is None
    with pytest.raises(DimensionError):
        equal_up_to_scalar(Tensor.ket([1, 0]), Tensor.ket([1, 0, 0]))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_scalar_match_recovers_lambda(seed, re, im):
    lam = complex(re, im)
    if abs(lam) < 1e-3:
        lam = 1 + 1j
    t = Tensor(rand_c(np.random.default_rng(seed), 2, 3), (OUT, IN))
    got = equal_up_to_scalar(t.scaled(lam), t)
    assert got is not None and abs(got - lam) < 1e-9


def test_tolerance_env_override(monkeypatch):
    monkeypatch.setenv("QDIAGRAMS_TOL", "1e-6")
    assert default_tol() == 1e-6
    monkeypatch.delenv("QDIAGRAMS_TOL")
    assert default_tol() == 1e-9
