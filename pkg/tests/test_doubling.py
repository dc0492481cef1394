import numpy as np
import pytest

from qdiagrams.bases import EIGHT_STATE_IDS
from qdiagrams.diagram import (Diagram, End, Spider, box, compose, flip_diagram, identity, isomorphic, spider,
                               state, validate)
from qdiagrams.doubling import (Channel, Isometry, apply_channel, decode, discard, double, encode, fully_mixed,
                                mixed_state, purify)
from qdiagrams.errors import ArgumentError, BasisLookupError, DimensionError
from qdiagrams.evaluator import evaluate, evaluate_channel, interleave_double
from qdiagrams.protocols import compliant_attack, random_unitary
from qdiagrams.randomize import random_composable_pair, random_diagram
from qdiagrams.tensor import flip, max_deviation

from conftest import rand_c

SX = np.array([[0, 1], [1, 0]])


def random_channel(rng, n_kraus=3, d_in=2, d_out=2):
    ks = [rand_c(rng, d_out, d_in) for _ in range(n_kraus)]
    s = sum(k.conj().T @ k for k in ks)
    w, v = np.linalg.eigh(s)
    inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
    return Channel(tuple(k @ inv_sqrt for k in ks))


def test_double_state_is_conjugate_then_plain(rng):
    v = rand_c(rng, 2)
    assert np.allclose(evaluate(double(state(v))).entries, np.kron(v.conj(), v))


def test_double_pauli_channel():
    ch = evaluate_channel(double(box(SX)))
    rho = np.array([[0.2, 0.1 - 0.3j], [0.1 + 0.3j, 0.8]])
    assert np.allclose(ch.apply(rho), SX @ rho @ SX)


def test_double_rejects_thick():
    with pytest.raises(ArgumentError):
        double(identity(1, thick=True))


def test_double_squares_the_scalar_modulus(rng):
    d = box(rand_c(rng, 2, 2))
    d.scalar = 1 + 2j
    assert abs(double(d).scalar - 5) < 1e-15


def test_double_is_functorial():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = random_composable_pair(rng)
        lhs = evaluate(double(compose(a, b)))
        assert max_deviation(lhs, evaluate(compose(double(a), double(b)))) < 1e-9
        assert np.max(np.abs(lhs.data - interleave_double(evaluate(compose(a, b)).data))) < 1e-9


def test_double_commutes_with_dagger():
    rng = np.random.default_rng(4)
    for _ in range(20):
        d = random_diagram(rng, pure=True)
        assert max_deviation(evaluate(double(flip_diagram(d, "dagger"))),
                             evaluate(flip_diagram(double(d), "dagger"))) < 1e-9


def test_doubled_pure_map_has_psd_choi(rng):
    for _ in range(10):
        d = box(rand_c(rng, 2, 2))
        assert evaluate_channel(double(d)).is_completely_positive()


@pytest.mark.parametrize("basis", ["z", "x", *EIGHT_STATE_IDS])
def test_encode_decode_same_basis(basis):
    assert np.allclose(evaluate(compose(decode(basis), encode(basis))).as_matrix(), np.eye(2))


def test_decode_is_dagger_of_encode():
    assert isomorphic(decode("x"), flip_diagram(encode("x"), "dagger"))
    with pytest.raises(BasisLookupError):
        encode("nope")


def test_discard_is_trace_and_fully_mixed_is_identity(rng):
    a = rand_c(rng, 2, 2)
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    assert abs(evaluate_channel(discard(1)).apply(rho)[0, 0] - 1) < 1e-12
    assert np.allclose(evaluate(fully_mixed()).entries.reshape(2, 2), np.eye(2))
    assert np.allclose(evaluate(flip_diagram(discard(1), "dagger")).entries.reshape(2, 2), np.eye(2))
    assert abs(evaluate(compose(discard(1), fully_mixed())).data - 2) < 1e-12
    with pytest.raises(ArgumentError):
        discard(-1)


def test_discard_many():
    d = discard(2)
    assert len(d.inputs) == 2 and validate(d) == []


def test_bastard_fusion_semantics():
    d = Diagram()
    thin = d.add(Spider.make("x", 1, 1, thick_out=(True,)))
    thick = d.add(Spider.make("x", 1, 1, doubled=True))
    d.connect(d.add_input(), End(thin, "in", 0))
    d.connect(End(thin, "out", 0), End(thick, "in", 0))
    d.connect(End(thick, "out", 0), d.add_output(True))
    fused = spider("x", 1, 1, thick_out=(True,))
    assert max_deviation(evaluate(d), evaluate(fused)) < 1e-12


def test_apply_channel_examples(rng):
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(apply_channel(Channel.identity(), rho), rho)
    deph = Channel((np.diag([1, 0]), np.diag([0, 1])))
    assert np.allclose(apply_channel(deph, rho), np.eye(2) / 2)
    u = random_unitary(2, rng)
    assert np.allclose(apply_channel(Channel.unitary(u), rho), u @ rho @ u.conj().T)
    with pytest.raises(DimensionError):
        apply_channel(deph, np.eye(3) / 3)


def test_purification_examples():
    v = purify(Channel.identity())
    assert v.env_dim == 1 and np.allclose(v.matrix, np.eye(2))
    deph = Channel((np.diag([1, 0]), np.diag([0, 1])))
    w = purify(deph)
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert w.env_dim == 2 and np.allclose(w.trace_out_env(rho), apply_channel(deph, rho))
    assert w.isometry_deviation() < 1e-12


def test_compliant_attack_purifies_to_product(rng):
    u = random_unitary(3, rng)
    psi = random_unitary(3, rng)[:, 0]
    v = purify(compliant_attack(u, psi).channel)
    assert np.allclose(v.matrix, np.kron((u @ psi).reshape(-1, 1), np.eye(2)))


def test_purification_reproduces_random_channels():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        c = random_channel(rng, int(rng.integers(1, 5)))
        assert c.is_trace_preserving()
        a = rand_c(rng, 2, 2)
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        worst = max(worst, float(np.max(np.abs(purify(c).trace_out_env(rho) - apply_channel(c, rho)))))
    assert worst < 1e-9


def test_channel_box_matches_superoperator(rng):
    c = random_channel(rng)
    assert np.allclose(evaluate_channel(c.diagram()).matrix, c.superoperator().matrix)


def test_channel_and_isometry_validation():
    with pytest.raises(ArgumentError):
        Channel(())
    with pytest.raises(DimensionError):
        Channel((np.eye(2), np.eye(3)))
    with pytest.raises(DimensionError):
        Isometry(np.eye(3), 2)
    sub = Channel((0.5 * np.eye(2),))
    assert not sub.is_trace_preserving() and abs(sub.normalization_deviation() - 0.75) < 1e-12


def test_isometry_kraus_round_trip(rng):
    c = random_channel(rng, 2)
    v = purify(c)
    assert all(np.allclose(a, b) for a, b in zip(v.kraus(), c.kraus))


def test_mixed_state_diagram():
    rho = np.diag([0.25, 0.75])
    assert np.allclose(evaluate(mixed_state(rho)).entries.reshape(2, 2), rho.T)
