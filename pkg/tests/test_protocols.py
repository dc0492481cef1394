import itertools

import numpy as np
import pytest

from qdiagrams.bases import EIGHT_STATE_IDS, bloch_vector, cipherstate, get_basis, pauli
from qdiagrams.diagram import isomorphic
from qdiagrams.doubling import Channel
from qdiagrams.errors import ArgumentError, PreconditionError
from qdiagrams.evaluator import Superoperator, evaluate, evaluate_channel
from qdiagrams.protocols import (AttackSpec, bb84_channel, channel_scalar, cnot_copy_attack, compliant_attack,
                                 decoupling_check, dephasing_attack, eight_state_protocol, eight_state_qotp,
                                 encryption_pullthrough_check, eve_marginal_deviation, identity_attack,
                                 intercept_resend_attack, marginal_deviation, non_disturbance_check,
                                 pullthrough_check, qotp_encrypt, qotp_eve_branch, qotp_protocol,
                                 random_compliant_attack, random_entangling_attack, random_unitary,
                                 teleport_matches_qotp, teleportation, decoupling_sweep, transition_matrix)
from qdiagrams.rewrite import simplify

IDENT = Superoperator.identity(2)


def test_cipherstate_examples():
    assert np.allclose(bloch_vector(cipherstate(1, 1, 0)), np.array([-1, 1, -1]) / np.sqrt(3))
    for u, v in itertools.product((0, 1), repeat=2):
        assert abs(np.vdot(cipherstate(u, v, 0), cipherstate(u, v, 1))) < 1e-12
        for g in (0, 1):
            assert np.allclose(cipherstate(u, v, g), get_basis(f"eight:{u}{v}").state(g))


@pytest.mark.parametrize("u,v", list(itertools.product((0, 1), repeat=2)))
def test_encryption_applies_key_pauli(u, v):
    assert np.allclose(evaluate(qotp_encrypt(u, v)).as_matrix(), pauli(u, v))


def test_qotp_is_quarter_identity():
    lam = channel_scalar(qotp_protocol(), IDENT)
    assert lam is not None and abs(lam - 0.25) < 1e-9


def twirl(rho):
    return sum(pauli(u, v) @ rho @ pauli(u, v).conj().T for u in (0, 1) for v in (0, 1)) / 4


def test_pauli_twirl_oracle():
    ch = evaluate_channel(qotp_eve_branch())
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        out = ch.apply(rho)
        assert np.allclose(twirl(rho), np.trace(rho) * np.eye(2) / 2)
        assert np.allclose(out, np.trace(rho) * np.eye(2) / 2)
    assert marginal_deviation(ch) < 1e-12


@pytest.mark.parametrize("eve_dim", [2, 4])
def test_eve_marginal_is_input_independent(eve_dim):
    rng = np.random.default_rng(eve_dim)
    assert eve_marginal_deviation() < 1e-9
    for _ in range(5):
        assert eve_marginal_deviation(random_entangling_attack(eve_dim, rng)) < 1e-9


def test_attacked_qotp_has_eve_output():
    a = cnot_copy_attack()
    d = qotp_protocol(a)
    assert [w.dim for w in d.outputs] == [2, 2] and all(w.thick for w in d.outputs)


def test_teleportation_is_identity_channel():
    lam = channel_scalar(teleportation(), IDENT)
    assert lam is not None and abs(lam.imag) < 1e-9 and lam.real > 0
    out = evaluate_channel(teleportation()).apply(np.diag([1, 0]))
    assert np.allclose(out / np.trace(out), np.diag([1, 0]))


def test_teleportation_rewrites_to_qotp():
    assert teleport_matches_qotp()
    yanked, trace = simplify(teleportation(), ["yank"])
    assert len(trace) >= 1 and {s.rule for s in trace.steps} == {"yank"}
    assert not isomorphic(yanked, teleportation())


def test_bb84_examples():
    assert non_disturbance_check(identity_attack(), "z") < 1e-12
    m = evaluate(bb84_channel("z")).as_matrix()
    assert np.allclose(m, np.eye(2))
    rng = np.random.default_rng(1)
    a = random_compliant_attack(2, rng)
    for b in ("z", "x"):
        assert non_disturbance_check(a, b) < 1e-9
    assert non_disturbance_check(dephasing_attack("z"), "x") > 0.1
    with pytest.raises(ArgumentError):
        bb84_channel("eight:00")


def test_eight_state_family():
    family = eight_state_protocol()
    assert set(family) == set(itertools.product((0, 1), repeat=2))
    for (u, v), d in family.items():
        basis = get_basis(f"eight:{u}{v}").states
        assert np.allclose(basis.conj().T @ evaluate(d).as_matrix() @ basis, np.eye(2))
    for b in EIGHT_STATE_IDS:
        assert non_disturbance_check(None, b) < 1e-12
    a = random_compliant_attack(4, np.random.default_rng(2))
    assert max(non_disturbance_check(a, b) for b in EIGHT_STATE_IDS) < 1e-9
    ir = intercept_resend_attack("z")
    assert max(non_disturbance_check(ir, b) for b in EIGHT_STATE_IDS) > 0.1


def test_eight_state_qotp_is_classical_identity():
    m = evaluate(eight_state_qotp()).as_matrix()
    u = get_basis("eight:00").states
    p = u.conj().T @ m @ u
    assert np.allclose(p / p[0, 0], np.eye(2))


def test_compliant_attack_examples():
    a = compliant_attack(np.eye(2), [1, 0])
    rho = np.array([[0.3, 0.2j], [-0.2j, 0.7]])
    out = a.superoperator().apply(rho).reshape(2, 2, 2, 2)
    assert np.allclose(np.einsum("aiaj->ij", out), rho)
    for bad in ([[1, 1], [0, 1]],):
        with pytest.raises(ArgumentError):
            compliant_attack(bad, [1, 0])
    with pytest.raises(ArgumentError):
        compliant_attack(np.eye(2), [1, 1])


def test_decoupling_reports():
    rng = np.random.default_rng(3)
    u, psi = random_unitary(4, rng), random_unitary(4, rng)[:, 0]
    r = decoupling_check(compliant_attack(u, psi))
    assert r.decoupled and r.product_deviation < 1e-9
    assert np.allclose(r.rho_eve, np.outer(u @ psi, (u @ psi).conj()))
    bad = decoupling_check(cnot_copy_attack())
    assert not bad.decoupled and bad.product_deviation >= 0.4 and bad.rho_eve is None
    triv = decoupling_check(identity_attack(1))
    assert triv.decoupled and np.allclose(triv.rho_eve, [[1]])


def test_cnot_copy_disturbance():
    a = cnot_copy_attack()
    assert non_disturbance_check(a, "z") < 1e-9
    assert non_disturbance_check(a, "x") >= 0.4
    assert np.allclose(transition_matrix(a, "x"), 0.5 * np.ones((2, 2)))


@pytest.mark.parametrize("basis", ["z", "x", *EIGHT_STATE_IDS])
def test_pullthrough(basis):
    a = random_compliant_attack(2, np.random.default_rng(4))
    assert pullthrough_check(a, basis) < 1e-9


def test_pullthrough_dephasing_and_precondition():
    assert pullthrough_check(dephasing_attack("z"), "z") < 1e-9
    with pytest.raises(PreconditionError):
        pullthrough_check(dephasing_attack("z"), "x")


def test_encryption_pullthrough():
    a = random_compliant_attack(4, np.random.default_rng(5))
    assert encryption_pullthrough_check(a) < 1e-9
    assert encryption_pullthrough_check(cnot_copy_attack()) > 0.1


def test_sweep_small():
    s = decoupling_sweep(trials=10, seed=1)
    assert s.passed and len(s.compliant) == 10 and len(s.entangling) == 10
    assert {d for d, _, _ in s.compliant} == {2, 4}


def test_attack_spec_validation():
    with pytest.raises(ArgumentError):
        AttackSpec(Channel((np.eye(2),)), 2)
    with pytest.raises(ArgumentError):
        AttackSpec.from_kraus((0.5 * np.vstack([np.eye(2), np.eye(2)]),), 2)
