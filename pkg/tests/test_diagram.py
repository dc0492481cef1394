import numpy as np
import pytest

from qdiagrams.bases import SIGMA_X, SIGMA_Z
from qdiagrams.diagram import (Box, Diagram, Discard, Edge, Effect, End, MixedPrep, Spider, StatePrep, Wire,
                               box, bra, compose, compose_all, cup, effect, flip_diagram, from_generator,
                               identity, isomorphic, parallel, permute_outputs, scalar_diagram, spider, state,
                               tensor_all, validate)
from qdiagrams.doubling import decode, encode
from qdiagrams.errors import ArgumentError, CompositionError
from qdiagrams.evaluator import evaluate
from qdiagrams.randomize import random_diagram
from qdiagrams.tensor import Tensor, contract, flip, max_deviation, tensor_product

from conftest import rand_c


def kinds(d):
    return sorted(v.kind for v in validate(d))


def test_bra_ket_composition(rng):
    phi, psi = rand_c(rng, 2), rand_c(rng, 2)
    got = evaluate(compose(bra(phi), state(psi))).data
    assert abs(got - np.vdot(phi, psi)) < 1e-12


def test_identity_is_a_unit_for_composition(rng):
    d = box(rand_c(rng, 2, 2))
    assert isomorphic(compose(identity(1), d), d)
    assert isomorphic(compose(d, identity(1)), d)


def test_decode_x_after_encode_z_is_half_a_disconnect():
    disconnect = compose(spider("x", 0, 1), spider("z", 1, 0))
    got = evaluate(compose(decode("x"), encode("z")))
    assert max_deviation(got, evaluate(disconnect).scaled(0.5)) < 1e-12


def test_compose_mismatch():
    with pytest.raises(CompositionError):
        compose(identity(2), identity(1))
    with pytest.raises(CompositionError):
        compose(identity(1, thick=True), identity(1))


def test_parallel_states(rng):
    a, b = rand_c(rng, 2), rand_c(rng, 2)
    assert np.allclose(evaluate(parallel(state(a), state(b))).entries, np.kron(a, b))


def test_parallel_units(rng):
    d = box(rand_c(rng, 2, 2))
    assert isomorphic(parallel(d, Diagram()), d)
    lam = 2 - 1j
    scaled = parallel(scalar_diagram(lam), d)
    assert abs(scaled.scalar - lam) < 1e-15
    assert max_deviation(evaluate(scaled), evaluate(d).scaled(lam)) < 1e-12


def test_dagger_of_state_is_bra(rng):
    psi = rand_c(rng, 2)
    assert isomorphic(flip_diagram(state(psi), "dagger"), bra(psi))


def test_conjugate_twice_is_identity(rng):
    d = random_diagram(rng)
    assert isomorphic(flip_diagram(flip_diagram(d, "conjugate"), "conjugate"), d)


def test_conjugate_phase_spider_negates_phase():
    a = 0.9
    got = evaluate(flip_diagram(spider("z", 1, 1, a), "conjugate"))
    assert max_deviation(got, evaluate(spider("z", 1, 1, -a))) < 1e-12


@pytest.mark.parametrize("kind", ["dagger", "conjugate", "transpose"])
def test_flips_commute_with_evaluation(kind):
    rng = np.random.default_rng(7)
    for _ in range(30):
        d = random_diagram(rng)
        f = flip_diagram(d, kind)
        assert validate(f) == []
        assert max_deviation(evaluate(f), flip(evaluate(d), kind)) < 1e-9


def test_closed_diagram_invariant_under_rotation(rng):
    d = compose(bra(rand_c(rng, 2)), compose(box(rand_c(rng, 2, 2)), state(rand_c(rng, 2))))
    assert abs(evaluate(flip_diagram(d, "transpose")).data - evaluate(d).data) < 1e-12


def test_compose_matches_contraction(rng):
    a, b = box(rand_c(rng, 2, 2)), box(rand_c(rng, 2, 2))
    oracle = contract(evaluate(a), evaluate(b), [(1, 0)])
    assert max_deviation(evaluate(compose(a, b)), oracle) < 1e-12


def test_parallel_matches_tensor_product(rng):
    a, b = box(rand_c(rng, 2, 2)), state(rand_c(rng, 2))
    got = evaluate(parallel(a, b))  # legs: out_a, out_b, in_a
    oracle = tensor_product(evaluate(a), evaluate(b))  # legs: out_a, in_a, out_b
    assert np.allclose(got.data, oracle.data.transpose(0, 2, 1))


def test_bell_pair_is_valid():
    assert validate(cup()) == []
    assert np.allclose(evaluate(cup()).entries, [1, 0, 0, 1])


def test_orientation_violation():
    d = Diagram()
    e = d.add(Effect(np.array([1, 0])))
    d.connect(d.add_input(), End(e, "in", 0), arrow=False)
    assert kinds(d) == ["orientation"]


def test_thickness_violation():
    d = Diagram()
    b = d.add(Box.from_matrix(SIGMA_X))
    d.connect(d.add_input(True), End(b, "in", 0), thick=True)
    d.connect(End(b, "out", 0), d.add_output())
    assert "thickness" in kinds(d)


def test_incidence_violations():
    d = Diagram()
    s = d.add(Spider.make("z", 1, 1))
    d.connect(d.add_input(), End(s, "in", 0))
    v = validate(d)
    assert [x.kind for x in v] == ["incidence"] and v[0].nodes == (s,)
    d.connect(End(s, "out", 7), d.add_output())
    assert any(x.kind == "incidence" and x.edges for x in validate(d))


def test_phase_and_basis_violations():
    assert kinds(from_generator(Spider("z", (0.3, 1.0), (False,), (False,)))) == ["phase"]
    assert kinds(from_generator(Spider("z", (0.0,), (False,), (False,)))) == ["phase"]
    assert kinds(from_generator(Spider("nope", (0.0, 0.0), (), ()))) == ["basis"]


def test_discard_and_mixed_only_on_thick():
    g = Discard()
    assert g.in_ports == ((True, 2),)
    d = Diagram()
    n = d.add(g)
    d.connect(d.add_input(False), End(n, "in", 0), thick=False)
    assert "thickness" in kinds(d)
    assert MixedPrep.identity().out_ports == ((True, 2),)


def test_dimension_violation():
    d = Diagram()
    b = d.add(Box.from_matrix(np.eye(3)))
    d.connect(d.add_input(dim=2), End(b, "in", 0))
    d.connect(End(b, "out", 0), d.add_output(dim=3))
    assert kinds(d) == ["dimension"]


def test_compose_all_order(rng):
    a, b = rand_c(rng, 2, 2), rand_c(rng, 2, 2)
    got = evaluate(compose_all(box(a), box(b))).as_matrix()
    assert np.allclose(got, b @ a)


def test_tensor_all_and_permute(rng):
    u, v = rand_c(rng, 2), rand_c(rng, 2)
    d = tensor_all([state(u), state(v)])
    swapped = permute_outputs(d, [1, 0])
    assert np.allclose(evaluate(swapped).entries, np.kron(v, u))
    with pytest.raises(ArgumentError):
        permute_outputs(d, [0, 0])


def test_isomorphism_distinguishes_payloads():
    assert not isomorphic(box(SIGMA_X), box(SIGMA_Z))
    assert isomorphic(box(SIGMA_X), box(SIGMA_X))
    assert not isomorphic(spider("z", 1, 1, 0.5), spider("z", 1, 1, 0.6))


def test_flip_unknown_kind():
    with pytest.raises(ArgumentError):
        flip_diagram(cup(), "mirror")


def test_spider_make_and_dagger():
    s = Spider.make("x", 2, 1, 0.4)
    assert s.phases == (0.0, 0.4) and s.n_in == 2 and s.n_out == 1
    t = s.dagger()
    assert t.n_in == 1 and t.n_out == 2 and abs(t.phases[1] - (2 * np.pi - 0.4)) < 1e-12


def test_generators_dagger_round_trip(rng):
    v = rand_c(rng, 2)
    assert isinstance(StatePrep(v).dagger(), Effect)
    assert isinstance(Discard().dagger(), MixedPrep)
    assert isinstance(MixedPrep.identity().dagger(), Discard)
    assert np.allclose(effect(v).nodes[0].covector, v)


def test_edge_and_wire_are_values():
    assert Wire(True, 2) == Wire(True, 2)
    e = Edge(End(None, "in", 0), End(None, "out", 0))
    assert not e.thick and e.arrow
