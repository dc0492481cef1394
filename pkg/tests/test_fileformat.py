import copy
import json

import numpy as np
import pytest

from qdiagrams import fileformat
from qdiagrams.diagram import isomorphic, spider
from qdiagrams.errors import ParseError
from qdiagrams.evaluator import evaluate
from qdiagrams.fixtures import MALFORMED_EDGE, diagrams
from qdiagrams.protocols import qotp_protocol, random_entangling_attack, teleportation
from qdiagrams.randomize import random_diagram
from qdiagrams.tensor import max_deviation


def round_trip(d):
    text = fileformat.dumps(d)
    back = fileformat.loads(text)
    return text, back


def assert_same(a, b):
    assert isomorphic(a, b)
    assert sorted(a.nodes) == sorted(b.nodes) and a.edges == b.edges
    assert a.scalar == b.scalar and a.signature() == b.signature() and a.tags == b.tags
    assert np.array_equal(evaluate(a).data, evaluate(b).data)


@pytest.mark.parametrize("name", sorted(diagrams()))
def test_fixture_round_trip(name):
    d = diagrams()[name]
    text, back = round_trip(d)
    assert_same(d, back)
    assert fileformat.dumps(back) == text


def test_random_round_trip():
    rng = np.random.default_rng(21)
    for _ in range(40):
        d = random_diagram(rng)
        text, back = round_trip(d)
        assert_same(d, back)
        assert fileformat.dumps(back) == text


def test_attack_serialises_as_kraus_box():
    a = random_entangling_attack(2, np.random.default_rng(0))
    d = qotp_protocol(a)
    doc = fileformat.to_dict(d)
    boxes = [n for n in doc["nodes"] if n["kind"] == "box"]
    assert len(boxes) == 1 and "kraus" in boxes[0] and boxes[0]["out_dims"] == [2, 2]
    assert max_deviation(evaluate(fileformat.from_dict(doc)), evaluate(d)) == 0


def test_save_and_load(tmp_path):
    p = tmp_path / "t.json"
    fileformat.save(teleportation(), p)
    assert_same(fileformat.load(p), teleportation())
    with pytest.raises(ParseError):
        fileformat.load(tmp_path / "missing.json")


def base_doc():
    return fileformat.to_dict(diagrams()["sigma_x"])


def mutate(fn):
    doc = copy.deepcopy(base_doc())
    fn(doc)
    return doc


@pytest.mark.parametrize("fn", [
    lambda d: d.update(extra=1),
    lambda d: d["nodes"][0].update(color="red"),
    lambda d: d["edges"][0].update(weight=2),
    lambda d: d["edges"][0]["from"].update(note="x"),
    lambda d: d["inputs"][0].update(label="a"),
    lambda d: d["scalar"].update(phase=0),
])
def test_strict_mode_rejects_unknown_fields(fn):
    doc = mutate(fn)
    with pytest.raises(ParseError):
        fileformat.from_dict(doc)
    fileformat.from_dict(doc, strict=False)


@pytest.mark.parametrize("fn", [
    lambda d: d.update(version=99),
    lambda d: d.pop("version"),
    lambda d: d["nodes"][0].update(kind="gizmo"),
    lambda d: d["nodes"][0].update(matrix=[[1, 0], [0, 1]]),
    lambda d: d["nodes"][0].update(kraus=[]),
    lambda d: d["nodes"][0].update(matrix=[[[1, 0]], [[1, 0], [0, 0]]]),
    lambda d: d["edges"][0].update(thickness="medium"),
    lambda d: d["edges"][0].update(arrow="sideways"),
    lambda d: d["edges"][0]["from"].update(boundary="middle"),
    lambda d: d["edges"][0]["from"].update(node=0),
    lambda d: d["edges"][0].pop("to"),
    lambda d: d["edges"].append(dict(d["edges"][0])),
    lambda d: d["nodes"].append(dict(d["nodes"][0])),
    lambda d: d["inputs"][0].update(dim=-1),
    lambda d: d.update(scalar={"re": "one", "im": 0}),
])
def test_malformed_documents(fn):
    with pytest.raises(ParseError):
        fileformat.from_dict(mutate(fn))


def test_not_json():
    with pytest.raises(ParseError):
        fileformat.loads("{nope")
    with pytest.raises(ParseError):
        fileformat.loads("[]")


def test_malformed_edge_parses_but_is_invalid():
    from qdiagrams.diagram import validate

    d = fileformat.from_dict(MALFORMED_EDGE)
    assert any(v.kind == "incidence" for v in validate(d))


def test_pi_is_a_literal_number():
    doc = fileformat.to_dict(spider("z", 1, 1, np.pi))
    assert doc["nodes"][0]["phases"] == [0.0, np.pi]
    assert json.loads(json.dumps(doc))["nodes"][0]["phases"][1] == np.pi


def test_basis_ids_verbatim():
    text = fileformat.dumps(diagrams()["bb84_x_compliant"])
    assert '"basis": "x"' in text
