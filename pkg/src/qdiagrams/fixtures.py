"""Example diagram files used by the CLI tests and the README."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import fileformat
from .bases import SIGMA_X, SIGMA_Z
from .diagram import Diagram, End, Spider, box, bra, compose, cup, identity, parallel, spider, state
from .doubling import decode, encode, fully_mixed
from .protocols import bb84_channel, compliant_attack, qotp_eve_branch, qotp_protocol, teleportation

PSI = np.array([0.6, 0.8j])


def sbend() -> Diagram:
    """(cap ⊗ 1) ∘ (1 ⊗ cup), which straightens to a plain wire."""
    d = Diagram()
    c = d.add(Spider.make("z", 0, 2), "cup")
    k = d.add(Spider.make("z", 2, 0), "cap")
    d.connect(d.add_input(), End(k, "in", 0))
    d.connect(End(c, "out", 0), End(k, "in", 1))
    d.connect(End(c, "out", 1), d.add_output())
    return d


def cup_effect() -> Diagram:
    """⟨ψ*| applied to the first leg of the cup."""
    return compose(parallel(bra(np.conj(PSI)), identity(1)), cup())


def diagrams() -> dict[str, Diagram]:
    u = np.array([[0, 1], [1, 0]])
    attack = compliant_attack(u, [1, 0])
    return {
        "bell_00": cup(),
        "closed_spider": spider("z"),
        "wire": identity(1),
        "sbend": sbend(),
        "state_psi": state(PSI),
        "cup_effect": cup_effect(),
        "sigma_x": box(SIGMA_X, "σx"),
        "sigma_z": box(SIGMA_Z, "σz"),
        "qotp_noattack": qotp_protocol(),
        "qotp_eve_branch": qotp_eve_branch(),
        "teleport": teleportation(),
        "decode_z_encode_z": compose(decode("z"), encode("z")),
        "decode_x_encode_z": compose(decode("x"), encode("z")),
        "fully_mixed": fully_mixed(),
        "bb84_x_compliant": bb84_channel("x", attack),
    }


MALFORMED_EDGE = {
    "version": fileformat.FORMAT_VERSION,
    "scalar": {"re": 1.0, "im": 0.0},
    "inputs": [{"thickness": "thin", "dim": 2}],
    "outputs": [{"thickness": "thin", "dim": 2}],
    "nodes": [{"id": 0, "kind": "spider", "basis": "z", "phases": [0.0, 0.0],
               "inputs": ["thin"], "outputs": ["thin"], "doubled": False, "conj": False}],
    "edges": [
        {"id": 0, "from": {"boundary": "input", "port": 0}, "to": {"node": 0, "port": 0},
         "thickness": "thin", "arrow": "forward"},
        {"id": 1, "from": {"node": 0, "port": 5}, "to": {"boundary": "output", "port": 0},
         "thickness": "thin", "arrow": "forward"},
    ],
}


def write_fixtures(directory) -> list[Path]:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for name, d in diagrams().items():
        p = root / f"{name}.json"
        fileformat.save(d, p)
        written.append(p)
    p = root / "malformed_edge.json"
    p.write_text(json.dumps(MALFORMED_EDGE, indent=2) + "\n", encoding="utf-8")
    written.append(p)
    return written
