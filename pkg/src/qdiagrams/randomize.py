"""Random diagrams for property tests of the structural operations."""

from __future__ import annotations

import numpy as np

from .bases import EIGHT_STATE_IDS
from .diagram import (Box, Diagram, Discard, Effect, End, MixedPrep, Spider, StatePrep, identity, parallel,
                      state, tensor_all)
from .rewrite import close_boundary

_BASES = ("z", "x") + EIGHT_STATE_IDS


def _cvec(rng, *shape) -> np.ndarray:
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def _phases(rng) -> tuple:
    return (0.0, float(rng.uniform(0, 2 * np.pi)))


def _spider(rng, pure: bool) -> Spider:
    mode = "thin" if pure else rng.choice(["thin", "bastard", "doubled"])
    n_in, n_out = int(rng.integers(0, 3)), int(rng.integers(0, 3))

    def legs(n):
        if mode == "bastard":
            return tuple(bool(rng.integers(2)) for _ in range(n))
        return (mode == "doubled",) * n

    return Spider(str(rng.choice(_BASES)), _phases(rng), legs(n_in), legs(n_out),
                  mode == "doubled", bool(rng.integers(2)))


def random_generator(rng: np.random.Generator, pure: bool = False):
    """One qubit generator; with ``pure`` only thin, unconjugated ones are drawn."""
    kinds = ["spider", "spider", "box", "state", "effect"]
    if not pure:
        kinds += ["discard", "mixed"]
    kind = rng.choice(kinds)
    doubled = not pure and bool(rng.integers(2))
    if kind == "spider":
        g = _spider(rng, pure)
    elif kind == "box":
        n = int(rng.integers(1, 3)) if doubled else 1
        g = Box("R", tuple(_cvec(rng, 2, 2) for _ in range(n)), (2,), (2,), doubled)
    elif kind == "state":
        g = StatePrep(_cvec(rng, 2), doubled)
    elif kind == "effect":
        g = Effect(_cvec(rng, 2), doubled)
    elif kind == "discard":
        g = Discard(2, None if rng.integers(2) else _cvec(rng, 2, 2))
    else:
        m = _cvec(rng, 2, 2)
        g = MixedPrep(m @ m.conj().T)
    return g.conjugate() if not pure and rng.integers(2) else g


def _required_arrow(d: Diagram, end: End):
    g = d.nodes[end.node]
    if g.polar and not d.port(end)[0]:
        return not g.conj_arrows
    return None


def random_diagram(rng: np.random.Generator, max_nodes: int = 6, pure: bool = False,
                   link_prob: float = 0.6) -> Diagram:
    """Up to ``max_nodes`` random generators, randomly wired, free ports sent to the boundary."""
    d = Diagram(scalar=complex(rng.normal(), rng.normal()))
    for _ in range(int(rng.integers(1, max_nodes + 1))):
        d.add(random_generator(rng, pure))
    outs = [End(n, "out", i) for n in sorted(d.nodes) for i in range(len(d.nodes[n].out_ports))]
    ins = [End(n, "in", i) for n in sorted(d.nodes) for i in range(len(d.nodes[n].in_ports))]
    rng.shuffle(outs)
    rng.shuffle(ins)
    for a in outs:
        if rng.random() >= link_prob:
            continue
        for b in ins:
            wants = {_required_arrow(d, a), _required_arrow(d, b)} - {None}
            if d.port(b) == d.port(a) and len(wants) <= 1:
                ins.remove(b)
                d.connect(a, b)
                break
    return close_boundary(d)


def random_composable_pair(rng: np.random.Generator, max_nodes: int = 3) -> tuple[Diagram, Diagram]:
    """Pure diagrams (top, bottom) with bottom's outputs matching top's inputs."""
    top = random_diagram(rng, max_nodes, pure=True)
    bottom = random_diagram(rng, max_nodes, pure=True)
    gap = len(top.inputs) - len(bottom.outputs)
    if gap > 0:
        bottom = parallel(bottom, tensor_all([state(_cvec(rng, 2)) for _ in range(gap)]))
    elif gap < 0:
        top = parallel(top, identity(-gap))
    return top, bottom
