"""Local rewrite rules with scalar bookkeeping and an evaluation-based soundness oracle.

Every rule multiplies the diagram's scalar by its factor, so applying a rule
never changes what the diagram evaluates to.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import bases
from .diagram import (Box, Diagram, Discard, Edge, End, MixedPrep, Spider, _wrap, validate)
from .errors import ArgumentError, MatchError, RuleDomainError, ValidationError
from .evaluator import evaluate
from .tensor import default_tol, max_deviation

MUB_PAIR = frozenset({"z", "x"})


class SoundnessError(AssertionError):
    """A rewrite step changed the value of a diagram."""

    def __init__(self, message: str, before: Diagram, after: Diagram, deviation: float):
        super().__init__(message)
        self.before, self.after, self.deviation = before, after, deviation


@dataclass(frozen=True)
class Site:
    rule: str
    nodes: tuple
    variant: str = ""
    edges: tuple = ()

    def __str__(self) -> str:
        s = "nodes=" + ",".join(map(str, self.nodes))
        if self.edges:
            s += " edges=" + ",".join(map(str, self.edges))
        if self.variant:
            s += f" ({self.variant})"
        return s


@dataclass(frozen=True)
class Step:
    rule: str
    site: Site
    factor: complex


@dataclass
class RewriteTrace:
    steps: list = field(default_factory=list)
    completed: bool = True

    @property
    def total_factor(self) -> complex:
        f = 1 + 0j
        for s in self.steps:
            f *= s.factor
        return f

    def to_text(self) -> str:
        lines = []
        for k, s in enumerate(self.steps):
            lines.append(f"{k}\t{s.rule}\t{s.site}\t{_fmt_complex(s.factor)}")
        return "\n".join(lines)

    def replay(self, d: Diagram) -> Diagram:
        for s in self.steps:
            d = apply_rule(d, s.rule, s.site)
        return d

    def __len__(self) -> int:
        return len(self.steps)


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}j"


# ---------------------------------------------------------------- helpers


def _spiders(d: Diagram):
    return [(nid, d.nodes[nid]) for nid in sorted(d.nodes) if isinstance(d.nodes[nid], Spider)]


def _edges_between(d: Diagram, p: int, q: int) -> list[int]:
    return [eid for eid, e in sorted(d.edges.items())
            if {e.a.node, e.b.node} == {p, q} and e.a.node is not None and e.b.node is not None]


def _other(e: Edge, end: End) -> End:
    return e.b if e.a == end else e.a


def _at(d: Diagram, end: End) -> tuple[int, Edge]:
    for eid, e in d.edges.items():
        if e.a == end or e.b == end:
            return eid, e
    raise MatchError(f"no edge at {end}")


def _arrow(d: Diagram, a: End, b: End, fallback: bool = True) -> bool:
    for end in (a, b):
        if end.node is not None:
            g = d.nodes[end.node]
            if g.polar:
                return not g.conj_arrows
    return fallback


def _add_edge(d: Diagram, a: End, b: End, thick: bool, fallback: bool = True) -> int:
    eid = d.next_edge_id()
    d.edges[eid] = Edge(a, b, thick, _arrow(d, a, b, fallback))
    return eid


def _retarget(d: Diagram, mapping: Callable[[End], End]) -> None:
    for eid, e in list(d.edges.items()):
        d.edges[eid] = replace(e, a=mapping(e.a), b=mapping(e.b))


def _drop_legs(d: Diagram, nid: int, drop_in: set, drop_out: set, extra_in=(), extra_out=()):
    """Remove legs of spider ``nid`` (their edges must already be gone) and append new ones.

    Returns the ends of the appended legs.
    """
    g: Spider = d.nodes[nid]
    keep_in = [i for i in range(g.n_in) if i not in drop_in]
    keep_out = [j for j in range(g.n_out) if j not in drop_out]
    in_map = {old: new for new, old in enumerate(keep_in)}
    out_map = {old: new for new, old in enumerate(keep_out)}
    thick_in = tuple(g.thick_in[i] for i in keep_in) + tuple(extra_in)
    thick_out = tuple(g.thick_out[j] for j in keep_out) + tuple(extra_out)
    d.nodes[nid] = replace(g, thick_in=thick_in, thick_out=thick_out)

    def m(end: End) -> End:
        if end.node != nid:
            return end
        table = in_map if end.side == "in" else out_map
        return End(nid, end.side, table[end.index])

    _retarget(d, m)
    new_in = [End(nid, "in", len(keep_in) + k) for k in range(len(extra_in))]
    new_out = [End(nid, "out", len(keep_out) + k) for k in range(len(extra_out))]
    return new_in, new_out


def _merge_spiders(d: Diagram, p: int, q: int, conn: Sequence[int], make: Callable) -> None:
    """Replace spiders p, q (joined by edges ``conn``) by one node at p built by ``make``."""
    gp, gq = d.nodes[p], d.nodes[q]
    for eid in conn:
        del d.edges[eid]
    used = set()
    for e in d.edges.values():
        for end in (e.a, e.b):
            if end.node in (p, q):
                used.add(end)
    in_p = [i for i in range(gp.n_in) if End(p, "in", i) in used]
    in_q = [i for i in range(gq.n_in) if End(q, "in", i) in used]
    out_p = [j for j in range(gp.n_out) if End(p, "out", j) in used]
    out_q = [j for j in range(gq.n_out) if End(q, "out", j) in used]
    table = {}
    for k, i in enumerate(in_p):
        table[End(p, "in", i)] = End(p, "in", k)
    for k, i in enumerate(in_q):
        table[End(q, "in", i)] = End(p, "in", len(in_p) + k)
    for k, j in enumerate(out_p):
        table[End(p, "out", j)] = End(p, "out", k)
    for k, j in enumerate(out_q):
        table[End(q, "out", j)] = End(p, "out", len(out_p) + k)
    thick_in = tuple(gp.thick_in[i] for i in in_p) + tuple(gq.thick_in[i] for i in in_q)
    thick_out = tuple(gp.thick_out[j] for j in out_p) + tuple(gq.thick_out[j] for j in out_q)
    del d.nodes[q]
    d.tags.pop(q, None)
    d.nodes[p] = make(thick_in, thick_out)
    _retarget(d, lambda end: table.get(end, end))


def _splice(d: Diagram, nid: int) -> None:
    """Delete a 1-in/1-out node and join its two neighbours."""
    eid_in, e_in = _at(d, End(nid, "in", 0))
    del d.edges[eid_in]
    eid_out, e_out = _at(d, End(nid, "out", 0))
    del d.edges[eid_out]
    del d.nodes[nid]
    d.tags.pop(nid, None)
    _add_edge(d, e_in.a, e_out.b, e_in.thick, e_in.arrow)


def _phase_sum(g: Spider) -> complex:
    s = complex(np.sum(np.exp(1j * np.asarray(g.phases))))
    if g.conj:
        s = s.conjugate()
    return abs(s) ** 2 if g.doubled else s


def _pure_legs(g: Spider) -> bool:
    """Thin spider with thin legs, or doubled spider."""
    return g.doubled or not any(g.thick_in + g.thick_out)


def _is_real_basis(basis_id: str) -> bool:
    try:
        return bases.get_basis(basis_id).is_real
    except KeyError:
        return False


def is_bend(g) -> bool:
    return (isinstance(g, Spider) and g.basis == "z" and g.zero_phase and _pure_legs(g)
            and (g.n_in, g.n_out) in ((0, 2), (2, 0)))


# ---------------------------------------------------------------- rules


class Rule:
    id = ""
    description = ""

    def candidates(self, d: Diagram) -> list[Site]:
        """All matches, possibly overlapping, in ascending node order."""
        raise NotImplementedError

    def rewrite(self, d: Diagram, site: Site) -> complex:
        """Rewrite the private copy ``d`` in place and return the factor."""
        raise NotImplementedError

    def random_instance(self, rng: np.random.Generator) -> Diagram:
        raise NotImplementedError

    def check_site(self, d: Diagram, site: Site) -> None:
        if site.rule != self.id or site not in self.candidates(d):
            raise MatchError(f"{site} is not a current {self.id} site")

    def __repr__(self) -> str:
        return f"<rule {self.id}>"


class FuseSpiders(Rule):
    id = "fuse_spiders"
    description = "same-basis spiders joined by edges fuse, phases add"

    def candidates(self, d):
        out = []
        sp = _spiders(d)
        for i, (p, gp) in enumerate(sp):
            if is_bend(gp):
                continue
            for q, gq in sp[i + 1:]:
                if is_bend(gq) or gp.basis != gq.basis or gp.conj != gq.conj or gp.doubled != gq.doubled:
                    continue
                conn = _edges_between(d, p, q)
                if conn:
                    out.append(Site(self.id, (p, q), edges=tuple(conn)))
        return out

    def rewrite(self, d, site):
        p, q = site.nodes
        gp, gq = d.nodes[p], d.nodes[q]
        phases = tuple(_wrap(a + b) for a, b in zip(gp.phases, gq.phases))
        _merge_spiders(d, p, q, site.edges,
                       lambda ti, to: Spider(gp.basis, phases, ti, to, gp.doubled, gp.conj))
        return 1


class RemoveIdentitySpider(Rule):
    id = "remove_identity_spider"
    description = "trivial spiders and one-legged bastard spiders disappear"

    def candidates(self, d):
        out = []
        for nid, g in _spiders(d):
            if g.n_in + g.n_out == 0:
                out.append(Site(self.id, (nid,), "scalar"))
            elif g.n_in == 1 and g.n_out == 1 and g.zero_phase and _pure_legs(g):
                loop = _edges_between(d, nid, nid)
                out.append(Site(self.id, (nid,), "loop" if loop else "wire", tuple(loop)))
            elif g.n_in + g.n_out == 1 and g.zero_phase and not g.doubled and any(g.thick_in + g.thick_out):
                out.append(Site(self.id, (nid,), "discard" if g.n_in else "prepare"))
        return out

    def rewrite(self, d, site):
        (nid,) = site.nodes
        g = d.nodes[nid]
        if site.variant == "scalar":
            del d.nodes[nid]
            d.tags.pop(nid, None)
            return _phase_sum(g)
        if site.variant == "loop":
            del d.edges[site.edges[0]]
            del d.nodes[nid]
            d.tags.pop(nid, None)
            return g.dim ** 2 if g.doubled else g.dim
        if site.variant == "wire":
            _splice(d, nid)
            return 1
        d.nodes[nid] = Discard(g.dim) if site.variant == "discard" else MixedPrep.identity(g.dim)
        return 1


class Yank(Rule):
    id = "yank"
    description = "straighten cups and caps"

    def candidates(self, d):
        out = []
        for b in sorted(d.nodes):
            gb = d.nodes[b]
            if not is_bend(gb):
                continue
            ends = d.node_ends(b)
            edges = [_at(d, end) for end in ends]
            others = [_other(e, end) for end, (_, e) in zip(ends, edges)]
            if edges[0][0] == edges[1][0]:
                continue  # self-loop on a bend does not occur in valid diagrams
            nbrs = [o.node for o in others]
            if nbrs[0] is not None and nbrs[0] == nbrs[1]:
                c = nbrs[0]
                if is_bend(d.nodes[c]) and c > b:
                    out.append(Site(self.id, (b, c), "loop", tuple(sorted(eid for eid, _ in edges))))
                continue
            bend_nbrs = [(o.node, eid) for o, (eid, _) in zip(others, edges)
                         if o.node is not None and is_bend(d.nodes[o.node])]
            if bend_nbrs:
                c, eid = min(bend_nbrs)
                out.append(Site(self.id, (b, c), "sbend", (eid,)))
                continue
            spiders = sorted((o.node, eid) for o, (eid, _) in zip(others, edges)
                             if o.node is not None and isinstance(d.nodes[o.node], Spider)
                             and _is_real_basis(d.nodes[o.node].basis))
            if spiders:
                s, eid = spiders[0]
                out.append(Site(self.id, (b, s), "absorb", (eid,)))
        return out

    def rewrite(self, d, site):
        b, c = site.nodes
        gb = d.nodes[b]
        thick = gb.doubled
        if site.variant == "loop":
            for eid in site.edges:
                del d.edges[eid]
            for n in (b, c):
                del d.nodes[n]
                d.tags.pop(n, None)
            return gb.dim ** 2 if thick else gb.dim
        if site.variant == "sbend":
            cup, cap = (b, c) if gb.n_out == 2 else (c, b)
            link = d.edges.pop(site.edges[0])
            free_cup = End(cup, "out", 1 - link.a.index)
            free_cap = End(cap, "in", 1 - link.b.index)
            eid_x, ex = _at(d, free_cup)
            eid_y, ey = _at(d, free_cap)
            del d.edges[eid_x], d.edges[eid_y]
            for n in (cup, cap):
                del d.nodes[n]
                d.tags.pop(n, None)
            _add_edge(d, ey.a, ex.b, thick, ex.arrow)
            return 1
        # absorb: the spider c takes over the bend's free leg
        link = d.edges.pop(site.edges[0])
        if gb.n_out == 2:
            free = End(b, "out", 1 - link.a.index)
            eid_x, ex = _at(d, free)
            del d.edges[eid_x]
            del d.nodes[b]
            d.tags.pop(b, None)
            _, (new_out,) = _drop_legs(d, c, {link.b.index}, set(), (), (thick,))
            _add_edge(d, new_out, ex.b, thick, ex.arrow)
        else:
            free = End(b, "in", 1 - link.b.index)
            eid_y, ey = _at(d, free)
            del d.edges[eid_y]
            del d.nodes[b]
            d.tags.pop(b, None)
            (new_in,), _ = _drop_legs(d, c, set(), {link.a.index}, (thick,), ())
            _add_edge(d, ey.a, new_in, thick, ey.arrow)
        return 1


class SlideBoxThroughBend(Rule):
    id = "slide_box_through_bend"
    description = "a box on leg 1 of a cup or cap moves to leg 0, transposed"

    def candidates(self, d):
        out = []
        for a in sorted(d.nodes):
            g = d.nodes[a]
            if not (isinstance(g, Box) and len(g.in_dims) == 1 and len(g.out_dims) == 1
                    and g.in_dims == g.out_dims):
                continue
            _, e_in = _at(d, End(a, "in", 0))
            src = e_in.a
            if src.node is not None and src.index == 1 and src.side == "out":
                cup = d.nodes[src.node]
                if is_bend(cup) and cup.n_out == 2 and cup.doubled == g.doubled:
                    _, e0 = _at(d, End(src.node, "out", 0))
                    if e0.b.node != a:
                        out.append(Site(self.id, (a, src.node), "cup"))
                        continue
            _, e_out = _at(d, End(a, "out", 0))
            dst = e_out.b
            if dst.node is not None and dst.index == 1 and dst.side == "in":
                cap = d.nodes[dst.node]
                if is_bend(cap) and cap.n_in == 2 and cap.doubled == g.doubled:
                    _, e0 = _at(d, End(dst.node, "in", 0))
                    if e0.a.node != a:
                        out.append(Site(self.id, (a, dst.node), "cap"))
        return out

    def rewrite(self, d, site):
        a, b = site.nodes
        g = d.nodes[a]
        thick = g.doubled
        eid_in, e_in = _at(d, End(a, "in", 0))
        eid_out, e_out = _at(d, End(a, "out", 0))
        d.nodes[a] = g.transpose_box()
        if site.variant == "cup":
            eid0, e0 = _at(d, End(b, "out", 0))
            for eid in (eid_in, eid_out, eid0):
                del d.edges[eid]
            _add_edge(d, End(b, "out", 1), e_out.b, thick, e_out.arrow)
            _add_edge(d, End(b, "out", 0), End(a, "in", 0), thick)
            _add_edge(d, End(a, "out", 0), e0.b, thick)
        else:
            eid0, e0 = _at(d, End(b, "in", 0))
            for eid in (eid_in, eid_out, eid0):
                del d.edges[eid]
            _add_edge(d, e_in.a, End(b, "in", 1), thick, e_in.arrow)
            _add_edge(d, e0.a, End(a, "in", 0), thick)
            _add_edge(d, End(a, "out", 0), End(b, "in", 0), thick)
        return 1


def _disconnect_shape(d: Diagram, p: int, q: int):
    gp, gq = d.nodes[p], d.nodes[q]
    if not (isinstance(gp, Spider) and isinstance(gq, Spider)) or gp.basis == gq.basis:
        return None
    conn = _edges_between(d, p, q)
    if not conn:
        return None
    n_thick = sum(d.edges[e].thick for e in conn)
    n_thin = len(conn) - n_thick
    if not gp.doubled and not gq.doubled:
        return (conn, 0.5) if n_thin + 2 * n_thick == 2 else None
    return (conn, 0.25) if n_thin == 0 and n_thick == 2 else None


class ComplementarityDisconnect(Rule):
    id = "complementarity_disconnect"
    description = "z and x spiders joined by two thin strands come apart (factor 1/2 per copy)"

    def structural(self, d):
        out = []
        sp = _spiders(d)
        for i, (p, _) in enumerate(sp):
            for q, _ in sp[i + 1:]:
                shape = _disconnect_shape(d, p, q)
                if shape:
                    out.append(Site(self.id, (p, q), edges=tuple(shape[0])))
        return out

    def candidates(self, d):
        return [s for s in self.structural(d)
                if {d.nodes[s.nodes[0]].basis, d.nodes[s.nodes[1]].basis} == MUB_PAIR]

    def check_site(self, d, site):
        if site.rule != self.id or site not in self.structural(d):
            raise MatchError(f"{site} is not a current {self.id} site")
        pair = {d.nodes[n].basis for n in site.nodes}
        if pair != MUB_PAIR:
            raise RuleDomainError(f"disconnect needs the complementary pair {{z, x}}, got {sorted(pair)}")

    def rewrite(self, d, site):
        p, q = site.nodes
        _, factor = _disconnect_shape(d, p, q)
        drops = {p: (set(), set()), q: (set(), set())}
        for eid in site.edges:
            e = d.edges.pop(eid)
            drops[e.a.node][1].add(e.a.index)
            drops[e.b.node][0].add(e.b.index)
        for n, (di, do) in drops.items():
            _drop_legs(d, n, di, do)
        return factor


class ConjugateFlip(Rule):
    id = "conjugate_flip"
    description = "the conjugate of a real-basis spider is the spider with negated phases"

    def candidates(self, d):
        return [Site(self.id, (nid,)) for nid, g in _spiders(d) if g.conj and _is_real_basis(g.basis)]

    def rewrite(self, d, site):
        (nid,) = site.nodes
        g = d.nodes[nid]
        d.nodes[nid] = replace(g, conj=False, phases=tuple(_wrap(-p) for p in g.phases))
        return 1


def _absorbable(g) -> bool:
    if isinstance(g, Spider):
        return (not g.doubled and g.zero_phase and g.n_in + g.n_out == 1
                and all(g.thick_in + g.thick_out))
    if isinstance(g, (Discard, MixedPrep)):
        return g.is_plain
    return False


class BastardFuse(Rule):
    id = "bastard_fuse"
    description = "a thin spider meeting a doubled spider of its basis fuses into a bastard spider"

    def candidates(self, d):
        out = []
        ids = sorted(d.nodes)
        for i, p in enumerate(ids):
            for q in ids[i + 1:]:
                conn = _edges_between(d, p, q)
                if not conn:
                    continue
                gp, gq = d.nodes[p], d.nodes[q]
                for thin, dbl in ((gp, gq), (gq, gp)):
                    if not (isinstance(dbl, Spider) and dbl.doubled):
                        continue
                    if (isinstance(thin, Spider) and not thin.doubled and thin.basis == dbl.basis
                            and thin.conj == dbl.conj):
                        out.append(Site(self.id, (p, q), "fuse", tuple(conn)))
                        break
                    if _absorbable(thin):
                        out.append(Site(self.id, (p, q), "absorb", tuple(conn)))
                        break
        return out

    def rewrite(self, d, site):
        p, q = site.nodes
        gp, gq = d.nodes[p], d.nodes[q]
        thin, dbl = (gp, gq) if isinstance(gq, Spider) and gq.doubled and not (
            isinstance(gp, Spider) and gp.doubled) else (gq, gp)
        if site.variant == "fuse":
            _merge_spiders(d, p, q, site.edges,
                           lambda ti, to: Spider(thin.basis, thin.phases, ti, to, False, thin.conj))
            return 1
        t_id = p if thin is gp else q
        dbl_id = q if t_id == p else p
        (eid,) = site.edges
        e = d.edges.pop(eid)
        del d.nodes[t_id]
        d.tags.pop(t_id, None)
        end = e.a if e.a.node == dbl_id else e.b
        drop_in = {end.index} if end.side == "in" else set()
        drop_out = {end.index} if end.side == "out" else set()
        _drop_legs(d, dbl_id, drop_in, drop_out)
        g = d.nodes[dbl_id]
        d.nodes[dbl_id] = Spider(g.basis, (0.0,) * g.dim, g.thick_in, g.thick_out, False, g.conj)
        return 1


class EncodeDecodeSameBasis(Rule):
    id = "encode_decode_same_basis"
    description = "decoding right after encoding in the same basis is a plain wire"

    def candidates(self, d):
        out = []
        for p, g in _spiders(d):
            if not (not g.doubled and g.zero_phase and g.thick_in == (False,) and g.thick_out == (True,)):
                continue
            _, e = _at(d, End(p, "out", 0))
            q = e.b.node
            if q is None:
                continue
            h = d.nodes[q]
            if (isinstance(h, Spider) and not h.doubled and h.zero_phase and h.thick_in == (True,)
                    and h.thick_out == (False,) and h.basis == g.basis and h.conj == g.conj):
                out.append(Site(self.id, (p, q)))
        return out

    def rewrite(self, d, site):
        p, q = site.nodes
        eid_in, e_in = _at(d, End(p, "in", 0))
        eid_mid, _ = _at(d, End(p, "out", 0))
        eid_out, e_out = _at(d, End(q, "out", 0))
        for eid in (eid_in, eid_mid, eid_out):
            del d.edges[eid]
        for n in (p, q):
            del d.nodes[n]
            d.tags.pop(n, None)
        _add_edge(d, e_in.a, e_out.b, False, e_in.arrow)
        return 1


RULES: dict[str, Rule] = {r.id: r for r in (
    FuseSpiders(), RemoveIdentitySpider(), Yank(), SlideBoxThroughBend(),
    ComplementarityDisconnect(), ConjugateFlip(), BastardFuse(), EncodeDecodeSameBasis(),
)}
RULE_IDS = tuple(RULES)


def get_rule(rule) -> Rule:
    if isinstance(rule, Rule):
        return rule
    try:
        return RULES[rule]
    except KeyError:
        raise ArgumentError(f"unknown rule {rule!r}; known: {', '.join(RULE_IDS)}") from None


# ---------------------------------------------------------------- engine


def find_sites(d: Diagram, rule) -> list[Site]:
    """Maximal non-overlapping matches, chosen greedily in ascending node order."""
    r = get_rule(rule)
    chosen, used = [], set()
    for s in sorted(r.candidates(d), key=lambda s: s.nodes):
        if used.isdisjoint(s.nodes):
            chosen.append(s)
            used.update(s.nodes)
    return chosen


def _apply(d: Diagram, rule: Rule, site: Site) -> tuple[Diagram, complex]:
    rule.check_site(d, site)
    w = d.copy()
    factor = complex(rule.rewrite(w, site))
    w.scalar = d.scalar * factor
    return w, factor


def apply_rule(d: Diagram, rule, site: Site) -> Diagram:
    return _apply(d, get_rule(rule), site)[0]


def _sound(before: Diagram, after: Diagram, tol: float) -> float:
    tb, ta = evaluate(before), evaluate(after)
    if tb.extents != ta.extents:
        return float("inf")
    scale = max(1.0, float(np.max(np.abs(tb.data), initial=0.0)))
    return max_deviation(tb, ta) / scale


def simplify(d: Diagram, rules: Sequence | None = None, max_steps: int = 1000,
             check: bool = False, tol: float | None = None) -> tuple[Diagram, RewriteTrace]:
    """Apply rules to a fixpoint, highest priority first, one site per step.

    With ``check`` on, every step is compared against the evaluator and a
    :class:`SoundnessError` is raised on a mismatch.
    """
    tol = default_tol() if tol is None else tol
    rs = [get_rule(r) for r in (RULE_IDS if rules is None else rules)]
    if check:
        problems = validate(d)
        if problems:
            raise ValidationError(problems)
    trace = RewriteTrace()
    cur = d
    while True:
        step = None
        for r in rs:
            sites = find_sites(cur, r)
            if sites:
                step = (r, sites[0])
                break
        if step is None:
            break
        if len(trace.steps) >= max_steps:
            trace.completed = False
            break
        r, site = step
        nxt, factor = _apply(cur, r, site)
        if check:
            dev = _sound(cur, nxt, tol)
            if not dev <= tol:
                raise SoundnessError(f"{r.id} at {site} changed the value by {dev:.3g}", cur, nxt, dev)
        trace.steps.append(Step(r.id, site, factor))
        cur = nxt
    return cur, trace


def check_soundness(rule, trials: int = 100, seed: int = 0) -> float:
    """Max relative deviation between random rule instances before and after rewriting."""
    r = get_rule(rule)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = r.random_instance(rng)
        sites = find_sites(d, r)
        if not sites:
            raise AssertionError(f"random {r.id} instance has no site")
        after = apply_rule(d, r, sites[int(rng.integers(len(sites)))])
        worst = max(worst, _sound(d, after, 0.0))
    return worst


# ---------------------------------------------------------------- random instances


def _rand_matrix(rng, rows, cols) -> np.ndarray:
    return (rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))) / np.sqrt(2)


def _rand_phases(rng, dim: int = 2) -> tuple:
    return (0.0,) + tuple(rng.uniform(0, 2 * np.pi, dim - 1))


def _rand_box(rng, thick: bool, dim: int = 2) -> Box:
    n = int(rng.integers(1, 3)) if thick else 1
    return Box("R", tuple(_rand_matrix(rng, dim, dim) for _ in range(n)), (dim,), (dim,), doubled=thick)


def _builtin_bases(real_only: bool = False) -> list[str]:
    ids = ["z", "x"] + list(bases.EIGHT_STATE_IDS)
    return [b for b in ids if not real_only or _is_real_basis(b)]


def _legs(rng, mode: str, n: int) -> tuple:
    if mode == "doubled":
        return (True,) * n
    if mode == "thin":
        return (False,) * n
    return tuple(bool(rng.integers(2)) for _ in range(n))


def close_boundary(d: Diagram, rng: np.random.Generator | None = None, box_prob: float = 0.0) -> Diagram:
    """Wire every free port to a new boundary port, sometimes through a random box."""
    inc = d.incidence()
    for nid in sorted(d.nodes):
        for end in d.node_ends(nid):
            if end in inc:
                continue
            thick, dim = d.port(end)
            through = rng is not None and rng.random() < box_prob
            if end.side == "in":
                src = d.add_input(thick, dim)
                if through:
                    k = d.add(_rand_box(rng, thick, dim))
                    d.connect(src, End(k, "in", 0))
                    src = End(k, "out", 0)
                d.connect(src, end, thick=thick)
            else:
                dst = d.add_output(thick, dim)
                if through:
                    k = d.add(_rand_box(rng, thick, dim))
                    d.connect(End(k, "out", 0), dst)
                    dst = End(k, "in", 0)
                d.connect(end, dst, thick=thick)
    return d


def _random_fuse(rng) -> Diagram:
    basis = rng.choice(_builtin_bases())
    mode = rng.choice(["thin", "bastard", "doubled"])
    conj = bool(rng.integers(2))
    k = int(rng.integers(1, 3))
    conn = _legs(rng, mode, k)
    p = Spider(basis, _rand_phases(rng), _legs(rng, mode, int(rng.integers(0, 3))),
               _legs(rng, mode, int(rng.integers(0, 2))) + conn, mode == "doubled", conj)
    q = Spider(basis, _rand_phases(rng), conn + _legs(rng, mode, int(rng.integers(0, 2))),
               _legs(rng, mode, int(rng.integers(0, 3))), mode == "doubled", conj)
    d = Diagram()
    a, b = d.add(p), d.add(q)
    for j in range(k):
        d.connect(End(a, "out", p.n_out - k + j), End(b, "in", j), thick=conn[j])
    return close_boundary(d, rng, 0.3)


def _random_identity(rng) -> Diagram:
    variant = rng.choice(["wire", "loop", "scalar", "bastard"])
    basis = rng.choice(_builtin_bases())
    conj = bool(rng.integers(2))
    d = Diagram()
    if variant in ("wire", "loop"):
        thick = bool(rng.integers(2))
        n = d.add(Spider(basis, (0.0, 0.0), (thick,), (thick,), thick, conj))
        if variant == "loop":
            d.connect(End(n, "out", 0), End(n, "in", 0), thick=thick)
            d.add(Spider("z", _rand_phases(rng), (), (), False, False))
        else:
            close_boundary(d, rng, 0.7)
    elif variant == "scalar":
        d.add(Spider(basis, _rand_phases(rng), (), (), bool(rng.integers(2)), conj))
        d.scalar = complex(rng.normal(), rng.normal())
    else:
        if rng.integers(2):
            d.add(Spider(basis, (0.0, 0.0), (True,), (), False, conj))
        else:
            d.add(Spider(basis, (0.0, 0.0), (), (True,), False, conj))
        close_boundary(d, rng, 0.7)
    return d


def _random_yank(rng) -> Diagram:
    variant = rng.choice(["sbend", "absorb", "loop"])
    d = Diagram()
    if variant == "loop":
        thick = bool(rng.integers(2))
        c = d.add(Spider("z", (0.0, 0.0), (), (thick,) * 2, thick))
        k = d.add(Spider("z", (0.0, 0.0), (thick,) * 2, (), thick))
        perm = int(rng.integers(2))
        d.connect(End(c, "out", 0), End(k, "in", perm), thick=thick)
        d.connect(End(c, "out", 1), End(k, "in", 1 - perm), thick=thick)
        return d
    if variant == "sbend":
        thick = bool(rng.integers(2))
        c = d.add(Spider("z", (0.0, 0.0), (), (thick,) * 2, thick))
        k = d.add(Spider("z", (0.0, 0.0), (thick,) * 2, (), thick))
        d.connect(End(c, "out", int(rng.integers(2))), End(k, "in", int(rng.integers(2))), thick=thick)
        return close_boundary(d, rng, 0.6)
    basis = rng.choice(_builtin_bases(real_only=True))
    mode = rng.choice(["thin", "bastard", "doubled"])
    s = Spider(basis, _rand_phases(rng), _legs(rng, mode, int(rng.integers(0, 3))),
               _legs(rng, mode, int(rng.integers(0, 3))), mode == "doubled", bool(rng.integers(2)))
    if s.n_in + s.n_out == 0:
        s = replace(s, thick_out=_legs(rng, mode, 1))
    n = d.add(s)
    ends = d.node_ends(n)
    end = ends[int(rng.integers(len(ends)))]
    thick = d.port(end)[0]
    if end.side == "in":
        b = d.add(Spider("z", (0.0, 0.0), (), (thick,) * 2, thick))
        d.connect(End(b, "out", int(rng.integers(2))), end, thick=thick)
    else:
        b = d.add(Spider("z", (0.0, 0.0), (thick,) * 2, (), thick))
        d.connect(end, End(b, "in", int(rng.integers(2))), thick=thick)
    return close_boundary(d, rng, 0.4)


def _random_slide(rng) -> Diagram:
    thick = bool(rng.integers(2))
    d = Diagram()
    a = d.add(_rand_box(rng, thick))
    if rng.integers(2):
        b = d.add(Spider("z", (0.0, 0.0), (), (thick,) * 2, thick))
        d.connect(End(b, "out", 1), End(a, "in", 0), thick=thick)
    else:
        b = d.add(Spider("z", (0.0, 0.0), (thick,) * 2, (), thick))
        d.connect(End(a, "out", 0), End(b, "in", 1), thick=thick)
    return close_boundary(d, rng, 0.5)


def _random_disconnect(rng) -> Diagram:
    config = rng.choice(["thin2", "thick1", "mixed1", "dbl_bastard", "dbl_dbl"])
    bz, bx = ("z", "x") if rng.integers(2) else ("x", "z")
    d = Diagram()
    if config == "thin2":
        modes, conn = ("thin", "thin"), (False, False)
    elif config == "thick1":
        modes, conn = ("bastard", "bastard"), (True,)
    elif config == "mixed1":
        modes, conn = ("thin", "bastard"), (True,)
    elif config == "dbl_bastard":
        modes, conn = ("doubled", "bastard"), (True, True)
    else:
        modes, conn = ("doubled", "doubled"), (True, True)
    if rng.integers(2):
        modes = modes[::-1]
    k = len(conn)
    p = Spider(bz, _rand_phases(rng), _legs(rng, modes[0], int(rng.integers(0, 2))),
               _legs(rng, modes[0], int(rng.integers(0, 2))) + conn, modes[0] == "doubled",
               bool(rng.integers(2)))
    q = Spider(bx, _rand_phases(rng), conn + _legs(rng, modes[1], int(rng.integers(0, 2))),
               _legs(rng, modes[1], int(rng.integers(0, 2))), modes[1] == "doubled", bool(rng.integers(2)))
    a, b = d.add(p), d.add(q)
    for j in range(k):
        d.connect(End(a, "out", p.n_out - k + j), End(b, "in", j), thick=conn[j])
    return close_boundary(d, rng, 0.3)


def _random_conjugate(rng) -> Diagram:
    basis = rng.choice(_builtin_bases(real_only=True))
    mode = rng.choice(["thin", "bastard", "doubled"])
    d = Diagram()
    d.add(Spider(basis, _rand_phases(rng), _legs(rng, mode, int(rng.integers(0, 3))),
                 _legs(rng, mode, int(rng.integers(0, 3))), mode == "doubled", True))
    return close_boundary(d, rng, 0.3)


def _random_bastard(rng) -> Diagram:
    d = Diagram()
    conj = bool(rng.integers(2))
    basis = rng.choice(_builtin_bases())
    dbl = Spider(basis, _rand_phases(rng), (True,) * int(rng.integers(0, 3)),
                 (True,) * int(rng.integers(1, 3)), True, conj)
    q = d.add(dbl)
    if rng.integers(2):
        k = int(rng.integers(1, min(2, dbl.n_out) + 1))
        thin = Spider(basis, _rand_phases(rng), (True,) * k + _legs(rng, "bastard", int(rng.integers(0, 2))),
                      _legs(rng, "bastard", int(rng.integers(0, 3))), False, conj)
        p = d.add(thin)
        for j in range(k):
            d.connect(End(q, "out", j), End(p, "in", j), thick=True)
    else:
        other = rng.choice(_builtin_bases())
        kind = rng.choice(["spider", "discard", "prepare"])
        if kind == "prepare" and dbl.n_in:
            p = d.add(MixedPrep.identity())
            d.connect(End(p, "out", 0), End(q, "in", 0), thick=True)
        elif kind == "discard":
            p = d.add(Discard())
            d.connect(End(q, "out", 0), End(p, "in", 0), thick=True)
        else:
            p = d.add(Spider(other, (0.0, 0.0), (True,), (), False, bool(rng.integers(2))))
            d.connect(End(q, "out", 0), End(p, "in", 0), thick=True)
    return close_boundary(d, rng, 0.3)


def _random_encode_decode(rng) -> Diagram:
    basis = rng.choice(_builtin_bases())
    conj = bool(rng.integers(2))
    d = Diagram()
    p = d.add(Spider(basis, (0.0, 0.0), (False,), (True,), False, conj))
    q = d.add(Spider(basis, (0.0, 0.0), (True,), (False,), False, conj))
    d.connect(End(p, "out", 0), End(q, "in", 0), thick=True)
    return close_boundary(d, rng, 0.7)


FuseSpiders.random_instance = staticmethod(_random_fuse)
RemoveIdentitySpider.random_instance = staticmethod(_random_identity)
Yank.random_instance = staticmethod(_random_yank)
SlideBoxThroughBend.random_instance = staticmethod(_random_slide)
ComplementarityDisconnect.random_instance = staticmethod(_random_disconnect)
ConjugateFlip.random_instance = staticmethod(_random_conjugate)
BastardFuse.random_instance = staticmethod(_random_bastard)
EncodeDecodeSameBasis.random_instance = staticmethod(_random_encode_decode)
