"""Protocol diagrams and numerical security checks.

Covers the quantum one-time pad (QOTP), teleportation, BB84 and the
eight-state encoding whose four bases are the cube-corner cipherstates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bases
from .bases import cipherstate, pauli
from .diagram import (Box, Diagram, Discard, End, Spider, StatePrep, Wire, compose, compose_all,
                      identity, isomorphic, parallel)
from .doubling import Channel, decode, discard, encode, purify
from .errors import ArgumentError, PreconditionError
from .evaluator import Superoperator, evaluate, evaluate_channel
from .rewrite import simplify
from .tensor import Tensor, default_tol, equal_up_to_scalar

__all__ = [
    "AttackSpec", "ComplianceReport", "SweepReport", "cipherstate", "qotp_encrypt", "switchable_pauli",
    "qotp_protocol", "qotp_eve_branch", "eve_marginal_deviation", "teleportation", "bb84_channel",
    "eight_state_protocol", "eight_state_qotp", "compliant_attack", "non_disturbance_check",
    "transition_matrix", "decoupling_check", "pullthrough_check", "encryption_pullthrough_check",
    "random_unitary", "random_isometry", "random_compliant_attack", "random_entangling_attack",
    "identity_attack", "cnot_copy_attack", "intercept_resend_attack", "dephasing_attack",
    "decoupling_sweep", "teleport_matches_qotp", "channel_scalar", "marginal_deviation",
]


# ---------------------------------------------------------------- attacks


@dataclass(frozen=True, eq=False)
class AttackSpec:
    """Eve's attack: a channel from the wire to (Eve ⊗ wire), Eve's factor first."""

    channel: Channel
    eve_dim: int

    def __post_init__(self):
        c = self.channel
        if c.d_in != 2 or c.d_out != 2 * self.eve_dim:
            raise ArgumentError(f"attack must map 2 -> {2 * self.eve_dim}, got {c.d_in} -> {c.d_out}")
        if not c.is_trace_preserving(1e-8):
            raise ArgumentError(f"attack is not trace preserving (deviation {c.normalization_deviation():.3g})")
        if c.out_dims != (self.eve_dim, 2):
            object.__setattr__(self, "channel", Channel(c.kraus, c.label, (2,), (self.eve_dim, 2)))

    @classmethod
    def from_kraus(cls, kraus, eve_dim: int, label: str = "Φ") -> "AttackSpec":
        return cls(Channel(tuple(kraus), label, (2,), (eve_dim, 2)), eve_dim)

    def box(self) -> Box:
        return self.channel.as_box()

    def superoperator(self) -> Superoperator:
        return self.channel.superoperator()


def _check_unitary(u, tol: float) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ArgumentError("U must be a square matrix")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > tol:
        raise ArgumentError("U is not unitary")
    return u


def compliant_attack(U, psi, tol: float | None = None) -> AttackSpec:
    """Eve prepares U|ψ⟩ on her side and leaves the wire alone."""
    tol = 1e-9 if tol is None else tol
    u = _check_unitary(U, tol)
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != u.shape[0]:
        raise ArgumentError("ψ and U have different dimensions")
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise ArgumentError("ψ must be a unit vector")
    k = np.kron((u @ psi).reshape(-1, 1), np.eye(2))
    return AttackSpec.from_kraus((k,), u.shape[0], "compliant")


def identity_attack(eve_dim: int = 1) -> AttackSpec:
    e0 = np.zeros((eve_dim, 1))
    e0[0, 0] = 1
    return AttackSpec.from_kraus((np.kron(e0, np.eye(2)),), eve_dim, "id")


def cnot_copy_attack() -> AttackSpec:
    """Eve's ancilla |0⟩ becomes a z-basis copy of the wire."""
    k = np.zeros((4, 2))
    for i in range(2):
        k[2 * i + i, i] = 1
    return AttackSpec.from_kraus((k,), 2, "cnot-copy")


def intercept_resend_attack(basis_id: str = "z") -> AttackSpec:
    """Measure in ``basis_id``, keep the outcome, resend the measured state."""
    b = bases.get_basis(basis_id).states
    ks = [np.kron(b[:, [g]], np.outer(b[:, g], b[:, g].conj())) for g in range(2)]
    return AttackSpec.from_kraus(ks, 2, f"intercept-{basis_id}")


def dephasing_attack(basis_id: str = "z") -> AttackSpec:
    b = bases.get_basis(basis_id).states
    ks = [np.outer(b[:, g], b[:, g].conj()) for g in range(2)]
    return AttackSpec.from_kraus(ks, 1, f"dephase-{basis_id}")


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(d_out, rng)[:, :d_in]


def random_compliant_attack(eve_dim: int, rng: np.random.Generator) -> AttackSpec:
    psi = random_unitary(eve_dim, rng)[:, 0]
    return compliant_attack(random_unitary(eve_dim, rng), psi)


def random_entangling_attack(eve_dim: int, rng: np.random.Generator) -> AttackSpec:
    """Stinespring isometry 2 → eve_dim·2 drawn from the Haar measure."""
    return AttackSpec.from_kraus((random_isometry(2, 2 * eve_dim, rng),), eve_dim, "random")


# ---------------------------------------------------------------- QOTP


def switchable_pauli(axis: str, doubled: bool = False) -> Diagram:
    """Spider with inputs (data, control) and one output.

    A control of |x_u⟩ on the z version gives σ_z^u/√2; a control of |v⟩
    on the x version gives σ_x^v/√2.
    """
    if axis not in ("z", "x"):
        raise ArgumentError("axis must be 'z' or 'x'")
    d = Diagram()
    n = d.add(Spider.make(axis, 2, 1, doubled=doubled))
    d.connect(d.add_input(doubled), End(n, "in", 0))
    d.connect(d.add_input(doubled), End(n, "in", 1))
    d.connect(End(n, "out", 0), d.add_output(doubled))
    return d


def qotp_encrypt(u: int, v: int) -> Diagram:
    """σ_z^u σ_x^v on a thin wire built from two switchable Paulis; scalar 2 makes it exact."""
    if u not in (0, 1) or v not in (0, 1):
        raise ArgumentError("key bits must be 0 or 1")
    d = Diagram(scalar=2)
    xs = d.add(Spider.make("x", 2, 1))
    zs = d.add(Spider.make("z", 2, 1))
    kv = d.add(StatePrep(bases.basis_states("z")[v]))
    ku = d.add(StatePrep(bases.basis_states("x")[u]))
    d.connect(d.add_input(), End(xs, "in", 0))
    d.connect(End(kv, "out", 0), End(xs, "in", 1))
    d.connect(End(xs, "out", 0), End(zs, "in", 0))
    d.connect(End(ku, "out", 0), End(zs, "in", 1))
    d.connect(End(zs, "out", 0), d.add_output())
    return d


def _bastard(basis: str, thick_in, thick_out) -> Spider:
    return Spider(basis, (0.0, 0.0), tuple(thick_in), tuple(thick_out))


def qotp_protocol(attack: AttackSpec | None = None) -> Diagram:
    """Alice encrypts with shared key bits, Eve attacks, Bob decrypts.

    Without an attack the diagram has one thick input and one thick output
    and evaluates to ¼ times the identity channel.  With an attack the
    outputs are (Eve, Bob).
    """
    d = Diagram()
    ku = d.add(Spider.make("x", 0, 2), "key")
    kv = d.add(Spider.make("z", 0, 2), "key")
    e_xa = d.add(_bastard("x", (False,), (True,)), "alice")
    e_za = d.add(_bastard("z", (False,), (True,)), "alice")
    xa = d.add(Spider.make("x", 2, 1, doubled=True), "alice")
    za = d.add(Spider.make("z", 2, 1, doubled=True), "alice")
    e_xb = d.add(_bastard("x", (False,), (True,)), "bob")
    e_zb = d.add(_bastard("z", (False,), (True,)), "bob")
    zb = d.add(Spider.make("z", 2, 1, doubled=True), "bob")
    xb = d.add(Spider.make("x", 2, 1, doubled=True), "bob")
    d.connect(End(ku, "out", 0), End(e_xa, "in", 0))
    d.connect(End(ku, "out", 1), End(e_xb, "in", 0))
    d.connect(End(kv, "out", 0), End(e_za, "in", 0))
    d.connect(End(kv, "out", 1), End(e_zb, "in", 0))
    d.connect(d.add_input(True), End(xa, "in", 0))
    d.connect(End(e_za, "out", 0), End(xa, "in", 1))
    d.connect(End(xa, "out", 0), End(za, "in", 0))
    d.connect(End(e_xa, "out", 0), End(za, "in", 1))
    if attack is None:
        d.connect(End(za, "out", 0), End(zb, "in", 0))
    else:
        atk = d.add(attack.box(), "eve")
        d.connect(End(za, "out", 0), End(atk, "in", 0))
        d.connect(End(atk, "out", 0), d.add_output(True, attack.eve_dim))
        d.connect(End(atk, "out", 1), End(zb, "in", 0))
    d.connect(End(e_xb, "out", 0), End(zb, "in", 1))
    d.connect(End(zb, "out", 0), End(xb, "in", 0))
    d.connect(End(e_zb, "out", 0), End(xb, "in", 1))
    d.connect(End(xb, "out", 0), d.add_output(True))
    return d


def qotp_eve_branch() -> Diagram:
    """Alice's half of the protocol with Bob's key legs removed: what Eve receives."""
    d = Diagram()
    ku = d.add(Spider.make("x", 0, 1), "key")
    kv = d.add(Spider.make("z", 0, 1), "key")
    e_xa = d.add(_bastard("x", (False,), (True,)), "alice")
    e_za = d.add(_bastard("z", (False,), (True,)), "alice")
    xa = d.add(Spider.make("x", 2, 1, doubled=True), "alice")
    za = d.add(Spider.make("z", 2, 1, doubled=True), "alice")
    d.connect(End(ku, "out", 0), End(e_xa, "in", 0))
    d.connect(End(kv, "out", 0), End(e_za, "in", 0))
    d.connect(d.add_input(True), End(xa, "in", 0))
    d.connect(End(e_za, "out", 0), End(xa, "in", 1))
    d.connect(End(xa, "out", 0), End(za, "in", 0))
    d.connect(End(e_xa, "out", 0), End(za, "in", 1))
    d.connect(End(za, "out", 0), d.add_output(True))
    return d


def _matrix_units(dim: int = 2):
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1
            yield e


def marginal_deviation(channel: Superoperator) -> float:
    """max_E |Φ(E) − tr(E)·Φ(I/d)| over matrix units E; zero iff Φ ignores its input."""
    d = channel.d_in
    ref = channel.apply(np.eye(d) / d)
    return max(float(np.max(np.abs(channel.apply(e) - np.trace(e) * ref))) for e in _matrix_units(d))


def eve_marginal_deviation(attack: AttackSpec | None = None) -> float:
    """Input dependence of what Eve holds once Bob's output is traced out."""
    if attack is None:
        return marginal_deviation(evaluate_channel(qotp_eve_branch()))
    full = qotp_protocol(attack)
    eve_only = compose(parallel(identity(1, True, attack.eve_dim), discard(1)), full)
    return marginal_deviation(evaluate_channel(eve_only))


# ---------------------------------------------------------------- teleportation


def teleportation() -> Diagram:
    """EPR pair, Alice's Bell measurement, classical wires, Bob's corrections.

    The global scalar 4 normalises the channel to exactly the identity.
    """
    d = Diagram(scalar=4)
    epr = d.add(Spider.make("z", 0, 2, doubled=True), "source")
    xa = d.add(Spider.make("x", 1, 2, doubled=True), "alice")
    za = d.add(Spider.make("z", 2, 1, doubled=True), "alice")
    d_z = d.add(_bastard("z", (True,), (False,)), "alice")
    d_x = d.add(_bastard("x", (True,), (False,)), "alice")
    e_zb = d.add(_bastard("z", (False,), (True,)), "bob")
    e_xb = d.add(_bastard("x", (False,), (True,)), "bob")
    zb = d.add(Spider.make("z", 2, 1, doubled=True), "bob")
    xb = d.add(Spider.make("x", 2, 1, doubled=True), "bob")
    d.connect(d.add_input(True), End(xa, "in", 0))
    d.connect(End(xa, "out", 0), End(za, "in", 0))
    d.connect(End(xa, "out", 1), End(d_z, "in", 0))
    d.connect(End(epr, "out", 0), End(za, "in", 1))
    d.connect(End(za, "out", 0), End(d_x, "in", 0))
    d.connect(End(d_z, "out", 0), End(e_zb, "in", 0))
    d.connect(End(d_x, "out", 0), End(e_xb, "in", 0))
    d.connect(End(epr, "out", 1), End(zb, "in", 0))
    d.connect(End(e_xb, "out", 0), End(zb, "in", 1))
    d.connect(End(zb, "out", 0), End(xb, "in", 0))
    d.connect(End(e_zb, "out", 0), End(xb, "in", 1))
    d.connect(End(xb, "out", 0), d.add_output(True))
    return d


def teleport_matches_qotp() -> bool:
    """After yanking, teleportation has the shape of the attack-free QOTP.

    Both sides are then normalised by spider fusion (a bend fused into a
    spider counts as fusion); spider leg sides and the global scalar are
    ignored.
    """
    yanked, _ = simplify(teleportation(), ["yank"])
    a, _ = simplify(yanked, ["fuse_spiders", "yank"])
    b, _ = simplify(qotp_protocol(), ["fuse_spiders", "yank"])
    a.scalar = b.scalar = 1
    return isomorphic(a, b, ignore_spider_sides=True)


# ---------------------------------------------------------------- BB84 and eight-state encoding


def _attack_channel(basis_id: str, attack: AttackSpec | None) -> Diagram:
    if attack is None:
        return compose(decode(basis_id), encode(basis_id))
    d = Diagram()
    enc = d.add(Spider(basis_id, (0.0, 0.0), (False,), (True,)), "alice")
    atk = d.add(attack.box(), "eve")
    dec = d.add(Spider(basis_id, (0.0, 0.0), (True,), (False,)), "bob")
    d.connect(d.add_input(False), End(enc, "in", 0))
    d.connect(End(enc, "out", 0), End(atk, "in", 0))
    d.connect(End(atk, "out", 0), d.add_output(True, attack.eve_dim))
    d.connect(End(atk, "out", 1), End(dec, "in", 0))
    d.connect(End(dec, "out", 0), d.add_output(False))
    return d


def bb84_channel(basis_id: str, attack: AttackSpec | None = None) -> Diagram:
    """encode → attack → decode in one of the two BB84 bases; Eve's output comes first."""
    if basis_id not in ("z", "x"):
        raise ArgumentError(f"BB84 uses the z and x bases only, got {basis_id!r}")
    return _attack_channel(basis_id, attack)


def eight_state_protocol(attack: AttackSpec | None = None) -> dict:
    """One encode → attack → decode diagram per cube basis (u, v)."""
    return {(u, v): _attack_channel(bases.eight_state_id(u, v), attack) for u in (0, 1) for v in (0, 1)}


def eight_state_qotp(attack: AttackSpec | None = None) -> Diagram:
    """A bit encoded in the (0,0) cube basis, sent through the QOTP, decoded in the same basis."""
    proto = qotp_protocol(attack)
    dec = decode("eight:00")
    if attack is not None:
        dec = parallel(identity(1, True, attack.eve_dim), dec)
    return compose_all(encode("eight:00"), proto, dec)


def transition_matrix(attack: AttackSpec | None, basis_id: str) -> np.ndarray:
    """P[g', g] = Pr(Bob decodes g' | Alice encodes g), with Eve discarded."""
    d = _attack_channel(basis_id, attack)
    if attack is not None:
        d = compose(parallel(discard(1, attack.eve_dim), identity(1)), d)
    m = evaluate(d).as_matrix()
    u = bases.change_matrix(basis_id)
    return u.conj().T @ m @ u


def non_disturbance_check(attack: AttackSpec | None, basis_id: str) -> float:
    """max |P − 1| for the classical channel in ``basis_id``."""
    p = transition_matrix(attack, basis_id)
    return float(np.max(np.abs(p - np.eye(2))))


@dataclass
class ComplianceReport:
    per_basis: dict
    decoupled: bool
    rho_eve: np.ndarray | None
    product_deviation: float

    @property
    def max_disturbance(self) -> float:
        return max(self.per_basis.values())


def _eve_state(channel: Superoperator, eve_dim: int) -> np.ndarray:
    out = channel.apply(np.eye(2) / 2).reshape(eve_dim, 2, eve_dim, 2)
    return np.einsum("aibi->ab", out)


def decoupling_check(attack: AttackSpec, tol: float | None = None,
                     bases_to_check=bases.EIGHT_STATE_IDS) -> ComplianceReport:
    """Compare the attack with (prepare ρ_E) ⊗ (identity wire) on all matrix units."""
    tol = default_tol() if tol is None else tol
    channel = evaluate_channel(attack.channel.diagram())
    rho_e = _eve_state(channel, attack.eve_dim)
    dev = max(float(np.max(np.abs(channel.apply(e) - np.kron(rho_e, e)))) for e in _matrix_units(2))
    per_basis = {b: non_disturbance_check(attack, b) for b in bases_to_check}
    decoupled = dev <= tol
    return ComplianceReport(per_basis, decoupled, rho_e if decoupled else None, dev)


def _copy_spider(basis_id: str) -> Spider:
    return Spider(basis_id, (0.0, 0.0), (False,), (False, False))


def pullthrough_check(attack: AttackSpec, basis_id: str, tol: float | None = None) -> float:
    """Distance between copy∘V and (V ⊗ 1)∘copy for the purification V of the attack.

    Both sides have outputs (environment ⊗ Eve, wire, copy).
    """
    tol = default_tol() if tol is None else tol
    nd = non_disturbance_check(attack, basis_id)
    if nd > tol:
        raise PreconditionError(f"attack disturbs the {basis_id} basis (deviation {nd:.3g})")
    v = purify(attack.channel)
    env = v.env_dim * attack.eve_dim
    vbox = Box("V", (v.matrix,), (2,), (env, 2))

    lhs = Diagram()
    nv = lhs.add(vbox)
    cp = lhs.add(_copy_spider(basis_id))
    lhs.connect(lhs.add_input(), End(nv, "in", 0))
    lhs.connect(End(nv, "out", 0), lhs.add_output(dim=env))
    lhs.connect(End(nv, "out", 1), End(cp, "in", 0))
    lhs.connect(End(cp, "out", 0), lhs.add_output())
    lhs.connect(End(cp, "out", 1), lhs.add_output())

    rhs = Diagram()
    cp = rhs.add(_copy_spider(basis_id))
    nv = rhs.add(vbox)
    rhs.connect(rhs.add_input(), End(cp, "in", 0))
    rhs.connect(End(cp, "out", 0), End(nv, "in", 0))
    rhs.connect(End(nv, "out", 0), rhs.add_output(dim=env))
    rhs.connect(End(nv, "out", 1), rhs.add_output())
    rhs.connect(End(cp, "out", 1), rhs.add_output())

    return float(np.max(np.abs(evaluate(lhs).data - evaluate(rhs).data)))


def encryption_pullthrough_check(attack: AttackSpec) -> float:
    """max over (a, b) of |V E_ab − (1 ⊗ E_ab) V|."""
    v = purify(attack.channel)
    env = v.env_dim * attack.eve_dim
    worst = 0.0
    for a in (0, 1):
        for b in (0, 1):
            e = pauli(a, b)
            worst = max(worst, float(np.max(np.abs(v.matrix @ e - np.kron(np.eye(env), e) @ v.matrix))))
    return worst


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepReport:
    compliant: list = field(default_factory=list)   # (eve_dim, max disturbance, product deviation)
    entangling: list = field(default_factory=list)  # (eve_dim, max disturbance, product deviation)
    tol: float = 1e-9
    witness_tol: float = 1e-6

    @property
    def compliant_ok(self) -> bool:
        return all(nd < self.tol and pd < self.tol for _, nd, pd in self.compliant)

    @property
    def contrapositive_ok(self) -> bool:
        return all(nd > self.witness_tol for _, nd, pd in self.entangling)

    @property
    def passed(self) -> bool:
        return self.compliant_ok and self.contrapositive_ok


def decoupling_sweep(trials: int = 100, seed: int = 0, eve_dims=(2, 4), tol: float | None = None,
                  witness_tol: float = 1e-6) -> SweepReport:
    """Compliant attacks must pass every check; entangling ones must be caught in some basis."""
    tol = default_tol() if tol is None else tol
    rng = np.random.default_rng(seed)
    report = SweepReport(tol=tol, witness_tol=witness_tol)
    for t in range(trials):
        d_e = eve_dims[t % len(eve_dims)]
        r = decoupling_check(random_compliant_attack(d_e, rng), tol)
        report.compliant.append((d_e, r.max_disturbance, r.product_deviation))
    for t in range(trials):
        d_e = eve_dims[t % len(eve_dims)]
        while True:
            r = decoupling_check(random_entangling_attack(d_e, rng), tol)
            if r.product_deviation > witness_tol:
                break
        report.entangling.append((d_e, r.max_disturbance, r.product_deviation))
    return report


def channel_scalar(d: Diagram, reference: Superoperator, tol: float | None = None) -> complex | None:
    """λ with evaluate_channel(d) = λ·reference, if it exists."""
    s = evaluate_channel(d)
    if s.matrix.shape != reference.matrix.shape:
        return None
    return equal_up_to_scalar(Tensor.matrix(s.matrix), Tensor.matrix(reference.matrix), tol)
