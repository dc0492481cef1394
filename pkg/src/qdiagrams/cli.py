"""Command-line front end: ``qdiagrams eval|simplify|equiv|demo|fixtures``.

Exit codes: 0 success, 1 semantic difference or failed check, 2 input error,
3 soundness failure inside the rewrite engine.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bases, fileformat, protocols
from .diagram import Diagram, validate
from .errors import DiagramError, PreconditionError, ValidationError
from .evaluator import Superoperator, evaluate, evaluate_channel
from .rewrite import RULE_IDS, SoundnessError, simplify
from .tensor import default_tol, equal_up_to_scalar, max_deviation

EXIT_OK, EXIT_DIFFERENT, EXIT_INPUT, EXIT_UNSOUND = 0, 1, 2, 3


class _InputError(Exception):
    pass


def _fmt(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.15g}"
    return f"{z.real:.15g}{z.imag:+.15g}j"


def _load(path: str) -> Diagram:
    try:
        d = fileformat.load(path)
    except DiagramError as exc:
        raise _InputError(f"{path}: {exc}") from None
    problems = validate(d)
    if problems:
        raise _InputError(f"{path}: invalid diagram\n" + "\n".join(f"  {v}" for v in problems))
    return d


# ---------------------------------------------------------------- eval


def cmd_eval(args) -> int:
    d = _load(args.path)
    t = evaluate(d)
    print(f"extents: ({', '.join(map(str, t.extents))})")
    print(f"roles: ({', '.join(t.roles)})")
    if args.format == "matrix" and t.rank:
        m = t.as_matrix()
        print(f"matrix {m.shape[0]}x{m.shape[1]}:")
        for row in m:
            print("  " + "  ".join(_fmt(z) for z in row))
    else:
        print("entries: (" + ", ".join(_fmt(z) for z in t.entries) + ")")
    return EXIT_OK


# ---------------------------------------------------------------- simplify


def cmd_simplify(args) -> int:
    d = _load(args.path)
    rules = None
    if args.rules:
        rules = [r.strip() for r in args.rules.split(",") if r.strip()]
        unknown = [r for r in rules if r not in RULE_IDS]
        if unknown:
            raise _InputError(f"unknown rule(s): {', '.join(unknown)}; known: {', '.join(RULE_IDS)}")
    try:
        out, trace = simplify(d, rules, max_steps=args.max_steps, check=not args.no_check, tol=args.tol)
    except SoundnessError as exc:
        print(f"soundness failure: {exc}", file=sys.stderr)
        print("before:", file=sys.stderr)
        print(fileformat.dumps(exc.before), file=sys.stderr)
        print("after:", file=sys.stderr)
        print(fileformat.dumps(exc.after), file=sys.stderr)
        return EXIT_UNSOUND
    if args.trace is not None:
        text = trace.to_text()
        summary = f"# steps={len(trace)} total_factor={_fmt(trace.total_factor)}"
        summary += "" if trace.completed else " (max-steps reached)"
        body = (text + "\n" if text else "") + summary + "\n"
        if args.trace == "-":
            sys.stderr.write(body)
        else:
            with open(args.trace, "w", encoding="utf-8") as fh:
                fh.write(body)
    if args.out:
        fileformat.save(out, args.out)
    else:
        print(fileformat.dumps(out))
    return EXIT_OK


# ---------------------------------------------------------------- equiv


def cmd_equiv(args) -> int:
    a, b = _load(args.a), _load(args.b)
    if a.signature() != b.signature():
        raise _InputError(f"boundary mismatch: {a.signature()} vs {b.signature()}")
    tol = default_tol() if args.tol is None else args.tol
    ta, tb = evaluate(a), evaluate(b)
    dev = max_deviation(ta, tb)
    if dev <= tol:
        print(f"EQUAL max_deviation={dev:.3e}")
        return EXIT_OK
    if args.up_to_scalar:
        lam = equal_up_to_scalar(ta, tb, tol)
        if lam is not None:
            resid = max_deviation(ta, tb.scaled(lam))
            print(f"EQUAL-UP-TO-SCALAR λ={_fmt(lam)} max_deviation={resid:.3e}")
            return EXIT_OK
    print(f"DIFFERENT max_deviation={dev:.3e}")
    return EXIT_DIFFERENT


# ---------------------------------------------------------------- demos


class _Report:
    def __init__(self, tol: float):
        self.tol = tol
        self.ok = True

    def check(self, name: str, deviation: float, passed: bool | None = None) -> None:
        good = deviation <= self.tol if passed is None else passed
        self.ok &= bool(good)
        print(f"{'PASS' if good else 'FAIL'}  {name}  deviation={deviation:.3e}")

    def info(self, text: str) -> None:
        print(f"      {text}")


def _eve_dims(args) -> tuple:
    return (args.eve_dim,) if args.eve_dim else (2, 4)


def _demo_qotp(args, rep: _Report) -> None:
    ident = Superoperator.identity(2)
    lam = protocols.channel_scalar(protocols.qotp_protocol(), ident, rep.tol)
    rep.info(f"correctness scalar λ={_fmt(lam) if lam is not None else 'none'}")
    rep.check("correctness: channel = 1/4 · identity", abs(lam - 0.25) if lam is not None else np.inf)
    name = "rewrite: reduces to a thick wire with scalar 1/4"
    try:
        out, trace = simplify(protocols.qotp_protocol(), check=True, tol=rep.tol)
    except SoundnessError as exc:
        rep.check(name, exc.deviation, False)
    else:
        rep.info(f"rewrite: {len(trace)} steps, total factor {_fmt(trace.total_factor)}")
        wire = len(out.nodes) == 0 and len(out.edges) == 1 and out.inputs[0].thick
        rep.check(name, abs(out.scalar - 0.25), wire and abs(out.scalar - 0.25) <= rep.tol)
    rep.check("security: Eve's marginal is input independent", protocols.eve_marginal_deviation())
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for t in range(args.trials):
        d_e = _eve_dims(args)[t % len(_eve_dims(args))]
        worst = max(worst, protocols.eve_marginal_deviation(protocols.random_entangling_attack(d_e, rng)))
    rep.check(f"security: marginal under {args.trials} random attacks", worst)
    worst = max(float(np.max(np.abs(evaluate(protocols.qotp_encrypt(u, v)).as_matrix() - bases.pauli(u, v))))
                for u in (0, 1) for v in (0, 1))
    rep.check("encryption: key (u,v) applies σ_z^u σ_x^v", worst)


def _demo_teleport(args, rep: _Report) -> None:
    ident = Superoperator.identity(2)
    lam = protocols.channel_scalar(protocols.teleportation(), ident, rep.tol)
    rep.info(f"teleportation scalar λ={_fmt(lam) if lam is not None else 'none'}")
    positive = lam is not None and abs(lam.imag) <= rep.tol and lam.real > rep.tol
    rep.check("teleportation channel is a positive multiple of identity",
              abs(lam.imag) if lam is not None else np.inf, positive)
    same = protocols.teleport_matches_qotp()
    rep.check("teleportation diagram rewrites to the QOTP diagram", 0.0 if same else np.inf, same)
    ta = evaluate(protocols.teleportation())
    tb = evaluate(protocols.qotp_protocol())
    ratio = equal_up_to_scalar(ta, tb, rep.tol)
    rep.check("teleportation = λ · QOTP as tensors", 0.0 if ratio is not None else np.inf, ratio is not None)


def _pull(attack, basis_id: str, tol: float) -> float:
    try:
        return protocols.pullthrough_check(attack, basis_id, tol)
    except PreconditionError:
        return float("inf")


def _demo_bb84(args, rep: _Report) -> None:
    rng = np.random.default_rng(args.seed)
    worst = {"z": 0.0, "x": 0.0}
    worst_pull = 0.0
    for t in range(args.trials):
        d_e = _eve_dims(args)[t % len(_eve_dims(args))]
        a = protocols.random_compliant_attack(d_e, rng)
        for b in worst:
            worst[b] = max(worst[b], protocols.non_disturbance_check(a, b))
            worst_pull = max(worst_pull, _pull(a, b, rep.tol))
    for b, dev in worst.items():
        rep.check(f"compliant attacks leave the {b} basis undisturbed ({args.trials} trials)", dev)
    rep.check("compliant attacks pull through the z and x copy spiders", worst_pull)
    dev = protocols.non_disturbance_check(protocols.cnot_copy_attack(), "x")
    rep.check("CNOT-copy attack is detected in the x basis", dev, dev > 1e-6)


def _demo_eightstate(args, rep: _Report) -> None:
    worst = 0.0
    for u in (0, 1):
        for v in (0, 1):
            for g in (0, 1):
                want = (-1) ** g * np.array([(-1) ** u, (-1) ** (u + v), (-1) ** v]) / np.sqrt(3)
                worst = max(worst, float(np.max(np.abs(bases.bloch_vector(bases.cipherstate(u, v, g)) - want))))
    rep.check("eight cipherstates sit on the cube corners", worst)
    rep.check("ψ_0 and ψ_1 are orthogonal", abs(np.vdot(bases.psi(0), bases.psi(1))))
    s = protocols.decoupling_sweep(args.trials, args.seed, _eve_dims(args), rep.tol)
    rep.check(f"compliant attacks pass all four bases ({args.trials} trials)",
              max(nd for _, nd, _ in s.compliant))
    rep.check("compliant attacks factor as ρ_E ⊗ identity", max(pd for _, _, pd in s.compliant))
    caught = min(nd for _, nd, _ in s.entangling)
    rep.check(f"entangling attacks disturb some basis ({args.trials} trials)", caught, s.contrapositive_ok)
    rng = np.random.default_rng(args.seed + 1)
    a = protocols.random_compliant_attack(_eve_dims(args)[0], rng)
    pull = max(_pull(a, b, rep.tol) for b in ("z", "x") + bases.EIGHT_STATE_IDS)
    rep.check("pull-through holds in z, x and the four eight-state bases", pull)
    rep.check("encryption commutes with the attack isometry", protocols.encryption_pullthrough_check(a))


_DEMOS = {"qotp": _demo_qotp, "teleport": _demo_teleport, "bb84": _demo_bb84, "eightstate": _demo_eightstate}


def cmd_demo(args) -> int:
    rep = _Report(default_tol() if args.tol is None else args.tol)
    _DEMOS[args.name](args, rep)
    print("ALL PASS" if rep.ok else "SOME CHECKS FAILED")
    return EXIT_OK if rep.ok else EXIT_DIFFERENT


def cmd_fixtures(args) -> int:
    from .fixtures import write_fixtures

    for p in write_fixtures(args.directory):
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdiagrams", description="Evaluate and rewrite quantum process diagrams.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate a diagram file to a tensor")
    e.add_argument("path")
    e.add_argument("--tol", type=float, default=None)
    e.add_argument("--format", choices=("matrix", "dense"), default="dense")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("simplify", help="rewrite a diagram to normal form")
    s.add_argument("path")
    s.add_argument("--trace", nargs="?", const="-", default=None, metavar="FILE",
                   help="write the step list (default: stderr)")
    s.add_argument("--max-steps", type=int, default=1000)
    s.add_argument("--rules", default=None, help="comma-separated rule ids, in priority order")
    s.add_argument("--out", default=None)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--no-check", action="store_true", help="skip per-step soundness evaluation")
    s.set_defaults(func=cmd_simplify)

    q = sub.add_parser("equiv", help="compare two diagrams semantically")
    q.add_argument("a")
    q.add_argument("b")
    q.add_argument("--up-to-scalar", action="store_true")
    q.add_argument("--tol", type=float, default=None)
    q.set_defaults(func=cmd_equiv)

    m = sub.add_parser("demo", help="run protocol checks")
    m.add_argument("name", choices=tuple(_DEMOS))
    m.add_argument("--trials", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--eve-dim", type=int, default=None)
    m.add_argument("--tol", type=float, default=None)
    m.set_defaults(func=cmd_demo)

    f = sub.add_parser("fixtures", help="write the example diagram files")
    f.add_argument("directory")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print("error: invalid diagram\n" + "\n".join(f"  {v}" for v in exc.violations), file=sys.stderr)
        return EXIT_INPUT
    except DiagramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
