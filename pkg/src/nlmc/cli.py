"""Command-line front end: ``nlmc <command> --scenario <path> [options]``.

Exit codes: 0 success, 1 error, 2 certificate failure under
``--require-certified``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import apps
from .certify import certify_affine_cone, certify_d_decreasing, certify_d_preserving, certify_h_monotone, restrict
from .dynamics import cesaro, detect_cycle, iterate, trajectory_csv
from .errors import NlmcError
from .kernel_ops import check_property_C, check_property_U
from .scenario import COMMANDS, affine_spec, build, order_family, parse_scenario, queue_moments
from .solve import find_equilibria, verify_invariant

INVARIANT_TOL = 1e-8


def _f(v) -> str:
    return f"{float(v):.17g}"


def _vec(v) -> str:
    return "(" + ", ".join(_f(x) for x in np.ravel(v)) + ")"


def _cert_line(c) -> str:
    line = f"{c.name:<12} {c.family.tag:<11} {'holds' if c.holds else 'FAILS'}"
    if c.sampled:
        line += f"  [sampled: {c.trials} trials]"
    if c.counterexample is not None:
        line += "  witness=" + json.dumps(c.counterexample, sort_keys=True)
    return line


def _write(out, name, text):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _kernel(sc):
    Q, H = build(sc)
    dim = Q.space.ndim if Q.space is not None else 1
    return Q, H, order_family(sc, dim)


def _local(Q, sc):
    return restrict(Q, sc.restrict) if sc.restrict is not None else Q


def cmd_certify(sc, args):
    Q, H, fam = _kernel(sc)
    Ql = _local(Q, sc)
    certs = [
        certify_d_preserving(Ql, fam),
        certify_d_decreasing(Ql, fam),
        certify_h_monotone(H, fam, seed=args.seed if args.seed is not None else sc.seed,
                           n_states=Q.n_states, space=Q.space),
    ]
    spec = affine_spec(sc)
    if spec is not None:
        certs.append(certify_affine_cone(spec))
    pu, pc = check_property_U(Ql), check_property_C(Ql)
    lines = [f"scenario: {sc.name}", f"h_interval: [{_f(Ql.h_domain[0])}, {_f(Ql.h_domain[1])}]"]
    lines += [_cert_line(c) for c in certs]
    for p in (pu, pc):
        w = f"  witness={json.dumps(p.witnesses[0])}" if p.witnesses else ""
        lines.append(f"Property{p.property:<4} {'':<11} {'holds' if p.holds else 'FAILS'}  (grid of {len(p.grid)}){w}")
    text = "\n".join(lines) + "\n"
    _write(args.out, "certificates.txt", text)
    ok = all(c.holds for c in certs) and pu.holds
    return text, ok


def _report_text(sc, Q, rep):
    lines = [f"scenario: {sc.name}", f"h_interval: [{_f(Q.h_domain[0])}, {_f(Q.h_domain[1])}]",
             f"verdict: {rep.verdict.value}", f"equilibria: {len(rep.equilibria)}"]
    for e in rep.equilibria:
        lines.append(f"  h*={_f(e.h)} dist={_vec(e.dist.probs)} residual={e.residual:.3e}")
    lines.append("certificates:")
    lines += ["  " + _cert_line(c) for c in rep.certificates]
    lines.append(f"  PropertyU holds: {rep.property_u_holds}")
    if rep.excluded:
        lines.append(f"excluded samples (multiple stationary laws): {len(rep.excluded)}")
    for h, why in rep.rejected:
        lines.append(f"rejected candidate h={_f(h)}: {why}")
    return "\n".join(lines) + "\n"


def _csv(rows, header) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _solve(sc, args, Q, H, fam):
    grid_step = args.grid_step if args.grid_step is not None else sc.grid_step
    tol = args.tol if args.tol is not None else sc.tol
    seed = args.seed if args.seed is not None else sc.seed
    return find_equilibria(Q, H, grid_step=grid_step, tol=tol, family=fam, seed=seed)


def _emit_solve(sc, args, Q, rep):
    text = _report_text(sc, Q, rep)
    _write(args.out, "report.txt", text)
    _write(args.out, "phi.csv", _csv([[_f(h), _f(p)] for h, p in rep.phi_samples], ["h", "phi"]))
    n = Q.n_states
    _write(args.out, "equilibria.csv", _csv(
        [[_f(e.h)] + [_f(v) for v in e.dist.probs] + [_f(e.residual)] for e in rep.equilibria],
        ["h"] + [f"p{j}" for j in range(n)] + ["residual"],
    ))
    return text


def cmd_solve(sc, args):
    Q, H, fam = _kernel(sc)
    Ql = _local(Q, sc)
    rep = _solve(sc, args, Ql, H, fam)
    return _emit_solve(sc, args, Ql, rep), rep.certified


def cmd_simulate(sc, args):
    Q, H, _ = _kernel(sc)
    if sc.mu0 is None:
        raise NlmcError("simulate needs dynamics.mu0")
    steps = args.steps if args.steps is not None else sc.steps
    traj = iterate(Q, H, sc.mu0, steps)
    cyc = detect_cycle(traj)
    avg = cesaro(traj)
    res = verify_invariant(Q, H, avg)
    lines = [
        f"scenario: {sc.name}",
        f"steps: {steps}",
        f"final: {_vec(traj.dists[-1].probs)}",
        "cycle: none" if cyc is None else f"cycle: period {cyc[0]}, onset {cyc[1]}",
        f"cesaro: {_vec(avg.probs)}",
        f"cesaro invariant residual: {res:.6e}",
        f"cesaro invariant: {str(res <= INVARIANT_TOL).lower()}",
    ]
    text = "\n".join(lines) + "\n"
    _write(args.out, "summary.txt", text)
    _write(args.out, "trajectory.csv", trajectory_csv(traj))
    return text, True


def cmd_queue(sc, args):
    lines, ok = [f"scenario: {sc.name}"], True
    if sc.queue is not None:
        ES, ES2 = queue_moments(sc)
        lam = apps.mg1_equilibrium_rate(ES, ES2)
        W = apps.pk_wait(lam, ES, ES2)
        lines += [f"ES: {_f(ES)}", f"ES2: {_f(ES2)}", f"lambda: {_f(lam)}", f"mean wait W: {_f(W)}",
                  f"1/lambda - W: {1.0 / lam - W:.3e}", f"load lambda*ES: {_f(lam * ES)}"]
    if sc.kernel is not None:
        Q, H, fam = _kernel(sc)
        rep = _solve(sc, args, Q, H, fam)
        _emit_solve(sc, args, Q, rep)
        lines.append(f"lindley verdict: {rep.verdict.value}")
        for e in rep.equilibria:
            over = apps.lindley_overflow(Q, e.dist, e.h) if "overflow_fn" in Q.meta else 0.0
            lines.append(f"  mean wait*={_f(e.h)} residual={e.residual:.3e} grid overflow={over:.3e}")
        lines += ["  " + _cert_line(c) for c in rep.certificates]
        ok = rep.certified
    if len(lines) == 1:
        raise NlmcError("queue needs a queue block or a kernel")
    text = "\n".join(lines) + "\n"
    _write(args.out, "queue.txt", text)
    return text, ok


def cmd_nleq(sc, args):
    Q, H, _ = _kernel(sc)
    from .kernel_ops import freeze

    system = apps.Cor1System(lambda a: freeze(Q, a).P, H, Q.h_domain, Q.n_states)
    grid_step = args.grid_step if args.grid_step is not None else sc.grid_step
    tol = args.tol if args.tol is not None else sc.tol
    sol = apps.solve_cor1(system, grid_step=grid_step, tol=tol)
    lines = [f"scenario: {sc.name}", f"a*: {_f(sol.a)}", f"x*: {_vec(sol.x)}"]
    lines += [f"condition {c.name}: {'holds' if c.holds else 'FAILS'} (grid of {len(c.grid)})" for c in sol.conditions]
    text = "\n".join(lines) + "\n"
    _write(args.out, "nleq.txt", text)
    return text, True


HANDLERS = {"certify": cmd_certify, "solve": cmd_solve, "simulate": cmd_simulate, "queue": cmd_queue, "nleq": cmd_nleq}


def run(command, sc, args) -> int:
    text, ok = HANDLERS[command](sc, args)
    sys.stdout.write(text)
    if args.require_certified and not ok:
        return 2
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlmc", description="Nonlinear Markov chains with an aggregator")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", required=True, help="scenario JSON file or bundled scenario name")
    p.add_argument("--out", type=Path, default=None, help="directory for report files")
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--require-certified", action="store_true")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        sc = parse_scenario(args.scenario)
        return run(args.command, sc, args)
    except (NlmcError, FileNotFoundError, ValueError) as exc:
        print(f"nlmc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
