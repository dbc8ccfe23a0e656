"""Command-line entry points.

Commands: check | certify | verify | kkt | example-q | selftest.

Exit codes follow one fixed scheme across commands:
    0   positive outcome (properly efficient / Accept / Holds / all stages pass)
    2   negative outcome (dominated / Reject / Fails / a stage failed)
    3   inconclusive outcome (oracle inconclusive, or the interior-point
        qualification fails so the classical multiplier route does not apply)
    64  usage errors: bad flags or flag values, unreadable input files,
        an infeasible candidate point, or an operation that needs
        --pin-vstar to proceed
    65  data errors: malformed JSON, schema violations, dimension
        mismatches, certificates too short to apply the convergence rule
    70  internal errors: LP failures and anything unexpected

Reports are UTF-8 JSON.  By default the report goes to stdout; --out
writes it to a file and keeps stdout to a one-line summary.  For certify,
--out names the certificate file instead and the acceptance report stays
on stdout.
"""

import argparse
import sys
import time

import numpy as np

from . import example_q, serialization
from .certificates import (
    EpiCertificate,
    EpsCertificate,
    ExactCertificate,
    classical_kkt_check,
    converged,
    eps_to_exact,
    epi_from_eps,
    generate_eps_certificate,
    slater_check,
    verify_eps_certificate,
    verify_epi_certificate,
    verify_exact_certificate,
)
from .cones import PolyhedralCone
from .convex import Polyhedron, PolyhedralFn
from .errors import (
    ConjugateUnsupported,
    DimensionMismatch,
    HenigcertError,
    HorizonTooShort,
    PointOutsideDomain,
    SchemaError,
)
from .fractional import (
    FractionalProblem,
    feasible,
    henig_check_bruteforce,
    parametric_equivalence_check,
)
from .grids import GridSpec

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70

TOL_FEAS_DEFAULT = 1e-9
# CLI default convergence gate: 1e-2 keeps the default horizon N=100 with
# the default 1/n schedule self-consistent (gamma_N = 1e-2 must pass).
CLI_TOL_CONV = 1e-2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which collides with the
    # negative-outcome code; route everything through UsageError instead.
    def error(self, message):
        raise UsageError(message)


def _parse_vector(text, what):
    parts = [t.strip() for t in text.split(",")]
    try:
        vals = [float(t) for t in parts if t != ""]
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None
    if not vals:
        raise UsageError(f"empty {what} {text!r}")
    return np.array(vals)


def _parse_grid(text):
    try:
        return GridSpec.parse(text)
    except (SchemaError, DimensionMismatch) as exc:
        raise UsageError(str(exc)) from None


def _gamma_schedule(text, N):
    try:
        c, power = serialization.parse_closed_form(text)
    except SchemaError as exc:
        raise UsageError(str(exc)) from None
    n = np.arange(1, N + 1, dtype=float)
    gamma = c * n ** -float(power)
    if (gamma < 0).any():
        raise UsageError(f"gamma schedule {text!r} is negative")
    return gamma


def _load_problem(path):
    try:
        return serialization.problem_from_json(serialization.load_json(path))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _load_certificate(path):
    try:
        return serialization.certificate_from_json(serialization.load_json(path))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _grid_json(grid):
    return {
        "lows": list(grid.lows),
        "highs": list(grid.highs),
        "counts": list(grid.counts),
    }


def _verdict_json(v):
    return {
        "kind": v.kind,
        "eps_witness": v.eps_witness,
        "at_eps": v.at_eps,
        "counterexample": None if v.counterexample is None else list(v.counterexample),
        "reason": v.reason,
    }


def _ladder(args):
    if args.eps_ladder is None:
        return None
    if args.eps_ladder < 0:
        raise UsageError("--eps-ladder must be a nonnegative exponent bound")
    return tuple(2.0 ** -k for k in range(args.eps_ladder + 1))


def _emit(doc, args, summary):
    if args.out:
        serialization.dump_json(doc, args.out)
        print(f"{summary} (report: {args.out})")
    else:
        serialization.dump_json_stream(doc, sys.stdout)


def _check_feasible(prob, point, tol):
    if not feasible(prob, point, tol=tol):
        raise PointOutsideDomain(
            f"candidate point is not feasible within tol_feas={tol:g}"
        )


def cmd_check(args):
    prob = _load_problem(args.problem)
    point = _parse_vector(args.point, "point")
    grid = _parse_grid(args.grid)
    ladder = _ladder(args)
    _check_feasible(prob, point, args.tol_feas)
    t0 = time.time()
    verdict = henig_check_bruteforce(prob, point, grid, ladder)
    equiv = parametric_equivalence_check(prob, point, grid, ladder)
    doc = {
        "command": "check",
        "problem": args.problem,
        "point": list(point),
        "grid": _grid_json(grid),
        "verdict": _verdict_json(verdict),
        "parametric_equivalence": equiv,
        "tol_feas": args.tol_feas,
        "seconds": time.time() - t0,
    }
    _emit(doc, args, f"check: {verdict.kind}")
    if verdict.kind == "properly_efficient":
        return EXIT_OK
    if verdict.kind == "dominated":
        return EXIT_NEGATIVE
    return EXIT_INCONCLUSIVE


def _generate_and_transfer(prob, point, args):
    lam = None if args.lam is None else _parse_vector(args.lam, "lambda")
    gamma = _gamma_schedule(args.gamma, args.n)
    eps_cert, trace = generate_eps_certificate(
        prob, point, lam=lam, gamma=gamma, pin_vstar=args.pin_vstar
    )
    if args.theorem == "4.3":
        cert = eps_cert
        report = verify_eps_certificate(prob, point, cert, tol_conv=args.tol_conv)
    elif args.theorem == "4.2":
        cert = epi_from_eps(prob, point, eps_cert)
        report = verify_epi_certificate(prob, point, cert, tol_conv=args.tol_conv)
    else:
        cert = eps_to_exact(prob, point, eps_cert)
        report = verify_exact_certificate(prob, point, cert, tol_conv=args.tol_conv)
    return cert, trace, report


def cmd_certify(args):
    prob = _load_problem(args.problem)
    point = _parse_vector(args.point, "point")
    _check_feasible(prob, point, args.tol_feas)
    t0 = time.time()
    doc = {
        "command": "certify",
        "problem": args.problem,
        "point": list(point),
        "theorem": args.theorem,
        "N": args.n,
        "gamma": args.gamma,
        "tol_conv": args.tol_conv,
    }
    if args.force:
        doc["pre_check"] = "skipped (--force)"
    else:
        if args.grid is None:
            raise UsageError("certify needs --grid for the pre-check (or --force)")
        grid = _parse_grid(args.grid)
        verdict = henig_check_bruteforce(prob, point, grid, _ladder(args))
        doc["pre_check"] = _verdict_json(verdict)
        doc["grid"] = _grid_json(grid)
        if verdict.kind != "properly_efficient":
            # no certificate to write, so --out stays untouched
            doc["seconds"] = time.time() - t0
            serialization.dump_json_stream(doc, sys.stdout)
            return (
                EXIT_NEGATIVE if verdict.kind == "dominated" else EXIT_INCONCLUSIVE
            )
    cert, trace, report = _generate_and_transfer(prob, point, args)
    doc["generation"] = {
        "trace": trace,
        "trace_converged": converged(trace, args.tol_conv),
    }
    doc["report"] = serialization.report_to_json(report)
    doc["seconds"] = time.time() - t0
    cert_json = serialization.certificate_to_json(cert)
    if args.out:
        serialization.dump_json(cert_json, args.out)
        doc["certificate_file"] = args.out
        serialization.dump_json_stream(doc, sys.stdout)
    else:
        doc["certificate"] = cert_json
        serialization.dump_json_stream(doc, sys.stdout)
    return EXIT_OK if report.verdict == "Accept" else EXIT_NEGATIVE


def cmd_verify(args):
    prob = _load_problem(args.problem)
    point = _parse_vector(args.point, "point")
    cert = _load_certificate(args.certificate)
    t0 = time.time()
    if isinstance(cert, EpiCertificate):
        report = verify_epi_certificate(prob, point, cert, tol_conv=args.tol_conv)
    elif isinstance(cert, EpsCertificate):
        report = verify_eps_certificate(prob, point, cert, tol_conv=args.tol_conv)
    elif isinstance(cert, ExactCertificate):
        report = verify_exact_certificate(prob, point, cert, tol_conv=args.tol_conv)
    else:
        raise SchemaError("unrecognized certificate object")
    doc = {
        "command": "verify",
        "problem": args.problem,
        "point": list(point),
        "certificate": args.certificate,
        "report": serialization.report_to_json(report),
        "seconds": time.time() - t0,
    }
    _emit(doc, args, f"verify: {report.verdict}")
    return EXIT_OK if report.verdict == "Accept" else EXIT_NEGATIVE


def cmd_kkt(args):
    prob = _load_problem(args.problem)
    point = _parse_vector(args.point, "point")
    grid = _parse_grid(args.grid)
    _check_feasible(prob, point, args.tol_feas)
    t0 = time.time()
    slater = slater_check(prob, grid)
    doc = {
        "command": "kkt",
        "problem": args.problem,
        "point": list(point),
        "grid": _grid_json(grid),
        "slater": slater,
    }
    if not slater:
        doc["verdict"] = "CQ fails - use sequential certificates"
        doc["seconds"] = time.time() - t0
        _emit(doc, args, "kkt: CQ fails - use sequential certificates")
        return EXIT_INCONCLUSIVE
    lam = None if args.lam is None else _parse_vector(args.lam, "lambda")
    result = classical_kkt_check(prob, point, lam=lam)
    doc["verdict"] = "Holds" if result.holds else "Fails"
    doc["ystar"] = None if result.ystar is None else list(result.ystar)
    doc["reason"] = result.reason
    doc["seconds"] = time.time() - t0
    _emit(doc, args, f"kkt: {doc['verdict']}")
    return EXIT_OK if result.holds else EXIT_NEGATIVE


def cmd_example_q(args):
    grid = _parse_grid(args.grid) if args.grid else example_q.DEFAULT_GRID
    rep = example_q.run(N=args.n, tol_conv=args.tol_conv, grid=grid)
    for k, stage in enumerate(rep["stages"], 1):
        status = "pass" if stage["ok"] else "FAIL"
        extra = ""
        if stage["stage"] == "certificate_accept":
            extra = (
                f" dual={stage['dual_residual_last']:.3e}"
                f" y={stage['y_residual_max']:.3e}"
                f" scalar={stage['scalar_residual_last']:.3e}"
            )
        print(
            f"[{k}/5] {stage['stage']}: {status}{extra} ({stage['seconds']:.2f}s)"
        )
    doc = {"command": "example-q", **rep}
    if args.out:
        serialization.dump_json(doc, args.out)
        print(f"report: {args.out}")
    if rep["ok"]:
        print("example-q: all five stages pass")
        return EXIT_OK
    failing = [s["stage"] for s in rep["stages"] if not s["ok"]]
    print(f"example-q: failing stages: {', '.join(failing)}")
    return EXIT_NEGATIVE


def _toy_problem():
    absfn = PolyhedralFn([[1.0], [-1.0]], [0.0, 0.0])
    neg_one = PolyhedralFn([[0.0]], [-1.0])
    h = PolyhedralFn([[1.0]], [-1.0])
    C = Polyhedron(A=[[1.0], [-1.0]], b=[1.0, 1.0])
    return FractionalProblem(
        1,
        [(absfn, neg_one), (absfn, neg_one)],
        [h],
        PolyhedralCone.nonneg_orthant(1),
        C,
    )


def cmd_selftest(args):
    t0 = time.time()
    prob = _toy_problem()
    xbar = np.zeros(1)
    checks = []

    grid = GridSpec(lows=(-1.0,), highs=(1.0,), counts=(201,))
    verdict = henig_check_bruteforce(prob, xbar, grid)
    checks.append(("oracle at the minimizer", verdict.kind == "properly_efficient"))

    # N=100 keeps the epigraph scalar residual 6/N inside the 1e-1 gate
    eps_cert, trace = generate_eps_certificate(prob, xbar, N=100)
    checks.append(("generated residuals vanish", float(np.max(trace)) <= 1e-9))
    rep = verify_eps_certificate(prob, xbar, eps_cert, tol_conv=1e-1)
    checks.append(("subdifferential form accepted", rep.verdict == "Accept"))

    epi = epi_from_eps(prob, xbar, eps_cert)
    rep = verify_epi_certificate(prob, xbar, epi, tol_conv=1e-1)
    checks.append(("epigraph form accepted", rep.verdict == "Accept"))

    exact = eps_to_exact(prob, xbar, eps_cert)
    rep = verify_exact_certificate(prob, xbar, exact, tol_conv=1e-1)
    checks.append(("exact form accepted", rep.verdict == "Accept"))

    kkt = classical_kkt_check(prob, xbar)
    checks.append(("multiplier check holds", kkt.holds))

    ok = all(flag for _, flag in checks)
    for name, flag in checks:
        print(f"selftest: {name}: {'pass' if flag else 'FAIL'}")
    print(f"selftest: {'ok' if ok else 'FAILED'} ({time.time() - t0:.2f}s)")
    return EXIT_OK if ok else EXIT_NEGATIVE


def _add_common(p, problem=True, point=True):
    if problem:
        p.add_argument("--problem", required=True, help="problem JSON file")
    if point:
        p.add_argument("--point", required=True, help="candidate point, e.g. 0,0.5")
    p.add_argument("--out", help="write the main output file here")


def _build_parser():
    top = _Parser(prog="henigcert", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[], help="grid oracle for proper efficiency")
    _add_common(p)
    p.add_argument("--grid", required=True, help='e.g. "201x201:[0,10]x[0,1]"')
    p.add_argument("--eps-ladder", type=int, help="largest ladder exponent k (eps down to 2^-k)")
    p.add_argument("--tol-feas", type=float, default=TOL_FEAS_DEFAULT)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("certify", help="generate a certificate at a candidate point")
    _add_common(p)
    p.add_argument("--theorem", choices=["4.2", "4.3", "4.4"], default="4.3")
    p.add_argument("--lambda", dest="lam", help="scalarization weights, e.g. 1,1")
    p.add_argument("--gamma", default="1/n", help="schedule: c, c/n or c/n^2")
    p.add_argument("--n", type=int, default=100, help="horizon N")
    p.add_argument("--grid", help="pre-check grid (required unless --force)")
    p.add_argument("--eps-ladder", type=int)
    p.add_argument("--tol-conv", type=float, default=CLI_TOL_CONV)
    p.add_argument("--tol-feas", type=float, default=TOL_FEAS_DEFAULT)
    p.add_argument("--pin-vstar", action="store_true", help="fix vstar = 0")
    p.add_argument("--force", action="store_true", help="skip the oracle pre-check")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="verify a certificate file")
    _add_common(p)
    p.add_argument("--certificate", required=True, help="certificate JSON file")
    p.add_argument("--tol-conv", type=float, default=CLI_TOL_CONV)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("kkt", help="interior-point qualification plus multiplier check")
    _add_common(p)
    p.add_argument("--grid", required=True, help="grid for the interior-point search")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--tol-feas", type=float, default=TOL_FEAS_DEFAULT)
    p.set_defaults(func=cmd_kkt)

    p = sub.add_parser("example-q", help="run the embedded worked example")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--tol-conv", type=float, default=1e-2)
    p.add_argument("--grid", help="override the default 201x201 grid")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_example_q)

    p = sub.add_parser("selftest", help="quick end-to-end smoke test")
    p.set_defaults(func=cmd_selftest)

    return top


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"henigcert: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PointOutsideDomain as exc:
        print(f"henigcert: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConjugateUnsupported as exc:
        print(f"henigcert: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, DimensionMismatch, HorizonTooShort) as exc:
        print(f"henigcert: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HenigcertError as exc:
        print(f"henigcert: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # last resort, keep the exit-code contract
        print(f"henigcert: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
