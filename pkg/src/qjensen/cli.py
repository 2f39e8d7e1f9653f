"""Command line front end.

Exit codes: 0 success, 1 a check failed (tolerance exceeded, audit
disagreement), 2 usage or parse error, 3 domain / precondition error,
4 certificate not reproduced.
"""

import argparse
import datetime
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .calculus import MECPreconditionError
from .catalog import catalog_get, get_generator
from .divergence import (
    DivergenceParams,
    _integral,
    _jensen,
    divergence_report,
    gauss_legendre_grid,
)
from .hermitian import DomainError, ValidationError, matrix_from_json, random_pd
from .lab import (
    Kind,
    SearchConfig,
    ViolationCertificate,
    audit_to_json,
    certificates_of,
    inverse_concavity_check,
    midpoint_violation_search,
    replay,
    theorem_audit,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_DOMAIN, EXIT_NOT_REPRODUCED = 0, 1, 2, 3, 4

log = logging.getLogger("qjensen")


class UsageError(Exception):
    pass


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _csv_ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _spectrum(text):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return lo, hi


def _load_matrix(path):
    try:
        with open(path) as fh:
            return matrix_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read matrix file {path}: {exc}") from exc
    except ValidationError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _generator(name):
    try:
        return catalog_get(name).generator
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _config(args):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    dims = args.dims or [1, 2, 3]
    if any(not 1 <= n <= 6 for n in dims):
        raise UsageError("--dims must lie in 1..6")
    lo, hi = args.spectrum
    try:
        return SearchConfig(dims=dims, trials=args.trials, spectrum_lo=lo, spectrum_hi=hi,
                            seed=args.seed, violation_margin=args.tol,
                            max_certificates=args.max_certificates)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _write_certificates(certs, directory):
    directory = Path(directory)
    paths = []
    for cert in certs:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / cert.filename
        path.write_text(json.dumps(cert.to_json(), indent=1))
        paths.append(str(path))
    return paths


# --- commands -----------------------------------------------------------------

def cmd_eval(args):
    g = _generator(args.generator)
    A, B = _load_matrix(args.matrix_a), _load_matrix(args.matrix_b)
    if A.shape != B.shape:
        raise UsageError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return divergence_report(g, _single_lambda(args), A, B, K=args.quad_nodes), EXIT_OK


def _lambdas(args):
    lams = args.lam or [0.5]
    try:
        return [DivergenceParams(lam).lam for lam in lams]
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _single_lambda(args):
    lams = _lambdas(args)
    if len(lams) != 1:
        raise UsageError("this command takes a single --lambda")
    return lams[0]


def cmd_intrep_check(args):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    g = _generator(args.generator)
    lam = _single_lambda(args)
    lo, hi = args.spectrum
    grid = gauss_legendre_grid(args.quad_nodes)
    tol = args.tol if args.tol_given else 1e-6
    worst, rows = 0.0, []
    for n in args.dims or [3]:
        for i in range(args.trials):
            A = random_pd(n, lo, hi, [args.seed, n, i, 0])
            B = random_pd(n, lo, hi, [args.seed, n, i, 1])
            direct = float(_jensen(g, lam, A, B))
            integral = _integral(g, lam, A, B, grid)
            err = abs(integral - direct) / (1.0 + abs(direct))
            worst = max(worst, err)
            if err > tol:
                rows.append({"dim": n, "trial": i, "direct": direct, "integral": integral,
                             "relative_error": err})
    result = {
        "generator": g.name,
        "lambda": lam,
        "quadrature_K": args.quad_nodes,
        "pairs": args.trials * len(args.dims or [3]),
        "tolerance": tol,
        "max_relative_error": worst,
        "failures": rows,
        "passed": not rows,
    }
    return result, EXIT_OK if not rows else EXIT_FAILED


def cmd_mec_check(args):
    g = _generator(args.generator)
    verdict = inverse_concavity_check(g, _config(args))
    out = verdict.to_json()
    out["generator"] = g.name
    out["certificate_files"] = _write_certificates(verdict.violations, args.certificates)
    return out, EXIT_OK


def cmd_jc_check(args):
    g = _generator(args.generator)
    verdict = midpoint_violation_search(Kind.JC_DIVERGENCE, g, _single_lambda(args), _config(args))
    out = verdict.to_json()
    out["generator"] = g.name
    out["certificate_files"] = _write_certificates(verdict.violations, args.certificates)
    return out, EXIT_OK


def cmd_audit(args):
    g = _generator(args.generator)
    report = theorem_audit(g, _lambdas(args), _config(args))
    out = audit_to_json(report)
    out["certificate_files"] = _write_certificates(certificates_of(report), args.certificates)
    ok = report["agree"] and report["agree_per_dim"]
    return out, EXIT_OK if ok else EXIT_FAILED


def cmd_replay(args):
    try:
        with open(args.certificate) as fh:
            cert = ViolationCertificate.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read certificate {args.certificate}: {exc}") from exc
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    try:
        result = replay(cert, get_generator)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    return result, EXIT_OK if result["reproduced"] else EXIT_NOT_REPRODUCED


COMMANDS = {
    "eval": cmd_eval,
    "intrep-check": cmd_intrep_check,
    "mec-check": cmd_mec_check,
    "jc-check": cmd_jc_check,
    "audit": cmd_audit,
    "replay": cmd_replay,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _TolAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.tol_given = True


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--dims", type=_csv_ints, default=None)
    common.add_argument("--lambda", dest="lam", type=float, action="append", default=None)
    common.add_argument("--quad-nodes", type=int, default=32)
    common.add_argument("--spectrum", type=_spectrum, default=(0.2, 5.0))
    common.add_argument("--tol", type=float, default=1e-8, action=_TolAction)
    common.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    common.add_argument("--certificates", default="certificates",
                        help="directory for violation certificates")
    common.add_argument("--max-certificates", type=int, default=5)
    common.add_argument("-v", "--verbose", action="store_true")
    common.set_defaults(tol_given=False)

    parser = _Parser(prog="qjensen", description="Quantum Jensen divergence toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", parents=[common], help="evaluate J directly and by quadrature")
    p.add_argument("generator")
    p.add_argument("matrix_a")
    p.add_argument("matrix_b")
    p = sub.add_parser("intrep-check", parents=[common], help="validate the integral representation")
    p.add_argument("generator")
    for name, text in [("mec-check", "Loewner concavity of A -> (Df'[A])^-1"),
                       ("jc-check", "joint convexity of J"),
                       ("audit", "MEC side vs joint convexity side")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("generator")
    p = sub.add_parser("replay", parents=[common], help="recompute a certificate's margin")
    p.add_argument("certificate")
    return parser


def _parameters(args):
    skip = {"out", "verbose", "certificates", "tol_given"}
    params = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        params[key] = list(value) if isinstance(value, tuple) else value
    return params


def main(argv=None):
    started = _now()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"qjensen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qjensen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, MECPreconditionError) as exc:
        print(f"qjensen: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValidationError as exc:
        print(f"qjensen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = {
        "manifest": {
            "command": args.command,
            "parameters": _parameters(args),
            "seed": args.seed,
            "library_version": __version__,
            "started": started,
            "finished": _now(),
        },
        "result": result,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
