"""Command line: ``wstar <group> <command> ...``.

Every command prints one JSON document (``"schema": "wstar/1"``) with floats
written to 17 significant digits.  Exit status: 0 success, 2 usage error,
3 rejected input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import dsl
from .algebra import element_to_json, load_element, load_space
from .errors import ValidationError, WStarError
from .logic import chi_factor_estimate, phi_t_estimate, theta_estimate
from .modular import delta_spectrum, kms_check, sigma_t
from .powers import PowersSpec, classify_type, tinv_modulus
from .search import OptConfig, evaluate
from .ultra import make_sequence

SCHEMA = "wstar/1"


@dataclass(frozen=True)
class CommandResult:
    status: int
    payload: dict
    stdout: str
    stderr: str


# output --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(v, complex):
        return _fmt([v.real, v.imag])
    return json.dumps(str(v))


def dumps(payload: dict) -> str:
    """JSON text with every float at 17 significant digits."""
    return _fmt(payload)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v for v in r])


# commands ------------------------------------------------------------------------

def _space_validate(args):
    sp = load_space(args.file)
    return {"valid": True, "dims": list(sp.dims),
            "eigenvalues": [list(map(float, w)) for w in sp.eigvals],
            "delta_spectrum": list(map(float, delta_spectrum(sp)))}


def _modular_sigma(args):
    sp = load_space(args.space)
    x = load_element(args.element)
    return {"t": args.t, "method": args.method, "element": element_to_json(sigma_t(sp, x, args.t, args.method))}


def _modular_kms(args):
    sp = load_space(args.space)
    r = kms_check(sp, load_element(args.x), load_element(args.y), args.t, tol=args.tol, seed=args.seed)
    return {"t": r.t, "lower_error": r.lower_error, "upper_error": r.upper_error,
            "strip_max_ratio": r.strip_max_ratio, "strip_samples": r.strip_samples, "tol": r.tol, "ok": r.ok}


def _sentence_eval(args):
    sp = load_space(args.space)
    cfg = OptConfig(sample_budget=args.budget, restarts=args.restarts, seed=args.seed)
    if args.builtin is not None:
        name = args.builtin.lstrip("@")
        if name == "phi_t":
            if args.t is None:
                raise ValidationError("builtin phi_t needs --t", field="t")
            est, ast = phi_t_estimate(sp, args.t, cfg), dsl.library("phi_t", args.t)
        elif name == "chi_factor":
            est, ast = chi_factor_estimate(sp, cfg), dsl.library("chi_factor")
        elif name == "theta":
            est, ast = theta_estimate(sp, cfg), dsl.library("theta")
        else:
            raise ValidationError(f"unknown builtin {args.builtin!r}; use chi_factor, phi_t or theta", field="builtin")
    else:
        ast = dsl.parse(args.formula)
        est = evaluate(ast, sp, cfg)
    return {"formula": dsl.to_text(ast), "value": est.value, "kind": est.kind,
            "witnesses": {k: element_to_json(v) for k, v in est.witnesses.items()},
            "budget": args.budget, "restarts": args.restarts, "seed": args.seed}


def _eigs_from_args(args):
    if args.eigs is not None:
        try:
            return np.array([float(v) for v in args.eigs.split(",")])
        except ValueError:
            raise ValidationError(f"--eigs must be comma separated numbers, got {args.eigs!r}", field="eigs")
    if args.inf is not None:
        try:
            lam, mu = (float(v) for v in args.inf.split(","))
        except ValueError:
            raise ValidationError(f"--inf takes L,M, got {args.inf!r}", field="inf")
        return PowersSpec("infinity", lam, mu).eigs()
    return PowersSpec("lambda", args.lam).eigs()


def _scan_rows(eigs, tmax, steps):
    t = np.linspace(0.0, tmax, steps + 1)
    return zip(t, tinv_modulus(eigs, t))


def _powers_classify(args):
    eigs = _eigs_from_args(args)
    v = classify_type(eigs, args.tmax, args.steps)
    if args.out:
        _write_csv(args.out, ["t", "modulus"], _scan_rows(eigs, args.tmax, args.steps))
    return {"eigs": list(map(float, eigs)), "tmax": args.tmax, "steps": args.steps, **v.to_dict()}


def _powers_scan(args):
    eigs = PowersSpec("lambda", args.lam).eigs()
    if args.steps < 1 or not args.tmax > 0:
        raise ValidationError("need steps >= 1 and tmax > 0", field="steps")
    _write_csv(args.out, ["t", "modulus"], _scan_rows(eigs, args.tmax, args.steps))
    return {"eigs": list(map(float, eigs)), "tmax": args.tmax, "steps": args.steps, "rows": args.steps + 1,
            "out": args.out}


def _seq_decay(args):
    try:
        params = json.loads(args.params)
    except json.JSONDecodeError as err:
        raise ValidationError(f"--params is not valid JSON: {err}", field="params")
    if not isinstance(params, dict):
        raise ValidationError("--params must be a JSON object", field="params")
    family = params.pop("family", args.family)
    if args.family is not None and family != args.family:
        raise ValidationError(f"--family {args.family} disagrees with params family {family}", field="family")
    lam, mu = params.pop("lambda", 0.5), params.pop("mu", None)
    spec = PowersSpec("lambda", lam) if mu is None else PowersSpec("infinity", lam, mu)
    if args.stages < 1:
        raise ValidationError("--stages must be positive", field="stages")
    seq = make_sequence(family, params, spec)
    rows = [(n, seq.sharp_norm(n)) for n in range(1, args.stages + 1)]
    if args.out:
        _write_csv(args.out, ["n", "sharp_norm"], rows)
    return {"family": family, "params": {**params, "lambda": lam, **({"mu": mu} if mu is not None else {})},
            "stages": [n for n, _ in rows], "sharp_norm": [v for _, v in rows]}


# parser --------------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wstar", description="Numerical laboratory for finite-dimensional "
                                "W*-probability spaces and their continuous-logic sentences.")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="cap on worker threads (computations here are serial; accepted for scripting)")
    groups = p.add_subparsers(dest="group", required=True)

    g = groups.add_parser("space", help="space files").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("validate", help="validate a space file: faithful density of trace one "
                     "(finite-dimensional W*-probability spaces)")
    c.add_argument("file")
    c.set_defaults(func=_space_validate)

    g = groups.add_parser("modular", help="modular theory").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("sigma", help="apply the modular automorphism group sigma_t (Tomita-Takesaki theory)")
    c.add_argument("--space", required=True)
    c.add_argument("--element", required=True)
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--method", choices=("conjugation", "coefficient"), default="coefficient")
    c.set_defaults(func=_modular_sigma)
    c = g.add_parser("kms", help="check the KMS boundary identities and strip bound of the state")
    for name in ("--space", "--x", "--y"):
        c.add_argument(name, required=True)
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_modular_kms)

    g = groups.add_parser("sentence", help="continuous-logic sentences").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("eval", help="evaluate a sentence: factoriality (chi_factor), modular invariance "
                     "(phi_t) or fullness (theta), or any formula in the formula language")
    c.add_argument("--space", required=True)
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--formula")
    src.add_argument("--builtin")
    c.add_argument("--t", type=float, default=None, help="time parameter for phi_t")
    c.add_argument("--budget", type=_positive_int, default=2000)
    c.add_argument("--restarts", type=_positive_int, default=3)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_sentence_eval)

    g = groups.add_parser("powers", help="Powers states and type classification").add_subparsers(
        dest="cmd", required=True)
    c = g.add_parser("classify", help="classify the type (II_1, III_lambda, III_1) of a constant-state "
                     "tensor ultraproduct from its T-invariant scan")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--lambda", dest="lam", type=float)
    src.add_argument("--eigs")
    src.add_argument("--inf")
    c.add_argument("--tmax", type=float, default=30.0)
    c.add_argument("--steps", type=int, default=30000)
    c.add_argument("--out")
    c.set_defaults(func=_powers_classify)
    c = g.add_parser("tinv-scan", help="write the T-invariant modulus |sum e_k^(1+it)| of a Powers state as CSV")
    c.add_argument("--lambda", dest="lam", type=float, required=True)
    c.add_argument("--tmax", type=float, required=True)
    c.add_argument("--steps", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_powers_scan)

    g = groups.add_parser("seq", help="bounded sequences along tensor towers").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("decay", help="sharp norms of a sequence family along Powers stages "
                     "(ultraproduct ideal membership)")
    c.add_argument("--family")
    c.add_argument("--params", default="{}")
    c.add_argument("--stages", type=int, default=16)
    c.add_argument("--out")
    c.set_defaults(func=_seq_decay)
    return p


def run(argv) -> CommandResult:
    argv = list(argv)
    out, err = io.StringIO(), io.StringIO()
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return CommandResult(code, {}, out.getvalue(), err.getvalue())
    command = f"{args.group} {args.cmd}"
    try:
        with np.errstate(all="ignore"):
            body = args.func(args)
    except WStarError as exc:
        field = f" [field: {exc.field}]" if exc.field else ""
        payload = {"schema": SCHEMA, "command": command, "error": type(exc).__name__,
                   "field": exc.field, "message": str(exc)}
        return CommandResult(exc.exit_code, payload, "", f"wstar: {command}: {exc}{field}\n")
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        payload = {"schema": SCHEMA, "command": command, "error": type(exc).__name__, "message": str(exc)}
        return CommandResult(4, payload, "", f"wstar: {command}: numerical failure: {exc}\n")
    except (OSError, ValueError) as exc:
        payload = {"schema": SCHEMA, "command": command, "error": type(exc).__name__, "message": str(exc)}
        return CommandResult(3, payload, "", f"wstar: {command}: {exc}\n")
    payload = {"schema": SCHEMA, "command": command, **body}
    return CommandResult(0, payload, dumps(payload) + "\n", err.getvalue())


def main(argv=None) -> int:
    res = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(res.stdout)
    sys.stderr.write(res.stderr)
    return res.status


if __name__ == "__main__":
    sys.exit(main())
