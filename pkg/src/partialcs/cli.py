"""Command-line entry point: ``partialcs <subcommand> ...``.

Exit codes: 0 success, 1 domain error (infeasible, rank deficient, too large,
...), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import certificates as cert
from .errors import PartialCSError
from .experiments import compare_full_vs_partial, load_config, phase_diagram, verify_noisy_bounds
from .matio import format_matrix, read_matrix, read_vector, write_vector
from .partial import recover_direct, recover_projected, split_matrix
from .randgen import MagnitudeLaw, Seed, SignalModel, gaussian_matrix, noise_on_ball, parse_seed, planted_signal
from .solvers import SolveOptions, admm_basis_pursuit, admm_bpdn, simplex_l1


class UsageError(Exception):
    pass


def _emit(args, payload: dict, text: str) -> None:
    """Write ``payload`` to ``--out`` (format by extension) or ``text`` to stdout."""
    out = getattr(args, "out", None)
    if not out:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(out)
    if path.suffix == ".json":
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    elif path.suffix == ".csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = sorted(k for k, v in payload.items() if not isinstance(v, (list, dict)))
        w.writerow(keys)
        w.writerow([payload[k] for k in keys])
        path.write_text(buf.getvalue(), encoding="utf-8")
    else:
        path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _fmt_vec(v) -> str:
    return " ".join(repr(float(x)) for x in np.asarray(v).reshape(-1))


def _report_payload(rep) -> dict:
    return {
        "x": np.asarray(rep.x).tolist(),
        "objective": rep.objective,
        "primal_residual": rep.primal_residual,
        "dual_residual": rep.dual_residual,
        "iterations": rep.iterations,
        "status": rep.status.value,
        "method": rep.method,
    }


def cmd_solve(args) -> int:
    a = read_matrix(args.matrix)
    y = read_vector(args.y)
    weights = read_vector(args.weights) if args.weights else None
    if args.method == "simplex":
        if args.eta:
            raise UsageError("simplex handles eta = 0 only; use --method splitting")
        rep = simplex_l1(a, y, weights)
    else:
        opts = SolveOptions(weights=weights, adaptive=args.adaptive)
        rep = admm_bpdn(a, y, args.eta, opts) if args.eta else admm_basis_pursuit(a, y, opts)
    payload = _report_payload(rep)
    if args.out and Path(args.out).suffix not in {".json", ".csv"}:
        write_vector(args.out, rep.x)
        return 0
    text = (f"status {rep.status.value}\nobjective {rep.objective!r}\niterations {rep.iterations}\n"
            f"x {_fmt_vec(rep.x)}")
    _emit(args, payload, text)
    return 0


def cmd_recover(args) -> int:
    a = read_matrix(args.matrix)
    y = read_vector(args.y)
    part = split_matrix(a, args.r)
    opts = SolveOptions(adaptive=True)
    if args.route == "projected":
        sol = recover_projected(part, y, args.eta, opts)
    else:
        sol = recover_direct(part, y, args.eta, opts)
    if args.out and Path(args.out).suffix not in {".json", ".csv"}:
        write_vector(args.out, sol.x)
        return 0
    payload = {"x1": sol.x1.tolist(), "x2": sol.x2.tolist(), "x2_residual": sol.x2_residual,
               "route": sol.route.value, "status": sol.x1_report.status.value,
               "objective": sol.x1_report.objective}
    text = (f"route {sol.route.value}\nstatus {sol.x1_report.status.value}\n"
            f"x1 {_fmt_vec(sol.x1)}\nx2 {_fmt_vec(sol.x2)}\nx2_residual {sol.x2_residual!r}")
    _emit(args, payload, text)
    return 0


def cmd_certify(args) -> int:
    a = read_matrix(args.matrix)
    prop = args.property
    if prop in {"partial-nsp", "partial-rip", "mixed-rip"}:
        if args.r is None:
            raise UsageError(f"{prop} needs --r")
        part = split_matrix(a, args.r)
    if prop == "nsp":
        rep = cert.nsp_check(a, args.order, args.cap)
    elif prop == "partial-nsp":
        rep = cert.partial_nsp_check(part, args.order, args.cap)
    elif prop == "rip":
        rep = cert.rip_constant(a, args.order, args.cap)
    elif prop == "partial-rip":
        rep = cert.partial_rip_constant(part, args.order, args.cap)
    else:
        rep = cert.mixed_rip_constant(part, args.order, args.cap)
    payload = rep.to_dict()
    if isinstance(rep, cert.RipReport):
        text = (f"property {rep.property}\norder {rep.order}\ndelta = {rep.delta!r}\n"
                f"witness_support {list(rep.witness_support)}\nextreme_eigenvalue {rep.extreme_eigenvalue!r}")
    else:
        text = f"property {rep.property}\norder {rep.order}\nholds = {str(rep.holds).lower()}\n" \
               f"worst_ratio = {rep.worst_ratio!r}"
        if rep.witness_v is not None:
            text += f"\nwitness_support {list(rep.witness_support)}\nwitness_vector {_fmt_vec(rep.witness_v)}"
    _emit(args, payload, text)
    return 0


def cmd_bound(args) -> int:
    value = cert.gaussian_sample_bound(args.n, args.s, args.r, args.delta)
    payload = {"n": args.n, "s": args.s, "r": args.r, "delta": args.delta, "bound": value, "log": "natural"}
    _emit(args, payload, f"{value:.6f}")
    return 0


def cmd_gen(args) -> int:
    seed = Seed(parse_seed(args.seed), args.stream)
    if args.what == "matrix":
        _need(args, "k", "n")
        m = gaussian_matrix(args.k, args.n, seed)
        _write_or_print(args.out, format_matrix(m))
    elif args.what == "signal":
        _need(args, "n", "sparsity")
        r = args.r or 0
        model = SignalModel(MagnitudeLaw(args.magnitudes))
        sig = planted_signal(args.n - r, args.sparsity, r, model, seed)
        _write_or_print(args.out, format_matrix(sig.x.reshape(-1, 1)))
        if args.y_out:
            if not args.matrix:
                raise UsageError("--y-out needs --matrix")
            a = read_matrix(args.matrix)
            y = a @ sig.x
            if args.noise:
                y = y + read_vector(args.noise)
            write_vector(args.y_out, y)
    else:
        _need(args, "k", "eta")
        e = noise_on_ball(args.k, args.eta, seed, boundary=not args.interior)
        _write_or_print(args.out, format_matrix(e.reshape(-1, 1)))
    return 0


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join(f"--{m}" for m in missing))


def _write_or_print(out, text: str) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_phase(args) -> int:
    cfg = load_config(args.config, _overrides(args.set))
    table = phase_diagram(cfg, threads=args.threads)
    if args.out:
        path = Path(args.out)
        if path.suffix == ".json":
            path.write_text(table.to_json(full=args.full) + "\n", encoding="utf-8")
        else:
            path.write_text(table.to_csv(), encoding="utf-8")
    else:
        sys.stdout.write(table.to_csv())
    return 0


def cmd_verify_bounds(args) -> int:
    cfg = load_config(args.config, _overrides(args.set))
    rep = verify_noisy_bounds(cfg, threads=args.threads)
    payload = rep.to_dict()
    lines = [f"x2 bound violations {rep.violations} / {rep.checked} converged trials",
             "k,n,s,r,points,slope,intercept,eta0_max_err"]
    for f in rep.fits:
        lines.append(f"{f.k},{f.n},{f.s},{f.r},{f.points},{f.slope!r},{f.intercept!r},{f.eta0_max_err!r}")
    _emit(args, payload, "\n".join(lines))
    return 0 if rep.violations == 0 else 1


def cmd_compare(args) -> int:
    cfg = load_config(args.config, _overrides(args.set))
    rows = compare_full_vs_partial(cfg, threads=args.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = ["n", "s", "r", "target_rate", "k_min", "bound", "bound_delta"]
    w.writerow(keys)
    for row in rows:
        w.writerow(["" if row[k] is None or (isinstance(row[k], float) and math.isnan(row[k])) else row[k]
                    for k in keys])
    if args.out and Path(args.out).suffix == ".json":
        Path(args.out).write_text(json.dumps(rows, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    elif args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partialcs", description="Partially sparse recovery toolkit.")
    p.add_argument("--json-errors", action="store_true", help="machine-readable errors on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="weighted l1 minimization")
    s.add_argument("--matrix", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--eta", type=float, default=0.0)
    s.add_argument("--weights")
    s.add_argument("--method", choices=["simplex", "splitting"], default="simplex")
    s.add_argument("--adaptive", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("recover", help="partially sparse recovery")
    s.add_argument("--matrix", required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--eta", type=float, default=0.0)
    s.add_argument("--route", choices=["projected", "direct"], default="projected")
    s.add_argument("--out")
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("certify", help="exhaustive NSP/RIP certificates")
    s.add_argument("property", choices=["nsp", "partial-nsp", "rip", "partial-rip", "mixed-rip"])
    s.add_argument("--matrix", required=True)
    s.add_argument("--order", type=int, required=True)
    s.add_argument("--r", type=int)
    s.add_argument("--cap", type=int, default=cert.DEFAULT_CAP)
    s.add_argument("--out")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("bound", help="Gaussian sample-size bound")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--s", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("gen", help="generate matrices, signals or noise")
    s.add_argument("what", choices=["matrix", "signal", "noise"])
    s.add_argument("--seed", required=True, help="decimal or 0x-hex 64-bit integer")
    s.add_argument("--stream", type=lambda v: parse_seed(v), default=0)
    s.add_argument("--k", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--r", type=int)
    s.add_argument("--sparsity", type=int, help="nonzeros in the sparse block")
    s.add_argument("--magnitudes", choices=[m.value for m in MagnitudeLaw], default="uniform")
    s.add_argument("--eta", type=float)
    s.add_argument("--interior", action="store_true", help="uniform in the ball instead of on its boundary")
    s.add_argument("--matrix", help="with 'signal': also write y = A x to --y-out")
    s.add_argument("--noise", help="with --y-out: add this noise vector")
    s.add_argument("--y-out")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen)

    for name, func, helptext in [
        ("phase", cmd_phase, "phase-transition table"),
        ("verify-bounds", cmd_verify_bounds, "noisy error-bound verification"),
        ("compare", cmd_compare, "full vs partial measurement comparison"),
    ]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--out")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
        if name == "phase":
            s.add_argument("--full", action="store_true", help="per-trial records in JSON output")
        s.set_defaults(func=func)
    return p


def _fail(args_json: bool, code: int, kind: str, message: str) -> int:
    if args_json:
        sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    else:
        sys.stderr.write(f"error: {kind}: {message}\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    json_errors = "--json-errors" in argv
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = int(exc.code or 0)
        if code and json_errors:
            _fail(True, code, "UsageError", "invalid arguments")
        return code
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(json_errors, 2, "UsageError", str(exc))
    except PartialCSError as exc:
        return _fail(json_errors, 1, type(exc).__name__, str(exc))
    except (OSError, ValueError) as exc:
        return _fail(json_errors, 1, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
