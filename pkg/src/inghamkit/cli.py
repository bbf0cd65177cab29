"""Command line interface: ``inghamkit <command> [options]``.

Every command prints a JSON report (sorted keys, schema ``ingham-report/1``)
followed by ``#``-prefixed summary lines.  With ``--out`` the report (or, for
``synthesize`` and ``central-construct``, the grid file) is written there;
relative paths are resolved against ``$INGHAM_OUTPUT_DIR`` when it is set.

Exit status
-----------
0  success
2  usage error: bad arguments, unreadable or malformed input files
3  input error: parameters out of range, unresolvable grids
4  contract error: a construction's precondition fails (e.g. divergent profile)
5  numeric error, or a verification check that did not pass
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, InputError, NumericError
from .grid import forward_transform, l2_norm, max_outside_ball
from .gridio import load_grid, save_grid
from .heisenberg import (
    GroupFunction,
    central_construction,
    factorization_check,
    gaussian_group_function,
    ingham_nilpotent_check,
    lemma_slice_identity,
    mass_bound_check,
    plancherel_check,
    plancherel_refinement,
)
from .nilpotent import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    algebra_from_dict,
    coadjoint_form,
    generic_stratum,
    load_algebra,
    pfaffian_abs,
    validate_algebra,
)
from .synthesis import (
    DEFAULT_LEVELS,
    GapSequence,
    GridSpec,
    envelope_stability,
    gaps_from_profile,
    ingham_function,
    ingham_spectrum,
)
from .vanish import HalfSpace, log_integrand_csv, normalize_halfspace, theorem23_pipeline
from .weights import criterion, load_profile, parse_profile, profile_from_dict, radial_criterion_d

SCHEMA = "ingham-report/1"
OUTPUT_ENV = "INGHAM_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CONTRACT, EXIT_NUMERIC = 0, 2, 3, 4, 5


class UsageError(Exception):
    """Malformed command line or input file."""


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return parse


def _nonneg(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return v


def _q(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v >= 1:
        raise argparse.ArgumentTypeError("q must be at least 1")
    return v


def _vector(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a vector: {text!r}")


PROFILE_HELP = 'catalog profile such as "t/log(e+t)^2", "t^0.5", "3", or a JSON profile file'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inghamkit",
        description="Ingham-type uncertainty principles: criteria, synthesis, vanishing tests, "
                    "nilpotent Lie algebras and Heisenberg Plancherel checks.",
        epilog="exit status: 0 ok, 2 usage/malformed input file, 3 input error, "
               "4 contract error, 5 numeric error or failed verification. "
               f"Relative --out paths are resolved against ${OUTPUT_ENV} when set.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p):
        p.add_argument("--out", help="output path (report, or grid file for commands that build one)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("criterion", help="classify int_1^oo psi(t)/t^2 dt")
    p.add_argument("--profile", required=True, help=PROFILE_HELP)
    p.add_argument("--dims", type=_positive(int), default=1, help="radial criterion in R^d (product-form profiles)")
    common(p)

    p = sub.add_parser("synthesize", help="build an Ingham function for a convergent profile")
    p.add_argument("--profile", required=True, help=PROFILE_HELP)
    p.add_argument("--halfwidth", type=_positive(float), default=1.0)
    p.add_argument("--K", type=_positive(int), default=DEFAULT_LEVELS, help="number of dyadic gap levels")
    p.add_argument("--points", type=_positive(int), default=None, help="grid points (default: automatic)")
    common(p)

    p = sub.add_parser("verify-decay", help="check support, spectrum and envelope of a synthesized grid")
    p.add_argument("grid_path", nargs="?", help="grid file written by synthesize")
    p.add_argument("--grid", dest="grid_opt")
    p.add_argument("--profile", help="override the profile stored in the grid file")
    p.add_argument("--lambda-max", type=_positive(float), default=1e4, help="envelope band upper end")
    common(p)

    p = sub.add_parser("vanish-test", help="half-space vanishing pipeline on a grid")
    p.add_argument("grid_path", nargs="?")
    p.add_argument("--grid", dest="grid_opt")
    p.add_argument("--profile", required=True, help=PROFILE_HELP)
    p.add_argument("--eta", type=_vector, default=None, help='unit normal, e.g. "1" or "0,1"')
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--q", type=_q, default=2.0)
    p.add_argument("--N", type=_nonneg, default=0.0)
    common(p)

    p = sub.add_parser("lie-analyze", help="validate an algebra, find the generic stratum, tabulate |Pf|")
    p.add_argument("--algebra", required=True, help="algebra file or shipped name (heisenberg1, ...)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--samples", type=_positive(int), default=DEFAULT_SAMPLES)
    common(p)

    def group_opts(p):
        p.add_argument("--grid", dest="grid_opt", help="group function grid file (default: Gaussian on H_1)")
        p.add_argument("--algebra", default="heisenberg1")
        p.add_argument("--lambda-max", type=_positive(float), default=8.0)
        p.add_argument("--panels", type=_positive(int), default=16)

    p = sub.add_parser("plancherel", help="Plancherel formula on H_n by quadrature over lambda")
    group_opts(p)
    common(p)

    p = sub.add_parser("lemma-slice", help="g_hat(lambda) against ||pi_lambda(f)||^2 |lambda|^n")
    group_opts(p)
    common(p)

    p = sub.add_parser("nilpotent-check", help="weighted Plancherel mass against the criterion")
    group_opts(p)
    p.add_argument("--profile", required=True, help=PROFILE_HELP)
    common(p)

    p = sub.add_parser("central-construct", help="f = g *_Z h with g an Ingham function")
    p.add_argument("--profile", required=True, help=PROFILE_HELP)
    p.add_argument("--halfwidth", type=_positive(float), default=0.5)
    p.add_argument("--K", type=_positive(int), default=3)
    p.add_argument("--lambda-max", type=_positive(float), default=8.0)
    p.add_argument("--panels", type=_positive(int), default=16)
    common(p)
    return parser


def _resolve_out(path):
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _profile(text):
    try:
        if text.endswith(".json") and Path(text).is_file():
            return load_profile(text)
        return parse_profile(text)
    except InputError as exc:
        raise UsageError(str(exc)) from exc


def _load_grid(args):
    path = getattr(args, "grid_path", None) or getattr(args, "grid_opt", None)
    if path is None:
        raise UsageError("a grid file is required")
    try:
        return load_grid(path)
    except (InputError, OSError) as exc:
        raise UsageError(f"cannot read grid {path}: {exc}") from exc


def _algebra(name):
    try:
        if isinstance(name, dict):
            return algebra_from_dict(name)
        return load_algebra(name)
    except (InputError, OSError) as exc:
        raise UsageError(f"cannot read algebra {name}: {exc}") from exc


def _group_function(args):
    if getattr(args, "grid_opt", None):
        f, meta = _load_grid(args)
        alg = _algebra(meta.get("algebra", args.algebra))
        return GroupFunction(alg, f), meta
    alg = _algebra(args.algebra)
    n = (alg.dim - 1) // 2
    return gaussian_group_function(n=n), {"algebra": args.algebra, "source": "gaussian sigma=0.25"}


def _clean(obj):
    """Make a report JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---- commands: each returns (report dict, summary lines, csv text or None, ok flag)

def cmd_criterion(args):
    p = _profile(args.profile)
    rep = criterion(p) if args.dims == 1 else radial_criterion_d(p, args.dims)
    d = rep.to_dict()
    rows = [(T, I) for T, I in rep.partial_integrals]
    summary = [f"profile {p.name}: {rep.classification}"
               + ("" if rep.value is None else f", I = {rep.value:.12g}")]
    return d, summary, _csv(rows, ["T", "I_T"]), True


def _synthesize(p, l, K, points):
    gaps = gaps_from_profile(p, l, K)
    spec = None if points is None else GridSpec(1.5 * l, points)
    f, F = ingham_function(gaps, spec)
    return gaps, f, F


def cmd_synthesize(args):
    p = _profile(args.profile)
    gaps, f, F = _synthesize(p, args.halfwidth, args.K, args.points)
    outside = max_outside_ball(f, args.halfwidth)
    report = {
        "profile": p.to_dict(),
        "gaps": gaps.to_dict(),
        "grid": {"points": f.shape[0], "spacing": float(f.spacing[0]), "origin": float(f.origin[0])},
        "outside_support_relative": outside,
        "support_ok": outside < 1e-12,
        "l2_norm": l2_norm(f),
    }
    out = _resolve_out(args.out)
    if out is not None:
        save_grid(out, f, {"profile": p.to_dict(), "gaps": gaps.to_dict(), "halfwidth": args.halfwidth})
        report["grid_file"] = out.name
    rows = [(i + 1, b, m) for i, (b, m) in enumerate(zip(gaps.level_gaps, gaps.multiplicities))]
    summary = [f"{gaps.count} gaps in {gaps.truncation_index} levels, total {gaps.total:.6g} <= l = {args.halfwidth:g}",
               f"mass outside [-l, l]: {outside:.3e} of peak"]
    return report, summary, _csv(rows, ["level", "gap", "multiplicity"]), outside < 1e-12


def cmd_verify_decay(args):
    f, meta = _load_grid(args)
    if "gaps" not in meta:
        raise UsageError("grid file carries no gap sequence; was it written by synthesize?")
    gaps = GapSequence.from_dict(meta["gaps"])
    if args.profile:
        p = _profile(args.profile)
    else:
        try:
            p = profile_from_dict(meta["profile"])
        except (InputError, KeyError) as exc:
            raise UsageError(f"grid file profile unreadable: {exc}") from exc
    l = float(meta.get("halfwidth", gaps.target_halfwidth))
    outside = max_outside_ball(f, l)
    F = forward_transform(f)
    analytic = ingham_spectrum(gaps, F.frequencies[0])
    spec_err = float(np.abs(F.values - analytic).max() / max(np.abs(analytic).max(), 1e-300))
    imag = float(np.abs(f.values.imag).max() / f.peak())
    env = envelope_stability(gaps, p, (1.0, args.lambda_max))
    checks = {
        "support": outside < 1e-12,
        "spectral_product": spec_err < 1e-8,
        "real": imag < 1e-12,
        "envelope_stable": env["stable"],
    }
    report = {
        "profile": p.to_dict(),
        "halfwidth": l,
        "outside_support_relative": outside,
        "spectral_product_error": spec_err,
        "imaginary_relative": imag,
        "envelope": env,
        "checks": checks,
        "all_pass": all(checks.values()),
    }
    summary = [f"{k}: {'pass' if v else 'FAIL'}" for k, v in sorted(checks.items())]
    summary.append(f"envelope max |f_hat| e^psi on [1, {args.lambda_max:g}]: {env['band']['max']:.6g}, "
                   f"change under doubling {env['relative_change']:.3g}")
    rows = [(k, int(v)) for k, v in sorted(checks.items())]
    return report, summary, _csv(rows, ["check", "pass"]), all(checks.values())


def cmd_vanish_test(args):
    f, meta = _load_grid(args)
    p = _profile(args.profile)
    eta = args.eta if args.eta is not None else [1.0] + [0.0] * (f.dims - 1)
    try:
        h = HalfSpace(eta, args.s)
    except InputError as exc:
        raise UsageError(str(exc)) from exc
    rep = theorem23_pipeline(f, h, p, args.q, args.N)
    d = rep.to_dict()
    summary = [f"verdict: {rep.verdict} ({rep.consistency}); criterion {rep.criterion}; ||f||_2 = {rep.norm:.6g}",
               f"{rep.slices_tested} of {rep.slices_total} slices tested"]
    text = None
    if args.format == "csv" and f.dims == 1:
        g = normalize_halfspace(f, h)
        text = log_integrand_csv(forward_transform(g), p, rep.floor)
    elif args.format == "csv":
        rows = [(i, r.classification, r.plus_part, r.floored_fraction)
                for i, (_, r) in enumerate(rep.slice_reports)]
        text = _csv(rows, ["slice", "classification", "plus_part", "floored_fraction"])
    return d, summary, text, True


def cmd_lie_analyze(args):
    alg = _algebra(args.algebra)
    val = validate_algebra(alg, raise_on_error=False)
    if not val.valid:
        return {"algebra": alg.to_dict(), "validation": val.to_dict()}, \
            [f"invalid algebra: first violation {val.first_violation}"], None, False
    strat = generic_stratum(alg, args.samples, args.seed)
    rng = np.random.default_rng(args.seed)
    table = []
    for _ in range(8):
        nu = np.round(rng.standard_normal(alg.dim), 6)
        orb = coadjoint_form(alg, nu)
        try:
            pf = pfaffian_abs(alg, nu, strat.P)
        except ContractError:
            pf = None
        idx = [j - 1 for j in strat.P]
        det = float(np.linalg.det(orb.B[np.ix_(idx, idx)])) if idx else 1.0
        table.append({"nu": nu.tolist(), "jump_set": list(orb.jump_set), "pf_abs": pf, "det_BP": det})
    report = {
        "algebra": alg.to_dict(),
        "validation": val.to_dict(),
        "stratum": strat.to_dict(),
        "pfaffian_table": table,
    }
    summary = [f"{alg.name or 'algebra'}: dim {alg.dim}, step {val.step}",
               f"P = {set(strat.P) or '{}'}, Q = {set(strat.Q) or '{}'}, generic fraction {strat.fraction:g}"]
    rows = [(" ".join(map(repr, r["nu"])), " ".join(map(str, r["jump_set"])), r["pf_abs"], r["det_BP"]) for r in table]
    return report, summary, _csv(rows, ["nu", "jump_set", "pf_abs", "det_BP"]), True


def cmd_plancherel(args):
    F, meta = _group_function(args)
    rep = plancherel_check(F, args.lambda_max, args.panels)
    ref = plancherel_refinement(F, (args.panels, 2 * args.panels, 4 * args.panels), args.lambda_max)
    report = {"source": meta, "plancherel": rep.to_dict(), "refinement": ref}
    summary = [f"||f||^2 = {rep.norm_squared:.12g}, quadrature {rep.bridged:.12g}, rel. error {rep.relative_error:.3e}",
               f"without gap bridge {rep.relative_error_raw:.3e}; observed orders {', '.join(f'{o:.2f}' for o in ref['orders'])}"]
    rows = [(r["lambda"], r["weight"], r["hs2"], r["density"]) for r in report["plancherel"]["table"]]
    return report, summary, _csv(rows, ["lambda", "weight", "hs2", "density"]), True


def cmd_lemma_slice(args):
    F, meta = _group_function(args)
    lam = np.linspace(0.5, min(4.0, args.lambda_max), 15)
    rep = lemma_slice_identity(F, lam)
    report = {"source": meta, "lemma": rep}
    summary = [f"max relative discrepancy {rep['max_relative_discrepancy']:.3e} over lambda in "
               f"[{lam[0]:g}, {lam[-1]:g}]; min g_hat {rep['min_g_hat']:.3e}"]
    rows = list(zip(rep["lambdas"], rep["g_hat"], rep["hs_weighted"]))
    return report, summary, _csv(rows, ["lambda", "g_hat", "hs2_times_density"]), True


def cmd_nilpotent_check(args):
    F, meta = _group_function(args)
    p = _profile(args.profile)
    rep = ingham_nilpotent_check(F, p, args.lambda_max)
    report = {"source": meta, "check": rep}
    summary = [f"verdict: {rep['verdict']}; criterion {rep['criterion']}; "
               f"weighted mass {rep['weighted_masses'][-1]:.6g} (growing: {rep['mass_growing']})"]
    rows = list(zip(rep["bands"], rep["weighted_masses"]))
    return report, summary, _csv(rows, ["band", "weighted_mass"]), True


def cmd_central_construct(args):
    p = _profile(args.profile)
    l = args.halfwidth
    gaps = gaps_from_profile(p, l, args.K)
    dt = 1.0 / 256
    # a margin of l/2 on each side keeps the sampled g at zero on its edges
    n_g = int(round(3 * l / dt))
    g, _ = ingham_function(gaps, GridSpec(n_g * dt / 2, n_g))
    h = gaussian_group_function(n=1, sigma=0.25, nt=512, nx=32)
    f = central_construction(g, h, delta=l)
    lam = np.linspace(0.5, 4.0, 15)
    fac = factorization_check(f, g, h, lam)
    mass = mass_bound_check(f, g, h, p, args.lambda_max, args.panels)
    ok = fac["max_relative_error"] < 1e-3 and mass["holds_quadrature"]
    report = {"profile": p.to_dict(), "gaps": gaps.to_dict(), "factorization": fac, "mass_bound": mass,
              "all_pass": ok}
    out = _resolve_out(args.out)
    if out is not None:
        save_grid(out, f.samples, {"algebra": "heisenberg1", "profile": p.to_dict(), "gaps": gaps.to_dict()})
        report["grid_file"] = out.name
    summary = [f"factorization max rel. error {fac['max_relative_error']:.3e}",
               f"weighted mass {mass['weighted_mass']:.6g} <= C ||h||^2 = {mass['bound_norm']:.6g}: "
               f"{'pass' if mass['holds_norm'] else 'FAIL'}"]
    rows = list(zip(fac["lambdas"], fac["hs2_f"], fac["product"]))
    return report, summary, _csv(rows, ["lambda", "hs2_f", "ghat2_hs2_h"]), ok


COMMANDS = {
    "criterion": cmd_criterion,
    "synthesize": cmd_synthesize,
    "verify-decay": cmd_verify_decay,
    "vanish-test": cmd_vanish_test,
    "lie-analyze": cmd_lie_analyze,
    "plancherel": cmd_plancherel,
    "lemma-slice": cmd_lemma_slice,
    "nilpotent-check": cmd_nilpotent_check,
    "central-construct": cmd_central_construct,
}

_WRITES_GRID = ("synthesize", "central-construct")


def render(command, report, summary, ok) -> str:
    doc = {"schema": SCHEMA, "command": command, "ok": bool(ok), "report": _clean(report),
           "summary": list(summary)}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        report, summary, table, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"inghamkit {args.command}: {exc}", file=stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"inghamkit {args.command}: input error: {exc}", file=stderr)
        return EXIT_INPUT
    except ContractError as exc:
        print(f"inghamkit {args.command}: contract error: {exc}", file=stderr)
        return EXIT_CONTRACT
    except NumericError as exc:
        print(f"inghamkit {args.command}: numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    text = table if args.format == "csv" and table is not None else render(args.command, report, summary, ok)
    if args.out is not None and args.command not in _WRITES_GRID:
        _resolve_out(args.out).write_text(text)
    elif args.command in _WRITES_GRID and args.out is not None:
        report_path = _resolve_out(args.out).with_suffix(".report.json")
        report_path.write_text(render(args.command, report, summary, ok))
    stdout.write(text)
    if args.format == "json":
        for line in summary:
            stdout.write(f"# {line}\n")
    return EXIT_OK if ok else EXIT_NUMERIC


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
