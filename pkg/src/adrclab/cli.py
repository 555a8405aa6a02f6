"""Command line interface: stability margins, the comparison table,
closed-loop simulation with CSV/JSON emission, bandwidth sweeps, the
falsification experiment, and scenario linting.

Exit codes: 0 success (including intentional divergence results), 2 input
errors, 3 unwritable output.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .ratpoly import ZERO_PIVOT, as_fraction
from .scenarios import ScenarioError, load_scenario
from .simulate import (
    falsification_run,
    metrics_json,
    omega_sweep,
    run_closed_loop,
    sweep_csv_lines,
    timeseries_csv_lines,
)
from .stability import (
    GainInterval,
    bandwidth_phi,
    char_poly_a2,
    format_fraction,
    format_interval,
    gain_margin_values,
    table_csv,
    table_report,
    table_text,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OUTPUT = 3


class InputError(Exception):
    pass


def _parse_fraction_list(text: str, what: str) -> list[Fraction]:
    try:
        return [as_fraction(part.strip()) for part in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse {what} {text!r}: {exc}")


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(part.strip()) for part in text.split(",")]
    except ValueError as exc:
        raise InputError(f"cannot parse {what} {text!r}: {exc}")


def _boundary_certificate(phi_values, interval: GainInterval) -> str | None:
    if interval.empty or interval.unbounded or interval.boundary is None:
        return None
    verdict = interval.boundary
    # For an exact endpoint the verdict was taken at the endpoint itself;
    # for a bracketed one it was taken at the intolerable bracket end.
    at = interval.upper
    if not interval.upper_exact:
        at = interval.upper + interval.upper_tolerance
    kind = ("zero first-column Routh entry"
            if verdict.failure_reason == ZERO_PIVOT
            else verdict.failure_reason.replace("_", " "))
    from .stability import PhiVector

    poly = char_poly_a2(PhiVector(phi_values), at)
    where = (format_fraction(at) if interval.upper_exact
             else repr(float(at)))
    return (
        f"boundary certificate: {kind} in the s^{verdict.failure_power} row "
        f"at ratio {where} (characteristic polynomial {poly})"
    )


def cmd_margin(args) -> int:
    if args.phi is not None:
        phi_values = _parse_fraction_list(args.phi, "--phi")
        if args.n is not None and len(phi_values) != args.n + 1:
            raise InputError(
                f"--phi has {len(phi_values)} entries, --n {args.n} "
                f"requires {args.n + 1}"
            )
    else:
        if args.n is None:
            raise InputError("margin requires --n or --phi")
        phi_values = list(bandwidth_phi(args.n).phi)
    interval = gain_margin_values(phi_values)
    print(format_interval(interval))
    if interval.empty:
        print("the base polynomial is not Hurwitz; no ratio is tolerable")
        return EXIT_OK
    if interval.unbounded:
        if interval.unbounded_proven:
            print("unbounded (proven: every coefficient stays positive for "
                  "ratio > -1, sufficient at degree 2)")
        else:
            print("unbounded (heuristic: all geometric probes up to 1e12 "
                  "tolerable)")
        return EXIT_OK
    if not interval.upper_exact:
        print(
            f"upper endpoint bracketed: tolerable at "
            f"{float(interval.upper)!r}, intolerable within "
            f"{float(interval.upper_tolerance)!r}"
        )
    certificate = _boundary_certificate(phi_values, interval)
    if certificate:
        print(certificate)
    return EXIT_OK


def cmd_table(args) -> int:
    rows = table_report(args.max_n)
    sys.stdout.write(table_text(rows))
    if args.csv:
        _write_text(args.csv, table_csv(rows))
    return EXIT_OK


def _write_text(path: str, content: str) -> None:
    try:
        Path(path).write_text(content)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}")


class OutputError(Exception):
    pass


def cmd_simulate(args) -> int:
    sc = load_scenario(args.config)
    result = run_closed_loop(sc)
    try:
        with open(args.out, "w") as handle:
            for line in timeseries_csv_lines(result, every=args.every):
                handle.write(line + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {args.out}: {exc}")
    metrics = metrics_json(result)
    metrics_path = args.metrics or str(Path(args.out).with_suffix("")) + \
        ".metrics.json"
    _write_text(metrics_path, metrics)
    sys.stdout.write(metrics)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = load_scenario(args.config)
    omegas = _parse_float_list(args.omegas, "--omegas")
    if any(w <= 0 for w in omegas):
        raise InputError("--omegas entries must be positive")
    rows = omega_sweep(sc, omegas)
    lines = "\n".join(sweep_csv_lines(rows)) + "\n"
    if args.out:
        _write_text(args.out, lines)
    sys.stdout.write(lines)
    return EXIT_OK


def cmd_falsify(args) -> int:
    from .stability import PhiVector

    if args.phi is not None:
        phi = PhiVector(_parse_fraction_list(args.phi, "--phi"))
        if phi.n != args.n:
            raise InputError(
                f"--phi has {phi.n + 1} entries, --n {args.n} requires "
                f"{args.n + 1}"
            )
    else:
        phi = bandwidth_phi(args.n)
    omegas = _parse_float_list(args.omegas, "--omegas")
    k = tuple(_parse_float_list(args.k, "--k")) if args.k else None
    try:
        evidence = falsification_run(
            n=args.n, phi=phi, ratio=as_fraction(args.ratio),
            Mg=args.Mg, wg=args.wg, phig=args.phig,
            omegas=omegas, eps=args.eps, horizon=args.horizon, K=k,
        )
    except ValueError as exc:
        raise InputError(str(exc))
    print(
        f"destabilising uncertainty g = {evidence.Mg!r}*sin({evidence.wg!r}*t"
        f" + {evidence.phig!r}), ratio {args.ratio}, eps {evidence.eps!r}"
    )
    for row in evidence.rows:
        if row.diverged:
            print(
                f"omega_o={row.omega_o!r}: diverged at "
                f"t={row.blowup_time!r} (sup_track so far "
                f"{row.sup_track!r})"
            )
        else:
            print(f"omega_o={row.omega_o!r}: sup_track={row.sup_track!r}")
    print(f"tunability refuted: {'true' if evidence.refuted else 'false'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = load_scenario(args.config)
    print(
        f"OK: order n={sc.plant.n}, uncertainty "
        f"{sc.plant.uncertainty.kind}, omega_o={sc.controller.omega_o!r}, "
        f"horizon={sc.horizon!r}, step="
        f"{'auto' if sc.step is None else repr(sc.step)} "
        f"(resolves to {sc.resolved_step()!r})"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adrclab",
        description=(
            "Exact tolerable-gain margins and closed-loop simulation for "
            "disturbance-rejection control of uncertain integrator chains."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_margin = sub.add_parser(
        "margin", help="maximal tolerable gain-ratio interval for one phi")
    p_margin.add_argument("--n", type=int, default=None,
                          help="chain order (phi defaults to binomial)")
    p_margin.add_argument("--phi", default=None,
                          help="comma-separated phi values, e.g. 3,3,0.5")
    p_margin.set_defaults(func=cmd_margin)

    p_table = sub.add_parser(
        "table", help="margin vs prior sufficient range, one row per order")
    p_table.add_argument("--max-n", type=int, required=True, dest="max_n")
    p_table.add_argument("--csv", default=None, help="also write CSV here")
    p_table.set_defaults(func=cmd_table)

    p_sim = sub.add_parser("simulate", help="run one scenario file")
    p_sim.add_argument("config", help="scenario JSON path")
    p_sim.add_argument("--out", required=True, help="time-series CSV path")
    p_sim.add_argument("--metrics", default=None,
                       help="metrics JSON path (default: <out>.metrics.json)")
    p_sim.add_argument("--every", type=int, default=1,
                       help="write every N-th sample (default 1)")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser(
        "sweep", help="metrics across observer bandwidths")
    p_sweep.add_argument("config", help="scenario JSON path")
    p_sweep.add_argument("--omegas", required=True,
                         help="comma-separated bandwidths")
    p_sweep.add_argument("--out", default=None, help="also write CSV here")
    p_sweep.set_defaults(func=cmd_sweep)

    p_fal = sub.add_parser(
        "falsify",
        help="destabilising-sinusoid experiment outside the margin")
    p_fal.add_argument("--n", type=int, required=True)
    p_fal.add_argument("--ratio", required=True,
                       help="gain ratio (must be outside the margin)")
    p_fal.add_argument("--Mg", type=float, required=True,
                       help="sinusoid amplitude")
    p_fal.add_argument("--wg", type=float, default=1.0,
                       help="angular velocity (default 1)")
    p_fal.add_argument("--phig", type=float, default=0.0,
                       help="phase (default 0)")
    p_fal.add_argument("--omegas", default="100,1000,10000",
                       help="bandwidths to sweep")
    p_fal.add_argument("--eps", type=float, default=0.1,
                       help="tracking tolerance to refute (default 0.1)")
    p_fal.add_argument("--horizon", type=float, default=10.0)
    p_fal.add_argument("--phi", default=None,
                       help="phi values (default binomial for n)")
    p_fal.add_argument("--k", default=None,
                       help="feedback gain (default binomial placement at -2)")
    p_fal.set_defaults(func=cmd_falsify)

    p_val = sub.add_parser("validate", help="lint a scenario file")
    p_val.add_argument("config", help="scenario JSON path")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
