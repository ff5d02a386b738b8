"""Command line front end.

Subcommands mirror the library layers: geometry tables, map construction,
neck decomposition, the inequality suite, single-family sweeps, and
multi-family rate reports.  Exit status is 2 for usage or config errors,
1 when a --check gate fails, 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    arclength_reparametrize,
    connecting_curve,
    decompose_neck,
    geodesic_deviation,
    verify_lemma_suite,
)
from .families import family_from_config
from .field import MapField, collar_s_grid
from .geometry import CollarGeometry, TorusGeometry
from .experiments import (
    run_sweep,
    write_curve_csv,
    write_records_csv,
    write_summary_json,
)

__all__ = ["main"]


class ConfigError(Exception):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _family_from_args(config: dict):
    try:
        return family_from_config(config)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad family config: {exc}") from exc


def _build_field(args) -> MapField:
    if args.map is not None:
        return MapField.load(args.map)
    if args.config is None:
        raise ConfigError("need either --map or --config")
    family = _family_from_args(_load_json(args.config))
    if family.domain == "torus":
        if args.height is None:
            raise ConfigError("torus families need --height")
        return family.build(height=args.height)
    if args.ell is None:
        raise ConfigError("hyperbolic families need --ell")
    return family.build(ell=args.ell)


def _cmd_geometry(args) -> int:
    lines = []
    if args.ell is not None:
        geo = CollarGeometry(args.ell)
        lines.append(
            f"# ell={geo.ell!r} half_length={geo.half_length!r} "
            f"rho_min={geo.rho_min()!r} rho_end={geo.rho_end()!r}"
        )
        s = collar_s_grid(args.ell, h_s=args.h_s)
        rho = geo.rho(s)
    else:
        geo = TorusGeometry(height=args.height, twist=args.twist)
        lines.append(
            f"# height={geo.height!r} twist={geo.twist!r} "
            f"ell={geo.sys_length!r} rho={geo.rho!r}"
        )
        from .field import torus_s_grid

        s = torus_s_grid(args.height, h_s=args.h_s)
        rho = [geo.rho] * len(s)
    lines.append("s,rho")
    lines.extend(f"{float(si)!r},{float(ri)!r}" for si, ri in zip(s, rho))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_build(args) -> int:
    field = _build_field(args)
    field.save(args.out)
    print(
        f"saved {args.out}: target={field.target.name} metric={field.metric} "
        f"grid={field.n_s}x{field.n_theta}"
    )
    return 0


def _cmd_decompose(args) -> int:
    field = _build_field(args)
    report = decompose_neck(field, delta_override=args.delta)
    print(
        f"ell={field.sys_length()!r} scaled_tension={report.scaled_tension!r} "
        f"velocity_floor={report.velocity_floor!r} margin={report.margin!r}"
    )
    for gap in report.gaps:
        extra = ""
        if gap.case == "threshold":
            extra = f" start={gap.curve_start!r} end={gap.curve_end!r} gate={gap.gate_velocity!r}"
        print(f"gap {gap.gap[0]!r}..{gap.gap[1]!r} {gap.case}{extra}")
    best = report.best()
    comparison = curve = None
    if best.case == "threshold":
        _, points = connecting_curve(field, best.curve_start, best.curve_end)
        curve = arclength_reparametrize(points, field.h_s, field.target)
        comparison = geodesic_deviation(curve, field.target)
        print(
            f"curve half_length={curve.half_length!r} "
            f"geodesic_deviation={comparison.deviation!r}"
        )
    else:
        print("curve undefined: best gap is trivial")
    if args.json:
        payload = {
            "ell": field.sys_length(),
            "scaled_tension": report.scaled_tension,
            "velocity_floor": report.velocity_floor,
            "margin": report.margin,
            "energy_intervals": [list(iv) for iv in report.energy_set.intervals],
            "gaps": [
                {
                    "gap": list(g.gap),
                    "case": g.case,
                    "curve_start": g.curve_start,
                    "curve_end": g.curve_end,
                    "probe": g.probe,
                    "core": list(g.core) if g.core else None,
                    "gate_velocity": g.gate_velocity,
                    "warning": g.warning,
                }
                for g in report.gaps
            ],
            "curve_half_length": None if curve is None else curve.half_length,
            "geodesic_deviation": None if comparison is None else comparison.deviation,
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.curve_csv:
        if curve is None:
            print("skipping curve table: no curve extracted", file=sys.stderr)
        else:
            write_curve_csv(curve, comparison, field.target, args.curve_csv)
    return 0


def _cmd_verify_lemmas(args) -> int:
    report = verify_lemma_suite(refine=not args.no_refine)
    for c in report.checks:
        flag = "skip" if c.skipped else ("ok" if c.passed else "FAIL")
        ratio = "-" if c.ratio is None else f"{c.ratio:.6g}"
        fine = "" if c.refined_ratio is None else f" refined={c.refined_ratio:.6g}"
        print(f"[{flag}] {c.map_name} {c.name} ratio={ratio} ceiling={c.ceiling:g}{fine}")
    print(f"suite {'passed' if report.passed else 'FAILED'} ({len(report.checks)} checks)")
    if args.json:
        payload = [
            {
                "name": c.name,
                "map": c.map_name,
                "ratio": c.ratio,
                "ceiling": c.ceiling,
                "passed": c.passed,
                "skipped": c.skipped,
                "refined_ratio": c.refined_ratio,
                "stable": c.stable,
            }
            for c in report.checks
        ]
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.check and not report.passed:
        return 1
    return 0


def _run_one_sweep(config: dict):
    known = {"family", "ladder", "delta_override", "expected_label"}
    extra = set(config) - known
    if extra:
        raise ConfigError(f"unknown sweep config keys: {sorted(extra)}")
    if "family" not in config:
        raise ConfigError("sweep config needs a 'family' table")
    family = _family_from_args(config["family"])
    return run_sweep(
        family,
        config.get("ladder"),
        delta_override=config.get("delta_override"),
        expected_label=config.get("expected_label"),
    )


def _print_sweep(result) -> None:
    expected = result.expected_label or "-"
    print(
        f"family={result.family.name} kind={result.family.kind} "
        f"classification={result.classification} expected={expected} "
        f"match={result.matches_expectation}"
    )
    for name, fit in sorted(result.fits.items()):
        print(f"fit {name} slope={fit.slope:.6f} stderr={fit.stderr:.6f} n={fit.n}")
    for rec in result.records:
        print(
            f"rung ell={rec.ell!r} case={rec.case} "
            f"half_length={rec.curve_half_length!r} deviation={rec.geodesic_deviation!r}"
        )


def _cmd_sweep(args) -> int:
    result = _run_one_sweep(_load_json(args.config))
    _print_sweep(result)
    if args.csv:
        write_records_csv(result.records, args.csv)
    if args.json:
        write_summary_json(result, args.json)
    if args.check and result.matches_expectation is False:
        return 1
    return 0


def _cmd_rates(args) -> int:
    config = _load_json(args.config)
    sweeps = config.get("sweeps")
    if not isinstance(sweeps, list) or not sweeps:
        raise ConfigError("rates config needs a non-empty 'sweeps' list")
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    failed = False
    for entry in sweeps:
        result = _run_one_sweep(entry)
        fit = result.fits.get("tension_l2")
        slope = "-" if fit is None else f"{fit.slope:.5f}"
        stderr = "-" if fit is None else f"{fit.stderr:.5f}"
        expected = result.expected_label or "-"
        print(
            f"{result.family.name}: slope={slope} stderr={stderr} "
            f"classification={result.classification} expected={expected}"
        )
        if result.matches_expectation is False:
            failed = True
        if out_dir:
            write_records_csv(result.records, out_dir / f"{result.family.name}.csv")
            write_summary_json(result, out_dir / f"{result.family.name}.json")
    if args.check and failed:
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collarlab",
        description="numerical laboratory for tension thresholds on degenerating necks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    geo = sub.add_parser("geometry", help="tabulate the conformal factor")
    group = geo.add_mutually_exclusive_group(required=True)
    group.add_argument("--ell", type=float, help="collar geodesic length")
    group.add_argument("--height", type=float, help="flat torus height")
    geo.add_argument("--twist", type=float, default=0.0)
    geo.add_argument("--h-s", type=float, default=0.1)
    geo.add_argument("--out", help="write the table here instead of stdout")
    geo.set_defaults(func=_cmd_geometry)

    def add_source_args(p, with_map=True):
        if with_map:
            p.add_argument("--map", help="saved map archive (.npz)")
        p.add_argument("--config", help="family config (JSON)")
        p.add_argument("--ell", type=float)
        p.add_argument("--height", type=float)

    build = sub.add_parser("build", help="build a family member and save it")
    add_source_args(build, with_map=False)
    build.set_defaults(map=None)
    build.add_argument("--out", required=True)
    build.set_defaults(func=_cmd_build)

    dec = sub.add_parser("decompose", help="neck decomposition of one map")
    add_source_args(dec)
    dec.add_argument("--delta", type=float, help="override the velocity floor")
    dec.add_argument("--json", help="write the decomposition here")
    dec.add_argument("--curve-csv", help="write the extracted curve table here")
    dec.set_defaults(func=_cmd_decompose)

    ver = sub.add_parser("verify-lemmas", help="run the inequality suite")
    ver.add_argument("--no-refine", action="store_true", help="skip the half-step pass")
    ver.add_argument("--json", help="write the check table here")
    ver.add_argument("--check", action="store_true", help="exit 1 if the suite fails")
    ver.set_defaults(func=_cmd_verify_lemmas)

    swp = sub.add_parser("sweep", help="run one family over a ladder")
    swp.add_argument("--config", required=True, help="sweep config (JSON)")
    swp.add_argument("--csv", help="write per-rung records here")
    swp.add_argument("--json", help="write the sweep summary here")
    swp.add_argument("--check", action="store_true", help="exit 1 on expectation mismatch")
    swp.set_defaults(func=_cmd_sweep)

    rates = sub.add_parser("rates", help="run several sweeps and report rates")
    rates.add_argument("--config", required=True, help="rates config (JSON)")
    rates.add_argument("--out-dir", help="write per-family csv/json here")
    rates.add_argument("--check", action="store_true", help="exit 1 on any mismatch")
    rates.set_defaults(func=_cmd_rates)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
