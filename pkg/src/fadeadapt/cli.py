"""Command-line front end: ``fadeadapt <subcommand> ...``.

All angles in the output are degrees.  JSON goes to stdout unless ``--out``
is given; CSV outputs always need ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path


from .adaptation import build_policy
from .constellation import mpsk
from .errors import FadeAdaptError, InsufficientRangeError
from .geometry import enumerate_classes, enumerate_singular
from .linksim import JOINT, PER_USER, SimConfig, curves_for, interpolate_gain, write_curve_csv, write_manifest
from .quantizer import (
    GridSpec,
    extend_to_full_plane,
    feedback_bits,
    quantization_map,
    violation_circles,
    write_circles_json,
    write_raster_csv,
)


class CliError(Exception):
    pass


def parse_snr(spec: str) -> tuple[float, ...]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    try:
        if ":" in spec:
            start, step, stop = (float(x) for x in spec.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(n))
        return tuple(float(x) for x in spec.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR spec {spec!r}; use start:step:stop or a,b,c") from None


def _state_dict(s) -> dict:
    return {
        "gamma": s.location.gamma,
        "theta_deg": s.location.theta_deg,
        "delta_s2": s.delta_s2,
        "minimal_class": s.minimal_class.index,
        "vanishing_classes": [k.index for k in s.vanishing_classes],
    }


def _emit(doc, out) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        _write(Path(out), text)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror}") from None


def cmd_singular(args) -> None:
    ss = enumerate_singular(mpsk(args.m))
    _emit(
        {
            "M": args.m,
            "n_nonzero": len(ss.nonzero),
            "n_wedge": ss.n_wedge,
            "zero": _state_dict(ss.zero),
            "nonzero": [_state_dict(s) for s in ss.nonzero],
            "wedge": [_state_dict(s) for s in ss.wedge],
        },
        args.out,
    )


def cmd_classes(args) -> None:
    rows = [
        {
            "index": k.index,
            "representative": list(k.representative),
            "size": len(k.members),
            "A": k.A,
            "B": k.B,
            "R": k.R,
            "psi_deg": math.degrees(k.psi),
            "members": [list(p) for p in k.members],
        }
        for k in enumerate_classes(mpsk(args.m))
    ]
    if args.format == "json":
        _emit({"M": args.m, "classes": rows}, args.out)
        return
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["index", "rep_i", "rep_j", "size", "A", "B", "R", "psi_deg"])
    for r in rows:
        w.writerow([r["index"], *r["representative"], r["size"], f"{r['A']:.12g}", f"{r['B']:.12g}", f"{r['R']:.12g}", f"{r['psi_deg']:.10g}"])
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    else:
        _write(Path(args.out), buf.getvalue())


def _check_delta(m: int, delta: float, force: bool) -> None:
    bound = build_policy(mpsk(m)).delta_max
    if delta > bound and not force:
        raise CliError(f"delta={delta:g} exceeds delta_max={bound:.6g} for M={m}; pass --force to override")


def cmd_quantize(args) -> None:
    if args.out is None:
        raise CliError("quantize needs --out PREFIX")
    c = mpsk(args.m)
    raster = quantization_map(c, GridSpec(args.gamma_max, args.n_gamma, args.n_theta))
    if args.full_plane:
        raster = extend_to_full_plane(raster)
    prefix = Path(args.out)
    if args.delta is not None:
        _check_delta(args.m, args.delta, args.force)
    try:
        write_raster_csv(raster, prefix.with_suffix(".csv"))
        if args.delta is not None:
            write_circles_json(violation_circles(c, args.delta), prefix.with_suffix(".circles.json"))
    except OSError as e:
        raise CliError(f"cannot write under {prefix}: {e.strerror}") from None


def cmd_policy(args) -> None:
    policy = build_policy(mpsk(args.m))
    doc = policy.to_dict()
    doc["feedback_bits"] = feedback_bits(policy.n_wedge)
    _emit(doc, args.out)


def cmd_deltamax(args) -> None:
    policy = build_policy(mpsk(args.m))

    def term(t):
        return {
            "circle": t.circle,
            "singular_gamma": abs(t.z),
            "singular_theta_deg": math.degrees(math.atan2(t.z.imag, t.z.real)),
            "distance": t.distance,
            "bound": t.bound,
        }

    _emit(
        {
            "M": args.m,
            "delta_max": policy.delta_max,
            "attaining": [term(t) for t in policy.bound.attaining],
            "per_circle": [term(t) for t in policy.bound.per_circle],
        },
        args.out,
    )


def cmd_simulate(args) -> None:
    if args.out is None:
        raise CliError("simulate needs --out DIR")
    _check_delta(args.m, args.delta, args.force)
    cfg = SimConfig(
        M=args.m,
        delta=args.delta,
        snr_db=args.snr,
        trials_per_snr=args.trials,
        seed=args.seed,
        error_metric=args.metric,
        force=args.force,
    )
    outdir = Path(args.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create {outdir}: {e.strerror}") from None
    adaptive, baseline = curves_for(cfg, [cfg.delta, 0.0], workers=args.workers)
    gains = {}
    for t in args.target:
        try:
            gains[f"{t:g}"] = interpolate_gain(adaptive, baseline, t)
        except InsufficientRangeError as e:
            gains[f"{t:g}"] = None
            print(f"warning: {e}", file=sys.stderr)
    tag = f"{cfg.error_metric}"
    try:
        write_curve_csv(adaptive, outdir / f"adaptive_delta{cfg.delta:g}_{tag}.csv")
        write_curve_csv(baseline, outdir / f"baseline_delta0_{tag}.csv")
        write_manifest(cfg, outdir / "manifest.json", {"gain_db": gains})
    except OSError as e:
        raise CliError(f"cannot write under {outdir}: {e.strerror}") from None
    _emit({"gain_db": gains, "out": str(outdir)}, None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fadeadapt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--m", type=int, default=4, help="PSK order (power of two)")
        sp.add_argument("--out", help="output path (stdout for JSON if omitted)")

    sp = sub.add_parser("singular", help="singular fade states")
    common(sp)
    sp.set_defaults(func=cmd_singular)

    sp = sub.add_parser("classes", help="distance classes")
    common(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.set_defaults(func=cmd_classes)

    sp = sub.add_parser("quantize", help="argmin-class raster over the wedge")
    common(sp)
    sp.add_argument("--gamma-max", type=float, default=4.0)
    sp.add_argument("--n-gamma", type=int, default=600)
    sp.add_argument("--n-theta", type=int, default=600)
    sp.add_argument("--full-plane", action="store_true", help="unfold the wedge over all angles")
    sp.add_argument("--delta", type=float, help="also write violation circles for this delta")
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_quantize)

    sp = sub.add_parser("policy", help="optimal rotation per violation circle")
    common(sp)
    sp.set_defaults(func=cmd_policy)

    sp = sub.add_parser("deltamax", help="upper bound on the distance guarantee")
    common(sp)
    sp.set_defaults(func=cmd_deltamax)

    sp = sub.add_parser("simulate", help="Monte Carlo SER sweep, adaptive vs baseline")
    common(sp)
    sp.add_argument("--delta", type=float, default=0.35)
    sp.add_argument("--snr", type=parse_snr, default=parse_snr("0:2:24"), help="start:step:stop in dB")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--metric", choices=(JOINT, PER_USER), default=JOINT)
    sp.add_argument("--target", type=float, nargs="+", default=[1e-3], help="SER targets for the gain")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--force", action="store_true", help="allow delta above delta_max")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        mpsk(args.m)
        args.func(args)
    except (CliError, FadeAdaptError) as e:
        print(f"fadeadapt: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
