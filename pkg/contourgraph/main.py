"""
contourgraph command line.

    contourgraph generate --shape star5 --out star5.csv
    contourgraph generate --synthetic --out data/
    contourgraph perturb data/ --kind rotate --angle 35 --out rotated/
    contourgraph extract data/ --descriptor phi --n-thresholds 13 --out features.csv
    contourgraph classify features.csv --classifier knn:1 --repeats 100
    contourgraph run experiment.json --out results/

Every subcommand writes files (tidy CSV / JSON) and prints a short summary
on stdout. Failures print one JSON object on stderr,

    {"error": "DatasetError", "stage": null, "message": "..."}

and exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from contourgraph import __version__
from contourgraph.classify import cross_validate
from contourgraph.config import ExperimentConfig, config
from contourgraph.curvature import curvature_signal, normalize_signal
from contourgraph.datasets import (
    GEOMETRIC_CLASSES, load_dataset, read_features, read_shape_file, save_dataset, synthetic_dataset,
    write_contour_csv,
)
from contourgraph.errors import ContourGraphError, ExperimentError
from contourgraph.experiment import (
    DEFAULT_SWEEP_GRID, extract_dataset, interpolation_curves, interpolation_series, perturb_dataset,
    run_experiment, single_threshold_study, sweep_study, write_measurement_curves, write_study,
)
from contourgraph.exports import (
    Provenance, format_table, write_csv, write_curvature, write_features, write_profile, write_report,
)
from contourgraph.metrics import measure_all
from contourgraph.network import Mode, SweepPlan, build_weighted, default_thresholds, dump_edge_list, threshold
from contourgraph.shapes import (
    DEGRADATION_LEVELS, REFERENCE_SHAPES, Contour, PerturbSpec, ShapeSpec, degradation_fraction, generate_shape,
    interpolate, perturb, reference_shape,
)

logger = logging.getLogger("contourgraph")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _configure_logging(verbosity: int):
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, config.LOG_LEVEL)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)


def _seed(args) -> int:
    return args.seed if args.seed is not None else config.SEED


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else config.JOBS


# ============================================================
# SHARED ARGUMENT GROUPS
# ============================================================

def _add_plan_args(parser: argparse.ArgumentParser):
    parser.add_argument("--mode", choices=("lt", "gt"), default="lt", help="smaller_than (lt) or greater_than (gt)")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--thresholds", type=_float_list, help="explicit thresholds a,b,c (strictly increasing)")
    group.add_argument("--n-thresholds", type=int, default=13, help="equally spaced thresholds l/K (default 13)")


def _plan(args) -> SweepPlan:
    values = args.thresholds if args.thresholds else default_thresholds(args.n_thresholds)
    return SweepPlan(values, Mode.parse(args.mode))


def _add_cv_args(parser: argparse.ArgumentParser):
    parser.add_argument("--classifier", default="knn:1", help="knn:K or nb (default knn:1)")
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=100)
    parser.add_argument("--no-scale", action="store_true", help="skip min-max scaling of the features")


def _add_common_args(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=None, help="seed (default CONTOURGRAPH_SEED or 0)")
    parser.add_argument("--jobs", type=int, default=None, help="worker threads (default CONTOURGRAPH_JOBS or 1)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")


def _add_dataset_args(parser: argparse.ArgumentParser):
    parser.add_argument("input", nargs="?", help="dataset directory (omit with --synthetic)")
    parser.add_argument("--synthetic", action="store_true", help="use the generated geometric dataset")
    parser.add_argument("--n-per-class", type=int, default=25)
    parser.add_argument("--noise-level", type=int, default=1)
    parser.add_argument("--samples", type=int, default=120, help="points per generated contour")
    parser.add_argument("--skip-bad", action="store_true", help="skip unreadable files instead of aborting")


def _dataset(args) -> list[Contour]:
    if args.synthetic:
        return synthetic_dataset(args.n_per_class, args.noise_level, args.samples, seed=_seed(args))
    if not args.input:
        raise ExperimentError("load", "give a dataset directory or --synthetic")
    return load_dataset(args.input, skip_bad=args.skip_bad)


def _read_contour(source: str) -> Contour:
    """A contour file, a silhouette, or the name of a built-in shape."""
    path = Path(source)
    if path.is_file():
        return read_shape_file(path)
    if source in REFERENCE_SHAPES:
        return reference_shape(source)
    if source in GEOMETRIC_CLASSES:
        contour = generate_shape(GEOMETRIC_CLASSES[source])
        return Contour(contour.points, label=source, id=source)
    raise ExperimentError("load", f"{source}: no such file or built-in shape")


def _read_contours(source: str, skip_bad: bool = False) -> list[Contour]:
    if Path(source).is_dir():
        return load_dataset(source, skip_bad=skip_bad)
    return [_read_contour(source)]


def _emit(data: dict):
    print(json.dumps(data, sort_keys=True, indent=2))


# ============================================================
# SUBCOMMANDS
# ============================================================

def cmd_generate(args) -> int:
    provenance = Provenance.for_params(vars_for_hash(args), _seed(args))
    if args.synthetic:
        contours = synthetic_dataset(args.n_per_class, args.noise_level, args.samples, seed=_seed(args))
        written = save_dataset(args.out, contours, provenance)
        print(f"wrote {len(written)} contours in {len(GEOMETRIC_CLASSES)} classes to {args.out}")
        return 0
    if args.shape:
        contour = reference_shape(args.shape, args.samples) if args.shape in REFERENCE_SHAPES else None
        if contour is None:
            spec = GEOMETRIC_CLASSES.get(args.shape)
            if spec is None:
                raise ExperimentError("load", f"Unknown shape {args.shape!r}")
            contour = generate_shape(ShapeSpec(spec.kind, spec.n_sides_or_tips, args.samples,
                                               spec.inner_radius_ratio, radius=args.radius))
            contour = Contour(contour.points, label=args.shape, id=args.shape)
    else:
        spec = ShapeSpec(args.kind, args.sides, args.samples, args.inner_ratio, radius=args.radius)
        contour = Contour(generate_shape(spec).points, label=args.label)
    write_contour_csv(args.out, contour, provenance)
    print(f"wrote {len(contour)} points to {args.out}")
    return 0


def cmd_trace(args) -> int:
    contour = read_shape_file(args.image)
    contour = Contour(contour.points, label=args.label, id=contour.id)
    write_contour_csv(args.out, contour, Provenance.for_params(vars_for_hash(args)))
    print(f"traced {len(contour)} boundary points from {args.image}")
    return 0


def _perturb_spec(args) -> PerturbSpec:
    if args.level is not None:
        fraction = degradation_fraction(args.level)
    else:
        fraction = args.fraction
    return PerturbSpec(
        args.kind, angle_deg=args.angle, factor=args.factor, noise_level=args.noise_level,
        degrade_fraction=fraction,
    )


def cmd_perturb(args) -> int:
    spec = _perturb_spec(args)
    provenance = Provenance.for_params(vars_for_hash(args), _seed(args))
    if Path(args.input).is_dir():
        contours = perturb_dataset(load_dataset(args.input, skip_bad=args.skip_bad), spec, _seed(args))
        written = save_dataset(args.out, contours, provenance)
        print(f"{spec.tag}: wrote {len(written)} contours to {args.out}")
    else:
        contour = perturb(_read_contour(args.input), spec.with_seed(_seed(args)))
        write_contour_csv(args.out, contour, provenance)
        print(f"{spec.tag}: wrote {len(contour)} points to {args.out}")
    return 0


def cmd_interpolate(args) -> int:
    a, b = _read_contour(args.a), _read_contour(args.b)
    provenance = Provenance.for_params(vars_for_hash(args))
    if args.steps is None:
        contour = interpolate(a, b, args.alpha)
        write_contour_csv(args.out, contour, provenance)
        print(f"alpha={args.alpha}: wrote {len(contour)} points to {args.out}")
        return 0
    out = Path(args.out)
    for k, (alpha, contour) in enumerate(interpolation_series(a, b, args.steps)):
        write_contour_csv(out / f"interp_{k:03d}.csv", Contour(contour.points, id=f"alpha={alpha:g}"), provenance)
    rows = interpolation_curves(a, b, args.steps, _plan(args))
    write_csv(out / "curves.csv", ("alpha", "threshold", "cc", "l"), rows, provenance)
    print(f"wrote {args.steps + 1} contours and curves.csv to {out}")
    return 0


def cmd_extract(args) -> int:
    plan = _plan(args)
    contours = _read_contours(args.input, args.skip_bad)
    vectors = extract_dataset(contours, args.descriptor, plan, args.measurements, args.disconnected_distance,
                              _jobs(args))
    params = {"descriptor": args.descriptor, "plan": list(plan.thresholds), "mode": plan.mode.value,
              "measurements": args.measurements, "input": args.input}
    write_features(args.out, vectors, Provenance.for_params(params, _seed(args)), params)
    print(f"{len(vectors)} {args.descriptor} vectors of length {len(vectors[0])} -> {args.out}")
    return 0


def cmd_measure(args) -> int:
    contours = _read_contours(args.input)
    provenance = Provenance.for_params(vars_for_hash(args))
    if args.sweep:
        if not args.out:
            raise ExperimentError("write", "--sweep needs --out")
        write_measurement_curves(args.out, contours, _plan(args), provenance, args.disconnected_distance)
        print(f"measurement curves for {len(contours)} contour(s) -> {args.out}")
        return 0
    if args.threshold is None:
        raise ExperimentError("measure", "give --threshold or --sweep")
    if len(contours) != 1:
        raise ExperimentError("measure", "a single threshold measures one contour; use --sweep for datasets")
    contour = contours[0]
    graph = threshold(build_weighted(contour), args.threshold, args.mode)
    measured, profile = measure_all(graph, args.disconnected_distance)
    if args.profile:
        write_profile(args.profile, profile, provenance)
    if args.edges:
        dump_edge_list(graph, args.edges)
    _emit({"edges": graph.edge_count, "n": graph.n, **measured.to_dict()})
    return 0


def cmd_curvature(args) -> int:
    contour = _read_contour(args.input)
    signal = curvature_signal(contour, args.sigma)
    if args.normalize:
        signal = normalize_signal(signal)
    provenance = Provenance.for_params(vars_for_hash(args))
    if args.threshold is not None:
        graph = threshold(build_weighted(contour), args.threshold, args.mode)
        _, profile = measure_all(graph)
        write_profile(args.out, profile, provenance, curvature=signal)
    else:
        write_curvature(args.out, signal, provenance)
    print(f"curvature of {len(signal)} points (sigma={signal.sigma:g}) -> {args.out}")
    return 0


def cmd_classify(args) -> int:
    data = read_features(args.features)
    seed = _seed(args)
    report = cross_validate(data, args.classifier, args.folds, args.repeats, seed, not args.no_scale, _jobs(args))
    provenance = Provenance.for_params({"features": str(args.features), "classifier": args.classifier,
                                        "folds": args.folds, "repeats": args.repeats, "scale": not args.no_scale},
                                       seed)
    if args.out:
        write_report(args.out, report, provenance, name=Path(args.features).stem)
    print(format_table([(Path(args.features).stem, report)]), end="")
    return 0


def cmd_sweep_study(args) -> int:
    contours = _dataset(args)
    rows = sweep_study(
        contours, args.grid, args.descriptors, [Mode.parse(m) for m in args.modes], args.classifier, args.folds,
        args.repeats, _seed(args), not args.no_scale, _jobs(args),
    )
    _, table = write_study(args.out, "sweep_study", rows, Provenance.for_params(vars_for_hash(args), _seed(args)))
    print(table.read_text(encoding="utf-8"), end="")
    return 0


def cmd_single_threshold_study(args) -> int:
    contours = _dataset(args)
    rows = single_threshold_study(
        contours, args.n_thresholds, args.descriptor, args.mode, args.classifier, args.folds, args.repeats,
        _seed(args), not args.no_scale, _jobs(args),
    )
    provenance = Provenance.for_params(vars_for_hash(args), _seed(args))
    _, table = write_study(args.out, "single_threshold_study", rows, provenance)
    print(table.read_text(encoding="utf-8"), end="")
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config, default_seed=config.SEED)
    cfg = cfg.with_overrides(seed=args.seed, jobs=_jobs(args))
    out = Path(args.out) if args.out else config.OUT_DIR / cfg.name
    result = run_experiment(cfg, out)
    print(result.summary.read_text(encoding="utf-8"), end="")
    return 0


def vars_for_hash(args) -> dict:
    """Arguments that shape a command's output (parsing plumbing removed)."""
    skip = {"func", "verbose", "jobs", "command"}
    return {key: value for key, value in vars(args).items() if key not in skip}


# ============================================================
# PARSER
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contourgraph",
        description="Shape descriptors from thresholded proximity networks over contour points.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample an ideal shape or the synthetic geometric dataset")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--shape", help=f"built-in shape: {', '.join(sorted({*REFERENCE_SHAPES, *GEOMETRIC_CLASSES}))}")
    source.add_argument("--synthetic", action="store_true", help="write the jittered geometric dataset")
    p.add_argument("--kind", choices=("circle", "regular_polygon", "star"), default="circle")
    p.add_argument("--sides", type=int, default=4, help="polygon sides or star tips")
    p.add_argument("--inner-ratio", type=float, default=0.5, help="star inner/outer radius")
    p.add_argument("--radius", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=120)
    p.add_argument("--label")
    p.add_argument("--n-per-class", type=int, default=25)
    p.add_argument("--noise-level", type=int, default=1)
    p.add_argument("--out", required=True, help="contour CSV, or directory with --synthetic")
    _add_common_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("trace", help="trace the boundary of a PBM/PGM silhouette")
    p.add_argument("image")
    p.add_argument("--label")
    p.add_argument("--out", required=True)
    _add_common_args(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("perturb", help="rotate, scale, add noise or degrade a contour or dataset")
    p.add_argument("input", help="contour file, built-in shape or dataset directory")
    p.add_argument("--kind", required=True,
                   choices=("rotate", "scale", "noise", "degrade_continuous", "degrade_random"))
    p.add_argument("--angle", type=float, default=0.0, help="degrees")
    p.add_argument("--factor", type=float, default=1.0)
    p.add_argument("--noise-level", type=int, default=0)
    degrade = p.add_mutually_exclusive_group()
    degrade.add_argument("--fraction", type=float, default=0.0, help="fraction of points removed")
    degrade.add_argument("--level", type=int, help=f"degradation level 0..{DEGRADATION_LEVELS} (fraction level/34)")
    p.add_argument("--skip-bad", action="store_true")
    p.add_argument("--out", required=True)
    _add_common_args(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("interpolate", help="blend two contours")
    p.add_argument("a")
    p.add_argument("b")
    steps = p.add_mutually_exclusive_group(required=True)
    steps.add_argument("--alpha", type=float)
    steps.add_argument("--steps", type=int, help="write the whole series plus curves.csv")
    _add_plan_args(p)
    p.add_argument("--out", required=True, help="contour CSV, or directory with --steps")
    _add_common_args(p)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("extract", help="descriptor of every contour")
    p.add_argument("input", help="dataset directory, contour file or built-in shape")
    p.add_argument("--descriptor", choices=("phi", "varphi"), default="phi")
    p.add_argument("--measurements", type=_name_list, default=None, help="subset for phi, e.g. k,cc,l")
    p.add_argument("--disconnected-distance", type=int, default=None)
    p.add_argument("--skip-bad", action="store_true")
    _add_plan_args(p)
    p.add_argument("--out", required=True)
    _add_common_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("measure", help="structural measurements at one threshold or over a sweep")
    p.add_argument("input")
    p.add_argument("--threshold", type=float)
    p.add_argument("--sweep", action="store_true", help="write the measurement curves CSV")
    p.add_argument("--profile", help="per-node CSV node,k,cc,b,k2,k3")
    p.add_argument("--edges", help="edge list of the thresholded graph")
    p.add_argument("--disconnected-distance", type=int, default=None)
    _add_plan_args(p)
    p.add_argument("--out")
    _add_common_args(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("curvature", help="Fourier curvature of a contour")
    p.add_argument("input")
    p.add_argument("--sigma", type=float, default=None, help="Gaussian width in spectral bins (default N/64)")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--threshold", type=float, help="join the per-node profile at this threshold")
    p.add_argument("--mode", choices=("lt", "gt"), default="lt")
    p.add_argument("--out", required=True)
    _add_common_args(p)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("classify", help="repeated cross-validation on a feature file")
    p.add_argument("features")
    _add_cv_args(p)
    p.add_argument("--out", help="report stem (writes .json and .txt)")
    _add_common_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep-study", help="accuracy for several sweep sizes, descriptors and modes")
    _add_dataset_args(p)
    p.add_argument("--grid", type=_int_list, default=DEFAULT_SWEEP_GRID, help="n_T values (default 13,10,7,4)")
    p.add_argument("--descriptors", type=_name_list, default=("phi", "varphi"))
    p.add_argument("--modes", type=_name_list, default=("lt",), help="lt, gt or lt,gt")
    _add_cv_args(p)
    p.add_argument("--out", required=True)
    _add_common_args(p)
    p.set_defaults(func=cmd_sweep_study)

    p = sub.add_parser("single-threshold-study", help="accuracy of each threshold on its own")
    _add_dataset_args(p)
    p.add_argument("--n-thresholds", type=int, default=13)
    p.add_argument("--descriptor", choices=("phi", "varphi"), default="phi")
    p.add_argument("--mode", choices=("lt", "gt"), default="lt")
    _add_cv_args(p)
    p.add_argument("--out", required=True)
    _add_common_args(p)
    p.set_defaults(func=cmd_single_threshold_study)

    p = sub.add_parser("run", help="run an experiment config end to end")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default CONTOURGRAPH_OUT/<name>)")
    _add_common_args(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except ContourGraphError as e:
        stage = e.stage if isinstance(e, ExperimentError) else None
        message = e.message if isinstance(e, ExperimentError) else str(e)
        error = {"error": type(e).__name__, "stage": stage, "message": message}
        print(json.dumps(error), file=sys.stderr)
        logger.debug("[main] failure", exc_info=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
