"""eqlab Experiment Runner CLI

Features:
- Static 2D and 3D equilibrium counts
- Curve-shortening and Eikonal co-evolution
- Evolute crossing logs
- Random-mesh, flock-scaling and rate-profile harnesses
- Ellipsoid caustic sweeps
- Rich terminal output
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from . import __version__
from .artifacts import RunDirectory
from .config import DEFAULT_N, ExperimentConfig, resolve_workers
from .curve_core import GraphArc, SmoothCurve, equilibrium_counts, global_equilibria
from .discretize import (
    LocalEquilibriumSet,
    Polygonization,
    count_local,
    flocks,
    monte_carlo_random_mesh,
    partition,
)
from .errors import ConfigError, EqlabError, NongenericConfigurationError
from .events import detect_crossings, event_counts, polygon_evolute, reconstruct_N
from .flock_analysis import case_setup, delta_ladder, flock_scaling, rate_profile, rate_times
from .flows import DEFAULT_FLOW_N, CoEvolutionSeries, FlowState, run_flow
from .meshes import solid_centroid
from .presets import mesh_from_spec, shape_from_spec
from .surface3d import (
    DEFAULT_CHART_N,
    caustic_sweep,
    classify_equilibria,
    flock_near,
    principal_spread,
    umbilic_direction,
)

console = Console()
logger = logging.getLogger("eqlab")

PERTURB_STEP = 1e-6
PERTURB_TRIES = 8
FLOCK_RADIUS = 0.2
FLAG_NAMES = {"o_start": "--from", "o_end": "--to", "out_dir": "--out", "direction": "--dir"}

Summary = Dict[str, Any]


def vector(text: str) -> Tuple[float, ...]:
    """Parse a comma-separated vector such as '1,0,0'.

    Args:
        text: Comma-separated numbers.

    Returns:
        The numbers as a tuple of floats.

    Raises:
        argparse.ArgumentTypeError: If a component is not a number.
    """
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def direction(text: str) -> Any:
    """Parse a sweep direction: 'umbilic' or a comma-separated 3-vector.

    Raises:
        argparse.ArgumentTypeError: If the vector does not have 3 components.
    """
    if text == "umbilic":
        return text
    v = vector(text)
    if len(v) != 3:
        raise argparse.ArgumentTypeError("direction needs 3 components")
    return v


def unit_offset(text: str) -> float:
    """Parse a mesh offset in [0, 1).

    Raises:
        argparse.ArgumentTypeError: If the value is outside [0, 1).
    """
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError("offset must lie in [0, 1)")
    return value


def positive_int(text: str) -> int:
    """Parse a strictly positive integer.

    Raises:
        argparse.ArgumentTypeError: If the value is not positive.
    """
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqlab",
        description="Equilibria of convex shapes and their discretizations",
    )
    parser.add_argument("-d", "--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable info logging")
    parser.add_argument("--version", action="version", version=f"eqlab {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with ExperimentConfig fields")
    common.add_argument("--threads", type=positive_int, help="Worker cap (default $EQLAB_THREADS, then CPU count)")
    common.add_argument("--seed", type=int, help="Base seed for randomized experiments")
    common.add_argument("--out", dest="out_dir", help="Artifact directory, or a .csv path for the main table")

    subparsers = parser.add_subparsers(dest="command")

    p = subparsers.add_parser("equilibria", parents=[common], help="Static equilibrium counts")
    p.add_argument("--shape", help="ellipse:a,b | circle:R | sevenfold | fourfold | curve.json")
    p.add_argument("--mesh", help="ellipsoid:a,b,c[:freq] | mesh.off | mesh.obj")
    p.add_argument("--n", type=positive_int, help="Polygon segments")
    p.add_argument("--offset", type=unit_offset, help="Mesh offset in [0, 1)")
    p.add_argument("--perturb-offset", action="store_true", default=None, help="Nudge nongeneric offsets")

    p = subparsers.add_parser("flow", parents=[common], help="Co-evolve N and N^Delta under a flow")
    p.add_argument("--kind", choices=["csf", "eikonal"])
    p.add_argument("--shape")
    p.add_argument("--steps", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--c", type=float, help="Curve-shortening coefficient")
    p.add_argument("--n", type=positive_int, help="Flow polygon vertices (default 512)")
    p.add_argument("--mesh-n", type=positive_int, help="Polygon vertices for N^Delta")

    p = subparsers.add_parser("events", parents=[common], help="Evolute crossings along a segment")
    p.add_argument("--shape")
    p.add_argument("--from", dest="o_start", type=vector, help="Start point x,y")
    p.add_argument("--to", dest="o_end", type=vector, help="End point x,y")
    p.add_argument("--steps", type=int, help="Time grid intervals")
    p.add_argument("--n", type=positive_int, help="Polygon segments for the arrangement check")
    p.add_argument("--offset", type=unit_offset)
    p.add_argument("--perturb-offset", action="store_true", default=None)

    p = subparsers.add_parser("random-mesh", parents=[common], help="Random-mesh expectation check")
    p.add_argument("--kappa-rho", type=float)
    p.add_argument("--n", type=positive_int, help="Points per random chain")
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=positive_int)
    p.add_argument("--exponent", choices=["n-1", "n"])

    p = subparsers.add_parser("flock-scaling", parents=[common], help="Flock size against mesh step")
    p.add_argument("--case", choices=["i", "ii", "iii", "iv"])
    p.add_argument("--delta0", type=float)
    p.add_argument("--rungs", type=positive_int)
    p.add_argument("--offsets", type=positive_int)

    p = subparsers.add_parser("rate-profile", parents=[common], help="Divergence rate of N0 near the evolute")
    p.add_argument("--case", choices=["i", "ii", "iii", "iv"])
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--points", type=positive_int)

    p = subparsers.add_parser("caustic-sweep", parents=[common], help="Move o through a mesh")
    p.add_argument("--mesh")
    p.add_argument("--dir", dest="direction", type=direction, help="x,y,z or 'umbilic'")
    p.add_argument("--tmax", type=float)
    p.add_argument("--steps", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge CLI flags over the optional JSON config."""
    skip = {"command", "config", "debug", "verbose"}
    flags = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    flags["experiment"] = args.command
    if args.config:
        return ExperimentConfig.from_json(args.config, **flags)
    return ExperimentConfig.from_dict(flags)


def _setup_logging(debug: bool, verbose: bool) -> None:
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=debug)],
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Parse arguments, run one experiment and write its artifacts."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.debug, args.verbose)
    if args.command is None:
        parser.print_help()
        return
    try:
        config = config_from_args(args)
        run(config)
    except EqlabError as e:
        _print_error(e)
        sys.exit(1)


def run(config: ExperimentConfig) -> Summary:
    """Execute the configured experiment, write artifacts and the manifest.

    Returns:
        The summary document also written to summary.json.
    """
    start = time.perf_counter()
    target = Path(config.out_dir)
    if target.suffix.lower() == ".csv":
        out = RunDirectory(target.parent, primary=target.name)
    else:
        out = RunDirectory(target)
    summary = EXPERIMENT_RUNNERS[config.experiment](config, out)
    out.json("summary.json", summary)
    out.manifest(config.to_dict(), __version__, time.perf_counter() - start)
    _print_summary(config.experiment, summary)
    return summary


def _count_polygon(
    curve: SmoothCurve, o: np.ndarray, n: int, offset: float, perturb: bool
) -> Tuple[Polygonization, LocalEquilibriumSet]:
    attempt = 0
    while True:
        poly = partition(curve, n, offset)
        try:
            return poly, count_local(poly, o)
        except NongenericConfigurationError:
            attempt += 1
            if not perturb or attempt >= PERTURB_TRIES:
                raise
            offset = (offset + PERTURB_STEP) % 1.0
            logger.warning("nongeneric mesh, offset moved to %.9f", offset)


def run_equilibria(config: ExperimentConfig, out: RunDirectory) -> Summary:
    if config.mesh is not None:
        mesh, surface = mesh_from_spec(config.mesh)
        o = solid_centroid(mesh)
        eqs = classify_equilibria(mesh, o)
        out.primary_csv("equilibria.csv", eqs.rows(), ["feature_type", "index", "x", "y", "z", "stability"])
        out.snapshot("equilibria", mesh, eqs.sidecar())
        summary: Summary = {
            "S_delta": eqs.S,
            "U_delta": eqs.U,
            "H_delta": eqs.H,
            "N_delta": eqs.N,
            "index": eqs.index,
            "o": o.tolist(),
        }
        if surface is not None:
            s, u, h = surface.chart_counts(o)
            summary.update({"S": s, "U": u, "H": h})
        return summary

    assert config.shape is not None
    curve = shape_from_spec(config.shape)
    o = curve.centroid()
    smooth = global_equilibria(curve, o)
    s, u = equilibrium_counts(smooth)
    poly, eqs = _count_polygon(curve, o, config.n or DEFAULT_N, config.offset, config.perturb_offset)
    found = flocks(eqs, poly)
    out.primary_csv("equilibria.csv", eqs.rows(poly), ["feature_type", "index", "x", "y", "stability"])
    out.csv(
        "smooth.csv",
        [
            {"tau": e.tau, "x": e.position[0], "y": e.position[1], "stability": e.stability.value,
             "rho": e.rho, "kappa": e.kappa, "order": e.order}
            for e in smooth
        ],
        ["tau", "x", "y", "stability", "rho", "kappa", "order"],
    )
    return {
        "S": s,
        "U": u,
        "N": len(smooth),
        "S_delta": eqs.S,
        "U_delta": eqs.U,
        "N_delta": eqs.N,
        "flocks": len(found),
        "offset": poly.offset,
        "o": o.tolist(),
    }


def _flow_events(series: CoEvolutionSeries) -> List[Dict[str, Any]]:
    return [{"t": r.t, "kind": r.event, "N": r.N} for r in series.records if r.event != "-"]


def run_flow_experiment(config: ExperimentConfig, out: RunDirectory) -> Summary:
    assert config.shape is not None and config.seed is not None
    curve = shape_from_spec(config.shape)
    state = FlowState.from_curve(curve, config.n or DEFAULT_FLOW_N, config.c)
    series = run_flow(config.kind, state, config.dt, config.steps, config.mesh_n, config.seed)
    out.primary_csv("series.csv", series.rows(), CoEvolutionSeries.COLUMNS)
    out.jsonl("events.jsonl", _flow_events(series))
    spikes = series.spikes()
    return {
        "kind": config.kind,
        "events": series.event_counts(),
        "stop_reason": series.stop_reason,
        "records": len(series),
        "N_initial": int(series.records[0].N),
        "N_final": int(series.records[-1].N),
        "spikes": [float(series.records[i].t) for i in spikes],
        "forecast": series.forecasts(),
    }


def run_events(config: ExperimentConfig, out: RunDirectory) -> Summary:
    assert config.shape is not None
    if config.o_start is None or config.o_end is None:
        raise ConfigError("events needs --from and --to", field="o_start" if config.o_start is None else "o_end")
    curve = shape_from_spec(config.shape)
    q0, q1 = np.asarray(config.o_start, dtype=float), np.asarray(config.o_end, dtype=float)

    def path(t: float) -> np.ndarray:
        return q0 + t * (q1 - q0)

    grid = np.linspace(0.0, 1.0, max(config.steps, 1) + 1)
    events = detect_crossings(curve, path, grid)
    n0 = len(global_equilibria(curve, q0))
    n_t = reconstruct_N(n0, events)
    n_end = len(global_equilibria(curve, q1))
    if n_t.final != n_end:
        logger.warning("reconstructed N=%d differs from direct count %d", n_t.final, n_end)
    out.jsonl("events.jsonl", [e.to_dict() for e in events])
    c, a = event_counts(events)

    poly, start = _count_polygon(curve, q0, config.n or DEFAULT_N, config.offset, config.perturb_offset)
    end = count_local(poly, q1)
    predicted = polygon_evolute(poly).predict_change(q0, q1)
    return {
        "N_start": n0,
        "N_end": n_end,
        "N_reconstructed": n_t.final,
        "creations": c,
        "annihilations": a,
        "polygon_change": end.N - start.N,
        "polygon_predicted": predicted,
    }


def run_random_mesh(config: ExperimentConfig, out: RunDirectory) -> Summary:
    assert config.seed is not None
    half = max(4.0 * config.delta, 0.1)
    curve = GraphArc.parabola(1.0, config.kappa_rho, half_width=half)
    result = monte_carlo_random_mesh(
        curve, (0.0, 0.0), config.n or DEFAULT_N, config.delta, config.trials, config.seed,
        workers=resolve_workers(config.threads),
    )
    lam = abs(1.0 + config.kappa_rho)
    comparison = result.compare(lam)
    matching = [k for k, v in comparison.items() if v["matches"]]
    if not matching:
        logger.warning("no exponent variant within 3 standard errors")
    return {
        **result.to_dict(),
        "lambda": lam,
        "variants": comparison,
        "primary": config.exponent,
        "matching": matching,
    }


def run_flock_scaling(config: ExperimentConfig, out: RunDirectory) -> Summary:
    assert config.seed is not None
    arc, _ = case_setup(config.case)
    report = flock_scaling(
        arc, (0.0, 0.0), 0.0, delta_ladder(config.delta0, config.rungs),
        config.offsets, config.seed, workers=resolve_workers(config.threads),
    )
    out.primary_csv("scaling.csv", report.rows(), ["delta", "count", "stderr", "diameter"])
    out.json("scaling.json", report.to_dict())
    return {
        "k": report.k,
        "count_slope": report.count_fit.slope,
        "count_r2": report.count_fit.r2,
        "diameter_slope": report.diameter_fit.slope if report.diameter_fit else None,
        "expected_count_slope": report.expected_count_slope,
        "expected_diameter_slope": report.expected_diameter_slope,
        "monotone": report.monotone,
    }


def run_rate_profile(config: ExperimentConfig, out: RunDirectory) -> Summary:
    arc, d = case_setup(config.case)
    profile = rate_profile(arc, d, config.case, rate_times(config.t_min, config.t_max, config.points))
    out.primary_csv("rate_profile.csv", profile.rows(), ["t", "n0", "n0_negative"])
    out.json("rate_profile.json", profile.to_dict())
    return {
        "case": profile.case.value,
        "slope": profile.fit.slope,
        "expected": profile.expected,
        "r2": profile.fit.r2,
        "matched": list(profile.matched),
    }


def run_caustic_sweep(config: ExperimentConfig, out: RunDirectory) -> Summary:
    assert config.mesh is not None
    mesh, surface = mesh_from_spec(config.mesh)
    if config.direction == "umbilic":
        if surface is None:
            raise ConfigError("umbilic direction needs an ellipsoid preset", field="direction")
        d = umbilic_direction(surface.a, surface.b, surface.c)
    else:
        d = np.asarray(config.direction or (1.0, 0.0, 0.0), dtype=float)
    times = np.linspace(0.0, config.tmax, max(config.steps, 1) + 1)
    series = caustic_sweep(mesh, d, times, surface, DEFAULT_CHART_N, keep=True)
    columns = ["t", "N_delta", "S", "U", "H", "N", "S_global", "U_global", "H_global"]
    out.primary_csv("sweep.csv", series.rows(), columns)
    hit = surface.point(d) if surface is not None else None
    peaks: List[Dict[str, Any]] = []
    for i in series.peaks():
        rec = series.records[i]
        entry: Dict[str, Any] = {"t": rec.t, "N_delta": rec.N_delta}
        if rec.equilibria is not None:
            out.snapshot(f"flock_{i:04d}", mesh, rec.equilibria.sidecar())
            if hit is not None:
                members = flock_near(rec.equilibria, hit, FLOCK_RADIUS)
                entry["flock_size"] = len(members)
                if len(members) > 1:
                    entry["spread"] = principal_spread(members).tolist()
        peaks.append(entry)
    globals_n = [r.N for r in series.records if r.N is not None]
    return {
        "direction": list(series.direction),
        "steps": len(series.records),
        "peaks": peaks,
        "N_change": (globals_n[-1] - globals_n[0]) if globals_n else None,
        "index_ok": all(r.S + r.U - r.H == 2 for r in series.records),
    }


EXPERIMENT_RUNNERS: Dict[str, Callable[[ExperimentConfig, RunDirectory], Summary]] = {
    "equilibria": run_equilibria,
    "flow": run_flow_experiment,
    "events": run_events,
    "random-mesh": run_random_mesh,
    "flock-scaling": run_flock_scaling,
    "rate-profile": run_rate_profile,
    "caustic-sweep": run_caustic_sweep,
}


def _print_summary(experiment: str, summary: Summary) -> None:
    table = Table(title=experiment, show_header=False)
    for key in sorted(summary):
        table.add_row(f"[bold cyan]{key}[/]", str(summary[key]))
    console.print(table)


def _print_error(e: EqlabError) -> None:
    console.print(f"[bold red]{type(e).__name__}[/]: {escape(str(e))}", highlight=False)
    field = getattr(e, "field", None)
    if field and field != "experiment":
        flag = FLAG_NAMES.get(field, "--" + field.replace("_", "-"))
        console.print(f"  set [bold cyan]{flag}[/] or the config key '{field}'")
    cause = e.__cause__ or e.__context__
    while cause is not None:
        console.print(f"  caused by [purple]{type(cause).__name__}[/]: {escape(str(cause))}", highlight=False)
        cause = cause.__cause__ or cause.__context__


if __name__ == "__main__":
    main()
