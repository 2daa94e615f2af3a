import argparse
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from .analysis import (
    error_decomposition,
    excursion_report,
    inverse_lipschitz_estimate,
    levels_for,
    occupation_time,
    step_count_for,
    strong_error,
)
from .brownian import sample_brownian
from .config import (
    COMMANDS,
    REFERENCES,
    SCHEMES,
    ExperimentConfig,
    batch_size,
    load_config,
    load_environment,
    memoize_alpha,
    parse_deltas,
    resolve_problem,
    thread_count,
)
from .errors import ArgumentError, ConfigError, ModelError, NumericError
from .exporters import (
    ConvergenceCSVExporter,
    DecompositionCSVExporter,
    ExcursionCSVExporter,
    OccupationCSVExporter,
    PathCSVExporter,
    TransformGridCSVExporter,
    TransformSidecarExporter,
)
from .models.problem import SdeProblem
from .solvers import Scheme, solve
from .transform import Transform, build_transform

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_NUMERIC = 4

SIDECAR_PAIRS = 500


def parse_arguments(argv: Optional[List[str]] = None):
    """Parse command-line arguments.

    Returns:
        Parsed arguments.
    """
    parser = argparse.ArgumentParser(
        description='Simulate SDEs with discontinuous drift and measure strong convergence.'
    )
    parser.add_argument('command', nargs='?', choices=COMMANDS, help='Experiment to run')
    parser.add_argument('--config', help='Experiment file with key = value lines')
    parser.add_argument('--problem', help='Built-in problem name (circle2d, step1d, gbm1d)')
    parser.add_argument('--scheme', choices=SCHEMES, help='Scheme to run (default: gm)')
    parser.add_argument('--deltas', help='Step sizes, e.g. 2^-6..2^-12')
    parser.add_argument('--delta', help='Single step size, e.g. 2^-10')
    parser.add_argument('--paths', type=int, help='Number of Monte Carlo paths')
    parser.add_argument('--seed', type=int, help='Master seed of the Brownian paths')
    parser.add_argument('--ref-levels', type=int, help='Level of the reference grid (step T*2^-L)')
    parser.add_argument('--reference', choices=REFERENCES, help='Reference solution for convergence')
    parser.add_argument('--eps', help='Comma-separated band widths or excursion thresholds')
    parser.add_argument('--grid', type=int, help='Grid points per axis for dump-transform')
    parser.add_argument('--batch-size', type=int, help='Paths simulated together')
    parser.add_argument('--initial', help='Comma-separated initial value override')
    parser.add_argument('--horizon', type=float, help='Time horizon override')
    parser.add_argument('--surface', help='Surface override, e.g. sphere(0,0;1)')
    parser.add_argument('-o', '--out', help='Output directory (default: current directory)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Enable verbose logging')
    return parser.parse_args(argv)


def _float_list(text: Optional[str]):
    if text is None:
        return None
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"Expected comma-separated numbers, got '{text}'")


def build_config(args) -> ExperimentConfig:
    """Merge the optional config file with command-line overrides."""
    base = load_config(args.config) if args.config else ExperimentConfig()
    delta = None
    if args.delta is not None:
        single = parse_deltas(args.delta)
        if len(single) != 1:
            raise ConfigError(f"--delta takes a single step size, got '{args.delta}'")
        delta = single[0]
    return base.with_overrides(
        command=args.command,
        problem=args.problem,
        scheme=args.scheme,
        deltas=parse_deltas(args.deltas) if args.deltas else None,
        delta=delta,
        paths=args.paths,
        seed=args.seed,
        ref_levels=args.ref_levels,
        reference=args.reference,
        eps=_float_list(args.eps),
        grid=args.grid,
        batch_size=args.batch_size,
        initial=_float_list(args.initial),
        horizon=args.horizon,
        surface=args.surface,
        out=args.out,
    )


def _require(config: ExperimentConfig, name: str):
    value = getattr(config, name)
    if value is None or value == ():
        raise ConfigError(f"'{config.command}' needs --{name.replace('_', '-')}")
    return value


def _schemes(config: ExperimentConfig) -> List[Scheme]:
    return [Scheme.EM, Scheme.GM] if config.scheme == "both" else [Scheme(config.scheme)]


def _output(config: ExperimentConfig, scheme: str) -> Path:
    return Path(config.out) / f"{config.problem}_{config.command}_{scheme}.csv"


def _write_sidecar(config: ExperimentConfig, problem: SdeProblem, transform: Transform) -> Path:
    info = {"problem": problem.name}
    info.update(transform.summary())
    info["inverse_lipschitz"] = inverse_lipschitz_estimate(transform, SIDECAR_PAIRS, config.seed)
    path = Path(config.out) / f"{problem.name}.transform.txt"
    TransformSidecarExporter().export(info, str(path))
    return path


def _simulate(config, problem, transform, workers, batch) -> List[Path]:
    steps = step_count_for(problem, _require(config, "delta"))
    grid = sample_brownian(config.seed, problem.dim, problem.horizon, levels_for(steps))
    written = []
    for scheme in _schemes(config):
        output = solve(scheme, problem, grid, steps, transform)
        data = {
            "times": output.times,
            "path": output.path[:, 0],
            "in_band": None if output.in_band is None else output.in_band[:, 0],
        }
        path = _output(config, scheme.value)
        PathCSVExporter().export(data, str(path))
        written.append(path)
    return written


def _convergence(config, problem, transform, workers, batch) -> List[Path]:
    deltas = _require(config, "deltas")
    written = []
    for scheme in _schemes(config):
        report = strong_error(
            problem,
            scheme,
            deltas,
            config.paths,
            config.seed,
            config.ref_levels,
            reference=config.reference,
            transform=transform,
            batch_size=batch,
            workers=workers,
        )
        path = _output(config, scheme.value)
        ConvergenceCSVExporter().export(report.to_dict(), str(path))
        print(f"{scheme.value.upper()} fitted order on {problem.name}: {report.fitted_order}")
        written.append(path)
    return written


def _occupation(config, problem, transform, workers, batch) -> List[Path]:
    report = occupation_time(
        problem, _require(config, "delta"), _require(config, "eps"), config.paths, config.seed, batch, workers
    )
    path = _output(config, Scheme.EM.value)
    OccupationCSVExporter().export(report.to_dict(), str(path))
    print(f"Occupation ratios on {problem.name}: {report.ratios}")
    return [path]


def _excursion(config, problem, transform, workers, batch) -> List[Path]:
    report = excursion_report(
        problem, _require(config, "delta"), _require(config, "eps"), config.paths, config.seed, batch, workers
    )
    path = _output(config, Scheme.EM.value)
    ExcursionCSVExporter().export(report.to_dict(), str(path))
    return [path]


def _decomposition(config, problem, transform, workers, batch) -> List[Path]:
    report = error_decomposition(
        problem, _require(config, "deltas"), config.paths, config.seed, config.ref_levels, transform, batch, workers
    )
    path = _output(config, Scheme.EM.value)
    DecompositionCSVExporter().export(report.to_dict(), str(path))
    return [path]


def transform_grid(transform: Transform, points_per_axis: int) -> dict:
    """Evaluate ``G`` and ``det DG`` on a regular grid over the band of the transform."""
    if transform.is_identity:
        raise ArgumentError("The problem has no exceptional set; its transform is the identity")
    low, high = transform.surface.bounding_box(2.0 * transform.c)
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(low, high)]
    points = np.stack([axis.reshape(-1) for axis in np.meshgrid(*axes, indexing="ij")], axis=1)
    jacobian = transform.jacobian(points, side=transform.surface.side(points))
    return {"x": points, "g": transform.forward(points), "det_jacobian": np.linalg.det(jacobian)}


def _dump_transform(config, problem, transform, workers, batch) -> List[Path]:
    data = transform_grid(transform, config.grid)
    path = Path(config.out) / f"{problem.name}_transform_grid.csv"
    TransformGridCSVExporter().export(data, str(path))
    print(f"Minimum det DG on the grid: {float(np.min(data['det_jacobian'])):.6g}")
    return [path]


COMMAND_HANDLERS = {
    'simulate': _simulate,
    'convergence': _convergence,
    'occupation': _occupation,
    'excursion': _excursion,
    'decomposition': _decomposition,
    'dump-transform': _dump_transform,
}


def run(config: ExperimentConfig) -> List[Path]:
    """Execute one experiment and return the files it wrote.

    Builds the transform when the problem has an exceptional set and
    records it in ``<problem>.transform.txt`` next to the results.

    Raises:
        ConfigError: For missing or invalid settings.
        ModelError: If the problem violates an assumption of the transform.
        NumericError: If a simulation or inversion fails.
    """
    problem = resolve_problem(config)
    workers = thread_count()
    batch = config.batch_size or batch_size()
    logger.info(f"Running {config.command} on {problem.name} with {workers} worker(s)")

    transform = build_transform(problem, seed=config.seed, memoize=memoize_alpha())
    written = []
    if not transform.is_identity:
        written.append(_write_sidecar(config, problem, transform))
    written.extend(COMMAND_HANDLERS[config.command](config, problem, transform, workers, batch))
    return written


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the command-line interface."""
    try:
        args = parse_arguments(argv)

        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)

        load_environment()
        config = build_config(args)
        logger.info(f"Starting pwsde {config.command}")

        for path in run(config):
            print(f"✓ Wrote {path}")

    except (ConfigError, ArgumentError) as e:
        logger.error(f"Configuration error: {e}")
        print(f"✗ Invalid configuration: {e}", flush=True)
        return EXIT_CONFIG
    except ModelError as e:
        logger.error(f"Model assumption violated: {e}")
        print(f"✗ Model assumption violated: {e}", flush=True)
        return EXIT_MODEL
    except NumericError as e:
        logger.error(f"Numeric failure: {e}")
        print(f"✗ Numeric failure: {e}", flush=True)
        return EXIT_NUMERIC
    except OSError as e:
        logger.error(f"File I/O error: {e}")
        print(f"✗ File write failed: {e}", flush=True)
        return EXIT_NUMERIC
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        print(f"✗ Unexpected error: {e}", flush=True)
        return EXIT_UNEXPECTED

    return EXIT_OK


if __name__ == "__main__":
    exit(main())
