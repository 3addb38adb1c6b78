"""CLI commands for so3spline."""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

import typer
from loguru import logger
from rich.console import Console

app = typer.Typer(
    name="so3spline",
    help="Surface-spline interpolation, smoothing and approximation on the rotation group SO(3).",
    no_args_is_help=True,
)
console = Console(stderr=True)

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}"


def _get_data_dir() -> Path:
    """Get the so3spline data directory."""
    return Path.home() / ".so3spline"


def _get_config_path() -> Path:
    return _get_data_dir() / "config.yaml"


def _setup(config: Optional[str], log_level: Optional[str]):
    """Load config, install the stderr log sink and configure tracing."""
    import yaml

    from so3spline.config.schema import So3SplineConfig
    from so3spline.errors import InvalidArgumentError, ParseError
    from so3spline.observability import configure_tracer

    config_path = Path(config) if config else _get_config_path()
    try:
        cfg = So3SplineConfig.load(config_path)
    except yaml.YAMLError as exc:
        raise ParseError(f"Config file {config_path} is not valid YAML: {exc}") from exc
    level = (log_level or cfg.logging.level).upper()
    logger.remove()
    try:
        logger.add(sys.stderr, level=level, format=LOG_FORMAT)
    except ValueError as exc:
        logger.add(sys.stderr, level=cfg.logging.level, format=LOG_FORMAT)
        raise InvalidArgumentError(f"Unknown log level: {level}") from exc
    configure_tracer(
        cfg.observability.service_name,
        cfg.observability.otlp_endpoint,
        enabled=cfg.observability.enabled,
    )
    return cfg


@contextmanager
def _command(name: str, config: Optional[str], log_level: Optional[str]) -> Iterator[object]:
    """Run a command body, mapping library errors onto exit codes."""
    from pydantic import ValidationError

    from so3spline.errors import EXIT_VALIDATION, So3SplineError
    from so3spline.observability import get_tracer, trace_stage

    try:
        cfg = _setup(config, log_level)
        with trace_stage(f"cli.{name}"):
            yield cfg
    except So3SplineError as exc:
        console.print(f"[red]{type(exc).__name__}:[/] {exc}")
        raise typer.Exit(exc.exit_code)
    except ValidationError as exc:
        console.print(f"[red]Invalid configuration:[/] {exc}")
        raise typer.Exit(EXIT_VALIDATION)
    finally:
        get_tracer().shutdown()


def _emit(text: str, out: Optional[str]) -> None:
    """Write to ``out`` or to stdout."""
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        console.print(f"[green]✓[/] Wrote {path}")
    else:
        typer.echo(text, nl=False)


def _seed(cfg, seed: Optional[int]) -> int:
    return cfg.seed if seed is None else seed


def _test_function(descriptor: str, seed: int):
    """character:l, random:n or constant:c as Fourier coefficients."""
    from so3spline.errors import InvalidArgumentError
    from so3spline.wigner.transform import FourierCoefficients

    kind, _, arg = descriptor.partition(":")
    try:
        if kind == "character":
            return FourierCoefficients.character(int(arg))
        if kind == "random":
            return FourierCoefficients.random(int(arg), seed=seed, real=True)
        if kind == "constant":
            return FourierCoefficients.character(0) * float(arg)
    except ValueError as exc:
        raise InvalidArgumentError(f"Bad test function argument in {descriptor!r}") from exc
    raise InvalidArgumentError(
        f"Unknown test function: {descriptor}. Supported: character:l, random:n, constant:c"
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@app.command()
def coeffs(
    m: Optional[int] = typer.Option(None, "--m", help="Kernel order m >= 2 (default from config)."),
    lmax: int = typer.Option(..., "--lmax", help="Largest degree l."),
    out: Optional[str] = typer.Option(None, "-o", "--out", help="CSV file (default: stdout)."),
    config: Optional[str] = typer.Option(None, "-c", "--config", help="Path to config file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (unused, accepted everywhere)."),
):
    """Print the character coefficients k~_m(l), l = 0..lmax, as CSV."""
    with _command("coeffs", config, log_level) as cfg:
        from so3spline.errors import InvalidArgumentError
        from so3spline.formats.tables import coeffs_csv

        if lmax < 0:
            raise InvalidArgumentError(f"--lmax must be non-negative, got {lmax}")
        _emit(coeffs_csv(m if m is not None else cfg.kernel.order, lmax), out)


@app.command()
def fit(
    data: str = typer.Option(..., "-d", "--data", help="Dataset JSON with values."),
    out: str = typer.Option(..., "-o", "--out", help="Model JSON to write."),
    m: Optional[int] = typer.Option(None, "--m", help="Kernel order m >= 2 (default from config)."),
    lam: Optional[float] = typer.Option(None, "--lambda", help="Tikhonov parameter lambda > 0."),
    lsq: bool = typer.Option(False, "--lsq", help="Least-squares projection onto S_Xi."),
    centers: Optional[str] = typer.Option(None, "--centers", help="Center dataset for --lsq."),
    n_centers: Optional[int] = typer.Option(
        None, "--n-centers", help="Farthest-point subset size for --lsq without --centers."
    ),
    config: Optional[str] = typer.Option(None, "-c", "--config", help="Path to config file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (unused by fitting)."),
):
    """Fit a spline model: interpolation (default), Tikhonov (--lambda) or least squares (--lsq)."""
    with _command("fit", config, log_level) as cfg:
        from so3spline.errors import InvalidArgumentError
        from so3spline.fit.solvers import interpolate, least_squares_fit, tikhonov_fit
        from so3spline.formats.dataset import load_dataset
        from so3spline.formats.model_file import save_model
        from so3spline.rotations.pointsets import farthest_point_subset
        from so3spline.rotations.quadrature import QuadratureRule
        from so3spline.wigner.dfunctions import basis_size

        if lam is not None and lsq:
            raise InvalidArgumentError("--lambda and --lsq are mutually exclusive")
        if centers is not None and not lsq:
            raise InvalidArgumentError("--centers only applies to --lsq")
        order = m if m is not None else cfg.kernel.order
        dataset = load_dataset(data, duplicate_tolerance=cfg.geometry.duplicate_tolerance)
        limits = dict(
            condition_limit=cfg.fit.condition_limit, rank_tolerance=cfg.fit.rank_tolerance
        )

        if lsq:
            if centers is not None:
                center_points = load_dataset(centers, require_values=False).matrices
            else:
                count = n_centers or max(
                    basis_size(order - 2) + 1, int(cfg.fit.lsq_center_fraction * len(dataset))
                )
                count = min(count, len(dataset))
                center_points = dataset.matrices[farthest_point_subset(dataset.matrices, count)]
            rule = QuadratureRule.from_samples(dataset.matrices)
            model = least_squares_fit(center_points, dataset.values, order, rule=rule, **limits)
            kind = f"least squares on {len(center_points)} centers"
        elif lam is not None:
            model = tikhonov_fit(
                dataset.matrices,
                dataset.values,
                order,
                lam,
                orientation=cfg.fit.tikhonov_orientation,
                **limits,
            )
            kind = f"Tikhonov (lambda={lam:g})"
        else:
            model = interpolate(dataset.matrices, dataset.values, order, **limits)
            kind = "interpolation"

        save_model(model, out)
        console.print(f"[green]✓[/] Fitted m={order} {kind} on {len(dataset)} records → {out}")


@app.command(name="eval")
def eval_cmd(
    model: str = typer.Option(..., "--model", help="Model JSON written by fit."),
    points: str = typer.Option(..., "--points", help="Dataset JSON of evaluation rotations."),
    out: Optional[str] = typer.Option(None, "-o", "--out", help="Values JSON (default: stdout)."),
    config: Optional[str] = typer.Option(None, "-c", "--config", help="Path to config file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (unused by evaluation)."),
):
    """Evaluate a saved model at the rotations of a dataset file."""
    with _command("eval", config, log_level):
        from so3spline.fit.model import evaluate_model
        from so3spline.formats.dataset import load_dataset
        from so3spline.formats.model_file import load_model
        from so3spline.formats.tables import values_document, write_values

        spline = load_model(model)
        dataset = load_dataset(points, require_values=False)
        values = evaluate_model(spline, dataset.matrices)
        if out:
            write_values(values, out)
            console.print(f"[green]✓[/] Wrote {len(dataset)} values → {out}")
        else:
            _emit(json.dumps(values_document(values), indent=2) + "\n", None)


@app.command()
def validate(
    data: str = typer.Option(..., "-d", "--data", help="Dataset JSON of centers."),
    precision: int = typer.Option(..., "--L", help="Polynomial precision L."),
    rho: Optional[float] = typer.Option(None, "--rho", help="Localization radius (default: calibrated)."),
    probes: Optional[int] = typer.Option(None, "--probes", help="Number of Haar probes."),
    out: Optional[str] = typer.Option(None, "-o", "--out", help="Report JSON (default: stdout)."),
    config: Optional[str] = typer.Option(None, "-c", "--config", help="Path to config file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed for probes."),
):
    """Check the coefficient-kernel conditions on a center set and report them as JSON."""
    with _command("validate", config, log_level) as cfg:
        from so3spline.formats.dataset import load_dataset
        from so3spline.formats.tables import ckc_document, write_ckc_report
        from so3spline.localize.coefficients import (
            CoefficientKernel,
            RadiusRule,
            calibrate_radius,
            verify_ckc,
        )
        from so3spline.rotations.pointsets import point_set_stats

        s = _seed(cfg, seed)
        loc = cfg.localize
        probe_count = probes if probes is not None else loc.probe_count
        dataset = load_dataset(
            data, require_values=False, duplicate_tolerance=cfg.geometry.duplicate_tolerance
        )
        ps = point_set_stats(
            dataset.matrices,
            probe_count=cfg.geometry.probe_factor * len(dataset),
            seed=s,
            refine=cfg.geometry.refine_probes,
            duplicate_tolerance=cfg.geometry.duplicate_tolerance,
        )
        if rho is None:
            if loc.radius_constant is not None:
                rule = RadiusRule(loc.radius_constant, precision)
            else:
                rule = calibrate_radius(
                    ps, precision, loc.radius_candidates, probe_count, s, loc.rank_cutoff
                )
            rho = rule.radius(ps.fill)
        report = verify_ckc(CoefficientKernel(ps, precision, rho, loc.rank_cutoff), probe_count, s)
        if not report.feasible:
            console.print(
                f"[yellow]CKC violated at {report.density_failures}/{report.probe_count} probes[/]"
            )
        if out:
            write_ckc_report(report, out, ps)
            console.print(f"[green]✓[/] Wrote CKC report → {out}")
        else:
            _emit(json.dumps(ckc_document(report, ps), indent=2) + "\n", None)


@app.command()
def convergence(
    m: Optional[int] = typer.Option(None, "--m", help="Kernel order m >= 2 (default from config)."),
    precision: Optional[int] = typer.Option(None, "--L", help="Polynomial precision L."),
    levels: Optional[int] = typer.Option(None, "--levels", help="Number of nested levels."),
    function: Optional[str] = typer.Option(
        None, "--function", help="Test function: character:l, random:n or constant:c."
    ),
    method: str = typer.Option("approximant", "--method", help="approximant or interpolant."),
    out: Optional[str] = typer.Option(None, "-o", "--out", help="CSV file (default: stdout)."),
    json_out: Optional[str] = typer.Option(None, "--json", help="Also write rows and orders as JSON."),
    config: Optional[str] = typer.Option(None, "-c", "--config", help="Path to config file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed for levels and probes."),
):
    """Measure sup and L2 errors over nested quasi-uniform levels."""
    with _command("convergence", config, log_level) as cfg:
        from so3spline.formats.tables import convergence_csv, convergence_document, write_convergence
        from so3spline.localize.approximant import convergence_study
        from so3spline.localize.coefficients import RadiusRule

        s = _seed(cfg, seed)
        conv, loc = cfg.convergence, cfg.localize
        L = precision if precision is not None else loc.precision
        f = _test_function(function or conv.test_function, s)
        table = convergence_study(
            m if m is not None else cfg.kernel.order,
            L,
            f,
            levels if levels is not None else conv.levels,
            seed=s,
            method=method,
            radius_rule=(
                RadiusRule(loc.radius_constant, L) if loc.radius_constant is not None else None
            ),
            radius_candidates=loc.radius_candidates,
            probe_count=conv.probe_count,
            base_count=conv.base_count,
            growth=conv.growth,
            quadrature_degree=conv.quadrature_degree,
            workers=loc.workers,
            rank_cutoff=loc.rank_cutoff,
            chunk_size=loc.chunk_size,
            max_refinements=conv.max_refinements,
        )
        if out:
            write_convergence(table, out, json_out)
            console.print(f"[green]✓[/] Wrote {len(table.rows)} levels → {out}")
        else:
            _emit(convergence_csv(table), None)
            if json_out:
                _emit(json.dumps(convergence_document(table), indent=2) + "\n", json_out)
        console.print(
            f"[bold]Fitted orders:[/] sup {table.order_sup:.3f}, L2 {table.order_l2:.3f}, "
            f"local {table.order_local:.3f}"
        )
        if method == "approximant" and not table.localized:
            console.print("[yellow]Some levels used global support (rho = pi)[/]")


@app.command()
def sample(
    count: int = typer.Option(..., "-n", "--count", help="Number of rotations."),
    out: str = typer.Option(..., "-o", "--out", help="Dataset JSON to write."),
    mode: str = typer.Option("quasi_uniform", "--mode", help="uniform or quasi_uniform."),
    function: Optional[str] = typer.Option(
        None, "--function", help="Values: character:l, random:n or constant:c (default: none)."
    ),
    noise: float = typer.Option(0.0, "--noise", help="Standard deviation of Gaussian noise."),
    encoding: str = typer.Option("quaternion", "--encoding", help="quaternion, euler or matrix."),
    config: Optional[str] = typer.Option(None, "-c", "--config", help="Path to config file."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed for points and noise."),
):
    """Sample rotations (optionally with test-function values) into a dataset file."""
    with _command("sample", config, log_level) as cfg:
        import numpy as np

        from so3spline.errors import InvalidArgumentError
        from so3spline.formats.dataset import Dataset, save_dataset
        from so3spline.rotations.pointsets import sample_points
        from so3spline.wigner.transform import fourier_synthesize

        s = _seed(cfg, seed)
        if noise < 0:
            raise InvalidArgumentError(f"--noise must be non-negative, got {noise}")
        geo = cfg.geometry
        ps = sample_points(
            count,
            mode=mode,
            seed=s,
            probe_count=geo.probe_factor * count,
            pool_factor=geo.pool_factor,
            max_mesh_ratio=geo.max_mesh_ratio,
        )
        values = None
        if function is not None:
            values = np.real(fourier_synthesize(_test_function(function, s), ps.matrices))
            if noise > 0:
                values = values + noise * np.random.default_rng([s, 1]).standard_normal(count)
        save_dataset(Dataset(ps.matrices, values), out, encoding=encoding)
        console.print(
            f"[green]✓[/] Sampled {count} rotations (h={ps.fill:.4g}, ratio={ps.mesh_ratio:.3g}) → {out}"
        )


if __name__ == "__main__":
    app()
