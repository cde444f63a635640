"""
Command-line surface of fairalloc.

Exit codes: 0 success, 1 usage error, 2 data error, 3 offline solver
non-convergence.
"""
from typing import List, Optional

import click
from pydantic import ValidationError

from src.models.experiment import ExperimentConfig, TraceSpec
from src.models.families import FAMILY_KINDS, make_family
from src.utils.csv_packager import metrics_csv, table_csv
from src.utils.errors import ConvergenceError, DataError
from src.utils.logger import setup_logger
from src.workflows import experiment

logger = setup_logger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CONVERGENCE = 3


class CommaList(click.ParamType):
    """Comma-separated list of values of one item type, e.g. 0,0.25,0.5."""
    name = "list"

    def __init__(self, item):
        self.item = click.types.convert_type(item)

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        items = [self.item.convert(v.strip(), param, ctx) for v in str(value).split(",") if v.strip()]
        if not items:
            self.fail("empty list", param, ctx)
        return items


ALPHAS = CommaList(click.FloatRange(0.0, 1.0, max_open=True))
# the lower-bound ratio is undefined at alpha = 0
OPEN_ALPHAS = CommaList(click.FloatRange(0.0, 1.0, min_open=True, max_open=True))
INTS = CommaList(int)


class FairAllocGroup(click.Group):
    """Group that maps domain errors onto the documented exit codes."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise
        except ConvergenceError as e:
            logger.error("offline solver did not converge", gap=e.gap, iterations=e.iterations)
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_CONVERGENCE)
        except ValidationError as e:
            click.echo(f"error: invalid configuration: {e}", err=True)
            ctx.exit(EXIT_DATA)
        except DataError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_DATA)


def parse_gen(gen: str, T: int) -> TraceSpec:
    """
    Trace spec from a --gen value: zipf:s, lb:eta:instance, uniform or uniform:delta.

    Raises:
        click.BadParameter: If the value does not follow one of these forms
    """
    parts = gen.split(":")
    try:
        if parts[0] == "zipf" and len(parts) == 2:
            return TraceSpec(kind="zipf_cache", T=T, s=float(parts[1]))
        if parts[0] == "lb" and len(parts) == 3:
            return TraceSpec(kind="lower_bound", T=T, eta=float(parts[1]), instance=int(parts[2]))
        if parts[0] == "uniform" and len(parts) <= 2:
            delta = float(parts[1]) if len(parts) == 2 else 1.0
            return TraceSpec(kind="iid_uniform", T=T, delta=delta)
    except (ValueError, ValidationError) as e:
        raise click.BadParameter(f"{gen!r}: {e}", param_hint="--gen") from e
    raise click.BadParameter(f"{gen!r}; expected zipf:s, lb:eta:inst or uniform[:delta]", param_hint="--gen")


def family_options(f):
    f = click.option("--m", "m", type=int, default=4, show_default=True, help="Number of agents")(f)
    f = click.option("--k", "k", type=int, default=5, show_default=True, help="Cache capacity")(f)
    f = click.option("--N", "n_items", type=int, default=50, show_default=True, help="Library size")(f)
    f = click.option("--family", type=click.Choice(FAMILY_KINDS), default="cache", show_default=True)(f)
    return f


def experiment_options(f):
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output path")(f)
    f = click.option("--step-scale", type=float, default=None, help="Multiplier on D / sqrt(S)")(f)
    f = click.option("--seed", "seeds", type=INTS, default="0", show_default=True)(f)
    f = click.option("--mode", type=click.Choice(["frac", "int"]), default="frac", show_default=True)(f)
    f = click.option("--gen", default=None, help="zipf:s | lb:eta:inst | uniform[:delta]")(f)
    f = click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None)(f)
    f = family_options(f)
    f = click.option("--T", "horizons", type=INTS, required=True, help="Checkpoints, ascending")(f)
    f = click.option("--alpha", "alphas", type=ALPHAS, required=True, help="Fairness exponents in [0, 1)")(f)
    return f


def build_config(alphas: List[float], horizons: List[int], family: str, n_items: int, k: int, m: int,
                 trace_path: Optional[str], gen: Optional[str], mode: str, seeds: List[int],
                 step_scale: Optional[float], out: Optional[str]) -> ExperimentConfig:
    """
    ExperimentConfig from command-line values.

    Raises:
        click.UsageError: If neither or both of --trace and --gen are given
        DataError: If the family parameters are invalid
        ValidationError: If the remaining values are invalid
    """
    if (trace_path is None) == (gen is None):
        raise click.UsageError("give exactly one of --trace and --gen")
    spec = TraceSpec(kind="file", path=trace_path) if trace_path else parse_gen(gen, max(horizons))
    return ExperimentConfig(
        trace=spec,
        family=make_family(family, N=n_items, k=k, m=m),
        alphas=alphas,
        horizons=horizons,
        mode="integral" if mode == "int" else "fractional",
        step_scale=step_scale,
        seeds=seeds,
        out=out,
    )


@click.group(cls=FairAllocGroup)
def cli():
    """Online alpha-fair allocation experiments."""


@cli.command()
@experiment_options
def simulate(**options):
    """Run OPF and report metrics at every checkpoint."""
    config = build_config(**options)
    rows = experiment.run_experiment(config)
    if config.out is None:
        click.echo(metrics_csv(rows, config.family.n_agents), nl=False)


@cli.command()
@experiment_options
def offline(**options):
    """Offline optimum of each trace prefix."""
    config = build_config(**options)
    text = table_csv(experiment.offline_table(config), config.out)
    if config.out is None:
        click.echo(text, nl=False)


@cli.command("phase-scan")
@experiment_options
@click.option("--metrics-out", type=click.Path(dir_okay=False), default=None, help="Also write per-cell metrics")
def phase_scan(metrics_out, **options):
    """Fit the surrogate-regret growth exponent for every alpha."""
    config = build_config(**options)
    phases, rows = experiment.phase_scan(config)
    if metrics_out:
        metrics_csv(rows, config.family.n_agents, metrics_out)
    text = table_csv(phases, config.out)
    if config.out is None:
        click.echo(text, nl=False)


@cli.command("lb-curve")
@click.option("--alpha", "alphas", type=OPEN_ALPHAS, default=None,
              help="Values in (0, 1); defaults to 0.05, 0.10, ..., 0.95")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def lb_curve(alphas, out):
    """Lower bound on the approximation factor next to c_alpha."""
    text = table_csv(experiment.lb_curve_rows(alphas), out)
    if out is None:
        click.echo(text, nl=False)


@cli.command("sample-test")
@family_options
@click.option("--draws", type=int, default=100_000, show_default=True)
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def sample_test(family, n_items, k, m, draws, trials, seed, out):
    """Inclusion frequencies of the integral samplers against their targets."""
    if draws < 1 or trials < 1:
        raise click.UsageError("--draws and --trials must be positive")
    fam = make_family(family, N=n_items, k=k, m=m)
    rows = experiment.sample_audit(fam, n_draws=draws, trials=trials, seed=seed)
    _report_failures(rows, "sample")
    text = table_csv(rows, out)
    if out is None:
        click.echo(text, nl=False)


@cli.command("project-test")
@family_options
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--n-feasible", type=int, default=500, show_default=True)
@click.option("--grid-step", type=float, default=None,
              help="Grid-oracle resolution; 1e-3 by default for caches with N <= 3")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def project_test(family, n_items, k, m, trials, n_feasible, grid_step, seed, out):
    """Projection checks against the variational inequality and a grid oracle."""
    if trials < 1 or n_feasible < 1:
        raise click.UsageError("--trials and --n-feasible must be positive")
    fam = make_family(family, N=n_items, k=k, m=m)
    if grid_step is None and fam.kind == "cache" and fam.N <= 3:
        grid_step = 1e-3
    rows = experiment.projection_audit(fam, trials=trials, n_feasible=n_feasible, seed=seed, grid_step=grid_step)
    _report_failures(rows, "projection")
    text = table_csv(rows, out)
    if out is None:
        click.echo(text, nl=False)


def _report_failures(rows, what: str) -> None:
    failed = sum(not r.ok for r in rows)
    if failed:
        logger.warning(f"{what} audit has failing rows", failed=failed, total=len(rows))
        click.echo(f"warning: {failed} of {len(rows)} {what} checks failed", err=True)


def main(argv: Optional[List[str]] = None) -> None:
    cli.main(args=argv, prog_name="fairalloc")
