"""CLI interface for minefair."""

from __future__ import annotations

import functools
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import click

from .config import (
    MineFairConfig,
    get_config_value,
    load_config_file,
    load_model_file,
    parse_seeds,
    resolve_config,
    set_config_value,
    GLOBAL_CONFIG_PATH,
    PROJECT_CONFIG_PATH,
)
from .fairness import ConvergenceError
from .model import ModelConfig, ModelError, TieBreakRule, default_ten_miner_config
from .report import error_payload
from .simulator import SimulationError

# -- CLI param name → dotted config key mapping --
_PARAM_MAP = {
    "epsilon": "calc.epsilon",
    "max_iter": "calc.max_iter",
    "rounds": "simulation.rounds",
    "trim": "simulation.trim_heights",
    "window": "simulation.window",
    "seeds": "harness.seeds",
    "workers": "harness.workers",
    "resample_delays": "harness.resample_delays",
    "fmt": "output.format",
}

_HANDLED = (
    ModelError, ConvergenceError, SimulationError, ValueError, KeyError, OSError, ArithmeticError,
)


def _build_cli_overrides(**kwargs) -> dict:
    """Map flat CLI params to a nested config override dict.

    Only non-None values are included (None means "not set by user").
    """
    result: dict = {}
    for param, dotted_key in _PARAM_MAP.items():
        val = kwargs.get(param)
        if val is None:
            continue
        section, field = dotted_key.split(".")
        result.setdefault(section, {})[field] = val
    return result


def _fail(exc: BaseException) -> None:
    click.echo(error_payload(exc), err=True)
    sys.exit(1)


def _reports_errors(f):
    """Turn expected failures into a JSON error object on stderr and exit 1."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except _HANDLED as e:
            _fail(e)

    return wrapper


def _load_model(config_path: str | None, rule: str | None) -> ModelConfig:
    """The model file at *config_path*, or the ten-miner default."""
    model = load_model_file(config_path) if config_path else default_ten_miner_config()
    if rule:
        model = model.with_rule(rule)
    return model


def _emit(text: str, out: str | None) -> None:
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _seed_list(text: str | None) -> list[int] | None:
    return parse_seeds(text) if text else None


def _float_list(text: str) -> list[float]:
    values = [float(x) for x in text.split(",") if x.strip()]
    if not values:
        raise ValueError(f"No values in {text!r}")
    return values


_RULE_CHOICE = click.Choice([r.value for r in TieBreakRule])


# -- Common CLI options --

def _model_options(f):
    """Options that pick the network model."""
    f = click.option("--config", "-c", "config_path", default=None, type=click.Path(dir_okay=False),
                     help="Model file (.json or .toml). Defaults to the ten-miner network.")(f)
    f = click.option("--rule", "-r", default=None, type=_RULE_CHOICE, help="Override the tie-break rule.")(f)
    return f


def _output_options(f):
    f = click.option("--out", "-o", default=None, type=click.Path(dir_okay=False), help="Write output to a file.")(f)
    f = click.option("--format", "-f", "fmt", default=None, type=click.Choice(["json", "csv"]), help="Output format.")(f)
    return f


def _calc_options(f):
    f = click.option("--epsilon", default=None, type=float, help="Convergence threshold.")(f)
    f = click.option("--max-iter", default=None, type=int, help="Iteration cap.")(f)
    return f


def _sim_options(f):
    f = click.option("--rounds", "-n", default=None, type=int, help="Counted rounds per run.")(f)
    f = click.option("--trim", default=None, type=int, help="Heights simulated past the last counted round.")(f)
    f = click.option("--window", default=None, type=int, help="Retention window in heights.")(f)
    return f


def _harness_options(f):
    f = click.option("--seeds", "-s", default=None, help="Seeds, e.g. 1-10 or 1,2,5.")(f)
    f = click.option("--workers", "-w", default=None, type=int, help="Parallel processes.")(f)
    f = click.option("--fixed-delays", is_flag=True, help="Do not resample exponential delays per seed.")(f)
    return f


def _compare_kwargs(cfg: MineFairConfig) -> dict:
    return {
        "max_iter": cfg.calc.max_iter,
        "resample_delays": cfg.harness.resample_delays,
        "trim_heights": cfg.simulation.trim_heights,
        "window": cfg.simulation.window,
        "workers": cfg.harness.workers,
    }


@click.group()
@click.version_option(package_name="minefair")
@click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """minefair: mining fairness of proof-of-work networks."""
    if verbose:
        logging.basicConfig(
            level=logging.INFO, stream=sys.stderr,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )


@cli.command()
@_model_options
@_calc_options
@_output_options
@_reports_errors
def calc(
    config_path: str | None,
    rule: str | None,
    epsilon: float | None,
    max_iter: int | None,
    fmt: str | None,
    out: str | None,
) -> None:
    """Model-based fairness: round start rates, reward rates, LF1/LF2, GF1/GF2."""
    from .fairness import model_fairness
    from .report import render_fairness

    cfg = resolve_config(_build_cli_overrides(epsilon=epsilon, max_iter=max_iter, fmt=fmt))
    model = _load_model(config_path, rule).build()
    report = model_fairness(model, cfg.calc.epsilon, cfg.calc.max_iter)
    _emit(render_fairness(report, cfg.output.format), out)


@cli.command()
@_model_options
@_output_options
@_reports_errors
def baseline(config_path: str | None, rule: str | None, fmt: str | None, out: str | None) -> None:
    """Fairness assuming round start rates equal hashrates."""
    from .fairness import baseline_fairness
    from .report import render_fairness

    cfg = resolve_config(_build_cli_overrides(fmt=fmt))
    model = _load_model(config_path, rule).build()
    _emit(render_fairness(baseline_fairness(model), cfg.output.format), out)


@cli.command()
@_model_options
@_sim_options
@click.option("--seed", default=None, type=int, help="Simulation seed (default: first configured seed).")
@click.option("--histogram", default=None, type=click.Path(dir_okay=False),
              help="Also write the round-scale histogram as CSV to this file.")
@_output_options
@_reports_errors
def simulate(
    config_path: str | None,
    rule: str | None,
    rounds: int | None,
    trim: int | None,
    window: int | None,
    seed: int | None,
    histogram: str | None,
    fmt: str | None,
    out: str | None,
) -> None:
    """Simulate the network and report the fairness it measures."""
    from .report import histogram_csv, render_simulation
    from .simulator import SimConfig, empirical_fairness, run

    cfg = resolve_config(_build_cli_overrides(rounds=rounds, trim=trim, window=window, fmt=fmt))
    seed = cfg.harness.seeds[0] if seed is None else seed
    model_cfg = _load_model(config_path, rule)
    resample = cfg.harness.resample_delays and model_cfg.resamples
    model = model_cfg.build(delay_seed=seed if resample else None)
    result = run(SimConfig(
        model=model, rounds=cfg.simulation.rounds, seed=seed,
        trim_heights=cfg.simulation.trim_heights, window=cfg.simulation.window,
    ))
    report = empirical_fairness(result, model.alpha)
    _emit(render_simulation(result, report, cfg.output.format), out)
    if histogram:
        _emit(histogram_csv(result), histogram)


@cli.command()
@_model_options
@_calc_options
@_sim_options
@_harness_options
@_output_options
@_reports_errors
def compare(
    config_path: str | None,
    rule: str | None,
    epsilon: float | None,
    max_iter: int | None,
    rounds: int | None,
    trim: int | None,
    window: int | None,
    seeds: str | None,
    workers: int | None,
    fixed_delays: bool,
    fmt: str | None,
    out: str | None,
) -> None:
    """Compare model and baseline against simulation, one run per seed."""
    from .harness import compare as run_compare
    from .report import render_comparison

    cfg = resolve_config(_build_cli_overrides(
        epsilon=epsilon, max_iter=max_iter, rounds=rounds, trim=trim, window=window,
        seeds=_seed_list(seeds), workers=workers,
        resample_delays=False if fixed_delays else None, fmt=fmt,
    ))
    report = run_compare(
        _load_model(config_path, rule), cfg.simulation.rounds, cfg.harness.seeds,
        cfg.calc.epsilon, **_compare_kwargs(cfg),
    )
    _emit(render_comparison(report, cfg.output.format), out)


@cli.command()
@_model_options
@click.option("--grid", "-g", default="0.01,0.04,0.07,0.1", show_default=True, help="Comma-separated d/T values.")
@click.option("--rules", default=",".join(r.value for r in TieBreakRule), show_default=True,
              help="Comma-separated tie-break rules.")
@_calc_options
@_sim_options
@_harness_options
@_output_options
@_reports_errors
def sweep(
    config_path: str | None,
    rule: str | None,
    grid: str,
    rules: str,
    epsilon: float | None,
    max_iter: int | None,
    rounds: int | None,
    trim: int | None,
    window: int | None,
    seeds: str | None,
    workers: int | None,
    fixed_delays: bool,
    fmt: str | None,
    out: str | None,
) -> None:
    """Run compare over a d/T x rule grid."""
    from .harness import sweep as run_sweep
    from .report import render_sweep

    cfg = resolve_config(_build_cli_overrides(
        epsilon=epsilon, max_iter=max_iter, rounds=rounds, trim=trim, window=window,
        seeds=_seed_list(seeds), workers=workers,
        resample_delays=False if fixed_delays else None, fmt=fmt,
    ))
    rule_list = [rule] if rule else [r for r in rules.split(",") if r.strip()]
    rows = run_sweep(
        _load_model(config_path, None), _float_list(grid), rule_list,
        cfg.simulation.rounds, cfg.harness.seeds, cfg.calc.epsilon, **_compare_kwargs(cfg),
    )
    _emit(render_sweep(rows, cfg.output.format), out)


@cli.command()
@click.option("--grid", "-g", default="0.01,0.1,0.5", show_default=True, help="Comma-separated d/T values.")
@click.option("--config", "-c", "config_path", default=None, type=click.Path(dir_okay=False),
              help="Model file: report per-miner round-scale probabilities instead.")
@click.option("--out", "-o", default=None, type=click.Path(dir_okay=False), help="Write output to a file.")
@click.option("--format", "-f", "fmt", default="csv", show_default=True, type=click.Choice(["json", "csv"]))
@_reports_errors
def forkscale(grid: str, config_path: str | None, out: str | None, fmt: str) -> None:
    """Impacts of fork scale over a d/T grid (CSV by default)."""
    from .forkscale import impact_sweep, round_scale_probs
    from .report import render_impacts, render_round_scale

    if config_path:
        model = load_model_file(config_path).build()
        probs = [round_scale_probs(model, i) for i in model.miners]
        _emit(render_round_scale(probs, fmt), out)
        return
    _emit(render_impacts(impact_sweep(_float_list(grid)), fmt), out)


@cli.command("two-miner")
@click.option("--alpha-a", "-a", required=True, type=float, help="Hashrate share of miner A.")
@click.option("--d-over-t", "-x", required=True, type=float, help="Propagation delay over mean block interval.")
@_output_options
@_reports_errors
def two_miner(alpha_a: float, d_over_t: float, fmt: str | None, out: str | None) -> None:
    """Closed-form fairness of a two-miner network."""
    from .fairness import two_miner_closed_form
    from .report import render_two_miner

    cfg = resolve_config(_build_cli_overrides(fmt=fmt))
    _emit(render_two_miner(two_miner_closed_form(alpha_a, d_over_t), cfg.output.format), out)


# ======================================================================
# Config commands
# ======================================================================

@cli.group("config")
def config_group() -> None:
    """Manage minefair configuration."""


@config_group.command("set")
@click.argument("key")
@click.argument("value")
@click.option("--project", is_flag=True, help="Write to .minefair.toml instead of the global file.")
@_reports_errors
def config_set(key: str, value: str, project: bool) -> None:
    """Set a config value (e.g. minefair config set simulation.rounds 1000000)."""
    set_config_value(key, value, project=project)
    click.echo(f"{key} = {value} -> {PROJECT_CONFIG_PATH if project else GLOBAL_CONFIG_PATH}")


@config_group.command("get")
@click.argument("key")
@_reports_errors
def config_get(key: str) -> None:
    """Print one resolved value (e.g. minefair config get calc.epsilon)."""
    click.echo(get_config_value(key))


@config_group.command("list")
@click.option("--resolved", "mode", flag_value="resolved", default=True, help="All sources merged (default).")
@click.option("--global", "mode", flag_value="global", help="Global config file only.")
@click.option("--project", "mode", flag_value="project", help="Project config file only.")
@_reports_errors
def config_list(mode: str) -> None:
    """Show configuration as TOML."""
    import tomli_w

    if mode == "resolved":
        data = asdict(resolve_config())
    else:
        data = load_config_file(GLOBAL_CONFIG_PATH if mode == "global" else PROJECT_CONFIG_PATH)
    click.echo(f"# {mode}\n")
    click.echo(tomli_w.dumps(data) if data else "(empty)")
