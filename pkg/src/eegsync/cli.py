"""Command-line front end.

Subcommands: synth, overall, dynamic, consistency, print-config.
Exit codes: 0 ok, 2 config error, 3 I/O error, 4 data validation error.
Reruns with the same config overwrite outputs with identical bytes, and
--parallel only changes wall time, never output content.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import config as cfgmod
from .config import RunConfig, load_json_config, parse_run_config, parse_synth_config
from .errors import ConfigError, DataValidationError, EegsyncError
from .io import load_dataset, load_manifest, write_cohort, write_report
from .pipeline import (
    category_test,
    compose_report,
    resolve_channels,
    run_consistency,
    run_dynamic,
    run_overall,
)
from .synth import generate_cohort, synth_catalog

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4

PARALLEL_ENV = "EEGSYNC_PARALLEL"


def _fail(code: int, message: str):
    click.echo(f"eegsync: error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, str(exc))
        except DataValidationError as exc:
            _fail(EXIT_DATA, str(exc))
        except EegsyncError as exc:
            _fail(EXIT_DATA, str(exc))
        except OSError as exc:
            _fail(EXIT_IO, str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _resolve_parallel(flag: int | None, cfg_value: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(PARALLEL_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{PARALLEL_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise ConfigError(f"{PARALLEL_ENV} must be >= 1, got {value}")
        return value
    return cfg_value


def _load_run_inputs(cfg: RunConfig, seed_flag: int | None):
    """Resolve the configured dataset into (records, catalog, montage)."""
    if cfg.dataset_manifest is not None:
        manifest = load_manifest(cfg.dataset_manifest)
        records = load_dataset(manifest)
        if not records:
            raise DataValidationError("dataset manifest lists no entries")
        return records, manifest.catalog, manifest.montage
    synth_doc = load_json_config(cfg.dataset_synth)
    seed = seed_flag if seed_flag is not None else cfg.seed
    synth_cfg = parse_synth_config(synth_doc, seed_override=seed)
    records, _ = generate_cohort(synth_cfg)
    return records, synth_catalog(synth_cfg), records[0].montage


def _emit(report, cfg: RunConfig, out_flag: str | None, fmt_flag: str | None):
    out = Path(out_flag if out_flag is not None else cfg.out)
    fmt = fmt_flag if fmt_flag is not None else cfg.format
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, "json", out / "report.json")
    if fmt == "csv":
        write_report(report, "csv", out)
    click.echo(f"report written to {out}")


run_options = [
    click.option("--config", "config_path", required=True, type=click.Path(),
                 help="Run config JSON (see print-config)."),
    click.option("--out", "out_flag", default=None, type=click.Path(),
                 help="Output directory (overrides config)."),
    click.option("--format", "fmt_flag", default=None,
                 type=click.Choice(["csv", "json"]),
                 help="Report format (overrides config)."),
    click.option("--parallel", "parallel_flag", default=None, type=int,
                 help="Worker processes (overrides EEGSYNC_PARALLEL and config)."),
    click.option("--seed", "seed_flag", default=None, type=int,
                 help="RNG seed override for synthetic datasets."),
]


def _with_run_options(fn):
    for opt in reversed(run_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Single-electrode, feature-based inter-subject correlation."""


@main.command("print-config")
@click.argument("kind", default="run", type=click.Choice(["run", "synth"]))
def print_config(kind):
    """Print the full default config of the given KIND."""
    doc = (
        cfgmod.DEFAULT_RUN_CONFIG if kind == "run" else cfgmod.DEFAULT_SYNTH_CONFIG
    )
    click.echo(json.dumps(doc, sort_keys=True, indent=2))


@main.command("synth")
@click.option("--config", "config_path", required=True, type=click.Path(),
              help="Synth config JSON (see print-config synth).")
@click.option("--out", "out_flag", default="cohort", type=click.Path(),
              help="Output directory for the cohort.")
@click.option("--seed", "seed_flag", default=None, type=int,
              help="Override the config's rng_seed.")
@_guarded
def cmd_synth(config_path, out_flag, seed_flag):
    """Generate a deterministic synthetic cohort with ground truth."""
    doc = load_json_config(config_path)
    cfg = parse_synth_config(doc, seed_override=seed_flag)
    # config fully validated; only now touch the filesystem
    records, truth = generate_cohort(cfg)
    manifest = write_cohort(records, synth_catalog(cfg), out_flag, ground_truth=truth)
    click.echo(f"cohort written: {manifest}")


def _prepare(config_path, parallel_flag, seed_flag):
    cfg = parse_run_config(load_json_config(config_path))
    parallel = _resolve_parallel(parallel_flag, cfg.parallel)
    records, catalog, montage = _load_run_inputs(cfg, seed_flag)
    configs = cfg.resolve_features(records[0].sample_rate_hz)
    if cfg.channels:
        for c in cfg.channels:
            if c not in montage:
                raise ConfigError(f"configured channel {c!r} not in montage")
    return cfg, parallel, records, catalog, montage, configs


@main.command("overall")
@_with_run_options
@_guarded
def cmd_overall(config_path, out_flag, fmt_flag, parallel_flag, seed_flag):
    """Whole-record synchrony percentages (per channel, pair and film)."""
    cfg, parallel, records, catalog, montage, configs = _prepare(
        config_path, parallel_flag, seed_flag
    )
    results = run_overall(
        records,
        configs,
        alpha=cfg.alpha,
        notch=cfg.notch,
        channels=cfg.channels,
        session_grouping=cfg.session_grouping,
    )
    report = compose_report(cfg.snapshot, overall=results)
    _emit(report, cfg, out_flag, fmt_flag)


@main.command("dynamic")
@_with_run_options
@_guarded
def cmd_dynamic(config_path, out_flag, fmt_flag, parallel_flag, seed_flag):
    """Sliding-window dynamic ISC curves with per-window significance."""
    cfg, parallel, records, catalog, montage, configs = _prepare(
        config_path, parallel_flag, seed_flag
    )
    dynamic, errors = run_dynamic(
        records,
        configs,
        cfg.windows,
        channels=cfg.channels,
        alpha=cfg.alpha,
        notch=cfg.notch,
        session_grouping=cfg.session_grouping,
        parallel=parallel,
    )
    report = compose_report(cfg.snapshot, dynamic=dynamic, dynamic_errors=errors)
    _emit(report, cfg, out_flag, fmt_flag)


@main.command("consistency")
@_with_run_options
@_guarded
def cmd_consistency(config_path, out_flag, fmt_flag, parallel_flag, seed_flag):
    """Cross-feature / cross-channel consistency of dynamic ISCs, with
    per-valence threshold tests."""
    cfg, parallel, records, catalog, montage, configs = _prepare(
        config_path, parallel_flag, seed_flag
    )
    dynamic, errors = run_dynamic(
        records,
        configs,
        cfg.windows,
        channels=cfg.channels,
        alpha=cfg.alpha,
        notch=cfg.notch,
        session_grouping=cfg.session_grouping,
        parallel=parallel,
    )
    channels = resolve_channels(montage, cfg.channels)
    scores, cons_errors = run_consistency(
        dynamic, [c.label for c in configs], channels, cfg.windows
    )
    categories = category_test(scores, catalog, cfg.category_threshold)
    report = compose_report(
        cfg.snapshot,
        dynamic=dynamic,
        dynamic_errors=errors,
        consistency_scores=scores,
        consistency_errors=cons_errors,
        category=categories,
    )
    out = Path(out_flag if out_flag is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "category.json").write_text(
        json.dumps(report.category, sort_keys=True, indent=2) + "\n"
    )
    _emit(report, cfg, out_flag, fmt_flag)


if __name__ == "__main__":
    main()
