"""
Command line interface.

``disagg`` chains the pipeline steps: ``synth`` generates a world,
``train`` fits parameters, ``predict`` maps them to a raster, ``eval``
scores predictions, ``cv`` cross-validates and ``render`` draws a
raster as a PNG heatmap.

Exit status is 0 on success, 1 on data or runtime errors and 2 on usage
errors.
"""

from __future__ import annotations

__all__ = ('main',)

import functools
import logging
import os
import sys
from typing import Any, Callable, Optional, Sequence, Tuple

import click

from pydisagg import (__version__, config as env, crossval, ingest,
                      metrics, model, redistribute, render, serialisation,
                      synth, train)
from pydisagg.ingest import CensusTable, CovariateStack, ZoneMap
from pydisagg.metrics import MetricReport
from pydisagg.model import CalibrationPolicy
from pydisagg.utils import DisaggError

logger = logging.getLogger(__name__)

_LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
_FILE = click.Path(dir_okay=False)

Decorator = Callable[[Callable[..., Any]], Callable[..., Any]]


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, env.log_level(), logging.WARNING)
    logging.basicConfig(level=level, format=_LOG_FORMAT, stream=sys.stderr)


def _errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Report pipeline errors as a message and exit status 1."""
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (DisaggError, OSError) as e:
            logger.debug('Command failed', exc_info=True)
            raise click.ClickException(str(e)) from e
    return wrapper


def _apply(options: Sequence[Decorator]) -> Decorator:
    def decorate(func: Callable[..., Any]) -> Callable[..., Any]:
        for option in reversed(options):
            func = option(func)
        return func
    return decorate


def _inputs(census: bool = True, stack: bool = True) -> Decorator:
    options = []
    if stack:
        options.append(click.option('--stack', type=_FILE, required=True,
                                    help='Covariate band manifest.'))
    options.append(click.option('--zones', type=_FILE, required=True,
                                help='unit_id,x,y,weight CSV.'))
    options.append(click.option('--hierarchy', type=_FILE, default=None,
                                help='unit_id,superunit_id CSV; each unit '
                                     'is its own superunit without it.'))
    if census:
        options.append(click.option('--census', type=_FILE, required=True,
                                    help='unit_id,population CSV.'))
    return _apply(options)


_TRAINING = _apply([
    click.option('--loss', type=click.Choice([m.value for m in
                                              metrics.Metric],
                                             case_sensitive=False),
                 default=metrics.Metric.PPE.value, show_default=True,
                 help='Error metric minimised.'),
    click.option('--iterations', type=click.IntRange(min=1), default=1000,
                 show_default=True),
    click.option('--lr-a', type=float, default=0.01, show_default=True),
    click.option('--lr-b', type=float, default=0.01, show_default=True),
    click.option('--lr-c', type=float, default=0.001, show_default=True),
    click.option('--init-b', type=float, default=-4.0, show_default=True),
    click.option('--init-c', type=float, default=0.0, show_default=True),
    click.option('--freeze-a', is_flag=True,
                 help='Keep a = 0, fitting a constant density.'),
    click.option('--on-overflow', type=click.Choice(
        [p.value for p in train.OverflowPolicy]), default='raise',
                 show_default=True,
                 help='Abort, or stop with the best parameters so far.'),
    click.option('--calibration', type=click.Choice(
        [p.value for p in CalibrationPolicy]),
                 default=CalibrationPolicy.CORRECTIVE.value,
                 show_default=True,
                 help='Divide the model by the mean prediction to census '
                      'ratio of the training units (corrective), multiply '
                      'it by that ratio (literal) or leave it (none).'),
    click.option('--seed', type=int, default=0, show_default=True),
    click.option('--deterministic/--no-deterministic',
                 default=env.deterministic,
                 help='Single-threaded, reproducible run '
                      '[default: DISAGG_DETERMINISTIC].'),
])


def _train_config(loss: str, iterations: int, lr_a: float, lr_b: float,
                  lr_c: float, init_b: float, init_c: float, freeze_a: bool,
                  on_overflow: str, seed: int, deterministic: bool,
                  **_: Any) -> train.TrainConfig:
    return train.TrainConfig(loss=loss, lr_a=lr_a, lr_b=lr_b, lr_c=lr_c,
                             iterations=iterations, init_b=init_b,
                             init_c=init_c, seed=seed,
                             deterministic=deterministic, freeze_a=freeze_a,
                             on_overflow=on_overflow)


def _load(stack_path: Optional[str],
          zones_path: str,
          hierarchy_path: Optional[str],
          census_path: Optional[str]
          ) -> Tuple[Optional[CovariateStack], ZoneMap,
                     Optional[CensusTable]]:
    stack = None if stack_path is None else ingest.load_stack(stack_path)
    zone = ingest.load_zones(zones_path, hierarchy_path)
    census = None
    if census_path is not None:
        census = ingest.load_census(census_path)
        ingest.validate_census(census, zone)
    if stack is not None:
        zone.check_grid(stack.width, stack.height)
    return stack, zone, census


def _sibling(path: str, suffix: str) -> str:
    return f'{os.path.splitext(path)[0]}{suffix}'


def _format_report(report: MetricReport) -> str:
    rows = [
        ('ppe', f'{report.ppe * 100:.2f}%'),
        ('ppse', f'{report.ppse * 100:.2f}%'),
        ('rmse', f'{report.rmse:.2f}'),
        ('units', str(report.n_units)),
        ('excluded', str(report.excluded_units)),
        ('adjusted', 'yes' if report.adjusted else 'no'),
    ]
    return '\n'.join(f'{name:<10}{value:>12}' for name, value in rows)


@click.group()
@click.version_option(version=__version__, message='%(prog)s %(version)s')
@click.option('-v', '--verbose', count=True,
              help='INFO with -v, DEBUG with -vv [default: '
                   'DISAGG_LOG_LEVEL].')
def main(verbose: int) -> None:
    """Disaggregate census counts onto a pixel grid."""
    _configure_logging(verbose)


@main.command('train')
@_inputs()
@_TRAINING
@click.option('--out', type=_FILE, required=True,
              help='Parameters JSON.')
@click.option('--trace', type=_FILE, default=None,
              help='Loss per iteration CSV [default: <out>.trace.csv].')
@_errors
def cmd_train(stack: str, zones: str, hierarchy: Optional[str], census: str,
              calibration: str, out: str, trace: Optional[str],
              **options: Any) -> None:
    """Fit LinExp parameters to the census of every unit."""
    config = _train_config(**options)
    raw, zone, counts = _load(stack, zones, hierarchy, census)
    standardized = ingest.standardize(raw)
    params, fit_trace = train.fit(standardized, zone, counts, zone.unit_ids,
                                  config)
    factor = model.calibration_factor(params, standardized, zone, counts,
                                      zone.unit_ids,
                                      CalibrationPolicy(calibration))
    if factor != 1.0:
        params = model.calibrate(params, factor)
    model.save_params(params, out)
    train.save_trace(fit_trace, trace or _sibling(out, '.trace.csv'))
    for band, weight in model.importance(params):
        logger.info('Covariate %s: %+.4f', band, weight)
    click.echo(f'{config.loss.value} loss {fit_trace.best_loss:.6g} at '
               f'iteration {fit_trace.best_iteration}')


@main.command('predict')
@click.option('--params', 'params_path', type=_FILE, required=True,
              help='Parameters JSON.')
@_inputs(census=False)
@click.option('--census', type=_FILE, default=None,
              help='unit_id,population CSV, needed to redistribute.')
@click.option('--redistribute', 'level', type=click.Choice(
    [lv.value for lv in redistribute.Level]), default=None,
              help='Also write predictions rescaled to the census of '
                   'each zone of this level.')
@click.option('--out', type=_FILE, required=True,
              help='Prediction raster manifest.')
@click.option('--adjusted-out', type=_FILE, default=None,
              help='Redistributed raster manifest '
                   '[default: <out>.adjusted.json].')
@_errors
def cmd_predict(params_path: str, stack: str, zones: str,
                hierarchy: Optional[str], census: Optional[str],
                level: Optional[str], out: str,
                adjusted_out: Optional[str]) -> None:
    """Predict the population density of every zoned pixel."""
    if level is not None and census is None:
        raise click.UsageError('--redistribute needs --census')
    params = model.load_params(params_path)
    raw, zone, counts = _load(stack, zones, hierarchy, census)
    params.check_bands(raw.bands)
    if params.stats is None:
        logger.warning('%s has no band statistics, standardising with '
                       'those of %s', params_path, stack)
        standardized = ingest.standardize(raw)
    else:
        standardized = ingest.apply_stats(raw, params.stats, params.bands)
    raster = model.predict_raster(params, standardized, zone)
    model.save_raster(raster, out)
    click.echo(f'total {raster.total():.6g}')
    if level is not None:
        adjusted = redistribute.dasymetric(raster, zone, counts, level)
        model.save_raster(adjusted, adjusted_out
                          or _sibling(out, '.adjusted.json'))
        click.echo(f'adjusted total {adjusted.total():.6g}')


@main.command('eval')
@_inputs(stack=False)
@click.option('--unit-predictions', type=_FILE, default=None,
              help='unit_id,prediction CSV.')
@click.option('--raster', type=_FILE, default=None,
              help='Prediction raster manifest.')
@click.option('--redistribute', 'level', type=click.Choice(
    [lv.value for lv in redistribute.Level]), default=None,
              help='Redistribute the raster at this level first.')
@click.option('--per-unit', type=_FILE, default=None,
              help='Write per-unit errors as CSV.')
@click.option('--out', type=_FILE, default=None, help='Report JSON.')
@_errors
def cmd_eval(zones: str, hierarchy: Optional[str], census: str,
             unit_predictions: Optional[str], raster: Optional[str],
             level: Optional[str], per_unit: Optional[str],
             out: Optional[str]) -> None:
    """Score unit predictions or a raster against the census."""
    if (unit_predictions is None) == (raster is None):
        raise click.UsageError('Give exactly one of --unit-predictions and '
                               '--raster')
    if level is not None and raster is None:
        raise click.UsageError('--redistribute needs --raster')
    _, zone, counts = _load(None, zones, hierarchy, census)
    if unit_predictions is not None:
        preds = model.load_unit_predictions(unit_predictions)
    else:
        prediction = model.load_raster(raster)
        if level is not None:
            prediction = redistribute.dasymetric(prediction, zone, counts,
                                                 level)
        preds = model.aggregate(prediction, zone)
    report = metrics.evaluate(preds, counts, zone, zone.unit_ids,
                              adjusted=level is not None)
    click.echo(_format_report(report))
    if per_unit is not None:
        metrics.unit_errors(preds, counts, zone, zone.unit_ids).to_csv(
            per_unit, index=False, float_format='%.17g')
    if out is not None:
        serialisation.write_json(out, report)


@main.command('cv')
@_inputs()
@_TRAINING
@click.option('--folds', 'k', type=click.IntRange(min=2), default=10,
              show_default=True, help='Number of superunit folds.')
@click.option('--global-stats', is_flag=True,
              help='Standardise with statistics of every pixel rather '
                   'than of the training pixels of each fold.')
@click.option('--with-areal', is_flag=True,
              help='Also score areal weighting of superunit counts.')
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Fold worker threads [default: DISAGG_THREADS].')
@click.option('--out', type=_FILE, required=True, help='Fold results CSV.')
@click.option('--summary', type=_FILE, default=None,
              help='Mean reports JSON [default: <out>.json].')
@_errors
def cmd_cv(stack: str, zones: str, hierarchy: Optional[str], census: str,
           calibration: str, k: int, global_stats: bool, with_areal: bool,
           threads: Optional[int], out: str, summary: Optional[str],
           **options: Any) -> None:
    """Cross-validate training over folds of superunits."""
    config = _train_config(**options)
    raw, zone, counts = _load(stack, zones, hierarchy, census)
    result = crossval.run_cv(raw, zone, counts, config, k, config.seed,
                             calibration=CalibrationPolicy(calibration),
                             global_stats=global_stats,
                             baselines=(crossval.AREAL,) if with_areal
                             else (),
                             threads=threads)
    crossval.save_results(result, out, summary or _sibling(out, '.json'))
    for (method, adjusted), report in result.means().items():
        click.echo(f'{method} {"adjusted" if adjusted else "unadjusted"} '
                   f'(mean of {k} folds)')
        click.echo(_format_report(report))


@main.command('synth')
@click.option('--out', type=click.Path(file_okay=False), required=True,
              help='Output directory.')
@click.option('--width', type=click.IntRange(min=1), default=64,
              show_default=True)
@click.option('--height', type=click.IntRange(min=1), default=64,
              show_default=True)
@click.option('--bands', type=click.IntRange(min=1), default=5,
              show_default=True)
@click.option('--units', type=click.IntRange(min=1), default=40,
              show_default=True)
@click.option('--superunits', type=click.IntRange(min=1), default=8,
              show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--true-b', type=float, default=None,
              help=f'[default: {synth.DEFAULT_TRUE_B}]')
@click.option('--true-c', type=float, default=None, help='[default: 0]')
@click.option('--noise', type=click.FloatRange(min=0), default=0.0,
              show_default=True,
              help='Standard deviation of log-normal census noise.')
@click.option('--fractional-border', is_flag=True,
              help='Share tile edges between units and weight the grid '
                   'border at 0.75.')
@_errors
def cmd_synth(out: str, width: int, height: int, bands: int, units: int,
              superunits: int, seed: int, true_b: Optional[float],
              true_c: Optional[float], noise: float,
              fractional_border: bool) -> None:
    """Generate a world with a known LinExp ground truth."""
    config = synth.SynthConfig(width=width, height=height, n_bands=bands,
                               n_units=units, n_superunits=superunits,
                               seed=seed, true_b=true_b, true_c=true_c,
                               noise_sd=noise,
                               fractional_border=fractional_border)
    paths = synth.write_world(synth.generate(config), out, config)
    for role, path in paths.items():
        click.echo(f'{role:<10}{path}')


@main.command('render')
@click.option('--raster', type=_FILE, required=True,
              help='Prediction raster manifest.')
@click.option('--out', type=_FILE, required=True, help='PNG path.')
@_errors
def cmd_render(raster: str, out: str) -> None:
    """
    Draw a prediction raster as a PNG heatmap.

    A value v is drawn with intensity log10(1 + v / v99) / log10(2),
    clipped to [0, 1], where v99 is the 99th percentile of the raster.
    Intensity 0 is dark purple, 1 is yellow. Absent pixels are
    transparent.
    """
    render.save_png(model.load_raster(raster), out)
