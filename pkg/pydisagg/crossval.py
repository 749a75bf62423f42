"""
Grouped k-fold cross-validation.

Folds are drawn over superunits so that all units of a superunit are
tested together and none of them is seen in training. Each fold trains
on the other folds, then reports errors on its own units before and
after redistributing the predictions against the census of its
superunits.
"""

from __future__ import annotations

__all__ = ('assign_folds', 'CVResult', 'FoldAssignment', 'FoldError',
           'FoldResult', 'run_cv', 'save_results')

from concurrent.futures import ThreadPoolExecutor
import dataclasses
import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from pydisagg import config as env
from pydisagg import ingest, metrics, model, serialisation, train
from pydisagg.ingest import CensusTable, CovariateStack, PathLike, ZoneMap
from pydisagg.metrics import MetricReport
from pydisagg.model import CalibrationPolicy, LinExpParams, PredictionRaster
from pydisagg.redistribute import dasymetric, Level
from pydisagg.train import TrainConfig
from pydisagg.utils import DisaggError

logger = logging.getLogger(__name__)

LINEXP = 'linexp'
AREAL = 'areal'
_BASELINES = (AREAL,)
_COLUMNS = ['fold', 'method', 'adjusted', 'ppe', 'ppse', 'rmse', 'n_units',
            'excluded_units']


class FoldError(DisaggError, ValueError):
    """Thrown when folds cannot be drawn or run."""


@dataclasses.dataclass(frozen=True)
class FoldAssignment:
    """Fold of every superunit."""

    k: int
    seed: int
    folds: Mapping[str, int]

    def superunits(self, fold: int) -> Tuple[str, ...]:
        """
        Superunits of a fold.

        :param fold: Fold index
        :return: Superunit ids
        """
        return tuple(s for s, f in self.folds.items() if f == fold)

    def sizes(self) -> List[int]:
        """Superunit count of every fold."""
        counts = np.bincount(list(self.folds.values()), minlength=self.k)
        return counts.tolist()

    def test_units(self, zone: ZoneMap, fold: int) -> Tuple[str, ...]:
        """
        Units tested in a fold.

        :param zone: Zone map
        :param fold: Fold index
        :return: Unit ids, in zone map order
        """
        return tuple(u for u in zone.unit_ids
                     if self.folds[zone.superunit_of(u)] == fold)

    def train_units(self, zone: ZoneMap, fold: int) -> Tuple[str, ...]:
        """
        Units trained on in a fold.

        :param zone: Zone map
        :param fold: Fold index
        :return: Unit ids, in zone map order
        """
        return tuple(u for u in zone.unit_ids
                     if self.folds[zone.superunit_of(u)] != fold)


def assign_folds(superunit_ids: Iterable[str],
                 k: int,
                 seed: int = 0) -> FoldAssignment:
    """
    Deal superunits into `k` folds.

    Superunits are shuffled by `seed` and dealt round-robin, so fold
    sizes differ by at most one.

    :param superunit_ids: Superunit ids
    :param k: Number of folds
    :param seed: Shuffle seed
    :return: Fold assignment
    """
    superunit_ids = tuple(superunit_ids)
    if len(set(superunit_ids)) != len(superunit_ids):
        raise FoldError('Duplicate superunit ids')
    if not 1 <= k <= len(superunit_ids):
        raise FoldError(f'Cannot draw {k} folds from {len(superunit_ids)} '
                        f'superunits')
    order = np.random.default_rng(seed).permutation(len(superunit_ids))
    folds = {superunit_ids[j]: i % k for i, j in enumerate(order.tolist())}
    return FoldAssignment(k=k, seed=seed, folds=folds)


@dataclasses.dataclass(frozen=True)
class FoldResult:
    """Errors of one method on one fold."""

    fold: int
    method: str
    report: MetricReport
    params: Optional[LinExpParams] = None

    def row(self) -> Dict[str, object]:
        """Flat record for tabular output."""
        return {'fold': self.fold, 'method': self.method,
                **self.report.to_json()}


@dataclasses.dataclass(frozen=True)
class CVResult:
    """Fold results and their means."""

    assignment: FoldAssignment
    results: Tuple[FoldResult, ...]

    def reports(self, method: str = LINEXP,
                adjusted: bool = False) -> List[MetricReport]:
        """
        Fold reports of one method.

        :param method: ``linexp`` or a baseline
        :param adjusted: Whether to list redistributed reports
        :return: Reports, by fold
        """
        return [r.report for r in self.results
                if r.method == method and r.report.adjusted == adjusted]

    def means(self) -> Dict[Tuple[str, bool], MetricReport]:
        """
        Mean report of every method and adjustment.

        :return: Mean report by ``(method, adjusted)``
        """
        keys = dict.fromkeys((r.method, r.report.adjusted)
                             for r in self.results)
        return {key: metrics.mean_report(self.reports(*key)) for key in keys}

    def frame(self) -> pd.DataFrame:
        """One row per fold, method and adjustment."""
        return pd.DataFrame([r.row() for r in self.results],
                            columns=_COLUMNS)

    def summary(self) -> Dict[str, object]:
        """Mean reports with the fold layout, for JSON output."""
        return {
            'k': self.assignment.k,
            'seed': self.assignment.seed,
            'fold_sizes': self.assignment.sizes(),
            'means': [{'method': method, **report.to_json()}
                      for (method, _), report in self.means().items()],
        }


def _evaluate_raster(raster: PredictionRaster,
                     zone: ZoneMap,
                     census: CensusTable,
                     test: Tuple[str, ...]) -> MetricReport:
    adjusted = dasymetric(raster, zone, census, Level.SUPERUNIT, test)
    return metrics.evaluate(model.aggregate(adjusted, zone, test), census,
                            zone, test, adjusted=True)


def _uniform(stack: CovariateStack, zone: ZoneMap) -> PredictionRaster:
    mask = zone.pixel_mask(stack.width, stack.height)
    return PredictionRaster(np.where(mask, 1.0, np.nan))


def _run_fold(fold: int,
              assignment: FoldAssignment,
              stack: CovariateStack,
              zone: ZoneMap,
              census: CensusTable,
              config: TrainConfig,
              calibration: CalibrationPolicy,
              global_stats: bool,
              baselines: Sequence[str]) -> List[FoldResult]:
    test = assignment.test_units(zone, fold)
    training = assignment.train_units(zone, fold)
    if not test or not training:
        raise FoldError(f'Fold {fold} has {len(training)} training and '
                        f'{len(test)} test units')
    logger.info('Fold %d: training on %d units, testing on %d', fold,
                len(training), len(test))

    mask = None if global_stats else zone.pixel_mask(
        stack.width, stack.height, training)
    standardized = ingest.apply_stats(stack, ingest.compute_stats(stack,
                                                                  mask))
    params, _ = train.fit(standardized, zone, census, training, config)
    factor = model.calibration_factor(params, standardized, zone, census,
                                      training, calibration)
    if factor != 1.0:
        params = model.calibrate(params, factor)

    unadjusted = metrics.evaluate(
        model.predict_units(params, standardized, zone, test), census, zone,
        test)
    raster = model.predict_raster(params, standardized, zone)
    results = [
        FoldResult(fold, LINEXP, unadjusted, params),
        FoldResult(fold, LINEXP, _evaluate_raster(raster, zone, census,
                                                  test), params),
    ]
    if AREAL in baselines:
        results.append(FoldResult(fold, AREAL, _evaluate_raster(
            _uniform(stack, zone), zone, census, test)))
    logger.info('Fold %d: ppe %.4f unadjusted, %.4f adjusted', fold,
                results[0].report.ppe, results[1].report.ppe)
    return results


def run_cv(stack: CovariateStack,
           zone: ZoneMap,
           census: CensusTable,
           config: TrainConfig,
           k: int,
           seed: int = 0,
           calibration: CalibrationPolicy = CalibrationPolicy.NONE,
           global_stats: bool = False,
           baselines: Sequence[str] = (),
           threads: Optional[int] = None) -> CVResult:
    """
    Cross-validate LinExp training over superunit folds.

    Covariates are standardised per fold with statistics of the training
    pixels, or of every pixel with `global_stats`. Baselines are only
    evaluated after redistribution, as they need the test census.

    :param stack: Raw covariates
    :param zone: Zone map
    :param census: Census table
    :param config: Training configuration
    :param k: Number of folds
    :param seed: Fold shuffle seed
    :param calibration: Calibration applied after training
    :param global_stats: Standardise with statistics of every pixel
    :param baselines: Baselines to evaluate too, among ``('areal',)``
    :param threads: Worker threads, `DISAGG_THREADS` if ``None``; always
        one when `config` is deterministic
    :return: Results of every fold
    """
    if stack.standardized:
        raise FoldError('Cross-validation standardises each fold, pass raw '
                        'covariates')
    unknown = set(baselines) - set(_BASELINES)
    if unknown:
        raise FoldError(f'Unknown baselines: {", ".join(sorted(unknown))}')
    if k < 2:
        raise FoldError(f'Cross-validation needs at least 2 folds, got {k}')
    ingest.validate_census(census, zone)
    assignment = assign_folds(zone.superunits, k, seed)
    workers = 1 if config.deterministic else (threads or env.threads())
    logger.info('Running %d folds over %d superunits on %d threads', k,
                len(zone.superunits), workers)

    def run(fold: int) -> List[FoldResult]:
        return _run_fold(fold, assignment, stack, zone, census, config,
                         calibration, global_stats, baselines)

    if workers == 1:
        per_fold = [run(fold) for fold in range(k)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            per_fold = list(executor.map(run, range(k)))
    return CVResult(assignment, tuple(r for rs in per_fold for r in rs))


def save_results(result: CVResult,
                 csv_path: PathLike,
                 json_path: Optional[PathLike] = None) -> None:
    """
    Write fold results as CSV and their means as JSON.

    :param result: Cross-validation result
    :param csv_path: Fold table path
    :param json_path: Summary path, skipped if ``None``
    """
    result.frame().to_csv(csv_path, index=False, float_format='%.17g')
    if json_path is not None:
        serialisation.write_json(json_path, result.summary())
