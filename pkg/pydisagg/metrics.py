"""
Unit-level error metrics.

``rmse`` is the root mean squared difference between predicted and
counted population. ``ppe`` and ``ppse`` weight each unit's relative
deviation (absolute, resp. squared) by its surface, so large sparsely
populated units weigh as much as their area says rather than as little
as their population does. Units counting zero people have no relative
deviation: they are left out of ``ppe``/``ppse`` and reported as
excluded, but still count in ``rmse``.
"""

from __future__ import annotations

__all__ = ('error', 'evaluate', 'mean_report', 'Metric', 'MetricError',
           'MetricReport', 'ppe', 'ppse', 'rmse', 'unit_errors')

import dataclasses
from enum import Enum
import logging
import math
from typing import Iterable, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from pydisagg import serialisation
from pydisagg.ingest import CensusTable, ZoneMap
from pydisagg.utils import DisaggError

logger = logging.getLogger(__name__)

Surfaces = Union[Mapping[str, float], ZoneMap]


class MetricError(DisaggError, ValueError):
    """Thrown when a metric is undefined on the given units."""


class Metric(Enum):
    """Error metric, also usable as a training loss."""

    PPE = 'ppe'
    PPSE = 'ppse'
    RMSE = 'rmse'

    @classmethod
    def parse(cls, name: Union[str, Metric]) -> Metric:
        """
        Metric from its name, case-insensitively.

        :param name: Metric name
        :return: Metric
        """
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f'Unknown metric {name!r}, expected one of '
                             f'{", ".join(m.value for m in cls)}') from None


@dataclasses.dataclass(frozen=True)
class MetricReport(serialisation.JSONMixin):
    """Errors of one set of unit predictions."""

    ppe: float
    ppse: float
    rmse: float
    n_units: int
    excluded_units: int
    adjusted: bool

    def __post_init__(self) -> None:
        if not (self.ppe >= 0 and self.ppse >= 0 and self.rmse >= 0):
            raise ValueError(f'Negative error in {self!r}')


def error(metric: Metric,
          pred: np.ndarray,
          count: np.ndarray,
          surface: np.ndarray) -> float:
    """
    Error of predictions given as aligned arrays.

    :param metric: Metric
    :param pred: Predicted population per unit
    :param count: Census count per unit
    :param surface: Surface per unit, ignored by RMSE
    :return: Error
    """
    if not len(pred):
        raise MetricError('No units to evaluate')
    diff = pred - count
    if metric is Metric.RMSE:
        return math.sqrt(math.fsum((diff * diff).tolist()) / len(diff))
    included = count > 0
    if not included.any():
        raise MetricError('Every unit has a zero census, relative errors '
                          'are undefined')
    total = math.fsum(surface[included].tolist())
    if not total > 0:
        raise MetricError('Units with a positive census have no surface')
    deviation = diff[included] / count[included]
    if metric is Metric.PPE:
        deviation = np.abs(deviation)
    else:
        deviation = deviation * diff[included]
    return math.fsum((surface[included] * deviation).tolist()) / total


def _arrays(preds: Mapping[str, float],
            census: CensusTable,
            unit_ids: Iterable[str],
            surfaces: Surfaces = None
            ) -> Tuple[Tuple[str, ...], np.ndarray, np.ndarray, np.ndarray]:
    unit_ids = tuple(unit_ids)
    pred = np.array([preds[u] for u in unit_ids], dtype=np.float64)
    count = census.values(unit_ids)
    if surfaces is None:
        surface = np.ones(len(unit_ids))
    elif isinstance(surfaces, ZoneMap):
        surface = surfaces.surfaces(unit_ids)
    else:
        surface = np.array([surfaces[u] for u in unit_ids],
                           dtype=np.float64)
    return unit_ids, pred, count, surface


def rmse(preds: Mapping[str, float],
         census: CensusTable,
         unit_ids: Iterable[str]) -> float:
    """
    Root mean squared error.

    :param preds: Predicted population by unit
    :param census: Census table
    :param unit_ids: Units to evaluate
    :return: Error in people
    """
    _, pred, count, surface = _arrays(preds, census, unit_ids)
    return error(Metric.RMSE, pred, count, surface)


def ppe(preds: Mapping[str, float],
        census: CensusTable,
        surfaces: Surfaces,
        unit_ids: Iterable[str]) -> float:
    """
    Surface-weighted mean absolute relative error.

    :param preds: Predicted population by unit
    :param census: Census table
    :param surfaces: Surface by unit, or the zone map
    :param unit_ids: Units to evaluate
    :return: Error as a fraction
    """
    _, pred, count, surface = _arrays(preds, census, unit_ids, surfaces)
    return error(Metric.PPE, pred, count, surface)


def ppse(preds: Mapping[str, float],
         census: CensusTable,
         surfaces: Surfaces,
         unit_ids: Iterable[str]) -> float:
    """
    Surface-weighted mean of squared errors relative to census.

    :param preds: Predicted population by unit
    :param census: Census table
    :param surfaces: Surface by unit, or the zone map
    :param unit_ids: Units to evaluate
    :return: Error as a fraction
    """
    _, pred, count, surface = _arrays(preds, census, unit_ids, surfaces)
    return error(Metric.PPSE, pred, count, surface)


def evaluate(preds: Mapping[str, float],
             census: CensusTable,
             surfaces: Surfaces,
             unit_ids: Iterable[str],
             adjusted: bool = False) -> MetricReport:
    """
    All metrics of one set of predictions.

    :param preds: Predicted population by unit
    :param census: Census table
    :param surfaces: Surface by unit, or the zone map
    :param unit_ids: Units to evaluate
    :param adjusted: Whether predictions were redistributed
    :return: Metric report
    """
    unit_ids, pred, count, surface = _arrays(preds, census, unit_ids,
                                             surfaces)
    excluded = int((count == 0).sum())
    if excluded:
        logger.info('%d of %d units have a zero census and are left out '
                    'of relative errors', excluded, len(unit_ids))
    return MetricReport(ppe=error(Metric.PPE, pred, count, surface),
                        ppse=error(Metric.PPSE, pred, count, surface),
                        rmse=error(Metric.RMSE, pred, count, surface),
                        n_units=len(unit_ids) - excluded,
                        excluded_units=excluded,
                        adjusted=bool(adjusted))


def mean_report(reports: Sequence[MetricReport]) -> MetricReport:
    """
    Componentwise mean of reports.

    Unit counts are summed rather than averaged.

    :param reports: Reports sharing the same `adjusted` flag
    :return: Mean report
    """
    if not reports:
        raise MetricError('No reports to average')
    flags = {r.adjusted for r in reports}
    if len(flags) != 1:
        raise MetricError('Cannot average adjusted with unadjusted reports')
    n = len(reports)
    return MetricReport(ppe=math.fsum(r.ppe for r in reports) / n,
                        ppse=math.fsum(r.ppse for r in reports) / n,
                        rmse=math.fsum(r.rmse for r in reports) / n,
                        n_units=sum(r.n_units for r in reports),
                        excluded_units=sum(r.excluded_units
                                           for r in reports),
                        adjusted=flags.pop())


def unit_errors(preds: Mapping[str, float],
                census: CensusTable,
                zone: ZoneMap,
                unit_ids: Iterable[str]) -> pd.DataFrame:
    """
    Per-unit errors, for relating error to unit surface.

    :param preds: Predicted population by unit
    :param census: Census table
    :param zone: Zone map
    :param unit_ids: Units to list
    :return: One row per unit
    """
    unit_ids, pred, count, surface = _arrays(preds, census, unit_ids, zone)
    relative = np.full(len(unit_ids), np.nan)
    np.divide(np.abs(pred - count), count, out=relative, where=count > 0)
    return pd.DataFrame({
        'unit_id': list(unit_ids),
        'superunit_id': [zone.superunit_of(u) for u in unit_ids],
        'surface': surface,
        'census': count,
        'prediction': pred,
        'error': pred - count,
        'relative_error': relative,
    })
