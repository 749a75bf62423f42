"""
Dasymetric redistribution of predictions against census counts.

Each zone of the chosen level (units or superunits) gets the factor
``census(zone) / predicted(zone)`` and every membership share of its
pixels is scaled by that factor. Afterwards, every zone aggregates to
its census count exactly.
"""

from __future__ import annotations

__all__ = ('dasymetric', 'Level', 'RedistributionError', 'zone_factors')

from enum import Enum
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from pydisagg.ingest import CensusTable, ValidationError, ZoneMap
from pydisagg.model import PredictionRaster
from pydisagg.utils import DisaggError, format_ids

logger = logging.getLogger(__name__)


class RedistributionError(DisaggError, ValueError):
    """Thrown when a populated zone has no predicted population."""

    def __init__(self, zones: Sequence[str]) -> None:
        """
        Initialise error with debugging information.

        :param zones: Populated zones predicted empty
        """
        self.zones = tuple(zones)
        super().__init__(f'Zones with a census but no predicted population, '
                         f'no correcting factor exists: {format_ids(zones)}; '
                         f'consider areal weighting for them')


class Level(Enum):
    """Administrative level of a redistribution."""

    UNIT = 'unit'
    SUPERUNIT = 'superunit'

    @classmethod
    def parse(cls, name: Union[str, Level]) -> Level:
        """
        Level from its name.

        :param name: ``unit`` or ``superunit``
        :return: Level
        """
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValidationError(f'Unknown level {name!r}, expected unit '
                                  f'or superunit') from None


def _groups(zone: ZoneMap,
            unit_ids: Tuple[str, ...],
            level: Level) -> Tuple[List[str], Dict[str, List[str]]]:
    members: Dict[str, List[str]] = {}
    for unit in unit_ids:
        key = unit if level is Level.UNIT else zone.superunit_of(unit)
        members.setdefault(key, []).append(unit)
    return list(members), members


def zone_factors(raster: PredictionRaster,
                 zone: ZoneMap,
                 census: CensusTable,
                 level: Union[str, Level],
                 unit_ids: Optional[Iterable[str]] = None
                 ) -> Dict[str, float]:
    """
    Correcting factor of every zone.

    :param raster: Prediction raster
    :param zone: Zone map
    :param census: Census table
    :param level: Redistribution level
    :param unit_ids: Units taking part, all if ``None``; a superunit only
        gathers the units taking part
    :return: Factor by zone id
    """
    level = Level.parse(level)
    unit_ids = zone.unit_ids if unit_ids is None else tuple(unit_ids)
    if not unit_ids:
        raise ValidationError('No units to redistribute')
    densities = raster.membership_values(zone)
    predicted = np.bincount(zone.unit_index, weights=zone.weight * densities,
                            minlength=len(zone.unit_ids))
    keys, members = _groups(zone, unit_ids, level)
    factors = {}
    impossible = []
    for key in keys:
        units = members[key]
        count = math.fsum(census[u] for u in units)
        mass = math.fsum(predicted[zone.index_of(units)].tolist())
        if count == 0:
            factors[key] = 0.0
        elif mass > 0:
            factors[key] = count / mass
        else:
            impossible.append(key)
    if impossible:
        raise RedistributionError(impossible)
    return factors


def dasymetric(raster: PredictionRaster,
               zone: ZoneMap,
               census: CensusTable,
               level: Union[str, Level],
               unit_ids: Optional[Iterable[str]] = None) -> PredictionRaster:
    """
    Rescale predictions so zones match their census.

    Memberships of units not taking part keep their values. Pixel values
    are the weight-averaged densities of their memberships.

    :param raster: Prediction raster
    :param zone: Zone map
    :param census: Census table
    :param level: Redistribution level
    :param unit_ids: Units taking part, all if ``None``
    :return: Adjusted raster
    """
    level = Level.parse(level)
    unit_ids = zone.unit_ids if unit_ids is None else tuple(unit_ids)
    factors = zone_factors(raster, zone, census, level, unit_ids)
    per_unit = np.ones(len(zone.unit_ids))
    for unit in unit_ids:
        key = unit if level is Level.UNIT else zone.superunit_of(unit)
        per_unit[zone.index_of([unit])[0]] = factors[key]
    entry_values = raster.membership_values(zone) * per_unit[zone.unit_index]

    height, width = raster.values.shape
    flat = zone.y * width + zone.x
    mass = np.bincount(flat, weights=zone.weight * entry_values,
                       minlength=width * height)
    cover = np.bincount(flat, weights=zone.weight, minlength=width * height)
    values = raster.values.copy()
    zoned = cover > 0
    values.reshape(-1)[zoned] = mass[zoned] / cover[zoned]
    logger.info('Redistributed %d %ss, factors in [%.6g, %.6g]',
                len(factors), level.value, min(factors.values()),
                max(factors.values()))
    return PredictionRaster(values, entry_values)
