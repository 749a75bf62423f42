"""
Load, validate and standardise the inputs of a disaggregation run.

Three inputs describe a country:

- a `CovariateStack`, the per-pixel covariates (bands) on a grid of
  ``width`` x ``height`` pixels, stored as 32-bit floats;
- a `ZoneMap`, listing which pixels belong to which administrative unit
  and with which weight (the covered fraction of the pixel), together
  with the unit to superunit hierarchy;
- a `CensusTable`, the population count of each unit.

The band manifest is a JSON document
``{"width": int, "height": int, "bands": [{"name": str, "file": str}]}``
where each band file holds ``width * height`` little-endian 32-bit floats,
rows first (``y`` outer, ``x`` inner). Band file paths are relative to the
manifest. A prediction raster may also list
``"entries": {"file": str, "count": int}``, one little-endian 64-bit float
per zone membership. Zones and census are CSV files with headers
``unit_id,x,y,weight``, ``unit_id,superunit_id`` and
``unit_id,population``.
"""

from __future__ import annotations

__all__ = ('apply_stats', 'BandStats', 'census_of_superunit',
           'CensusTable', 'compute_stats', 'CovariateStack', 'load_census',
           'load_stack', 'load_zones', 'LoadError', 'read_band',
           'read_csv', 'read_entries', 'read_manifest', 'save_census',
           'save_stack', 'save_zones', 'StandardizationError', 'standardize',
           'surface', 'unstandardize', 'validate_census', 'ValidationError',
           'write_band', 'write_manifest', 'ZoneError', 'ZoneMap')

import dataclasses
import logging
import math
import os
from typing import (Any, Dict, Iterable, List, Mapping, NamedTuple,
                    Optional, Sequence, Tuple, Union)

import numpy as np
import pandas as pd

from pydisagg import serialisation
from pydisagg.utils import DisaggError, format_ids

logger = logging.getLogger(__name__)

PathLike = Union[str, 'os.PathLike[str]']

WEIGHT_TOLERANCE = 1e-9

_BAND_DTYPE = np.dtype('<f4')
_ENTRY_DTYPE = np.dtype('<f8')
_ZONE_COLUMNS = ['unit_id', 'x', 'y', 'weight']
_HIERARCHY_COLUMNS = ['unit_id', 'superunit_id']
_CENSUS_COLUMNS = ['unit_id', 'population']


class LoadError(DisaggError):
    """Thrown when an input file is missing or malformed."""

    def __init__(self,
                 path: PathLike,
                 message: str,
                 band: Optional[str] = None,
                 pixel: Optional[Tuple[int, int]] = None) -> None:
        """
        Initialise error with debugging information.

        :param path: Offending file
        :param message: What is wrong
        :param band: Offending band, if any
        :param pixel: Offending pixel ``(x, y)``, if any
        """
        self.path = os.fspath(path)
        self.band = band
        self.pixel = pixel
        where = f'band {band!r} in ' if band is not None else ''
        super().__init__(f'{where}{self.path}: {message}')


class ValidationError(DisaggError, ValueError):
    """Thrown when inputs break a structural invariant."""


class ZoneError(DisaggError, KeyError):
    """Thrown when a unit or superunit is not known."""

    def __init__(self, zone_id: Any, kind: str = 'unit') -> None:
        """
        Initialise error with debugging information.

        :param zone_id: Unknown identifier
        :param kind: ``unit`` or ``superunit``
        """
        self.zone_id = zone_id
        self.kind = kind
        super().__init__(f'Unknown {kind} {zone_id!r}')

    def __str__(self) -> str:
        return str(self.args[0])


class StandardizationError(DisaggError, ValueError):
    """Thrown when standardisation statistics cannot be applied."""


class BandStats(NamedTuple):
    """Standardisation statistics of one band."""

    mean: float
    std: float


@dataclasses.dataclass(frozen=True, eq=False)
class CovariateStack:
    """
    Per-pixel covariates.

    ``values[y, x, band]`` holds the covariate of pixel ``(x, y)``. The
    array is read-only once the stack exists.
    """

    bands: Tuple[str, ...]
    values: np.ndarray
    stats: Optional[Tuple[BandStats, ...]] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 3:
            raise ValidationError(f'Covariates must be (height, width, '
                                  f'bands), got shape {values.shape}')
        bands = tuple(self.bands)
        if len(bands) != values.shape[2]:
            raise ValidationError(f'{len(bands)} band names for '
                                  f'{values.shape[2]} bands')
        if len(set(bands)) != len(bands):
            raise ValidationError(f'Duplicate band names in {bands}')
        if not np.isfinite(values).all():
            y, x, b = np.argwhere(~np.isfinite(values))[0]
            raise ValidationError(f'Non-finite covariate in band '
                                  f'{bands[b]!r} at pixel ({x}, {y})')
        if self.stats is not None and len(self.stats) != len(bands):
            raise ValidationError(f'{len(self.stats)} stats for '
                                  f'{len(bands)} bands')
        if values is self.values:
            values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, 'bands', bands)
        object.__setattr__(self, 'values', values)
        if self.stats is not None:
            object.__setattr__(self, 'stats',
                               tuple(BandStats(float(m), float(s))
                                     for m, s in self.stats))

    @property
    def width(self) -> int:
        """Pixel count along x."""
        return self.values.shape[1]

    @property
    def height(self) -> int:
        """Pixel count along y."""
        return self.values.shape[0]

    @property
    def standardized(self) -> bool:
        """Whether the values are standardised covariates."""
        return self.stats is not None

    def band(self, name: str) -> np.ndarray:
        """
        Values of one band.

        :param name: Band name
        :return: ``(height, width)`` array
        """
        try:
            return self.values[:, :, self.bands.index(name)]
        except ValueError as e:
            raise KeyError(f'Unknown band {name!r}') from e


@dataclasses.dataclass(frozen=True, eq=False)
class ZoneMap:
    """
    Pixel to unit membership and unit to superunit hierarchy.

    Membership entries are stored column-wise: entry ``i`` says that
    pixel ``(x[i], y[i])`` belongs to unit ``unit_ids[unit_index[i]]``
    with weight ``weight[i]`` in ``(0, 1]``.
    """

    unit_ids: Tuple[str, ...]
    unit_index: np.ndarray
    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray
    unit_to_superunit: Mapping[str, str]

    def __post_init__(self) -> None:
        unit_ids = tuple(self.unit_ids)
        if len(set(unit_ids)) != len(unit_ids):
            raise ValidationError('Duplicate unit ids')
        columns = {}
        for name, dtype in (('unit_index', np.int64), ('x', np.int64),
                            ('y', np.int64), ('weight', np.float64)):
            column = np.array(getattr(self, name), dtype=dtype)
            if column.ndim != 1:
                raise ValidationError(f'{name} must be one-dimensional')
            column.flags.writeable = False
            columns[name] = column
        n = len(columns['weight'])
        if any(len(c) != n for c in columns.values()):
            raise ValidationError('Membership columns differ in length')
        object.__setattr__(self, 'unit_ids', unit_ids)
        for name, column in columns.items():
            object.__setattr__(self, name, column)
        object.__setattr__(self, 'unit_to_superunit',
                           dict(self.unit_to_superunit))
        self._validate()

        index = {u: i for i, u in enumerate(unit_ids)}
        surfaces = np.bincount(self.unit_index, weights=self.weight,
                               minlength=len(unit_ids))
        members: Dict[str, List[str]] = {}
        for unit in unit_ids:
            members.setdefault(self.unit_to_superunit[unit], []).append(unit)
        object.__setattr__(self, '_index', index)
        object.__setattr__(self, '_surfaces', surfaces)
        object.__setattr__(self, '_members',
                           {s: tuple(m) for s, m in members.items()})
        empty = [u for u, s in zip(unit_ids, surfaces) if s == 0]
        if empty:
            logger.warning('Units without pixels: %s', format_ids(empty))

    def _validate(self) -> None:
        n_units = len(self.unit_ids)
        if len(self.weight) and (self.unit_index.min() < 0
                                 or self.unit_index.max() >= n_units):
            raise ValidationError('Unit index out of range')
        if len(self.weight) and (self.x.min() < 0 or self.y.min() < 0):
            raise ValidationError('Negative pixel coordinate')
        bad = ~((self.weight > 0) & (self.weight <= 1))
        if bad.any():
            i = int(np.argmax(bad))
            raise ValidationError(
                f'Weight {self.weight[i]!r} of unit '
                f'{self.unit_ids[self.unit_index[i]]!r} at pixel '
                f'({self.x[i]}, {self.y[i]}) is not in (0, 1]')
        missing = [u for u in self.unit_ids if u not in self.unit_to_superunit]
        if missing:
            raise ValidationError(f'Units without superunit: '
                                  f'{format_ids(missing)}')
        if not len(self.weight):
            return

        # Membership keys, sorted by pixel then unit
        order = np.lexsort((self.unit_index, self.x, self.y))
        ys, xs = self.y[order], self.x[order]
        us = self.unit_index[order]
        same_pixel = (ys[1:] == ys[:-1]) & (xs[1:] == xs[:-1])
        duplicate = same_pixel & (us[1:] == us[:-1])
        if duplicate.any():
            i = order[int(np.argmax(duplicate))]
            raise ValidationError(
                f'Pixel ({self.x[i]}, {self.y[i]}) listed twice for unit '
                f'{self.unit_ids[self.unit_index[i]]!r}')
        starts = np.concatenate(([True], ~same_pixel))
        pixel_of = np.cumsum(starts) - 1
        totals = np.bincount(pixel_of, weights=self.weight[order])
        over = totals > 1 + WEIGHT_TOLERANCE
        if over.any():
            i = order[int(np.flatnonzero(starts)[int(np.argmax(over))])]
            raise ValidationError(
                f'Pixel ({self.x[i]}, {self.y[i]}) is over-allocated, '
                f'weights sum to {totals[over][0]!r}')

    @classmethod
    def from_entries(cls,
                     entries: Iterable[Tuple[str, int, int, float]],
                     unit_to_superunit: Optional[Mapping[str, str]] = None
                     ) -> ZoneMap:
        """
        Build from ``(unit_id, x, y, weight)`` entries.

        Units are ordered as in the hierarchy, then by first appearance
        in the entries. Without a hierarchy, every unit is its own
        superunit.

        :param entries: Membership entries
        :param unit_to_superunit: Hierarchy
        :return: Zone map
        """
        entries = list(entries)
        hierarchy = dict(unit_to_superunit or {})
        unit_ids = list(hierarchy)
        known = set(unit_ids)
        for unit, *_ in entries:
            if unit not in known:
                unit_ids.append(unit)
                known.add(unit)
        if unit_to_superunit is None:
            hierarchy = {u: u for u in unit_ids}
        index = {u: i for i, u in enumerate(unit_ids)}
        return cls(unit_ids=tuple(unit_ids),
                   unit_index=[index[e[0]] for e in entries],
                   x=[e[1] for e in entries],
                   y=[e[2] for e in entries],
                   weight=[e[3] for e in entries],
                   unit_to_superunit=hierarchy)

    @property
    def n_entries(self) -> int:
        """Number of membership entries."""
        return len(self.weight)

    @property
    def superunits(self) -> Tuple[str, ...]:
        """Superunit ids, in order of first appearance."""
        return tuple(self._members)

    def entries(self) -> List[Tuple[str, int, int, float]]:
        """
        Membership entries.

        :return: ``(unit_id, x, y, weight)`` tuples
        """
        return [(self.unit_ids[u], int(x), int(y), float(w))
                for u, x, y, w in zip(self.unit_index, self.x, self.y,
                                      self.weight)]

    def index_of(self, unit_ids: Iterable[str]) -> np.ndarray:
        """
        Positions of units in `unit_ids`.

        :param unit_ids: Unit ids
        :return: Integer positions
        """
        try:
            return np.array([self._index[u] for u in unit_ids],
                            dtype=np.int64)
        except KeyError as e:
            raise ZoneError(e.args[0]) from None

    def has_unit(self, unit_id: str) -> bool:
        """Whether a unit is known."""
        return unit_id in self._index

    def superunit_of(self, unit_id: str) -> str:
        """
        Superunit containing a unit.

        :param unit_id: Unit id
        :return: Superunit id
        """
        if unit_id not in self._index:
            raise ZoneError(unit_id)
        return self.unit_to_superunit[unit_id]

    def units(self, superunit_id: str) -> Tuple[str, ...]:
        """
        Units of a superunit.

        :param superunit_id: Superunit id
        :return: Member unit ids
        """
        try:
            return self._members[superunit_id]
        except KeyError:
            raise ZoneError(superunit_id, 'superunit') from None

    def surface(self, zone_id: str) -> float:
        """
        Total weight of the pixels of a unit or superunit.

        Units are looked up first. A superunit sums its units' surfaces
        in member order.

        :param zone_id: Unit or superunit id
        :return: Surface in pixels
        """
        if zone_id in self._index:
            return float(self._surfaces[self._index[zone_id]])
        if zone_id in self._members:
            total = 0.0
            for unit in self._members[zone_id]:
                total += float(self._surfaces[self._index[unit]])
            return total
        raise ZoneError(zone_id, 'unit or superunit')

    def surfaces(self, unit_ids: Iterable[str]) -> np.ndarray:
        """
        Surfaces of several units.

        :param unit_ids: Unit ids
        :return: Surfaces, in the order given
        """
        return self._surfaces[self.index_of(unit_ids)]

    def entry_mask(self, unit_ids: Iterable[str]) -> np.ndarray:
        """
        Entries belonging to some units.

        :param unit_ids: Unit ids
        :return: Boolean mask over entries
        """
        selected = np.zeros(len(self.unit_ids), dtype=bool)
        selected[self.index_of(unit_ids)] = True
        return selected[self.unit_index]

    def pixel_mask(self,
                   width: int,
                   height: int,
                   unit_ids: Optional[Iterable[str]] = None) -> np.ndarray:
        """
        Pixels with at least one membership.

        :param width: Grid width
        :param height: Grid height
        :param unit_ids: Restrict to these units
        :return: ``(height, width)`` boolean mask
        """
        mask = np.zeros((height, width), dtype=bool)
        selected = (np.ones(self.n_entries, dtype=bool) if unit_ids is None
                    else self.entry_mask(unit_ids))
        mask[self.y[selected], self.x[selected]] = True
        return mask

    def restrict(self, unit_ids: Iterable[str]) -> ZoneMap:
        """
        Zone map of some units only.

        :param unit_ids: Units to keep
        :return: Zone map with their memberships and hierarchy
        """
        unit_ids = tuple(unit_ids)
        positions = self.index_of(unit_ids)
        local = np.full(len(self.unit_ids), -1, dtype=np.int64)
        local[positions] = np.arange(len(unit_ids))
        selected = local[self.unit_index] >= 0
        return ZoneMap(unit_ids=unit_ids,
                       unit_index=local[self.unit_index[selected]],
                       x=self.x[selected],
                       y=self.y[selected],
                       weight=self.weight[selected],
                       unit_to_superunit={u: self.unit_to_superunit[u]
                                          for u in unit_ids})

    def check_grid(self, width: int, height: int) -> None:
        """
        Ensure every membership lies on a grid.

        :param width: Grid width
        :param height: Grid height
        """
        outside = (self.x >= width) | (self.y >= height)
        if outside.any():
            i = int(np.argmax(outside))
            raise ValidationError(f'Pixel ({self.x[i]}, {self.y[i]}) is '
                                  f'outside the {width}x{height} grid')


@dataclasses.dataclass(frozen=True)
class CensusTable:
    """Population count of each unit."""

    counts: Mapping[str, float]

    def __post_init__(self) -> None:
        counts = {str(u): float(c) for u, c in self.counts.items()}
        bad = [u for u, c in counts.items() if not math.isfinite(c) or c < 0]
        if bad:
            raise ValidationError(f'Census counts must be finite and '
                                  f'non-negative: {format_ids(bad)}')
        object.__setattr__(self, 'counts', counts)

    def __getitem__(self, unit_id: str) -> float:
        try:
            return self.counts[unit_id]
        except KeyError:
            raise ZoneError(unit_id) from None

    def __contains__(self, unit_id: object) -> bool:
        return unit_id in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def values(self, unit_ids: Iterable[str]) -> np.ndarray:
        """
        Counts of several units.

        :param unit_ids: Unit ids
        :return: Counts, in the order given
        """
        return np.array([self[u] for u in unit_ids], dtype=np.float64)


def validate_census(census: CensusTable, zone: ZoneMap) -> None:
    """
    Ensure census and zones describe the same units.

    :param census: Census table
    :param zone: Zone map
    """
    uncounted = [u for u in zone.unit_ids if u not in census]
    if uncounted:
        raise ValidationError(f'Units without census count: '
                              f'{format_ids(uncounted)}')
    unknown = [u for u in census.counts if not zone.has_unit(u)]
    if unknown:
        raise ValidationError(f'Census units missing from zones: '
                              f'{format_ids(unknown)}')


def surface(zone: ZoneMap, unit_id: str) -> float:
    """
    Surface of a unit or superunit, in pixel units.

    :param zone: Zone map
    :param unit_id: Unit or superunit id
    :return: Sum of the pixel weights
    """
    return zone.surface(unit_id)


def census_of_superunit(census: CensusTable,
                        zone: ZoneMap,
                        superunit_id: str) -> float:
    """
    Population count of a superunit.

    :param census: Census table
    :param zone: Zone map
    :param superunit_id: Superunit id
    :return: Sum of the member unit counts
    """
    return math.fsum(census[u] for u in zone.units(superunit_id))


def compute_stats(stack: CovariateStack,
                  mask: Optional[np.ndarray] = None
                  ) -> Tuple[BandStats, ...]:
    """
    Per-band mean and standard deviation.

    The population variance is used. A band with zero variance gets a
    standard deviation of 1 so it standardises to zeros.

    :param stack: Covariates
    :param mask: ``(height, width)`` pixels to include, all if ``None``
    :return: One `BandStats` per band
    """
    if mask is None:
        pixels = stack.values.reshape(-1, len(stack.bands))
    else:
        pixels = stack.values[np.asarray(mask, dtype=bool)]
    if not len(pixels):
        raise StandardizationError('No pixels to compute statistics on')
    pixels = pixels.astype(np.float64)
    means = pixels.mean(axis=0)
    stds = np.sqrt(((pixels - means) ** 2).mean(axis=0))
    stats = []
    for name, mean, std in zip(stack.bands, means, stds):
        if std == 0:
            logger.warning('Band %r has zero variance, it standardises '
                           'to zeros', name)
            std = 1.0
        stats.append(BandStats(float(mean), float(std)))
    return tuple(stats)


def apply_stats(stack: CovariateStack,
                stats: Sequence[Tuple[float, float]],
                bands: Optional[Sequence[str]] = None) -> CovariateStack:
    """
    Standardise covariates with given statistics.

    :param stack: Raw covariates
    :param stats: Per-band ``(mean, std)``
    :param bands: Band names the statistics were computed for
    :return: Standardised covariates
    """
    if stack.standardized:
        raise StandardizationError('Covariates are already standardised')
    if bands is not None:
        _check_bands(stack.bands, tuple(bands))
    if len(stats) != len(stack.bands):
        raise StandardizationError(f'{len(stats)} stats for '
                                   f'{len(stack.bands)} bands')
    stats = tuple(BandStats(float(m), float(s)) for m, s in stats)
    if any(not s.std > 0 for s in stats):
        raise StandardizationError('Standard deviations must be positive')
    means = np.array([s.mean for s in stats])
    stds = np.array([s.std for s in stats])
    values = (stack.values.astype(np.float64) - means) / stds
    return CovariateStack(bands=stack.bands,
                          values=values.astype(np.float32),
                          stats=stats)


def standardize(stack: CovariateStack) -> CovariateStack:
    """
    Standardise every band to zero mean and unit variance.

    :param stack: Raw covariates
    :return: Standardised covariates, statistics recorded
    """
    if stack.standardized:
        raise StandardizationError('Covariates are already standardised')
    stats = compute_stats(stack)
    logger.info('Standardising %d bands: %s', len(stats),
                ', '.join(f'{b}={s.mean:.4g}+-{s.std:.4g}'
                          for b, s in zip(stack.bands, stats)))
    return apply_stats(stack, stats)


def unstandardize(stack: CovariateStack) -> CovariateStack:
    """
    Recover raw covariates from standardised ones.

    :param stack: Standardised covariates
    :return: Raw covariates
    """
    if not stack.standardized:
        raise StandardizationError('Covariates are not standardised')
    means = np.array([s.mean for s in stack.stats])
    stds = np.array([s.std for s in stack.stats])
    values = stack.values.astype(np.float64) * stds + means
    return CovariateStack(bands=stack.bands,
                          values=values.astype(np.float32))


def _check_bands(actual: Tuple[str, ...], expected: Tuple[str, ...]) -> None:
    for i, (a, e) in enumerate(zip(actual, expected)):
        if a != e:
            raise StandardizationError(f'Band {i} is {a!r}, expected {e!r}')
    if len(actual) != len(expected):
        raise StandardizationError(f'{len(actual)} bands, expected '
                                   f'{len(expected)}')


def read_manifest(path: PathLike) -> Dict[str, Any]:
    """
    Read and check a band manifest.

    :param path: Manifest path
    :return: Manifest with band file paths made absolute
    """
    try:
        manifest = serialisation.read_json(path)
    except FileNotFoundError as e:
        raise LoadError(path, 'no such file') from e
    except ValueError as e:
        raise LoadError(path, f'invalid JSON: {e}') from e
    try:
        width = manifest['width']
        height = manifest['height']
        bands = [{'name': str(b['name']), 'file': str(b['file'])}
                 for b in manifest['bands']]
        entries = manifest.get('entries')
        if entries is not None:
            entries = {'file': str(entries['file']),
                       'count': entries['count']}
    except (AttributeError, KeyError, TypeError) as e:
        raise LoadError(path, f'malformed manifest: {e!r}') from e
    if not (isinstance(width, int) and isinstance(height, int)
            and width > 0 and height > 0):
        raise LoadError(path, f'invalid dimensions {width!r}x{height!r}')
    root = os.path.dirname(os.path.abspath(path))
    for band in bands:
        band['file'] = os.path.join(root, band['file'])
    if entries is not None:
        if not (isinstance(entries['count'], int)
                and entries['count'] >= 0):
            raise LoadError(path, f'invalid membership count '
                            f'{entries["count"]!r}')
        entries['file'] = os.path.join(root, entries['file'])
    return {'width': width, 'height': height, 'bands': bands,
            'entries': entries}


def read_band(path: PathLike,
              name: str,
              width: int,
              height: int) -> np.ndarray:
    """
    Read one raw band file.

    :param path: Band file
    :param name: Band name, for error messages
    :param width: Expected width
    :param height: Expected height
    :return: ``(height, width)`` 32-bit float array
    """
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except FileNotFoundError as e:
        raise LoadError(path, 'no such file', band=name) from e
    expected = width * height * _BAND_DTYPE.itemsize
    if len(data) != expected:
        raise LoadError(path, f'{len(data)} bytes, expected {expected} for '
                        f'a {width}x{height} grid', band=name)
    return np.frombuffer(data, dtype=_BAND_DTYPE).reshape(height, width)


def write_band(path: PathLike, values: np.ndarray) -> None:
    """
    Write one raw band file.

    :param path: Band file
    :param values: ``(height, width)`` array
    """
    with open(path, 'wb') as f:
        f.write(np.ascontiguousarray(values, dtype=_BAND_DTYPE).tobytes())


def read_entries(path: PathLike, count: int) -> np.ndarray:
    """
    Read one value per zone membership.

    :param path: Membership file, little-endian 64-bit floats
    :param count: Expected number of memberships
    :return: Membership values
    """
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except FileNotFoundError as e:
        raise LoadError(path, 'no such file') from e
    expected = count * _ENTRY_DTYPE.itemsize
    if len(data) != expected:
        raise LoadError(path, f'{len(data)} bytes, expected {expected} for '
                        f'{count} memberships')
    return np.frombuffer(data, dtype=_ENTRY_DTYPE).astype(np.float64)


def write_manifest(path: PathLike,
                   bands: Mapping[str, np.ndarray],
                   entries: Optional[np.ndarray] = None) -> None:
    """
    Write a manifest and its band files.

    Band files are written next to the manifest as
    ``<manifest stem>.<band>.f32``, membership values as
    ``<manifest stem>.entries.f64``.

    :param path: Manifest path
    :param bands: ``(height, width)`` arrays by band name
    :param entries: One value per zone membership, if any
    """
    if not bands:
        raise ValueError('At least one band is required')
    shapes = {v.shape for v in bands.values()}
    if len(shapes) != 1:
        raise ValueError(f'Bands differ in shape: {shapes}')
    height, width = shapes.pop()
    root = os.path.dirname(os.path.abspath(path))
    stem = os.path.splitext(os.path.basename(path))[0]
    listed = []
    for name, values in bands.items():
        file_name = f'{stem}.{name}.f32'
        write_band(os.path.join(root, file_name), values)
        listed.append({'name': name, 'file': file_name})
    manifest: Dict[str, Any] = {'width': width, 'height': height,
                                'bands': listed}
    if entries is not None:
        file_name = f'{stem}.entries.f64'
        with open(os.path.join(root, file_name), 'wb') as f:
            f.write(np.ascontiguousarray(entries,
                                         dtype=_ENTRY_DTYPE).tobytes())
        manifest['entries'] = {'file': file_name, 'count': len(entries)}
    serialisation.write_json(path, manifest)


def load_stack(manifest_path: PathLike) -> CovariateStack:
    """
    Load covariates from a band manifest.

    :param manifest_path: Manifest path
    :return: Raw (not standardised) covariates, bands in manifest order
    """
    manifest = read_manifest(manifest_path)
    width, height = manifest['width'], manifest['height']
    layers = []
    names = []
    for band in manifest['bands']:
        layer = read_band(band['file'], band['name'], width, height)
        bad = ~np.isfinite(layer)
        if bad.any():
            y, x = (int(i) for i in np.argwhere(bad)[0])
            raise LoadError(band['file'],
                            f'non-finite value at pixel ({x}, {y})',
                            band=band['name'], pixel=(x, y))
        layers.append(layer)
        names.append(band['name'])
    if not layers:
        raise LoadError(manifest_path, 'no bands')
    try:
        stack = CovariateStack(bands=tuple(names),
                               values=np.stack(layers, axis=2))
    except ValidationError as e:
        raise LoadError(manifest_path, str(e)) from e
    logger.info('Loaded %dx%d stack with bands %s from %s',
                width, height, ', '.join(names), manifest_path)
    return stack


def save_stack(stack: CovariateStack, manifest_path: PathLike) -> None:
    """
    Write covariates as a band manifest.

    :param stack: Covariates
    :param manifest_path: Manifest path
    """
    write_manifest(manifest_path, {b: stack.values[:, :, i]
                                   for i, b in enumerate(stack.bands)})


def read_csv(path: PathLike,
             columns: List[str],
             dtypes: Mapping[str, Any]) -> pd.DataFrame:
    """
    Read a CSV file with an exact header.

    :param path: CSV path
    :param columns: Expected header
    :param dtypes: Column types
    :return: Data frame
    """
    try:
        frame = pd.read_csv(path, dtype=dict(dtypes), keep_default_na=False)
    except FileNotFoundError as e:
        raise LoadError(path, 'no such file') from e
    except (ValueError, pd.errors.ParserError) as e:
        raise LoadError(path, f'cannot parse: {e}') from e
    if list(frame.columns) != columns:
        raise LoadError(path, f'header must be {",".join(columns)}, got '
                        f'{",".join(map(str, frame.columns))}')
    return frame


def load_zones(zones_path: PathLike,
               hierarchy_path: Optional[PathLike] = None) -> ZoneMap:
    """
    Load pixel membership and hierarchy.

    :param zones_path: ``unit_id,x,y,weight`` CSV
    :param hierarchy_path: ``unit_id,superunit_id`` CSV, each unit is its
        own superunit if ``None``
    :return: Zone map
    """
    frame = read_csv(zones_path, _ZONE_COLUMNS,
                     {'unit_id': str, 'x': np.int64, 'y': np.int64,
                      'weight': np.float64})
    hierarchy = None
    if hierarchy_path is not None:
        tree = read_csv(hierarchy_path, _HIERARCHY_COLUMNS,
                        {'unit_id': str, 'superunit_id': str})
        duplicated = tree['unit_id'][tree['unit_id'].duplicated()]
        if len(duplicated):
            raise LoadError(hierarchy_path, f'units listed twice: '
                            f'{format_ids(duplicated)}')
        hierarchy = dict(zip(tree['unit_id'], tree['superunit_id']))
    entries = list(zip(frame['unit_id'], frame['x'].tolist(),
                       frame['y'].tolist(), frame['weight'].tolist()))
    try:
        zone = ZoneMap.from_entries(entries, hierarchy)
    except ValidationError as e:
        raise LoadError(zones_path, str(e)) from e
    if zone.n_entries != len(frame):
        raise LoadError(zones_path, f'stored {zone.n_entries} of '
                        f'{len(frame)} entries')
    logger.info('Loaded %d memberships of %d units in %d superunits from '
                '%s', zone.n_entries, len(zone.unit_ids),
                len(zone.superunits), zones_path)
    return zone


def save_zones(zone: ZoneMap,
               zones_path: PathLike,
               hierarchy_path: Optional[PathLike] = None) -> None:
    """
    Write pixel membership and hierarchy.

    :param zone: Zone map
    :param zones_path: ``unit_id,x,y,weight`` CSV
    :param hierarchy_path: ``unit_id,superunit_id`` CSV
    """
    frame = pd.DataFrame({
        'unit_id': [zone.unit_ids[i] for i in zone.unit_index],
        'x': zone.x,
        'y': zone.y,
        'weight': zone.weight,
    })
    frame.to_csv(zones_path, index=False, float_format='%.17g')
    if hierarchy_path is not None:
        pd.DataFrame({
            'unit_id': list(zone.unit_ids),
            'superunit_id': [zone.unit_to_superunit[u]
                             for u in zone.unit_ids],
        }).to_csv(hierarchy_path, index=False)


def load_census(path: PathLike) -> CensusTable:
    """
    Load census counts.

    :param path: ``unit_id,population`` CSV
    :return: Census table
    """
    frame = read_csv(path, _CENSUS_COLUMNS,
                     {'unit_id': str, 'population': np.float64})
    duplicated = frame['unit_id'][frame['unit_id'].duplicated()]
    if len(duplicated):
        raise LoadError(path, f'units listed twice: '
                        f'{format_ids(duplicated)}')
    try:
        census = CensusTable(dict(zip(frame['unit_id'],
                                      frame['population'].tolist())))
    except ValidationError as e:
        raise LoadError(path, str(e)) from e
    logger.info('Loaded census of %d units from %s', len(census), path)
    return census


def save_census(census: CensusTable, path: PathLike) -> None:
    """
    Write census counts.

    :param census: Census table
    :param path: ``unit_id,population`` CSV
    """
    pd.DataFrame({
        'unit_id': list(census.counts),
        'population': list(census.counts.values()),
    }).to_csv(path, index=False, float_format='%.17g')
