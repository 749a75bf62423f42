"""
The LinExp pixel model and unit-level predictions.

A pixel with standardised covariates ``x`` is predicted to hold a
population density of ``max(0, exp(a . x + b) + c)`` people per full
pixel. A unit is predicted to hold the weighted sum of the densities of
its pixels, each weighted by the covered fraction of the pixel.
"""

from __future__ import annotations

__all__ = ('aggregate', 'areal_weighting', 'ArealWeightingError',
           'calibrate', 'calibration_factor', 'CalibrationError',
           'CalibrationFactor', 'CalibrationPolicy', 'design',
           'DimensionMismatch', 'importance', 'linexp_pixel',
           'LinExpParams', 'load_params', 'load_raster',
           'load_unit_predictions', 'MAX_EXPONENT', 'mean_ratio_factor',
           'ModelOverflow', 'predict_raster', 'predict_units',
           'PredictionRaster', 'save_params', 'save_raster',
           'save_unit_predictions', 'UnitDesign', 'UnitPredictions')

from collections.abc import Mapping as MappingABC
import dataclasses
from enum import Enum
import logging
import math
from typing import (Any, Iterable, Iterator, List, Mapping, NamedTuple,
                    Optional, Sequence, Tuple)

import numpy as np
import pandas as pd

from pydisagg import ingest, serialisation
from pydisagg.ingest import (BandStats, CensusTable, CovariateStack,
                             PathLike, ValidationError, ZoneMap)
from pydisagg.utils import DisaggError, format_ids

logger = logging.getLogger(__name__)

MAX_EXPONENT = 700.0
RASTER_BAND = 'population'

_PREDICTION_COLUMNS = ['unit_id', 'prediction']


class ModelOverflow(DisaggError, OverflowError):
    """Thrown when the model exponent leaves the safe range."""

    def __init__(self,
                 exponent: float,
                 pixel: Optional[Tuple[int, int]] = None) -> None:
        """
        Initialise error with debugging information.

        :param exponent: Offending value of ``a . x + b``
        :param pixel: Offending pixel ``(x, y)``, if known
        """
        self.exponent = exponent
        self.pixel = pixel
        where = f' at pixel {pixel}' if pixel is not None else ''
        super().__init__(f'Model exponent {exponent:.6g} exceeds '
                         f'{MAX_EXPONENT:g}{where}, training diverged?')


class DimensionMismatch(DisaggError, ValueError):
    """Thrown when parameters and covariates disagree on bands."""


class ArealWeightingError(DisaggError, ValueError):
    """Thrown when a populated unit has no surface to spread onto."""

    def __init__(self, unit_ids: Sequence[str]) -> None:
        """
        Initialise error with debugging information.

        :param unit_ids: Populated units without surface
        """
        self.unit_ids = tuple(unit_ids)
        super().__init__(f'Populated units without surface: '
                         f'{format_ids(unit_ids)}')


class CalibrationError(DisaggError, ValueError):
    """Thrown when no calibration factor can be computed."""


class CalibrationPolicy(Enum):
    """Which mean-ratio factor a calibration applies."""

    NONE = 'none'
    CORRECTIVE = 'corrective'
    LITERAL = 'literal'


@dataclasses.dataclass(frozen=True, eq=False)
class LinExpParams(serialisation.JSONMixin):
    """
    Parameters of ``max(0, exp(a . x + b) + c)``.

    When `bands` is set, the parameters are bound to covariates with
    these bands, standardised with `stats` if those are set too.
    """

    a: np.ndarray
    b: float
    c: float
    bands: Optional[Tuple[str, ...]] = None
    stats: Optional[Tuple[BandStats, ...]] = None

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=np.float64)
        if a.ndim != 1:
            raise DimensionMismatch(f'a must be a vector, got shape '
                                    f'{a.shape}')
        a.flags.writeable = False
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', float(self.b))
        object.__setattr__(self, 'c', float(self.c))
        if not (np.isfinite(a).all() and math.isfinite(self.b)
                and math.isfinite(self.c)):
            raise ValidationError('LinExp parameters must be finite')
        if self.bands is not None:
            bands = tuple(self.bands)
            if len(bands) != len(a):
                raise DimensionMismatch(f'{len(a)} weights for '
                                        f'{len(bands)} bands')
            object.__setattr__(self, 'bands', bands)
        if self.stats is not None:
            stats = tuple(BandStats(float(m), float(s))
                          for m, s in self.stats)
            if len(stats) != len(a):
                raise DimensionMismatch(f'{len(a)} weights for '
                                        f'{len(stats)} band stats')
            object.__setattr__(self, 'stats', stats)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinExpParams):
            return NotImplemented
        return (np.array_equal(self.a, other.a) and self.b == other.b
                and self.c == other.c and self.bands == other.bands
                and self.stats == other.stats)

    def __repr__(self) -> str:
        return (f'LinExpParams(a={self.a.tolist()!r}, b={self.b!r}, '
                f'c={self.c!r})')

    @classmethod
    def initial(cls,
                n_bands: int,
                b: float = -4.0,
                c: float = 0.0,
                bands: Optional[Sequence[str]] = None) -> LinExpParams:
        """
        Parameters with ``a = 0``.

        :param n_bands: Number of bands
        :param b: Offset inside the exponential
        :param c: Offset outside the exponential
        :param bands: Band names to bind to
        :return: Parameters
        """
        return cls(a=np.zeros(n_bands), b=b, c=c,
                   bands=None if bands is None else tuple(bands))

    def vector(self) -> np.ndarray:
        """
        Flatten to ``[a..., b, c]``.

        :return: Parameter vector
        """
        return np.concatenate((self.a, [self.b, self.c]))

    def with_vector(self, theta: np.ndarray) -> LinExpParams:
        """
        Replace values from a ``[a..., b, c]`` vector.

        :param theta: Parameter vector
        :return: Parameters, band binding kept
        """
        theta = np.asarray(theta, dtype=np.float64)
        if len(theta) != len(self.a) + 2:
            raise DimensionMismatch(f'Vector of {len(theta)} values for '
                                    f'{len(self.a)} bands')
        return dataclasses.replace(self, a=theta[:-2], b=theta[-2],
                                   c=theta[-1])

    def check_bands(self, bands: Sequence[str]) -> None:
        """
        Ensure covariate bands match these parameters.

        :param bands: Covariate band names
        """
        bands = tuple(bands)
        if self.bands is not None:
            for i, (mine, theirs) in enumerate(zip(self.bands, bands)):
                if mine != theirs:
                    raise DimensionMismatch(f'Band {i} is {theirs!r}, '
                                            f'parameters expect {mine!r}')
        if len(bands) != len(self.a):
            raise DimensionMismatch(f'{len(bands)} bands, parameters '
                                    f'expect {len(self.a)}')

    @classmethod
    def from_json(cls, json: Mapping[str, Any]) -> LinExpParams:
        """
        Load parameters, band binding included.

        :param json: Parsed JSON
        :return: Parameters
        """
        bands = json.get('bands')
        stats = json.get('stats')
        return cls(a=json['a'], b=json['b'], c=json['c'],
                   bands=None if bands is None else tuple(bands),
                   stats=None if stats is None else tuple(map(tuple, stats)))


def save_params(params: LinExpParams, path: PathLike) -> None:
    """
    Write parameters as JSON.

    :param params: Parameters
    :param path: Output path
    """
    serialisation.write_json(path, params)


def load_params(path: PathLike) -> LinExpParams:
    """
    Read parameters written by `save_params`.

    :param path: Input path
    :return: Parameters
    """
    try:
        json = serialisation.read_json(path)
    except FileNotFoundError as e:
        raise ingest.LoadError(path, 'no such file') from e
    except ValueError as e:
        raise ingest.LoadError(path, f'invalid JSON: {e}') from e
    try:
        return LinExpParams.from_json(json)
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise ingest.LoadError(path, f'malformed parameters: {e!r}') from e


def linexp_pixel(params: LinExpParams, covariates: Sequence[float]) -> float:
    """
    Population density of one pixel.

    :param params: Model parameters
    :param covariates: Standardised covariates of the pixel
    :return: ``max(0, exp(a . x + b) + c)``
    """
    x = np.asarray(covariates, dtype=np.float64)
    if x.shape != params.a.shape:
        raise DimensionMismatch(f'{x.size} covariates for '
                                f'{params.a.size} weights')
    if not np.isfinite(x).all():
        raise ValidationError('Covariates must be finite')
    z = float(np.dot(params.a, x)) + params.b
    if z > MAX_EXPONENT:
        raise ModelOverflow(z)
    return max(0.0, math.exp(z) + params.c)


def _densities(params: LinExpParams,
               covariates: np.ndarray,
               x: np.ndarray,
               y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Densities, exponentials and unclamped mask of many pixels."""
    z = covariates @ params.a + params.b
    over = z > MAX_EXPONENT
    if over.any():
        i = int(np.argmax(over))
        raise ModelOverflow(float(z[i]), (int(x[i]), int(y[i])))
    exp_z = np.exp(z)
    raw = exp_z + params.c
    active = raw > 0
    return np.where(active, raw, 0.0), exp_z, active


@dataclasses.dataclass(frozen=True, eq=False)
class UnitDesign:
    """
    Memberships of some units, with the covariates of their pixels.

    Gathering the covariates once lets training evaluate the model on
    every membership at each iteration without touching the raster.
    """

    unit_ids: Tuple[str, ...]
    unit_index: np.ndarray
    weight: np.ndarray
    x: np.ndarray
    y: np.ndarray
    covariates: np.ndarray

    @property
    def n_units(self) -> int:
        """Number of units."""
        return len(self.unit_ids)

    def densities(self, params: LinExpParams
                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Evaluate the model on every membership.

        :param params: Model parameters
        :return: Densities, ``exp(a . x + b)``, and unclamped mask
        """
        return _densities(params, self.covariates, self.x, self.y)

    def totals(self, densities: np.ndarray) -> np.ndarray:
        """
        Weighted sums of membership densities per unit.

        :param densities: One density per membership
        :return: One total per unit, in `unit_ids` order
        """
        return np.bincount(self.unit_index, weights=self.weight * densities,
                           minlength=self.n_units)

    def predict(self, params: LinExpParams) -> np.ndarray:
        """
        Predicted population of every unit.

        :param params: Model parameters
        :return: One prediction per unit, in `unit_ids` order
        """
        return self.totals(self.densities(params)[0])


def design(stack: CovariateStack,
           zone: ZoneMap,
           unit_ids: Iterable[str]) -> UnitDesign:
    """
    Gather memberships and covariates of some units.

    :param stack: Covariates
    :param zone: Zone map
    :param unit_ids: Units to gather
    :return: Unit design
    """
    unit_ids = tuple(unit_ids)
    positions = zone.index_of(unit_ids)
    zone.check_grid(stack.width, stack.height)
    local = np.full(len(zone.unit_ids), -1, dtype=np.int64)
    local[positions] = np.arange(len(unit_ids))
    selected = local[zone.unit_index] >= 0
    x, y = zone.x[selected], zone.y[selected]
    return UnitDesign(unit_ids=unit_ids,
                      unit_index=local[zone.unit_index[selected]],
                      weight=zone.weight[selected],
                      x=x,
                      y=y,
                      covariates=stack.values[y, x].astype(np.float64))


@dataclasses.dataclass(frozen=True, eq=False)
class UnitPredictions(MappingABC):
    """Predicted population by unit."""

    unit_ids: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        unit_ids = tuple(self.unit_ids)
        if values.shape != (len(unit_ids),):
            raise DimensionMismatch(f'{values.size} predictions for '
                                    f'{len(unit_ids)} units')
        if not (np.isfinite(values).all() and (values >= 0).all()):
            raise ValidationError('Unit predictions must be finite and '
                                  'non-negative')
        values.flags.writeable = False
        object.__setattr__(self, 'unit_ids', unit_ids)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, '_index',
                           {u: i for i, u in enumerate(unit_ids)})

    def __getitem__(self, unit_id: str) -> float:
        try:
            return float(self.values[self._index[unit_id]])
        except KeyError:
            raise ingest.ZoneError(unit_id) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self.unit_ids)

    def __len__(self) -> int:
        return len(self.unit_ids)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> UnitPredictions:
        """
        Build from a plain mapping.

        :param mapping: Prediction by unit id
        :return: Unit predictions
        """
        return cls(tuple(mapping), np.array(list(mapping.values()),
                                            dtype=np.float64))

    def array(self, unit_ids: Iterable[str]) -> np.ndarray:
        """
        Predictions of several units.

        :param unit_ids: Unit ids
        :return: Predictions, in the order given
        """
        return np.array([self[u] for u in unit_ids], dtype=np.float64)


def predict_units(params: LinExpParams,
                  stack: CovariateStack,
                  zone: ZoneMap,
                  unit_ids: Iterable[str]) -> UnitPredictions:
    """
    Predicted population of some units.

    :param params: Model parameters
    :param stack: Standardised covariates
    :param zone: Zone map
    :param unit_ids: Units to predict
    :return: Weighted sum of pixel densities per unit
    """
    if not stack.standardized:
        raise DimensionMismatch('Covariates must be standardised')
    params.check_bands(stack.bands)
    unit_design = design(stack, zone, unit_ids)
    return UnitPredictions(unit_design.unit_ids,
                           unit_design.predict(params))


@dataclasses.dataclass(frozen=True, eq=False)
class PredictionRaster:
    """
    Population predicted on the pixel grid.

    `values` holds one value per pixel, ``NaN`` where absent. When
    `entry_values` is set, it holds one density per membership of the
    zone map the raster was built against, and unit totals are taken
    from it rather than from `values`. It is saved and loaded with the
    raster.
    """

    values: np.ndarray
    entry_values: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch(f'Raster must be (height, width), got '
                                    f'shape {values.shape}')
        present = ~np.isnan(values)
        if not (np.isfinite(values[present]).all()
                and (values[present] >= 0).all()):
            raise ValidationError('Raster values must be finite and '
                                  'non-negative')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        if self.entry_values is not None:
            entry_values = np.array(self.entry_values, dtype=np.float64)
            if entry_values.ndim != 1:
                raise DimensionMismatch(f'Membership values must be a '
                                        f'vector, got shape '
                                        f'{entry_values.shape}')
            if not (np.isfinite(entry_values).all()
                    and (entry_values >= 0).all()):
                raise ValidationError('Membership values must be finite '
                                      'and non-negative')
            entry_values.flags.writeable = False
            object.__setattr__(self, 'entry_values', entry_values)

    @property
    def width(self) -> int:
        """Pixel count along x."""
        return self.values.shape[1]

    @property
    def height(self) -> int:
        """Pixel count along y."""
        return self.values.shape[0]

    @property
    def present(self) -> np.ndarray:
        """Mask of pixels with a value."""
        return ~np.isnan(self.values)

    def total(self) -> float:
        """Sum of present values."""
        return math.fsum(self.values[self.present].tolist())

    def membership_values(self, zone: ZoneMap) -> np.ndarray:
        """
        Density of every membership of a zone map.

        :param zone: Zone map
        :return: One density per membership
        """
        zone.check_grid(self.width, self.height)
        if self.entry_values is not None:
            if len(self.entry_values) != zone.n_entries:
                raise ValidationError(f'Raster carries '
                                      f'{len(self.entry_values)} membership '
                                      f'values, zone map has '
                                      f'{zone.n_entries} memberships')
            return self.entry_values
        values = self.values[zone.y, zone.x]
        absent = np.isnan(values)
        if absent.any():
            i = int(np.argmax(absent))
            raise ValidationError(f'Raster has no value at zoned pixel '
                                  f'({zone.x[i]}, {zone.y[i]})')
        return values


def predict_raster(params: LinExpParams,
                   stack: CovariateStack,
                   zone: ZoneMap) -> PredictionRaster:
    """
    Predicted density of every zoned pixel.

    :param params: Model parameters
    :param stack: Standardised covariates
    :param zone: Zone map, pixels outside every unit are absent
    :return: Prediction raster
    """
    if not stack.standardized:
        raise DimensionMismatch('Covariates must be standardised')
    params.check_bands(stack.bands)
    zone.check_grid(stack.width, stack.height)
    mask = zone.pixel_mask(stack.width, stack.height)
    y, x = np.nonzero(mask)
    densities = _densities(params, stack.values[y, x].astype(np.float64),
                           x, y)[0]
    values = np.full((stack.height, stack.width), np.nan)
    values[y, x] = densities
    logger.info('Predicted %d pixels, total density %.6g', len(densities),
                math.fsum(densities.tolist()))
    return PredictionRaster(values)


def aggregate(raster: PredictionRaster,
              zone: ZoneMap,
              unit_ids: Optional[Iterable[str]] = None) -> UnitPredictions:
    """
    Unit totals of a prediction raster.

    :param raster: Prediction raster
    :param zone: Zone map
    :param unit_ids: Units to aggregate, all if ``None``
    :return: Weighted sum of membership values per unit
    """
    unit_ids = zone.unit_ids if unit_ids is None else tuple(unit_ids)
    positions = zone.index_of(unit_ids)
    totals = np.bincount(zone.unit_index,
                         weights=zone.weight * raster.membership_values(zone),
                         minlength=len(zone.unit_ids))
    return UnitPredictions(unit_ids, totals[positions])


def areal_weighting(census: CensusTable,
                    zone: ZoneMap,
                    shape: Optional[Tuple[int, int]] = None
                    ) -> PredictionRaster:
    """
    Spread each unit's census over its pixels in proportion to weights.

    Pixel values are masses: pixel ``p`` receives
    ``sum(p_w * census(u) / surface(u))`` over the units containing it.
    Unit totals come from the membership densities
    ``census(u) / surface(u)`` carried along, so they stay exact after
    `save_raster` and `load_raster`.

    :param census: Census table
    :param zone: Zone map
    :param shape: Grid ``(height, width)``, smallest fitting grid if
        ``None``
    :return: Prediction raster
    """
    if shape is None:
        shape = ((int(zone.y.max()) + 1, int(zone.x.max()) + 1)
                 if zone.n_entries else (0, 0))
    height, width = shape
    zone.check_grid(width, height)
    counts = census.values(zone.unit_ids)
    surfaces = zone.surfaces(zone.unit_ids)
    empty = (surfaces == 0) & (counts > 0)
    if empty.any():
        raise ArealWeightingError([u for u, e in zip(zone.unit_ids, empty)
                                   if e])
    density = np.divide(counts, surfaces, out=np.zeros_like(counts),
                        where=surfaces > 0)
    entry_values = density[zone.unit_index]
    values = np.full((height, width), np.nan)
    flat = zone.y * width + zone.x
    masses = np.bincount(flat, weights=zone.weight * entry_values,
                         minlength=width * height).reshape(height, width)
    mask = zone.pixel_mask(width, height)
    values[mask] = masses[mask]
    return PredictionRaster(values, entry_values)


class CalibrationFactor(NamedTuple):
    """Mean ratio of predictions to census."""

    literal: float
    corrective: float
    n_units: int
    excluded_units: int

    def factor(self, policy: CalibrationPolicy) -> float:
        """
        Factor applied under a policy.

        :param policy: Calibration policy
        :return: Multiplicative factor
        """
        if policy is CalibrationPolicy.LITERAL:
            return self.literal
        if policy is CalibrationPolicy.CORRECTIVE:
            return self.corrective
        return 1.0


def mean_ratio_factor(preds: Mapping[str, float],
                      census: CensusTable) -> CalibrationFactor:
    """
    Mean ratio of predicted to counted population.

    Units counting zero people are left out.

    :param preds: Predictions of the units to average over
    :param census: Census table
    :return: Literal mean ratio and its reciprocal
    """
    ratios = []
    excluded = []
    for unit in preds:
        count = census[unit]
        if count > 0:
            ratios.append(preds[unit] / count)
        else:
            excluded.append(unit)
    if excluded:
        logger.warning('Calibration leaves out %d units with zero census: '
                       '%s', len(excluded), format_ids(excluded))
    if not ratios:
        raise CalibrationError('No unit with a positive census')
    literal = math.fsum(ratios) / len(ratios)
    if not literal > 0:
        raise CalibrationError('Predictions are all zero, no factor can '
                               'correct them')
    return CalibrationFactor(literal, 1.0 / literal, len(ratios),
                             len(excluded))


def calibrate(params: LinExpParams, factor: float) -> LinExpParams:
    """
    Scale a LinExp model by a positive factor.

    ``k * max(0, exp(z) + c) == max(0, exp(z + ln k) + k * c)``, so the
    scaled model is LinExp again.

    :param params: Model parameters
    :param factor: Positive factor
    :return: Scaled parameters
    """
    if not (math.isfinite(factor) and factor > 0):
        raise CalibrationError(f'Factor must be positive, got {factor!r}')
    return dataclasses.replace(params, b=params.b + math.log(factor),
                               c=params.c * factor)


def calibration_factor(params: LinExpParams,
                       stack: CovariateStack,
                       zone: ZoneMap,
                       census: CensusTable,
                       unit_ids: Iterable[str],
                       policy: CalibrationPolicy) -> float:
    """
    Factor a calibration policy applies to a trained model.

    :param params: Model parameters
    :param stack: Standardised covariates
    :param zone: Zone map
    :param census: Census table
    :param unit_ids: Units the factor is estimated on
    :param policy: Calibration policy
    :return: Multiplicative factor
    """
    if policy is CalibrationPolicy.NONE:
        return 1.0
    found = mean_ratio_factor(predict_units(params, stack, zone, unit_ids),
                              census)
    logger.info('Mean prediction/census ratio %.6g over %d units, applying '
                '%s factor', found.literal, found.n_units, policy.value)
    return found.factor(policy)


def importance(params: LinExpParams,
               bands: Optional[Sequence[str]] = None
               ) -> List[Tuple[str, float]]:
    """
    Covariates ranked by the magnitude of their weight.

    On standardised covariates, a weight's magnitude is the covariate's
    contribution and its sign the direction of the effect.

    :param params: Model parameters
    :param bands: Band names, the parameters' own if ``None``
    :return: ``(band, weight)`` pairs, largest magnitude first
    """
    bands = params.bands if bands is None else tuple(bands)
    if bands is None:
        bands = tuple(f'band{i}' for i in range(len(params.a)))
    if len(bands) != len(params.a):
        raise DimensionMismatch(f'{len(bands)} bands for {len(params.a)} '
                                f'weights')
    ranked = sorted(zip(bands, params.a.tolist()),
                    key=lambda item: -abs(item[1]))
    return ranked


def save_raster(raster: PredictionRaster, manifest_path: PathLike) -> None:
    """
    Write a prediction raster as a single-band manifest.

    Absent pixels are written as ``NaN``. Membership values, when the
    raster has them, are written alongside in full precision.

    :param raster: Prediction raster
    :param manifest_path: Manifest path
    """
    ingest.write_manifest(manifest_path, {RASTER_BAND: raster.values},
                          entries=raster.entry_values)


def load_raster(manifest_path: PathLike) -> PredictionRaster:
    """
    Read a prediction raster written by `save_raster`.

    :param manifest_path: Manifest path
    :return: Prediction raster, ``NaN`` pixels absent
    """
    manifest = ingest.read_manifest(manifest_path)
    if len(manifest['bands']) != 1:
        raise ingest.LoadError(manifest_path, f'expected one band, got '
                               f'{len(manifest["bands"])}')
    band = manifest['bands'][0]
    if band['name'] != RASTER_BAND:
        logger.warning('Reading band %r of %s as %r', band['name'],
                       manifest_path, RASTER_BAND)
    values = ingest.read_band(band['file'], band['name'],
                              manifest['width'], manifest['height'])
    entries = manifest['entries']
    entry_values = None
    if entries is not None:
        entry_values = ingest.read_entries(entries['file'], entries['count'])
    try:
        return PredictionRaster(values, entry_values)
    except ValueError as e:
        raise ingest.LoadError(band['file'], str(e),
                               band=band['name']) from e


def save_unit_predictions(preds: Mapping[str, float], path: PathLike) -> None:
    """
    Write unit predictions as ``unit_id,prediction`` CSV.

    :param preds: Predicted population by unit
    :param path: Output path
    """
    pd.DataFrame({
        'unit_id': list(preds),
        'prediction': [preds[u] for u in preds],
    }).to_csv(path, index=False, float_format='%.17g')


def load_unit_predictions(path: PathLike) -> UnitPredictions:
    """
    Read unit predictions written by `save_unit_predictions`.

    :param path: ``unit_id,prediction`` CSV
    :return: Unit predictions
    """
    frame = ingest.read_csv(path, _PREDICTION_COLUMNS,
                            {'unit_id': str, 'prediction': np.float64})
    duplicated = frame['unit_id'][frame['unit_id'].duplicated()]
    if len(duplicated):
        raise ingest.LoadError(path, f'units listed twice: '
                               f'{format_ids(duplicated)}')
    try:
        return UnitPredictions(tuple(frame['unit_id']),
                               frame['prediction'].to_numpy())
    except ValueError as e:
        raise ingest.LoadError(path, str(e)) from e
