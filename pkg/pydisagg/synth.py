"""
Synthetic worlds with a known LinExp ground truth.

Units are rectangular tiles of the grid, numbered row by row, and
superunits are runs of consecutive tiles. Covariates are independent
standard normal draws, standardised exactly, and every census count is
the prediction of the true parameters (optionally with multiplicative
log-normal noise), so the true parameters have zero loss on a noiseless
world.
"""

from __future__ import annotations

__all__ = ('generate', 'SynthConfig', 'SynthError', 'SynthWorld',
           'tiling', 'write_world')

import dataclasses
import logging
import math
import os
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from pydisagg import ingest, model, serialisation
from pydisagg.ingest import CensusTable, CovariateStack, PathLike, ZoneMap
from pydisagg.model import LinExpParams
from pydisagg.utils import DisaggError

logger = logging.getLogger(__name__)

DEFAULT_TRUE_B = 0.5
TRUE_A_SD = 0.25
BORDER_WEIGHT = 0.75
SHARED_WEIGHT = 0.5


class SynthError(DisaggError, ValueError):
    """Thrown when a world cannot be generated as configured."""


@dataclasses.dataclass(frozen=True)
class SynthConfig(serialisation.JSONMixin):
    """Shape and ground truth of a synthetic world."""

    width: int = 64
    height: int = 64
    n_bands: int = 5
    n_units: int = 40
    n_superunits: int = 8
    seed: int = 0
    true_a: Optional[Tuple[float, ...]] = None
    true_b: Optional[float] = None
    true_c: Optional[float] = None
    noise_sd: float = 0.0
    fractional_border: bool = False

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise SynthError(f'Grid must not be empty, got '
                             f'{self.width}x{self.height}')
        if self.n_bands < 1:
            raise SynthError('At least one band is required')
        if not 1 <= self.n_superunits <= self.n_units:
            raise SynthError(f'Need 1 <= superunits <= units, got '
                             f'{self.n_superunits} superunits for '
                             f'{self.n_units} units')
        if self.n_units > self.width * self.height:
            raise SynthError(f'{self.n_units} units do not fit '
                             f'{self.width * self.height} pixels')
        if not self.noise_sd >= 0:
            raise SynthError(f'noise_sd must be non-negative, got '
                             f'{self.noise_sd!r}')
        if self.true_a is not None:
            true_a = tuple(float(v) for v in self.true_a)
            if len(true_a) != self.n_bands:
                raise SynthError(f'{len(true_a)} true weights for '
                                 f'{self.n_bands} bands')
            object.__setattr__(self, 'true_a', true_a)


class SynthWorld(NamedTuple):
    """A generated world; `raw` holds the covariates before scaling."""

    stack: CovariateStack
    zone: ZoneMap
    census: CensusTable
    params: LinExpParams
    raw: CovariateStack


def tiling(width: int, height: int, n_units: int) -> Tuple[int, int]:
    """
    Tile counts along x and y.

    Picks the factorisation of `n_units` whose tiles are closest to
    square.

    :param width: Grid width
    :param height: Grid height
    :param n_units: Number of tiles
    :return: ``(nx, ny)``
    """
    candidates = [(nx, n_units // nx) for nx in range(1, n_units + 1)
                  if n_units % nx == 0]
    feasible = [(nx, ny) for nx, ny in candidates
                if nx <= width and ny <= height]
    if not feasible:
        raise SynthError(f'Cannot tile {width}x{height} pixels into '
                         f'{n_units} rectangles')
    return min(feasible, key=lambda t: (abs(math.log((width / t[0])
                                                     / (height / t[1]))),
                                        t[0]))


def _zone(config: SynthConfig) -> ZoneMap:
    nx, ny = tiling(config.width, config.height, config.n_units)
    columns = np.array_split(np.arange(config.width), nx)
    rows = np.array_split(np.arange(config.height), ny)
    digits = len(str(config.n_units - 1))
    unit_ids = [f'u{i:0{digits}d}' for i in range(config.n_units)]

    entries: List[Tuple[str, int, int, float]] = []
    for j, ys in enumerate(rows):
        for i, xs in enumerate(columns):
            unit = unit_ids[j * nx + i]
            for y in ys.tolist():
                for x in xs.tolist():
                    weight = 1.0
                    if config.fractional_border:
                        if y in (0, config.height - 1):
                            weight *= BORDER_WEIGHT
                        if i + 1 < nx and x == xs[-1]:
                            weight *= SHARED_WEIGHT
                            entries.append((unit_ids[j * nx + i + 1], x, y,
                                            weight))
                    entries.append((unit, x, y, weight))

    groups = np.array_split(np.arange(config.n_units), config.n_superunits)
    digits = len(str(config.n_superunits - 1))
    hierarchy: Dict[str, str] = {}
    for s, members in enumerate(groups):
        for i in members.tolist():
            hierarchy[unit_ids[i]] = f's{s:0{digits}d}'
    return ZoneMap.from_entries(entries, hierarchy)


def generate(config: Optional[SynthConfig] = None) -> SynthWorld:
    """
    Generate a world.

    :param config: World configuration, defaults if ``None``
    :return: Standardised covariates, zone map, census, true parameters
    """
    config = config or SynthConfig()
    rng = np.random.default_rng(config.seed)
    bands = tuple(f'band{i}' for i in range(config.n_bands))
    raw = CovariateStack(
        bands=bands,
        values=rng.standard_normal(
            (config.height, config.width, config.n_bands)
        ).astype(np.float32))
    stack = ingest.standardize(raw)

    if config.true_a is None:
        true_a = rng.normal(0.0, TRUE_A_SD, config.n_bands)
    else:
        true_a = np.array(config.true_a)
    params = LinExpParams(
        a=true_a,
        b=DEFAULT_TRUE_B if config.true_b is None else config.true_b,
        c=0.0 if config.true_c is None else config.true_c,
        bands=bands,
        stats=stack.stats)

    zone = _zone(config)
    counts = model.predict_units(params, stack, zone, zone.unit_ids).values
    if config.noise_sd > 0:
        counts = counts * np.exp(rng.normal(0.0, config.noise_sd,
                                            len(counts)))
    census = CensusTable(dict(zip(zone.unit_ids, counts.tolist())))
    logger.info('Generated %dx%d world, %d units in %d superunits, total '
                'population %.6g', config.width, config.height,
                len(zone.unit_ids), len(zone.superunits),
                math.fsum(counts.tolist()))
    return SynthWorld(stack, zone, census, params, raw)


def write_world(world: SynthWorld,
                directory: PathLike,
                config: Optional[SynthConfig] = None) -> Dict[str, str]:
    """
    Write a world in the ingest file formats.

    Writes ``stack.json`` (raw covariates and their band files),
    ``zones.csv``, ``hierarchy.csv``, ``census.csv``, ``truth.json`` holding
    the true parameters in the format of `model.save_params` and
    ``config.json`` when a configuration is given.

    :param world: Generated world
    :param directory: Output directory, created if missing
    :param config: Configuration to record
    :return: Written paths by role
    """
    os.makedirs(directory, exist_ok=True)
    paths = {role: os.path.join(directory, name) for role, name in (
        ('stack', 'stack.json'),
        ('zones', 'zones.csv'),
        ('hierarchy', 'hierarchy.csv'),
        ('census', 'census.csv'),
        ('truth', 'truth.json'),
        ('config', 'config.json'),
    )}
    ingest.save_stack(world.raw, paths['stack'])
    ingest.save_zones(world.zone, paths['zones'], paths['hierarchy'])
    ingest.save_census(world.census, paths['census'])
    model.save_params(world.params, paths['truth'])
    if config is None:
        del paths['config']
    else:
        serialisation.write_json(paths['config'], config)
    logger.info('Wrote world to %s', directory)
    return paths
