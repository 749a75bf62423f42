"""Test synthetic world generation."""

from __future__ import annotations

import filecmp
import math
import os
from typing import Any

import numpy as np
import pytest

from pydisagg import ingest, model, serialisation, synth, train
from pydisagg.metrics import Metric
from pydisagg.synth import SynthConfig


def test_constant_density() -> None:
    world = synth.generate(SynthConfig(width=10, height=2, n_bands=2,
                                       n_units=2, n_superunits=1,
                                       true_a=(0.0, 0.0), true_b=math.log(5),
                                       true_c=0.0))
    assert world.zone.unit_ids == ('u0', 'u1')
    assert world.zone.surfaces(world.zone.unit_ids).tolist() == [10.0, 10.0]
    assert world.census['u0'] == pytest.approx(50.0, rel=1e-12)
    assert world.census['u1'] == pytest.approx(50.0, rel=1e-12)


@pytest.mark.parametrize('width, height, n_units, expected', [
    (10, 2, 2, (2, 1)),
    (16, 12, 12, (4, 3)),
    (5, 1, 5, (5, 1)),
], ids=repr)
def test_tiling(width: int, height: int, n_units: int,
                expected: Any) -> None:
    assert synth.tiling(width, height, n_units) == expected


def test_tiling_infeasible() -> None:
    with pytest.raises(synth.SynthError):
        synth.tiling(3, 3, 7)


@pytest.mark.parametrize('kwargs', [
    {'n_units': 4, 'n_superunits': 5},
    {'n_superunits': 0},
    {'width': 2, 'height': 2, 'n_units': 5, 'n_superunits': 1},
    {'n_bands': 2, 'true_a': (1.0,)},
    {'noise_sd': -0.1},
    {'width': 0},
], ids=repr)
def test_config_invalid(kwargs: Any) -> None:
    with pytest.raises(synth.SynthError):
        SynthConfig(**kwargs)


def test_world_layout(small_world: synth.SynthWorld) -> None:
    zone = small_world.zone
    assert zone.unit_ids[:3] == ('u00', 'u01', 'u02')
    assert zone.superunits == ('s0', 's1', 's2', 's3')
    assert zone.units('s0') == ('u00', 'u01', 'u02')
    assert zone.n_entries == 16 * 12
    assert zone.surfaces(zone.unit_ids).tolist() == [16.0] * 12
    ingest.validate_census(small_world.census, zone)
    assert small_world.stack.standardized
    assert not small_world.raw.standardized
    assert small_world.stack.bands == ('band0', 'band1', 'band2')


def test_covariates_standardised(small_world: synth.SynthWorld) -> None:
    values = small_world.stack.values.reshape(-1, 3).astype(np.float64)
    np.testing.assert_allclose(values.mean(axis=0), 0.0, atol=1e-6)
    np.testing.assert_allclose(values.std(axis=0), 1.0, rtol=1e-6)


@pytest.mark.parametrize('loss', [Metric.PPE, Metric.RMSE, Metric.PPSE],
                         ids=repr)
def test_true_params_have_zero_loss(small_world: synth.SynthWorld,
                                    loss: Metric) -> None:
    value = train.objective(small_world.params, small_world.stack,
                            small_world.zone, small_world.census,
                            small_world.zone.unit_ids, loss)
    assert value == pytest.approx(0.0, abs=1e-9)


def test_seeded(small_world: synth.SynthWorld) -> None:
    again = synth.generate(SynthConfig(width=16, height=12, n_bands=3,
                                       n_units=12, n_superunits=4, seed=7))
    np.testing.assert_array_equal(again.raw.values, small_world.raw.values)
    assert again.params == small_world.params
    assert again.census == small_world.census
    other = synth.generate(SynthConfig(width=16, height=12, n_bands=3,
                                       n_units=12, n_superunits=4, seed=8))
    assert other.census != small_world.census


def test_noise(small_world: synth.SynthWorld) -> None:
    noisy = synth.generate(SynthConfig(width=16, height=12, n_bands=3,
                                       n_units=12, n_superunits=4, seed=7,
                                       noise_sd=0.1))
    assert noisy.params == small_world.params
    units = small_world.zone.unit_ids
    ratios = (noisy.census.values(units)
              / small_world.census.values(units))
    assert (ratios != 1.0).all()
    assert (ratios > 0).all()


def test_fractional_border() -> None:
    world = synth.generate(SynthConfig(width=6, height=4, n_bands=1,
                                       n_units=2, n_superunits=2,
                                       fractional_border=True))
    zone = world.zone
    assert zone.unit_ids == ('u0', 'u1')
    entries = zone.entries()
    shared = [(u, x, y, w) for u, x, y, w in entries if x == 2]
    assert sorted(u for u, *_ in shared) == ['u0'] * 4 + ['u1'] * 4
    assert {w for *_, w in shared} == {0.5 * 0.75, 0.5}
    assert math.fsum(zone.surfaces(zone.unit_ids).tolist()) == \
        pytest.approx(6 * 4 - 2 * 6 * 0.25)
    assert min(w for *_, w in entries) < 1
    value = train.objective(world.params, world.stack, zone, world.census,
                            zone.unit_ids, Metric.PPE)
    assert value == pytest.approx(0.0, abs=1e-9)


def test_write_world(tmpdir: Any, small_world: synth.SynthWorld) -> None:
    config = SynthConfig(width=16, height=12, n_bands=3, n_units=12,
                         n_superunits=4, seed=7)
    paths = synth.write_world(small_world, os.path.join(tmpdir, 'world'),
                              config)
    assert set(paths) == {'stack', 'zones', 'hierarchy', 'census', 'truth',
                          'config'}
    truth = model.load_params(paths['truth'])
    assert truth == small_world.params
    assert SynthConfig.from_json(
        serialisation.read_json(paths['config'])) == config

    raw = ingest.load_stack(paths['stack'])
    stack = ingest.apply_stats(raw, truth.stats, truth.bands)
    np.testing.assert_array_equal(stack.values, small_world.stack.values)
    zone = ingest.load_zones(paths['zones'], paths['hierarchy'])
    census = ingest.load_census(paths['census'])
    assert zone.unit_ids == small_world.zone.unit_ids
    assert census == small_world.census
    assert train.objective(truth, stack, zone, census, zone.unit_ids,
                           Metric.RMSE) == pytest.approx(0.0, abs=1e-9)


def test_write_world_reproducible(tmpdir: Any) -> None:
    config = SynthConfig(width=8, height=8, n_bands=2, n_units=4,
                         n_superunits=2, seed=11, noise_sd=0.05)
    first = synth.write_world(synth.generate(config),
                              os.path.join(tmpdir, 'first'), config)
    second = synth.write_world(synth.generate(config),
                               os.path.join(tmpdir, 'second'), config)
    assert sorted(os.listdir(os.path.join(tmpdir, 'first'))) == \
        sorted(os.listdir(os.path.join(tmpdir, 'second')))
    for name in os.listdir(os.path.join(tmpdir, 'first')):
        assert filecmp.cmp(os.path.join(tmpdir, 'first', name),
                           os.path.join(tmpdir, 'second', name),
                           shallow=False), name
    assert 'config' in first and 'config' in second


def test_write_world_without_config(tmpdir: Any,
                                    small_world: synth.SynthWorld) -> None:
    paths = synth.write_world(small_world, tmpdir)
    assert 'config' not in paths
    assert not os.path.exists(os.path.join(tmpdir, 'config.json'))
