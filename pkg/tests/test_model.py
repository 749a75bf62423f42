"""Test the LinExp pixel model and unit predictions."""

from __future__ import annotations

import math
import os
from typing import Any, Sequence

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from pydisagg import ingest, model, redistribute, serialisation
from pydisagg.ingest import CensusTable, CovariateStack, ZoneMap
from pydisagg.model import (CalibrationPolicy, LinExpParams, PredictionRaster,
                            UnitPredictions)
from tests.conftest import TABLE1

_FINITE = st.floats(min_value=-5, max_value=5)


@pytest.mark.parametrize('a, b, c, x, expected', [
    ([0.0], math.log(5), 0.0, [3.0], 5.0),
    ([1.0, -1.0], 0.0, 0.0, [2.0, 2.0], 1.0),
    ([0.0], 0.0, -2.0, [0.0], 0.0),
    ([0.0], 0.0, -1.0, [0.0], 0.0),
    ([2.0], 1.0, 0.5, [0.5], math.exp(2) + 0.5),
], ids=repr)
def test_linexp_pixel(a: Sequence[float], b: float, c: float,
                      x: Sequence[float], expected: float) -> None:
    params = LinExpParams(a=a, b=b, c=c)
    assert model.linexp_pixel(params, x) == pytest.approx(expected,
                                                          rel=1e-12)


@settings(max_examples=200)
@given(st.lists(_FINITE, min_size=1, max_size=4), _FINITE,
       st.floats(min_value=-100, max_value=100), st.data())
def test_linexp_pixel_non_negative(a: Sequence[float], b: float, c: float,
                                   data: Any) -> None:
    x = data.draw(st.lists(_FINITE, min_size=len(a), max_size=len(a)))
    value = model.linexp_pixel(LinExpParams(a=a, b=b, c=c), x)
    assert value >= 0
    assert math.isfinite(value)


def test_linexp_pixel_overflow() -> None:
    with pytest.raises(model.ModelOverflow) as info:
        model.linexp_pixel(LinExpParams(a=[1.0], b=1.0, c=0.0), [700.0])
    assert info.value.exponent == 701.0


def test_linexp_pixel_dimension() -> None:
    with pytest.raises(model.DimensionMismatch):
        model.linexp_pixel(LinExpParams(a=[1.0, 2.0], b=0, c=0), [1.0])


@pytest.mark.parametrize('kwargs', [
    {'a': [[1.0]], 'b': 0, 'c': 0},
    {'a': [1.0], 'b': math.nan, 'c': 0},
    {'a': [1.0], 'b': 0, 'c': 0, 'bands': ('x', 'y')},
    {'a': [1.0], 'b': 0, 'c': 0, 'stats': ((0, 1), (0, 1))},
], ids=repr)
def test_params_invalid(kwargs: Any) -> None:
    with pytest.raises(ValueError):
        LinExpParams(**kwargs)


def test_params_vector() -> None:
    params = LinExpParams.initial(3, bands=('x', 'y', 'z'))
    assert params.vector().tolist() == [0.0, 0.0, 0.0, -4.0, 0.0]
    moved = params.with_vector(np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
    assert moved.a.tolist() == [1.0, 2.0, 3.0]
    assert (moved.b, moved.c) == (4.0, 5.0)
    assert moved.bands == ('x', 'y', 'z')
    with pytest.raises(model.DimensionMismatch):
        params.with_vector(np.zeros(4))


def test_params_check_bands() -> None:
    params = LinExpParams(a=[1.0, 2.0], b=0, c=0, bands=('light', 'roads'))
    params.check_bands(('light', 'roads'))
    with pytest.raises(model.DimensionMismatch, match="'rivers'"):
        params.check_bands(('light', 'rivers'))
    with pytest.raises(model.DimensionMismatch):
        params.check_bands(('light',))


def test_params_file(tmpdir: Any) -> None:
    params = LinExpParams(a=[0.25, -1.5], b=-4.0, c=0.125,
                          bands=('light', 'roads'),
                          stats=((1.0, 2.0), (3.0, 4.0)))
    path = os.path.join(tmpdir, 'params.json')
    model.save_params(params, path)
    assert serialisation.read_json(path) == {
        'a': [0.25, -1.5],
        'b': -4.0,
        'c': 0.125,
        'bands': ['light', 'roads'],
        'stats': [[1.0, 2.0], [3.0, 4.0]],
    }
    assert model.load_params(path) == params


@pytest.mark.parametrize('content', [b'{', b'{"a": [1.0]}', b'[]'],
                         ids=repr)
def test_load_params_invalid(tmpdir: Any, content: bytes) -> None:
    path = os.path.join(tmpdir, 'params.json')
    with open(path, 'wb') as f:
        f.write(content)
    with pytest.raises(ingest.LoadError, match='params.json'):
        model.load_params(path)


def test_predict_units_shared_pixel(shared_stack: CovariateStack,
                                    shared_zone: ZoneMap) -> None:
    params = LinExpParams(a=[0.5, -0.25], b=0.1, c=-0.5,
                          bands=shared_stack.bands)

    def density(x: int, y: int) -> float:
        return model.linexp_pixel(params, shared_stack.values[y, x])

    preds = model.predict_units(params, shared_stack, shared_zone,
                                ['a', 'b', 'c'])
    assert preds['a'] == pytest.approx(density(0, 0) + 0.5 * density(1, 0),
                                       rel=1e-12)
    assert preds['b'] == pytest.approx(
        0.5 * density(1, 0) + density(2, 0) + 0.25 * density(2, 1),
        rel=1e-12)
    assert preds['c'] == pytest.approx(density(0, 1) + density(1, 1),
                                       rel=1e-12)


def test_predict_units_constant(shared_stack: CovariateStack,
                                shared_zone: ZoneMap) -> None:
    params = LinExpParams(a=[0.0, 0.0], b=math.log(3), c=0.0)
    preds = model.predict_units(params, shared_stack, shared_zone,
                                ['c', 'b'])
    assert preds.unit_ids == ('c', 'b')
    np.testing.assert_allclose(preds.values, [6.0, 5.25], rtol=1e-12)


def test_predict_units_requires_standardised(shared_zone: ZoneMap) -> None:
    raw = CovariateStack(bands=('x',), values=np.zeros((2, 3, 1)))
    with pytest.raises(model.DimensionMismatch):
        model.predict_units(LinExpParams.initial(1), raw, shared_zone, ['a'])


def test_predict_units_unknown_unit(shared_stack: CovariateStack,
                                    shared_zone: ZoneMap) -> None:
    with pytest.raises(ingest.ZoneError):
        model.predict_units(LinExpParams.initial(2), shared_stack,
                            shared_zone, ['a', 'z'])


def test_unit_predictions() -> None:
    preds = UnitPredictions.from_mapping({'A': 120.0, 'B': 40.0})
    assert dict(preds) == {'A': 120.0, 'B': 40.0}
    assert preds.array(['B', 'A']).tolist() == [40.0, 120.0]
    with pytest.raises(ingest.ZoneError):
        preds['C']  # pylint: disable=pointless-statement
    with pytest.raises(ValueError):
        UnitPredictions(('A',), np.array([-1.0]))


def test_predict_raster(shared_stack: CovariateStack,
                        shared_zone: ZoneMap) -> None:
    params = LinExpParams(a=[0.5, -0.25], b=0.1, c=-0.5)
    raster = model.predict_raster(params, shared_stack, shared_zone)
    assert (raster.width, raster.height) == (3, 2)
    assert raster.values[0, 1] == pytest.approx(
        model.linexp_pixel(params, shared_stack.values[0, 1]), rel=1e-12)
    aggregated = model.aggregate(raster, shared_zone)
    preds = model.predict_units(params, shared_stack, shared_zone,
                                shared_zone.unit_ids)
    np.testing.assert_allclose(aggregated.values, preds.values, rtol=1e-12)


def test_predict_raster_absent_pixels(shared_stack: CovariateStack) -> None:
    zone = ZoneMap.from_entries([('a', 0, 0, 1.0), ('a', 2, 1, 0.5)])
    raster = model.predict_raster(LinExpParams.initial(2), shared_stack,
                                  zone)
    assert raster.present.tolist() == [[True, False, False],
                                       [False, False, True]]
    assert raster.total() == pytest.approx(2 * math.exp(-4), rel=1e-12)


def test_aggregate_table1(table1_raster: PredictionRaster,
                          table1_zone: ZoneMap) -> None:
    preds = model.aggregate(table1_raster, table1_zone)
    assert dict(preds) == {'A': 120.0, 'B': 40.0}


def test_aggregate_missing_pixel(table1_zone: ZoneMap) -> None:
    raster = PredictionRaster(np.array([[120.0, np.nan]]))
    with pytest.raises(ingest.ValidationError, match=r'\(1, 0\)'):
        model.aggregate(raster, table1_zone)


def test_raster_file(tmpdir: Any) -> None:
    values = np.array([[1.5, np.nan], [0.0, 7.25]])
    path = os.path.join(tmpdir, 'raster.json')
    model.save_raster(PredictionRaster(values), path)
    loaded = model.load_raster(path)
    np.testing.assert_array_equal(loaded.values, values)
    assert loaded.present.tolist() == [[True, False], [True, True]]


def test_load_table1_raster() -> None:
    raster = model.load_raster(os.path.join(TABLE1, 'raster.json'))
    assert raster.values.tolist() == [[120.0, 40.0]]


def test_unit_predictions_file(tmpdir: Any) -> None:
    path = os.path.join(tmpdir, 'preds.csv')
    preds = UnitPredictions.from_mapping({'u1': 1.0 / 3, 'u2': 2.5})
    model.save_unit_predictions(preds, path)
    assert dict(model.load_unit_predictions(path)) == dict(preds)
    assert dict(model.load_unit_predictions(
        os.path.join(TABLE1, 'unit_predictions.csv'))) == {'A': 120.0,
                                                           'B': 40.0}


def test_areal_weighting_conserves_mass(shared_zone: ZoneMap) -> None:
    census = CensusTable({'a': 30.0, 'b': 7.0, 'c': 0.0})
    raster = model.areal_weighting(census, shared_zone, (2, 3))
    assert raster.total() == pytest.approx(37.0, rel=1e-9)
    assert raster.values[0, 0] == pytest.approx(20.0)
    assert raster.values[0, 1] == pytest.approx(0.5 * 20.0 + 0.5 * 4.0)
    aggregated = model.aggregate(raster, shared_zone)
    np.testing.assert_allclose(aggregated.values, [30.0, 7.0, 0.0],
                               rtol=1e-12)


@pytest.mark.parametrize('entries, census, expected', [
    ([('a', 0, 0, 1.0), ('a', 1, 0, 0.5)], {'a': 30.0}, [30.0]),
    ([('a', 0, 0, 0.5), ('b', 0, 0, 0.25), ('b', 1, 0, 1.0)],
     {'a': 8.0, 'b': 12.5}, [8.0, 12.5]),
], ids=repr)
def test_areal_weighting_file_conserves_mass(tmpdir: Any, entries: Any,
                                             census: Any,
                                             expected: Any) -> None:
    zone = ZoneMap.from_entries(entries)
    raster = model.areal_weighting(CensusTable(census), zone)
    path = os.path.join(tmpdir, 'areal.json')
    model.save_raster(raster, path)
    loaded = model.load_raster(path)
    np.testing.assert_array_equal(loaded.entry_values, raster.entry_values)
    np.testing.assert_allclose(model.aggregate(loaded, zone).values,
                               expected, rtol=1e-12)


def test_redistributed_raster_file(tmpdir: Any,
                                   shared_zone: ZoneMap) -> None:
    raster = model.areal_weighting(CensusTable({'a': 3.0, 'b': 1.0,
                                                'c': 2.0}),
                                   shared_zone, (2, 3))
    adjusted = redistribute.dasymetric(
        raster, shared_zone, CensusTable({'a': 10.0, 'b': 1.0, 'c': 5.0}),
        'unit')
    path = os.path.join(tmpdir, 'adjusted.json')
    model.save_raster(adjusted, path)
    assert serialisation.read_json(path)['entries'] == {
        'file': 'adjusted.entries.f64', 'count': 7}
    np.testing.assert_allclose(
        model.aggregate(model.load_raster(path), shared_zone).values,
        [10.0, 1.0, 5.0], rtol=1e-12)


def test_raster_entries_other_zone(shared_zone: ZoneMap,
                                   table1_zone: ZoneMap) -> None:
    raster = model.areal_weighting(CensusTable({'a': 1.0, 'b': 1.0,
                                                'c': 1.0}),
                                   shared_zone, (2, 3))
    with pytest.raises(ingest.ValidationError, match='7 membership'):
        model.aggregate(raster, table1_zone)


@pytest.mark.parametrize('entry_values', [
    [1.0, -0.5],
    [1.0, math.nan],
    [[1.0, 2.0]],
], ids=repr)
def test_raster_invalid_entries(entry_values: Any) -> None:
    with pytest.raises(ValueError):
        PredictionRaster(np.array([[1.0, 2.0]]), entry_values)


def test_raster_entries_truncated(tmpdir: Any) -> None:
    path = os.path.join(tmpdir, 'raster.json')
    model.save_raster(PredictionRaster(np.array([[1.0, 2.0]]),
                                       np.array([1.0, 2.0])), path)
    with open(os.path.join(tmpdir, 'raster.entries.f64'), 'wb') as f:
        f.write(b'\0' * 12)
    with pytest.raises(ingest.LoadError, match='12 bytes'):
        model.load_raster(path)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0, max_value=1e3),
       st.lists(st.floats(min_value=0, max_value=1e3), min_size=6,
                max_size=6),
       st.lists(st.floats(min_value=0, max_value=1e3), min_size=6,
                max_size=6))
def test_aggregate_linear(factor: float, first: Sequence[float],
                          second: Sequence[float]) -> None:
    zone = ZoneMap.from_entries([
        ('a', 0, 0, 1.0), ('a', 1, 0, 0.5), ('b', 1, 0, 0.5),
        ('b', 2, 0, 1.0), ('b', 2, 1, 0.25), ('c', 0, 1, 1.0),
        ('c', 1, 1, 1.0),
    ])
    one = np.array(first).reshape(2, 3)
    two = np.array(second).reshape(2, 3)
    combined = model.aggregate(PredictionRaster(factor * one + two), zone)
    expected = (factor * model.aggregate(PredictionRaster(one), zone).values
                + model.aggregate(PredictionRaster(two), zone).values)
    np.testing.assert_allclose(combined.values, expected, rtol=1e-9,
                               atol=1e-9)


@settings(max_examples=100)
@given(_FINITE, _FINITE, st.floats(min_value=-10, max_value=10),
       st.floats(min_value=0, max_value=5), _FINITE)
def test_linexp_monotone_in_offsets(a: float, b: float, c: float,
                                    step: float, x: float) -> None:
    params = LinExpParams(a=[a], b=b, c=c)
    base = model.linexp_pixel(params, [x])
    assert model.linexp_pixel(LinExpParams(a=[a], b=b + step, c=c),
                              [x]) >= base
    assert model.linexp_pixel(LinExpParams(a=[a], b=b, c=c + step),
                              [x]) >= base


def test_areal_weighting_empty_unit() -> None:
    zone = ZoneMap(unit_ids=('a', 'b'), unit_index=[0], x=[0], y=[0],
                   weight=[1.0], unit_to_superunit={'a': 'a', 'b': 'b'})
    with pytest.raises(model.ArealWeightingError, match="'b'"):
        model.areal_weighting(CensusTable({'a': 1.0, 'b': 2.0}), zone)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), _FINITE, _FINITE,
       st.floats(min_value=-10, max_value=10))
def test_calibrate_scales_model(factor: float, a: float, b: float,
                                c: float) -> None:
    params = LinExpParams(a=[a], b=b, c=c)
    scaled = model.calibrate(params, factor)
    for x in (-1.0, 0.0, 0.5, 2.0):
        assert model.linexp_pixel(scaled, [x]) == pytest.approx(
            factor * model.linexp_pixel(params, [x]), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize('factor', [0.0, -1.0, math.inf, math.nan],
                         ids=repr)
def test_calibrate_invalid(factor: float) -> None:
    with pytest.raises(model.CalibrationError):
        model.calibrate(LinExpParams.initial(1), factor)


def test_mean_ratio_factor(caplog: pytest.LogCaptureFixture) -> None:
    census = CensusTable({'A': 100.0, 'B': 100.0, 'C': 0.0})
    preds = UnitPredictions.from_mapping({'A': 120.0, 'B': 40.0, 'C': 3.0})
    found = model.mean_ratio_factor(preds, census)
    assert found.literal == pytest.approx(0.8)
    assert found.corrective == pytest.approx(1.25)
    assert (found.n_units, found.excluded_units) == (2, 1)
    assert found.factor(CalibrationPolicy.NONE) == 1.0
    assert found.factor(CalibrationPolicy.LITERAL) == found.literal
    assert 'zero census' in caplog.text


def test_mean_ratio_factor_degenerate() -> None:
    census = CensusTable({'A': 0.0, 'B': 10.0})
    with pytest.raises(model.CalibrationError):
        model.mean_ratio_factor(UnitPredictions.from_mapping({'A': 1.0}),
                                census)
    with pytest.raises(model.CalibrationError):
        model.mean_ratio_factor(UnitPredictions.from_mapping({'B': 0.0}),
                                census)


def test_calibration_factor(shared_stack: CovariateStack,
                            shared_zone: ZoneMap) -> None:
    params = LinExpParams(a=[0.0, 0.0], b=0.0, c=0.0)
    census = CensusTable({'a': 3.0, 'b': 3.5, 'c': 4.0})
    factor = model.calibration_factor(params, shared_stack, shared_zone,
                                      census, shared_zone.unit_ids,
                                      CalibrationPolicy.CORRECTIVE)
    assert factor == pytest.approx(2.0)
    calibrated = model.calibrate(params, factor)
    preds = model.predict_units(calibrated, shared_stack, shared_zone,
                                shared_zone.unit_ids)
    np.testing.assert_allclose(preds.values,
                               census.values(['a', 'b', 'c']), rtol=1e-12)
    assert model.calibration_factor(params, shared_stack, shared_zone,
                                    census, ['a'],
                                    CalibrationPolicy.NONE) == 1.0


def test_importance() -> None:
    params = LinExpParams(a=[0.1, -2.0, 0.5], b=0, c=0,
                          bands=('light', 'slope', 'roads'))
    assert model.importance(params) == [('slope', -2.0), ('roads', 0.5),
                                        ('light', 0.1)]
    assert model.importance(LinExpParams(a=[1.0], b=0, c=0)) == [
        ('band0', 1.0)]
    with pytest.raises(model.DimensionMismatch):
        model.importance(params, ('x',))
