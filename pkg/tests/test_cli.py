"""Test the command line interface."""

from __future__ import annotations

import filecmp
import os
from typing import Any, Dict, List, Sequence

from click.testing import CliRunner, Result
import numpy as np
import pandas as pd
import pytest

from pydisagg import __version__, cli, ingest, model, serialisation
from pydisagg.model import CalibrationPolicy
from tests.conftest import TABLE1

# Fixtures. Need to make a PR for this.
# pylint: disable=redefined-outer-name

_TABLE1_INPUTS = [
    '--zones', os.path.join(TABLE1, 'zones.csv'),
    '--hierarchy', os.path.join(TABLE1, 'hierarchy.csv'),
    '--census', os.path.join(TABLE1, 'census.csv'),
]


def _invoke(args: Sequence[str]) -> Result:
    return CliRunner().invoke(cli.main, list(args))


def _rows(output: str) -> Dict[str, str]:
    rows = {}
    for line in output.splitlines():
        parts = line.split()
        if len(parts) == 2:
            rows[parts[0]] = parts[1]
    return rows


def test_version() -> None:
    result = _invoke(['--version'])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_eval_unit_predictions() -> None:
    result = _invoke(['eval', *_TABLE1_INPUTS, '--unit-predictions',
                      os.path.join(TABLE1, 'unit_predictions.csv')])
    assert result.exit_code == 0, result.output
    rows = _rows(result.output)
    assert rows['ppe'] == '40.00%'
    assert rows['ppse'] == '2000.00%'
    assert rows['rmse'] == '44.72'
    assert rows['units'] == '2'
    assert rows['adjusted'] == 'no'


def test_eval_adjusted_unit_predictions() -> None:
    result = _invoke(['eval', *_TABLE1_INPUTS, '--unit-predictions',
                      os.path.join(TABLE1, 'unit_predictions_adjusted.csv')])
    assert result.exit_code == 0, result.output
    rows = _rows(result.output)
    assert rows['ppe'] == '50.00%'
    assert rows['rmse'] == '50.00'


def test_eval_redistributed_raster(tmpdir: Any) -> None:
    out = os.path.join(tmpdir, 'report.json')
    per_unit = os.path.join(tmpdir, 'units.csv')
    result = _invoke(['eval', *_TABLE1_INPUTS,
                      '--raster', os.path.join(TABLE1, 'raster.json'),
                      '--redistribute', 'superunit',
                      '--out', out, '--per-unit', per_unit])
    assert result.exit_code == 0, result.output
    rows = _rows(result.output)
    assert rows['ppe'] == '50.00%'
    assert rows['rmse'] == '50.00'
    assert rows['adjusted'] == 'yes'
    report = serialisation.read_json(out)
    assert report['ppe'] == pytest.approx(0.5)
    assert report['adjusted'] is True
    frame = pd.read_csv(per_unit)
    assert frame['prediction'].tolist() == [150.0, 50.0]


@pytest.mark.parametrize('extra', [
    [],
    ['--unit-predictions', os.path.join(TABLE1, 'unit_predictions.csv'),
     '--raster', os.path.join(TABLE1, 'raster.json')],
    ['--unit-predictions', os.path.join(TABLE1, 'unit_predictions.csv'),
     '--redistribute', 'unit'],
    ['--raster', os.path.join(TABLE1, 'raster.json'),
     '--redistribute', 'county'],
], ids=repr)
def test_eval_usage(extra: List[str]) -> None:
    result = _invoke(['eval', *_TABLE1_INPUTS, *extra])
    assert result.exit_code == 2


def test_eval_missing_file(tmpdir: Any) -> None:
    missing = os.path.join(tmpdir, 'missing.csv')
    result = _invoke(['eval', *_TABLE1_INPUTS, '--unit-predictions',
                      missing])
    assert result.exit_code == 1
    assert 'missing.csv: no such file' in result.output


def test_eval_unknown_unit(tmpdir: Any) -> None:
    census = os.path.join(tmpdir, 'census.csv')
    with open(census, 'w') as f:
        f.write('unit_id,population\nA,100\nC,100\n')
    result = _invoke(['eval', '--zones', os.path.join(TABLE1, 'zones.csv'),
                      '--census', census, '--unit-predictions',
                      os.path.join(TABLE1, 'unit_predictions.csv')])
    assert result.exit_code == 1


@pytest.fixture(scope='module')
def world(tmpdir_factory: Any) -> Dict[str, str]:
    """A small synthetic world written by the synth command."""
    directory = str(tmpdir_factory.mktemp('world'))
    result = _invoke(['synth', '--out', directory, '--width', '16',
                      '--height', '12', '--bands', '3', '--units', '12',
                      '--superunits', '4', '--seed', '7'])
    assert result.exit_code == 0, result.output
    return {name: os.path.join(directory, f'{name}.{ext}')
            for name, ext in (('stack', 'json'), ('zones', 'csv'),
                              ('hierarchy', 'csv'), ('census', 'csv'),
                              ('truth', 'json'), ('config', 'json'))}


def _world_inputs(world: Dict[str, str]) -> List[str]:
    return ['--stack', world['stack'], '--zones', world['zones'],
            '--hierarchy', world['hierarchy'], '--census', world['census']]


def test_synth(world: Dict[str, str]) -> None:
    for path in world.values():
        assert os.path.exists(path)
    assert model.load_params(world['truth']).bands == ('band0', 'band1',
                                                       'band2')


def test_synth_infeasible(tmpdir: Any) -> None:
    result = _invoke(['synth', '--out', str(tmpdir), '--width', '3',
                      '--height', '3', '--units', '7', '--superunits', '2'])
    assert result.exit_code == 1
    assert 'Cannot tile' in result.output


def test_pipeline(tmpdir: Any, world: Dict[str, str]) -> None:
    params = os.path.join(tmpdir, 'params.json')
    result = _invoke(['train', *_world_inputs(world), '--iterations', '50',
                      '--loss', 'RMSE', '--calibration', 'corrective',
                      '--out', params])
    assert result.exit_code == 0, result.output
    assert result.output.startswith('rmse loss ')
    assert os.path.exists(os.path.join(tmpdir, 'params.trace.csv'))
    fitted = model.load_params(params)
    assert fitted.stats is not None

    raster = os.path.join(tmpdir, 'raster.json')
    result = _invoke(['predict', '--params', params,
                      *_world_inputs(world), '--redistribute', 'unit',
                      '--out', raster])
    assert result.exit_code == 0, result.output
    adjusted = os.path.join(tmpdir, 'raster.adjusted.json')
    assert model.load_raster(raster).values.shape == (12, 16)

    result = _invoke(['eval', '--zones', world['zones'], '--hierarchy',
                      world['hierarchy'], '--census', world['census'],
                      '--raster', adjusted])
    assert result.exit_code == 0, result.output
    assert _rows(result.output)['ppe'] == '0.00%'

    png = os.path.join(tmpdir, 'raster.png')
    result = _invoke(['render', '--raster', raster, '--out', png])
    assert result.exit_code == 0, result.output
    with open(png, 'rb') as f:
        assert f.read(8) == b'\x89PNG\r\n\x1a\n'


def test_predict_needs_census(tmpdir: Any, world: Dict[str, str]) -> None:
    result = _invoke(['predict', '--params', world['truth'], '--stack',
                      world['stack'], '--zones', world['zones'],
                      '--redistribute', 'unit',
                      '--out', os.path.join(tmpdir, 'raster.json')])
    assert result.exit_code == 2


def test_predict_band_mismatch(tmpdir: Any, world: Dict[str, str]) -> None:
    params = os.path.join(tmpdir, 'params.json')
    model.save_params(model.LinExpParams(a=[0.0, 0.0], b=0.0, c=0.0,
                                         bands=('light', 'roads')), params)
    result = _invoke(['predict', '--params', params, '--stack',
                      world['stack'], '--zones', world['zones'],
                      '--out', os.path.join(tmpdir, 'raster.json')])
    assert result.exit_code == 1


def test_cv(tmpdir: Any, world: Dict[str, str]) -> None:
    out = os.path.join(tmpdir, 'cv.csv')
    result = _invoke(['cv', *_world_inputs(world), '--folds', '2',
                      '--iterations', '20', '--deterministic',
                      '--with-areal', '--out', out])
    assert result.exit_code == 0, result.output
    assert 'linexp unadjusted (mean of 2 folds)' in result.output
    assert 'areal adjusted (mean of 2 folds)' in result.output
    assert len(pd.read_csv(out)) == 6
    summary = serialisation.read_json(os.path.join(tmpdir, 'cv.json'))
    assert summary['k'] == 2


@pytest.mark.parametrize('args', [
    ['--folds', '1'],
    ['--iterations', '0'],
    ['--loss', 'mae'],
], ids=repr)
def test_cv_usage(tmpdir: Any, world: Dict[str, str],
                  args: List[str]) -> None:
    result = _invoke(['cv', *_world_inputs(world), *args,
                      '--out', os.path.join(tmpdir, 'cv.csv')])
    assert result.exit_code == 2


def test_calibration_default() -> None:
    for command in (cli.cmd_train, cli.cmd_cv):
        option = next(p for p in command.params if p.name == 'calibration')
        assert option.default == CalibrationPolicy.CORRECTIVE.value


def _training_ratio(world: Dict[str, str], params_path: str) -> float:
    params = model.load_params(params_path)
    stack = ingest.apply_stats(ingest.load_stack(world['stack']),
                               params.stats, params.bands)
    zone = ingest.load_zones(world['zones'], world['hierarchy'])
    census = ingest.load_census(world['census'])
    preds = model.predict_units(params, stack, zone, zone.unit_ids)
    return model.mean_ratio_factor(preds, census).literal


def test_calibration_direction(tmpdir: Any, world: Dict[str, str]) -> None:
    ratios = {}
    for policy in ('none', 'corrective', 'literal'):
        out = os.path.join(tmpdir, f'{policy}.json')
        args = ['train', *_world_inputs(world), '--iterations', '20',
                '--out', out]
        if policy != 'corrective':
            args += ['--calibration', policy]
        result = _invoke(args)
        assert result.exit_code == 0, result.output
        ratios[policy] = _training_ratio(world, out)
    assert ratios['none'] != pytest.approx(1.0, rel=1e-3)
    assert ratios['corrective'] == pytest.approx(1.0, rel=1e-9)
    assert ratios['literal'] == pytest.approx(ratios['none'] ** 2,
                                              rel=1e-9)


def test_eval_raster_gap(tmpdir: Any) -> None:
    raster = os.path.join(tmpdir, 'gap.json')
    model.save_raster(model.PredictionRaster(np.array([[120.0, np.nan]])),
                      raster)
    result = _invoke(['eval', *_TABLE1_INPUTS, '--raster', raster])
    assert result.exit_code == 1
    assert 'no value at zoned pixel (1, 0)' in result.output


def _run_pipeline(world: Dict[str, str], directory: str) -> None:
    params = os.path.join(directory, 'params.json')
    raster = os.path.join(directory, 'raster.json')
    steps = [
        ['train', *_world_inputs(world), '--iterations', '30', '--seed',
         '3', '--deterministic', '--out', params],
        ['predict', '--params', params, *_world_inputs(world),
         '--redistribute', 'superunit', '--out', raster],
        ['eval', '--zones', world['zones'], '--hierarchy',
         world['hierarchy'], '--census', world['census'], '--raster',
         os.path.join(directory, 'raster.adjusted.json'), '--out',
         os.path.join(directory, 'report.json')],
    ]
    for args in steps:
        result = _invoke(args)
        assert result.exit_code == 0, result.output


def test_pipeline_reproducible(tmpdir: Any, world: Dict[str, str]) -> None:
    first = os.path.join(tmpdir, 'first')
    second = os.path.join(tmpdir, 'second')
    for directory in (first, second):
        os.makedirs(directory)
        _run_pipeline(world, directory)
    names = sorted(os.listdir(first))
    assert names == sorted(os.listdir(second))
    assert {'params.json', 'params.trace.csv', 'raster.json',
            'raster.adjusted.entries.f64', 'report.json'} <= set(names)
    for name in names:
        assert filecmp.cmp(os.path.join(first, name),
                           os.path.join(second, name), shallow=False), name
