import os
from pathlib import Path

import pytest

from main import build_parser, main
from utils.csv_writer import read_csv, save_to_csv

ROOT = Path(__file__).resolve().parents[1]

CONFIG = str(ROOT / 'config.yaml')
EXAMPLES = ROOT / 'docs' / 'examples'


def cli(*args):
    return main(['--config', CONFIG, *args])


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_minfire(capsys):
    assert cli('minfire') == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(-63.569, abs=0.2)


def test_minfire_never_fires(tmp_path, capsys):
    params = tmp_path / 'silent.json'
    params.write_text('{"w_in": 0.0}', encoding='utf-8')
    assert cli('minfire', '--params', str(params)) == 1
    assert 'Ошибка' in capsys.readouterr().err


def test_encode(tmp_path):
    tof_csv = tmp_path / 'tof.csv'
    save_to_csv([{'t_ms': 0, 'tof_us': 2294}], ['t_ms', 'tof_us'], str(tof_csv))
    out = tmp_path / 'spikes.csv'
    assert cli('encode', '--tof-csv', str(tof_csv), '--horizon', '1000', '--out', str(out)) == 0
    metadata, rows = read_csv(str(out))
    times = [float(r['t_ms']) for r in rows]
    assert len(times) == 6
    assert all(b - a == 154 for a, b in zip(times, times[1:]))
    assert metadata['measurements'] == '1'


def test_filter(tmp_path):
    raw_csv = tmp_path / 'raw.csv'
    values = [1000, 1010, 995, 1000, 1003]
    save_to_csv(({'t_ms': 20 * k, 'raw_us': v} for k, v in enumerate(values)), ['t_ms', 'raw_us'], str(raw_csv))
    out = tmp_path / 'filtered.csv'
    assert cli('filter', '--raw-csv', str(raw_csv), '--out', str(out)) == 0
    _, rows = read_csv(str(out))
    assert [(float(r['t_ms']), float(r['tof_us'])) for r in rows] == [(60.0, 1000.0)]


def test_analyze(tmp_path, capsys):
    spikes = tmp_path / 'in.csv'
    save_to_csv([{'t_ms': 0}, {'t_ms': 300}], ['t_ms'], str(spikes))
    out = tmp_path / 'analysis'
    assert cli('analyze', '--spikes', str(spikes), '--horizon', '500', '--out', str(out)) == 0
    _, windows = read_csv(str(out / 'windows.csv'))
    assert [w['kind'] for w in windows] == ['spike-to-peak', 'peak-to-minfire'] * 2
    assert os.path.isfile(out / 'isi.csv') and os.path.isfile(out / 'trace.csv')
    assert 'Окон: 4' in capsys.readouterr().out


def test_scenario_run(tmp_path):
    out = tmp_path / 'appear'
    assert cli('scenario', 'run', '--script', str(EXAMPLES / 'appear_25cm.json'), '--out', str(out)) == 0
    metadata, rows = read_csv(str(out / 'run.csv'))
    assert len(rows) == 10000
    assert metadata['name'] == 'appear_25cm'
    assert os.path.isfile(out / 'spikes.csv') and os.path.isfile(out / 'trace.csv')


def test_scenario_run_needs_script(tmp_path):
    assert cli('scenario', 'run', '--out', str(tmp_path)) == 1


def test_scenario_world(tmp_path):
    out = tmp_path / 'wall'
    assert cli('scenario', 'world', '--world', str(EXAMPLES / 'single_wall.json'), '--horizon', '2000',
               '--out', str(out)) == 0
    _, rows = read_csv(str(out / 'trajectory.csv'))
    assert len(rows) == 2000
    assert float(rows[-1]['y_cm']) == pytest.approx(20.0)


def test_scenario_gate(tmp_path):
    out = tmp_path / 'gate'
    assert cli('scenario', 'gate', '--out', str(out)) == 0
    for name in ('run.csv', 'spikes.csv', 'trace.csv', 'windows.csv', 'isi.csv'):
        assert os.path.isfile(out / name), name


def test_scenario_fig3(tmp_path, capsys):
    out = tmp_path / 'fig3'
    assert cli('scenario', 'fig3', '--out', str(out)) == 0
    for name in ('run.csv', 'windows.csv', 'isi.csv'):
        assert os.path.isfile(out / name), name
    _, rows = read_csv(str(out / 'run.csv'))
    assert len(rows) == 5000
    assert 'Выходных спайков' in capsys.readouterr().out


def test_pipeline_sim_clock(tmp_path, capsys):
    script = tmp_path / 'near.json'
    script.write_text('{"segments": [{"duration_ms": 1000, "profile": "constant", "distance_cm": 10}]}',
                      encoding='utf-8')
    out = tmp_path / 'pipeline'
    assert cli('pipeline', '--script', str(script), '--sim-clock', '--out', str(out)) == 0
    _, spikes = read_csv(str(out / 'robot_spikes.csv'))
    assert spikes
    _, log = read_csv(str(out / 'run_log.csv'))
    assert {r['endpoint'] for r in log} >= {'robot', 'bridge', 'engine'}


def test_pipeline_needs_input(tmp_path):
    assert cli('pipeline', '--sim-clock', '--out', str(tmp_path)) == 1


def test_missing_file_is_reported(tmp_path, capsys):
    assert cli('scenario', 'run', '--script', str(tmp_path / 'absent.json')) == 1
    assert 'Ошибка' in capsys.readouterr().err
