import os

import numpy as np
import pytest

from apps.results_app.results_dashboard import (ResultsDashboard, build_figure, list_runs, load_run, run_file_path,
                                                run_from_pathname)
from scenario.report import RUN_FILE, SPIKES_FILE, RunReport, emit_report


@pytest.fixture
def runs_dir(tmp_path):
    n = 50
    out_spike = np.zeros(n, dtype=bool)
    out_spike[[10, 30]] = True
    report = RunReport(t_ms=np.arange(n, dtype=float), dist_cm=np.full(n, 25.0), tof_us=np.full(n, 1471.0),
                       isi_ms=np.full(n, 63.52), in_spike=np.zeros(n, dtype=bool), out_spike=out_spike,
                       mode=np.array(['forward'] * n), metadata={'name': 'demo'})
    emit_report(report, str(tmp_path / 'demo'))
    os.makedirs(tmp_path / 'empty')
    return tmp_path


def test_list_runs(runs_dir):
    runs = list_runs(str(runs_dir))
    assert [r['run'] for r in runs] == ['demo']
    assert runs[0]['rows'] == 50


def test_list_runs_missing_dir(tmp_path):
    assert list_runs(str(tmp_path / 'absent')) == []


def test_load_run(runs_dir):
    metadata, rows = load_run(str(runs_dir), 'demo')
    assert metadata['name'] == 'demo'
    assert len(rows) == 50
    with pytest.raises(ValueError):
        load_run(str(runs_dir), '../outside')


def test_build_figure(runs_dir):
    _, rows = load_run(str(runs_dir), 'demo')
    figure = build_figure(rows, 'demo')
    distance, isi, spikes = figure['data']
    assert len(distance['x']) == 50
    assert isi['y'][0] == pytest.approx(63.52)
    assert spikes['x'] == [0.01, 0.03]
    assert figure['layout']['title'] == 'demo'


def test_dashboard_builds(runs_dir, config):
    dashboard = ResultsDashboard(str(runs_dir), config)
    assert dashboard.out_dir == str(runs_dir)
    assert dashboard.page_size == config['ui']['page_size']
    assert dashboard.app.layout is not None


def test_run_file_path_stays_inside_out_dir(runs_dir):
    assert run_file_path(str(runs_dir), 'demo', SPIKES_FILE) == os.path.join(str(runs_dir), 'demo', SPIKES_FILE)
    assert os.path.isfile(run_file_path(str(runs_dir), 'demo'))
    for name in ('../outside', '../../etc', '/etc'):
        with pytest.raises(ValueError):
            run_file_path(str(runs_dir), name, RUN_FILE)


def test_run_from_pathname():
    assert run_from_pathname('/runs/demo') == 'demo'
    assert run_from_pathname('/runs/%2E%2E%2Foutside') == '../outside'
    assert run_from_pathname('/runs/') is None
    assert run_from_pathname('/') is None
    assert run_from_pathname(None) is None
