import pytest

from neuro.lif import NeuronParams
from neuro.measurement_filter import FilterConfig
from utils.config import DEFAULT_CONFIG, load_config, load_params_file
from utils.csv_writer import read_csv, save_to_csv
from utils.parser import InputParser


def test_repo_config_matches_defaults(root):
    config = load_config(str(root / 'config.yaml'))
    assert config == DEFAULT_CONFIG
    assert NeuronParams.from_dict(config['neuron']) == NeuronParams()
    assert FilterConfig.from_dict(config['filter']) == FilterConfig()


def test_missing_config_falls_back(tmp_path):
    assert load_config(str(tmp_path / 'absent.yaml')) == DEFAULT_CONFIG


def test_partial_config_is_merged(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text('neuron:\n  v_thresh: -50.0\npipeline:\n  ports:\n    robot: 7000\n', encoding='utf-8')
    config = load_config(str(path))
    assert config['neuron']['v_thresh'] == -50.0
    assert config['neuron']['tau_m'] == 100.0
    assert config['pipeline']['ports'] == {'robot': 7000, 'bridge': 9102, 'engine': 9103}
    assert DEFAULT_CONFIG['neuron']['v_thresh'] == -59.5


def test_params_file(root, tmp_path):
    assert load_params_file(None) == {}
    assert load_params_file(str(root / 'docs' / 'examples' / 'params_hard_threshold.json')) == {'v_thresh': -50.0}
    yaml_path = tmp_path / 'params.yaml'
    yaml_path.write_text('w_in: 2.0\n', encoding='utf-8')
    assert load_params_file(str(yaml_path)) == {'w_in': 2.0}
    with pytest.raises(OSError):
        load_params_file(str(tmp_path / 'absent.json'))


def test_csv_metadata_round_trip(tmp_path):
    path = str(tmp_path / 'out' / 'table.csv')
    save_to_csv([{'a': 1, 'b': 'x', 'extra': 0}], ['a', 'b'], path, {'name': 'demo', 'note': 'a: b'})
    metadata, rows = read_csv(path)
    assert metadata == {'name': 'demo', 'note': 'a: b'}
    assert rows == [{'a': '1', 'b': 'x'}]


def test_parser_reads_inputs(tmp_path):
    tof = tmp_path / 'tof.csv'
    save_to_csv([{'t_ms': 40, 'tof_us': 588}, {'t_ms': 0, 'tof_us': 5883}], ['t_ms', 'tof_us'], str(tof))
    measurements = InputParser.parse_tof_csv(str(tof))
    assert [(m.t_recv, m.tof_us) for m in measurements] == [(0.0, 5883.0), (40.0, 588.0)]
    assert InputParser.parse_raw_csv(str(tof)) == [(40.0, 588.0), (0.0, 5883.0)]

    spikes = tmp_path / 'spikes.csv'
    save_to_csv([{'t_ms': 1, 'kind': 'in'}, {'t_ms': 2, 'kind': 'out'}], ['t_ms', 'kind'], str(spikes))
    assert [e.t for e in InputParser.parse_spike_csv(str(spikes))] == [1.0]

    bad = tmp_path / 'bad.csv'
    save_to_csv([{'x': 1}], ['x'], str(bad))
    with pytest.raises(ValueError):
        InputParser.parse_tof_csv(str(bad))
    with pytest.raises(ValueError):
        InputParser.parse_spike_csv(str(bad))
