import pytest

from neuro.analysis import (PEAK_TO_MINFIRE, SPIKE_TO_PEAK, FiringWindow, NeverFiresError, classify_arrivals,
                            cutoff_rate, firing_rate, firing_windows, isi_series, min_firing_potential,
                            save_windows_csv, silent_intervals, sustains_output, window_open_at)
from neuro.lif import NeuronParams, SpikeEvent, gate_train, regular_train, run
from utils.csv_writer import read_csv


@pytest.fixture(scope='module')
def v_min():
    return min_firing_potential(NeuronParams())


@pytest.fixture(scope='module')
def gate_run():
    params = NeuronParams()
    train = gate_train()
    output, trace = run(params, train, 5000.0)
    return params, train, output, trace


def test_min_firing_potential_defaults(v_min):
    assert v_min == pytest.approx(-63.569, abs=0.2)


def test_min_firing_potential_trivial_threshold():
    p = NeuronParams(v_thresh=-65.0 + 0.001)
    assert min_firing_potential(p) == pytest.approx(p.v_rest)


def test_min_firing_potential_decreases_with_weight(v_min):
    assert min_firing_potential(NeuronParams(w_in=2.0)) < v_min


def test_min_firing_potential_monotone_grid():
    for tau_m in (50.0, 100.0, 200.0):
        values = [min_firing_potential(NeuronParams(tau_m=tau_m, w_in=w)) for w in (0.8, 1.0, 1.2)]
        assert values[0] >= values[1] >= values[2]
    for w in (0.8, 1.0, 1.2):
        values = [min_firing_potential(NeuronParams(tau_m=t, w_in=w)) for t in (50.0, 100.0, 200.0)]
        assert values[0] >= values[1] >= values[2]


def test_never_fires():
    with pytest.raises(NeverFiresError):
        min_firing_potential(NeuronParams(w_in=0.0))


def test_single_spike_windows(v_min):
    params = NeuronParams()
    train = [SpikeEvent(0.0)]
    _, trace = run(params, train, 400.0)
    windows = firing_windows(trace, params, train, v_min)
    assert windows == [FiringWindow(1.0, 16.0, SPIKE_TO_PEAK), FiringWindow(16.0, 131.0, PEAK_TO_MINFIRE)]
    assert 15.0 <= windows[0].span <= 18.0


def test_empty_train_has_no_windows(v_min):
    params = NeuronParams()
    _, trace = run(params, [], 100.0)
    assert firing_windows(trace, params, [], v_min) == []


def test_weak_spike_opens_no_window():
    params = NeuronParams(w_in=0.3)
    train = [SpikeEvent(0.0)]
    _, trace = run(params, train, 300.0)
    assert firing_windows(trace, params, train) == []


def test_windows_reject_horizon_mismatch(v_min):
    params = NeuronParams()
    _, trace = run(params, [SpikeEvent(0.0)], 100.0)
    with pytest.raises(ValueError):
        firing_windows(trace, params, [SpikeEvent(0.0), SpikeEvent(150.0)], v_min)


def test_window_validation():
    with pytest.raises(ValueError):
        FiringWindow(10.0, 5.0, SPIKE_TO_PEAK)
    with pytest.raises(ValueError):
        FiringWindow(0.0, 5.0, 'other')


def test_window_open_at_uses_strict_start():
    windows = [FiringWindow(10.0, 20.0, SPIKE_TO_PEAK)]
    assert not window_open_at(windows, 10.0)
    assert window_open_at(windows, 15.0)
    assert window_open_at(windows, 20.0)
    assert not window_open_at(windows, 21.0)


def test_rate_gate_on_gate_train(gate_run):
    _, _, output, _ = gate_run
    assert not [e for e in output if e.t < 4000.0]
    assert [e for e in output if 4000.0 <= e.t < 5000.0]


def test_window_consistency_on_gate_train(gate_run, v_min):
    params, train, output, trace = gate_run
    windows = firing_windows(trace, params, train, v_min)
    outcomes = classify_arrivals(trace, params, train, windows)
    assert len(outcomes) == len(train)
    assert any(o.fired for o in outcomes)
    for outcome in outcomes:
        if outcome.fired:
            assert outcome.in_window, outcome
        if outcome.t < 4000.0:
            assert not outcome.in_window and not outcome.fired
    by_time = {o.t: o for o in outcomes}
    assert by_time[4101.0].in_window and by_time[4101.0].fired
    assert not by_time[4201.0].in_window and not by_time[4201.0].fired


def test_fast_input_fires_outside_windows():
    params = NeuronParams()
    train = regular_train(20.0, 0.0, 5000.0)
    _, trace = run(params, train, 5000.0)
    outcomes = classify_arrivals(trace, params, train)
    assert any(o.fired and not o.in_window for o in outcomes)


def test_isi_series():
    series = isi_series([SpikeEvent(0.0), SpikeEvent(100.0), SpikeEvent(200.0)])
    assert series.pairs() == [(100.0, 100.0), (200.0, 100.0)]
    assert len(isi_series([SpikeEvent(5.0)])) == 0
    with pytest.raises(ValueError):
        isi_series([SpikeEvent(5.0), SpikeEvent(1.0)])


def test_isi_series_gate_plateaus():
    isi = isi_series(gate_train()).isi
    assert list(isi[:1]) == [1000.0]
    assert list(isi[1:5]) == [1000.0, 500.0, 500.0, 500.0]
    assert isi[5:] == pytest.approx([500.0] + [100.0] * 9)


def test_firing_rate_and_silent_intervals():
    train = [SpikeEvent(t) for t in (100.0, 200.0, 3000.0, 3100.0)]
    assert firing_rate(train, 0.0, 1000.0) == pytest.approx(2.0)
    assert silent_intervals(train, 0.0, 5000.0, 1000.0) == [(200.0, 3000.0), (3100.0, 5000.0)]
    with pytest.raises(ValueError):
        firing_rate(train, 10.0, 10.0)


def test_cutoff_rate_defaults():
    assert 6.3 <= cutoff_rate(NeuronParams()) <= 6.6


def test_cutoff_rate_rises_with_threshold():
    assert cutoff_rate(NeuronParams(v_thresh=-50.0)) > cutoff_rate(NeuronParams())


def test_gate_property_around_cutoff():
    params = NeuronParams()
    cutoff = cutoff_rate(params)
    for k in range(10):
        assert not sustains_output(params, max(cutoff - 0.1 - 0.5 * k, 0.5))
        assert sustains_output(params, cutoff + 0.1 + 2.0 * k)
    assert sustains_output(params, 1000.0)


def test_save_windows_csv(tmp_path):
    path = tmp_path / 'windows.csv'
    save_windows_csv([FiringWindow(1.0, 16.0, SPIKE_TO_PEAK)], str(path))
    _, rows = read_csv(str(path))
    assert rows == [{'t_start_ms': '1.0', 't_end_ms': '16.0', 'kind': SPIKE_TO_PEAK}]
