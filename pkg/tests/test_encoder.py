import numpy as np
import pytest

from neuro.encoder import (MAX_TOF_US, EncoderState, LiveInjector, TofMeasurement, distance_from_tof,
                           injector_train, isi_from_tof, isi_ms, replay, tick, tof_from_distance, tof_from_isi,
                           update_tof)


def test_isi_bounds_exact():
    assert isi_from_tof(0) == 0.001
    assert isi_from_tof(MAX_TOF_US) == 1.001
    assert isi_from_tof(10000) == 1.001


@pytest.mark.parametrize('tof, expected, tol', [
    (1471, 0.0635, 1e-4),
    (2941, 0.2510, 1e-3),
    (2294, 0.1530, 5e-4),
])
def test_isi_examples(tof, expected, tol):
    assert isi_from_tof(tof) == pytest.approx(expected, abs=tol)


def test_isi_monotone_and_bounded_on_random_inputs():
    rng = np.random.default_rng(0)
    tofs = np.sort(rng.uniform(0.0, 2 * MAX_TOF_US, 10_000))
    isis = np.array([isi_from_tof(t) for t in tofs])
    assert np.all(isis >= 0.001) and np.all(isis <= 1.001)
    assert np.all(np.diff(isis) >= 0)
    inside = tofs < MAX_TOF_US
    assert np.all(np.diff(isis[inside]) > 0)


@pytest.mark.parametrize('func', [isi_from_tof, tof_from_distance, distance_from_tof])
def test_negative_inputs_rejected(func):
    with pytest.raises(ValueError):
        func(-1.0)


def test_distance_conversions():
    assert tof_from_distance(100) == pytest.approx(5883.0)
    assert tof_from_distance(0) == 0.0
    assert tof_from_distance(39) == pytest.approx(2294.37)
    for d in (0.5, 12.0, 39.0, 87.3):
        assert distance_from_tof(tof_from_distance(d)) == pytest.approx(d, abs=1e-9)


def test_tof_from_isi_inverts_encoding():
    for tof in (0.0, 588.0, 2294.0, 5883.0):
        assert tof_from_isi(isi_from_tof(tof)) == pytest.approx(tof, abs=1e-6)
    with pytest.raises(ValueError):
        tof_from_isi(2.0)


def test_tick_boundary_is_inclusive():
    state = EncoderState(current_isi=0.060, last_fire=0.0)
    assert tick(state, 59) is None
    event = tick(state, 60)
    assert event is not None and event.t == 60
    assert state.last_fire == 60


def test_tick_rejects_time_going_backwards():
    state = EncoderState(current_isi=0.060, last_fire=100.0)
    with pytest.raises(ValueError):
        tick(state, 50)


def test_update_keeps_last_fire():
    state = EncoderState.initial()
    assert state.current_isi == 1.001
    state.last_fire = 40.0
    updated = update_tof(state, TofMeasurement(tof_us=0))
    assert updated.current_isi == 0.001
    assert updated.last_fire == 40.0
    assert update_tof(updated, TofMeasurement(tof_us=5883)).current_isi == 1.001


def test_default_injector_rate():
    spikes = replay([], horizon=3000)
    assert [e.t for e in spikes] == [1001, 2002]


def test_shrinking_isi_fires_on_next_tick():
    injector = LiveInjector()
    assert injector.tick(59) is None
    injector.update(TofMeasurement(tof_us=588, t_recv=60))
    assert injector.isi_ms == pytest.approx(10.99, abs=0.01)
    event = injector.tick(60)
    assert event is not None and event.t == 60


def test_constant_tof_mean_isi():
    spikes = replay([TofMeasurement(tof_us=2294, t_recv=0)], horizon=10_000)
    times = np.array([e.t for e in spikes])
    isi = np.diff(times)
    assert isi.mean() == pytest.approx(153.3, abs=1.0)
    # квантование тиком 1 мс
    assert np.all(isi >= np.ceil(isi_ms(2294)))
    assert (len(times) - 1) * isi.mean() == pytest.approx(times[-1] - times[0])


def test_replay_applies_measurements_in_time_order():
    measurements = [TofMeasurement(tof_us=588, t_recv=500), TofMeasurement(tof_us=5883, t_recv=0)]
    spikes = replay(measurements, horizon=600)
    assert spikes[0].t == 500
    assert all(b.t - a.t == 11 for a, b in zip(spikes, spikes[1:]))


def test_injector_train_quantizes_like_the_injector():
    assert [e.t for e in injector_train(0.1, 1000)] == [100 * k for k in range(1, 10)]
    assert [e.t for e in injector_train(0.1535, 1000)][:2] == [154, 308]
    with pytest.raises(ValueError):
        injector_train(0.0, 1000)
