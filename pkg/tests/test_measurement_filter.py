import numpy as np
import pytest

from neuro.measurement_filter import FilterConfig, FilterState, MeasurementFilter, filter_stream, ingest


def reference_loop(values, max_hits, max_error):
    """Прямая запись цикла while True из псевдокода: (сколько измерений взято, отправленное значение)."""
    readings = iter(values)
    consumed = 0
    hits = 0
    first = None
    sent = []
    while True:
        if hits == 0:
            try:
                first = next(readings)
            except StopIteration:
                return sent
            consumed += 1
            hits = 1
        elif hits < max_hits:
            try:
                new = next(readings)
            except StopIteration:
                return sent
            consumed += 1
            if abs(new - first) <= max_error:
                hits += 1
            else:
                first = new
                hits = 1
        else:
            sent.append((consumed, first))
            hits = 0


def state_machine(values, cfg):
    state = FilterState()
    sent = []
    for index, raw in enumerate(values, start=1):
        state, emitted = ingest(state, cfg, raw)
        if emitted is not None:
            sent.append((index, emitted))
    return sent


@pytest.mark.parametrize('stream, expected', [
    ([1000, 1010, 995, 1000, 1003], [1000]),
    ([700, 700, 700, 700], [700]),
    ([1000, 2000, 2010, 2005, 1995], [2000]),
])
def test_examples(stream, expected):
    assert filter_stream(stream, FilterConfig(4, 120)) == expected


def test_emission_happens_on_the_fourth_reading():
    cfg = FilterConfig(4, 120)
    assert state_machine([1000, 1010, 995, 1000, 1003], cfg) == [(4, 1000)]


def test_matches_pseudocode_on_random_streams():
    rng = np.random.default_rng(42)
    for _ in range(100_000):
        max_hits = int(rng.integers(1, 6))
        max_error = int(rng.integers(0, 200))
        length = int(rng.integers(0, 16))
        values = rng.integers(0, 600, size=length).tolist()
        cfg = FilterConfig(max_hits, max_error)
        assert state_machine(values, cfg) == reference_loop(values, max_hits, max_error)


def test_constant_stream_throughput():
    for n in range(0, 30):
        assert len(filter_stream([1500] * n)) == n // 4


def test_alternating_stream_emits_nothing():
    assert filter_stream([1000, 1500] * 50) == []


def test_max_hits_one_passes_everything():
    values = [5, 900, 12, 3000]
    assert filter_stream(values, FilterConfig(max_hits=1)) == values


def test_emitted_values_are_sound():
    rng = np.random.default_rng(7)
    values = (1000 + rng.normal(0, 80, size=2000)).round().tolist()
    cfg = FilterConfig(4, 120)
    for index, value in state_machine(values, cfg):
        assert value == values[index - 4]
        assert all(abs(v - value) <= 120 for v in values[index - 3:index])


def test_counters():
    f = MeasurementFilter(FilterConfig(4, 120))
    for raw in [1000, 2000, 2010, 2005, 1995]:
        f.push(raw)
    assert f.consumed == 5
    assert f.emitted == 1
    assert f.restarts == 1


def test_invalid_config_and_input():
    with pytest.raises(ValueError):
        FilterConfig(max_hits=0)
    with pytest.raises(ValueError):
        FilterConfig(max_error=-1)
    with pytest.raises(ValueError):
        ingest(FilterState(), FilterConfig(), -5)
