"""Feature contract: clamp, flags, count, in-range mean."""

import numpy as np
import pytest

from ringpose.errors import InputError
from ringpose.features import SensorFrame, clamp_raw, extract, extract_channels


def test_clamp_passthrough():
    frame = clamp_raw([75.0] * 9)
    assert frame.readings == (75.0,) * 9
    assert frame.oor_flags == (False,) * 9


def test_clamp_above_range_flags():
    raw = [162.3, 10, 20, 30, 40, 50, 60, 70, 80]
    frame = clamp_raw(raw)
    assert frame.readings[0] == 150.0 and frame.oor_flags[0]
    assert frame.readings[1:] == (10, 20, 30, 40, 50, 60, 70, 80)
    assert not any(frame.oor_flags[1:])


def test_clamp_exactly_150_is_out_of_range():
    frame = clamp_raw([150.0] + [10.0] * 8)
    assert frame.readings[0] == 150.0 and frame.oor_flags[0]


def test_clamp_sentinel_and_infinite():
    frame = clamp_raw([999.0, float("inf")] + [5.0] * 7)
    assert frame.readings[0] == frame.readings[1] == 150.0
    assert frame.oor_flags[0] and frame.oor_flags[1]


def test_clamp_rejects_negative_and_nan():
    with pytest.raises(InputError):
        clamp_raw([-0.1] + [5.0] * 8)
    with pytest.raises(InputError):
        clamp_raw([float("nan")] + [5.0] * 8)


def test_clamp_rejects_wrong_arity():
    with pytest.raises(InputError):
        clamp_raw([5.0] * 8)


def test_extract_basic_mean():
    frame = clamp_raw([10, 20, 30, 40, 50, 60, 70, 80, 90])
    f = extract(frame)
    assert f.shape == (11,)
    assert list(f[:9]) == [10, 20, 30, 40, 50, 60, 70, 80, 90]
    assert f[9] == 0.0
    assert f[10] == 50.0


def test_extract_all_out_of_range():
    f = extract(clamp_raw([150.0] * 9))
    assert f[9] == 9.0 and f[10] == 150.0


def test_extract_mixed():
    f = extract(clamp_raw([30, 30, 30, 150, 150, 150, 150, 150, 150]))
    assert f[9] == 6.0 and f[10] == 30.0


def test_extract_mean_bounded_by_in_range_readings():
    gen = np.random.default_rng(5)
    for _ in range(200):
        raw = gen.uniform(0, 200, 9)
        frame = clamp_raw(raw)
        f = extract(frame)
        in_range = [r for r, o in zip(frame.readings, frame.oor_flags) if not o]
        if in_range:
            assert min(in_range) - 1e-9 <= f[10] <= max(in_range) + 1e-9
        assert 0 <= f[9] <= 9 and 0.0 <= f[10] <= 150.0


def test_permutation_of_in_range_channels():
    gen = np.random.default_rng(6)
    for _ in range(100):
        raw = list(gen.uniform(0, 200, 9))
        i, j = gen.integers(0, 9, 2)
        swapped = list(raw)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        f1, f2 = extract(clamp_raw(raw)), extract(clamp_raw(swapped))
        assert f1[9] == f2[9] and f1[10] == f2[10]
        expect = list(f1[:9])
        expect[i], expect[j] = expect[j], expect[i]
        assert list(f2[:9]) == expect


def test_reclamp_idempotent():
    gen = np.random.default_rng(7)
    for _ in range(100):
        raw = gen.uniform(0, 250, 9)
        once = clamp_raw(raw)
        twice = clamp_raw(once.readings, timestamp_ms=once.timestamp_ms)
        assert once == twice
        assert np.array_equal(extract(once), extract(twice))


def test_frame_invariant_enforced():
    with pytest.raises(InputError):
        SensorFrame(timestamp_ms=0, readings=(150.0,) * 9, oor_flags=(False,) * 9)
    with pytest.raises(InputError):
        SensorFrame(timestamp_ms=0, readings=(10.0,) * 9, oor_flags=(True,) + (False,) * 8)


def test_extract_channels_full_set_matches_extract():
    gen = np.random.default_rng(8)
    for _ in range(50):
        frame = clamp_raw(gen.uniform(0, 200, 9))
        assert np.array_equal(extract_channels(frame, tuple(range(1, 10))), extract(frame))


def test_extract_channels_subset():
    frame = clamp_raw([10, 150, 30, 150, 50, 150, 70, 150, 90])
    f = extract_channels(frame, (1, 2, 3))
    assert list(f[:3]) == [10, 150, 30]
    assert f[3] == 1.0 and f[4] == 20.0
