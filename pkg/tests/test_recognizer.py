"""State-machine semantics checked against a run-length-based reference simulator."""

import itertools

import numpy as np
import pytest

from ringpose.recognizer import (
    RESET_LEN,
    VOTE_LEN,
    WINDOW_LEN,
    GestureEvent,
    RecognizerState,
    advance,
    run_stream,
)


def reference_events(symbols):
    """Independent (non-incremental) reference: scan runs of consecutive
    pose frames; an armed run of >= 15 emits once, voting over frames 6..15,
    ties to the label last seen among the tied; >= 5 consecutive noise frames
    re-arm. Symbols: None = noise, otherwise the classified label.
    """
    events = []
    armed = True
    i, n = 0, len(symbols)
    while i < n:
        if symbols[i] is None:
            j = i
            while j < n and symbols[j] is None:
                j += 1
            if j - i >= RESET_LEN:
                armed = True
            i = j
        else:
            j = i
            while j < n and symbols[j] is not None:
                j += 1
            if armed and j - i >= WINDOW_LEN:
                voted = symbols[i + WINDOW_LEN - VOTE_LEN : i + WINDOW_LEN]
                counts = {}
                for lbl in voted:
                    counts[lbl] = counts.get(lbl, 0) + 1
                top = max(counts.values())
                winner = next(lbl for lbl in reversed(voted) if counts[lbl] == top)
                events.append((i + WINDOW_LEN - 1, winner))
                armed = False
            i = j
    return events


def machine_events(symbols):
    state = RecognizerState()
    events = []
    for t, sym in enumerate(symbols):
        state, ev = advance(state, sym is not None, sym, t)
        if ev is not None:
            events.append((ev.timestamp_ms, ev.label))
    return events


def test_no_events_on_pure_noise():
    assert machine_events([None] * 20) == []


def test_fifteen_identical_pose_frames_emit_once_at_frame_15():
    events = machine_events(["index-distal"] * 15)
    assert events == [(14, "index-distal")]
    assert machine_events(["index-distal"] * 30) == [(14, "index-distal")]


def test_vote_covers_later_ten():
    symbols = ["middle-middle"] * 5 + ["index-distal"] * 10
    assert machine_events(symbols) == [(14, "index-distal")]


def test_no_second_event_without_full_reset():
    symbols = ["a"] * 15 + [None] * 3 + ["b"] * 15
    assert machine_events(symbols) == [(14, "a")]
    symbols = ["a"] * 15 + [None] * 5 + ["b"] * 15
    assert machine_events(symbols) == [(14, "a"), (34, "b")]


def test_tie_goes_to_most_recent_last_occurrence():
    symbols = ["x"] * 5 + ["a", "b"] * 5
    events = machine_events(symbols)
    assert events == [(14, "b")]
    symbols = ["x"] * 5 + ["b", "a"] * 5
    assert machine_events(symbols) == [(14, "a")]


def test_tally_sums_to_ten():
    state = RecognizerState()
    tally = None
    for t, sym in enumerate(["a"] * 7 + ["b"] * 8):
        state, ev = advance(state, True, sym, t)
        if ev:
            tally = ev.tally
    assert tally == {"a": 2, "b": 8}
    with pytest.raises(ValueError):
        GestureEvent(label="a", timestamp_ms=0, tally={"a": 3})


def test_emitted_label_has_majority_share():
    # Over a two-pose alphabet the winner holds at least 5 of the 10 voted
    # frames; with more labels the guarantee is being the top count.
    gen = np.random.default_rng(11)
    for _ in range(300):
        symbols = [("a", "b")[i] for i in gen.integers(0, 2, 15)]
        events = machine_events(symbols)
        assert len(events) == 1
        _, label = events[0]
        assert sum(1 for s in symbols[5:] if s == label) >= 5
    for _ in range(300):
        symbols = [("a", "b", "c")[i] for i in gen.integers(0, 3, 15)]
        ((_, label),) = machine_events(symbols)
        counts = {s: symbols[5:].count(s) for s in set(symbols[5:])}
        assert counts[label] == max(counts.values())


def test_run_stream_matches_manual_fold(small_study=None):
    # run_stream is a fold over advance via the SVM stages; here only check
    # empty input and the concatenation property with injected labels.
    assert run_stream([], None, None) == []


def test_concatenation_property():
    gen = np.random.default_rng(12)
    alphabet = ["a", "b", None]
    for _ in range(200):
        seq = [alphabet[i] for i in gen.integers(0, 3, 40)]
        cut = int(gen.integers(0, 41))
        whole = machine_events(seq)
        state = RecognizerState()
        events = []
        for t, sym in enumerate(seq[:cut]):
            state, ev = advance(state, sym is not None, sym, t)
            if ev:
                events.append((ev.timestamp_ms, ev.label))
        for t, sym in enumerate(seq[cut:], start=cut):
            state, ev = advance(state, sym is not None, sym, t)
            if ev:
                events.append((ev.timestamp_ms, ev.label))
        assert events == whole


def test_exhaustive_equivalence_short_sequences():
    alphabet = ["a", "b", None]
    for length in range(1, 10):
        for combo in itertools.product(alphabet, repeat=length):
            assert machine_events(combo) == reference_events(combo), combo


def test_random_long_sequences_match_reference():
    gen = np.random.default_rng(13)
    alphabet = ["a", "b", None]
    for _ in range(2000):
        seq = [alphabet[i] for i in gen.integers(0, 3, 25)]
        assert machine_events(seq) == reference_events(seq)


def test_invariant_events_alternate_with_resets():
    gen = np.random.default_rng(14)
    alphabet = ["a", "b", None]
    for _ in range(300):
        seq = [alphabet[i] for i in gen.integers(0, 3, 60)]
        events = machine_events(seq)
        # between consecutive events there must be a >= 5 noise run
        times = [t for t, _ in events]
        for t0, t1 in zip(times, times[1:]):
            segment = seq[t0 + 1 : t1 + 1]
            run = best = 0
            for s in segment:
                run = run + 1 if s is None else 0
                best = max(best, run)
            assert best >= RESET_LEN
