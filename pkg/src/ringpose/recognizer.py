"""Real-time two-stage recognizer: segment, classify, window, vote, emit, reset.

Frame counts are authoritative (15-frame window, last-10 vote, 5-frame reset);
the 1.5 s / 1 s / 0.5 s wall-clock figures only hold at the nominal 10 Hz rate.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

from .features import SensorFrame, extract
from .svm import LinearModel, predict

WINDOW_LEN = 15
VOTE_LEN = 10
RESET_LEN = 5


@dataclass(frozen=True)
class RecognizerState:
    """Voting window, consecutive-noise counter and one-shot arming flag.

    The initial state is armed: the very first gesture needs no prior reset.
    """

    window: tuple[str, ...] = ()
    noise_run: int = 0
    armed: bool = True


@dataclass(frozen=True)
class GestureEvent:
    label: str
    timestamp_ms: int
    tally: dict[str, int] = field(compare=False)

    def __post_init__(self):
        if sum(self.tally.values()) != VOTE_LEN:
            raise ValueError("vote tally must cover exactly the voted frames")


def _vote(window: tuple[str, ...]) -> tuple[str, dict[str, int]]:
    """Majority over the later VOTE_LEN labels; ties go to the label whose
    last occurrence is most recent (the stabilized thumb position)."""
    voted = window[-VOTE_LEN:]
    tally = Counter(voted)
    top = max(tally.values())
    for lbl in reversed(voted):
        if tally[lbl] == top:
            return lbl, dict(tally)
    raise AssertionError("unreachable")


def advance(
    state: RecognizerState, pose_detected: bool, label: str | None, t_ms: int
) -> tuple[RecognizerState, GestureEvent | None]:
    """One transition of the state machine given this frame's SVM outputs.

    Noise frames clear the window; the fifth consecutive one re-arms. Pose
    frames grow the window (oldest dropped beyond 15); when armed and full,
    the later ten frames vote and exactly one event is emitted per arm cycle.
    """
    if not pose_detected:
        noise_run = state.noise_run + 1
        armed = state.armed or noise_run >= RESET_LEN
        return RecognizerState(window=(), noise_run=noise_run, armed=armed), None

    window = state.window + (label,)
    if len(window) > WINDOW_LEN:
        window = window[-WINDOW_LEN:]
    if state.armed and len(window) == WINDOW_LEN:
        voted, tally = _vote(window)
        event = GestureEvent(label=voted, timestamp_ms=t_ms, tally=tally)
        return RecognizerState(window=(), noise_run=0, armed=False), event
    return replace(state, window=window, noise_run=0), None


def step(
    state: RecognizerState, frame: SensorFrame, seg: LinearModel, clf: LinearModel
) -> tuple[RecognizerState, GestureEvent | None]:
    """Run both SVM stages on one frame and advance the state machine."""
    feats = extract(frame)
    is_pose, _ = predict(seg, feats)
    if not is_pose:
        return advance(state, False, None, frame.timestamp_ms)
    label, _ = predict(clf, feats)
    return advance(state, True, label, frame.timestamp_ms)


def run_stream(frames, seg: LinearModel, clf: LinearModel) -> list[GestureEvent]:
    """Fold `step` over a frame sequence starting from armed idle."""
    state = RecognizerState()
    events: list[GestureEvent] = []
    for frame in frames:
        state, event = step(state, frame, seg, clf)
        if event is not None:
            events.append(event)
    return events
