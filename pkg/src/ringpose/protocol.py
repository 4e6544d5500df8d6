"""Newline-delimited JSON protocol between the session service and its client.

One message per line, UTF-8. Unknown fields are ignored so either side can
extend payloads; unknown message types are rejected. Client commands travel
as `session_control` messages with an `action` field.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import ProtocolError

MESSAGE_TYPES = (
    "frame",
    "event",
    "stimulus",
    "feedback",
    "calibration_report",
    "session_control",
)

CLIENT_ACTIONS = ("start", "set_pose", "release", "adjust", "capture", "quit")


def encode(msg: dict) -> str:
    """One protocol message as a single JSON line (newline included)."""
    if msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg.get('type')!r}")
    return json.dumps(msg, separators=(",", ":")) + "\n"


def decode(line: str) -> dict:
    """Parse and validate one line; raises ProtocolError on garbage."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed message: {exc.msg}") from exc
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    if msg.get("type") not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg.get('type')!r}")
    return msg


# --- server-side message builders -------------------------------------------


def frame_msg(t_ms: int, readings, oor_flags) -> dict:
    return {
        "type": "frame",
        "t_ms": int(t_ms),
        "readings": [float(v) for v in readings],
        "oor": [bool(b) for b in oor_flags],
    }


def event_msg(label: str, t_ms: int, tally: dict[str, int]) -> dict:
    return {"type": "event", "label": label, "t_ms": int(t_ms), "tally": dict(tally)}


def stimulus_msg(prompt_id: int, label: str, t_ms: int, deadline_ms: int) -> dict:
    return {
        "type": "stimulus",
        "prompt_id": int(prompt_id),
        "label": label,
        "t_ms": int(t_ms),
        "deadline_ms": int(deadline_ms),
    }


def feedback_msg(prompt_id: int, true_label: str, predicted: str | None, t_ms: int) -> dict:
    if predicted is None:
        outcome = "no-emission"
    elif predicted == true_label:
        outcome = "match"
    else:
        outcome = "mismatch"
    return {
        "type": "feedback",
        "prompt_id": int(prompt_id),
        "label": true_label,
        "predicted": predicted,
        "match": outcome == "match",
        "outcome": outcome,
        "t_ms": int(t_ms),
    }


def calibration_report_msg(report_dict: dict, hint: str, round_no: int, mount: dict) -> dict:
    return {
        "type": "calibration_report",
        "round": int(round_no),
        "report": report_dict,
        "hint": hint,
        "mount": mount,
    }


def control_msg(action: str, **payload: Any) -> dict:
    return {"type": "session_control", "action": action, **payload}
