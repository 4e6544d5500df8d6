"""Dataset records, JSONL persistence, and study-session generation.

A study dataset mirrors the user-study protocol: per simulated user, three
training sessions (65 prompts: 13 labels x 5, randomized, 3 s react + 1 s
record each), two in-session test sessions (60 prompts: 12 poses x 5, each
followed by a return to rest), then a remount: one cross-session test with
the ring perturbed as worn ("cross-raw") and one after the calibration loop
brought it back ("cross-cal").
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import CalibrationReference, capture_reference, run_remount_loop
from .errors import DatasetError
from .features import SensorFrame, clamp_raw
from .hand import HandConfig, default_hand
from .ik import solve_pose_table
from .poses import ALL_LABELS, NO_POSE, POSES, CALIBRATION_POSES
from .simulate import (
    NoiseModel,
    RingMount,
    ScriptEntry,
    SensorRig,
    SimFrame,
    perturb_mount,
    capture_frames,
    simulate_session,
)

MANIFEST_VERSION = 1

# A prompt shows for 4 s: the performer reacts and moves within the react
# window (motion modeled as an 800 ms transition, then holding the pose for
# the rest of it) and the final second is the recorded instance.
PROMPT_MS = 4000
MOTION_MS = 800
PROMPT_HOLD_MS = PROMPT_MS - MOTION_MS
RETURN_MS = 2000  # test sessions: reset to rest after the feedback
RETURN_HOLD_MS = RETURN_MS - MOTION_MS
PROMPTS_PER_POSE = 5
RECORD_FRAMES = 10  # the "1 s record" rule at 10 Hz


@dataclass(frozen=True)
class DatasetRecord:
    t_ms: int
    raw: tuple[float, ...]
    label: str
    session_id: str
    user_id: str
    phase: str  # "train" | "test"
    prompt_id: int | None

    def frame(self) -> SensorFrame:
        return clamp_raw(self.raw, timestamp_ms=self.t_ms)


def record_to_json(rec: DatasetRecord) -> str:
    return json.dumps(
        {
            "t_ms": rec.t_ms,
            "raw": list(rec.raw),
            "label": rec.label,
            "session_id": rec.session_id,
            "user_id": rec.user_id,
            "phase": rec.phase,
            "prompt_id": rec.prompt_id,
        },
        separators=(",", ":"),
    )


def write_records(path, records: list[DatasetRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_json(rec))
            fh.write("\n")


def read_records(path) -> list[DatasetRecord]:
    records: list[DatasetRecord] = []
    last_t = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", str(path), lineno) from exc
            try:
                raw = tuple(float(v) for v in doc["raw"])
                rec = DatasetRecord(
                    t_ms=int(doc["t_ms"]),
                    raw=raw,
                    label=str(doc["label"]),
                    session_id=str(doc["session_id"]),
                    user_id=str(doc["user_id"]),
                    phase=str(doc["phase"]),
                    prompt_id=None if doc.get("prompt_id") is None else int(doc["prompt_id"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"bad record field: {exc}", str(path), lineno) from exc
            if len(rec.raw) != 9:
                raise DatasetError(f"raw must have 9 channels, got {len(rec.raw)}", str(path), lineno)
            if any(v < 0 for v in rec.raw):
                raise DatasetError("raw distances must be non-negative", str(path), lineno)
            if rec.label not in ALL_LABELS:
                raise DatasetError(f"unknown label {rec.label!r}", str(path), lineno)
            if rec.phase not in ("train", "test"):
                raise DatasetError(f"phase must be train/test, got {rec.phase!r}", str(path), lineno)
            if last_t is not None and rec.t_ms <= last_t:
                raise DatasetError(f"t_ms not strictly increasing at {rec.t_ms}", str(path), lineno)
            last_t = rec.t_ms
            records.append(rec)
    return records


# --- study scripts ---------------------------------------------------------


def training_script(rng: np.random.Generator) -> list[ScriptEntry]:
    """65 randomly ordered prompts: all 13 labels (rest included) x 5."""
    labels = [lbl for lbl in ALL_LABELS for _ in range(PROMPTS_PER_POSE)]
    order = rng.permutation(len(labels))
    return [ScriptEntry(labels[i], PROMPT_HOLD_MS) for i in order]


def testing_script(rng: np.random.Generator) -> list[ScriptEntry]:
    """60 pose prompts (12 x 5), each followed by a return to rest."""
    labels = [lbl for lbl in POSES for _ in range(PROMPTS_PER_POSE)]
    order = rng.permutation(len(labels))
    entries: list[ScriptEntry] = []
    for i in order:
        entries.append(ScriptEntry(labels[i], PROMPT_HOLD_MS))
        entries.append(ScriptEntry(NO_POSE, RETURN_HOLD_MS))
    return entries


def _to_records(
    sims: list[SimFrame],
    entry_prompt: dict[int, int | None],
    session_id: str,
    user_id: str,
    phase: str,
) -> list[DatasetRecord]:
    return [
        DatasetRecord(
            t_ms=s.t_ms,
            raw=s.raw,
            label=s.label,
            session_id=session_id,
            user_id=user_id,
            phase=phase,
            prompt_id=entry_prompt[s.entry_index],
        )
        for s in sims
    ]


# --- simulated users and full dataset generation ---------------------------


@dataclass
class SimulatedUser:
    user_id: str
    hand: HandConfig
    pose_table: dict[str, np.ndarray]
    mount: RingMount
    rig: SensorRig
    sigma_mm: float
    dropout: float
    jitter_deg: float
    seed: int  # base for per-session noise seeds


@dataclass
class UserData:
    user: SimulatedUser
    sessions: dict[str, list[DatasetRecord]] = field(default_factory=dict)
    reference: CalibrationReference | None = None
    calibration_info: dict = field(default_factory=dict)


@dataclass
class StudyConfig:
    users: int = 10
    train_sessions: int = 3
    test_sessions: int = 2
    seed: int = 42
    sigma_mm: float = 1.5
    dropout: float = 0.01
    jitter_deg: float = 1.5
    # The band ring drifts a little on the thumb between sessions; this also
    # teaches the classifier to tolerate what calibration cannot measure.
    session_drift_rot_deg: float = 2.5
    session_drift_axial_mm: float = 0.7
    rate_hz: float = 10.0
    cross_session: bool = True

    def to_dict(self) -> dict:
        return {
            "users": self.users,
            "train_sessions": self.train_sessions,
            "test_sessions": self.test_sessions,
            "seed": self.seed,
            "sigma_mm": self.sigma_mm,
            "dropout": self.dropout,
            "jitter_deg": self.jitter_deg,
            "session_drift_rot_deg": self.session_drift_rot_deg,
            "session_drift_axial_mm": self.session_drift_axial_mm,
            "rate_hz": self.rate_hz,
            "cross_session": self.cross_session,
        }

    @staticmethod
    def from_dict(doc: dict) -> "StudyConfig":
        return StudyConfig(**{k: doc[k] for k in StudyConfig().to_dict() if k in doc})


def make_user(config: StudyConfig, index: int) -> SimulatedUser:
    """Deterministically vary the reference hand into one simulated participant."""
    rng = np.random.default_rng([config.seed, index, 0])
    base = default_hand()
    scale = float(rng.uniform(0.9, 1.1))
    lengths = {
        f: tuple(v * rng.uniform(0.96, 1.04) for v in base.finger_lengths[f])
        for f in base.finger_lengths
    }
    thumb_base = tuple(v + rng.uniform(-1.5, 1.5) for v in base.thumb_base)
    splay = {f: v + rng.uniform(-1.5, 1.5) for f, v in base.finger_splay_deg.items()}
    hand = replace(
        base,
        scale=scale,
        finger_lengths=lengths,
        thumb_base=thumb_base,
        finger_splay_deg=splay,
    )
    prox_len = hand.thumb_lengths[1] * scale
    mount = RingMount(
        axial_offset_mm=0.5 * prox_len + float(rng.uniform(-1.0, 1.0)),
        rotation_deg=110.0 + float(rng.uniform(-2.0, 2.0)),
        tilt_deg=0.0,
    )
    rig = SensorRig()
    pose_table = solve_pose_table(hand, mount=mount, rig=rig)
    return SimulatedUser(
        user_id=f"u{index + 1:02d}",
        hand=hand,
        pose_table=pose_table,
        mount=mount,
        rig=rig,
        sigma_mm=config.sigma_mm,
        dropout=config.dropout,
        jitter_deg=config.jitter_deg,
        seed=int(rng.integers(2**31)),
    )


def _noise(user: SimulatedUser, stream: int) -> NoiseModel:
    return NoiseModel(sigma_mm=user.sigma_mm, dropout=user.dropout, seed=user.seed + stream)


def _simulate_study_session(
    user: SimulatedUser,
    mount: RingMount,
    session_id: str,
    phase: str,
    script: list[ScriptEntry],
    entry_prompt: dict[int, int | None],
    noise: NoiseModel,
    rate_hz: float,
    transition_ms: int,
) -> list[DatasetRecord]:
    sims = simulate_session(
        script,
        user.hand,
        user.pose_table,
        mount,
        user.rig,
        noise,
        rate_hz=rate_hz,
        transition_ms=transition_ms,
        jitter_deg=user.jitter_deg,
    )
    return _to_records(sims, entry_prompt, session_id, user.user_id, phase)


def generate_user_data(config: StudyConfig, index: int) -> UserData:
    user = make_user(config, index)
    data = UserData(user=user)
    script_rng = np.random.default_rng([config.seed, index, 1])
    drift_rng = np.random.default_rng([config.seed, index, 3])
    drift = (config.session_drift_axial_mm, config.session_drift_rot_deg)
    stream = 0

    for s in range(config.train_sessions):
        script = training_script(script_rng)
        entry_prompt = {i: i for i in range(len(script))}
        stream += 1
        data.sessions[f"train-{s + 1}"] = _simulate_study_session(
            user, perturb_mount(user.mount, drift, drift_rng), f"train-{s + 1}", "train",
            script, entry_prompt, _noise(user, stream), config.rate_hz, MOTION_MS,
        )

    for s in range(config.test_sessions):
        script = testing_script(script_rng)
        entry_prompt = {i: (i // 2 if i % 2 == 0 else None) for i in range(len(script))}
        stream += 1
        data.sessions[f"test-{s + 1}"] = _simulate_study_session(
            user, perturb_mount(user.mount, drift, drift_rng), f"test-{s + 1}", "test",
            script, entry_prompt, _noise(user, stream), config.rate_hz, MOTION_MS,
        )

    if config.cross_session:
        stream += 1
        ref_noise = _noise(user, stream)
        ref_caps = {
            p: capture_frames(user.hand, user.pose_table, p, user.mount, user.rig,
                              replace(ref_noise, seed=ref_noise.seed + i), n_frames=24)
            for i, p in enumerate(CALIBRATION_POSES)
        }
        data.reference = capture_reference(ref_caps)

        remount_rng = np.random.default_rng([config.seed, index, 2])
        worn = perturb_mount(user.mount, "medium", remount_rng)

        script = testing_script(script_rng)
        entry_prompt = {i: (i // 2 if i % 2 == 0 else None) for i in range(len(script))}
        stream += 1
        data.sessions["cross-raw"] = _simulate_study_session(
            user, worn, "cross-raw", "test", script, entry_prompt,
            _noise(user, stream), config.rate_hz, MOTION_MS,
        )

        counter = [stream + 100]
        def capture_fn(m):
            counter[0] += len(CALIBRATION_POSES)
            return {
                p: capture_frames(user.hand, user.pose_table, p, m, user.rig,
                                  _noise(user, counter[0] + i), n_frames=24)
                for i, p in enumerate(CALIBRATION_POSES)
            }

        calibrated, reports = run_remount_loop(capture_fn, data.reference, worn)
        data.calibration_info = {
            "perturbed_rotation_deg": worn.rotation_deg - user.mount.rotation_deg,
            "perturbed_axial_mm": worn.axial_offset_mm - user.mount.axial_offset_mm,
            "rounds": len(reports),
            "passed": bool(any(r.passed for r in reports)),
            "final_average_offset_mm": min(r.average_offset_mm for r in reports),
            "residual_rotation_deg": calibrated.rotation_deg - user.mount.rotation_deg,
            "residual_axial_mm": calibrated.axial_offset_mm - user.mount.axial_offset_mm,
        }

        script = testing_script(script_rng)
        entry_prompt = {i: (i // 2 if i % 2 == 0 else None) for i in range(len(script))}
        stream += 200
        data.sessions["cross-cal"] = _simulate_study_session(
            user, calibrated, "cross-cal", "test", script, entry_prompt,
            _noise(user, stream), config.rate_hz, MOTION_MS,
        )

    return data


def generate_study(config: StudyConfig) -> list[UserData]:
    return [generate_user_data(config, i) for i in range(config.users)]


# --- on-disk layout ---------------------------------------------------------


def write_study(root, config: StudyConfig, users: list[UserData]) -> None:
    os.makedirs(root, exist_ok=True)
    manifest = {
        "version": MANIFEST_VERSION,
        "config": config.to_dict(),
        "users": [],
    }
    for data in users:
        udir = os.path.join(root, data.user.user_id)
        os.makedirs(udir, exist_ok=True)
        for session_id, records in data.sessions.items():
            write_records(os.path.join(udir, f"{session_id}.jsonl"), records)
        entry = {"user_id": data.user.user_id, "sessions": sorted(data.sessions)}
        if data.reference is not None:
            entry["calibration_reference"] = data.reference.to_dict()
            entry["calibration"] = data.calibration_info
        manifest["users"].append(entry)
    with open(os.path.join(root, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


@dataclass
class LoadedStudy:
    config: StudyConfig
    sessions: dict[str, dict[str, list[DatasetRecord]]]  # user -> session -> records
    references: dict[str, CalibrationReference]
    calibration_info: dict[str, dict]


def load_study(root) -> LoadedStudy:
    manifest_path = os.path.join(root, "manifest.json")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise DatasetError("manifest.json not found", str(manifest_path)) from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid manifest: {exc.msg}", str(manifest_path)) from exc
    if manifest.get("version") != MANIFEST_VERSION:
        raise DatasetError(f"unsupported manifest version {manifest.get('version')!r}", str(manifest_path))
    config = StudyConfig.from_dict(manifest["config"])
    sessions: dict[str, dict[str, list[DatasetRecord]]] = {}
    references: dict[str, CalibrationReference] = {}
    calibration_info: dict[str, dict] = {}
    for entry in manifest["users"]:
        uid = entry["user_id"]
        sessions[uid] = {}
        for session_id in entry["sessions"]:
            path = os.path.join(root, uid, f"{session_id}.jsonl")
            sessions[uid][session_id] = read_records(path)
        if "calibration_reference" in entry:
            references[uid] = CalibrationReference.from_dict(entry["calibration_reference"])
            calibration_info[uid] = entry.get("calibration", {})
    return LoadedStudy(config=config, sessions=sessions, references=references, calibration_info=calibration_info)


# --- training-row extraction -------------------------------------------------


def prompt_groups(records: list[DatasetRecord]) -> list[tuple[int, str, list[DatasetRecord]]]:
    """(prompt_id, prompt label, frames) for each annotated prompt, in order.

    The prompt label is the ground-truth label of its final (held) frames.
    """
    groups: dict[int, list[DatasetRecord]] = {}
    for rec in records:
        if rec.prompt_id is not None:
            groups.setdefault(rec.prompt_id, []).append(rec)
    out = []
    for pid in sorted(groups):
        frames = groups[pid]
        out.append((pid, frames[-1].label, frames))
    return out


def training_rows(records: list[DatasetRecord]) -> list[tuple[SensorFrame, str]]:
    """The recorded second of each prompt: the rows both SVMs train on."""
    rows: list[tuple[SensorFrame, str]] = []
    for _, label, frames in prompt_groups(records):
        for rec in frames[-RECORD_FRAMES:]:
            rows.append((rec.frame(), label))
    return rows
