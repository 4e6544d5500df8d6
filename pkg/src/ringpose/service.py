"""Interactive session service: study runner, calibration loop, dataset replay.

Speaks the newline-delimited JSON protocol over a localhost TCP socket, one
client at a time (later connections get a busy notice). The study and
calibration modes drive the simulator from client commands; replay mode
streams a recorded session. Frame pacing is wall-clock (one frame every
`frame_ms`) while all timestamps and deadlines stay on the logical 10 Hz
clock, so tests can run the same session far faster than real time.
"""

from __future__ import annotations

import json
import queue
import socket
import socketserver
import threading
from dataclasses import dataclass, replace

import numpy as np

from . import protocol
from .calibration import capture_reference, check, guidance
from .dataset import (
    DatasetRecord,
    MOTION_MS,
    PROMPT_MS,
    read_records,
    training_script,
    training_rows,
)
from .errors import ProtocolError, RingposeError
from .features import clamp_raw, extract
from .hand import default_hand
from .ik import default_pose_table
from .poses import CALIBRATION_POSES, NO_POSE, POSES, validate_label
from .recognizer import RecognizerState, advance
from .simulate import (
    NoiseModel,
    RingMount,
    SensorRig,
    capture_frames,
    perturb_mount,
    simulate_session,
    raycast_distances,
    _apply_noise,
)
from .svm import LinearModel, load_model, predict
from .analysis import PipelineConfig, train_models

FRAME_STEP_MS = 100  # logical 10 Hz


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 47311
    mode: str = "study"  # study | calibration | replay
    prompts: int = 12
    frame_ms: float = 100.0
    seed: int = 7
    sigma_mm: float = 0.8
    dropout: float = 0.005
    perturb: str = "none"  # none | small | medium | large
    replay_path: str | None = None
    models_dir: str | None = None
    capture_frames: int = 12
    max_idle_s: float = 60.0


class SimulatedRing:
    """Live hand simulator the client steers with set_pose / release."""

    def __init__(self, seed: int, sigma_mm: float, dropout: float):
        self.hand = default_hand()
        self.pose_table = default_pose_table()
        self.rig = SensorRig()
        self.mount = RingMount(axial_offset_mm=0.5 * self.hand.thumb_lengths[1])
        self.noise = NoiseModel(sigma_mm=sigma_mm, dropout=dropout, seed=seed)
        self._rng = np.random.default_rng([seed])
        self._current = self.pose_table[NO_POSE].copy()
        self._start = self._current.copy()
        self._target = self._current.copy()
        self._t_move_start = 0

    def set_target(self, label: str, t_ms: int) -> None:
        self._start = self._current.copy()
        self._target = self.pose_table[validate_label(label)].copy()
        self._t_move_start = t_ms

    def frame_at(self, t_ms: int, mount: RingMount | None = None):
        progress = min(1.0, (t_ms - self._t_move_start) / MOTION_MS) if MOTION_MS else 1.0
        self._current = self._start + progress * (self._target - self._start)
        dist, _ = raycast_distances(self.hand, self._current[None, :], mount or self.mount, self.rig)
        raw = _apply_noise(dist, self.noise, self._rng)[0]
        return clamp_raw(raw, timestamp_ms=t_ms)


def train_default_models(seed: int, config: PipelineConfig | None = None):
    """Self-train both SVM stages on freshly simulated default-ring sessions."""
    config = config or PipelineConfig(C=10.0)
    ring = SimulatedRing(seed=seed, sigma_mm=1.5, dropout=0.01)
    rows = []
    rng = np.random.default_rng([seed, 99])
    for s in range(3):
        script = training_script(rng)
        sims = simulate_session(
            script, ring.hand, ring.pose_table, ring.mount, ring.rig,
            NoiseModel(1.5, 0.01, seed + 7000 + s), transition_ms=MOTION_MS, jitter_deg=1.0,
        )
        records = [
            DatasetRecord(t_ms=f.t_ms, raw=f.raw, label=f.label, session_id=f"boot-{s}",
                          user_id="default", phase="train", prompt_id=f.entry_index)
            for f in sims
        ]
        rows.extend(training_rows(records))
    return train_models(rows, config)


class _Client:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.commands: queue.Queue = queue.Queue()
        self.closed = threading.Event()
        self._wfile = sock.makefile("w", encoding="utf-8", newline="")
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        try:
            rfile = self.sock.makefile("r", encoding="utf-8")
            for line in rfile:
                line = line.strip()
                if not line:
                    continue
                try:
                    msg = protocol.decode(line)
                except ProtocolError as exc:
                    self.commands.put({"type": "session_control", "action": "_bad", "error": str(exc)})
                    continue
                self.commands.put(msg)
        except OSError:
            pass
        finally:
            self.closed.set()

    def send(self, msg: dict) -> bool:
        try:
            self._wfile.write(protocol.encode(msg))
            self._wfile.flush()
            return True
        except (OSError, ValueError):
            self.closed.set()
            return False


class SessionService:
    """One-session-at-a-time protocol server."""

    def __init__(self, config: ServiceConfig, seg: LinearModel | None = None, clf: LinearModel | None = None):
        self.config = config
        if config.models_dir:
            import os

            seg = load_model(os.path.join(config.models_dir, "segmenter.json"))
            clf = load_model(os.path.join(config.models_dir, "classifier.json"))
        if (seg is None or clf is None) and config.mode in ("study", "replay"):
            seg, clf = train_default_models(config.seed)
        self.seg = seg
        self.clf = clf
        self._busy = threading.Lock()
        self._server: socketserver.ThreadingTCPServer | None = None

    # -- lifecycle -----------------------------------------------------------

    def serve_forever(self):
        service = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                service._handle_connection(self.request)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((self.config.host, self.config.port), Handler)
        with self._server:
            self.port = self._server.server_address[1]
            self._server.serve_forever(poll_interval=0.05)

    def start_background(self) -> int:
        ready = threading.Event()
        holder: dict = {}

        def run():
            service = self

            class Handler(socketserver.BaseRequestHandler):
                def handle(self):
                    service._handle_connection(self.request)

            class Server(socketserver.ThreadingTCPServer):
                allow_reuse_address = True
                daemon_threads = True

            try:
                self._server = Server((self.config.host, self.config.port), Handler)
            except OSError as exc:
                holder["error"] = exc
                ready.set()
                return
            holder["port"] = self._server.server_address[1]
            ready.set()
            with self._server:
                self._server.serve_forever(poll_interval=0.05)

        threading.Thread(target=run, daemon=True).start()
        if not ready.wait(10.0):
            raise RingposeError("service failed to start (timeout)")
        if "error" in holder:
            raise RingposeError(f"cannot bind {self.config.host}:{self.config.port}: {holder['error']}")
        self.port = holder["port"]
        return self.port

    def shutdown(self):
        if self._server is not None:
            self._server.shutdown()

    # -- connection handling ---------------------------------------------------

    def _handle_connection(self, sock: socket.socket):
        if not self._busy.acquire(blocking=False):
            try:
                wfile = sock.makefile("w", encoding="utf-8", newline="")
                wfile.write(protocol.encode(protocol.control_msg("busy", reason="another session is active")))
                wfile.flush()
            except OSError:
                pass
            finally:
                sock.close()
            return
        try:
            client = _Client(sock)
            try:
                if self.config.mode == "study":
                    self._run_study(client)
                elif self.config.mode == "calibration":
                    self._run_calibration(client)
                elif self.config.mode == "replay":
                    self._run_replay(client)
                else:
                    client.send(protocol.control_msg("error", error=f"unknown mode {self.config.mode}"))
            finally:
                sock.close()
        finally:
            self._busy.release()

    def _pace(self):
        if self.config.frame_ms > 0:
            import time

            time.sleep(self.config.frame_ms / 1000.0)

    # -- study mode -------------------------------------------------------------

    def _prompt_script(self, rng: np.random.Generator) -> list[str]:
        n = self.config.prompts
        reps = -(-n // len(POSES))
        labels = [p for p in POSES for _ in range(reps)]
        order = rng.permutation(len(labels))
        return [labels[i] for i in order[:n]]

    def _run_study(self, client: _Client):
        cfg = self.config
        ring = SimulatedRing(cfg.seed, cfg.sigma_mm, cfg.dropout)
        rng = np.random.default_rng([cfg.seed, 1])
        script = self._prompt_script(rng)
        client.send(
            protocol.control_msg(
                "start", mode="study", prompts=len(script), frame_ms=cfg.frame_ms,
                prompt_ms=PROMPT_MS, labels=list(POSES),
            )
        )
        state = RecognizerState()
        t = 0
        prompt_idx = -1
        feedback_sent = True
        score = 0
        while not client.closed.is_set():
            while True:
                try:
                    cmd = client.commands.get_nowait()
                except queue.Empty:
                    break
                action = cmd.get("action")
                if action == "set_pose":
                    try:
                        ring.set_target(cmd.get("label"), t)
                    except (ValueError, RingposeError) as exc:
                        client.send(protocol.control_msg("error", error=str(exc)))
                elif action == "release":
                    ring.set_target(NO_POSE, t)
                elif action == "quit":
                    client.send(protocol.control_msg("end", score=score, prompts=len(script)))
                    return
                elif action == "_bad":
                    client.send(protocol.control_msg("error", error=cmd.get("error")))

            if prompt_idx + 1 < len(script) and t >= (prompt_idx + 1) * PROMPT_MS:
                if not feedback_sent:
                    # Deadline hit with no event: the prompt ends silent.
                    client.send(protocol.feedback_msg(prompt_idx, script[prompt_idx], None, t))
                prompt_idx += 1
                feedback_sent = False
                client.send(
                    protocol.stimulus_msg(
                        prompt_idx, script[prompt_idx], t, (prompt_idx + 1) * PROMPT_MS
                    )
                )
            elif prompt_idx + 1 == len(script) and t >= len(script) * PROMPT_MS:
                if not feedback_sent:
                    client.send(protocol.feedback_msg(prompt_idx, script[prompt_idx], None, t))
                    feedback_sent = True
                client.send(protocol.control_msg("end", score=score, prompts=len(script)))
                return

            frame = ring.frame_at(t)
            client.send(protocol.frame_msg(t, frame.readings, frame.oor_flags))
            feats = extract(frame)
            pose_detected, _ = predict(self.seg, feats)
            label = predict(self.clf, feats)[0] if pose_detected else None
            state, event = advance(state, bool(pose_detected), label, t)
            if event is not None:
                client.send(protocol.event_msg(event.label, event.timestamp_ms, event.tally))
                if not feedback_sent and prompt_idx >= 0:
                    fb = protocol.feedback_msg(prompt_idx, script[prompt_idx], event.label, t)
                    client.send(fb)
                    feedback_sent = True
                    if fb["match"]:
                        score += 1
            t += FRAME_STEP_MS
            self._pace()

    # -- calibration mode ---------------------------------------------------------

    def _run_calibration(self, client: _Client):
        cfg = self.config
        ring = SimulatedRing(cfg.seed, cfg.sigma_mm, cfg.dropout)
        original = ring.mount
        capture_noise = NoiseModel(1.5, 0.01, cfg.seed + 500)

        def cap(mount: RingMount, round_no: int):
            return {
                p: capture_frames(
                    ring.hand, ring.pose_table, p, mount, ring.rig,
                    replace(capture_noise, seed=capture_noise.seed + 10 * round_no + i),
                    n_frames=cfg.capture_frames,
                )
                for i, p in enumerate(CALIBRATION_POSES)
            }

        reference = capture_reference(cap(original, 0))
        current = original
        if cfg.perturb != "none":
            current = perturb_mount(original, cfg.perturb, np.random.default_rng([cfg.seed, 2]))
        client.send(
            protocol.control_msg(
                "start", mode="calibration", threshold_mm=0.7,
                poses=list(CALIBRATION_POSES), perturb=cfg.perturb,
            )
        )
        round_no = 0
        while not client.closed.is_set():
            try:
                cmd = client.commands.get(timeout=cfg.max_idle_s)
            except queue.Empty:
                client.send(protocol.control_msg("end", reason="idle timeout"))
                return
            action = cmd.get("action")
            if action == "adjust":
                try:
                    current = replace(
                        current,
                        rotation_deg=current.rotation_deg + float(cmd.get("rotation_deg", 0.0)),
                        axial_offset_mm=current.axial_offset_mm + float(cmd.get("axial_mm", 0.0)),
                        tilt_deg=current.tilt_deg + float(cmd.get("tilt_deg", 0.0)),
                    )
                except RingposeError as exc:
                    client.send(protocol.control_msg("error", error=str(exc)))
            elif action == "capture":
                round_no += 1
                try:
                    report = check(reference, cap(current, round_no))
                except RingposeError as exc:
                    client.send(protocol.control_msg("error", error=str(exc)))
                    continue
                client.send(
                    protocol.calibration_report_msg(
                        report.to_dict(), guidance(report), round_no,
                        {
                            "rotation_deg": current.rotation_deg - original.rotation_deg,
                            "axial_mm": current.axial_offset_mm - original.axial_offset_mm,
                            "tilt_deg": current.tilt_deg - original.tilt_deg,
                        },
                    )
                )
            elif action == "quit":
                client.send(protocol.control_msg("end", rounds=round_no))
                return
            elif action == "_bad":
                client.send(protocol.control_msg("error", error=cmd.get("error")))


    # -- replay mode -----------------------------------------------------------------

    def _run_replay(self, client: _Client):
        cfg = self.config
        records = read_records(cfg.replay_path)
        client.send(protocol.control_msg("start", mode="replay", frames=len(records)))
        state = RecognizerState()
        for rec in records:
            if client.closed.is_set():
                return
            frame = rec.frame()
            client.send(protocol.frame_msg(frame.timestamp_ms, frame.readings, frame.oor_flags))
            feats = extract(frame)
            pose_detected, _ = predict(self.seg, feats)
            label = predict(self.clf, feats)[0] if pose_detected else None
            state, event = advance(state, bool(pose_detected), label, frame.timestamp_ms)
            if event is not None:
                client.send(protocol.event_msg(event.label, event.timestamp_ms, event.tally))
            self._pace()
        client.send(protocol.control_msg("end", frames=len(records)))
