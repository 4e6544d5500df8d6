"""Acceptance suite: every primary criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line per
criterion. The default benchmark (seed 42, 10 users, default noise, 3 train +
2 test sessions plus the remount pair) is generated once per session.
"""

import json
import socket
import time

import numpy as np
import pytest

from ringpose.analysis import (
    PipelineConfig,
    ablate_exclude_one,
    ablate_subsets,
    run_benchmark,
    subset_eval,
    training_reduction,
)
from ringpose.dataset import StudyConfig, generate_study, write_study, load_study, write_records
from ringpose.errors import InputError
from ringpose.features import clamp_raw, extract
from ringpose.poses import SUBSETS
from ringpose.recognizer import RecognizerState, advance, run_stream
from ringpose.svm import (
    load_model,
    predict_batch,
    save_model,
    train_binary,
    decision_scores,
)

from test_recognizer import reference_events
from test_svm import separable_set, subgradient_oracle

CONFIG = PipelineConfig()


def report(name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE [{status}] {name}" + (f" — {detail}" if detail else ""), flush=True)
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module")
def benchmark():
    t0 = time.time()
    users = generate_study(StudyConfig())
    sessions = {d.user.user_id: d.sessions for d in users}
    result = run_benchmark(sessions, CONFIG)
    elapsed = time.time() - t0
    return {"users": users, "sessions": sessions, "result": result, "seconds": elapsed}


# --- 1. feature contract ------------------------------------------------------


def test_criterion_feature_contract():
    ok = True
    detail = []
    f = extract(clamp_raw([10, 20, 30, 40, 50, 60, 70, 80, 90]))
    ok &= list(f) == [10, 20, 30, 40, 50, 60, 70, 80, 90, 0.0, 50.0]

    frame = clamp_raw([150.0] * 9)
    ok &= all(frame.oor_flags) and extract(frame)[9] == 9.0 and extract(frame)[10] == 150.0

    frame = clamp_raw([162.3] + [75.0] * 8)
    ok &= frame.readings[0] == 150.0 and frame.oor_flags[0] and not any(frame.oor_flags[1:])

    frame = clamp_raw([30, 30, 30, 150, 150, 150, 150, 150, 150])
    ok &= list(extract(frame)[9:]) == [6.0, 30.0]

    gen = np.random.default_rng(1)
    for _ in range(500):
        raw = list(gen.uniform(0, 200, 9))
        i, j = gen.integers(0, 9, 2)
        swapped = list(raw)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        f1, f2 = extract(clamp_raw(raw)), extract(clamp_raw(swapped))
        if not (f1[9] == f2[9] and f1[10] == f2[10]):
            ok = False
            detail.append("permutation changed f10/f11")
            break
        twice = clamp_raw(clamp_raw(raw).readings)
        if not np.array_equal(extract(twice), f1):
            ok = False
            detail.append("re-clamp not idempotent")
            break
    try:
        clamp_raw([-1.0] + [0.0] * 8)
        ok = False
        detail.append("negative raw accepted")
    except InputError:
        pass
    report("feature contract (clamp/extract exact)", bool(ok), "; ".join(detail))


# --- 2. SVM oracle equivalence --------------------------------------------------


def test_criterion_svm_oracle_equivalence():
    t0 = time.time()
    gen = np.random.default_rng(4242)
    mismatches = 0
    for trial in range(50):
        n = int(gen.integers(30, 301))
        dim = int(gen.integers(1, 12))
        x, y = separable_set(gen, n, dim, margin=0.5)
        c = 1.0
        model = train_binary(list(zip(x, y)), C=c, tol=1e-6, max_epochs=4000, seed=trial)
        for alpha in model.dual_coefs:
            assert np.all(alpha >= -1e-12) and np.all(alpha <= c + 1e-12), "dual infeasible"
        for curve in model.objective_curves:
            assert np.all(np.diff(curve) >= -1e-9), "dual objective decreased"
        xs = model.scaler.transform(x)
        w_o, b_o = subgradient_oracle(xs, np.where(y, 1.0, -1.0), c)
        ours = np.asarray(predict_batch(model, x))
        oracle = (xs @ w_o + b_o) >= 0
        mismatches += int(np.sum(ours != oracle))
    elapsed = time.time() - t0
    report(
        "SVM oracle equivalence (50 datasets)",
        mismatches == 0 and elapsed <= 60.0,
        f"mismatches={mismatches}, runtime={elapsed:.1f}s (limit 60s)",
    )


# --- 3. recognizer oracle equivalence ---------------------------------------------


def machine_trace(symbols):
    state = RecognizerState()
    events = []
    for t, sym in enumerate(symbols):
        state, ev = advance(state, sym is not None, sym, t)
        if ev is not None:
            events.append((t, ev.label))
    return events


def test_criterion_recognizer_equivalence():
    alphabet = ("a", "b", None)
    mismatches = 0
    checked = 0
    # exhaustive to length 12 via DFS (production machine carried incrementally)
    stack = [(RecognizerState(), (), ())]
    while stack:
        state, symbols, events = stack.pop()
        if len(symbols) == 12:
            continue
        t = len(symbols)
        for sym in alphabet:
            new_state, ev = advance(state, sym is not None, sym, t)
            new_events = events + ((t, ev.label),) if ev else events
            new_symbols = symbols + (sym,)
            checked += 1
            if list(new_events) != reference_events(new_symbols):
                mismatches += 1
            stack.append((new_state, new_symbols, new_events))
    gen = np.random.default_rng(77)
    for _ in range(10000):
        seq = [alphabet[i] for i in gen.integers(0, 3, 25)]
        checked += 1
        if machine_trace(seq) != reference_events(seq):
            mismatches += 1
    report(
        "recognizer oracle equivalence (exhaustive ≤12 + 10k random length-25)",
        mismatches == 0,
        f"{checked} sequences, {mismatches} mismatches",
    )


# --- 4. end-to-end benchmark -------------------------------------------------------


def test_criterion_benchmark_accuracy_and_runtime(benchmark):
    acc = benchmark["result"].in_session.accuracy
    ok = acc >= 0.90 and benchmark["seconds"] <= 300.0
    report(
        "end-to-end benchmark (seed 42, 10 users)",
        ok,
        f"in-session accuracy={acc:.4f} (target ≥0.90), runtime={benchmark['seconds']:.0f}s (limit 300s)",
    )


def test_criterion_benchmark_reproducible(benchmark):
    users2 = generate_study(StudyConfig())
    sessions2 = {d.user.user_id: d.sessions for d in users2}
    result2 = run_benchmark(sessions2, CONFIG)
    a, b = benchmark["result"], result2
    same = (
        a.in_session.accuracy == b.in_session.accuracy
        and a.cross_raw.accuracy == b.cross_raw.accuracy
        and a.cross_cal.accuracy == b.cross_cal.accuracy
        and np.array_equal(a.in_session.confusion.counts, b.in_session.confusion.counts)
        and np.array_equal(a.in_session.confusion.no_emission, b.in_session.confusion.no_emission)
        and all(
            x.raw == y.raw
            for d1, d2 in zip(benchmark["users"], users2)
            for x, y in zip(d1.sessions["test-1"], d2.sessions["test-1"])
        )
    )
    report("benchmark bit-exact reproducibility", same,
           f"accuracy {a.in_session.accuracy:.6f} == {b.in_session.accuracy:.6f}")


# --- 5. cross-session pipeline ---------------------------------------------------------


def test_criterion_cross_session(benchmark):
    res = benchmark["result"]
    in_acc = res.in_session.accuracy
    raw_acc = res.cross_raw.accuracy
    cal_acc = res.cross_cal.accuracy
    calibrations = [d.calibration_info for d in benchmark["users"]]
    converged = all(c["passed"] and c["final_average_offset_mm"] <= 0.7 + 1e-9 for c in calibrations)
    drop_ok = (in_acc - raw_acc) >= 0.03
    recover_ok = (in_acc - cal_acc) <= 0.05
    report(
        "cross-session pipeline (drop ≥0.03, recovery ≤0.05 after calibration)",
        drop_ok and recover_ok and converged,
        f"in={in_acc:.4f} raw={raw_acc:.4f} (drop {in_acc - raw_acc:.4f}) "
        f"cal={cal_acc:.4f} (gap {in_acc - cal_acc:.4f}), all calibrations converged={converged}",
    )


# --- 6. ablation trends --------------------------------------------------------------------


def test_criterion_ablation_trends(benchmark):
    sessions = benchmark["sessions"]
    baseline = benchmark["result"].in_session.accuracy
    drops = {
        k: ablate_exclude_one(sessions, k, CONFIG, baseline=baseline).drop for k in (1, 4, 5, 9)
    }
    groups = {r.name: r.accuracy for r in ablate_subsets(sessions, CONFIG)}
    mid_gt_side = min(drops[4], drops[5]) > max(drops[1], drops[9])
    growth = groups["S5"] < groups["S3-7"] < groups["S1-9"]
    side_small = (groups["S1-9"] - groups["S2-8"]) <= 0.10
    report(
        "ablation trends (middle sensors matter, sides add ≤0.10)",
        mid_gt_side and growth and side_small,
        f"drops S1={drops[1]:.4f} S4={drops[4]:.4f} S5={drops[5]:.4f} S9={drops[9]:.4f}; "
        f"groups S5={groups['S5']:.4f} S3-7={groups['S3-7']:.4f} "
        f"S2-8={groups['S2-8']:.4f} S1-9={groups['S1-9']:.4f}",
    )


# --- 7. training reduction --------------------------------------------------------------------


def test_criterion_training_reduction(benchmark):
    sessions = benchmark["sessions"]
    accs = [training_reduction(sessions, n, CONFIG) for n in (1, 2, 3)]
    ok = accs[0] <= accs[1] <= accs[2]
    report(
        "training-session reduction monotonicity",
        ok,
        "acc(1..3) = " + " ≤ ".join(f"{a:.4f}" for a in accs),
    )


# --- 8. subset trends ----------------------------------------------------------------------------


def test_criterion_subset_trends(benchmark):
    sessions = benchmark["sessions"]
    full_in = benchmark["result"].in_session.accuracy
    full_cx = benchmark["result"].cross_cal.accuracy
    details = []
    ok = True
    for name, members in SUBSETS.items():
        a_in = subset_eval(sessions, members, cross_session=False, config=CONFIG)
        a_cx = subset_eval(sessions, members, cross_session=True, config=CONFIG)
        details.append(f"{name}: in {a_in:.4f} cross {a_cx:.4f}")
        ok &= a_in >= full_in and a_cx >= full_cx
    report(
        "pose-subset trends (dpad/corners ≥ full set, in- and cross-session)",
        bool(ok),
        f"full in {full_in:.4f} cross {full_cx:.4f}; " + "; ".join(details),
    )


# --- 9. protocol and persistence --------------------------------------------------------------------


def test_criterion_protocol_and_persistence(tmp_path, benchmark):
    users = benchmark["users"]
    # JSONL round trip, field for field, across a whole user directory.
    root = tmp_path / "study"
    write_study(root, StudyConfig(users=len(users)), users)
    loaded = load_study(root)
    jsonl_ok = all(
        loaded.sessions[d.user.user_id][sid] == recs
        for d in users
        for sid, recs in d.sessions.items()
    )

    # Model file round trip reproduces predictions exactly.
    from ringpose.analysis import train_models
    from ringpose.dataset import training_rows

    rows = []
    for sid in ("train-1", "train-2", "train-3"):
        rows.extend(training_rows(users[0].sessions[sid]))
    seg, clf = train_models(rows, CONFIG)
    save_model(seg, tmp_path / "seg.json")
    save_model(clf, tmp_path / "clf.json")
    seg2, clf2 = load_model(tmp_path / "seg.json"), load_model(tmp_path / "clf.json")
    gen = np.random.default_rng(8)
    probe = gen.uniform(0, 150, (200, 11))
    model_ok = np.array_equal(decision_scores(seg, probe), decision_scores(seg2, probe)) and np.array_equal(
        decision_scores(clf, probe), decision_scores(clf2, probe)
    )

    # Service replay emits exactly the events of the offline fold.
    from ringpose.service import ServiceConfig, SessionService

    records = users[0].sessions["test-1"][:1500]
    replay_path = tmp_path / "replay.jsonl"
    write_records(replay_path, records)
    offline = run_stream([r.frame() for r in records], seg, clf)
    svc = SessionService(
        ServiceConfig(port=0, mode="replay", replay_path=str(replay_path), frame_ms=0),
        seg=seg, clf=clf,
    )
    port = svc.start_background()
    sock = socket.create_connection(("127.0.0.1", port), timeout=30)
    events = []
    with sock, sock.makefile("r", encoding="utf-8") as rfile:
        for line in rfile:
            msg = json.loads(line)
            if msg["type"] == "event":
                events.append((msg["t_ms"], msg["label"]))
            elif msg["type"] == "session_control" and msg.get("action") == "end":
                break
    svc.shutdown()
    service_ok = events == [(e.timestamp_ms, e.label) for e in offline] and len(events) > 0

    report(
        "protocol and persistence (JSONL/model round trips, service ≡ offline)",
        jsonl_ok and model_ok and service_ok,
        f"jsonl={jsonl_ok} model={model_ok} service_events={len(events)} match={service_ok}",
    )
