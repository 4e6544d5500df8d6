"""Command-line entry points.

Exit codes: 0 success, 1 domain error (bad data, failed precondition),
2 I/O error (missing or unwritable paths).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import DatasetError, InputError, ModelFormatError, RingposeError, TrainingError


def _study_sessions(root):
    from .dataset import load_study

    study = load_study(root)
    return study


def cmd_simulate(args) -> int:
    from .dataset import StudyConfig, generate_study, write_study

    config = StudyConfig(
        users=args.users,
        train_sessions=args.train_sessions,
        test_sessions=args.test_sessions,
        seed=args.seed,
        sigma_mm=args.noise_sigma,
        dropout=args.dropout,
        jitter_deg=args.jitter_deg,
        cross_session=not args.no_cross,
    )
    users = generate_study(config)
    write_study(args.out, config, users)
    total = sum(len(recs) for d in users for recs in d.sessions.values())
    print(f"wrote {len(users)} users, {total} frames under {args.out}")
    return 0


def _pipeline_config(args):
    from .analysis import PipelineConfig

    return PipelineConfig(C=args.C, tol=args.tol, max_epochs=args.max_epochs, train_seed=args.train_seed)


def cmd_train(args) -> int:
    from .analysis import train_models
    from .dataset import training_rows
    from .svm import save_model

    study = _study_sessions(args.data)
    users = [args.user] if args.user else sorted(study.sessions)
    os.makedirs(args.out, exist_ok=True)
    config = _pipeline_config(args)
    for uid in users:
        if uid not in study.sessions:
            raise InputError(f"user {uid!r} not in dataset")
        rows = []
        for sid in sorted(s for s in study.sessions[uid] if s.startswith("train-")):
            rows.extend(training_rows(study.sessions[uid][sid]))
        seg, clf = train_models(rows, config)
        if uid in study.references:
            clf.metadata["calibration_reference"] = study.references[uid].to_dict()
        udir = os.path.join(args.out, uid)
        os.makedirs(udir, exist_ok=True)
        save_model(seg, os.path.join(udir, "segmenter.json"))
        save_model(clf, os.path.join(udir, "classifier.json"))
        print(f"{uid}: trained segmenter + classifier -> {udir}")
    return 0


def cmd_evaluate(args) -> int:
    from .analysis import evaluate_study, summary_text, write_confusion_csv
    from .svm import load_model

    study = _study_sessions(args.data)
    config = _pipeline_config(args)
    test_ids = tuple(args.sessions.split(","))
    models = None
    if args.models:
        models = {}
        for uid in sorted(study.sessions):
            udir = os.path.join(args.models, uid)
            models[uid] = (
                load_model(os.path.join(udir, "segmenter.json")),
                load_model(os.path.join(udir, "classifier.json")),
            )
    result = evaluate_study(study.sessions, config, test_ids=test_ids, models=models)
    print(summary_text(result, f"evaluation on {args.sessions}"), end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_confusion_csv(os.path.join(args.out, "confusion.csv"), result.confusion)
        with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(summary_text(result, f"evaluation on {args.sessions}"))
        print(f"reports written to {args.out}")
    print(f"accuracy {result.accuracy:.6f}")
    return 0


def cmd_ablate(args) -> int:
    from .analysis import ablate_exclude_one, ablate_subsets, evaluate_study, write_ablation_csv

    study = _study_sessions(args.data)
    config = _pipeline_config(args)
    results = []
    if args.groups:
        results = ablate_subsets(study.sessions, config)
    else:
        baseline = evaluate_study(study.sessions, config).accuracy
        sensors = [int(s) for s in args.exclude.split(",")] if args.exclude else list(range(1, 10))
        for k in sensors:
            results.append(ablate_exclude_one(study.sessions, k, config, baseline=baseline))
    for r in results:
        print(f"{r.name:12s} accuracy {r.accuracy:.6f}  drop {r.drop:+.6f}")
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        write_ablation_csv(args.out, results)
        print(f"ablation table written to {args.out}")
    return 0


def cmd_reduce_train(args) -> int:
    from .analysis import training_reduction

    study = _study_sessions(args.data)
    config = _pipeline_config(args)
    rows = []
    for n in range(1, args.max_sessions + 1):
        acc = training_reduction(study.sessions, n, config)
        rows.append((n, acc))
        print(f"train sessions {n}: accuracy {acc:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("train_sessions,accuracy\n")
            for n, acc in rows:
                fh.write(f"{n},{acc:.6f}\n")
        print(f"reduction table written to {args.out}")
    return 0


def cmd_subsets(args) -> int:
    from .analysis import named_subset, subset_eval
    from .poses import SUBSETS

    study = _study_sessions(args.data)
    config = _pipeline_config(args)
    names = [args.name] if args.name else sorted(SUBSETS)
    rows = []
    for name in names:
        members = named_subset(name)
        acc_in = subset_eval(study.sessions, members, cross_session=False, config=config)
        row = {"subset": name, "classes": list(members), "in_session": acc_in}
        print(f"{name}: classes {list(members)}")
        print(f"  in-session accuracy {acc_in:.6f}")
        if args.cross:
            acc_cx = subset_eval(study.sessions, members, cross_session=True, config=config)
            row["cross_session"] = acc_cx
            print(f"  cross-session accuracy {acc_cx:.6f}")
        rows.append(row)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
        print(f"subset table written to {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    from .calibration import capture_reference, check, guidance
    from .dataset import read_records
    from .poses import CALIBRATION_POSES

    def captures(path):
        records = read_records(path)
        by_pose = {p: [] for p in CALIBRATION_POSES}
        for rec in records:
            if rec.label in by_pose:
                by_pose[rec.label].append(rec.frame())
        return by_pose

    reference = capture_reference(captures(args.reference))
    report = check(reference, captures(args.current))
    print(json.dumps(report.to_dict(), indent=2))
    print(guidance(report))
    return 0 if report.passed else 1


def cmd_serve(args) -> int:
    from .service import ServiceConfig, SessionService

    config = ServiceConfig(
        host=args.host,
        port=args.port,
        mode=args.mode,
        prompts=args.prompts,
        frame_ms=args.frame_ms,
        seed=args.seed,
        sigma_mm=args.noise_sigma,
        dropout=args.dropout,
        perturb=args.perturb,
        replay_path=args.replay,
        models_dir=args.models,
    )
    if config.mode == "replay" and not config.replay_path:
        raise InputError("replay mode needs --replay FILE")
    service = SessionService(config)
    port = service.start_background()
    print(f"ringpose service: mode={config.mode} on {config.host}:{port}", flush=True)
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        service.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringpose", description="Simulated thumb-ring pose recognition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_pipeline_flags(p):
        p.add_argument("--C", type=float, default=10.0, help="SVM regularization constant")
        p.add_argument("--tol", type=float, default=1e-4)
        p.add_argument("--max-epochs", type=int, default=1000, dest="max_epochs")
        p.add_argument("--train-seed", type=int, default=7, dest="train_seed")

    p = sub.add_parser("simulate", help="generate a study dataset (JSONL per user/session)")
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--train-sessions", type=int, default=3, dest="train_sessions")
    p.add_argument("--test-sessions", type=int, default=2, dest="test_sessions")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--noise-sigma", type=float, default=1.5, dest="noise_sigma")
    p.add_argument("--dropout", type=float, default=0.01)
    p.add_argument("--jitter-deg", type=float, default=1.5, dest="jitter_deg")
    p.add_argument("--no-cross", action="store_true", help="skip the remount cross-session")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train per-user segmenter + classifier model files")
    p.add_argument("--data", required=True)
    p.add_argument("--user", default=None)
    p.add_argument("--out", required=True)
    add_pipeline_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="replay test sessions through the recognizer")
    p.add_argument("--data", required=True)
    p.add_argument("--sessions", default="test-1,test-2")
    p.add_argument("--models", default=None, help="per-user model dir from `train` (skips retraining)")
    p.add_argument("--out", default=None)
    add_pipeline_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sensor exclusion / sensor-group studies")
    p.add_argument("--data", required=True)
    p.add_argument("--exclude", default=None, help="comma-separated sensor numbers (default all)")
    p.add_argument("--groups", action="store_true", help="run the S5 .. S1-9 group study")
    p.add_argument("--out", default=None)
    add_pipeline_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("reduce-train", help="accuracy vs number of training sessions")
    p.add_argument("--data", required=True)
    p.add_argument("--max-sessions", type=int, default=3, dest="max_sessions")
    p.add_argument("--out", default=None)
    add_pipeline_flags(p)
    p.set_defaults(func=cmd_reduce_train)

    p = sub.add_parser("subsets", help="pose-subset evaluation (dpad, corners)")
    p.add_argument("--data", required=True)
    p.add_argument("--name", default=None)
    p.add_argument("--cross", action="store_true")
    p.add_argument("--out", default=None)
    add_pipeline_flags(p)
    p.set_defaults(func=cmd_subsets)

    p = sub.add_parser("calibrate", help="check a remount capture against a reference capture")
    p.add_argument("--reference", required=True, help="JSONL capture at the original mount")
    p.add_argument("--current", required=True, help="JSONL capture at the current mount")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=47311)
    p.add_argument("--mode", choices=("study", "calibration", "replay"), default="study")
    p.add_argument("--prompts", type=int, default=12)
    p.add_argument("--frame-ms", type=float, default=100.0, dest="frame_ms")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise-sigma", type=float, default=0.8, dest="noise_sigma")
    p.add_argument("--dropout", type=float, default=0.005)
    p.add_argument("--perturb", choices=("none", "small", "medium", "large"), default="none")
    p.add_argument("--replay", default=None)
    p.add_argument("--models", default=None, help="directory with segmenter.json + classifier.json")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, TrainingError, RingposeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
