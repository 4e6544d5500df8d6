#!/usr/bin/env python3
"""Regenerate the shipped default hand and pose-angle config files.

Run from the repo root after changing the hand model or the pose solver:

    python3 scripts/generate_configs.py
"""

import json
from pathlib import Path

from ringpose.hand import build_default_hand, hand_to_dict
from ringpose.ik import solve_pose_table, table_to_dict, tip_error
from ringpose.poses import POSES

DATA = Path(__file__).resolve().parent.parent / "src" / "ringpose" / "data"


def main() -> None:
    hand = build_default_hand()
    table = solve_pose_table(hand)
    for label in POSES:
        err = tip_error(hand, table, label)
        print(f"{label:16s} tip error {err:.2f} mm")

    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "default_hand.json").write_text(json.dumps(hand_to_dict(hand), indent=2) + "\n")
    (DATA / "default_poses.json").write_text(json.dumps(table_to_dict(table), indent=2) + "\n")
    print(f"wrote {DATA / 'default_hand.json'}")
    print(f"wrote {DATA / 'default_poses.json'}")


if __name__ == "__main__":
    main()
