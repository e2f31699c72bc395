#!/usr/bin/env python3
"""Convert the raw MHealth logs into the canonical trial layout.

Input : the extracted MHEALTHDATASET directory (mHealth_subject<N>.log files;
        whitespace-separated, 23 sensor columns + 1 label column, 50 Hz).
Output: <out>/trials/*.csv (one file per contiguous same-label run, label
        column dropped) and <out>/manifest.json ready for `harbench`.

Label 0 (unlabelled/null samples) is discarded. Runs shorter than one window
are still written; the loader skips and counts them.

Usage: prepare_mhealth.py <MHEALTHDATASET dir> <output dir>
"""

import json
import sys
from pathlib import Path

SAMPLE_RATE_HZ = 50.0
WINDOW_SECONDS = 5.0
CHANNELS = [
    "chest_acc_x", "chest_acc_y", "chest_acc_z",
    "ecg_lead_1", "ecg_lead_2",
    "ankle_acc_x", "ankle_acc_y", "ankle_acc_z",
    "ankle_gyro_x", "ankle_gyro_y", "ankle_gyro_z",
    "ankle_mag_x", "ankle_mag_y", "ankle_mag_z",
    "wrist_acc_x", "wrist_acc_y", "wrist_acc_z",
    "wrist_gyro_x", "wrist_gyro_y", "wrist_gyro_z",
    "wrist_mag_x", "wrist_mag_y", "wrist_mag_z",
]
TRIPLET_GROUPS = [[0, 1, 2], [5, 6, 7], [8, 9, 10], [11, 12, 13],
                  [14, 15, 16], [17, 18, 19], [20, 21, 22]]


def split_runs(rows):
    """Yield (label, rows) for each contiguous same-label run, dropping label 0."""
    run, label = [], None
    for values in rows:
        this_label = int(values[-1])
        if this_label != label:
            if run and label != 0:
                yield label, run
            run, label = [], this_label
        run.append(values[:-1])
    if run and label != 0:
        yield label, run


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src = Path(sys.argv[1])
    out = Path(sys.argv[2])
    (out / "trials").mkdir(parents=True, exist_ok=True)

    logs = sorted(src.glob("mHealth_subject*.log"),
                  key=lambda p: int("".join(ch for ch in p.stem if ch.isdigit())))
    if not logs:
        sys.exit(f"no mHealth_subject*.log files under {src}")

    trial_sources = []
    for log in logs:
        subject = "subject" + "".join(ch for ch in log.stem if ch.isdigit())
        rows = []
        with open(log) as f:
            for line in f:
                parts = line.split()
                if len(parts) != len(CHANNELS) + 1:
                    continue
                rows.append([float(x) for x in parts])

        run_index = {}
        for label, run in split_runs(rows):
            idx = run_index.get(label, 0)
            run_index[label] = idx + 1
            trial_id = f"{subject}_act{label}_run{idx}"
            rel = f"trials/{trial_id}.csv"
            with open(out / rel, "w") as csv:
                for values in run:
                    csv.write(",".join(repr(v) for v in values) + "\n")
            trial_sources.append({"subject_id": subject, "activity_id": label,
                                  "trial_id": trial_id, "path": rel})

    manifest = {
        "name": "MHealth",
        "sample_rate_hz": SAMPLE_RATE_HZ,
        "channel_names": CHANNELS,
        "triplet_groups": TRIPLET_GROUPS,
        "window_seconds": WINDOW_SECONDS,
        "supported_windowing": ["full_non_overlapping", "semi_non_overlapping",
                                "leave_one_trial_out"],
        "trial_sources": trial_sources,
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
    print(f"{len(trial_sources)} trials from {len(logs)} subjects -> {out / 'manifest.json'}")


if __name__ == "__main__":
    main()
