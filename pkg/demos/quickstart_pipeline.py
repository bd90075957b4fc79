"""End-to-end tour of the CLI pipeline on a small generated corpus.

Builds a speeches.csv / wars.csv pair where every third speech (in
shuffle order) is followed by a war declaration 100 days later, then
drives every pipeline stage the way a shell user would:

    prepare -> embed -> resample -> train -> evaluate -> explain -> report

Artifacts land in ./demo_run/ and every stage is recorded, with input
digests, in run_manifest.json.  Run it twice: the artifacts are
byte-identical.
"""

import csv
import datetime
import pathlib
import sys

import numpy as np

from warspeech.cli import main
from warspeech.seeds import derive_seed

N_DOCS = 60
PEACE_WORDS = [
    "prosperity", "budget", "agriculture", "commerce", "education",
    "railroad", "tariff", "harvest", "citizens", "congress",
]
WAR_WORDS = ["mobilization", "armament", "hostilities"]


def build_corpus(root: pathlib.Path):
    # mirror the trainer's shuffle so the 10% test split sees both classes
    perm = np.random.default_rng(derive_seed(0, "data")).permutation(N_DOCS)
    positives = {int(i) for i in perm[::3]}
    base = datetime.date(1900, 3, 4)
    rng = np.random.default_rng(11)

    with open(root / "speeches.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["doc_id", "date", "president", "party", "title", "transcript"])
        for i in range(N_DOCS):
            day = base + datetime.timedelta(days=350 * i)
            words = [PEACE_WORDS[int(j)] for j in rng.integers(0, len(PEACE_WORDS), size=40)]
            if i in positives:
                words += list(rng.permutation(WAR_WORDS * 4))
            w.writerow([
                f"s{i:03d}", day.isoformat(), "Alpha Beta", "Unity",
                f"annual message {i}", " ".join(words),
            ])

    with open(root / "wars.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "start_date"])
        for i in sorted(positives):
            start = base + datetime.timedelta(days=350 * i + 100)
            w.writerow([f"war{i}", start.isoformat()])
    return len(positives)


def run(root: pathlib.Path) -> int:
    n_pos = build_corpus(root)
    print(f"corpus: {N_DOCS} speeches, {n_pos} within a year of a war entry\n")

    run_dir = root / "demo_run"
    stages = [
        ["prepare", "--speeches", str(root / "speeches.csv"), "--wars", str(root / "wars.csv")],
        ["embed", "--dim", "64"],
        ["resample", "--k", "3", "--multiplier", "1.5", "--ratio", "1.0"],
        ["train", "--model", "mlp", "--epochs", "4", "--timesteps", "4"],
        ["train", "--model", "lstm-attn", "--epochs", "4", "--timesteps", "4"],
        ["evaluate", "--model", "mlp"],
        ["evaluate", "--model", "lstm-attn"],
        ["explain", "--method", "attention", "--model", "lstm-attn"],
        ["explain", "--method", "lime", "--model", "mlp", "--doc-id", "s003", "--n-samples", "128"],
        ["explain", "--method", "shap", "--model", "mlp", "--doc-id", "s003", "--n-coalitions", "126"],
        ["report"],
    ]
    for stage in stages:
        print(f"$ warspeech {' '.join(stage)}")
        rc = main(stage + ["--run-dir", str(run_dir)])
        if rc != 0:
            return rc
        print()

    print("artifacts:")
    for path in sorted(run_dir.iterdir()):
        print(f"  {path.name:28s} {path.stat().st_size:>8,} bytes")
    return 0


if __name__ == "__main__":
    sys.exit(run(pathlib.Path(".")))
