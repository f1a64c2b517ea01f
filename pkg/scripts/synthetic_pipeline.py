"""Run the whole pipeline on a freshly generated synthetic dataset.

Generates a dataset with known ground truth, then chains
prepare -> train -> predict -> eval -> analyze into one workspace
directory and prints the final report.  Sized to finish in well under a
minute; raise the knobs for a more serious run.

Usage:
    python3 scripts/synthetic_pipeline.py --out runs/synthetic
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from semepred.cli import main as semepred


def run(args: list[str]) -> None:
    code = semepred(args)
    if code != 0:
        print(f"step failed with exit code {code}: semepred {' '.join(args)}", file=sys.stderr)
        raise SystemExit(code)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/synthetic", help="workspace directory")
    parser.add_argument("--synsets", type=int, default=300)
    parser.add_argument("--sememes", type=int, default=40)
    parser.add_argument("--dimension", type=int, default=64, help="embedding dimension")
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    out = Path(args.out)
    seed = ["--seed", str(args.seed)]
    synth, prep, trained, pred, evaled, analyzed = (
        out / n for n in ("synth", "prepared", "trained", "predictions", "report", "analysis")
    )

    run([
        "synth", *seed, "--out", str(synth),
        "--set", f"synth.n_synsets={args.synsets}",
        "--set", f"synth.n_sememes={args.sememes}",
    ])
    run([
        "prepare", *seed, "--triplets", str(synth / "triplets.tsv"),
        "--pos", str(synth / "pos.tsv"), "--out", str(prep),
    ])
    run([
        "train", *seed, "--data", str(prep / "dataset.tsv"), "--out", str(trained),
        "--set", f"train.dimension={args.dimension}",
        "--set", f"train.epochs={args.epochs}",
        "--set", f"train.batch_size={args.batch_size}",
    ])
    run([
        "predict", *seed, "--data", str(prep / "dataset.tsv"), "--pos", str(prep / "pos.tsv"),
        "--embeddings", str(trained / "embeddings.tsv"),
        "--vectors", str(synth / "vectors.tsv"),
        "--split", "test", "--out", str(pred),
    ])
    run([
        "eval", *seed, "--data", str(prep / "dataset.tsv"), "--pos", str(prep / "pos.tsv"),
        "--predictions", str(pred / "predictions.tsv"),
        "--split", "test", "--out", str(evaled),
    ])
    run([
        "analyze", *seed, "--data", str(prep / "dataset.tsv"), "--pos", str(prep / "pos.tsv"),
        "--predictions", str(pred / "predictions.tsv"),
        "--split", "test", "--out", str(analyzed),
    ])

    print()
    print((evaled / "report.txt").read_text(), end="")
    print(f"\nartifacts under {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
