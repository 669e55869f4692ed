#!/usr/bin/env python3
"""Run the full toolkit over the bundled fixtures and print a short summary.

Steps: train two tokenizers, merge them, measure fertility, expand an
embedding matrix, filter a corpus, plan a mixture, compute SFT quality
metrics, build training samples and preference triplets, and score an arena.
All steps go through the CLI so this doubles as a smoke test.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from langexpand import EmbeddingMatrix, load_tokenizer, save_matrix
from langexpand.cli import main as cli

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def run(*argv):
    code = cli(list(argv))
    if code != 0:
        sys.exit(f"step failed ({code}): {' '.join(argv)}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", type=Path, default=Path("pipeline_out"))
    parser.add_argument("--vocab-size", type=int, default=450)
    args = parser.parse_args()
    out = args.workdir
    out.mkdir(parents=True, exist_ok=True)
    fx = FIXTURES

    run("tok", "train", "--input", str(fx / "english.txt"),
        "--output", str(out / "en.tok.json"), "--vocab-size", str(args.vocab_size))
    run("tok", "train", "--input", str(fx / "arabic.txt"),
        "--output", str(out / "ar.tok.json"), "--vocab-size", str(args.vocab_size))
    run("tok", "merge", "--original", str(out / "en.tok.json"),
        "--language-specific", str(out / "ar.tok.json"),
        "--output", str(out / "merged.tok.json"))
    for model, label in (("en.tok.json", "original"), ("merged.tok.json", "merged")):
        run("tok", "fertility", "--model", str(out / model),
            "--input", str(fx / "arabic.txt"), "--sample-size", "50", "--seed", "3",
            "--corpus-id", f"arabic/{label}",
            "--output", str(out / f"fertility.{label}.json"))

    n_rows = len(load_tokenizer(str(out / "en.tok.json")))
    rng = np.random.default_rng(8)
    save_matrix(EmbeddingMatrix(rng.normal(size=(n_rows, 32)).astype(np.float32)),
                str(out / "orig.emb"))
    run("embed", "expand", "--matrix", str(out / "orig.emb"),
        "--original-tok", str(out / "en.tok.json"),
        "--merged-tok", str(out / "merged.tok.json"),
        "--output", str(out / "expanded.emb"))

    run("corpus", "filter", "--input", str(fx / "filter_docs.jsonl"),
        "--output", str(out / "kept.jsonl"),
        "--report", str(out / "filter_report.json"))
    run("mixture", "plan", "--sources", str(fx / "sources.jsonl"),
        "--total-tokens", "1200000000000", "--lang", "ar=0.45,en=0.55",
        "--output", str(out / "plan.json"))

    run("sft", "metrics", "--input", str(fx / "sft.jsonl"),
        "--output", str(out / "metrics.json"))
    run("sft", "augment", "--input", str(fx / "sft.jsonl"),
        "--template", str(fx / "chat_template.json"),
        "--model", str(out / "merged.tok.json"),
        "--output", str(out / "train.jsonl"))
    run("pref", "build", "--input", str(fx / "pref_seeds.jsonl"),
        "--output", str(out / "triplets.jsonl"),
        "--report", str(out / "pref_report.json"))
    run("arena", "aggregate", "--votes", str(fx / "votes.jsonl"),
        "--output", str(out / "matches.jsonl"))
    run("arena", "elo", "--matches", str(out / "matches.jsonl"),
        "--permutations", "50", "--seed", "9", "--output", str(out / "elo.json"))

    original = json.loads((out / "fertility.original.json").read_text())
    merged = json.loads((out / "fertility.merged.json").read_text())
    report = json.loads((out / "filter_report.json").read_text())
    plan = json.loads((out / "plan.json").read_text())
    elo = json.loads((out / "elo.json").read_text())
    print(f"fertility on arabic fixture: original {original['fertility']:.3f} "
          f"-> merged {merged['fertility']:.3f}")
    print(f"corpus filter: kept {report['kept_count']}/{report['input_count']} "
          f"({report['dropped_by_rule']})")
    print("mixture weights:",
          {e["source"]: round(e["weight"], 4) for e in plan["entries"]})
    print("elo:", {r["model"]: round(r["elo"], 1) for r in elo})
    print(f"outputs in {out}/")


if __name__ == "__main__":
    main()
