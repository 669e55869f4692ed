#!/usr/bin/env python3
"""Regenerate the bundled fixtures under tests/fixtures/.

Everything here is seeded, so reruns are byte-identical. The fixtures feed
the end-to-end CLI smoke test and the runnable pipeline in run_pipeline.py.
"""

import argparse
import json
import random
from pathlib import Path

ARABIC_LETTERS = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي"
ENGLISH_LETTERS = "abcdefghijklmnopqrstuvwxyz"

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def make_word_pool(rng, alphabet, n_words, min_len=2, max_len=8):
    pool = set()
    while len(pool) < n_words:
        length = rng.randint(min_len, max_len)
        pool.add("".join(rng.choice(alphabet) for _ in range(length)))
    return sorted(pool)


def make_corpus(seed, alphabet, n_docs, pool_size=250, doc_words=(15, 45)):
    rng = random.Random(seed)
    pool = make_word_pool(rng, alphabet, pool_size)
    weights = [1.0 / (i + 1) for i in range(len(pool))]
    return [
        " ".join(rng.choices(pool, weights=weights, k=rng.randint(*doc_words)))
        for _ in range(n_docs)
    ]


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_jsonl(path, records):
    write_lines(path, [json.dumps(r, ensure_ascii=False) for r in records])


def filter_docs(rng):
    """100 documents: 85 clean, 5 low lang_score, 5 short, 3 dup URL, 2 dup text."""
    pool = make_word_pool(rng, ENGLISH_LETTERS, 150)
    docs = []
    for i in range(100):
        text = " ".join(rng.choices(pool, k=40))
        docs.append({
            "id": f"d{i:03d}",
            "text": text,
            "lang": "en",
            "lang_score": round(rng.uniform(0.96, 1.0), 4),
            "url": f"https://example.org/page/{i}",
        })
    for i in range(5):  # low language score
        docs[3 + i * 7]["lang_score"] = round(rng.uniform(0.1, 0.94), 4)
    for i in range(5):  # too short
        docs[5 + i * 9]["text"] = " ".join(rng.choices(pool, k=10))
    docs[60]["url"] = docs[20]["url"]  # later duplicates of an earlier URL
    docs[61]["url"] = docs[20]["url"]
    docs[62]["url"] = docs[21]["url"]
    docs[70]["text"] = docs[10]["text"]  # exact text duplicates
    docs[71]["text"] = docs[11]["text"]
    return docs


def sft_samples(rng):
    pool = make_word_pool(rng, ENGLISH_LETTERS, 120)
    records = []
    for i in range(20):
        n_turns = rng.choice([1, 1, 2, 3])
        conversation = []
        for _ in range(n_turns):
            conversation.append({
                "role": "user",
                "text": " ".join(rng.choices(pool, k=rng.randint(4, 12))),
            })
            conversation.append({
                "role": "assistant",
                "text": " ".join(rng.choices(pool, k=rng.randint(8, 25))),
            })
        records.append({
            "id": f"sft{i:03d}", "language": "en", "source": "fixture",
            "conversation": conversation,
        })
    return records


def pref_seeds(rng):
    pool = make_word_pool(rng, ENGLISH_LETTERS, 120)
    seeds = []
    for i in range(20):
        candidates = [
            {
                "text": " ".join(rng.choices(pool, k=rng.randint(6, 18))),
                "temperature": round(rng.choice([0.3, 0.7, 1.0]), 2),
                "top_p": 0.95,
                "policy": rng.choice(["on_policy", "off_policy"]),
            }
            for _ in range(10)
        ]
        seeds.append({
            "id": f"seed{i:03d}",
            "prompt": " ".join(rng.choices(pool, k=rng.randint(5, 12))),
            "accepted": " ".join(rng.choices(pool, k=rng.randint(8, 20))),
            "candidates": candidates,
        })
    return seeds


def arena_votes(rng):
    models = ["model-a", "model-b", "model-c"]
    verdicts = ["a_wins", "b_wins", "tie", "both_bad"]
    votes = []
    for i in range(60):
        m1, m2 = rng.sample(models, 2)
        for j in range(rng.choice([3, 3, 4])):
            votes.append({
                "prompt_id": f"prompt{i:03d}", "model_a": m1, "model_b": m2,
                "evaluator_id": f"eval{j}",
                "verdict": rng.choice(verdicts),
            })
    return votes


def mixture_sources():
    return [
        {"name": "en", "language": "en", "domain": "web",
         "available_tokens": 660_000_000_000},
        {"name": "ar-natural", "language": "ar", "domain": "web",
         "available_tokens": 270_000_000_000, "origin": "natural"},
        {"name": "ar-translated", "language": "ar", "domain": "web",
         "available_tokens": 270_000_000_000, "origin": "translated"},
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    write_lines(out / "english.txt", make_corpus(101, ENGLISH_LETTERS, 80))
    write_lines(out / "arabic.txt", make_corpus(202, ARABIC_LETTERS, 80))
    write_jsonl(out / "filter_docs.jsonl", filter_docs(random.Random(303)))
    write_jsonl(out / "sft.jsonl", sft_samples(random.Random(404)))
    write_jsonl(out / "pref_seeds.jsonl", pref_seeds(random.Random(505)))
    write_jsonl(out / "votes.jsonl", arena_votes(random.Random(606)))
    write_jsonl(out / "sources.jsonl", mixture_sources())
    (out / "chat_template.json").write_text(
        json.dumps({"bos": "<s>", "eos": "</s>"}) + "\n", encoding="utf-8"
    )
    print(f"fixtures written to {out}")


if __name__ == "__main__":
    main()
