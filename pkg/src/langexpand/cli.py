"""Single CLI entry point: tok / embed / corpus / mixture / sft / pref / arena.

Exit codes: 0 success, 1 validation error, 2 data error. Errors are printed
to stderr as one-line JSON records. All output files are written atomically.
"""

import json
import sys
from typing import List, Optional

import click

from . import arena as arena_mod
from . import corpus as corpus_mod
from . import embeddings as emb_mod
from . import mixture as mix_mod
from . import preference as pref_mod
from . import sft_quality as sft_mod
from . import tokenizer as tok_mod
from . import turns as turns_mod
from .errors import DataError, LangexpandError, ValidationError
from .jsonl import atomic_write_text, dumps, read_jsonl, write_jsonl
from .stopwords import DEFAULT_STOPWORDS, load_stopwords


def _read_corpus(path: str) -> List[str]:
    """Plain text (one document per line) or JSONL with a `text` field."""
    if path.endswith(".jsonl"):
        docs = []
        for record in read_jsonl(path):
            if "text" not in record:
                raise DataError(f"{path}: record without `text` field")
            docs.append(record["text"])
        return docs
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _require_file(path: str) -> str:
    import os

    if not os.path.isfile(path):
        raise ValidationError(f"input file not found: {path}")
    return path


def _write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, ensure_ascii=False, indent=1) + "\n")


@click.group()
def cli():
    """Language-expansion data toolkit."""


# ---------------------------------------------------------------- tok


@cli.group()
def tok():
    """Tokenizer training, merging, encoding, fertility."""


@tok.command("train")
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
@click.option("--vocab-size", type=int, required=True)
@click.option("--special", "specials", multiple=True, default=("<s>", "</s>", "<pad>"))
@click.option("--seed", type=int, default=0)
def tok_train(input_path, output, vocab_size, specials, seed):
    corpus = _read_corpus(_require_file(input_path))
    model = tok_mod.train_bpe(corpus, vocab_size, specials=specials, seed=seed)
    tok_mod.save_tokenizer(model, output)


@tok.command("merge")
@click.option("--original", required=True)
@click.option("--language-specific", "language_specific", required=True)
@click.option("--output", required=True)
def tok_merge(original, language_specific, output):
    merged = tok_mod.merge_tokenizers(
        tok_mod.load_tokenizer(_require_file(original)),
        tok_mod.load_tokenizer(_require_file(language_specific)),
    )
    tok_mod.save_tokenizer(merged, output)


@tok.command("encode")
@click.option("--model", "model_path", required=True)
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
def tok_encode(model_path, input_path, output):
    model = tok_mod.load_tokenizer(_require_file(model_path))
    docs = _read_corpus(_require_file(input_path))
    write_jsonl(output, ({"token_ids": tok_mod.encode(model, d)} for d in docs))


@tok.command("fertility")
@click.option("--model", "model_path", required=True)
@click.option("--input", "input_path", required=True)
@click.option("--output", default=None)
@click.option("--sample-size", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--corpus-id", default="")
def tok_fertility(model_path, input_path, output, sample_size, seed, corpus_id):
    model = tok_mod.load_tokenizer(_require_file(model_path))
    docs = _read_corpus(_require_file(input_path))
    report = tok_mod.fertility(
        model, docs, sample_size=sample_size, seed=seed, corpus_id=corpus_id
    )
    text = json.dumps(report.to_dict(), ensure_ascii=False, indent=1) + "\n"
    if output:
        atomic_write_text(output, text)
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------- embed


@cli.group()
def embed():
    """Embedding-matrix expansion."""


@embed.command("expand")
@click.option("--matrix", "matrix_path", required=True)
@click.option("--original-tok", "original_tok", required=True)
@click.option("--merged-tok", "merged_tok", required=True)
@click.option("--mode", type=click.Choice(["averaged", "random"]), default="averaged")
@click.option("--seed", type=int, default=0)
@click.option("--output", required=True)
def embed_expand(matrix_path, original_tok, merged_tok, mode, seed, output):
    expanded = emb_mod.expand_embeddings(
        emb_mod.load_matrix(_require_file(matrix_path)),
        tok_mod.load_tokenizer(_require_file(original_tok)),
        tok_mod.load_tokenizer(_require_file(merged_tok)),
        mode=mode,
        seed=seed,
    )
    emb_mod.save_matrix(expanded, output)


# ---------------------------------------------------------------- corpus


@cli.group("corpus")
def corpus_grp():
    """Pretraining corpus filtering."""


@corpus_grp.command("filter")
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
@click.option("--report", "report_path", default=None)
@click.option("--lang-threshold", type=float, default=corpus_mod.DEFAULT_LANG_THRESHOLD)
@click.option("--min-words", type=int, default=corpus_mod.DEFAULT_MIN_WORDS)
@click.option(
    "--max-stopword-ratio",
    type=float,
    default=corpus_mod.DEFAULT_MAX_STOPWORD_RATIO,
)
@click.option("--stopwords", "stopwords_path", default=None)
def corpus_filter(
    input_path, output, report_path, lang_threshold, min_words,
    max_stopword_ratio, stopwords_path,
):
    stopwords = (
        load_stopwords(_require_file(stopwords_path))
        if stopwords_path
        else DEFAULT_STOPWORDS
    )
    docs = [
        corpus_mod.Document.from_dict(r) for r in read_jsonl(_require_file(input_path))
    ]
    kept, report = corpus_mod.filter_pipeline(
        docs,
        lang_threshold=lang_threshold,
        min_words=min_words,
        stopword_list=stopwords,
        max_stopword_ratio=max_stopword_ratio,
    )
    write_jsonl(output, (d.to_dict() for d in kept))
    if report_path:
        _write_json(report_path, report.to_dict())


# ---------------------------------------------------------------- mixture


@cli.group()
def mixture():
    """Data-mixture planning and verification."""


def _parse_targets(spec: str) -> dict:
    targets = {}
    for part in spec.split(","):
        key, _, value = part.partition("=")
        if not value:
            raise ValidationError(f"bad target {part!r}, expected key=fraction")
        targets[key.strip()] = float(value)
    return targets


def _load_sources(path: str):
    return [mix_mod.SourceSpec.from_dict(r) for r in read_jsonl(_require_file(path))]


@mixture.command("plan")
@click.option("--sources", "sources_path", required=True)
@click.option("--total-tokens", type=float, required=True)
@click.option("--lang", "lang_spec", required=True, help="e.g. ar=0.45,en=0.55")
@click.option("--domain", "domain_spec", default=None)
@click.option("--output", required=True)
def mixture_plan(sources_path, total_tokens, lang_spec, domain_spec, output):
    plan = mix_mod.plan_mixture(
        _load_sources(sources_path),
        _parse_targets(lang_spec),
        _parse_targets(domain_spec) if domain_spec else None,
        total_tokens=int(total_tokens),
    )
    _write_json(output, plan.to_dict())


@mixture.command("grid")
@click.option("--sources", "sources_path", required=True)
@click.option("--total-tokens", type=float, required=True)
@click.option("--ratios", required=True, help="e.g. 0.45/0.55,0.30/0.70")
@click.option("--arabic", default="ar")
@click.option("--english", default="en")
@click.option("--output", required=True)
def mixture_grid(sources_path, total_tokens, ratios, arabic, english, output):
    ratio_list = []
    for part in ratios.split(","):
        ar_s, _, en_s = part.partition("/")
        if not en_s:
            raise ValidationError(f"bad ratio {part!r}, expected ar/en")
        ratio_list.append((float(ar_s), float(en_s)))
    plans = mix_mod.plan_grid(
        _load_sources(sources_path),
        ratio_list,
        int(total_tokens),
        arabic=arabic,
        english=english,
    )
    _write_json(output, [p.to_dict() for p in plans])


@mixture.command("verify")
@click.option("--plan", "plan_path", required=True)
@click.option("--sources", "sources_path", required=True)
@click.option("--counts", "counts_path", required=True)
@click.option("--tolerance", type=float, default=0.005)
@click.option("--output", default=None)
def mixture_verify(plan_path, sources_path, counts_path, tolerance, output):
    with open(_require_file(plan_path), "r", encoding="utf-8") as fh:
        plan = mix_mod.MixturePlan.from_dict(json.load(fh))
    with open(_require_file(counts_path), "r", encoding="utf-8") as fh:
        counts = {k: int(v) for k, v in json.load(fh).items()}
    passed, deviations = mix_mod.verify_manifest(
        plan, counts, _load_sources(sources_path), tolerance=tolerance
    )
    result = {
        "passed": passed,
        "tolerance": tolerance,
        "deviations": [
            {
                "kind": d.kind,
                "key": d.key,
                "target": d.target,
                "realized": d.realized,
                "deviation": d.deviation,
            }
            for d in deviations
        ],
    }
    if output:
        _write_json(output, result)
    else:
        click.echo(json.dumps(result, ensure_ascii=False, indent=1))
    if not passed:
        raise DataError("realized shares deviate beyond tolerance")


# ---------------------------------------------------------------- sft


@cli.group()
def sft():
    """SFT quality metrics, dedup, noise flags, turn augmentation."""


def _load_sft(path: str):
    return [sft_mod.SftSample.from_dict(r) for r in read_jsonl(_require_file(path))]


@sft.command("metrics")
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
@click.option("--stopwords", "stopwords_path", default=None)
def sft_metrics(input_path, output, stopwords_path):
    stopwords = (
        load_stopwords(_require_file(stopwords_path))
        if stopwords_path
        else DEFAULT_STOPWORDS
    )
    report = sft_mod.quality_metrics(_load_sft(input_path), stopwords)
    _write_json(output, report.to_dict())


@sft.command("dedup")
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
@click.option(
    "--mode",
    type=click.Choice(["normalized_exact", "ngram_jaccard"]),
    default="normalized_exact",
)
@click.option("--jaccard-threshold", type=float, default=0.9)
@click.option("--dropped", "dropped_path", default=None)
def sft_dedup(input_path, output, mode, jaccard_threshold, dropped_path):
    kept, dropped = sft_mod.dedup_near(
        _load_sft(input_path), mode=mode, jaccard_threshold=jaccard_threshold
    )
    write_jsonl(output, (s.to_dict() for s in kept))
    if dropped_path:
        _write_json(dropped_path, {"dropped_ids": dropped})


@sft.command("flag")
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
@click.option("--length-outlier/--no-length-outlier", default=False)
@click.option("--length-percentile", type=float, default=99.5)
@click.option("--max-markup-imbalance", type=int, default=2)
def sft_flag(input_path, output, length_outlier, length_percentile, max_markup_imbalance):
    config = sft_mod.NoiseConfig(
        length_outlier=length_outlier,
        length_percentile=length_percentile,
        max_markup_imbalance=max_markup_imbalance,
    )
    flagged = sft_mod.flag_noise(_load_sft(input_path), config)
    _write_json(output, {rule: ids for rule, ids in flagged.items()})


@sft.command("augment")
@click.option("--input", "input_path", required=True)
@click.option("--template", "template_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--output", required=True)
@click.option("--max-tokens", type=int, default=turns_mod.DEFAULT_MAX_TOKENS)
def sft_augment(input_path, template_path, model_path, output, max_tokens):
    with open(_require_file(template_path), "r", encoding="utf-8") as fh:
        template = turns_mod.ChatTemplate.from_dict(json.load(fh))
    model = tok_mod.load_tokenizer(_require_file(model_path))
    records = []
    for sample in _load_sft(input_path):
        for training_sample in turns_mod.augment_turns(
            sample, template, model, max_tokens=max_tokens
        ):
            records.append(training_sample.to_dict())
    write_jsonl(output, records)


# ---------------------------------------------------------------- pref


@cli.group()
def pref():
    """Preference-triplet construction and auditing."""


@pref.command("build")
@click.option("--input", "input_path", required=True)
@click.option("--output", required=True)
@click.option("--report", "report_path", default=None)
def pref_build(input_path, output, report_path):
    seeds = [pref_mod.PrefSeed.from_dict(r) for r in read_jsonl(_require_file(input_path))]
    triplets, report = pref_mod.build_triplets(seeds)
    write_jsonl(output, (t.to_dict() for t in triplets))
    if report_path:
        _write_json(report_path, report.to_dict())


@pref.command("audit")
@click.option("--input", "input_path", required=True)
@click.option("--tolerance", type=float, default=0.001)
@click.option("--output", default=None)
def pref_audit(input_path, tolerance, output):
    triplets = [
        pref_mod.PrefTriplet.from_dict(r) for r in read_jsonl(_require_file(input_path))
    ]
    report = pref_mod.audit_noise(triplets, tolerance=tolerance)
    if output:
        _write_json(output, report.to_dict())
    else:
        click.echo(json.dumps(report.to_dict(), ensure_ascii=False, indent=1))
    if not report.passed:
        raise DataError("noise audit failed: flagged fraction above tolerance")


# ---------------------------------------------------------------- arena


@cli.group()
def arena():
    """Majority voting, win rates, ELO scoring."""


@arena.command("aggregate")
@click.option("--votes", "votes_path", required=True)
@click.option("--output", required=True)
@click.option("--pending", "pending_path", default=None)
def arena_aggregate(votes_path, output, pending_path):
    votes = [
        arena_mod.VoteRecord.from_dict(r) for r in read_jsonl(_require_file(votes_path))
    ]
    matches, pending = arena_mod.aggregate_votes(votes)
    write_jsonl(output, (m.to_dict() for m in matches))
    if pending_path:
        _write_json(
            pending_path,
            [
                {"prompt_id": p, "model_a": a, "model_b": b}
                for p, a, b in pending
            ],
        )


@arena.command("winrates")
@click.option("--matches", "matches_path", required=True)
@click.option("--output", required=True)
def arena_winrates(matches_path, output):
    matches = [
        arena_mod.MatchResult.from_dict(r)
        for r in read_jsonl(_require_file(matches_path))
    ]
    rates = arena_mod.win_rates(matches)
    payload = [
        {
            "model_a": a,
            "model_b": b,
            "win": r.win,
            "loss": r.loss,
            "tie": r.tie,
            "both_bad": r.both_bad,
            "matches": r.matches,
        }
        for (a, b), r in sorted(rates.items())
    ]
    _write_json(output, payload)


@arena.command("elo")
@click.option("--matches", "matches_path", required=True)
@click.option("--config", type=click.Choice(["default", "custom"]), default="default")
@click.option("--k", "k_factor", type=float, default=arena_mod.DEFAULT_K)
@click.option("--initial", type=float, default=arena_mod.DEFAULT_INITIAL)
@click.option("--permutations", type=int, default=arena_mod.DEFAULT_PERMUTATIONS)
@click.option("--seed", type=int, default=0)
@click.option("--output", required=True)
def arena_elo(matches_path, config, k_factor, initial, permutations, seed, output):
    matches = [
        arena_mod.MatchResult.from_dict(r)
        for r in read_jsonl(_require_file(matches_path))
    ]
    ratings = arena_mod.elo_scores(
        matches,
        config=config,
        k_factor=k_factor,
        initial=initial,
        permutations=permutations,
        seed=seed,
    )
    _write_json(output, [r.to_dict() for r in ratings])


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name="langexpand", standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.exceptions.ClickException as exc:
        sys.stderr.write(dumps({"error": "usage", "message": exc.format_message()}) + "\n")
        return 1
    except ValidationError as exc:
        sys.stderr.write(dumps({"error": "validation", "message": str(exc)}) + "\n")
        return 1
    except DataError as exc:
        sys.stderr.write(dumps({"error": "data", "message": str(exc)}) + "\n")
        return 2
    except LangexpandError as exc:
        sys.stderr.write(dumps({"error": "internal", "message": str(exc)}) + "\n")
        return 2
    except OSError as exc:
        sys.stderr.write(dumps({"error": "io", "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
