import random

import pytest

from langexpand import merge_tokenizers, train_bpe

SPECIALS = ("<s>", "</s>", "<pad>")

ARABIC_LETTERS = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي"
ENGLISH_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def make_word_pool(rng, alphabet, n_words, min_len=2, max_len=8):
    pool = set()
    while len(pool) < n_words:
        length = rng.randint(min_len, max_len)
        pool.add("".join(rng.choice(alphabet) for _ in range(length)))
    return sorted(pool)


def make_corpus(seed, alphabet, n_docs, pool_size=250, doc_words=(15, 45)):
    """Synthetic corpus with a Zipf-ish word frequency profile."""
    rng = random.Random(seed)
    pool = make_word_pool(rng, alphabet, pool_size)
    weights = [1.0 / (i + 1) for i in range(len(pool))]
    return [
        " ".join(rng.choices(pool, weights=weights, k=rng.randint(*doc_words)))
        for _ in range(n_docs)
    ]


@pytest.fixture(scope="session")
def english_corpus():
    return make_corpus(seed=11, alphabet=ENGLISH_LETTERS, n_docs=1000)


@pytest.fixture(scope="session")
def arabic_corpus():
    return make_corpus(seed=22, alphabet=ARABIC_LETTERS, n_docs=1000)


@pytest.fixture(scope="session")
def original_tok(english_corpus):
    return train_bpe(english_corpus, vocab_size=600, specials=SPECIALS)


@pytest.fixture(scope="session")
def arabic_tok(arabic_corpus):
    return train_bpe(arabic_corpus, vocab_size=600, specials=SPECIALS)


@pytest.fixture(scope="session")
def merged_tok(original_tok, arabic_tok):
    return merge_tokenizers(original_tok, arabic_tok)
