"""Data-side toolkit for expanding a pretrained LLM to a new language.

Covers tokenizer training/merging and fertility, embedding-matrix vocabulary
expansion, pretraining corpus filtering, data-mixture planning, SFT quality
checks, per-turn loss-mask augmentation, preference-triplet construction, and
arena ELO scoring. Everything is deterministic given explicit seeds.
"""

from .arena import (
    MatchResult,
    Rating,
    VoteRecord,
    aggregate_votes,
    elo_scores,
    win_rates,
)
from .corpus import (
    Document,
    FilterReport,
    dedup_exact,
    filter_language,
    filter_pipeline,
    filter_short,
    filter_url_and_stopwords,
)
from .embeddings import EmbeddingMatrix, expand_embeddings, load_matrix, save_matrix
from .errors import DataError, LangexpandError, MatrixFormatError, ValidationError
from .mixture import MixturePlan, SourceSpec, plan_grid, plan_mixture, verify_manifest
from .preference import PrefSeed, PrefTriplet, audit_noise, build_triplets
from .sft_quality import (
    NoiseConfig,
    QualityReport,
    SftSample,
    Turn,
    dedup_near,
    flag_noise,
    quality_metrics,
)
from .tokenizer import (
    FertilityReport,
    TokenizerModel,
    decode,
    decode_full,
    encode,
    fertility,
    load_tokenizer,
    merge_tokenizers,
    save_tokenizer,
    train_bpe,
)
from .turns import ChatTemplate, TrainingSample, augment_turns, render

__version__ = "0.1.0"
