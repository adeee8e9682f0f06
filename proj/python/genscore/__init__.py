"""Reference-free and reference-based text scoring with a conditional LM
backend, plus meta-evaluation against human judgments."""

from ._core import (
    Backend,
    BackendError,
    Corpus,
    DataError,
    Error,
    ProtocolError,
    ScoreTable,
    UsageError,
    bootstrap_compare,
    builtin_prompt_set,
    chrf,
    evaluate_agreement,
    kendall_tau_b,
    load_corpus,
    load_scores,
    make_backend,
    pearson,
    rouge_l,
    rouge_n,
    score_corpus,
    score_corpus_baseline,
    score_pair,
    sentence_bleu,
    spearman,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
