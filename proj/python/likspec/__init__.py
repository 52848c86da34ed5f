"""Likelihood spectra of human and model text."""

from ._likspec import (
    BigramModel,
    LikspecError,
    ScoredDocument,
    Spectrum,
    __version__,
    build_features,
    compare_table,
    count_yesno,
    dft,
    document_spectrum,
    load_scores,
    magnitude_spectrum,
    parse_scores,
    run_pipeline,
    score_texts,
    spectral_overlap,
    sweep_delta,
    tokenize,
    to_jsonl,
    validate_scores,
    verify_manifest,
    zscore,
)

# Tag set accepted in token annotations. "X" catches everything else.
UNIVERSAL_POS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)

__all__ = [name for name in dir() if not name.startswith("_")]
