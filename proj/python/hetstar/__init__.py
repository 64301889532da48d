# SPDX-License-Identifier: Apache-2.0
"""Nested NER with a heterogeneous star graph and nested BIOES tagging."""

from ._core import (
    HetstarError,
    Model,
    classify_pair,
    count_attention_pairs,
    decode_nested,
    encode_nested,
    generate_corpus,
    gradient_check,
    is_representable,
    log_partition,
    mask_transitions,
    viterbi,
)

__all__ = [
    "HetstarError",
    "Model",
    "classify_pair",
    "count_attention_pairs",
    "decode_nested",
    "encode_nested",
    "generate_corpus",
    "gradient_check",
    "is_representable",
    "log_partition",
    "mask_transitions",
    "viterbi",
]
