"""Evolutionary proof-sketch search with pluggable language-model, checker and prover backends."""

from __future__ import annotations

from .sketch import ProofSketch, SearchReplaceEdit, apply_edit, find_sorries, parse_sketch

__version__ = "0.1.0"

__all__ = ["ProofSketch", "SearchReplaceEdit", "apply_edit", "find_sorries", "parse_sketch", "__version__"]
