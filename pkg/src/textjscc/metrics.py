"""Word error rate: token-level Levenshtein distance normalized by reference length."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Minimum number of insert/delete/substitute token edits turning a into b."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, start=1):
        cur = [i]
        for j, tb in enumerate(b, start=1):
            cost = 0 if ta == tb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def wer(reference: Sequence, hypothesis: Sequence) -> float:
    """levenshtein(ref, hyp) / len(ref); an empty hypothesis scores exactly 1.0."""
    if len(reference) == 0:
        raise DomainError("WER reference must be nonempty")
    return levenshtein(reference, hypothesis) / len(reference)


@dataclass
class WerReport:
    """Per-sentence and aggregate WER for one experiment configuration."""

    distances: list[int]
    ref_lengths: list[int]
    wers: list[float]
    mean_wer: float
    decode_failures: int = 0

    @classmethod
    def from_pairs(cls, pairs, decode_failures: int = 0) -> "WerReport":
        """Build from (reference, hypothesis) sequence pairs."""
        distances, lengths, wers = [], [], []
        for ref, hyp in pairs:
            d = levenshtein(ref, hyp)
            distances.append(d)
            lengths.append(len(ref))
            wers.append(wer(ref, hyp))
        if not wers:
            raise DomainError("WerReport needs at least one sentence pair")
        return cls(distances, lengths, wers, sum(wers) / len(wers), decode_failures)
