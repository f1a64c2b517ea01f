"""Reciprocal-rank fusion of the two sememe predictors and threshold selection.

The fused score of a sememe is a weighted sum of the reciprocals of its
ranks under the similarity recommender and the translation ranker.  Only
ranks enter the fusion, so it is invariant to monotone rescaling of either
model's raw scores.  The final predicted set keeps every sememe scoring
strictly above the threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import ConfigError, ContractError, ParseError, ValidationError
from .graph import NodeId
from .ranking import ScoredRanking


class Provenance(enum.Enum):
    """Which model produced a prediction: the similarity recommender, the
    translation ranker (also the fallback when similarity coverage is
    missing), or the fusion of both."""

    SIMILARITY = "similarity"
    TRANSLATION = "translation"
    FUSED = "fused"


@dataclass(frozen=True)
class FusionConfig:
    similarity_weight: float = 0.45
    translation_weight: float = 0.55
    threshold: float = 0.32

    def __post_init__(self) -> None:
        if self.similarity_weight < 0 or self.translation_weight < 0:
            raise ConfigError("fusion weights must be >= 0")
        if self.similarity_weight + self.translation_weight <= 0:
            raise ConfigError("at least one fusion weight must be positive")


@dataclass(frozen=True)
class PredictionResult:
    target: NodeId
    ranking: ScoredRanking
    selected: frozenset[NodeId]
    provenance: Provenance

    def __post_init__(self) -> None:
        if self.target != self.ranking.target:
            raise ValidationError(
                f"prediction target {self.target} does not match ranking target {self.ranking.target}"
            )
        ranked = set(self.ranking.sememes())
        if not self.selected <= ranked:
            extra = sorted(s.name for s in self.selected - ranked)
            raise ValidationError(f"selected sememes missing from ranking: {extra}")


def fuse(
    similarity: ScoredRanking | None,
    translation: ScoredRanking,
    config: FusionConfig,
) -> ScoredRanking:
    """Combine the two rankings; with no similarity ranking the result
    reproduces the translation ordering at ``translation_weight / rank``."""
    if similarity is None:
        return reciprocal_scores(translation, config.translation_weight)
    if set(similarity.sememes()) != set(translation.sememes()):
        only_sim = sorted(s.name for s in set(similarity.sememes()) - set(translation.sememes()))
        only_tr = sorted(s.name for s in set(translation.sememes()) - set(similarity.sememes()))
        raise ContractError(
            f"candidate sets differ between the two rankings for {translation.target}: "
            f"similarity-only {only_sim[:3]}, translation-only {only_tr[:3]}"
        )
    if similarity.target != translation.target:
        raise ContractError(
            f"rankings describe different targets: {similarity.target} vs {translation.target}"
        )
    scores = {
        s: config.similarity_weight / similarity.rank(s)
        + config.translation_weight / translation.rank(s)
        for s in translation.sememes()
    }
    return ScoredRanking.from_scores(translation.target, scores)


def reciprocal_scores(ranking: ScoredRanking, weight: float = 1.0) -> ScoredRanking:
    """Replace raw scores by ``weight / rank``, preserving the ordering.

    This puts single-model scores on the same scale the fusion produces,
    so one selection threshold applies across all three model choices.
    """
    if weight <= 0:
        raise ConfigError(f"weight must be > 0, got {weight}")
    entries = tuple(
        (s, weight / rank) for rank, s in enumerate(ranking.sememes(), start=1)
    )
    return ScoredRanking(ranking.target, entries)


def threshold_select(
    ranking: ScoredRanking, threshold: float, provenance: Provenance
) -> PredictionResult:
    """Keep sememes scoring strictly above ``threshold``; the full ranking
    is preserved for rank-based metrics."""
    selected = frozenset(s for s, score in ranking.entries if score > threshold)
    return PredictionResult(ranking.target, ranking, selected, provenance)


# -- prediction dump --------------------------------------------------
#
# One line per target synset:
#   synset-id<TAB>s1:score1,s2:score2,...<TAB>selected-list
# The middle field lists the full ranking best-first; the last field the
# selected sememes in ranking order, empty when nothing passes the
# threshold.  Scores use 17 significant digits and round-trip exactly.


def save_predictions(results: Iterable[PredictionResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            ranked = ",".join(
                "%s:%.17g" % (s.name, score) for s, score in result.ranking.entries
            )
            chosen = ",".join(s.name for s in result.ranking.sememes() if s in result.selected)
            fh.write(f"{result.target.name}\t{ranked}\t{chosen}\n")


def load_predictions(
    path: str | Path, provenance: Provenance = Provenance.FUSED
) -> list[PredictionResult]:
    """Read a prediction dump; the file does not record provenance, so the
    caller supplies one label for all rows."""
    path = Path(path)
    results: list[PredictionResult] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 TAB-separated fields, got {len(fields)}")
            target = NodeId.parse(fields[0])
            entries: list[tuple[NodeId, float]] = []
            if fields[1]:
                for item in fields[1].split(","):
                    name, _, score_text = item.rpartition(":")
                    try:
                        score = float(score_text)
                    except ValueError as exc:
                        raise ParseError(f"{path}:{lineno}: bad score in {item!r}") from exc
                    entries.append((NodeId.parse(name), score))
            try:
                ranking = ScoredRanking(target, tuple(entries))
            except ValidationError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            selected = frozenset(
                NodeId.parse(name) for name in fields[2].split(",") if name
            )
            results.append(PredictionResult(target, ranking, selected, provenance))
    return results
