"""Explanation reliability metrics.

Two set-valued measures quantify reliability.  Stability counts the
unique components that appear across k repeated explanations of the same
input (fewer unique components = more stable).  Agreement counts the
components two explanations share, ignoring order; it compares conditions
(e.g. two occlusion contents) or an explanation against ground truth.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import MelSpectrogram
from .explainer import Explanation, ExplainerConfig, explain, with_seed
from .perturbation import ContentType
from .seeding import stable_seed
from .segmentation import SegmentationScheme

CSV_COLUMNS = ("dataset", "excerpt_id", "axis", "content", "n_samples", "metric", "value")


class MetricsError(ValueError):
    """Explanations are not comparable (different scheme or top_k)."""


@dataclass(frozen=True)
class StabilityResult:
    """Unique-component count over k repeated explanations."""

    u_n: int
    k: int
    top_k: int
    component_sets: tuple[frozenset[int], ...]


@dataclass(frozen=True)
class OverlapResult:
    """Common-component count between two explanations."""

    n_ce: int
    reference: frozenset[int]
    other: frozenset[int]


def _check_comparable(explanations: Sequence[Explanation]) -> None:
    first = explanations[0]
    for other in explanations[1:]:
        if other.scheme != first.scheme:
            raise MetricsError("explanations use different segmentation schemes")
        if other.top_k != first.top_k:
            raise MetricsError(
                f"explanations use different top_k ({first.top_k} vs {other.top_k})"
            )


def unique_components(explanations: Sequence[Explanation]) -> StabilityResult:
    """Union size of the component sets of k explanations (order ignored)."""
    if not explanations:
        raise MetricsError("need at least one explanation")
    _check_comparable(explanations)
    sets = tuple(e.component_set() for e in explanations)
    union = frozenset().union(*sets)
    return StabilityResult(
        u_n=len(union),
        k=len(explanations),
        top_k=explanations[0].top_k,
        component_sets=sets,
    )


def stability_trial(
    spec: MelSpectrogram,
    predictor,
    scheme: SegmentationScheme,
    content: ContentType,
    config: ExplainerConfig,
    k: int = 5,
    seeds: Sequence[int] | None = None,
) -> StabilityResult:
    """Explain the same input k times with different seeds and aggregate.

    When ``seeds`` is omitted they are derived from ``config.seed`` and
    the trial index, so a trial is reproducible without global RNG state.
    """
    if seeds is None:
        seeds = [stable_seed(config.seed, "trial", index) for index in range(k)]
    seeds = list(seeds)
    if len(seeds) != k or len(set(seeds)) != k:
        raise MetricsError(f"need {k} distinct seeds, got {seeds}")
    explanations = [
        explain(spec, predictor, scheme, content, with_seed(config, seed)) for seed in seeds
    ]
    return unique_components(explanations)


def common_components(reference: Explanation, other: Explanation) -> OverlapResult:
    """Number of components two explanations share, ignoring order."""
    _check_comparable([reference, other])
    ref_set = reference.component_set()
    other_set = other.component_set()
    return OverlapResult(n_ce=len(ref_set & other_set), reference=ref_set, other=other_set)


def overlap_with_ground_truth(explanation: Explanation, truth: Iterable[int]) -> int:
    """Common components between an explanation and an annotated index set."""
    return len(explanation.component_set() & frozenset(truth))


def summarize(values: Sequence[int]) -> dict:
    """Median plus exact value proportions of an integer-valued sample.

    The median uses the lower-of-two convention for even counts, which
    keeps summary rows integer-valued for these small-integer metrics.
    """
    if len(values) == 0:
        raise MetricsError("cannot summarize an empty value list")
    ordered = sorted(values)
    counts = Counter(ordered)
    total = len(ordered)
    return {
        "median": ordered[(total - 1) // 2],
        "proportions": {value: count / total for value, count in sorted(counts.items())},
        "count": total,
    }
