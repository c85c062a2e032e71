"""Locally-weighted linear surrogate over occlusion masks.

For one input excerpt, the explainer draws occlusion masks, realizes each
as a perturbed spectrogram, scores those with the black-box classifier and
fits a weighted ridge regression from presence bits to predicted
probabilities.  Samples closer to the unperturbed input (few occlusions)
get larger weights through an exponential kernel over the cosine distance
between the mask and the all-ones vector.  The largest coefficients, by
magnitude or restricted to positive sign, form the explanation.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MelSpectrogram
from .perturbation import ContentType, SampleSet, realize_batch, sample_masks
from .segmentation import SegmentationScheme

SIGN_ANY = "any"
SIGN_POSITIVE_ONLY = "positive_only"

# Cap the memory a realized batch may take, not the sample count.
_BATCH_CELL_BUDGET = 4_000_000


class ExplainerError(ValueError):
    """Invalid configuration or unusable fit."""


class PredictorFailure(RuntimeError):
    """The classifier failed while scoring a range of synthetic samples."""


@dataclass(frozen=True)
class ExplainerConfig:
    """Knobs of one explanation run.

    ``n_samples`` is the number of synthetic samples (the first is always
    the unperturbed input); ``top_k`` truncates the ranked coefficients;
    ``kernel_width`` is the sigma of the proximity kernel; ``ridge_lambda``
    regularizes every coefficient except the intercept.
    """

    n_samples: int = 1000
    top_k: int = 3
    sign_filter: str = SIGN_ANY
    kernel_width: float = 0.25
    ridge_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ExplainerError("n_samples must be >= 1")
        if self.top_k < 1:
            raise ExplainerError("top_k must be >= 1")
        if self.sign_filter not in (SIGN_ANY, SIGN_POSITIVE_ONLY):
            raise ExplainerError(f"unknown sign_filter {self.sign_filter!r}")
        if not (self.kernel_width > 0):
            raise ExplainerError("kernel_width must be > 0")
        if self.ridge_lambda < 0:
            raise ExplainerError("ridge_lambda must be >= 0")
        if self.seed < 0:
            raise ExplainerError("seed must be a non-negative integer")


@dataclass(frozen=True)
class Explanation:
    """Ranked (component, weight) pairs plus fit diagnostics."""

    entries: tuple[tuple[int, float], ...]
    intercept: float
    prediction: float
    r2_local: float
    scheme: SegmentationScheme
    content: ContentType
    n_samples: int
    top_k: int
    seed: int
    sign_filter: str = SIGN_ANY
    coefficients: tuple[float, ...] = field(default=(), repr=False)

    def top_components(self) -> list[int]:
        return [component for component, _ in self.entries]

    def component_set(self) -> frozenset[int]:
        return frozenset(self.top_components())

    def to_json_dict(self) -> dict:
        return {
            "prediction": self.prediction,
            "content": self.content.kind,
            "axis": self.scheme.axis,
            "n_components": self.scheme.n_components,
            "n_samples": self.n_samples,
            "entries": [
                {"component": component, "weight": weight} for component, weight in self.entries
            ],
            "intercept": self.intercept,
            "r2_local": self.r2_local,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def proximity_weights(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    """Kernel weight of each mask: exp(-d^2 / sigma^2).

    ``d`` is the cosine distance between the binary mask and the all-ones
    vector, which reduces to ``1 - sqrt(m / N_c)`` for a mask with ``m``
    present components.  The all-ones mask gets weight 1; weights stay in
    (0, 1] even for the all-zeros mask.
    """
    if not (kernel_width > 0):
        raise ExplainerError("kernel_width must be > 0")
    masks = np.atleast_2d(np.asarray(masks))
    n_components = masks.shape[1]
    if n_components == 0:
        raise ExplainerError("masks must have at least one component")
    present = masks.sum(axis=1, dtype=np.float64)
    distance = 1.0 - np.sqrt(present / n_components)
    return np.exp(-(distance**2) / kernel_width**2)


def proximity_weight(mask: np.ndarray, kernel_width: float) -> float:
    """Scalar convenience wrapper around :func:`proximity_weights`."""
    return float(proximity_weights(np.asarray(mask)[None, :], kernel_width)[0])


def fit_weighted_ridge(
    masks: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    ridge_lambda: float = 0.0,
) -> tuple[np.ndarray, float, float]:
    """Solve the weighted ridge normal equations with a free intercept.

    Minimizes ``sum_i w_i * (y_i - b0 - beta . z_i)^2 + lambda * |beta|^2``
    (the intercept is not penalized) over the (N_c + 1)-dimensional system.
    Returns ``(coefficients, intercept, r2_local)`` where ``r2_local`` is
    the weighted coefficient of determination, reported as 0.0 when the
    targets carry no weighted variance at all.
    """
    masks = np.atleast_2d(np.asarray(masks, dtype=np.float64))
    targets = np.asarray(targets, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    n_samples, n_components = masks.shape
    if targets.shape[0] != n_samples or weights.shape[0] != n_samples:
        raise ExplainerError(
            f"shape mismatch: {n_samples} masks, {targets.shape[0]} targets, "
            f"{weights.shape[0]} weights"
        )
    if n_samples < 1:
        raise ExplainerError("need at least one sample")
    if not np.all(np.isfinite(targets)):
        raise ExplainerError("targets contain non-finite values")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ExplainerError("weights must be finite and non-negative")
    if not np.any(weights > 0):
        raise ExplainerError("at least one weight must be positive")
    if ridge_lambda < 0:
        raise ExplainerError("ridge_lambda must be >= 0")
    if np.all(targets == targets[0]):
        # Exact optimum for a constant response at any lambda; returning it
        # directly keeps the coefficients at literal zero so downstream
        # tie-breaking stays deterministic.
        return np.zeros(n_components), float(targets[0]), 0.0

    design = np.empty((n_samples, n_components + 1))
    design[:, 0] = 1.0
    design[:, 1:] = masks
    weighted = design * weights[:, None]
    gram = weighted.T @ design
    penalty = np.eye(n_components + 1)
    penalty[0, 0] = 0.0  # intercept stays unpenalized
    moment = weighted.T @ targets
    system = gram + ridge_lambda * penalty
    # LAPACK only raises on exactly-zero pivots, so rank deficiency hidden
    # by rounding must be caught by conditioning; with lambda > 0 the system
    # is positive definite and this cannot trigger.
    if ridge_lambda == 0 and not np.linalg.cond(system) < 1e12:
        raise ExplainerError(
            "normal equations are singular with ridge_lambda=0; "
            "use ridge_lambda > 0 or more samples"
        )
    solution = np.linalg.solve(system, moment)
    intercept = float(solution[0])
    coefficients = solution[1:]

    fitted = design @ solution
    weight_sum = weights.sum()
    target_mean = float(weights @ targets) / weight_sum
    total_ss = float(weights @ (targets - target_mean) ** 2)
    residual_ss = float(weights @ (targets - fitted) ** 2)
    # Constant targets leave R^2 undefined; report 0 instead of noise.
    if total_ss <= weight_sum * 1e-18:
        r2_local = 0.0
    else:
        r2_local = 1.0 - residual_ss / total_ss
    return coefficients, intercept, r2_local


def rank_components(
    coefficients: np.ndarray, top_k: int, sign_filter: str = SIGN_ANY
) -> list[tuple[int, float]]:
    """Order components by influence and truncate to ``top_k``.

    ``any`` ranks by descending |weight|; ``positive_only`` keeps strictly
    positive weights ranked by descending value.  Ties break toward the
    lower component index so repeated runs stay comparable.
    """
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if sign_filter == SIGN_ANY:
        candidates = [(i, float(w)) for i, w in enumerate(coefficients)]
        candidates.sort(key=lambda item: (-abs(item[1]), item[0]))
    elif sign_filter == SIGN_POSITIVE_ONLY:
        candidates = [(i, float(w)) for i, w in enumerate(coefficients) if w > 0]
        candidates.sort(key=lambda item: (-item[1], item[0]))
    else:
        raise ExplainerError(f"unknown sign_filter {sign_filter!r}")
    return candidates[:top_k]


def _predict_in_batches(
    predictor,
    spec: MelSpectrogram,
    scheme: SegmentationScheme,
    sample_set: SampleSet,
    content: ContentType,
    seed: int,
) -> np.ndarray:
    cells = spec.n_frames * spec.n_bands
    batch_rows = int(np.clip(_BATCH_CELL_BUDGET // max(cells, 1), 1, 16384))
    labels = scheme.label_grid()
    predictions = np.empty(sample_set.n_samples, dtype=np.float64)
    for start in range(0, sample_set.n_samples, batch_rows):
        stop = min(start + batch_rows, sample_set.n_samples)
        batch = realize_batch(
            spec, scheme, sample_set.masks[start:stop], content,
            seed=seed, start_index=start, labels=labels,
        )
        try:
            result = predictor.predict_batch(batch)
        except Exception as exc:
            raise PredictorFailure(
                f"classifier failed on synthetic samples [{start}, {stop})"
            ) from exc
        result = np.asarray(result, dtype=np.float64).ravel()
        if result.shape[0] != stop - start:
            raise PredictorFailure(
                f"classifier returned {result.shape[0]} probabilities for "
                f"{stop - start} samples [{start}, {stop})"
            )
        predictions[start:stop] = result
    return predictions


def explain(
    spec: MelSpectrogram,
    predictor,
    scheme: SegmentationScheme,
    content: ContentType,
    config: ExplainerConfig,
) -> Explanation:
    """End-to-end explanation of ``predictor``'s output on ``spec``.

    Pipeline: draw masks, realize each as a perturbed spectrogram, score
    with the classifier, weight by proximity, fit the ridge surrogate and
    rank the coefficients.  Deterministic given the config seed.
    """
    if (scheme.n_frames, scheme.n_bands) != spec.shape:
        raise ExplainerError(
            f"scheme is for a {scheme.n_frames}x{scheme.n_bands} grid, input is {spec.shape}"
        )
    top_k = config.top_k
    if top_k > scheme.n_components:
        warnings.warn(
            f"top_k={top_k} exceeds the {scheme.n_components} components; clamping",
            stacklevel=2,
        )
        top_k = scheme.n_components
    sample_set = sample_masks(scheme.n_components, config.n_samples, config.seed)
    predictions = _predict_in_batches(predictor, spec, scheme, sample_set, content, config.seed)
    weights = proximity_weights(sample_set.masks, config.kernel_width)
    coefficients, intercept, r2_local = fit_weighted_ridge(
        sample_set.masks, predictions, weights, config.ridge_lambda
    )
    entries = rank_components(coefficients, top_k, config.sign_filter)
    return Explanation(
        entries=tuple(entries),
        intercept=intercept,
        prediction=float(predictions[0]),
        r2_local=r2_local,
        scheme=scheme,
        content=content,
        n_samples=config.n_samples,
        top_k=top_k,
        seed=config.seed,
        sign_filter=config.sign_filter,
        coefficients=tuple(float(c) for c in coefficients),
    )


def with_seed(config: ExplainerConfig, seed: int) -> ExplainerConfig:
    """Copy of ``config`` with a different seed."""
    return replace(config, seed=int(seed))
