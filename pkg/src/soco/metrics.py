"""Soundness and completeness metrics plus order-based baseline curves.

Soundness sweeps mask ratios from high to low, so the included (unmasked)
top-attribution set grows step by step.  Whenever a growth step fails to
buy at least ``epsilon`` accuracy, the newly included features are booked
as false attribution.  The per-sample soundness ratio at a step is

    q = (w(included) - w(false)) / w(included)

where w() sums attribution values over the set ("attribution" weighting)
or counts features ("cardinality" weighting).

Completeness removes high-attribution features above a threshold and
reports the accuracy drop.  Order-based curves (deletion, insertion, ROAD)
consume only the feature ranking, never the values; the pair of schemes in
the modify module exists to demonstrate exactly that blindness.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import (
    AttributionMap,
    ConfigError,
    DataError,
    Dataset,
    EvalCurve,
    Model,
    accuracy_from_probs,
)
from .perturb import Imputer, impute_grid, round_half_away
from .rng import substream

DEFAULT_MASK_RATIOS = tuple(round(0.99 - 0.01 * i, 2) for i in range(99))
DEFAULT_THRESHOLDS = tuple(round(0.9 - 0.1 * i, 1) for i in range(9))
DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(11))

WEIGHTINGS = ("attribution", "cardinality")
ORDER_MODES = ("deletion", "insertion")
RANK_ORDERS = ("MoRF", "LeRF")


class SoundnessPoint(NamedTuple):
    accuracy_level: float
    mean_soundness: float


def _check_descending(values: Sequence[float], name: str) -> None:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ConfigError(f"{name} must be non-empty")
    if np.any(arr <= 0) or np.any(arr >= 1):
        raise ConfigError(f"{name} must lie strictly inside (0, 1)")
    if np.any(np.diff(arr) >= 0):
        raise ConfigError(f"{name} must be strictly descending")


@dataclass(frozen=True)
class SoundnessConfig:
    mask_ratios: tuple = DEFAULT_MASK_RATIOS
    epsilon: float = 0.01
    imputer: Imputer = field(default_factory=Imputer)
    weighting: str = "attribution"

    def __post_init__(self) -> None:
        _check_descending(self.mask_ratios, "mask_ratios")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"unknown weighting {self.weighting!r}")


@dataclass(frozen=True)
class CompletenessConfig:
    thresholds: tuple = DEFAULT_THRESHOLDS
    imputer: Imputer = field(default_factory=Imputer)

    def __post_init__(self) -> None:
        _check_descending(self.thresholds, "thresholds")


def _flat_maps(dataset: Dataset, maps: Sequence[AttributionMap]) -> np.ndarray:
    if len(maps) != len(dataset.samples):
        raise DataError(
            f"need one attribution map per sample "
            f"({len(maps)} maps, {len(dataset.samples)} samples)"
        )
    rows = []
    for m in maps:
        if m.values.shape != dataset.feature_shape:
            raise DataError("attribution map shape does not match the dataset")
        if m.flat().max(initial=0.0) > 1.0 + 1e-12:
            raise DataError("maps must be normalized to [0, 1]")
        rows.append(m.flat())
    return np.stack(rows)


def _predrawn_noise(
    dataset: Dataset, imputer: Imputer, seed: int, keep: np.ndarray
) -> Optional[np.ndarray]:
    """Noise drawn once per metric run and reused at every sweep step.

    Sharing the draw across steps keeps accuracy trajectories monotone in
    the included set instead of jittering point to point, and makes results
    independent of sweep order and worker scheduling.
    """
    if imputer.noise_std == 0.0:
        return None
    rng = substream(seed, "noise")
    full = imputer.noise_std * rng.standard_normal(
        (len(dataset.samples),) + dataset.feature_shape
    )
    return full[keep]


def _fill(
    features: np.ndarray,
    masks: np.ndarray,
    imputer: Imputer,
    dataset: Dataset,
    noise: Optional[np.ndarray],
) -> np.ndarray:
    if imputer.kind == "zero":
        filled = np.where(masks, 0.0, features)
    elif imputer.kind == "mean":
        filled = np.where(masks, dataset.feature_means, features)
    else:
        if not dataset.is_grid:
            raise ConfigError("noisy_linear requires grid-shaped samples")
        filled = np.stack(
            [impute_grid(features[i], masks[i]) for i in range(features.shape[0])]
        )
    if noise is not None:
        filled = filled + noise * masks
    return filled


def _masked_accuracy(
    model: Model,
    features: np.ndarray,
    labels: np.ndarray,
    masks: np.ndarray,
    imputer: Imputer,
    dataset: Dataset,
    noise: Optional[np.ndarray],
) -> float:
    filled = _fill(features, masks, imputer, dataset, noise)
    return accuracy_from_probs(model.predict_probs(filled), labels)


def _rank_matrix(flat_values: np.ndarray, descending: bool = False) -> np.ndarray:
    """ranks[i, j] = position of feature j in sample i's sort order."""
    keys = -flat_values if descending else flat_values
    order = np.argsort(keys, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(flat_values.shape[1]), axis=1)
    return ranks


def soundness_curve(
    model: Model,
    dataset: Dataset,
    maps: Sequence[AttributionMap],
    cfg: Optional[SoundnessConfig] = None,
    seed: int = 0,
) -> EvalCurve:
    """Accuracy level versus mean per-sample soundness ratio.

    The raw sweep visits every configured mask ratio, but saturated stretches
    repeat the same accuracy, so the returned curve keeps only the first
    point (largest mask ratio, smallest included set) observed for each
    distinct accuracy value.  The full sweep is preserved under
    ``meta["sweep"]`` as (mask_ratio, accuracy, mean_soundness) triples.
    All-zero maps carry no attribution mass to score, so those samples are
    skipped and counted in ``meta["skipped"]``.
    """
    cfg = cfg or SoundnessConfig()
    values = _flat_maps(dataset, maps)
    keep = values.sum(axis=1) > 0
    n_skipped = int(np.count_nonzero(~keep))
    if n_skipped:
        warnings.warn(f"skipping {n_skipped} all-zero attribution map(s)")
    if not np.any(keep):
        raise DataError("empty evaluation set")

    values = values[keep]
    features = dataset.feature_matrix()[keep]
    labels = dataset.labels()[keep]
    n, d = values.shape
    noise = _predrawn_noise(dataset, cfg.imputer, seed, keep)

    ranks = _rank_matrix(values)
    sorted_vals = np.take_along_axis(values, np.argsort(values, axis=1, kind="stable"), axis=1)
    prefix = np.concatenate([np.zeros((n, 1)), np.cumsum(sorted_vals, axis=1)], axis=1)
    total = prefix[:, -1]

    ks = [round_half_away(m * d) for m in cfg.mask_ratios]
    if max(ks) >= d:
        raise ConfigError(
            f"mask ratio {cfg.mask_ratios[int(np.argmax(ks))]} masks every "
            f"feature of a {d}-feature map"
        )

    sweep: list[tuple[float, float, float]] = []
    false_mass = np.zeros(n)
    false_card = 0
    s_prev = 0.0
    k_prev = d
    for m, k in zip(cfg.mask_ratios, ks):
        masks = (ranks < k).reshape((n,) + dataset.feature_shape)
        s_m = _masked_accuracy(model, features, labels, masks, cfg.imputer, dataset, noise)
        if s_m - s_prev < cfg.epsilon:
            false_mass += prefix[:, k_prev] - prefix[:, k]
            false_card += k_prev - k
        if cfg.weighting == "attribution":
            included = total - prefix[:, k]
            q = float(np.mean((included - false_mass) / included))
        else:
            q = ((d - k) - false_card) / (d - k)
        sweep.append((float(m), s_m, q))
        s_prev = s_m
        k_prev = k

    first_seen: dict[float, float] = {}
    for _, s_m, q in sweep:
        if s_m not in first_seen:
            first_seen[s_m] = q
    points = tuple(SoundnessPoint(s, first_seen[s]) for s in sorted(first_seen))
    return EvalCurve(
        metric_kind="soundness",
        x_axis="accuracy_level",
        points=points,
        meta={
            "sweep": [list(t) for t in sweep],
            "skipped": n_skipped,
            "n_samples": n,
            "weighting": cfg.weighting,
            "epsilon": cfg.epsilon,
            "imputer": cfg.imputer.kind,
            "noise_std": cfg.imputer.noise_std,
        },
    )


def align_soundness(
    curve: EvalCurve, levels: Sequence[float]
) -> list[tuple[float, float]]:
    """Soundness read off at fixed accuracy levels by linear interpolation.

    Levels outside the observed accuracy range are omitted rather than
    extrapolated, so comparisons across methods only use levels every
    method actually reached.
    """
    xs, ys = curve.xs(), curve.ys()
    out = []
    for level in levels:
        if xs[0] <= level <= xs[-1]:
            out.append((float(level), float(np.interp(level, xs, ys))))
    return out


def completeness_curve(
    model: Model,
    dataset: Dataset,
    maps: Sequence[AttributionMap],
    cfg: Optional[CompletenessConfig] = None,
    seed: int = 0,
) -> EvalCurve:
    """Accuracy drop when features attributed above each threshold are removed."""
    cfg = cfg or CompletenessConfig()
    values = _flat_maps(dataset, maps)
    features = dataset.feature_matrix()
    labels = dataset.labels()
    n = values.shape[0]
    noise = _predrawn_noise(dataset, cfg.imputer, seed, np.ones(n, dtype=bool))

    s_0 = accuracy_from_probs(model.predict_probs(features), labels)
    pts = []
    for t in cfg.thresholds:
        masks = (values > t).reshape((n,) + dataset.feature_shape)
        s_t = _masked_accuracy(model, features, labels, masks, cfg.imputer, dataset, noise)
        pts.append((float(t), s_0 - s_t))
    pts.sort(key=lambda p: p[0])
    return EvalCurve(
        metric_kind="completeness",
        x_axis="attribution_threshold",
        points=tuple(pts),
        meta={
            "clean_accuracy": s_0,
            "imputer": cfg.imputer.kind,
            "noise_std": cfg.imputer.noise_std,
        },
    )


def order_based_curve(
    model: Model,
    dataset: Dataset,
    maps: Sequence[AttributionMap],
    mode: str,
    order: str = "MoRF",
    imputer: Optional[Imputer] = None,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> EvalCurve:
    """Accuracy as growing rank prefixes are deleted or inserted.

    Deletion masks the first round(fraction * d) features in the chosen
    order; insertion starts fully masked and restores that prefix.  Only
    the ranking of each map matters; two maps with equal orderings produce
    bit-identical curves no matter how their values differ.
    """
    if mode not in ORDER_MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if order not in RANK_ORDERS:
        raise ConfigError(f"unknown rank order {order!r}")
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.size < 2 or np.any(fr < 0) or np.any(fr > 1) or np.any(np.diff(fr) <= 0):
        raise ConfigError("fractions must be strictly ascending within [0, 1]")
    imputer = imputer or Imputer(kind="zero")

    values = _flat_maps(dataset, maps)
    features = dataset.feature_matrix()
    labels = dataset.labels()
    n, d = values.shape
    noise = _predrawn_noise(dataset, imputer, seed, np.ones(n, dtype=bool))
    ranks = _rank_matrix(values, descending=(order == "MoRF"))

    pts = []
    for f in fr:
        k = round_half_away(float(f) * d)
        prefix = ranks < k
        masked = prefix if mode == "deletion" else ~prefix
        s = _masked_accuracy(
            model,
            features,
            labels,
            masked.reshape((n,) + dataset.feature_shape),
            imputer,
            dataset,
            noise,
        )
        pts.append((float(f), s))
    return EvalCurve(
        metric_kind=mode,
        x_axis="masked_fraction",
        points=tuple(pts),
        meta={"order": order, "imputer": imputer.kind, "noise_std": imputer.noise_std},
    )


def road_curve(
    model: Model,
    dataset: Dataset,
    maps: Sequence[AttributionMap],
    order: str = "MoRF",
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    noise_std: float = 0.0,
    seed: int = 0,
) -> EvalCurve:
    """Deletion with debiased imputation: the neighbor solve on grids, the
    dataset mean on tabular data where pixel adjacency is undefined."""
    kind = "noisy_linear" if dataset.is_grid else "mean"
    base = order_based_curve(
        model,
        dataset,
        maps,
        mode="deletion",
        order=order,
        imputer=Imputer(kind=kind, noise_std=noise_std),
        fractions=fractions,
        seed=seed,
    )
    return EvalCurve(
        metric_kind="road",
        x_axis=base.x_axis,
        points=base.points,
        meta=dict(base.meta),
    )


def auc(curve: EvalCurve) -> float:
    """Trapezoidal area under the curve, normalized by the x span."""
    xs, ys = curve.xs(), curve.ys()
    if xs.size < 2:
        raise DataError("curve too short for an area")
    if np.any(np.diff(xs) == 0):
        raise DataError("duplicate x values")
    trapezoid = getattr(np, "trapezoid", np.trapz)
    return float(trapezoid(ys, xs) / (xs[-1] - xs[0]))
