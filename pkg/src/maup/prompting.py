"""Point-prompt selection from similarity statistics.

Positive prompts come from two paths that can be toggled independently:

* mean path: threshold the mean similarity map at a percentile, derive an
  adaptive cluster count k from the thresholded region's complexity, and
  keep the k K-means cluster centers (snapped to candidate pixels);
* uncertainty path: threshold the variance map the same way and draw 2
  seeded random picks from the candidates.

Negative prompts threshold the periphery similarity map, drop pixels that
collide with positives, and spread a small number of K-means centers over
what remains. All randomness flows through seeded generators in a fixed
draw order, so identical inputs and seed give identical prompts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, EmptyCandidateError, ShapeError
from .regions import area_and_perimeter
from .simmaps import extract_candidates, percentile_threshold
from .tensors import BitMask, PointRC, ScalarMap

MEAN_TAG = "mean-centroid"
UNCERTAINTY_TAG = "uncertainty"
N_UNCERTAINTY_PICKS = 2
MAX_REDRAWS = 10


@dataclass(frozen=True)
class PromptConfig:
    """Knobs for one prompting run.

    ``mmp``/``ump``/``np`` toggle the mean, uncertainty and negative paths.
    ``scale`` maps feature-grid pixels to image pixels at export time.
    """

    mmp: bool = True
    ump: bool = True
    np: bool = True
    gamma: float = 5.0
    n_min: int = 3
    n_max: int = 10
    n_neg: int = 3
    radius: int = 5
    n_regions: int = 30
    percentile: float = 95.0
    seed: int = 0
    scale: int = 14

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ConfigError(f"n_min {self.n_min} exceeds n_max {self.n_max}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.percentile < 100.0:
            raise ConfigError(f"percentile must be in (0, 100), got {self.percentile}")
        if min(self.n_neg, self.radius, self.n_regions, self.scale) < 1:
            raise ConfigError("n_neg, radius, n_regions and scale must be >= 1")


@dataclass(frozen=True)
class ComplexityScore:
    """Normalized size-plus-boundary score of a thresholded region.

    ``area_norm`` divides by the frame area H*W and ``perimeter_norm`` by the
    frame's edge budget 2*(H+W), so c stays resolution-independent and lands
    near [0, 2] for blob-like regions.
    """

    area: int
    perimeter: int
    area_norm: float
    perimeter_norm: float
    c: float


class PromptPoint(NamedTuple):
    """A positive prompt pixel with its provenance tag."""

    point: PointRC
    source: str  # MEAN_TAG or UNCERTAINTY_TAG


@dataclass(frozen=True)
class PromptSet:
    """Everything one prompting run selected, plus the thresholds it used."""

    positives: tuple[PromptPoint, ...]
    negatives: tuple[PointRC, ...]
    k_used: int
    seed: int
    scale: int
    tau_mean: float | None = None
    tau_uncert: float | None = None
    tau_neg: float | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        pos = {p.point for p in self.positives}
        if pos & set(self.negatives):
            raise ValueError("positive and negative prompts overlap")


def episode_seed_streams(seed) -> tuple[np.random.SeedSequence, ...]:
    """Derive the three per-stage seed streams (partition, positives, negatives)."""
    return tuple(np.random.SeedSequence(seed).spawn(3))


def complexity(mean: ScalarMap, tau_mean: float) -> ComplexityScore:
    """Score the region where the mean map reaches ``tau_mean``."""
    bits = (mean.values.astype(np.float64) >= tau_mean).astype(np.uint8)
    if not bits.any():
        raise EmptyCandidateError("no pixel reaches the mean threshold")
    area, perimeter = area_and_perimeter(BitMask(bits))
    h, w = mean.height, mean.width
    area_norm = area / (h * w)
    perimeter_norm = perimeter / (2 * (h + w))
    return ComplexityScore(
        area=area,
        perimeter=perimeter,
        area_norm=area_norm,
        perimeter_norm=perimeter_norm,
        c=area_norm + perimeter_norm,
    )


def adaptive_k(score: ComplexityScore, gamma: float, n_min: int, n_max: int) -> int:
    """Cluster count floor(gamma * c), clamped to [n_min, n_max]."""
    if n_min > n_max:
        raise ConfigError(f"n_min {n_min} exceeds n_max {n_max}")
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    return max(n_min, min(n_max, int(np.floor(gamma * score.c))))


def _kmeans_pp_init(coords: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed k centers by squared-distance-weighted sampling."""
    n = len(coords)
    centers = np.empty((k, 2), dtype=np.float64)
    centers[0] = coords[int(rng.integers(n))]
    d2 = ((coords - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            pick = int(rng.choice(n, p=d2 / total))
        else:
            pick = int(rng.integers(n))
        centers[j] = coords[pick]
        d2 = np.minimum(d2, ((coords - centers[j]) ** 2).sum(axis=1))
    return centers


def lloyd_cluster(
    coords: np.ndarray,
    k: int,
    seed,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Lloyd's iteration with seeded k-means++ initialization.

    Returns (centers, labels, initial WCSS, final WCSS). Assignment ties go
    to the lowest center index. A cluster that loses all members is reseeded
    at the point currently farthest from its own center, which never
    increases the objective. Stops when every center moves less than ``tol``
    or after ``max_iter`` rounds.
    """
    coords = np.asarray(coords, dtype=np.float64)
    n = len(coords)
    if n == 0:
        raise EmptyCandidateError("cannot cluster zero points")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(coords, k, rng)

    def assign(cs):
        d2 = ((coords[:, None, :] - cs[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1), d2

    labels, d2 = assign(centers)
    wcss_init = float(d2[np.arange(n), labels].sum())
    for _ in range(max_iter):
        new_centers = centers.copy()
        for j in range(k):
            sel = labels == j
            if sel.any():
                new_centers[j] = coords[sel].mean(axis=0)
        empties = [j for j in range(k) if not (labels == j).any()]
        if empties:
            own_d2 = d2[np.arange(n), labels].copy()
            for j in empties:
                far = int(np.argmax(own_d2))
                new_centers[j] = coords[far]
                own_d2[far] = -1.0  # keep a second empty cluster off this point
        moved = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        labels, d2 = assign(centers)
        if moved < tol and not empties:
            break
    wcss_final = float(d2[np.arange(n), labels].sum())
    if wcss_final > wcss_init + 1e-9:
        raise AssertionError("k-means objective increased")  # descent must hold
    return centers, labels, wcss_init, wcss_final


def kmeans(points: list[PointRC], k: int, seed) -> list[PointRC]:
    """Cluster candidate pixels and return one on-grid point per cluster.

    Each returned point is the candidate nearest its cluster's real-valued
    center (ties toward the smallest row-major index). ``k`` larger than the
    number of distinct points is reduced; degenerate duplicate snaps are
    dropped, so at most k and at least 1 point come back.
    """
    if not points:
        raise EmptyCandidateError("cannot run k-means on zero candidates")
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    coords = np.asarray(points, dtype=np.float64)
    k = min(k, len(np.unique(coords, axis=0)))
    centers, labels, _, _ = lloyd_cluster(coords, k, seed)
    chosen: list[PointRC] = []
    for j in range(len(centers)):
        members = np.flatnonzero(labels == j)
        pool = members if len(members) else np.arange(len(points))
        d2 = ((coords[pool] - centers[j]) ** 2).sum(axis=1)
        pick = int(pool[int(np.argmin(d2))])  # first min = smallest index
        chosen.append(points[pick])
    out: list[PointRC] = []
    for p in chosen:
        if p not in out:
            out.append(p)
    return out


def positive_prompts(
    mean: ScalarMap, uncert: ScalarMap, cfg: PromptConfig, seed
) -> list[PromptPoint]:
    """Select tagged positive prompts from the enabled paths.

    The mean path contributes k cluster centers of the thresholded mean map;
    the uncertainty path adds 2 random candidate picks, redrawing up to
    10 times on collision with already selected points and then falling back
    to the lexicographically smallest unused candidates. With fewer than 2
    usable candidates the uncertainty path contributes nothing.
    """
    if not (cfg.mmp or cfg.ump):
        raise ConfigError("at least one positive path (mmp or ump) must be enabled")
    if mean.values.shape != uncert.values.shape:
        raise ShapeError("mean and uncertainty maps differ in shape")
    rng = np.random.default_rng(seed)
    out: list[PromptPoint] = []
    taken: set[PointRC] = set()

    if cfg.mmp:
        tau_mean = percentile_threshold(mean, cfg.percentile)
        q_mean = extract_candidates(mean, tau_mean, "mean")
        k = adaptive_k(complexity(mean, tau_mean), cfg.gamma, cfg.n_min, cfg.n_max)
        for p in kmeans(list(q_mean.points), k, rng):
            out.append(PromptPoint(p, MEAN_TAG))
            taken.add(p)

    if cfg.ump:
        tau_uncert = percentile_threshold(uncert, cfg.percentile)
        q_uncert = extract_candidates(uncert, tau_uncert, "uncertainty")
        usable = [p for p in q_uncert.points if p not in taken]
        if len(usable) >= N_UNCERTAINTY_PICKS:
            for _ in range(N_UNCERTAINTY_PICKS):
                pick = None
                for _ in range(MAX_REDRAWS):
                    cand = q_uncert.points[int(rng.integers(len(q_uncert.points)))]
                    if cand not in taken:
                        pick = cand
                        break
                if pick is None:
                    pick = min(p for p in q_uncert.points if p not in taken)
                out.append(PromptPoint(pick, UNCERTAINTY_TAG))
                taken.add(pick)

    return out


def negative_prompts(
    neg_map: ScalarMap,
    positives: list[PointRC],
    n_neg: int,
    seed,
    percentile: float = 95.0,
) -> list[PointRC]:
    """Spread negative prompts over the hottest periphery-similarity pixels.

    Candidates colliding with positives are removed first. Returns an empty
    list (never raises) when nothing survives; callers flag that condition.
    """
    if n_neg < 1:
        raise ValueError(f"need n_neg >= 1, got {n_neg}")
    tau_neg = percentile_threshold(neg_map, percentile)
    q_neg = extract_candidates(neg_map, tau_neg, "negative")
    pos = set(positives)
    remaining = [p for p in q_neg.points if p not in pos]
    if not remaining:
        return []
    return kmeans(remaining, min(n_neg, len(remaining)), seed)


def generate_prompts(
    mean: ScalarMap,
    uncert: ScalarMap,
    neg_map: ScalarMap | None,
    cfg: PromptConfig,
) -> PromptSet:
    """Run both prompting stages and package the result.

    ``neg_map`` is None when the periphery band was empty (or the negative
    path is off); the returned set then carries no negatives and a flag.
    Seeds for the two stages are derived from ``cfg.seed`` with the same
    stream split the episode pipeline uses.
    """
    _, pos_seed, neg_seed = episode_seed_streams(cfg.seed)
    positives = positive_prompts(mean, uncert, cfg, pos_seed)

    k_used = 0
    tau_mean = tau_uncert = tau_neg = None
    if cfg.mmp:
        tau_mean = percentile_threshold(mean, cfg.percentile)
        k_used = adaptive_k(complexity(mean, tau_mean), cfg.gamma, cfg.n_min, cfg.n_max)
    if cfg.ump:
        tau_uncert = percentile_threshold(uncert, cfg.percentile)

    negatives: list[PointRC] = []
    flags: list[str] = []
    if not cfg.np:
        pass
    elif neg_map is None:
        flags.append("np-disabled-empty-periphery")
    else:
        tau_neg = percentile_threshold(neg_map, cfg.percentile)
        negatives = negative_prompts(
            neg_map, [p.point for p in positives], cfg.n_neg, neg_seed, cfg.percentile
        )
        if not negatives:
            flags.append("np-exhausted-by-positives")

    return PromptSet(
        positives=tuple(positives),
        negatives=tuple(negatives),
        k_used=k_used,
        seed=cfg.seed,
        scale=cfg.scale,
        tau_mean=tau_mean,
        tau_uncert=tau_uncert,
        tau_neg=tau_neg,
        flags=tuple(flags),
    )
