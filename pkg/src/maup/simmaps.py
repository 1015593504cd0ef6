"""Similarity statistics over a query feature map.

Each prototype yields a per-pixel cosine similarity map; a stack of those
maps is reduced to a mean map and a population-variance uncertainty map.
Candidate pixels are extracted by thresholding a map at a percentile of its
own values.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    EmptyCandidateError,
    EmptyMaskError,
    EmptyStackError,
    ShapeError,
)
from .prototypes import Prototype, PrototypeSet
from .tensors import BitMask, FeatureMap, PointRC, ScalarMap


@dataclass(frozen=True)
class SimilarityStack:
    """Cosine similarity maps, one per prototype, in prototype order."""

    maps: tuple[ScalarMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if self.maps:
            shape = self.maps[0].values.shape
            for m in self.maps:
                if m.values.shape != shape:
                    raise ShapeError("similarity maps mix shapes")
                if float(m.values.min()) < -1.0 or float(m.values.max()) > 1.0:
                    raise DataError("similarity values must lie in [-1, 1]")

    def __len__(self) -> int:
        return len(self.maps)


@dataclass(frozen=True)
class CandidateSet:
    """Pixels of one map at or above a threshold, in row-major order."""

    points: tuple[PointRC, ...]
    threshold: float
    source_map: str  # "mean" | "uncertainty" | "negative"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)


def cosine_map(f_q: FeatureMap, p: Prototype) -> ScalarMap:
    """Per-pixel cosine similarity between query features and a prototype.

    Pixels (or prototypes) with zero norm get similarity 0 instead of NaN.
    """
    if f_q.channels != p.channels:
        raise ShapeError(
            f"feature map has {f_q.channels} channels, prototype has {p.channels}"
        )
    feats = f_q.data.astype(np.float64)
    dots = np.tensordot(p.values, feats, axes=(0, 0))
    pix_norm = np.sqrt((feats * feats).sum(axis=0))
    denom = pix_norm * float(np.linalg.norm(p.values))
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0.0, dots / denom, 0.0)
    return ScalarMap(np.clip(sims, -1.0, 1.0))


def similarity_stack(f_q: FeatureMap, ps: PrototypeSet) -> SimilarityStack:
    """Cosine map for every prototype, order preserved."""
    return SimilarityStack(maps=tuple(cosine_map(f_q, p) for p in ps))


def mean_map(stack: SimilarityStack) -> ScalarMap:
    """Pixelwise arithmetic mean over the stack."""
    if len(stack) == 0:
        raise EmptyStackError("cannot average an empty similarity stack")
    arr = np.stack([m.values for m in stack.maps])
    return ScalarMap(arr.mean(axis=0, dtype=np.float64))


def uncertainty_map(stack: SimilarityStack, mean: ScalarMap) -> ScalarMap:
    """Pixelwise population variance (divisor N) around the given mean."""
    if len(stack) == 0:
        raise EmptyStackError("cannot take variance of an empty similarity stack")
    if stack.maps[0].values.shape != mean.values.shape:
        raise ShapeError("mean map shape does not match the stack")
    arr = np.stack([m.values for m in stack.maps]).astype(np.float64)
    diff = arr - mean.values.astype(np.float64)
    return ScalarMap((diff * diff).mean(axis=0))


def percentile_threshold(map_: ScalarMap, pct: float, roi: BitMask | None = None) -> float:
    """Linear-interpolated percentile of the map's values.

    With ``roi`` given, only pixels inside the roi contribute.
    """
    if not 0.0 < pct < 100.0:
        raise ValueError(f"percentile must be in (0, 100), got {pct}")
    vals = map_.values.astype(np.float64)
    if roi is not None:
        if roi.bits.shape != map_.values.shape:
            raise ShapeError("roi shape does not match the map")
        if roi.foreground_count == 0:
            raise EmptyMaskError("percentile over an empty roi")
        vals = vals[roi.bits.astype(bool)]
    return float(np.percentile(vals, pct))


def extract_candidates(map_: ScalarMap, tau: float, tag: str) -> CandidateSet:
    """All pixels with value >= tau, in row-major order."""
    rows, cols = np.nonzero(map_.values.astype(np.float64) >= tau)
    if len(rows) == 0:
        raise EmptyCandidateError(f"no pixel of the {tag} map reaches {tau}")
    points = tuple(PointRC(int(r), int(c)) for r, c in zip(rows, cols))
    return CandidateSet(points=points, threshold=float(tau), source_map=tag)


def write_pgm(map_: ScalarMap, path) -> None:
    """Dump a map as an 8-bit binary PGM (P5), min-max normalized."""
    vals = map_.values.astype(np.float64)
    lo, hi = float(vals.min()), float(vals.max())
    if hi > lo:
        scaled = np.rint((vals - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        scaled = np.zeros_like(vals, dtype=np.uint8)
    header = f"P5\n{map_.width} {map_.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + scaled.tobytes(order="C"))
