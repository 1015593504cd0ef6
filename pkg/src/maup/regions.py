"""Binary-mask geometry: foreground partitioning, dilation, periphery, metrics.

The foreground of a support mask is split into spatially compact regions by
seeding points with farthest-point sampling and assigning every foreground
pixel to its nearest seed (a discrete Voronoi partition). Dilation and the
periphery band use a discrete disk structuring element.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMaskError, SeedError
from .tensors import BitMask, PointRC


@dataclass(frozen=True)
class StructuringElement:
    """Discrete disk of offsets (dy, dx) with dy^2 + dx^2 <= radius^2."""

    radius: int
    offsets: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if not self.offsets:
            r = self.radius
            offs = tuple(
                (dy, dx)
                for dy in range(-r, r + 1)
                for dx in range(-r, r + 1)
                if dy * dy + dx * dx <= r * r
            )
            object.__setattr__(self, "offsets", offs)
        if (0, 0) not in self.offsets:
            raise ValueError("structuring element must contain (0, 0)")
        if set(self.offsets) != {(-dy, -dx) for dy, dx in self.offsets}:
            raise ValueError("structuring element offsets must be symmetric")

    @classmethod
    def disk(cls, radius: int) -> "StructuringElement":
        return cls(radius=radius)


@dataclass(frozen=True)
class Partition:
    """Disjoint, exhaustive split of a foreground mask into non-empty regions."""

    regions: tuple[BitMask, ...]
    parent: BitMask

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("partition must contain at least one region")
        total = np.zeros_like(self.parent.bits, dtype=np.int64)
        for region in self.regions:
            if region.foreground_count == 0:
                raise ValueError("partition regions must be non-empty")
            total += region.bits
        if (total > 1).any():
            raise ValueError("partition regions overlap")
        if not np.array_equal(total.astype(np.uint8), self.parent.bits):
            raise ValueError("partition regions do not cover the parent foreground")

    def __len__(self) -> int:
        return len(self.regions)


def farthest_point_seeds(fg: BitMask, n: int, seed) -> list[PointRC]:
    """Pick up to ``n`` well-spread foreground pixels.

    The first pixel is drawn uniformly at random (seeded); each later pixel
    maximizes its Euclidean distance to the already chosen set, breaking ties
    toward the smallest (row, col). Returns min(n, foreground size) points.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    coords = np.argwhere(fg.bits == 1)
    if len(coords) == 0:
        raise EmptyMaskError("cannot place seeds on an empty foreground")
    rng = np.random.default_rng(seed)
    first = int(rng.integers(len(coords)))
    chosen = [first]
    # min squared distance from every fg pixel to the chosen set; exact in int64
    d2 = ((coords - coords[first]) ** 2).sum(axis=1)
    while len(chosen) < min(n, len(coords)):
        nxt = int(np.argmax(d2))  # first max = smallest (row, col) among ties
        chosen.append(nxt)
        d2 = np.minimum(d2, ((coords - coords[nxt]) ** 2).sum(axis=1))
    return [PointRC(int(r), int(c)) for r, c in coords[chosen]]


def voronoi_partition(fg: BitMask, seeds: list[PointRC]) -> Partition:
    """Assign each foreground pixel to its nearest seed (squared Euclidean).

    Ties go to the seed with the lowest index. Every seed claims at least
    itself, so all regions are non-empty.
    """
    if not seeds:
        raise SeedError("need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise SeedError("seeds must be distinct")
    for s in seeds:
        if not (0 <= s.row < fg.height and 0 <= s.col < fg.width) or fg.bits[s.row, s.col] != 1:
            raise SeedError(f"seed {s} lies outside the foreground")
    coords = np.argwhere(fg.bits == 1)
    seed_arr = np.asarray(seeds, dtype=np.int64)
    d2 = ((coords[None, :, :] - seed_arr[:, None, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=0)  # first min = lowest seed index
    regions = []
    for k in range(len(seeds)):
        bits = np.zeros_like(fg.bits)
        sel = coords[assign == k]
        bits[sel[:, 0], sel[:, 1]] = 1
        regions.append(BitMask(bits))
    return Partition(regions=tuple(regions), parent=fg)


def dilate(m: BitMask, se: StructuringElement) -> BitMask:
    """Morphological dilation: out(y,x) = 1 iff some offset hits a set pixel.

    Reads outside the frame count as 0, so the output never wraps.
    """
    h, w = m.height, m.width
    out = np.zeros_like(m.bits)
    for dy, dx in se.offsets:
        y0, y1 = max(0, dy), h + min(0, dy)
        x0, x1 = max(0, dx), w + min(0, dx)
        if y0 < y1 and x0 < x1:
            out[y0:y1, x0:x1] |= m.bits[y0 - dy : y1 - dy, x0 - dx : x1 - dx]
    return BitMask(out)


def periphery_mask(support: BitMask, se: StructuringElement) -> BitMask:
    """Band of pixels added by dilation: dilate(support) minus support.

    May be empty when the support covers the whole frame; callers decide how
    to handle that (negative prompting is disabled downstream).
    """
    grown = dilate(support, se)
    return BitMask(grown.bits & (1 - support.bits))


def area_and_perimeter(m: BitMask) -> tuple[int, int]:
    """Count set pixels and exposed 4-neighbor edges.

    An edge is exposed when a set pixel borders an unset pixel or the frame
    boundary, so a lone pixel contributes 4 and a solid k x k square 4k.
    """
    bits = m.bits
    area = int(bits.sum())
    h_pairs = int((bits[:, 1:] & bits[:, :-1]).sum())
    v_pairs = int((bits[1:, :] & bits[:-1, :]).sum())
    return area, 4 * area - 2 * (h_pairs + v_pairs)
