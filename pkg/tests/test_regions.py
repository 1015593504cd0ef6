import numpy as np
import pytest

from maup.errors import EmptyMaskError, SeedError
from maup.regions import (
    Partition,
    StructuringElement,
    area_and_perimeter,
    dilate,
    farthest_point_seeds,
    periphery_mask,
    voronoi_partition,
)
from maup.tensors import BitMask, PointRC

from oracles import dilate_oracle, perimeter_oracle, voronoi_oracle


def random_mask(seed, h=16, w=16, density=0.3, non_empty=True):
    rng = np.random.default_rng(seed)
    bits = (rng.random((h, w)) < density).astype(np.uint8)
    if non_empty and bits.sum() == 0:
        bits[rng.integers(h), rng.integers(w)] = 1
    return BitMask(bits)


def disk_mask(h, w, cy, cx, r):
    yy, xx = np.ogrid[:h, :w]
    return BitMask((((yy - cy) ** 2 + (xx - cx) ** 2) <= r * r).astype(np.uint8))


class TestStructuringElement:
    def test_radius_one_is_plus_shape(self):
        se = StructuringElement.disk(1)
        assert set(se.offsets) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}

    @pytest.mark.parametrize("r", [1, 2, 3, 5])
    def test_offsets_follow_radius_rule(self, r):
        se = StructuringElement.disk(r)
        assert all(dy * dy + dx * dx <= r * r for dy, dx in se.offsets)
        assert (0, 0) in se.offsets
        assert set(se.offsets) == {(-dy, -dx) for dy, dx in se.offsets}

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            StructuringElement.disk(0)

    def test_custom_offsets_must_contain_origin(self):
        with pytest.raises(ValueError):
            StructuringElement(radius=1, offsets=((0, 1), (0, -1)))

    def test_custom_offsets_must_be_symmetric(self):
        with pytest.raises(ValueError):
            StructuringElement(radius=1, offsets=((0, 0), (0, 1)))


class TestFarthestPointSeeds:
    def test_two_pixels_both_selected(self):
        bits = np.zeros((1, 11), dtype=np.uint8)
        bits[0, 0] = bits[0, 10] = 1
        for seed in range(5):
            pts = farthest_point_seeds(BitMask(bits), 2, seed)
            assert set(pts) == {PointRC(0, 0), PointRC(0, 10)}

    def test_row_second_seed_is_far_end(self):
        bits = np.ones((1, 11), dtype=np.uint8)
        fg = BitMask(bits)
        # find a seed whose first uniform draw lands on column 0
        for seed in range(100):
            first = np.random.default_rng(seed).integers(11)
            if first == 0:
                pts = farthest_point_seeds(fg, 2, seed)
                assert pts[0] == PointRC(0, 0)
                assert pts[1] == PointRC(0, 10)
                return
        pytest.fail("no seed draws column 0 first")

    def test_count_clamped_to_foreground(self):
        fg = random_mask(1, 8, 8, density=0.1)
        pts = farthest_point_seeds(fg, 100, 0)
        assert len(pts) == fg.foreground_count
        assert len(set(pts)) == len(pts)

    def test_determinism(self):
        fg = random_mask(2)
        assert farthest_point_seeds(fg, 6, 42) == farthest_point_seeds(fg, 6, 42)

    def test_empty_foreground(self):
        with pytest.raises(EmptyMaskError):
            farthest_point_seeds(BitMask(np.zeros((4, 4), dtype=np.uint8)), 1, 0)

    def test_spread_beats_random_subsets(self):
        fg = disk_mask(32, 32, 16, 16, 12)
        pts = farthest_point_seeds(fg, 30, 0)
        arr = np.asarray(pts, dtype=np.float64)

        def min_pairwise(a):
            d = np.sqrt(((a[:, None, :] - a[None, :, :]) ** 2).sum(-1))
            return d[np.triu_indices(len(a), k=1)].min()

        fps_spread = min_pairwise(arr)
        coords = np.argwhere(fg.bits == 1)
        rng = np.random.default_rng(123)
        random_spreads = []
        for _ in range(1000):
            idx = rng.choice(len(coords), size=30, replace=False)
            random_spreads.append(min_pairwise(coords[idx].astype(np.float64)))
        assert fps_spread >= np.median(random_spreads)


class TestVoronoiPartition:
    def test_single_seed_covers_everything(self):
        fg = random_mask(3)
        seeds = farthest_point_seeds(fg, 1, 0)
        part = voronoi_partition(fg, seeds)
        assert len(part) == 1
        assert np.array_equal(part.regions[0].bits, fg.bits)

    def test_row_split_between_two_seeds(self):
        fg = BitMask(np.ones((1, 4), dtype=np.uint8))
        part = voronoi_partition(fg, [PointRC(0, 0), PointRC(0, 3)])
        assert np.array_equal(part.regions[0].bits, [[1, 1, 0, 0]])
        assert np.array_equal(part.regions[1].bits, [[0, 0, 1, 1]])

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_per_pixel_oracle(self, seed):
        fg = random_mask(seed, h=16, w=16)
        n = min(5, fg.foreground_count)
        seeds = farthest_point_seeds(fg, n, seed)
        part = voronoi_partition(fg, seeds)
        expected = voronoi_oracle(fg.bits, [(s.row, s.col) for s in seeds])
        for i, region in enumerate(part.regions):
            for y, x in np.argwhere(region.bits == 1):
                assert expected[(int(y), int(x))] == i

    @pytest.mark.parametrize("seed", range(15))
    def test_partition_invariants(self, seed):
        fg = random_mask(seed * 7 + 1, h=12, w=12, density=0.4)
        n = min(6, fg.foreground_count)
        part = voronoi_partition(fg, farthest_point_seeds(fg, n, seed))
        total = np.zeros_like(fg.bits, dtype=np.int64)
        for region in part.regions:
            assert region.foreground_count > 0
            total += region.bits
        assert total.max() <= 1
        assert np.array_equal(total.astype(np.uint8), fg.bits)

    def test_seed_outside_foreground(self):
        fg = BitMask(np.eye(4, dtype=np.uint8))
        with pytest.raises(SeedError):
            voronoi_partition(fg, [PointRC(0, 1)])

    def test_duplicate_seeds(self):
        fg = BitMask(np.ones((2, 2), dtype=np.uint8))
        with pytest.raises(SeedError):
            voronoi_partition(fg, [PointRC(0, 0), PointRC(0, 0)])

    def test_bad_partition_rejected(self):
        fg = BitMask(np.ones((1, 2), dtype=np.uint8))
        half = BitMask(np.array([[1, 0]], dtype=np.uint8))
        with pytest.raises(ValueError):
            Partition(regions=(half,), parent=fg)  # does not cover
        with pytest.raises(ValueError):
            Partition(regions=(fg, half), parent=fg)  # overlaps
        with pytest.raises(ValueError):
            Partition(regions=(), parent=fg)  # no regions
        empty = BitMask(np.zeros((1, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            Partition(regions=(fg, empty), parent=fg)  # empty region

    def test_no_seeds(self):
        with pytest.raises(SeedError):
            voronoi_partition(BitMask(np.ones((2, 2), dtype=np.uint8)), [])

    def test_fps_bad_n(self):
        with pytest.raises(ValueError):
            farthest_point_seeds(BitMask(np.ones((2, 2), dtype=np.uint8)), 0, 0)


class TestDilate:
    def test_all_zero_stays_zero(self):
        m = BitMask(np.zeros((5, 5), dtype=np.uint8))
        assert dilate(m, StructuringElement.disk(2)).foreground_count == 0

    def test_single_pixel_radius_one_gives_plus(self):
        bits = np.zeros((5, 5), dtype=np.uint8)
        bits[2, 2] = 1
        out = dilate(BitMask(bits), StructuringElement.disk(1))
        expected = np.zeros((5, 5), dtype=np.uint8)
        for y, x in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)]:
            expected[y, x] = 1
        assert np.array_equal(out.bits, expected)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_matches_loop_oracle(self, seed, r):
        m = random_mask(seed, 20, 20, density=0.15, non_empty=False)
        se = StructuringElement.disk(r)
        out = dilate(m, se)
        assert np.array_equal(out.bits, np.array(dilate_oracle(m.bits, se.offsets), dtype=np.uint8))

    def test_extensive_and_increasing(self):
        se = StructuringElement.disk(2)
        m1 = random_mask(11, 12, 12, density=0.2)
        bigger = np.clip(m1.bits + random_mask(12, 12, 12, density=0.1).bits, 0, 1)
        m2 = BitMask(bigger)
        d1, d2 = dilate(m1, se), dilate(m2, se)
        assert np.all(d1.bits >= m1.bits)
        assert np.all(d2.bits >= d1.bits)

    def test_commutes_with_interior_translation(self):
        se = StructuringElement.disk(2)
        bits = np.zeros((20, 20), dtype=np.uint8)
        bits[8:11, 8:11] = np.random.default_rng(5).integers(0, 2, (3, 3), dtype=np.uint8)
        bits[9, 9] = 1
        shifted = np.roll(bits, (2, 3), axis=(0, 1))
        a = np.roll(dilate(BitMask(bits), se).bits, (2, 3), axis=(0, 1))
        b = dilate(BitMask(shifted), se).bits
        assert np.array_equal(a, b)


class TestPeriphery:
    def test_single_pixel_ring(self):
        bits = np.zeros((5, 5), dtype=np.uint8)
        bits[2, 2] = 1
        ring = periphery_mask(BitMask(bits), StructuringElement.disk(1))
        expected = np.zeros((5, 5), dtype=np.uint8)
        for y, x in [(1, 2), (3, 2), (2, 1), (2, 3)]:
            expected[y, x] = 1
        assert np.array_equal(ring.bits, expected)

    def test_full_frame_has_empty_periphery(self):
        full = BitMask(np.ones((4, 4), dtype=np.uint8))
        assert periphery_mask(full, StructuringElement.disk(3)).foreground_count == 0

    @pytest.mark.parametrize("seed", range(10))
    def test_set_algebra(self, seed):
        m = random_mask(seed, 14, 14, density=0.25)
        se = StructuringElement.disk(2)
        ring = periphery_mask(m, se)
        grown = dilate(m, se)
        assert not np.any(ring.bits & m.bits)
        assert np.array_equal(ring.bits | m.bits, grown.bits)


class TestAreaPerimeter:
    def test_empty(self):
        assert area_and_perimeter(BitMask(np.zeros((3, 3), dtype=np.uint8))) == (0, 0)

    def test_single_pixel(self):
        assert area_and_perimeter(BitMask(np.ones((1, 1), dtype=np.uint8))) == (1, 4)

    def test_three_square_in_five_frame(self):
        bits = np.zeros((5, 5), dtype=np.uint8)
        bits[1:4, 1:4] = 1
        assert area_and_perimeter(BitMask(bits)) == (9, 12)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 7])
    def test_solid_square_perimeter(self, k):
        bits = np.zeros((k + 2, k + 2), dtype=np.uint8)
        bits[1 : k + 1, 1 : k + 1] = 1
        area, per = area_and_perimeter(BitMask(bits))
        assert (area, per) == (k * k, 4 * k)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_loop_oracle(self, seed):
        m = random_mask(seed, 15, 15, density=0.35, non_empty=False)
        area, per = area_and_perimeter(m)
        assert area == int(m.bits.sum())
        assert per == perimeter_oracle(m.bits)
        assert per <= 4 * area
