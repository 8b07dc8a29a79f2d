import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calbench.binning import equal_mass_bounds, msm_partition


@st.composite
def scored_labels(draw):
    n = draw(st.integers(2, 80))
    levels = draw(st.integers(1, 12))
    scores = draw(st.lists(st.integers(0, levels), min_size=n, max_size=n))
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return np.array(scores) / levels, np.array(labels)


def triples(part):
    return part.sizes.tolist(), part.mean_scores.tolist(), part.obs_freqs.tolist()


class TestExamples:
    def test_two_clusters(self):
        part = msm_partition([0.1, 0.1, 0.9, 0.9], [0, 0, 1, 1])
        assert len(part) == 2
        assert part.mean_scores.tolist() == [0.1, 0.9]
        assert part.obs_freqs.tolist() == [0, 1]

    def test_all_identical(self):
        part = msm_partition([0.4] * 7, [1, 0, 0, 1, 0, 1, 1])
        assert len(part) == 2
        assert part.mean_scores.tolist() == [0.4, 0.4]
        assert part.obs_freqs[0] == part.obs_freqs[1] == pytest.approx(4 / 7)

    def test_calibrated_sample_keeps_many_bins(self):
        hits = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            s = rng.random(1000)
            y = (rng.random(1000) < s).astype(int)
            hits += len(msm_partition(s, y)) > 2
        assert hits >= 45

    def test_too_small(self):
        with pytest.raises(ValueError):
            msm_partition([0.5], [1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            msm_partition([0.5, 0.2], [1])

    def test_falls_back_to_two(self):
        # decreasing frequencies at every resolution
        s = np.linspace(0, 1, 16)
        y = (s < 0.5).astype(int)
        part = msm_partition(s, y)
        assert len(part) == 2
        assert part.obs_freqs.tolist() == [1.0, 0.0]

    def test_largest_monotone_count_chosen(self):
        s = np.arange(16) / 16
        y = np.array([0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 1, 1, 1])
        part = msm_partition(s, y)
        assert len(part) == 4
        assert part.obs_freqs.tolist() == [0, 0.25, 0.75, 1]

    def test_sweeps_down_past_violations(self):
        # b=4 bins (3,3,2,2) give 2/3, 1/3, ...; b=3 bins (4,3,3) are monotone
        s = np.arange(10) / 10
        y = np.array([0, 1, 1, 0, 0, 1, 1, 1, 1, 1])
        part = msm_partition(s, y)
        assert part.sizes.tolist() == [4, 3, 3]
        assert part.obs_freqs.tolist() == pytest.approx([0.5, 2 / 3, 1.0])


class TestEqualMass:
    @pytest.mark.parametrize("n,b", [(10, 3), (9, 3), (2, 2), (101, 10)])
    def test_sizes_differ_by_at_most_one(self, n, b):
        starts, ends = equal_mass_bounds(n, b)
        sizes = ends - starts
        assert sizes.sum() == n and sizes.max() - sizes.min() <= 1
        assert starts[0] == 0 and ends[-1] == n
        assert np.array_equal(starts[1:], ends[:-1])


class TestProperties:
    @given(scored_labels())
    @settings(max_examples=150, deadline=None)
    def test_partition_covers_each_index_once(self, data):
        s, y = data
        part = msm_partition(s, y)
        members = np.concatenate([b.member_indices for b in part.bins])
        assert sorted(members.tolist()) == list(range(s.size))
        assert part.sizes.max() - part.sizes.min() <= 1
        assert 2 <= len(part) <= max(2, math.ceil(math.sqrt(s.size)))

    @given(scored_labels())
    @settings(max_examples=150, deadline=None)
    def test_bins_ordered_and_in_range(self, data):
        s, y = data
        part = msm_partition(s, y)
        assert np.all(np.diff(part.mean_scores) >= 0)
        for arr in (part.mean_scores, part.obs_freqs):
            assert np.all((arr >= 0) & (arr <= 1))
        if len(part) > 2:
            assert np.all(np.diff(part.obs_freqs) >= -1e-12)

    @given(scored_labels(), st.randoms(use_true_random=False))
    @settings(max_examples=150, deadline=None)
    def test_permutation_invariant(self, data, rnd):
        s, y = data
        perm = list(range(s.size))
        rnd.shuffle(perm)
        assert triples(msm_partition(s, y)) == triples(msm_partition(s[perm], y[perm]))

    @given(scored_labels())
    @settings(max_examples=150, deadline=None)
    def test_complement_matches_mirrored_input(self, data):
        s, y = data
        comp = msm_partition(s, y, complement=True)
        mirror = msm_partition(1 - s, 1 - y)
        assert comp.sizes.tolist() == mirror.sizes.tolist()
        assert np.allclose(comp.mean_scores, mirror.mean_scores, rtol=0, atol=1e-12)
        assert np.allclose(comp.obs_freqs, mirror.obs_freqs, rtol=0, atol=1e-12)
