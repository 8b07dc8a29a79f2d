import numpy as np
import pytest
from scipy.stats import poisson

from calbench.binning import msm_partition
from calbench.core import BinaryLabeledScores
from calbench.metrics import log_loss
from calbench.synth import KINDS, SynthSpec, class_log_densities, generate, true_conditional

from oracles import synth_q_scipy


@pytest.fixture(scope="module", params=KINDS)
def large(request):
    return request.param, *generate(SynthSpec(request.param, 50_000, 20, 0))


class TestSpec:
    def test_bad_kind(self):
        with pytest.raises(ValueError):
            SynthSpec("waveform", 10)

    @pytest.mark.parametrize("n,d", [(1, 5), (10, 0)])
    def test_bad_sizes(self, n, d):
        with pytest.raises(ValueError):
            SynthSpec("twonorm", n, d)

    def test_dataset_id(self):
        assert SynthSpec("ringnorm", 300, 4, 9).dataset_id == "ringnorm-n300-d4-s9"


class TestTrueConditional:
    def test_twonorm_midpoint(self):
        assert true_conditional("twonorm", np.zeros((1, 20)))[0] == 0.5

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("d", [1, 2, 7, 20])
    def test_matches_scipy_densities(self, kind, d):
        table, truth = generate(SynthSpec(kind, 400, d, 3))
        ref = synth_q_scipy(kind, table.rows)
        assert np.max(np.abs(truth.q - ref)) <= 1e-12

    @pytest.mark.parametrize("kind", KINDS)
    def test_strictly_inside_unit_interval(self, kind):
        _, truth = generate(SynthSpec(kind, 2000, 20, 4))
        assert np.all((truth.q > 0) & (truth.q < 1))

    def test_threenorm_mixture_symmetry(self):
        x = np.random.default_rng(0).standard_normal((50, 6))
        f0, _ = class_log_densities("threenorm", x)
        f0_neg, _ = class_log_densities("threenorm", -x)
        assert np.allclose(f0, f0_neg, rtol=0, atol=1e-12)


class TestGenerate:
    @pytest.mark.parametrize("kind", KINDS)
    def test_bit_identical(self, kind):
        a_table, a_truth = generate(SynthSpec(kind, 500, 20, 11))
        b_table, b_truth = generate(SynthSpec(kind, 500, 20, 11))
        assert a_table.rows.tobytes() == b_table.rows.tobytes()
        assert a_table.labels.tobytes() == b_table.labels.tobytes()
        assert a_truth.q.tobytes() == b_truth.q.tobytes()

    def test_seed_changes_data(self):
        a, _ = generate(SynthSpec("twonorm", 50, 20, 1))
        b, _ = generate(SynthSpec("twonorm", 50, 20, 2))
        assert not np.array_equal(a.rows, b.rows)

    def test_class_balance(self, large):
        _, table, _ = large
        se = 0.5 / np.sqrt(table.n)
        assert abs(table.labels.mean() - 0.5) <= 3 * se

    def test_shapes(self, large):
        _, table, truth = large
        assert table.rows.shape == (50_000, 20)
        assert len(truth) == 50_000


class TestSelfConsistency:
    def test_twonorm_msm_bins_track_q(self):
        table, truth = generate(SynthSpec("twonorm", 50_000, 20, 0))
        part = msm_partition(truth.q, table.labels)
        assert np.max(np.abs(part.mean_scores - part.obs_freqs)) <= 0.02

    def test_label_counts_match_q(self, large):
        # fixed q-ranges; tails use exact Poisson bounds since expected counts are tiny there
        _, table, truth = large
        q, y = truth.q, table.labels
        edges = [0, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 1 + 1e-12]
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = (q >= lo) & (q < hi)
            if not m.any():
                continue
            if hi <= 0.01:
                mu, k = q[m].sum(), y[m].sum()
            elif lo >= 0.99:
                mu, k = (1 - q[m]).sum(), (1 - y[m]).sum()
            else:
                z = (y[m].sum() - q[m].sum()) / np.sqrt(np.sum(q[m] * (1 - q[m])))
                assert abs(z) < 4, (lo, hi, z)
                continue
            assert poisson.cdf(k, mu) > 1e-4 and poisson.sf(k - 1, mu) > 1e-4, (lo, hi, k, mu)

    def test_truth_beats_distortions(self, large):
        _, table, truth = large
        y = table.labels
        best = log_loss(BinaryLabeledScores(truth.q, y))
        for warp in (lambda q: q**3, lambda q: q ** (1 / 3), lambda q: 0.5 + 0.8 * (q - 0.5), lambda q: np.clip(q + 0.05, 0, 1)):
            assert best < log_loss(BinaryLabeledScores(warp(truth.q), y))
