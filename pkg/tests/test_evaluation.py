import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calbench.core import RunKey
from calbench.evaluation import (
    HIGHER_BETTER,
    LOWER_BETTER,
    MEASURE_DIRECTIONS,
    FeatureSource,
    MissingCellsError,
    RunConfig,
    build_rank_table,
    cell_indices,
    delta,
    expected_rank,
    holdout_calibration_split,
    rank_within,
    run_cell,
    stratified_kfold,
)
from calbench.metrics import MetricReport
from calbench.synth import SynthSpec, generate


@pytest.fixture(scope="module")
def twonorm():
    table, truth = generate(SynthSpec("twonorm", 2000, 20, 0))
    return FeatureSource(table, truth)


class TestStratifiedKFold:
    def test_one_of_each_per_fold(self):
        labels = np.array([1, 0] * 5)
        folds = stratified_kfold(labels, 5, seed=3)
        for f in range(1, 6):
            idx = folds.test_indices(f)
            assert sorted(labels[idx].tolist()) == [0, 1]

    def test_two_instances(self):
        # one member per class is below k, so the degenerate flag is required
        folds = stratified_kfold([1, 0], 2, seed=0, allow_degenerate=True)
        assert sorted(folds.fold_of.tolist()) == [1, 2]

    def test_deterministic(self):
        labels = np.random.default_rng(0).integers(0, 2, 97)
        a = stratified_kfold(labels, 5, 42).fold_of
        b = stratified_kfold(labels, 5, 42).fold_of
        assert np.array_equal(a, b)
        assert not np.array_equal(a, stratified_kfold(labels, 5, 43).fold_of)

    def test_small_class_rejected(self):
        with pytest.raises(ValueError):
            stratified_kfold([1, 1, 0, 0, 0, 0, 0], 5, 0)
        assert stratified_kfold([1, 1, 0, 0, 0, 0, 0], 5, 0, allow_degenerate=True).k == 5

    def test_k_too_small(self):
        with pytest.raises(ValueError):
            stratified_kfold([0, 1], 1)

    def test_proportions_hold_for_100_seeds(self):
        labels = np.random.default_rng(1).integers(0, 2, 233)
        k = 5
        for seed in range(100):
            folds = stratified_kfold(labels, k, seed)
            assert set(np.unique(folds.fold_of)) == set(range(1, k + 1))
            for c in (0, 1):
                n_c = np.sum(labels == c)
                counts = np.array([np.sum(labels[folds.test_indices(f)] == c) for f in range(1, k + 1)])
                assert np.all(np.abs(counts - n_c / k) <= 1)
                assert counts.sum() == n_c

    @given(st.lists(st.integers(0, 1), min_size=10, max_size=200), st.integers(2, 5), st.integers(0, 2**32))
    @settings(max_examples=60, deadline=None)
    def test_fold_sizes_balanced(self, labels, k, seed):
        labels = np.array(labels)
        if min(np.sum(labels == 0), np.sum(labels == 1)) < k:
            return
        sizes = np.bincount(stratified_kfold(labels, k, seed).fold_of)[1:]
        assert sizes.max() - sizes.min() <= 1


class TestHoldout:
    def test_counts(self):
        labels = np.array([0, 1] * 50)
        fit, cal = holdout_calibration_split(np.arange(100), labels, 0.2, seed=1)
        assert cal.size == 20
        assert np.sum(labels[cal]) == 10
        assert fit.size == 80

    def test_partition(self):
        labels = np.random.default_rng(2).integers(0, 2, 300)
        train = np.arange(0, 300, 2)
        fit, cal = holdout_calibration_split(train, labels, 0.3, seed=5)
        assert not set(fit) & set(cal)
        assert sorted(set(fit) | set(cal)) == train.tolist()

    def test_deterministic(self):
        labels = np.random.default_rng(3).integers(0, 2, 100)
        a = holdout_calibration_split(np.arange(100), labels, 0.2, 9)
        b = holdout_calibration_split(np.arange(100), labels, 0.2, 9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_empty_share(self):
        with pytest.raises(ValueError):
            holdout_calibration_split(np.arange(5), [0, 0, 0, 0, 1], 0.2, 0)

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_fraction_range(self, fraction):
        with pytest.raises(ValueError):
            holdout_calibration_split(np.arange(4), [0, 1, 0, 1], fraction, 0)


class TestRunCell:
    config = RunConfig(k=5, master_seed=11)

    def test_class_prior_constant(self, twonorm):
        res = run_cell(RunKey(twonorm.dataset_id, 1, "class_prior", "none"), twonorm, self.config, keep_indices=True)
        assert res.ok
        train_rate = twonorm.labels[res.indices["train"]].mean()
        # constant scores: AUC 0.5, Z and ECE evaluated on that constant
        assert res.report.auc_roc == 0.5
        test_y = twonorm.labels[res.indices["test"]]
        expected = -np.mean(np.where(test_y == 1, np.log(train_rate), np.log(1 - train_rate)))
        assert res.report.log_loss == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("calibrator", ["none", "platt", "isotonic", "beta", "venn_abers", "pearsonify"])
    def test_repeatable(self, twonorm, calibrator):
        key = RunKey(twonorm.dataset_id, 2, "logistic", calibrator)
        a = run_cell(key, twonorm, self.config).report
        b = run_cell(key, twonorm, self.config).report
        for name in MetricReport.field_names():
            if "seconds" in name:
                continue
            va, vb = getattr(a, name), getattr(b, name)
            assert va == vb or (isinstance(va, float) and math.isnan(va) and math.isnan(vb)), name

    @pytest.mark.parametrize("fold", [1, 3, 5])
    def test_index_sets_disjoint(self, twonorm, fold):
        res = run_cell(RunKey(twonorm.dataset_id, fold, "gaussian_nb", "beta"), twonorm, self.config, keep_indices=True)
        ix = res.indices
        test = set(ix["test"].tolist())
        assert not test & set(ix["fit"].tolist())
        assert not test & set(ix["cal"].tolist())
        assert not set(ix["fit"].tolist()) & set(ix["cal"].tolist())
        assert len(test) + len(ix["fit"]) + len(ix["cal"]) == twonorm.table.n

    def test_none_arm_uses_all_training_rows(self, twonorm):
        res = run_cell(RunKey(twonorm.dataset_id, 1, "logistic", "none"), twonorm, self.config, keep_indices=True)
        assert np.array_equal(res.indices["fit"], res.indices["train"])
        assert res.indices["cal"].size == 0

    def test_timing_recorded(self, twonorm):
        r = run_cell(RunKey(twonorm.dataset_id, 1, "logistic", "platt"), twonorm, self.config).report
        assert r.fit_wall_seconds > 0 and r.calibrate_wall_seconds > 0 and r.predict_wall_seconds > 0
        assert r.fit_cpu_seconds >= 0

    def test_failure_captured(self, twonorm):
        res = run_cell(RunKey(twonorm.dataset_id, 1, "logistic", "temperature"), twonorm, self.config)
        assert not res.ok and "unknown calibrator" in res.error

    def test_fold_out_of_range(self, twonorm):
        with pytest.raises(ValueError):
            cell_indices(twonorm, RunKey(twonorm.dataset_id, 6, "logistic"), self.config)

    def test_repeats_number_folds_consecutively(self, twonorm):
        cfg = RunConfig(k=5, repeats=2, master_seed=11)
        _, _, _, t1 = cell_indices(twonorm, RunKey(twonorm.dataset_id, 1, "logistic"), cfg)
        _, _, _, t6 = cell_indices(twonorm, RunKey(twonorm.dataset_id, 6, "logistic"), cfg)
        assert not np.array_equal(t1, t6)
        covered = np.concatenate(
            [cell_indices(twonorm, RunKey(twonorm.dataset_id, f, "logistic"), cfg)[3] for f in range(6, 11)]
        )
        assert sorted(covered.tolist()) == list(range(twonorm.table.n))

    @pytest.mark.parametrize("fold", [1, 2, 3, 4, 5])
    def test_isotonic_corridor(self, twonorm, fold):
        # both arms should sit near the Bayes loss of twonorm
        none = run_cell(RunKey(twonorm.dataset_id, fold, "logistic", "none"), twonorm, self.config).report
        iso = run_cell(RunKey(twonorm.dataset_id, fold, "logistic", "isotonic"), twonorm, self.config).report
        assert abs(iso.log_loss - none.log_loss) <= 0.05


class TestDelta:
    def test_halved(self):
        d = delta("log_loss", 2.0, 1.0)
        assert (d.marginal, d.relative_pct) == (-1.0, -50.0)

    def test_unchanged(self):
        d = delta("log_loss", 2.0, 2.0)
        assert (d.marginal, d.relative_pct) == (0.0, 0.0)

    def test_zero_base(self):
        d = delta("ece", 0.0, 1.0)
        assert d.marginal == 1.0 and not d.relative_defined

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_sign_agrees(self, base, cal):
        d = delta("m", base, cal)
        if d.relative_defined:
            assert np.sign(d.relative_pct) == np.sign(d.marginal)


class TestRanks:
    def test_distinct(self):
        assert rank_within([3, 1, 2], LOWER_BETTER) == [3, 1, 2]

    def test_tie(self):
        assert rank_within([1, 1, 2], LOWER_BETTER) == [1, 1, 3]

    def test_single(self):
        assert rank_within([5.0]) == [1]

    def test_higher_better(self):
        assert rank_within([0.9, 0.7, 0.9], HIGHER_BETTER) == [1, 3, 1]

    def test_empty_and_nan(self):
        with pytest.raises(ValueError):
            rank_within([])
        with pytest.raises(ValueError):
            rank_within([1.0, math.nan])

    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=12), st.sampled_from([LOWER_BETTER, HIGHER_BETTER]))
    def test_consistent_with_order(self, values, direction):
        r = rank_within(values, direction)
        assert min(r) == 1
        assert all(1 <= x <= len(values) for x in r)
        sign = 1 if direction == LOWER_BETTER else -1
        for i, vi in enumerate(values):
            for j, vj in enumerate(values):
                if sign * vi < sign * vj:
                    assert r[i] < r[j]
                if vi == vj:
                    assert r[i] == r[j]

    def test_directions(self):
        for m in ("log_loss", "brier", "abs_z", "ece", "fit_cpu_seconds"):
            assert MEASURE_DIRECTIONS[m] == LOWER_BETTER
        for m in ("auc_roc", "accuracy", "precision", "recall", "f1", "eci_global"):
            assert MEASURE_DIRECTIONS[m] == HIGHER_BETTER


# values[(dataset, fold)][entity], lower is better
FIXTURE = {
    ("d1", 1): {"A": 0.1, "B": 0.2, "C": 0.3},
    ("d1", 2): {"A": 0.2, "B": 0.2, "C": 0.5},
    ("d2", 1): {"A": 0.4, "B": 0.1, "C": 0.2},
    ("d2", 2): {"A": 0.3, "B": 0.3, "C": 0.3},
}


class TestExpectedRank:
    def test_fixture_ranks(self):
        t = build_rank_table("log_loss", LOWER_BETTER, ("dataset", "fold"), FIXTURE)
        assert t.ranks[("d1", 1)] == {"A": 1, "B": 2, "C": 3}
        assert t.ranks[("d1", 2)] == {"A": 1, "B": 1, "C": 3}
        assert t.ranks[("d2", 1)] == {"A": 3, "B": 1, "C": 2}
        assert t.ranks[("d2", 2)] == {"A": 1, "B": 1, "C": 1}

    def test_fixture_expected(self):
        t = build_rank_table("log_loss", LOWER_BETTER, ("dataset", "fold"), FIXTURE)
        assert expected_rank(t) == {"A": 1.5, "B": 1.25, "C": 2.25}

    def test_two_cells(self):
        t = build_rank_table("m", LOWER_BETTER, ("dataset", "fold"), {("s1", 1): {"A": 1, "B": 0}, ("s2", 1): {"A": 0, "B": 1}})
        t.ranks[("s1", 1)]["A"] = 1
        t.ranks[("s2", 1)]["A"] = 3
        assert expected_rank(t)["A"] == 2.0

    def test_single_cell(self):
        t = build_rank_table("m", LOWER_BETTER, ("dataset", "fold"), {("s", 1): {"A": 2.0, "B": 1.0}})
        assert expected_rank(t) == {"A": 2.0, "B": 1.0}

    def test_always_best_is_one(self):
        rng = np.random.default_rng(0)
        values = {(f"d{i}", f): {"best": -1.0, "x": rng.random(), "y": rng.random()} for i in range(3) for f in (1, 2)}
        t = build_rank_table("m", LOWER_BETTER, ("dataset", "fold"), values)
        assert expected_rank(t)["best"] == 1.0

    def test_nested_not_grand_mean(self):
        # d1 has one fold, d2 has three: dataset means are weighted equally
        values = {
            ("d1", 1): {"A": 0, "B": 1},
            ("d2", 1): {"A": 1, "B": 0},
            ("d2", 2): {"A": 1, "B": 0},
            ("d2", 3): {"A": 1, "B": 0},
        }
        t = build_rank_table("m", LOWER_BETTER, ("dataset", "fold"), values)
        assert expected_rank(t)["A"] == 1.5

    def test_three_levels(self):
        values = {
            ("lr", "d1", 1): {"P": 0, "Q": 1},
            ("lr", "d1", 2): {"P": 1, "Q": 0},
            ("nb", "d1", 1): {"P": 0, "Q": 1},
            ("nb", "d1", 2): {"P": 0, "Q": 1},
        }
        t = build_rank_table("m", LOWER_BETTER, ("learner", "dataset", "fold"), values)
        assert expected_rank(t) == {"P": 1.25, "Q": 1.75}

    def test_missing_cells(self):
        values = {("d1", 1): {"A": 0.1, "B": math.nan}, ("d1", 2): {"A": 0.1, "B": 0.2}}
        t = build_rank_table("m", LOWER_BETTER, ("dataset", "fold"), values)
        assert t.excluded == [(("d1", 1), "B")]
        with pytest.raises(MissingCellsError) as err:
            expected_rank(t)
        assert err.value.missing == [(("d1", 1), "B")]
        assert expected_rank(t, allow_missing=True) == {"A": 1.0, "B": 2.0}

    def test_someone_first_in_every_cell(self):
        rng = np.random.default_rng(1)
        values = {("d", f): {e: float(rng.integers(0, 3)) for e in "ABCD"} for f in range(20)}
        t = build_rank_table("m", LOWER_BETTER, ("dataset", "fold"), values)
        assert all(min(row.values()) == 1 for row in t.ranks.values())
