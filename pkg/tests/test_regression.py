import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ectmol.errors import ShapeMismatch, SingularSystem, TooFewRows, ZeroVariance
from ectmol.features import featurize, normalize_dataset
from ectmol.regression import (
    CVConfig,
    CVReport,
    cross_validate,
    fit_ridge,
    fold_indices,
    format_table,
    r_squared,
    rmse,
    sensitivity_sweep,
)
from ectmol.smiles import molecule_from_smiles
from ectmol.synthetic import random_molecules, topology_targets

from oracles import dense_ridge


class TestRidge:
    def test_line_through_origin(self):
        m = fit_ridge([[1.0], [2.0]], [2.0, 4.0], 0.0)
        assert m.weights[0] == pytest.approx(2.0, abs=1e-12)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)

    def test_shrinks_to_mean(self):
        X = np.random.default_rng(0).normal(size=(30, 4))
        m = fit_ridge(X, np.full(30, 7.5), 1e6)
        assert np.allclose(m.predict(X), 7.5, atol=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(50, 5)), rng.normal(size=50)
        w, b = dense_ridge(X, y, 0.1)
        m = fit_ridge(X, y, 0.1)
        assert np.max(np.abs(m.weights - w)) <= 1e-8
        assert abs(m.intercept - b) <= 1e-8

    def test_wide_problem_matches_dense_oracle(self):
        rng = np.random.default_rng(6)
        X, y = rng.normal(size=(30, 80)), rng.normal(size=30)
        w, b = dense_ridge(X, y, 0.05)
        m = fit_ridge(X, y, 0.05)
        assert np.max(np.abs(m.weights - w)) <= 1e-8
        assert abs(m.intercept - b) <= 1e-8

    def test_singular_without_penalty(self):
        X = np.ones((5, 2))
        with pytest.raises(SingularSystem):
            fit_ridge(X, np.arange(5.0), 0.0)
        X = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
        with pytest.raises(SingularSystem):
            fit_ridge(X, np.arange(5.0), 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 40), st.floats(1e-12, 1e3),
           st.integers(0, 2**32 - 1))
    def test_positive_penalty_never_singular(self, n, w, lam, seed):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 2, size=(n, w)).astype(float)  # often rank deficient
        m = fit_ridge(X, rng.normal(size=n), lam)
        assert np.all(np.isfinite(m.weights))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-1e3, 1e3), st.integers(0, 2**32 - 1))
    def test_shift_invariance(self, shift, seed):
        rng = np.random.default_rng(seed)
        X, y = rng.normal(size=(20, 3)), rng.normal(size=20)
        base = fit_ridge(X, y, 0.5).predict(X)
        shifted = fit_ridge(X, y + shift, 0.5).predict(X)
        assert np.allclose(shifted, base + shift, atol=1e-9 * (1 + abs(shift)))

    def test_shape_errors(self):
        with pytest.raises(ShapeMismatch):
            fit_ridge(np.zeros((3, 2)), np.zeros(4), 1.0)
        with pytest.raises(ShapeMismatch):
            fit_ridge(np.zeros((3, 2)), np.zeros(3), 1.0).predict(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            fit_ridge(np.zeros((3, 2)), np.zeros(3), -1.0)


class TestMetrics:
    def test_perfect(self):
        assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
        assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0

    def test_arithmetic(self):
        assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))

    def test_mean_prediction(self):
        truth = np.array([1.0, 4.0, 2.0, 9.0])
        assert r_squared(np.full(4, truth.mean()), truth) == pytest.approx(0.0, abs=1e-15)

    def test_constant_truth(self):
        with pytest.raises(ZeroVariance):
            r_squared([1, 2], [3, 3])

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            rmse([1], [1, 2])


class TestFolds:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 15).flatmap(lambda k: st.tuples(st.just(k), st.integers(k, 200))),
           st.integers(0, 2**64 - 1))
    def test_partition(self, kn, seed):
        k, n = kn
        folds = fold_indices(n, k, seed)
        assert len(folds) == k
        sizes = [f.size for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert sorted(np.concatenate(folds).tolist()) == list(range(n))

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            fold_indices(4, 5, 0)
        with pytest.raises(TooFewRows):
            cross_validate(np.zeros((3, 1)), np.arange(3.0), CVConfig(folds=5))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CVConfig(folds=1)


class TestCrossValidate:
    def test_realizable(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 4))
        y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + 4.0
        rep = cross_validate(X, y, CVConfig(lam=1e-12))
        assert rep.mean_rmse < 1e-6
        assert rep.mean_r2 > 0.999

    def test_noise_has_no_skill(self):
        r2 = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            X, y = rng.normal(size=(200, 10)), rng.normal(size=200)
            r2.append(cross_validate(X, y, CVConfig(shuffle_seed=seed)).mean_r2)
        assert np.mean(r2) <= 0.1
        assert max(r2) <= 0.1

    def test_deterministic_and_parallel_equal(self):
        rng = np.random.default_rng(4)
        X, y = rng.normal(size=(80, 6)), rng.normal(size=80)
        a = cross_validate(X, y, CVConfig(shuffle_seed=9))
        b = cross_validate(X, y, CVConfig(shuffle_seed=9))
        c = cross_validate(X, y, CVConfig(shuffle_seed=9), jobs=4)
        assert a.to_json() == b.to_json() == c.to_json()

    def test_report_statistics(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(57, 3)), rng.normal(size=57)
        rep = cross_validate(X, y, CVConfig(folds=7), representation="ect", dataset="toy")
        assert abs(rep.mean_rmse - np.mean(rep.fold_rmse)) <= 1e-12
        assert abs(rep.std_rmse - np.std(rep.fold_rmse)) <= 1e-12
        assert abs(rep.std_r2 - np.std(rep.fold_r2)) <= 1e-12
        assert sum(rep.fold_sizes) == 57 and len(rep.fold_r2) == 7
        doc = json.loads(rep.to_json())
        assert doc["mean_r2"] == rep.mean_r2 and doc["dataset"] == "toy"

    def test_table_format(self):
        rep = CVReport([1.0, 2.0], [0.5, 0.7], representation="ect", dataset="d", n_features=4)
        text = format_table([rep])
        assert "1.500 ± 0.500" in text and "0.600 ± 0.100" in text
        assert text.splitlines()[0].split() == ["representation", "dataset", "width", "RMSE", "R2"]


def _sweep_inputs(n=300, seed=5):
    mols = random_molecules(n, seed=seed)
    y = topology_targets(mols, seed=seed)
    graphs = [molecule_from_smiles(m.smiles) for m in mols]
    normalized, _ = normalize_dataset([featurize(g) for g in graphs])
    return [(m.rows, g.edge_index()) for m, g in zip(normalized, graphs)], y


class TestSweep:
    def test_single_pair_equals_cv(self):
        from ectmol.ect import ThresholdGrid, ect_batch, sample_directions
        data, y = _sweep_inputs(120)
        cfg = CVConfig(folds=5)
        [row] = sensitivity_sweep(data, y, [158], [16], cfg, seed=2)
        X = ect_batch(data, sample_directions(9, 158, 2), ThresholdGrid.default(16))
        rep = cross_validate(X, y, cfg)
        assert (row.mean_rmse, row.std_rmse, row.mean_r2, row.std_r2) == \
            (rep.mean_rmse, rep.std_rmse, rep.mean_r2, rep.std_r2)
        assert row.n_features == 2528

    def test_direction_counts(self):
        data, y = _sweep_inputs()
        rows = sensitivity_sweep(data, y, [20, 30], [16], CVConfig(), seed=0)
        assert [(r.directions, r.thresholds) for r in rows] == [(20, 16), (30, 16)]
        assert all(math.isfinite(r.mean_rmse) and math.isfinite(r.mean_r2) for r in rows)

    def test_order_is_direction_major(self):
        data, y = _sweep_inputs(60)
        rows = sensitivity_sweep(data, y, [3, 2], [4, 5], CVConfig(folds=3))
        assert [(r.directions, r.thresholds) for r in rows] == [(3, 4), (3, 5), (2, 4), (2, 5)]

    @pytest.mark.slow
    def test_runtime_grows_with_thresholds(self):
        data, y = _sweep_inputs(500)
        # Best of three damps scheduler noise in the wall-clock comparison.
        best = {}
        for _ in range(3):
            for r in sensitivity_sweep(data, y, [158], [8, 16, 32], CVConfig()):
                best[r.thresholds] = min(best.get(r.thresholds, math.inf), r.seconds)
        assert best[8] < best[16] < best[32]

    def test_error_carries_point(self):
        data, y = _sweep_inputs(30)
        with pytest.raises(TooFewRows) as info:
            sensitivity_sweep(data, y, [4], [3], CVConfig(folds=40))
        assert info.value.sweep_point == (4, 3)
        assert str(info.value).startswith("D=4, T=3")
