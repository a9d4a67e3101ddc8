from dataclasses import replace

import numpy as np
import pytest

from vowelprobe import svmkit
from vowelprobe.corpus import VowelClass
from vowelprobe.errors import ConfigError

import oracles


class TestResolveGamma:
    def test_scale_hand_computed(self):
        # entries {0,1} balanced: pooled var 0.25, d=2 -> 1/(2*0.25) = 2
        X = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert svmkit.resolve_gamma("scale", X) == pytest.approx(2.0)

    def test_auto(self):
        assert svmkit.resolve_gamma("auto", np.zeros((3, 13))) == pytest.approx(1 / 13)

    def test_constant_matrix_rejected(self):
        with pytest.raises(ConfigError):
            svmkit.resolve_gamma("scale", np.full((4, 2), 3.0))


class TestKernels:
    def test_rbf_self_is_one(self):
        cfg = svmkit.KernelConfig("rbf", gamma=0.7)
        x = np.array([1.0, -2.0, 0.5])
        assert svmkit.kernel_eval(cfg, x, x) == pytest.approx(1.0)

    def test_linear_dot(self):
        cfg = svmkit.KernelConfig("linear")
        assert svmkit.kernel_eval(cfg, np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    def test_poly_cube(self):
        cfg = svmkit.KernelConfig("poly", degree=3, coef0=0.0, gamma=1.0)
        x = np.array([1.0, 1.0])
        z = np.array([1.0, 1.0])  # <x,z> = 2 -> 8
        assert svmkit.kernel_eval(cfg, x, z) == pytest.approx(8.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            svmkit.kernel_eval(svmkit.KernelConfig("linear"), np.zeros(2), np.zeros(3))

    def test_gram_psd(self):
        rng = np.random.default_rng(0)
        for kind in ("linear", "rbf"):
            X = rng.standard_normal((30, 5))
            cfg = svmkit.KernelConfig(kind, gamma=svmkit.resolve_gamma("scale", X))
            K = svmkit.gram(X, X, cfg)
            assert np.allclose(K, K.T)
            eigs = np.linalg.eigvalsh(K)
            assert eigs.min() >= -1e-8 * np.trace(K)

    def test_rbf_gamma_rescaling_invariance(self):
        # k_{gamma/a^2}(a x, a z) == k_gamma(x, z)
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10, 4))
        a = 3.7
        gamma = 0.9
        base = svmkit.gram(X, X, svmkit.KernelConfig("rbf", gamma=gamma))
        scaled = svmkit.gram(a * X, a * X, svmkit.KernelConfig("rbf", gamma=gamma / a**2))
        assert np.abs(base - scaled).max() < 1e-12


class TestSmo:
    def test_two_point_analytic(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        model = svmkit.smo_train(X, y, 1.0, svmkit.KernelConfig("linear"), tol=1e-6)
        assert model.support_vectors.shape[0] == 2
        assert np.allclose(np.abs(model.dual_coefs), 0.5, atol=1e-6)
        assert model.bias == pytest.approx(0.0, abs=1e-6)
        assert model.decision_values(np.array([[3.0]]))[0] == pytest.approx(3.0, abs=1e-5)

    def test_dual_feasibility(self):
        rng = np.random.default_rng(2)
        for trial in range(10):
            n = int(rng.integers(10, 40))
            X = rng.standard_normal((n, 3))
            y = np.sign(rng.standard_normal(n))
            y[y == 0] = 1.0
            if abs(y.sum()) == n:
                y[0] = -y[0]
            c = float(rng.choice([0.5, 1.0, 3.0]))
            cfg = svmkit.KernelConfig("rbf", gamma=svmkit.resolve_gamma("scale", X))
            K = svmkit.gram(X, X, cfg)
            alpha, bias, _ = svmkit.smo_solve(K, y, c, tol=1e-3)
            assert np.all(alpha >= -1e-12) and np.all(alpha <= c + 1e-12)
            assert abs(np.dot(alpha, y)) < 1e-6

    def test_free_vectors_on_margin(self):
        rng = np.random.default_rng(3)
        X = np.vstack([rng.standard_normal((20, 2)) + 2, rng.standard_normal((20, 2)) - 2])
        y = np.array([1.0] * 20 + [-1.0] * 20)
        model = svmkit.smo_train(X, y, 1.0, svmkit.KernelConfig("rbf", gamma=0.5), tol=1e-4)
        dec = model.decision_values(model.support_vectors)
        alphas = np.abs(model.dual_coefs)
        free = (alphas > 1e-6) & (alphas < 1.0 - 1e-6)
        sv_labels = np.sign(model.dual_coefs)
        margins = sv_labels[free] * dec[free]
        assert np.abs(margins - 1.0).max() < 1e-3

    def test_single_class_rejected(self):
        with pytest.raises(ConfigError):
            svmkit.smo_train(np.zeros((3, 2)), np.ones(3), 1.0, svmkit.KernelConfig("linear"))

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(4)
        for trial in range(30):
            n = int(rng.integers(4, 9))
            npos = int(rng.integers(1, n))
            y = np.concatenate([np.ones(npos), -np.ones(n - npos)])
            rng.shuffle(y)
            X = rng.standard_normal((n, 2))
            kind = ("linear", "poly", "rbf")[trial % 3]
            cfg = svmkit.KernelConfig(kind, "scale")
            if kind != "linear":
                cfg = replace(cfg, gamma=svmkit.resolve_gamma("scale", X))
            K = svmkit.gram(X, X, cfg)
            c = float(rng.choice([0.5, 1.0, 2.0]))
            alpha, bias, _ = svmkit.smo_solve(K, y, c, tol=1e-6, max_iter=200_000)
            ref_alpha, ref_obj = oracles.qp_enumerate(K, y, c)
            assert abs(svmkit.dual_objective(K, y, alpha) - ref_obj) < 1e-3
            X_test = rng.standard_normal((4, 2))
            K_test = svmkit.gram(X_test, X, cfg)
            ref_bias = oracles.qp_bias(K, y, ref_alpha, c)
            mine = np.sign(K_test @ (alpha * y) + bias)
            ref = np.sign(K_test @ (ref_alpha * y) + ref_bias)
            assert np.array_equal(mine, ref)


class TestDecisionModes:
    def four_blob(self, seed=5):
        rng = np.random.default_rng(seed)
        X = np.vstack([rng.standard_normal((15, 2)) + (2, 0), rng.standard_normal((15, 2)) - (2, 0)])
        y = np.array([1.0] * 15 + [-1.0] * 15)
        return X, y

    def test_ovo_equals_underlying_machine(self):
        X, y = self.four_blob()
        cfg = svmkit.KernelConfig("rbf", gamma=0.5)
        clf = svmkit.train_classifier(X, y, 1.0, cfg, "ovo")
        machine = clf.machines[0]
        probe = np.random.default_rng(6).standard_normal((20, 2))
        assert np.array_equal(
            clf.predict_pm1(probe), np.where(machine.decision_values(probe) >= 0, 1.0, -1.0)
        )

    def test_ovr_machines_negate_and_match_binary(self):
        X, y = self.four_blob()
        cfg = svmkit.KernelConfig("rbf", gamma=0.5)
        ovr = svmkit.train_classifier(X, y, 1.0, cfg, "ovr")
        ovo = svmkit.train_classifier(X, y, 1.0, cfg, "ovo")
        probe = np.random.default_rng(7).standard_normal((30, 2)) * 2
        d_front = ovr.machines[0].decision_values(probe)
        d_back = ovr.machines[1].decision_values(probe)
        assert np.abs(d_front + d_back).max() < 1e-2  # negated decision values
        assert np.array_equal(ovr.predict_pm1(probe), ovo.predict_pm1(probe))

    def test_tie_predicts_front(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        clf = svmkit.train_classifier(X, y, 1.0, svmkit.KernelConfig("linear"), "ovo", tol=1e-6)
        assert clf.predict_pm1(np.array([[0.0]]))[0] == 1.0


class TestKfold:
    def test_even_split(self):
        y = np.array([1.0] * 10 + [-1.0] * 10)
        folds = svmkit.stratified_kfold(y, 5, seed=0)
        for fold in folds:
            assert len(fold) == 4
            assert np.sum(y[fold] > 0) == 2

    def test_partition(self):
        y = np.array([1.0] * 13 + [-1.0] * 9)
        folds = svmkit.stratified_kfold(y, 4, seed=1)
        joined = np.concatenate(folds)
        assert sorted(joined.tolist()) == list(range(22))

    def test_deterministic(self):
        y = np.array([1.0] * 20 + [-1.0] * 15)
        a = svmkit.stratified_kfold(y, 5, seed=3)
        b = svmkit.stratified_kfold(y, 5, seed=3)
        assert all(np.array_equal(f1, f2) for f1, f2 in zip(a, b))

    def test_small_class_rejected(self):
        with pytest.raises(ConfigError):
            svmkit.stratified_kfold(np.array([1.0, 1.0, 1.0, -1.0]), 2, seed=0)


class TestGridSearch:
    def blobs(self, n=40, seed=8):
        rng = np.random.default_rng(seed)
        X = np.vstack([rng.standard_normal((n // 2, 2)) + (3, 0), rng.standard_normal((n // 2, 2)) - (3, 0)])
        y = np.array([1.0] * (n // 2) + [-1.0] * (n // 2))
        return X, y

    def test_default_grid_is_120_cells(self):
        assert len(svmkit.GridSpec().cells()) == 120

    def test_c_grid_values(self):
        assert svmkit.GridSpec().c_values == tuple(0.5 * k for k in range(1, 11))

    def test_search_runs_and_counts(self):
        X, y = self.blobs()
        grid = svmkit.GridSpec(c_values=(0.5, 1.0), kernels=("linear", "rbf"))
        result = svmkit.grid_search(X, y, grid, k=3, seed=0)
        assert result.cells_evaluated == 2 * 2 * 2 * 2
        assert len(result.cv_rows) == result.cells_evaluated * 3
        assert result.cv_mean[result.best] >= 0.9

    def test_tie_breaks_to_smaller_c(self):
        X, y = self.blobs()  # trivially separable: many cells tie at 1.0
        grid = svmkit.GridSpec(c_values=(2.0, 1.0, 0.5), kernels=("linear",))
        result = svmkit.grid_search(X, y, grid, k=3, seed=0)
        best_acc = result.cv_mean[result.best]
        tied = [cell for cell, acc in result.cv_mean.items() if acc == best_acc]
        assert result.best == min(tied, key=lambda cell: cell.sort_key())
        assert result.best.c == 0.5

    def test_evaluation_order_invariance(self):
        X, y = self.blobs(seed=9)
        grid_a = svmkit.GridSpec(c_values=(0.5, 1.5), kernels=("rbf", "linear"))
        grid_b = svmkit.GridSpec(c_values=(1.5, 0.5), kernels=("linear", "rbf"))
        ra = svmkit.grid_search(X, y, grid_a, k=3, seed=0)
        rb = svmkit.grid_search(X, y, grid_b, k=3, seed=0)
        assert ra.best == rb.best

    def test_scaled_search_keeps_test_schema(self):
        X, y = self.blobs(seed=10)
        grid = svmkit.GridSpec(c_values=(1.0,), kernels=("rbf",))
        result = svmkit.grid_search(X, y, grid, k=3, seed=0, scale=True)
        assert result.scaler is not None
        out = svmkit.evaluate(result.classifier, X, y, result.scaler, result.best)
        assert out.accuracy > 0.9


class TestEvaluate:
    def test_perfect_predictions(self):
        X, y = TestGridSearch().blobs(seed=11)
        clf = svmkit.train_classifier(X, y, 1.0, svmkit.KernelConfig("linear"), "ovo")
        out = svmkit.evaluate(clf, X, y)
        assert out.accuracy == 1.0
        assert out.confusion[0, 1] == 0 and out.confusion[1, 0] == 0

    def test_confusion_sums_to_test_size(self):
        rng = np.random.default_rng(12)
        X, y = TestGridSearch().blobs(seed=12)
        clf = svmkit.train_classifier(X, y, 1.0, svmkit.KernelConfig("rbf", gamma=0.3), "ovo")
        X_test = rng.standard_normal((17, 2))
        y_test = np.sign(rng.standard_normal(17))
        y_test[y_test == 0] = 1.0
        out = svmkit.evaluate(clf, X_test, y_test)
        assert out.confusion.sum() == 17

    def test_majority_rate_arithmetic(self):
        # an all-front predictor on the 1736/946 mix scores 1736/2682
        assert 1736 / 2682 == pytest.approx(0.6473, abs=5e-5)

    def test_constant_classifier_scores_majority_rate(self):
        # a machine with no pull toward either class (zero dual weight, positive
        # bias) predicts front everywhere; accuracy equals the front share
        machine = svmkit.SvmModel(
            support_vectors=np.zeros((1, 2)),
            dual_coefs=np.zeros(1),
            bias=1.0,
            kernel=svmkit.KernelConfig("linear"),
            c=1.0,
        )
        clf = svmkit.VowelClassifier("ovo", [machine])
        rng = np.random.default_rng(13)
        X = rng.standard_normal((100, 2))
        y = np.array([1.0] * 64 + [-1.0] * 36)
        out = svmkit.evaluate(clf, X, y)
        assert out.accuracy == pytest.approx(0.64)

    def test_labels_to_pm1(self):
        got = svmkit.labels_to_pm1([VowelClass.FRONT, VowelClass.BACK, VowelClass.FRONT])
        assert np.array_equal(got, [1.0, -1.0, 1.0])
