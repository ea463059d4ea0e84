"""Tests for exact and approximate model similarity."""

import numpy as np
import pytest
from scipy.special import expit

from pyentangle.enums import ModelKind
from pyentangle.exceptions import (
    CapacityError,
    DimensionMismatchError,
    NumericalBoundaryError,
    UndefinedSimilarityError,
)
from pyentangle.glm import add_intercept, fit_logistic
from pyentangle.similarity import (
    GradientField,
    SimilarityConfig,
    approx_similarity,
    brute_force_similarity,
    central_difference,
    dyadic_gradient,
    dyadic_propensity,
    dyadic_similarity,
    exact_similarity,
    expected_normalized_gradient,
    gradient_field,
    iid_dyadic_sampler,
    inner_product_propensity,
    linear_index_model,
    linear_projection_similarity,
    moment_residual,
    r_function,
    r_monotonicity_sign,
    r_sigma_derivative,
    similarity_report,
)
from pyentangle.subclass import Subclassification, quantile_subclassify


class TestExactSimilarity:
    """Test cases for permutation-maximized agreement."""

    def test_relabeling_is_free(self):
        """A permuted labeling is fully similar."""
        sub = Subclassification(labels=[0, 0, 1, 2, 2], K=3)
        relabeled = Subclassification(labels=[2, 2, 0, 1, 1], K=3)
        assert exact_similarity(sub, relabeled) == 1.0

    def test_worked_example_sets(self):
        """The two k-means partitions of the worked example agree on 3 of 5 units."""
        true_sets = Subclassification.from_sets(5, [0, 1, 3, 4])
        poisson_sets = Subclassification.from_sets(5, [0, 1, 2, 3])
        assert exact_similarity(true_sets, poisson_sets) == pytest.approx(0.6)

    def test_assignment_matches_enumeration(self, rng):
        """The assignment solver finds the best permutation."""
        for _ in range(20):
            first = Subclassification(labels=rng.integers(0, 4, 30), K=4)
            second = Subclassification(labels=rng.integers(0, 4, 30), K=4)
            assert exact_similarity(first, second) == pytest.approx(
                brute_force_similarity(first, second)
            )

    def test_unequal_class_counts(self):
        """Subclassifications with different K are padded."""
        first = Subclassification(labels=[0, 0, 1, 1], K=2)
        second = Subclassification(labels=[0, 1, 2, 2], K=3)
        assert exact_similarity(first, second) == pytest.approx(0.75)

    def test_unit_count_mismatch(self):
        """Both subclassifications must cover the same units."""
        with pytest.raises(DimensionMismatchError):
            exact_similarity(
                Subclassification(labels=[0, 1], K=2),
                Subclassification(labels=[0, 1, 1], K=2),
            )

    def test_enumeration_capacity(self):
        """Brute force is limited to small K."""
        sub = Subclassification(labels=np.arange(8), K=8)
        with pytest.raises(CapacityError):
            brute_force_similarity(sub, sub)


class TestApproxSimilarity:
    """Test cases for gradient-cosine similarity."""

    @pytest.fixture
    def points(self, rng):
        """Shared sample of covariate points."""
        return rng.standard_normal((200, 3))

    def test_self_similarity(self, points):
        """A model is fully similar to itself."""
        model, grad = linear_index_model([1.0, -2.0, 0.5])
        field = gradient_field(model, points, grad)
        assert approx_similarity(field, field) == pytest.approx(1.0)

    def test_monotone_transform_invariance(self, points):
        """Rescaling or negating a model does not change its similarity."""
        model, grad = linear_index_model([1.0, -2.0, 0.5])
        base = gradient_field(model, points, grad)
        scaled = gradient_field(lambda x: -3.0 * model(x), points)
        assert approx_similarity(base, scaled) == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal_models(self, points):
        """Models on orthogonal indices have similarity zero."""
        model_x, grad_x = linear_index_model([1.0, 0.0, 0.0])
        model_y, grad_y = linear_index_model([0.0, 1.0, 0.0])
        first = gradient_field(model_x, points, grad_x)
        second = gradient_field(model_y, points, grad_y)
        assert approx_similarity(first, second) == pytest.approx(0.0, abs=1e-12)

    def test_central_difference_matches_analytic(self, points):
        """Numerical gradients agree with the analytic ones."""
        model, grad = linear_index_model([0.3, -0.7, 1.1], intercept=0.2)
        numeric, _ = central_difference(model, points)
        assert np.allclose(numeric, grad(points), atol=1e-7)

    def test_fields_must_share_points(self, points):
        """Cosines are only defined on a common sample."""
        model, grad = linear_index_model([1.0, 1.0, 1.0])
        with pytest.raises(DimensionMismatchError):
            approx_similarity(
                gradient_field(model, points, grad),
                gradient_field(model, points + 1.0, grad),
            )

    def test_zero_gradients(self):
        """A flat model has no similarity."""
        field = GradientField(np.ones((4, 2)), np.zeros((4, 2)))
        assert field.excluded == 4
        with pytest.raises(UndefinedSimilarityError):
            approx_similarity(field, field)
        with pytest.raises(UndefinedSimilarityError):
            field.normalized_mean()

    def test_linear_projection(self):
        """The projection is |beta' nabla| / ||beta||."""
        value = linear_projection_similarity([2.0, 0.0], [0.6, 0.8])
        assert value == pytest.approx(0.6)
        with pytest.raises(ValueError):
            linear_projection_similarity([0.0, 0.0], [0.6, 0.8])

    def test_expected_normalized_gradient_of_linear_model(self):
        """A linear-index model has a constant gradient direction."""
        beta = np.array([3.0, 4.0])
        model, grad = linear_index_model(beta)
        mean = expected_normalized_gradient(
            model, lambda g, m: g.standard_normal((m, 2)), 100, grad, rng=0
        )
        assert mean == pytest.approx(beta / 5.0)


class TestRFunction:
    """Test cases for r(a, sigma) = E expit(a + sigma Z)."""

    def test_zero_sigma_is_expit(self):
        """With no noise r is the logistic function."""
        a = np.linspace(-4, 4, 9)
        assert np.array_equal(r_function(a, 0.0), expit(a))

    def test_symmetry(self):
        """r(a, s) + r(-a, s) = 1 and r(0, s) = 1/2."""
        for sigma in (0.3, 1.0, 2.5):
            total = r_function(1.3, sigma) + r_function(-1.3, sigma)
            assert total == pytest.approx(1.0)
            assert r_function(0.0, sigma) == pytest.approx(0.5)

    def test_shrinks_toward_half(self):
        """Noise pulls r toward 1/2."""
        assert expit(-2.0) < r_function(-2.0, 1.0) < r_function(-2.0, 2.0) < 0.5

    @pytest.mark.parametrize("a", [-2.0, -1.0, -0.5, -0.2, 0.2, 0.5, 1.0, 2.0, 3.0])
    @pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0, 2.0, 3.0])
    def test_monotonicity_sign(self, a, sigma):
        """r increases in sigma for a < 0 and decreases for a > 0."""
        assert r_monotonicity_sign(a, sigma) == (1 if a < 0 else -1)

    def test_sigma_derivative(self):
        """The quadrature derivative matches a finite difference."""
        step = 1e-5
        upper, lower = r_function(-1.0, 0.8 + step), r_function(-1.0, 0.8 - step)
        numeric = (upper - lower) / (2 * step)
        assert r_sigma_derivative(-1.0, 0.8) == pytest.approx(numeric, rel=1e-5)

    def test_matches_monte_carlo(self):
        """Quadrature agrees with a million-draw average of expit(1 + 2Z)."""
        draws = np.random.default_rng(2024).standard_normal(1_000_000)
        expected = expit(1.0 + 2.0 * draws).mean()
        assert r_function(1.0, 2.0) == pytest.approx(expected, abs=1.5e-3)

    def test_invalid_arguments(self):
        """Negative sigma and a flat point are rejected."""
        with pytest.raises(ValueError):
            r_function(0.0, -1.0)
        with pytest.raises(ValueError):
            r_monotonicity_sign(0.0, 1.0)


class TestModels:
    """Test cases for the closed-form propensity models."""

    def test_inner_product_at_origin(self):
        """A unit at the origin has expected degree (n - 1) expit(a)."""
        evaluate, _ = inner_product_propensity(a=-1.0, b=1.0, tau=1.0, n=10)
        assert evaluate(np.zeros((1, 3)))[0] == pytest.approx(9 * expit(-1.0))

    def test_inner_product_gradient(self, rng):
        """The analytic gradient matches central differences."""
        evaluate, grad = inner_product_propensity(a=-1.0, b=0.8, tau=1.2, n=20)
        points = rng.standard_normal((25, 3))
        numeric, _ = central_difference(evaluate, points)
        assert np.allclose(grad(points), numeric, atol=1e-5)

    def test_dyadic_gradient(self, rng):
        """The dyadic gradient matches central differences."""
        partners = rng.normal(-3.0, 0.5, 6)
        rows = rng.standard_normal((10, 6))

        def evaluate(x):
            return dyadic_propensity(x, -3.0, partners, 0.9)

        numeric, _ = central_difference(evaluate, rows)
        analytic = dyadic_gradient(rows, -3.0, partners, 0.9)
        assert np.allclose(analytic, numeric, atol=1e-7)

    def test_homogeneous_dyadic_model_is_linear(self):
        """Equal node effects make the linear mean-covariate model nearly exact."""
        n = 10
        sampler = iid_dyadic_sampler(n)
        value = dyadic_similarity(np.full(n, -4.0), 1.0, sampler, 2000, rng=1)
        assert value > 0.99

    def test_homogeneous_dyadic_model_at_hundred_units(self):
        """With 100 exchangeable units the linear model is all but exact."""
        sampler = iid_dyadic_sampler(100)
        value = dyadic_similarity(np.full(100, -4.0), 1.0, sampler, 2000, rng=3)
        assert value >= 0.999

    def test_inner_product_is_unlike_any_linear_model(self, rng):
        """A radial propensity has no linear-index direction."""
        evaluate, grad = inner_product_propensity(a=-1.0, b=1.0, tau=1.0, n=50)
        points = rng.standard_normal((100_000, 3))
        field_e = gradient_field(evaluate, points, grad)
        for _ in range(3):
            beta = rng.standard_normal(3)
            model, model_grad = linear_index_model(beta)
            field_m = gradient_field(model, points, model_grad)
            assert approx_similarity(field_m, field_e) <= 0.05
            nabla = field_e.normalized_mean()
            assert linear_projection_similarity(beta, nabla) <= 0.05

    def test_sampler_zero_diagonal(self, rng):
        """Sampled dyadic covariates have a zero diagonal."""
        draws = iid_dyadic_sampler(5, symmetric=True)(rng, 3)
        assert np.all(draws[:, np.arange(5), np.arange(5)] == 0)
        assert np.array_equal(draws, np.swapaxes(draws, 1, 2))


class TestMomentResidual:
    """Test cases for the moment equation of a misspecified link."""

    def test_zero_at_logistic_mle(self, rng):
        """At the logistic MLE the moment equation is the score equation."""
        x = rng.standard_normal(60)
        Z = (rng.random(60) < expit(0.5 * x)).astype(int)
        design = add_intercept(x)
        beta = fit_logistic(Z, design).coefficients
        assert np.allclose(moment_residual(beta, Z, design), 0.0, atol=1e-8)

    def test_zero_when_model_is_true(self, rng):
        """A correctly specified link solves the equation exactly."""
        design = add_intercept(rng.standard_normal(20))
        beta = np.array([0.2, -0.4])
        residual = moment_residual(beta, lambda X: expit(X @ beta), design)
        assert np.allclose(residual, 0.0, atol=1e-12)

    def test_boundary(self):
        """Fitted probabilities at 0 or 1 are rejected."""
        with pytest.raises(NumericalBoundaryError):
            moment_residual([100.0], [0.5], [[1.0]])

    def test_custom_link_needs_derivative(self):
        """A custom link must come with its derivative."""
        with pytest.raises(ValueError):
            moment_residual([0.1], [0.5], [[1.0]], h=np.tanh)


class TestSimilarityReport:
    """Test cases for the configured similarity report."""

    def test_config_from_mapping(self):
        """String settings are typed and the dyadic alias resolved."""
        values = {"model": "dyadic", "n": "20", "b": "0.5"}
        config = SimilarityConfig.from_mapping(values)
        assert config.model is ModelKind.DYADIC_LOGISTIC
        assert config.n == 20
        assert config.b == 0.5

    def test_config_rejects_unknown_keys(self):
        """Unknown settings are reported."""
        with pytest.raises(ValueError, match="Unknown"):
            SimilarityConfig.from_mapping({"colour": "blue"})

    def test_config_rejects_unsupported_model(self):
        """Only the inner-product and dyadic models have reports."""
        with pytest.raises(ValueError):
            SimilarityConfig.from_mapping({"model": "product_exp"})

    def test_inner_product_report(self):
        """The report holds similarities in [0, 1] and is seeded."""
        config = SimilarityConfig(
            n=30, d=2, samples=400, classes=3, resamples=2, seed=5
        )
        report = similarity_report(config)
        assert set(report) == {
            "exact",
            "approx",
            "projection",
            "samples",
            "excluded_zero_gradients",
        }
        for key in ("exact", "approx", "projection"):
            assert 0.0 <= report[key] <= 1.0 + 1e-12
        assert similarity_report(config) == report

    def test_dyadic_report(self):
        """The dyadic report runs on a small population."""
        config = SimilarityConfig(
            model=ModelKind.DYADIC_LOGISTIC,
            n=12,
            a=-4.0,
            samples=200,
            classes=2,
            seed=1,
        )
        report = similarity_report(config)
        assert 0.0 <= report["exact"] <= 1.0
        assert report["approx"] > 0.9


class TestSimilarityProperties:
    """Randomized checks of the similarity identities."""

    TRANSFORMS = [
        lambda v: 3.0 * v + 1.0,
        np.exp,
        lambda v: v**3 + v,
        lambda v: -v,
        lambda v: -np.exp(2.0 * v),
    ]

    @staticmethod
    def _random_pair(rng):
        """A random linear-index model and a random inner-product model."""
        beta = rng.standard_normal(3)
        linear = linear_index_model(beta, intercept=rng.normal())
        sign = rng.choice([-1.0, 1.0])
        radial = inner_product_propensity(
            a=sign * rng.uniform(0.5, 2.0), b=rng.uniform(0.5, 1.5), tau=1.0, n=20
        )
        return beta, linear, radial

    def test_assignment_matches_enumeration_on_random_pairs(self, rng):
        """Hungarian and brute force agree on random subclassification pairs."""
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            K1, K2 = (int(k) for k in rng.integers(1, 8, size=2))
            first = Subclassification(labels=rng.integers(0, K1, n), K=K1)
            second = Subclassification(labels=rng.integers(0, K2, n), K=K2)
            assert exact_similarity(first, second) == pytest.approx(
                brute_force_similarity(first, second)
            )

    def test_approx_invariant_to_monotone_transforms(self, rng):
        """Strictly monotone transforms leave the gradient similarity unchanged."""
        for index in range(200):
            _, (model, grad), (other, other_grad) = self._random_pair(rng)
            h = self.TRANSFORMS[index % len(self.TRANSFORMS)]
            points = rng.standard_normal((100, 3))
            field_e = gradient_field(other, points, other_grad)
            base = approx_similarity(gradient_field(model, points, grad), field_e)
            transformed = gradient_field(lambda x: h(model(x)), points)
            assert approx_similarity(transformed, field_e) == pytest.approx(
                base, abs=1e-6
            )

    def test_exact_invariant_to_monotone_transforms(self, rng):
        """Quantile classes follow score order only, in either direction."""
        for index in range(200):
            _, (model, _), (other, _) = self._random_pair(rng)
            h = self.TRANSFORMS[index % len(self.TRANSFORMS)]
            K = int(rng.choice([2, 3, 4, 5, 6]))
            points = rng.standard_normal((60, 3))
            scores = model(points)
            reference = quantile_subclassify(other(points), K)
            base = exact_similarity(quantile_subclassify(scores, K), reference)
            transformed = quantile_subclassify(h(scores), K)
            assert exact_similarity(transformed, reference) == pytest.approx(base)

    def test_projection_equals_cosine_average(self, rng):
        """For a linear-index model both similarity forms coincide."""
        for _ in range(100):
            beta, (model, grad), (other, other_grad) = self._random_pair(rng)
            points = rng.standard_normal((300, 3))
            field_m = gradient_field(model, points, grad)
            field_e = gradient_field(other, points, other_grad)
            projection = linear_projection_similarity(beta, field_e.normalized_mean())
            assert approx_similarity(field_m, field_e) == pytest.approx(
                projection, abs=1e-9
            )
