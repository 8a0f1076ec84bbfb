"""Tests for nn module: MLP, likelihood head, optimizer and gradient checks."""

import numpy as np
import pytest
from scipy.stats import norm

from skill_discovery.nn import (
    AdamState,
    GaussianPrediction,
    Layer,
    MlpParams,
    adam_step,
    clip_global_norm,
    gaussian_nll,
    global_norm,
    init_mlp,
    mlp_backward,
    mlp_forward,
    softplus_positive,
)
from skill_discovery.nn.gradcheck import (
    COMPONENTS,
    ERROR_FLOOR,
    central_difference,
    relative_error,
    run_gradient_suite,
)


def make_net(seed: int = 0) -> MlpParams:
    return init_mlp([3, 8, 2], ["relu", "identity"], np.random.default_rng(seed))


class TestMlp:
    """Tests for the fully connected network."""

    def test_init_shapes_and_zero_bias(self):
        """Weights are (out, in) and biases start at zero."""
        net = init_mlp([5, 16, 16, 4], ["relu", "relu", "identity"], np.random.default_rng(0))
        assert [layer.weight.shape for layer in net.layers] == [(16, 5), (16, 16), (4, 16)]
        assert all(np.all(layer.bias == 0.0) for layer in net.layers)
        assert net.in_dim == 5
        assert net.out_dim == 4

    def test_init_bounds(self):
        """Relu layers are He-uniform, identity layers Glorot-uniform."""
        net = init_mlp([4, 6, 2], ["relu", "identity"], np.random.default_rng(0))
        assert np.max(np.abs(net.layers[0].weight)) <= np.sqrt(6.0 / 4)
        assert np.max(np.abs(net.layers[1].weight)) <= np.sqrt(6.0 / 8)

    def test_activation_count_checked(self):
        """One activation per layer."""
        with pytest.raises(ValueError):
            init_mlp([3, 4, 2], ["relu"], np.random.default_rng(0))

    def test_shapes_must_chain(self):
        """Mismatched neighbouring layers are rejected."""
        with pytest.raises(ValueError, match="expects"):
            MlpParams([Layer(np.ones((4, 3)), np.zeros(4)), Layer(np.ones((2, 5)), np.zeros(2))])

    def test_single_and_batched_agree(self):
        """A batch row gives the same output as the lone vector."""
        net = make_net()
        x = np.random.default_rng(1).normal(size=(4, 3))
        batch, _ = mlp_forward(net, x)
        single, _ = mlp_forward(net, x[2])
        assert single.shape == (2,)
        assert np.allclose(batch[2], single)

    def test_wrong_input_width(self):
        """Input width must match the first layer."""
        with pytest.raises(ValueError):
            mlp_forward(make_net(), np.zeros(4))

    def test_relu_identity_forward(self):
        """Hand-computed two-layer forward pass."""
        net = MlpParams(
            [
                Layer(np.array([[1.0, -1.0], [2.0, 0.0]]), np.array([0.0, -1.0]), "relu"),
                Layer(np.array([[1.0, 1.0]]), np.array([0.5]), "identity"),
            ]
        )
        y, _ = mlp_forward(net, np.array([1.0, 2.0]))
        # hidden = relu([-1, 1]) = [0, 1]
        assert y == pytest.approx([1.5])

    def test_backward_matches_finite_differences(self):
        """Input gradient of a sum readout."""
        net = make_net(3)
        x = np.random.default_rng(4).normal(size=(2, 3))
        _, cache = mlp_forward(net, x)
        grads, dx = mlp_backward(net, cache, np.ones((2, 2)))

        def f() -> float:
            return float(np.sum(mlp_forward(net, x)[0]))

        assert relative_error(dx, central_difference(f, x)) < 1e-4
        assert relative_error(grads.layers[0].weight, central_difference(f, net.layers[0].weight)) < 1e-4

    def test_with_arrays_keeps_architecture(self):
        """Replacement arrays must keep shapes."""
        net = make_net()
        doubled = net.with_arrays([2 * a for a in net.arrays()])
        assert np.array_equal(doubled.layers[0].weight, 2 * net.layers[0].weight)
        with pytest.raises(ValueError):
            net.with_arrays(net.arrays()[:-1])

    def test_copy_is_independent(self):
        """Copies do not share buffers."""
        net = make_net()
        clone = net.copy()
        clone.layers[0].weight[0, 0] += 1.0
        assert clone.layers[0].weight[0, 0] != net.layers[0].weight[0, 0]


class TestGaussianHead:
    """Tests for the likelihood head."""

    def test_nll_matches_scipy(self):
        """Summed NLL equals minus the summed log density."""
        rng = np.random.default_rng(0)
        mu, target = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
        sigma = rng.uniform(0.2, 2.0, size=(3, 2))
        loss, _, _ = gaussian_nll(GaussianPrediction(mu=mu, sigma=sigma), target)
        assert loss == pytest.approx(-np.sum(norm.logpdf(target, loc=mu, scale=sigma)))

    def test_nll_ignores_target_order(self):
        """Permuting the batch rows permutes the gradients and keeps the loss."""
        rng = np.random.default_rng(1)
        mu, target = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        sigma = rng.uniform(0.2, 2.0, size=(6, 3))
        perm = rng.permutation(6)
        loss, dmu, dsigma = gaussian_nll(GaussianPrediction(mu=mu, sigma=sigma), target)
        shuffled, dmu_p, dsigma_p = gaussian_nll(
            GaussianPrediction(mu=mu[perm], sigma=sigma[perm]), target[perm]
        )
        assert shuffled == pytest.approx(loss, rel=1e-12)
        assert np.allclose(dmu_p, dmu[perm])
        assert np.allclose(dsigma_p, dsigma[perm])

    def test_gradients_at_mean(self):
        """At the mean, dmu is 0 and dsigma is 1/sigma."""
        sigma = np.array([0.5, 2.0])
        _, dmu, dsigma = gaussian_nll(GaussianPrediction(mu=np.zeros(2), sigma=sigma), np.zeros(2))
        assert np.array_equal(dmu, [0.0, 0.0])
        assert np.allclose(dsigma, 1.0 / sigma)

    def test_non_positive_sigma_rejected(self):
        """sigma must be positive."""
        with pytest.raises(ValueError):
            GaussianPrediction(mu=np.zeros(2), sigma=np.array([1.0, 0.0]))

    def test_shape_mismatch(self):
        """Target must match the prediction."""
        with pytest.raises(ValueError):
            gaussian_nll(GaussianPrediction(mu=np.zeros(2), sigma=np.ones(2)), np.zeros(3))

    def test_softplus_floor_and_no_overflow(self):
        """Outputs stay positive for very negative and finite for very positive inputs."""
        out = softplus_positive(np.array([-1000.0, 0.0, 1000.0]))
        assert out[0] == pytest.approx(1e-6)
        assert out[1] == pytest.approx(np.log(2.0) + 1e-6)
        assert np.isfinite(out[2])


class TestOptim:
    """Tests for Adam and clipping."""

    def test_first_adam_step_moves_by_lr(self):
        """Bias correction makes the first step lr * sign(grad)."""
        params = [np.array([1.0, -1.0])]
        grads = [np.array([0.3, -5.0])]
        new, state = adam_step(params, grads, AdamState.zeros_like(params), lr=0.01)
        assert np.allclose(new[0], [0.99, -0.99], atol=1e-6)
        assert state.step == 1

    def test_adam_is_pure(self):
        """Inputs and the old state are untouched."""
        params = [np.array([1.0])]
        state = AdamState.zeros_like(params)
        adam_step(params, [np.array([1.0])], state, lr=0.1)
        assert params[0][0] == 1.0
        assert state.step == 0
        assert state.m[0][0] == 0.0

    def test_adam_shape_mismatch(self):
        """Gradients must match parameters."""
        params = [np.zeros(2)]
        with pytest.raises(ValueError):
            adam_step(params, [np.zeros(3)], AdamState.zeros_like(params), lr=0.1)

    def test_clip_scales_jointly(self):
        """Clipping keeps direction and caps the global norm."""
        grads = [np.array([3.0]), np.array([4.0])]
        clipped = clip_global_norm(grads, 1.0)
        assert global_norm(clipped) == pytest.approx(1.0)
        assert clipped[0][0] / clipped[1][0] == pytest.approx(0.75)

    def test_clip_below_threshold_unchanged(self):
        """Small gradients pass through."""
        grads = [np.array([0.1, 0.2])]
        assert np.array_equal(clip_global_norm(grads, 1.0)[0], grads[0])

    def test_clip_requires_positive_norm(self):
        """max_norm must be positive."""
        with pytest.raises(ValueError):
            clip_global_norm([np.ones(1)], 0.0)


class TestGradientCheck:
    """Tests for the finite-difference harness."""

    def test_central_difference_restores_array(self):
        """The perturbed array is left exactly as it was."""
        x = np.array([0.3, -1.2, 2.0])
        before = x.copy()
        grad = central_difference(lambda: float(np.sum(x**2)), x)
        assert np.array_equal(x, before)
        assert np.allclose(grad, 2 * before, atol=1e-8)

    def test_relative_error_floor(self):
        """Tiny entries are compared on an absolute scale."""
        assert relative_error(np.array([1e-9]), np.array([2e-9])) == pytest.approx(1e-9 / ERROR_FLOOR)
        assert relative_error(np.array([1.0]), np.array([1.1])) == pytest.approx(0.1 / 1.1)

    @pytest.mark.parametrize("name", list(COMPONENTS))
    def test_component_within_tolerance(self, name):
        """Every gradient path agrees with finite differences."""
        rng = np.random.default_rng(42)
        for _ in range(5):
            error, entries = COMPONENTS[name](rng)
            assert entries > 0
            assert error < 1e-4

    def test_suite_report(self):
        """The suite reports every component and passes."""
        report = run_gradient_suite(trials=2, seed=1)
        assert [c.name for c in report.components] == list(COMPONENTS)
        assert all(c.instances == 2 for c in report.components)
        assert report.passed
        assert report.max_relative_error < 1e-4

    @pytest.mark.slow
    def test_full_suite(self):
        """100 instances per component at tolerance 1e-4."""
        assert run_gradient_suite(trials=100, seed=0).passed
