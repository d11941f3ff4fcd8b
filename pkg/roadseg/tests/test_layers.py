from django.test import SimpleTestCase
import math
import numpy as np

from roadseg.architecture import ArchitectureConfig
from roadseg.exceptions import ArgumentError, ShapeError
from roadseg.layers import AdamState, ConvLayer, ModelParams, adam_step, global_grad_norm, init_params
from roadseg.tensor import Tensor

SMALL = ArchitectureConfig(input_size=16, feature_channels=8, memory_channels=4, downsample_factor=4)

class InitParamsTests(SimpleTestCase):

    """Test seeded initialization."""

    def test_same_seed_gives_identical_bits(self) -> None:

        """Initialization is a pure function of (arch, seed)."""

        self.assertTrue(init_params(SMALL, 1).bitwise_equal(init_params(SMALL, 1)))
        self.assertFalse(init_params(SMALL, 1).bitwise_equal(init_params(SMALL, 2)))

    def test_biases_and_forget_gate(self) -> None:

        """Biases start at zero except the forget gate, which starts at one."""

        params = init_params(SMALL, 0)

        np.testing.assert_array_equal(params["lstm.gate_f.bias"].data, np.ones(4))
        np.testing.assert_array_equal(params["lstm.gate_i.bias"].data, np.zeros(4))
        np.testing.assert_array_equal(params["fast.conv1.bias"].data, np.zeros(8))

    def test_weights_follow_he_scale(self) -> None:

        """Weight spread is close to sqrt(2 / fan_in)."""

        params = init_params(ArchitectureConfig(), 0)
        weight = params["slow.conv3.weight"].data
        fan_in = weight.shape[1] * weight.shape[2] * weight.shape[3]

        self.assertAlmostEqual(float(weight.std()), math.sqrt(2.0 / fan_in), delta=0.1 * math.sqrt(2.0 / fan_in))

    def test_parameters_are_float32_and_tracked(self) -> None:

        """Every tensor is a float32 leaf that requires grad."""

        params = init_params(SMALL, 0)

        self.assertIsInstance(params, ModelParams)
        self.assertIs(params.arch, SMALL)
        self.assertTrue(all(tensor.requires_grad and tensor.dtype == np.float32 for tensor in params.values()))
        self.assertEqual(list(params), SMALL.parameter_names())

class ConvLayerTests(SimpleTestCase):

    """Test the bound convolution wrapper."""

    def test_bias_must_match_output_channels(self) -> None:

        """Reject a bias of the wrong length."""

        with self.assertRaises(ShapeError):

            ConvLayer(Tensor(np.ones((4, 2, 3, 3))), Tensor(np.zeros(3)))

    def test_transposed_layer_reads_output_channels_from_axis_one(self) -> None:

        """Transposed weights are [Cin, Cout, k, k]."""

        layer = ConvLayer(Tensor(np.ones((4, 2, 4, 4))), Tensor(np.zeros(2)), stride=2, padding=1, transposed=True)

        self.assertEqual(layer(Tensor(np.ones((1, 4, 3, 3)))).shape, (1, 2, 6, 6))

class AdamTests(SimpleTestCase):

    """Test the optimizer update rule."""

    def setUp(self) -> None:

        """One two-entry parameter with a known gradient."""

        self.params = ModelParams({"w": Tensor(np.array([1.0, -1.0]), requires_grad=True)})
        self.params["w"].grad = np.array([0.5, -2.0], dtype=np.float32)

    def test_first_step_moves_each_entry_by_lr_against_its_gradient_sign(self) -> None:

        """Bias correction makes the first update lr * g / (|g| + eps)."""

        state = AdamState.create(self.params, lr=0.01)
        adam_step(self.params, state)

        np.testing.assert_allclose(self.params["w"].data, [0.99, -0.99], rtol=1e-5)
        self.assertEqual(state.t, 1)

    def test_gradients_are_not_modified(self) -> None:

        """The caller owns zeroing."""

        adam_step(self.params, AdamState.create(self.params))

        np.testing.assert_array_equal(self.params["w"].grad, np.array([0.5, -2.0], dtype=np.float32))

    def test_missing_gradient_raises(self) -> None:

        """Every parameter needs a gradient before a step."""

        self.params["w"].grad = None

        with self.assertRaises(ArgumentError):

            adam_step(self.params, AdamState.create(self.params))

    def test_clipping_rescales_to_the_requested_norm(self) -> None:

        """The returned norm is the unclipped one; moments see clipped grads."""

        state = AdamState.create(self.params, lr=0.01)
        norm = adam_step(self.params, state, clip_norm=1.0)

        self.assertAlmostEqual(norm, math.sqrt(0.25 + 4.0), places=6)
        self.assertAlmostEqual(float(np.linalg.norm(state.m["w"] / 0.1)), 1.0, places=5)

    def test_global_grad_norm(self) -> None:

        """L2 norm over every gradient entry."""

        self.assertAlmostEqual(global_grad_norm(self.params), math.sqrt(4.25), places=6)

    def test_bad_hyperparameters_raise(self) -> None:

        """Reject non-positive learning rates and betas outside [0, 1)."""

        with self.assertRaises(ArgumentError):

            AdamState(lr=0.0)

        with self.assertRaises(ArgumentError):

            AdamState(beta1=1.0)

    def test_zero_gradients_leave_parameters_unchanged(self) -> None:

        """m and v stay zero, so the update is zero."""

        before = self.params.copy()
        self.params.zero_grads()
        adam_step(self.params, AdamState.create(self.params))

        self.assertTrue(self.params.bitwise_equal(before))

    def test_single_step_closed_form(self) -> None:

        """Gradient 1 at lr 0.001 moves a scalar down by 0.001 / (1 + 1e-8)."""

        params = ModelParams({"x": Tensor(np.array([0.5]), requires_grad=True)})
        params["x"].grad = np.ones(1, dtype=np.float32)
        adam_step(params, AdamState.create(params, lr=0.001))

        self.assertAlmostEqual(float(params["x"].data[0]), 0.5 - 0.001 / (1.0 + 1e-8), places=6)

    def test_identical_copies_stay_identical(self) -> None:

        """Same parameters, gradients and hyperparameters give the same bits."""

        copy = self.params.copy()
        copy["w"].grad = self.params["w"].grad.copy()
        first, second = AdamState.create(self.params, lr=0.01), AdamState.create(copy, lr=0.01)

        for _ in range(3):

            adam_step(self.params, first)
            adam_step(copy, second)

        self.assertTrue(self.params.bitwise_equal(copy))

    def test_quadratic_converges(self) -> None:

        """Minimizing x^2 from x=1 at lr 0.01 reaches |x| < 0.1 within 500 steps."""

        params = ModelParams({"x": Tensor(np.array([1.0]), requires_grad=True)})
        state = AdamState.create(params, lr=0.01)

        for step in range(1, 501):

            params.zero_grads()
            (params["x"] * params["x"]).sum().backward()
            adam_step(params, state)

            if abs(float(params["x"].data[0])) < 0.1:

                break

        self.assertLess(abs(float(params["x"].data[0])), 0.1)
        self.assertLessEqual(step, 500)
