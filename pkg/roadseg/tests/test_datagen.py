from django.test import SimpleTestCase
import numpy as np

from roadseg.datagen import (
    MAX_ROAD_FRACTION,
    MIN_ROAD_FRACTION,
    SceneParams,
    flip_augment,
    generate,
    generate_sequence,
    split_sequences,
)
from roadseg.exceptions import ArgumentError, GenerationError
from roadseg.utils.prng import SplitMix64, mix64

class SplitMix64Tests(SimpleTestCase):

    """Test the portable PRNG stream."""

    def test_reference_output(self) -> None:

        """First output for seed 0 is the published splitmix64 value."""

        self.assertEqual(SplitMix64(0).next_u64(), 0xE220A8397B1DCDAF)

    def test_uniform_array_matches_sequential_draws(self) -> None:

        """Bulk draws equal repeated random() calls and advance the stream equally."""

        bulk, single = SplitMix64(5), SplitMix64(5)
        values = bulk.uniform_array((2, 3))
        expected = [single.random() for _ in range(6)]

        np.testing.assert_array_equal(values.reshape(-1), expected)
        self.assertEqual(bulk.next_u64(), single.next_u64())

    def test_random_lies_in_unit_interval(self) -> None:

        """Uniform draws are in [0, 1)."""

        values = SplitMix64(9).uniform_array((10000,))

        self.assertGreaterEqual(values.min(), 0.0)
        self.assertLess(values.max(), 1.0)
        self.assertAlmostEqual(float(values.mean()), 0.5, delta=0.02)

    def test_derive_does_not_advance_the_parent(self) -> None:

        """Substreams are keyed by index and independent of each other."""

        rng = SplitMix64(42)
        first = rng.derive(0).next_u64()

        self.assertEqual(rng.derive(0).next_u64(), first)
        self.assertNotEqual(rng.derive(1).next_u64(), first)
        self.assertEqual(rng.next_u64(), SplitMix64(42).next_u64())

    def test_mix64_is_a_bijection_on_samples(self) -> None:

        """Distinct inputs give distinct outputs."""

        self.assertEqual(len({mix64(value) for value in range(1000)}), 1000)

class GeneratorTests(SimpleTestCase):

    """Test the procedural road generator."""

    def setUp(self) -> None:

        """A small default-dynamics dataset."""

        self.params = SceneParams(seed=42, num_sequences=3, frames_per_sequence=12, image_size=32)
        self.samples = generate(self.params)

    def test_same_seed_gives_identical_bytes(self) -> None:

        """Generation is deterministic, serially or threaded."""

        again = generate(self.params, workers=3)

        for first, second in zip(self.samples, again):

            self.assertEqual(first.frames.tobytes(), second.frames.tobytes())
            self.assertEqual(first.masks.tobytes(), second.masks.tobytes())

    def test_shapes_and_value_ranges(self) -> None:

        """Frames are [T,3,H,W] in [0,1]; masks are binary [T,1,H,W]."""

        sample = self.samples[0]

        self.assertEqual(sample.frames.shape, (12, 3, 32, 32))
        self.assertEqual(sample.masks.shape, (12, 1, 32, 32))
        self.assertGreaterEqual(sample.frames.min(), 0.0)
        self.assertLessEqual(sample.frames.max(), 1.0)
        self.assertTrue(np.isin(sample.masks, (0.0, 1.0)).all())

    def test_every_sequence_satisfies_its_invariants(self) -> None:

        """Road fraction stays within bounds and masks move smoothly."""

        for sample in self.samples:

            fractions = sample.road_fractions()

            self.assertEqual(sample.violations(), [])
            self.assertGreaterEqual(fractions.min(), MIN_ROAD_FRACTION)
            self.assertLessEqual(fractions.max(), MAX_ROAD_FRACTION)
            self.assertGreaterEqual(np.mean(sample.consecutive_ious()), 0.6)

    def test_sky_is_never_road(self) -> None:

        """Rows at or above the horizon are background."""

        horizon = int(self.params.horizon_row)

        for sample in self.samples:

            self.assertFalse(sample.masks[:, :, :horizon + 1].any())

    def test_frozen_dynamics_repeat_the_first_frame(self) -> None:

        """Zero curvature noise and drift give identical frames."""

        params = SceneParams(seed=3, num_sequences=1, frames_per_sequence=5, image_size=32, curvature_noise_std=0.0, lateral_drift_std=0.0)
        sample = generate_sequence(params, 0)

        for t in range(1, 5):

            np.testing.assert_array_equal(sample.frames[t], sample.frames[0])
            np.testing.assert_array_equal(sample.masks[t], sample.masks[0])

    def test_sequences_are_independent_of_their_neighbours(self) -> None:

        """Sequence i depends only on (seed, i)."""

        alone = generate_sequence(self.params, 2)

        self.assertEqual(alone.frames.tobytes(), self.samples[2].frames.tobytes())

    def test_exhausted_retries_raise_with_context(self) -> None:

        """A road of zero width can never satisfy the road fraction."""

        params = SceneParams(seed=1, num_sequences=1, frames_per_sequence=3, image_size=16, road_base_width=0.0, max_retries=2)

        with self.assertRaises(GenerationError) as context:

            generate(params)

        self.assertEqual(context.exception.sequence_index, 0)
        self.assertIs(context.exception.params, params)

    def test_invalid_parameters_raise(self) -> None:

        """Reject a horizon outside the image and negative counts."""

        with self.assertRaises(ArgumentError):

            SceneParams(horizon_fraction=1.0)

        with self.assertRaises(ArgumentError):

            SceneParams(num_sequences=-1)

class AugmentAndSplitTests(SimpleTestCase):

    """Test flip augmentation and the sequence split."""

    def setUp(self) -> None:

        """Four short sequences."""

        self.samples = generate(SceneParams(seed=7, num_sequences=4, frames_per_sequence=4, image_size=16))

    def test_flip_appends_mirrored_copies(self) -> None:

        """Augmentation doubles the dataset; flipping twice restores the original."""

        augmented = flip_augment(self.samples)

        self.assertEqual(len(augmented), 8)
        self.assertTrue(augmented[4].flipped)
        np.testing.assert_array_equal(augmented[4].masks, self.samples[0].masks[..., ::-1])
        np.testing.assert_array_equal(augmented[4].flip().frames, self.samples[0].frames)

    def test_split_holds_out_the_last_sequences(self) -> None:

        """0.25 of four sequences leaves three for training."""

        train, val = split_sequences(self.samples, 0.25)

        self.assertEqual([sample.index for sample in train], [0, 1, 2])
        self.assertEqual([sample.index for sample in val], [3])

    def test_split_fraction_must_be_below_one(self) -> None:

        """A split needs something left to train on."""

        with self.assertRaises(ArgumentError):

            split_sequences(self.samples, 1.0)
