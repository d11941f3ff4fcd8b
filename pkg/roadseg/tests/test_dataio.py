from django.test import SimpleTestCase
from pathlib import Path
import struct
import tempfile
import numpy as np

from roadseg.architecture import ArchitectureConfig, ExtractorKind, MemoryState, forward_frame
from roadseg.datagen import SceneParams, SequenceSample, generate
from roadseg.dataio import (
    dataset_size,
    export_mask,
    load_checkpoint,
    load_dataset,
    mask_to_pgm,
    save_checkpoint,
    save_dataset,
    write_loss_csv,
    write_metrics_csv,
    write_schedule_csv,
)
from roadseg.exceptions import (
    ArgumentError,
    BadMagicError,
    FormatError,
    MissingParameterError,
    ShapeError,
    TruncatedFileError,
    UnknownParameterError,
    VersionMismatchError,
)
from roadseg.inference import Schedule, ScheduleEntry
from roadseg.layers import ModelParams, init_params
from roadseg.metrics import MetricsRow
from roadseg.tensor import Tensor

SMALL = ArchitectureConfig(input_size=16, feature_channels=8, memory_channels=4, downsample_factor=4)

class TempDirMixin:

    def setUp(self) -> None:

        """Fresh scratch directory per test."""

        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:

        self._tmp.cleanup()

class DatasetContainerTests(TempDirMixin, SimpleTestCase):

    """Test the MGRD dataset container."""

    def setUp(self) -> None:

        """Write a small seeded dataset."""

        super().setUp()
        self.samples = generate(SceneParams(seed=42, num_sequences=2, frames_per_sequence=4, image_size=16))
        self.path = self.tmp / "data.mgrd"
        save_dataset(self.path, self.samples)

    def test_round_trip_is_bitwise(self) -> None:

        """Frames and masks reload bit for bit."""

        loaded = load_dataset(self.path)

        self.assertEqual(len(loaded), 2)

        for original, again in zip(self.samples, loaded):

            self.assertEqual(original.frames.tobytes(), again.frames.tobytes())
            self.assertEqual(original.masks.tobytes(), again.masks.tobytes())

    def test_header_bytes_and_file_length(self) -> None:

        """24-byte little-endian header followed by the exact payload."""

        data = self.path.read_bytes()
        expected_header = b"MGRD" + struct.pack("<HHIIII", 1, 0, 2, 4, 16, 16)

        self.assertEqual(data[:24], expected_header)
        self.assertEqual(len(data), dataset_size(2, 4, 16, 16))
        self.assertEqual(len(data), 24 + 2 * 4 * (3 * 16 * 16 * 4 + 16 * 16))

    def test_size_formula_for_the_standard_dataset(self) -> None:

        """10 sequences of 30 64x64 frames."""

        self.assertEqual(dataset_size(10, 30, 64, 64), 24 + 10 * 30 * (3 * 64 * 64 * 4 + 64 * 64))

    def test_corrupt_magic_raises(self) -> None:

        """Flipping byte 0 is a bad-magic error."""

        data = bytearray(self.path.read_bytes())
        data[0] ^= 0xFF
        self.path.write_bytes(bytes(data))

        with self.assertRaises(BadMagicError):

            load_dataset(self.path)

    def test_version_mismatch_raises(self) -> None:

        """Only version 1 is readable."""

        data = bytearray(self.path.read_bytes())
        data[4:6] = struct.pack("<H", 2)
        self.path.write_bytes(bytes(data))

        with self.assertRaises(VersionMismatchError):

            load_dataset(self.path)

    def test_truncated_file_raises(self) -> None:

        """A short body and a short header are both truncation errors."""

        data = self.path.read_bytes()

        for length in (10, len(data) - 1):

            self.path.write_bytes(data[:length])

            with self.subTest(length=length), self.assertRaises(TruncatedFileError):

                load_dataset(self.path)

    def test_trailing_bytes_raise(self) -> None:

        """The file length must match the header exactly."""

        self.path.write_bytes(self.path.read_bytes() + b"\x00")

        with self.assertRaises(FormatError):

            load_dataset(self.path)

    def test_empty_container_is_rejected(self) -> None:

        """A header with zero sequences or zero frames is a format error."""

        for counts in ((0, 4), (2, 0)):

            path = self.tmp / f"empty{counts[0]}{counts[1]}.mgrd"
            path.write_bytes(b"MGRD" + struct.pack("<HHIIII", 1, 0, *counts, 16, 16))

            with self.subTest(counts=counts), self.assertRaisesMessage(FormatError, "holds no frames"):

                load_dataset(path)

    def test_errors_are_distinct_types(self) -> None:

        """Each malformation has its own class."""

        self.assertEqual(len({BadMagicError, VersionMismatchError, TruncatedFileError}), 3)
        self.assertFalse(issubclass(BadMagicError, TruncatedFileError))

    def test_mismatched_sequences_cannot_be_saved(self) -> None:

        """Every sequence in a container shares one shape."""

        other = generate(SceneParams(seed=1, num_sequences=1, frames_per_sequence=5, image_size=16))

        with self.assertRaises(ShapeError):

            save_dataset(self.tmp / "bad.mgrd", self.samples + other)

class CheckpointTests(TempDirMixin, SimpleTestCase):

    """Test the MGWT weights file."""

    def setUp(self) -> None:

        """Seed-1 parameters of the small architecture."""

        super().setUp()
        self.params = init_params(SMALL, 1)
        self.path = self.tmp / "model.mgwt"
        save_checkpoint(self.path, self.params)

    def test_round_trip_is_bitwise(self) -> None:

        """Names, order, shapes and bits survive."""

        loaded = load_checkpoint(self.path, arch=SMALL)

        self.assertTrue(loaded.bitwise_equal(self.params))

    def test_architecture_is_inferred_from_shapes(self) -> None:

        """Without an explicit arch the checkpoint describes itself."""

        loaded = load_checkpoint(self.path, input_size=16)

        self.assertEqual(loaded.arch, SMALL)

    def test_reloaded_weights_give_identical_forward_outputs(self) -> None:

        """A reloaded checkpoint computes the same logits."""

        image = np.random.default_rng(0).uniform(size=(3, 16, 16)).astype(np.float32)
        loaded = load_checkpoint(self.path, arch=SMALL)

        for kind in ExtractorKind:

            before, _ = forward_frame(image, kind, MemoryState.zeros(SMALL), self.params)
            after, _ = forward_frame(image, kind, MemoryState.zeros(SMALL), loaded)

            self.assertEqual(before.data.tobytes(), after.data.tobytes())

    def test_missing_entry_names_the_parameter(self) -> None:

        """Dropping one tensor is reported by name."""

        partial = ModelParams({name: tensor for name, tensor in self.params.items() if name != "slow.conv3.weight"}, arch=SMALL)
        save_checkpoint(self.path, partial)

        with self.assertRaisesMessage(MissingParameterError, "slow.conv3.weight"):

            load_checkpoint(self.path, arch=SMALL)

    def test_unknown_entry_raises(self) -> None:

        """Extra names are errors, not ignored."""

        extra = dict(self.params.items())
        extra["slow.conv99.weight"] = Tensor(np.zeros((1, 1, 1, 1)))
        save_checkpoint(self.path, ModelParams(extra, arch=SMALL))

        with self.assertRaisesMessage(UnknownParameterError, "slow.conv99.weight"):

            load_checkpoint(self.path, arch=SMALL)

    def test_shape_mismatch_raises(self) -> None:

        """A checkpoint of another width does not load into SMALL."""

        save_checkpoint(self.path, init_params(ArchitectureConfig(input_size=16, feature_channels=6, memory_channels=4, downsample_factor=4), 0))

        with self.assertRaises(ShapeError):

            load_checkpoint(self.path, arch=SMALL)

    def test_bad_magic_raises(self) -> None:

        """A dataset file is not a checkpoint."""

        save_dataset(self.path, generate(SceneParams(seed=1, num_sequences=1, frames_per_sequence=2, image_size=16)))

        with self.assertRaises(BadMagicError):

            load_checkpoint(self.path, arch=SMALL)

    def test_non_utf8_name_keeps_the_decode_error(self) -> None:

        """The format error chains the UnicodeDecodeError."""

        self.path.write_bytes(b"MGWT" + struct.pack("<HI", 1, 1) + struct.pack("<H", 2) + b"\xff\xfe")

        with self.assertRaises(FormatError) as context:

            load_checkpoint(self.path, arch=SMALL)

        self.assertIsInstance(context.exception.__cause__, UnicodeDecodeError)

class MaskExportTests(TempDirMixin, SimpleTestCase):

    """Test binary PGM export."""

    def test_all_confident_pixels_are_white(self) -> None:

        """0.9 everywhere exports as 255 everywhere."""

        path = self.tmp / "mask.pgm"
        export_mask(Tensor(np.full((1, 3, 4), 0.9)), path)

        self.assertEqual(path.read_bytes(), b"P5\n4 3\n255\n" + b"\xff" * 12)

    def test_half_is_not_road(self) -> None:

        """The threshold is strict."""

        self.assertEqual(mask_to_pgm(np.full((1, 1, 1), 0.5)), b"P5\n1 1\n255\n\x00")

    def test_golden_bytes(self) -> None:

        """Row-major pixels after the header."""

        pred = np.array([[[0.1, 0.7], [0.51, 0.49]]])

        self.assertEqual(mask_to_pgm(pred), b"P5\n2 2\n255\n\x00\xff\xff\x00")

    def test_wrong_rank_raises(self) -> None:

        """Only [1,H,W] or [H,W] maps export."""

        with self.assertRaises(ShapeError):

            mask_to_pgm(np.zeros((2, 2, 2)))

class CsvTests(TempDirMixin, SimpleTestCase):

    """Test the CSV writers."""

    def test_empty_metrics_file_has_only_the_header(self) -> None:

        """No rows, one line."""

        path = self.tmp / "metrics.csv"
        write_metrics_csv([], path)

        self.assertEqual(path.read_text(), "name,strategy,avg_iou,avg_fps,temporal_consistency\n")

    def test_golden_metrics_rows_keep_order_and_precision(self) -> None:

        """IoU and TC to 4 decimals, FPS to 2."""

        path = self.tmp / "metrics.csv"
        rows = [
            MetricsRow("sequential", "one-in-10", 0.91234567, 146.019, 1.05),
            MetricsRow("fast", "always-fast", 0.852, 155.4, 0.98766),
        ]
        write_metrics_csv(rows, path)

        self.assertEqual(
            path.read_text(),
            "name,strategy,avg_iou,avg_fps,temporal_consistency\n"
            "sequential,one-in-10,0.9123,146.02,1.0500\n"
            "fast,always-fast,0.8520,155.40,0.9877\n",
        )

    def test_loss_csv_has_one_row_per_epoch(self) -> None:

        """Epochs count from 1."""

        path = self.tmp / "loss.csv"
        write_loss_csv([0.5, 0.25], path)

        self.assertEqual(path.read_text(), "epoch,mean_loss\n1,0.500000\n2,0.250000\n")

    def test_schedule_csv(self) -> None:

        """frame,kind,cleared,latency_s per entry."""

        path = self.tmp / "schedule.csv"
        schedule = Schedule([ScheduleEntry(0, ExtractorKind.SLOW, True, 0.25), ScheduleEntry(1, ExtractorKind.FAST, False, 0.125)])
        write_schedule_csv(schedule, path)

        self.assertEqual(path.read_text(), "frame,kind,cleared,latency_s\n0,slow,1,0.250000\n1,fast,0,0.125000\n")

    def test_loaded_samples_validate_shapes(self) -> None:

        """SequenceSample rejects masks that do not match the frames."""

        with self.assertRaises(ArgumentError):

            SequenceSample(np.zeros((2, 3, 4, 4), dtype=np.float32), np.zeros((2, 1, 4, 5), dtype=np.float32))
