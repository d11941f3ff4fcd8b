"""Little-endian dataset/checkpoint containers, PGM mask export and CSV writers.

MGRD (dataset):
    header  <4sHHIIII  magic "MGRD", version, reserved, sequences, frames, height, width
    body    per sequence: frames float32 [T,3,H,W], then masks uint8 {0,1} [T,H,W]

MGWT (weights):
    header  <4sHI      magic "MGWT", version, entry count
    entry   u16 name length, UTF-8 name, u8 rank, u32 extents[rank], float32 payload
"""

from __future__ import annotations

import csv
import logging
import os
import struct
from pathlib import Path
from typing import TYPE_CHECKING, BinaryIO, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .architecture import ArchitectureConfig
from .exceptions import (
    BadMagicError,
    FormatError,
    MissingParameterError,
    ShapeError,
    TruncatedFileError,
    UnknownParameterError,
    VersionMismatchError,
)
from .layers import ModelParams
from .tensor import Tensor

if TYPE_CHECKING:

    from .datagen import SequenceSample
    from .inference import Schedule
    from .metrics import MetricsRow

logger = logging.getLogger(__name__)

PathLike = Union[str, "os.PathLike[str]"]

DATASET_MAGIC = b"MGRD"
CHECKPOINT_MAGIC = b"MGWT"
FORMAT_VERSION = 1

DATASET_HEADER = struct.Struct("<4sHHIIII")
CHECKPOINT_HEADER = struct.Struct("<4sHI")

FLOAT_LE = np.dtype("<f4")

METRICS_HEADER = ("name", "strategy", "avg_iou", "avg_fps", "temporal_consistency")

def dataset_size(num_sequences: int, frames: int, height: int, width: int) -> int:

    """Exact MGRD file length in bytes."""

    per_frame = 3 * height * width * FLOAT_LE.itemsize + height * width

    return DATASET_HEADER.size + num_sequences * frames * per_frame

def _read_exact(handle: BinaryIO, count: int, what: str) -> bytes:

    data = handle.read(count)

    if len(data) != count:

        raise TruncatedFileError(f"Truncated file: expected {count} bytes of {what}, found {len(data)}.")

    return data

def _check_magic(magic: bytes, expected: bytes, version: int) -> None:

    if magic != expected:

        raise BadMagicError(f"Bad magic {magic!r}; expected {expected!r}.")

    if version != FORMAT_VERSION:

        raise VersionMismatchError(f"Unsupported format version {version}; expected {FORMAT_VERSION}.")

def _check_at_end(handle: BinaryIO) -> None:

    if handle.read(1):

        raise FormatError("Trailing bytes after the last declared record.")

def save_dataset(path: PathLike, samples: Sequence["SequenceSample"]) -> None:

    if not samples:

        raise ShapeError("A dataset needs at least one sequence.")

    frames, _, height, width = samples[0].frames.shape

    for sample in samples:

        if sample.frames.shape != (frames, 3, height, width):

            raise ShapeError(f"All sequences must share shape {(frames, 3, height, width)}, got {sample.frames.shape}.")

    with open(path, "wb") as handle:

        handle.write(DATASET_HEADER.pack(DATASET_MAGIC, FORMAT_VERSION, 0, len(samples), frames, height, width))

        for sample in samples:

            handle.write(np.ascontiguousarray(sample.frames, dtype=FLOAT_LE).tobytes())
            handle.write(np.ascontiguousarray(sample.masks[:, 0] > 0.5, dtype=np.uint8).tobytes())

    logger.debug("Saved %d sequence(s) to %s", len(samples), path)

def load_dataset(path: PathLike) -> List["SequenceSample"]:

    """Read an MGRD file; each malformation raises its own FormatError subclass.

    A header declaring zero sequences is rejected like any other malformation.
    """

    from .datagen import SequenceSample

    with open(path, "rb") as handle:

        magic, version, _, count, frames, height, width = DATASET_HEADER.unpack(_read_exact(handle, DATASET_HEADER.size, "header"))
        _check_magic(magic, DATASET_MAGIC, version)

        if count == 0 or frames == 0:

            raise FormatError(f"Dataset {path} holds no frames ({count} sequence(s) of {frames}).")

        frame_values = frames * 3 * height * width
        mask_values = frames * height * width
        samples: List[SequenceSample] = []

        for index in range(count):

            data = np.frombuffer(_read_exact(handle, frame_values * FLOAT_LE.itemsize, f"sequence {index} frames"), dtype=FLOAT_LE)
            mask = np.frombuffer(_read_exact(handle, mask_values, f"sequence {index} masks"), dtype=np.uint8)

            if mask.max(initial=0) > 1:

                raise FormatError(f"Sequence {index} has a non-binary mask.")

            samples.append(SequenceSample(
                frames=data.astype(np.float32).reshape(frames, 3, height, width),
                masks=mask.astype(np.float32).reshape(frames, 1, height, width),
                index=index,
            ))

        _check_at_end(handle)

    return samples

def save_checkpoint(path: PathLike, params: ModelParams) -> None:

    with open(path, "wb") as handle:

        handle.write(CHECKPOINT_HEADER.pack(CHECKPOINT_MAGIC, FORMAT_VERSION, len(params)))

        for name, tensor in params.items():

            encoded = name.encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<B", tensor.ndim))
            handle.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            handle.write(np.ascontiguousarray(tensor.data, dtype=FLOAT_LE).tobytes())

    logger.debug("Saved %d parameter tensor(s) to %s", len(params), path)

def read_checkpoint_entries(path: PathLike) -> Dict[str, np.ndarray]:

    """Raw name -> float32 array entries of an MGWT file, in file order."""

    entries: Dict[str, np.ndarray] = {}

    with open(path, "rb") as handle:

        magic, version, count = CHECKPOINT_HEADER.unpack(_read_exact(handle, CHECKPOINT_HEADER.size, "header"))
        _check_magic(magic, CHECKPOINT_MAGIC, version)

        for _ in range(count):

            (length,) = struct.unpack("<H", _read_exact(handle, 2, "name length"))

            try:

                name = _read_exact(handle, length, "name").decode("utf-8")

            except UnicodeDecodeError as exc:

                raise FormatError(f"Parameter name is not UTF-8: {exc}.") from exc

            (rank,) = struct.unpack("<B", _read_exact(handle, 1, f"{name} rank"))
            shape = struct.unpack(f"<{rank}I", _read_exact(handle, 4 * rank, f"{name} extents"))
            count_values = int(np.prod(shape, dtype=np.int64))
            payload = _read_exact(handle, count_values * FLOAT_LE.itemsize, f"{name} payload")

            if name in entries:

                raise FormatError(f"Parameter {name} appears more than once.")

            entries[name] = np.frombuffer(payload, dtype=FLOAT_LE).astype(np.float32).reshape(shape)

        _check_at_end(handle)

    return entries

def load_checkpoint(path: PathLike, arch: Optional[ArchitectureConfig] = None, input_size: Optional[int] = None) -> ModelParams:

    """Load an MGWT file against ``arch`` (inferred from the shapes when omitted).

    Every expected parameter must appear exactly once with its exact shape.
    """

    entries = read_checkpoint_entries(path)

    if arch is None:

        if input_size is None:

            input_size = ArchitectureConfig.from_settings().input_size

        arch = ArchitectureConfig.from_parameter_shapes({name: array.shape for name, array in entries.items()}, input_size)

    expected = arch.parameter_specs()
    names = {spec.name for spec in expected}
    unknown = [name for name in entries if name not in names]

    if unknown:

        raise UnknownParameterError(f"Unknown parameter(s) in checkpoint: {', '.join(unknown)}.")

    tensors: Dict[str, Tensor] = {}

    for spec in expected:

        if spec.name not in entries:

            raise MissingParameterError(f"Checkpoint is missing parameter {spec.name}.")

        array = entries[spec.name]

        if array.shape != tuple(spec.shape):

            raise ShapeError(f"Parameter {spec.name} has shape {array.shape}; expected {tuple(spec.shape)}.")

        tensors[spec.name] = Tensor(array, requires_grad=True, dtype=np.float32)

    return ModelParams(tensors, arch=arch)

def mask_to_pgm(pred: Union[Tensor, np.ndarray], threshold: float = 0.5) -> bytes:

    """Binary P5 image: 255 where the probability is strictly above ``threshold``."""

    array = pred.data if isinstance(pred, Tensor) else np.asarray(pred)

    if array.ndim == 3 and array.shape[0] == 1:

        array = array[0]

    if array.ndim != 2:

        raise ShapeError(f"Expected a [1,H,W] probability map, got {array.shape}.")

    height, width = array.shape
    pixels = np.where(array > threshold, 255, 0).astype(np.uint8)

    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()

def export_mask(pred: Union[Tensor, np.ndarray], path: PathLike) -> None:

    Path(path).write_bytes(mask_to_pgm(pred))

def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:

    with open(path, "w", newline="", encoding="utf-8") as handle:

        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

def write_metrics_csv(rows: Sequence["MetricsRow"], path: PathLike) -> None:

    _write_rows(path, METRICS_HEADER, (
        (row.name, row.strategy, f"{row.avg_iou:.4f}", f"{row.avg_fps:.2f}", f"{row.temporal_consistency:.4f}")
        for row in rows
    ))

def write_loss_csv(epoch_losses: Sequence[float], path: PathLike) -> None:

    _write_rows(path, ("epoch", "mean_loss"), ((epoch, f"{loss:.6f}") for epoch, loss in enumerate(epoch_losses, start=1)))

def write_schedule_csv(schedule: "Schedule", path: PathLike) -> None:

    _write_rows(path, ("frame", "kind", "cleared", "latency_s"), (
        (entry.frame_index, entry.kind.label, int(entry.cleared), f"{entry.latency_s:.6f}")
        for entry in schedule.entries
    ))
