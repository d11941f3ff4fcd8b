"""Fast/slow extractors, the shared ConvLSTM memory and the upsampling decoder."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ArgumentError, MissingParameterError, ShapeError
from .layers import ConvLayer, ModelParams, ParamSpec
from .tensor import Tensor, concat, conv2d

GATES = ("i", "f", "o", "g")
DECODER_MIN_CHANNELS = 4
SLOW_MAX_CHANNELS = 256

class ExtractorKind(enum.IntEnum):

    FAST = 0
    SLOW = 1

    @property
    def label(self) -> str:

        return self.name.lower()

@dataclass(frozen=True)
class LayerSpec:

    name: str
    cin: int
    cout: int
    kernel: int
    stride: int
    padding: int
    activation: bool = True
    transposed: bool = False

    def output_size(self, size: int) -> int:

        if self.transposed:

            return (size - 1) * self.stride - 2 * self.padding + self.kernel

        return (size + 2 * self.padding - self.kernel) // self.stride + 1

    def macs(self, size: int) -> int:

        """Multiply-accumulates for a square input of extent ``size``."""

        if self.transposed:

            return self.cin * self.cout * self.kernel * self.kernel * size * size

        out = self.output_size(size)

        return self.cout * self.cin * self.kernel * self.kernel * out * out

    def weight_shape(self) -> Tuple[int, int, int, int]:

        if self.transposed:

            return (self.cin, self.cout, self.kernel, self.kernel)

        return (self.cout, self.cin, self.kernel, self.kernel)

@dataclass(frozen=True)
class ArchitectureConfig:

    input_size: int = 64
    feature_channels: int = 32
    memory_channels: int = 16
    downsample_factor: int = 8
    gate_kernel: int = 3

    def __post_init__(self) -> None:

        stages = math.log2(self.downsample_factor) if self.downsample_factor > 0 else -1

        if stages < 1 or not float(stages).is_integer():

            raise ArgumentError(f"downsample_factor must be a power of two >= 2, got {self.downsample_factor}.")

        if self.input_size <= 0 or self.input_size % self.downsample_factor:

            raise ArgumentError(f"input_size {self.input_size} is not divisible by {self.downsample_factor}.")

        if self.feature_channels < 1 or self.memory_channels < 1:

            raise ArgumentError("feature_channels and memory_channels must be >= 1.")

        if self.gate_kernel < 1 or self.gate_kernel % 2 == 0:

            raise ArgumentError(f"gate_kernel must be odd and positive, got {self.gate_kernel}.")

    @classmethod
    def desk(cls, input_size: int = 64) -> "ArchitectureConfig":

        return cls(input_size=input_size)

    @classmethod
    def full_scale(cls) -> "ArchitectureConfig":

        return cls(input_size=224, feature_channels=512, memory_channels=128, downsample_factor=32)

    @classmethod
    def from_settings(cls, input_size: Optional[int] = None) -> "ArchitectureConfig":

        from django.conf import settings

        values = dict(getattr(settings, "MEMLANE_ARCH", {}))

        if input_size is not None:

            values["input_size"] = input_size

        return cls(**values)

    @classmethod
    def from_parameter_shapes(cls, shapes: Mapping[str, Tuple[int, ...]], input_size: int) -> "ArchitectureConfig":

        """Recover the configuration a checkpoint was trained with."""

        gate = shapes.get("lstm.gate_i.weight")

        if gate is None or len(gate) != 4:

            raise MissingParameterError("Checkpoint lacks lstm.gate_i.weight.")

        stages = 0

        while f"decoder.deconv{stages + 1}.weight" in shapes:

            stages += 1

        memory_channels = gate[0]

        return cls(
            input_size=input_size,
            feature_channels=gate[1] - memory_channels,
            memory_channels=memory_channels,
            downsample_factor=2 ** stages,
            gate_kernel=gate[2],
        )

    @property
    def stages(self) -> int:

        return int(math.log2(self.downsample_factor))

    @property
    def memory_size(self) -> int:

        return self.input_size // self.downsample_factor

    @property
    def memory_shape(self) -> Tuple[int, int, int]:

        return (self.memory_channels, self.memory_size, self.memory_size)

    @property
    def feature_shape(self) -> Tuple[int, int, int]:

        return (self.feature_channels, self.memory_size, self.memory_size)

    def fast_layers(self) -> List[LayerSpec]:

        layers = []
        channels = 3

        for stage in range(self.stages):

            out = 8 * 2 ** stage
            layers.append(LayerSpec(f"conv{stage + 1}", channels, out, 3, 2, 1))
            channels = out

        layers.append(LayerSpec(f"conv{self.stages + 1}", channels, self.feature_channels, 1, 1, 0, activation=False))

        return layers

    def slow_layers(self) -> List[LayerSpec]:

        layers = [LayerSpec("conv1", 3, 16, 3, 1, 1)]
        channels = 16

        for stage in range(self.stages):

            out = min(32 * 2 ** stage, SLOW_MAX_CHANNELS)
            layers.append(LayerSpec(f"conv{len(layers) + 1}", channels, out, 3, 2, 1))
            layers.append(LayerSpec(f"conv{len(layers) + 1}", out, out, 3, 1, 1))
            channels = out

        layers.append(LayerSpec(f"conv{len(layers) + 1}", channels, self.feature_channels, 1, 1, 0, activation=False))

        return layers

    def decoder_layers(self) -> List[LayerSpec]:

        layers = []
        channels = self.memory_channels

        for stage in range(self.stages):

            out = max(channels // 2, DECODER_MIN_CHANNELS)
            layers.append(LayerSpec(f"deconv{stage + 1}", channels, out, 4, 2, 1, transposed=True))
            channels = out

        layers.append(LayerSpec("head", channels, 1, 1, 1, 0, activation=False))

        return layers

    def extractor_layers(self, kind: ExtractorKind) -> List[LayerSpec]:

        return self.slow_layers() if kind is ExtractorKind.SLOW else self.fast_layers()

    def parameter_specs(self) -> List[ParamSpec]:

        specs = _layer_params("fast", self.fast_layers()) + _layer_params("slow", self.slow_layers())
        gate_in = self.feature_channels + self.memory_channels
        k = self.gate_kernel

        for gate in GATES:

            specs.append(ParamSpec(f"lstm.gate_{gate}.weight", (self.memory_channels, gate_in, k, k), gate_in * k * k))
            specs.append(ParamSpec(f"lstm.gate_{gate}.bias", (self.memory_channels,), init="ones" if gate == "f" else "zeros"))

        return specs + _layer_params("decoder", self.decoder_layers())

    def parameter_names(self) -> List[str]:

        return [spec.name for spec in self.parameter_specs()]

def _layer_params(prefix: str, layers: Sequence[LayerSpec]) -> List[ParamSpec]:

    specs = []

    for layer in layers:

        fan_in = layer.cin * layer.kernel * layer.kernel
        specs.append(ParamSpec(f"{prefix}.{layer.name}.weight", layer.weight_shape(), fan_in))
        specs.append(ParamSpec(f"{prefix}.{layer.name}.bias", (layer.cout,), init="zeros"))

    return specs

def mac_count(arch: ArchitectureConfig, kind: ExtractorKind) -> int:

    """Closed-form sum of Cout*Cin*kh*kw*H'*W' over the extractor's layers."""

    size = arch.input_size
    total = 0

    for layer in arch.extractor_layers(kind):

        total += layer.macs(size)
        size = layer.output_size(size)

    return total

@dataclass
class MemoryState:

    """ConvLSTM hidden state h and cell state c carried across frames."""

    h: Tensor
    c: Tensor

    def __post_init__(self) -> None:

        if self.h.shape != self.c.shape:

            raise ShapeError(f"Memory h {self.h.shape} and c {self.c.shape} differ.")

    @classmethod
    def zeros(cls, arch: ArchitectureConfig) -> "MemoryState":

        return cls(Tensor.zeros(arch.memory_shape), Tensor.zeros(arch.memory_shape))

    @property
    def shape(self) -> Tuple[int, ...]:

        return self.h.shape

    def clear(self) -> None:

        self.h = Tensor.zeros(self.h.shape)
        self.c = Tensor.zeros(self.c.shape)

    def is_zero(self) -> bool:

        return not self.h.data.any() and not self.c.data.any()

def _as_image(image: Union[Tensor, np.ndarray], arch: ArchitectureConfig) -> Tensor:

    image = image if isinstance(image, Tensor) else Tensor(image)
    expected = (3, arch.input_size, arch.input_size)

    if image.shape != expected:

        raise ShapeError(f"Expected image of shape {expected}, got {image.shape}.")

    return image

def _run_stack(x: Tensor, params: ModelParams, prefix: str, layers: Sequence[LayerSpec]) -> Tensor:

    for spec in layers:

        x = ConvLayer.bind(params, f"{prefix}.{spec.name}", spec.stride, spec.padding, spec.transposed)(x)

        if spec.activation:

            x = x.relu()

    return x

def _extract(image: Union[Tensor, np.ndarray], params: ModelParams, kind: ExtractorKind) -> Tensor:

    arch = params.arch
    image = _as_image(image, arch)
    x = image.reshape(1, *image.shape)
    features = _run_stack(x, params, kind.label, arch.extractor_layers(kind))

    return features.reshape(arch.feature_shape)

def extract_fast(image: Union[Tensor, np.ndarray], params: ModelParams) -> Tensor:

    """Low-capacity stack: three stride-2 3x3 convs then a 1x1 projection to F."""

    return _extract(image, params, ExtractorKind.FAST)

def extract_slow(image: Union[Tensor, np.ndarray], params: ModelParams) -> Tensor:

    """High-capacity stack with the same output geometry as extract_fast."""

    return _extract(image, params, ExtractorKind.SLOW)

def extract(image: Union[Tensor, np.ndarray], kind: ExtractorKind, params: ModelParams) -> Tensor:

    return _extract(image, params, kind)

def convlstm_step(feat: Tensor, state: MemoryState, params: ModelParams) -> Tuple[Tensor, MemoryState]:

    """One ConvLSTM step over the channel concatenation [feat; h].

    c' = f*c + i*g and h' = o*tanh(c'); h' is both the output and the next
    hidden state.
    """

    arch = params.arch

    if feat.shape != arch.feature_shape:

        raise ShapeError(f"Feature map {feat.shape} does not match {arch.feature_shape}.")

    if state.shape != arch.memory_shape:

        raise ShapeError(f"Memory state {state.shape} does not match {arch.memory_shape}.")

    channels, size = arch.memory_channels, arch.memory_size
    stacked = concat([feat, state.h], axis=0).reshape(1, arch.feature_channels + channels, size, size)
    weight = concat([params[f"lstm.gate_{gate}.weight"] for gate in GATES], axis=0)
    bias = concat([params[f"lstm.gate_{gate}.bias"] for gate in GATES], axis=0)
    gates = conv2d(stacked, weight, bias, stride=1, padding=arch.gate_kernel // 2).reshape(4 * channels, size, size)

    input_gate = gates.narrow(0, 0, channels).sigmoid()
    forget_gate = gates.narrow(0, channels, 2 * channels).sigmoid()
    output_gate = gates.narrow(0, 2 * channels, 3 * channels).sigmoid()
    candidate = gates.narrow(0, 3 * channels, 4 * channels).tanh()

    c_next = forget_gate * state.c + input_gate * candidate
    h_next = output_gate * c_next.tanh()

    return h_next, MemoryState(h_next, c_next)

def decode(mem_out: Tensor, params: ModelParams) -> Tensor:

    """Upsample the memory output to a 1xHxW road-logit map."""

    arch = params.arch

    if mem_out.shape != arch.memory_shape or mem_out.shape[1] * arch.downsample_factor != arch.input_size:

        raise ShapeError(f"Decoder input {mem_out.shape} does not match {arch.memory_shape}.")

    x = mem_out.reshape(1, *mem_out.shape)
    logits = _run_stack(x, params, "decoder", arch.decoder_layers())

    return logits.reshape(1, arch.input_size, arch.input_size)

def forward_frame(
    image: Union[Tensor, np.ndarray],
    kind: ExtractorKind,
    state: MemoryState,
    params: ModelParams,
) -> Tuple[Tensor, MemoryState]:

    """extract_{kind} -> convlstm_step -> decode; the input state is left untouched."""

    features = extract(image, kind, params)
    mem_out, next_state = convlstm_step(features, state, params)

    return decode(mem_out, params), next_state

def describe(arch: ArchitectureConfig) -> Dict[str, int]:

    """Analytic cost summary used by the profile command."""

    return {
        "fast_macs": mac_count(arch, ExtractorKind.FAST),
        "slow_macs": mac_count(arch, ExtractorKind.SLOW),
        "parameters": sum(math.prod(spec.shape) for spec in arch.parameter_specs()),
    }
