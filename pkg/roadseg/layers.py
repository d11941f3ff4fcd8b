"""Parameter containers, convolution layers, initialization and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Mapping, Optional, Tuple

import numpy as np

from .exceptions import ArgumentError, ShapeError
from .tensor import ParameterCollection, Tensor, conv2d, conv_transpose2d

if TYPE_CHECKING:

    from .architecture import ArchitectureConfig

SEED_MASK = (1 << 64) - 1

class ModelParams(ParameterCollection):

    """Every trainable tensor of both extractors, the ConvLSTM and the decoder.

    Names are canonical dotted paths ("slow.conv3.weight", "lstm.gate_i.bias")
    and iteration follows ``ArchitectureConfig.parameter_specs`` order.
    """

    def __init__(self, tensors: Mapping[str, Tensor], arch: Optional["ArchitectureConfig"] = None) -> None:

        super().__init__(tensors)
        self.arch = arch

    def _rebuild(self, tensors: Dict[str, Tensor]) -> "ModelParams":

        return ModelParams(tensors, arch=self.arch)

    def num_parameters(self) -> int:

        return sum(tensor.size for tensor in self.values())

@dataclass(frozen=True)
class ParamSpec:

    name: str
    shape: Tuple[int, ...]
    fan_in: int = 1
    init: str = "he"

@dataclass
class ConvLayer:

    """A bound convolution: weights plus the stride/padding it runs with."""

    weight: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0
    transposed: bool = False

    def __post_init__(self) -> None:

        if self.weight.ndim != 4 or min(self.weight.shape[2:]) < 1:

            raise ShapeError(f"Convolution weight must be 4-d with kernel extents >= 1, got {self.weight.shape}.")

        out_channels = self.weight.shape[1] if self.transposed else self.weight.shape[0]

        if self.bias.shape != (out_channels,):

            raise ShapeError(f"Bias shape {self.bias.shape} does not match {out_channels} output channels.")

    @classmethod
    def bind(cls, params: Mapping[str, Tensor], prefix: str, stride: int = 1, padding: int = 0, transposed: bool = False) -> "ConvLayer":

        return cls(params[f"{prefix}.weight"], params[f"{prefix}.bias"], stride, padding, transposed)

    def __call__(self, x: Tensor) -> Tensor:

        if self.transposed:

            return conv_transpose2d(x, self.weight, self.bias, self.stride, self.padding)

        return conv2d(x, self.weight, self.bias, self.stride, self.padding)

def init_params(arch: "ArchitectureConfig", seed: int) -> ModelParams:

    """He-normal weights, zero biases, +1 on the ConvLSTM forget-gate bias."""

    rng = np.random.default_rng(seed & SEED_MASK)
    tensors: Dict[str, Tensor] = {}

    for spec in arch.parameter_specs():

        if spec.init == "he":

            data = rng.standard_normal(spec.shape) * math.sqrt(2.0 / spec.fan_in)

        elif spec.init == "ones":

            data = np.ones(spec.shape)

        else:

            data = np.zeros(spec.shape)

        tensors[spec.name] = Tensor(data, requires_grad=True)

    return ModelParams(tensors, arch=arch)

@dataclass
class AdamState:

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:

        if self.lr <= 0:

            raise ArgumentError(f"Learning rate must be positive, got {self.lr}.")

        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):

            raise ArgumentError("Adam betas must lie in [0, 1).")

    @classmethod
    def create(cls, params: ParameterCollection, **hyper) -> "AdamState":

        state = cls(**hyper)

        for name, tensor in params.items():

            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)

        return state

def global_grad_norm(params: ParameterCollection) -> float:

    return math.sqrt(math.fsum(float(np.square(tensor.grad, dtype=np.float64).sum()) for tensor in params.values()))

def adam_step(params: ParameterCollection, state: AdamState, clip_norm: Optional[float] = None) -> float:

    """Apply one bias-corrected Adam update in place and return the gradient norm.

    Gradients are read, never modified; the caller zeroes them. With
    ``clip_norm`` the update uses gradients rescaled to that global L2 norm.
    """

    for name, tensor in params.items():

        if tensor.grad is None:

            raise ArgumentError(f"Parameter {name} has no gradient.")

    norm = global_grad_norm(params)
    scale = 1.0

    if clip_norm is not None and norm > clip_norm:

        scale = clip_norm / norm

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for name, tensor in params.items():

        grad = tensor.grad * scale if scale != 1.0 else tensor.grad
        m = state.m.setdefault(name, np.zeros_like(tensor.data))
        v = state.v.setdefault(name, np.zeros_like(tensor.data))

        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad

        tensor.data -= (state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps_stab)).astype(tensor.dtype, copy=False)

    return norm
