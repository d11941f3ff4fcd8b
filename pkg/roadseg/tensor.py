"""Dense N-d tensors with reverse-mode automatic differentiation.

Every array in the model (images, features, masks, parameters) travels as a
``Tensor``. Forward ops record a ``Function`` node holding whatever the backward
rule needs; ``Tensor.backward`` walks those nodes once in reverse topological
order and accumulates gradients additively into the leaves.
"""

from __future__ import annotations

import contextlib
import math
import threading
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ArgumentError, NumericalError, ShapeError

ArrayLike = Union[np.ndarray, float, int, Sequence]

class _EngineState(threading.local):

    def __init__(self) -> None:

        self.dtype = np.float32
        self.grad_enabled = True

_STATE = _EngineState()

def working_dtype() -> type:

    return _STATE.dtype

def is_grad_enabled() -> bool:

    return _STATE.grad_enabled

@contextlib.contextmanager
def precision(dtype: type) -> Iterator[None]:

    """Switch the dtype new tensors are created with (float32 or float64)."""

    if np.dtype(dtype) not in (np.dtype(np.float32), np.dtype(np.float64)):

        raise ArgumentError(f"Unsupported precision {dtype!r}.")

    previous = _STATE.dtype
    _STATE.dtype = dtype

    try:

        yield

    finally:

        _STATE.dtype = previous

@contextlib.contextmanager
def no_grad() -> Iterator[None]:

    """Run forward ops without recording a graph."""

    previous = _STATE.grad_enabled
    _STATE.grad_enabled = False

    try:

        yield

    finally:

        _STATE.grad_enabled = previous

class Tensor:

    """N-d array of real scalars with an optional gradient accumulator."""

    __slots__ = ("data", "requires_grad", "grad", "_ctx")

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype: Optional[type] = None) -> None:

        self.data: np.ndarray = np.array(data, dtype=dtype or _STATE.dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._ctx: Optional[Function] = None

        if self.data.ndim and 0 in self.data.shape:

            raise ShapeError(f"Tensor extents must be positive, got {self.data.shape}.")

    @classmethod
    def _wrap(cls, data: np.ndarray, requires_grad: bool, ctx: Optional["Function"]) -> "Tensor":

        tensor = cls.__new__(cls)
        tensor.data = data
        tensor.requires_grad = requires_grad
        tensor.grad = None
        tensor._ctx = ctx

        return tensor

    @classmethod
    def zeros(cls, shape: Sequence[int], requires_grad: bool = False) -> "Tensor":

        return cls(np.zeros(tuple(shape)), requires_grad=requires_grad)

    @property
    def shape(self) -> Tuple[int, ...]:

        return self.data.shape

    @property
    def ndim(self) -> int:

        return self.data.ndim

    @property
    def size(self) -> int:

        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:

        return self.data.dtype

    def item(self) -> float:

        if self.size != 1:

            raise ArgumentError(f"item() needs a single element, tensor has shape {self.shape}.")

        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:

        self.grad = np.zeros_like(self.data)

    def flat_index(self, index: Sequence[int]) -> int:

        """Row-major offset of a multi-index, e.g. ((n*C+c)*H+h)*W+w."""

        if len(index) != self.ndim:

            raise ShapeError(f"Index {tuple(index)} does not match rank {self.ndim}.")

        offset = 0

        for position, extent in zip(index, self.shape):

            if not 0 <= position < extent:

                raise ArgumentError(f"Index {tuple(index)} out of range for shape {self.shape}.")

            offset = offset * extent + position

        return offset

    def __repr__(self) -> str:

        flag = ", requires_grad=True" if self.requires_grad else ""

        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __add__(self, other: "Tensor") -> "Tensor":

        return Add.apply(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":

        return Sub.apply(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":

        return Mul.apply(self, other)

    def __neg__(self) -> "Tensor":

        return Neg.apply(self)

    def sum(self) -> "Tensor":

        return Sum.apply(self)

    def mean(self) -> "Tensor":

        return Mean.apply(self)

    def reshape(self, *shape: int) -> "Tensor":

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):

            shape = tuple(shape[0])

        return Reshape.apply(self, shape=tuple(shape))

    def narrow(self, axis: int, start: int, stop: int) -> "Tensor":

        return Slice.apply(self, axis=axis, start=start, stop=stop)

    def relu(self) -> "Tensor":

        return Relu.apply(self)

    def sigmoid(self) -> "Tensor":

        return Sigmoid.apply(self)

    def tanh(self) -> "Tensor":

        return Tanh.apply(self)

    def graph(self) -> List["Tensor"]:

        """Nodes reachable from this tensor, parents before children."""

        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]

        while stack:

            node, expanded = stack.pop()

            if expanded:

                order.append(node)
                continue

            if id(node) in visited:

                continue

            visited.add(id(node))
            stack.append((node, True))

            if node._ctx is not None:

                for parent in node._ctx.parents:

                    if id(parent) not in visited:

                        stack.append((parent, False))

        return order

    def backward(self) -> None:

        """Accumulate d(self)/d(leaf) into every tracked leaf's grad."""

        if self.size != 1:

            raise ArgumentError(f"backward() needs a scalar root, got shape {self.shape}.")

        pending: Dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}

        for node in reversed(self.graph()):

            grad = pending.pop(id(node), None)

            if grad is None:

                continue

            if node._ctx is None:

                if node.requires_grad:

                    if node.grad is None:

                        node.grad = np.zeros_like(node.data)

                    node.grad += grad

                continue

            for parent, parent_grad in zip(node._ctx.parents, node._ctx.backward(grad)):

                if parent_grad is None or not parent.requires_grad:

                    continue

                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

class Function:

    """One recorded forward op; subclasses implement forward and backward."""

    def __init__(self, *parents: Tensor) -> None:

        self.parents = parents

    def forward(self, *arrays: np.ndarray, **kwargs) -> np.ndarray:

        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:

        raise NotImplementedError

    @classmethod
    def apply(cls, *parents: Tensor, **kwargs) -> Tensor:

        fn = cls(*parents)
        out = fn.forward(*(parent.data for parent in parents), **kwargs)

        if not np.isfinite(out).all():

            raise NumericalError(f"{cls.__name__} produced a non-finite value.")

        requires_grad = _STATE.grad_enabled and any(parent.requires_grad for parent in parents)

        return Tensor._wrap(out, requires_grad, fn if requires_grad else None)

def _same_shape(op: str, a: np.ndarray, b: np.ndarray) -> None:

    if a.shape != b.shape:

        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ.")

class Add(Function):

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:

        _same_shape("add", a, b)

        return a + b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:

        return grad, grad

class Sub(Function):

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:

        _same_shape("sub", a, b)

        return a - b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:

        return grad, -grad

class Mul(Function):

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:

        _same_shape("mul", a, b)
        self.a, self.b = a, b

        return a * b

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:

        return grad * self.b, grad * self.a

class Neg(Function):

    def forward(self, a: np.ndarray) -> np.ndarray:

        return -a

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (-grad,)

class Sum(Function):

    def forward(self, a: np.ndarray) -> np.ndarray:

        self.like = a

        return np.asarray(a.sum(), dtype=a.dtype)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (np.full_like(self.like, grad),)

class Mean(Function):

    def forward(self, a: np.ndarray) -> np.ndarray:

        self.like = a

        return np.asarray(a.mean(), dtype=a.dtype)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (np.full_like(self.like, grad / self.like.size),)

class Reshape(Function):

    def forward(self, a: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:

        if math.prod(shape) != a.size:

            raise ShapeError(f"Cannot reshape {a.shape} into {shape}.")

        self.original = a.shape

        return a.reshape(shape)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (grad.reshape(self.original),)

class Concat(Function):

    def forward(self, *arrays: np.ndarray, axis: int = 0) -> np.ndarray:

        self.axis = axis
        self.sizes = [array.shape[axis] for array in arrays]

        try:

            return np.concatenate(arrays, axis=axis)

        except ValueError as exc:

            raise ShapeError(f"concat along axis {axis}: {exc}") from exc

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, ...]:

        edges = np.cumsum(self.sizes)[:-1]

        return tuple(np.split(grad, edges, axis=self.axis))

class Slice(Function):

    def forward(self, a: np.ndarray, axis: int, start: int, stop: int) -> np.ndarray:

        if not 0 <= start < stop <= a.shape[axis]:

            raise ShapeError(f"Slice [{start}:{stop}] out of range for axis {axis} of {a.shape}.")

        self.shape = a.shape
        self.index = tuple(slice(start, stop) if dim == axis else slice(None) for dim in range(a.ndim))

        return a[self.index]

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        full = np.zeros(self.shape, dtype=grad.dtype)
        full[self.index] = grad

        return (full,)

class Relu(Function):

    def forward(self, a: np.ndarray) -> np.ndarray:

        self.mask = a > 0

        return np.where(self.mask, a, 0).astype(a.dtype, copy=False)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (grad * self.mask,)

def _stable_sigmoid(a: np.ndarray) -> np.ndarray:

    out = np.empty_like(a)
    positive = a >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-a[positive]))
    exp_a = np.exp(a[~positive])
    out[~positive] = exp_a / (1.0 + exp_a)

    return out

class Sigmoid(Function):

    def forward(self, a: np.ndarray) -> np.ndarray:

        self.out = _stable_sigmoid(a)

        return self.out

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (grad * self.out * (1 - self.out),)

class Tanh(Function):

    def forward(self, a: np.ndarray) -> np.ndarray:

        self.out = np.tanh(a)

        return self.out

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        return (grad * (1 - self.out * self.out),)

def _check_conv_args(stride: int, padding: int) -> None:

    if not isinstance(stride, (int, np.integer)) or stride <= 0:

        raise ArgumentError(f"stride must be a positive int, got {stride!r}.")

    if not isinstance(padding, (int, np.integer)) or padding < 0:

        raise ArgumentError(f"padding must be a nonnegative int, got {padding!r}.")

def _im2col(padded: np.ndarray, kh: int, kw: int, stride: int, out_h: int, out_w: int) -> np.ndarray:

    """(N, C, Hp, Wp) -> (N, C*kh*kw, out_h*out_w); row index is c*kh*kw + i*kw + j."""

    n, channels = padded.shape[:2]
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride][:, :, :out_h, :out_w]

    return windows.transpose(0, 1, 4, 5, 2, 3).reshape(n, channels * kh * kw, out_h * out_w)

def _col2im(cols: np.ndarray, padded_shape: Tuple[int, ...], kh: int, kw: int, stride: int, out_h: int, out_w: int) -> np.ndarray:

    """Scatter-add inverse of _im2col (its adjoint)."""

    n, channels = padded_shape[:2]
    cols = cols.reshape(n, channels, kh, kw, out_h, out_w)
    out = np.zeros(padded_shape, dtype=cols.dtype)

    for i in range(kh):

        for j in range(kw):

            out[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += cols[:, :, i, j]

    return out

def _pad(array: np.ndarray, padding: int) -> np.ndarray:

    if not padding:

        return array

    return np.pad(array, ((0, 0), (0, 0), (padding, padding), (padding, padding)))

class Conv2d(Function):

    def forward(self, x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int) -> np.ndarray:

        _check_conv_args(stride, padding)

        if x.ndim != 4 or weight.ndim != 4 or bias.ndim != 1:

            raise ShapeError(f"conv2d expects 4-d input/weight and 1-d bias, got {x.shape}, {weight.shape}, {bias.shape}.")

        n, cin, h, w = x.shape
        cout, weight_cin, kh, kw = weight.shape

        if weight_cin != cin:

            raise ShapeError(f"conv2d: input has {cin} channels, weight expects {weight_cin}.")

        if bias.shape[0] != cout:

            raise ShapeError(f"conv2d: bias has {bias.shape[0]} entries for {cout} output channels.")

        if h + 2 * padding < kh or w + 2 * padding < kw:

            raise ShapeError(f"conv2d: kernel {kh}x{kw} larger than padded input {h + 2 * padding}x{w + 2 * padding}.")

        out_h = (h + 2 * padding - kh) // stride + 1
        out_w = (w + 2 * padding - kw) // stride + 1
        padded = _pad(x, padding)

        self.geometry = (x.shape, padded.shape, kh, kw, stride, padding, out_h, out_w)
        self.cols = _im2col(padded, kh, kw, stride, out_h, out_w)
        self.weight_2d = weight.reshape(cout, -1)
        self.weight_shape = weight.shape

        out = np.matmul(self.weight_2d, self.cols)
        out += bias[None, :, None]

        return out.reshape(n, cout, out_h, out_w)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:

        x_shape, padded_shape, kh, kw, stride, padding, out_h, out_w = self.geometry
        grad_2d = grad.reshape(grad.shape[0], grad.shape[1], -1)

        grad_weight = np.tensordot(grad_2d, self.cols, axes=([0, 2], [0, 2])).reshape(self.weight_shape)
        grad_bias = grad_2d.sum(axis=(0, 2))
        grad_padded = _col2im(np.matmul(self.weight_2d.T, grad_2d), padded_shape, kh, kw, stride, out_h, out_w)
        grad_x = grad_padded[:, :, padding:padding + x_shape[2], padding:padding + x_shape[3]]

        return grad_x, grad_weight, grad_bias

class ConvTranspose2d(Function):

    def forward(self, x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, padding: int) -> np.ndarray:

        _check_conv_args(stride, padding)

        if x.ndim != 4 or weight.ndim != 4 or bias.ndim != 1:

            raise ShapeError(f"conv_transpose2d expects 4-d input/weight and 1-d bias, got {x.shape}, {weight.shape}, {bias.shape}.")

        n, cin, h, w = x.shape
        weight_cin, cout, kh, kw = weight.shape

        if weight_cin != cin:

            raise ShapeError(f"conv_transpose2d: input has {cin} channels, weight expects {weight_cin}.")

        if bias.shape[0] != cout:

            raise ShapeError(f"conv_transpose2d: bias has {bias.shape[0]} entries for {cout} output channels.")

        full_h = (h - 1) * stride + kh
        full_w = (w - 1) * stride + kw

        if full_h - 2 * padding < 1 or full_w - 2 * padding < 1:

            raise ShapeError(f"conv_transpose2d: padding {padding} leaves no output for input {h}x{w}.")

        self.geometry = (x.shape, (n, cout, full_h, full_w), kh, kw, stride, padding)
        self.x_2d = x.reshape(n, cin, h * w)
        self.weight_2d = weight.reshape(cin, -1)
        self.weight_shape = weight.shape

        cols = np.matmul(self.weight_2d.T, self.x_2d)
        full = _col2im(cols, (n, cout, full_h, full_w), kh, kw, stride, h, w)
        out = full[:, :, padding:full_h - padding, padding:full_w - padding]

        return out + bias[None, :, None, None]

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:

        x_shape, _, kh, kw, stride, padding = self.geometry
        cols = _im2col(_pad(grad, padding), kh, kw, stride, x_shape[2], x_shape[3])

        grad_x = np.matmul(self.weight_2d, cols).reshape(x_shape)
        grad_weight = np.tensordot(self.x_2d, cols, axes=([0, 2], [0, 2])).reshape(self.weight_shape)
        grad_bias = grad.sum(axis=(0, 2, 3))

        return grad_x, grad_weight, grad_bias

class BCEWithLogits(Function):

    def forward(self, logits: np.ndarray, targets: np.ndarray) -> np.ndarray:

        _same_shape("bce_with_logits", logits, targets)

        if ((targets < 0) | (targets > 1)).any():

            raise ArgumentError("bce_with_logits targets must lie in [0, 1].")

        self.logits, self.targets = logits, targets
        losses = np.maximum(logits, 0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))

        return np.asarray(losses.mean(), dtype=logits.dtype)

    def backward(self, grad: np.ndarray) -> Tuple[np.ndarray]:

        scale = grad / self.logits.size

        return ((_stable_sigmoid(self.logits) - self.targets) * scale,)

def _as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:

    return value if isinstance(value, Tensor) else Tensor(value)

def conv2d(input: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:

    """Cross-correlation with zero padding; output extent floor((H+2p-k)/s)+1."""

    return Conv2d.apply(input, weight, bias, stride=stride, padding=padding)

def conv_transpose2d(input: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:

    """Adjoint of conv2d's input map; output extent (H-1)*s - 2p + k."""

    return ConvTranspose2d.apply(input, weight, bias, stride=stride, padding=padding)

def relu(x: Tensor) -> Tensor:

    return Relu.apply(x)

def sigmoid(x: Tensor) -> Tensor:

    return Sigmoid.apply(x)

def tanh(x: Tensor) -> Tensor:

    return Tanh.apply(x)

def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:

    return Concat.apply(*tensors, axis=axis)

def bce_with_logits(logits: Tensor, targets: Union[Tensor, ArrayLike]) -> Tensor:

    """Mean binary cross entropy in the log-sum-exp stable form."""

    targets = _as_tensor(targets)

    if targets.shape != logits.shape:

        raise ShapeError(f"bce_with_logits: shapes {logits.shape} and {targets.shape} differ.")

    return BCEWithLogits.apply(logits, Tensor._wrap(targets.data.astype(logits.dtype, copy=False), False, None))

def backward(loss: Tensor) -> None:

    loss.backward()

class ParameterCollection(Mapping):

    """Ordered name -> Tensor mapping of trainable parameters."""

    def __init__(self, tensors: Mapping[str, Tensor]) -> None:

        self._tensors: Dict[str, Tensor] = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:

        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:

        return iter(self._tensors)

    def __len__(self) -> int:

        return len(self._tensors)

    def _rebuild(self, tensors: Dict[str, Tensor]) -> "ParameterCollection":

        return type(self)(tensors)

    def astype(self, dtype: type) -> "ParameterCollection":

        """Deep copy with every tensor cast to ``dtype`` and tracking gradients."""

        return self._rebuild({
            name: Tensor(tensor.data, requires_grad=True, dtype=dtype)
            for name, tensor in self._tensors.items()
        })

    def copy(self) -> "ParameterCollection":

        return self._rebuild({
            name: Tensor(tensor.data, requires_grad=tensor.requires_grad, dtype=tensor.dtype)
            for name, tensor in self._tensors.items()
        })

    def zero_grads(self) -> None:

        for tensor in self._tensors.values():

            tensor.zero_grad()

    def bitwise_equal(self, other: "ParameterCollection") -> bool:

        if list(self) != list(other):

            return False

        return all(
            self[name].shape == other[name].shape
            and self[name].dtype == other[name].dtype
            and self[name].data.tobytes() == other[name].data.tobytes()
            for name in self
        )

@dataclass
class ParameterCheck:

    """Per-tensor result; ``max_rel_error`` covers only entries whose absolute error exceeds atol."""

    name: str
    max_rel_error: float = 0.0
    max_abs_error: float = 0.0
    checked: int = 0
    failures: int = 0
    below_atol: int = 0

    @property
    def passed(self) -> bool:

        return self.failures == 0

@dataclass
class GradCheckReport:

    tolerance: float
    atol: float = 0.0
    entries: List[ParameterCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:

        return all(entry.passed for entry in self.entries)

    @property
    def max_rel_error(self) -> float:

        return max((entry.max_rel_error for entry in self.entries), default=0.0)

    @property
    def below_atol(self) -> int:

        return sum(entry.below_atol for entry in self.entries)

    @property
    def worst(self) -> Optional[ParameterCheck]:

        return max(self.entries, key=lambda entry: entry.max_rel_error, default=None)

def grad_check(
    f: Callable[[ParameterCollection], Tensor],
    params: ParameterCollection,
    tolerance: float = 1e-4,
    step: float = 1e-5,
    samples_per_param: Optional[int] = None,
    seed: int = 0,
    atol: float = 1e-8,
    dtype: type = np.float64,
) -> GradCheckReport:

    """Compare backward() against central differences, in 64-bit precision by default.

    Relative error is |a-n| / max(|a|, |n|, 1e-12). Entries whose absolute
    error is at most ``atol`` are counted in ``below_atol`` and left out of
    the relative figures; any other entry fails when its relative error
    exceeds ``tolerance``. ``samples_per_param`` checks a seeded subset of
    each tensor's entries; None checks every entry. Failures are reported,
    never raised.
    """

    params = params.astype(dtype)
    params.zero_grads()
    report = GradCheckReport(tolerance=tolerance, atol=atol)
    rng = np.random.default_rng(seed)

    with precision(dtype):

        f(params).backward()
        analytic = {name: tensor.grad.reshape(-1).copy() for name, tensor in params.items()}

        with no_grad():

            for name, tensor in params.items():

                flat = tensor.data.reshape(-1)
                entry = ParameterCheck(name=name)

                if samples_per_param is None or samples_per_param >= flat.size:

                    indices = np.arange(flat.size)

                else:

                    indices = np.sort(rng.choice(flat.size, size=samples_per_param, replace=False))

                for index in indices:

                    original = flat[index]
                    flat[index] = original + step
                    plus = f(params).item()
                    flat[index] = original - step
                    minus = f(params).item()
                    flat[index] = original

                    numeric = (plus - minus) / (2 * step)
                    exact = float(analytic[name][index])
                    abs_error = abs(exact - numeric)
                    rel_error = abs_error / max(abs(exact), abs(numeric), 1e-12)

                    entry.checked += 1
                    entry.max_abs_error = max(entry.max_abs_error, abs_error)

                    if abs_error <= atol:

                        entry.below_atol += 1
                        continue

                    entry.max_rel_error = max(entry.max_rel_error, rel_error)

                    if rel_error > tolerance:

                        entry.failures += 1

                report.entries.append(entry)

    return report
