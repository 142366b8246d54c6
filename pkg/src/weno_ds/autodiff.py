"""Reverse-mode automatic differentiation over numpy arrays.

A Tape records every primitive applied to its Variables together with the
forward values. ``Tape.backward`` walks the record once, newest node first,
and accumulates vector-Jacobian products into the inputs.

The functional helpers at the bottom of this module (``exp``, ``maximum``,
``stack``, ``conv1d`` ...) accept plain numpy values as well as Variables.
When none of their arguments is a Variable they evaluate directly with
numpy, so the same solver code runs with or without a tape.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import TapeError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray, "Variable"]

@dataclass
class Primitive:
    """Represents a differentiable primitive operation.

    ``vjp`` receives the output adjoint, the forward output and the forward
    input values (plus the op attributes) and returns one adjoint per input.
    """
    name: str
    forward: Callable[..., np.ndarray]
    vjp: Callable[..., Tuple[Optional[np.ndarray], ...]]

_PRIMITIVES: Dict[str, Primitive] = {}

def defprimitive(name: str, forward: Callable, vjp: Callable) -> Primitive:
    """Register a primitive under ``name``."""
    primitive = Primitive(name=name, forward=forward, vjp=vjp)
    _PRIMITIVES[name] = primitive
    return primitive

def primitive_names() -> List[str]:
    return sorted(_PRIMITIVES)

@dataclass
class _Node:
    op: Optional[str]
    inputs: Tuple[Optional[int], ...]
    input_values: Tuple[Any, ...]
    value: np.ndarray
    attrs: Dict[str, Any] = field(default_factory=dict)

class Variable:
    """Handle to a value recorded on a Tape."""

    __slots__ = ("tape", "index", "value")
    # Keep numpy from broadcasting its own ufuncs over Variables
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", index: int, value: np.ndarray) -> None:
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        return f"Variable(index={self.index}, shape={self.shape})"

    def __add__(self, other): return _apply("add", self, other)
    def __radd__(self, other): return _apply("add", other, self)
    def __sub__(self, other): return _apply("sub", self, other)
    def __rsub__(self, other): return _apply("sub", other, self)
    def __mul__(self, other): return _apply("mul", self, other)
    def __rmul__(self, other): return _apply("mul", other, self)
    def __truediv__(self, other): return _apply("div", self, other)
    def __rtruediv__(self, other): return _apply("div", other, self)
    def __neg__(self): return _apply("neg", self)
    def __abs__(self): return _apply("abs", self)

    def __pow__(self, exponent):
        if exponent == 2:
            return _apply("square", self)
        if exponent == 1:
            return self
        raise TapeError(f"Only integer powers 1 and 2 are recorded, got {exponent}")

    def __getitem__(self, key):
        return _apply("getitem", self, key=key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _apply("reshape", self, shape=shape)

class Tape:
    """Append-only record of primitive operations.

    One tape covers one differentiated computation. The training loop
    creates a fresh tape per time step and drops it after the update.
    """

    def __init__(self) -> None:
        self._nodes: List[_Node] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def variable(self, value: Any) -> Variable:
        """Register ``value`` as a leaf (a parameter or an input)."""
        array = np.array(value, dtype=float)
        if not np.all(np.isfinite(array)):
            raise TapeError("Leaf variables must hold finite values")
        self._nodes.append(_Node(op=None, inputs=(), input_values=(), value=array))
        return Variable(self, len(self._nodes) - 1, array)

    def record(self, op: str, inputs: Sequence[Any], **attrs: Any) -> Variable:
        """Evaluate primitive ``op`` eagerly and append it to the tape.

        Raises:
            TapeError: If an input lives on another tape, the op is unknown or
                the forward value is not finite.
        """
        primitive = _PRIMITIVES.get(op)
        if primitive is None:
            raise TapeError(f"Unknown primitive: {op}")
        indices: List[Optional[int]] = []
        values: List[Any] = []
        for item in inputs:
            if isinstance(item, Variable):
                if item.tape is not self:
                    raise TapeError(f"Input of '{op}' was recorded on a different tape")
                indices.append(item.index)
                values.append(item.value)
            else:
                indices.append(None)
                values.append(np.asarray(item, dtype=float))
        value = np.asarray(primitive.forward(*values, **attrs), dtype=float)
        if not np.all(np.isfinite(value)):
            raise TapeError(f"Non-finite value recorded by '{op}'")
        self._nodes.append(_Node(op=op, inputs=tuple(indices),
                                 input_values=tuple(values), value=value, attrs=attrs))
        return Variable(self, len(self._nodes) - 1, value)

    def backward(self, loss: Variable, wrt: Sequence[Variable]) -> List[np.ndarray]:
        """Gradients of a scalar ``loss`` with respect to ``wrt``.

        Nodes are visited once, newest first. Variables the loss does not
        depend on receive exact zeros.

        Raises:
            TapeError: If the loss is not a scalar Variable of this tape, or a
                NaN shows up in an adjoint.
        """
        if not isinstance(loss, Variable) or loss.tape is not self:
            raise TapeError("Loss must be a Variable recorded on this tape")
        if loss.value.size != 1:
            raise TapeError(f"Loss must be scalar, got shape {loss.value.shape}")
        for var in wrt:
            if var.tape is not self:
                raise TapeError("Gradient requested for a Variable of another tape")

        adjoints: List[Optional[np.ndarray]] = [None] * len(self._nodes)
        adjoints[loss.index] = np.ones_like(loss.value)
        for index in range(loss.index, -1, -1):
            adjoint = adjoints[index]
            node = self._nodes[index]
            if adjoint is None or node.op is None:
                continue
            input_adjoints = _PRIMITIVES[node.op].vjp(adjoint, node.value, *node.input_values,
                                                      **node.attrs)
            for source, grad in zip(node.inputs, input_adjoints):
                if source is None or grad is None:
                    continue
                if np.any(np.isnan(grad)):
                    raise TapeError(f"NaN adjoint while differentiating '{node.op}'")
                if adjoints[source] is None:
                    adjoints[source] = np.array(grad, dtype=float)
                else:
                    adjoints[source] = adjoints[source] + grad

        logger.debug("Backward pass over %d nodes", loss.index + 1)
        return [np.zeros_like(var.value) if adjoints[var.index] is None
                else adjoints[var.index].reshape(var.value.shape) for var in wrt]

def backward(tape: Tape, loss: Variable, wrt: Sequence[Variable]) -> List[np.ndarray]:
    return tape.backward(loss, wrt)

def is_variable(value: Any) -> bool:
    return isinstance(value, Variable)

def value_of(value: Any) -> np.ndarray:
    """Forward value of a Variable, or the argument itself as an array."""
    if isinstance(value, Variable):
        return value.value
    return np.asarray(value, dtype=float)

def _apply(op: str, *inputs: Any, **attrs: Any) -> Any:
    tape = None
    for item in inputs:
        if isinstance(item, Variable):
            if tape is None:
                tape = item.tape
            elif item.tape is not tape:
                raise TapeError(f"Inputs of '{op}' were recorded on different tapes")
    if tape is None:
        return _PRIMITIVES[op].forward(*inputs, **attrs)
    return tape.record(op, inputs, **attrs)

# ---------------------------------------------------------------------------
# Primitive definitions
# ---------------------------------------------------------------------------

def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad

defprimitive(
    "add", lambda a, b: a + b,
    lambda g, out, a, b: (_unbroadcast(g, np.shape(a)), _unbroadcast(g, np.shape(b))))
defprimitive(
    "sub", lambda a, b: a - b,
    lambda g, out, a, b: (_unbroadcast(g, np.shape(a)), _unbroadcast(-g, np.shape(b))))
defprimitive(
    "mul", lambda a, b: a * b,
    lambda g, out, a, b: (_unbroadcast(g * b, np.shape(a)), _unbroadcast(g * a, np.shape(b))))
defprimitive(
    "div", lambda a, b: a / b,
    lambda g, out, a, b: (_unbroadcast(g / b, np.shape(a)),
                          _unbroadcast(-g * out / b, np.shape(b))))
defprimitive("neg", lambda a: -a, lambda g, out, a: (-g,))
defprimitive("square", lambda a: a * a, lambda g, out, a: (2.0 * a * g,))
defprimitive("sqrt", np.sqrt, lambda g, out, a: (g / (2.0 * out),))
defprimitive("exp", np.exp, lambda g, out, a: (g * out,))
# abs'(0) = 0
defprimitive("abs", np.abs, lambda g, out, a: (g * np.sign(a),))
defprimitive(
    "elu", lambda a: np.where(a > 0, a, np.expm1(np.minimum(a, 0.0))),
    lambda g, out, a: (g * np.where(a > 0, 1.0, out + 1.0),))
defprimitive("sigmoid", expit, lambda g, out, a: (g * out * (1.0 - out),))

# Ties route the whole adjoint to the first argument
def _maximum_vjp(g, out, a, b):
    mask = np.asarray(a >= b, dtype=float)
    return (_unbroadcast(g * mask, np.shape(a)), _unbroadcast(g * (1.0 - mask), np.shape(b)))

def _minimum_vjp(g, out, a, b):
    mask = np.asarray(a <= b, dtype=float)
    return (_unbroadcast(g * mask, np.shape(a)), _unbroadcast(g * (1.0 - mask), np.shape(b)))

defprimitive("maximum", np.maximum, _maximum_vjp)
defprimitive("minimum", np.minimum, _minimum_vjp)

def _sum_forward(a, axis=None, keepdims=False):
    return np.sum(a, axis=axis, keepdims=keepdims)

def _sum_vjp(g, out, a, axis=None, keepdims=False):
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, np.shape(a)).copy(),)

defprimitive("sum", _sum_forward, _sum_vjp)

def _is_basic_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(p, (slice, int, np.integer)) or p is Ellipsis or p is None
               for p in parts)

def _getitem_vjp(g, out, a, key):
    grad = np.zeros(np.shape(a))
    if _is_basic_index(key):
        grad[key] = g
    else:
        np.add.at(grad, key, g)
    return (grad,)

defprimitive("getitem", lambda a, key: a[key], _getitem_vjp)
defprimitive("reshape", lambda a, shape: np.reshape(a, shape),
             lambda g, out, a, shape: (np.reshape(g, np.shape(a)),))

def _stack_vjp(g, out, *values, axis=0):
    moved = np.moveaxis(g, axis, 0)
    return tuple(moved[i] for i in range(len(values)))

defprimitive("stack", lambda *values, axis=0: np.stack(values, axis=axis), _stack_vjp)

def _concatenate_vjp(g, out, *values, axis=0):
    sizes = np.cumsum([np.shape(v)[axis] for v in values])[:-1]
    return tuple(np.split(g, sizes, axis=axis))

defprimitive("concatenate", lambda *values, axis=0: np.concatenate(values, axis=axis),
             _concatenate_vjp)

def _einsum_parts(subscripts: str) -> Tuple[str, str, str]:
    inputs, output = subscripts.replace(" ", "").split("->")
    first, second = inputs.split(",")
    return first, second, output

def _einsum_vjp(g, out, a, b, subscripts):
    first, second, output = _einsum_parts(subscripts)
    grad_a = np.einsum(f"{output},{second}->{first}", g, b)
    grad_b = np.einsum(f"{first},{output}->{second}", a, g)
    return grad_a, grad_b

defprimitive("einsum", lambda a, b, subscripts: np.einsum(subscripts, a, b), _einsum_vjp)

def _conv1d_forward(x, w, b):
    kernel = w.shape[-1]
    windows = sliding_window_view(x, kernel, axis=-1)
    return np.einsum("...ilk,oik->...ol", windows, w) + b[:, None]

def _conv1d_vjp(g, out, x, w, b):
    kernel = w.shape[-1]
    length = g.shape[-1]
    windows = sliding_window_view(x, kernel, axis=-1)
    grad_w = np.einsum("...ol,...ilk->oik", g, windows)
    grad_b = g.sum(axis=tuple(range(g.ndim - 2)) + (g.ndim - 1,))
    grad_x = np.zeros(np.shape(x))
    for k in range(kernel):
        grad_x[..., k:k + length] += np.einsum("...ol,oi->...il", g, w[:, :, k])
    return grad_x, grad_w, grad_b

defprimitive("conv1d", _conv1d_forward, _conv1d_vjp)

# ---------------------------------------------------------------------------
# Functional helpers usable with or without a tape
# ---------------------------------------------------------------------------

def exp(x): return _apply("exp", x)
def sqrt(x): return _apply("sqrt", x)
def elu(x): return _apply("elu", x)
def sigmoid(x): return _apply("sigmoid", x)
def absolute(x): return _apply("abs", x)
def maximum(a, b): return _apply("maximum", a, b)
def minimum(a, b): return _apply("minimum", a, b)
def square(x): return _apply("square", x)

def sum_(x, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False):
    return _apply("sum", x, axis=axis, keepdims=keepdims)

def mean(x):
    return sum_(x) / float(np.size(value_of(x)))

def take(x, indices: np.ndarray, axis: int = -1):
    """Gather ``indices`` along ``axis``; the adjoint scatters with ``np.add.at``."""
    ndim = np.ndim(value_of(x))
    axis = axis % ndim
    key = (slice(None),) * axis + (np.asarray(indices),)
    return _apply("getitem", x, key=key)

def stack(values: Sequence[Any], axis: int = 0):
    return _apply("stack", *values, axis=axis)

def concatenate(values: Sequence[Any], axis: int = 0):
    return _apply("concatenate", *values, axis=axis)

def einsum(subscripts: str, a, b):
    """Two-operand einsum with explicit output subscripts and no ellipsis."""
    if "->" not in subscripts or "..." in subscripts:
        raise ValueError(f"Unsupported einsum subscripts: {subscripts}")
    return _apply("einsum", a, b, subscripts=subscripts)

def conv1d(x, weight, bias):
    """Stride-1 cross-correlation without padding.

    Args:
        x: Input of shape (..., in_channels, length)
        weight: Kernel of shape (out_channels, in_channels, kernel_size)
        bias: Bias of shape (out_channels,)

    Returns:
        Output of shape (..., out_channels, length - kernel_size + 1)
    """
    return _apply("conv1d", x, weight, bias)

def grad_check(
    f: Callable[[Sequence[Any]], Any],
    params: Sequence[np.ndarray],
    h: float = 1e-6,
    floor: float = 1e-12,
) -> float:
    """Compare tape gradients of ``f`` with central finite differences.

    ``f`` takes a list of parameter values and returns a scalar. It is called
    once with Variables and then repeatedly with perturbed numpy arrays.

    Returns:
        max over parameter entries of |fd - grad| / (|grad| + floor)
    """
    params = [np.array(p, dtype=float) for p in params]
    tape = Tape()
    variables = [tape.variable(p) for p in params]
    grads = tape.backward(f(variables), variables)

    worst = 0.0
    for k, base in enumerate(params):
        for idx in np.ndindex(base.shape):
            plus = [p.copy() for p in params]
            minus = [p.copy() for p in params]
            plus[k][idx] += h
            minus[k][idx] -= h
            fd = (float(value_of(f(plus))) - float(value_of(f(minus)))) / (2.0 * h)
            g = float(grads[k][idx])
            worst = max(worst, abs(fd - g) / (abs(g) + floor))
    return worst
