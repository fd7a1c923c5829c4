"""Dense tensors with reverse-mode automatic differentiation.

Values are stored row-major in float32 by default; float64 tensors are
supported so that gradients can be validated against central finite
differences at tight tolerances. Reductions always accumulate in float64
regardless of storage dtype.

Broadcasting is deliberately restricted: binary elementwise ops require
identical shapes, with explicit scalar variants (`add_scalar`,
`mul_scalar`) and an explicit trailing-suffix op (`add_bias`) for the
bias/position patterns a transformer needs. Anything else is a shape
error, not a silent broadcast.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "tensor",
    "add",
    "sub",
    "mul",
    "div",
    "add_scalar",
    "mul_scalar",
    "abs_diff",
    "matmul",
    "add_bias",
    "embedding",
    "reshape",
    "transpose",
    "concat",
    "slice_rows",
    "select_index",
    "tsum",
    "tmean",
    "max_over_axis",
    "softmax",
    "cross_entropy",
    "layer_norm",
    "gelu",
    "relu",
    "sqrt",
    "dropout",
    "grad_check",
]

_FLOAT_DTYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible with an op's contract."""


def _coerce(data, dtype):
    if dtype is not None:
        return np.ascontiguousarray(data, dtype=dtype)
    # numpy float arrays keep their precision; everything else (lists,
    # ints, mixed) lands in the float32 default
    if isinstance(data, np.ndarray) and data.dtype in _FLOAT_DTYPES:
        return data
    if isinstance(data, _FLOAT_DTYPES):
        return np.asarray(data)
    return np.ascontiguousarray(data, dtype=np.float32)


class Tensor:
    """A dense array plus an optional gradient buffer and graph linkage.

    Tensors are immutable once created, except for in-place parameter
    updates applied by an optimizer between training steps. `grad` has
    the same shape as `data` and exists whenever `requires_grad` is set;
    it accumulates across backward calls until `zero_grad`.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False, dtype=None, _parents=(), _op="leaf"):
        self.data = _coerce(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self._parents = _parents
        self._backward = None
        self._op = _op

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() requires a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())

    def assert_finite(self, context=""):
        if not self.is_finite():
            where = f" in {context}" if context else ""
            raise FloatingPointError(f"non-finite values detected{where} (op={self._op})")

    def zero_grad(self):
        if self.grad is not None:
            self.grad.fill(0.0)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=False)

    def backward(self):
        """Backpropagate from a scalar loss into every reachable gradient buffer.

        Deterministic for a fixed graph; each node's backward rule runs
        exactly once. Leaves that do not feed the loss keep their
        (zero-initialized) gradient untouched.
        """
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ValueError("backward called on a tensor that does not require grad")
        self.grad += np.ones_like(self.data)
        for node in reversed(_topo_order(self)):
            if node._backward is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # operator sugar; scalars go through the explicit scalar ops
    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add_scalar(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return add_scalar(self, -other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return mul_scalar(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return div(self, other)
        return mul_scalar(self, 1.0 / other)

    def __neg__(self):
        return mul_scalar(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return tmean(self, axis)


def tensor(data, requires_grad=False, dtype=None) -> Tensor:
    """Construct a Tensor; float32 storage unless `dtype` says otherwise."""
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def _topo_order(root):
    # iterative post-order: every parent precedes its consumers
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _result(data, parents, op, backward_fn):
    out = Tensor(data, _parents=tuple(parents), _op=op)
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out.grad = np.zeros_like(out.data)
        out._backward = backward_fn
    return out


def _check_same_shape(a, b, op):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")
    if a.data.dtype != b.data.dtype:
        raise TypeError(f"{op}: dtypes {a.data.dtype} and {b.data.dtype} differ")


def _reduce_sum(arr, axis=None, keepdims=False):
    # float64 accumulation regardless of storage dtype
    return np.sum(arr, axis=axis, keepdims=keepdims, dtype=np.float64).astype(arr.dtype)


# ---------------------------------------------------------------------------
# elementwise ops


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    out_data = a.data + b.data

    def backward():
        if a.requires_grad:
            a.grad += out.grad
        if b.requires_grad:
            b.grad += out.grad

    out = _result(out_data, (a, b), "add", backward)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    out_data = a.data - b.data

    def backward():
        if a.requires_grad:
            a.grad += out.grad
        if b.requires_grad:
            b.grad -= out.grad

    out = _result(out_data, (a, b), "sub", backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    out_data = a.data * b.data

    def backward():
        if a.requires_grad:
            a.grad += out.grad * b.data
        if b.requires_grad:
            b.grad += out.grad * a.data

    out = _result(out_data, (a, b), "mul", backward)
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "div")
    out_data = a.data / b.data

    def backward():
        if a.requires_grad:
            a.grad += out.grad / b.data
        if b.requires_grad:
            b.grad -= out.grad * a.data / (b.data * b.data)

    out = _result(out_data, (a, b), "div", backward)
    return out


def add_scalar(a: Tensor, c: float) -> Tensor:
    out_data = a.data + a.data.dtype.type(c)

    def backward():
        if a.requires_grad:
            a.grad += out.grad

    out = _result(out_data, (a,), "add_scalar", backward)
    return out


def mul_scalar(a: Tensor, c: float) -> Tensor:
    c = a.data.dtype.type(c)
    out_data = a.data * c

    def backward():
        if a.requires_grad:
            a.grad += out.grad * c

    out = _result(out_data, (a,), "mul_scalar", backward)
    return out


def abs_diff(a: Tensor, b: Tensor) -> Tensor:
    """|a - b| with subgradient 0 at a == b (np.sign(0) == 0)."""
    _check_same_shape(a, b, "abs_diff")
    diff = a.data - b.data
    sign = np.sign(diff)

    def backward():
        if a.requires_grad:
            a.grad += out.grad * sign
        if b.requires_grad:
            b.grad -= out.grad * sign

    out = _result(np.abs(diff), (a, b), "abs_diff", backward)
    return out


# ---------------------------------------------------------------------------
# linear algebra and structural ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product, 2-D or stacked with identical leading dimensions.

    Batch dimensions must match exactly; there is no batch broadcasting.
    """
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul: operands must be at least 2-D, got {a.data.shape} and {b.data.shape}")
    if a.data.ndim != b.data.ndim or a.data.shape[:-2] != b.data.shape[:-2]:
        raise ShapeError(f"matmul: leading dims of {a.data.shape} and {b.data.shape} differ")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul: inner dims of {a.data.shape} and {b.data.shape} disagree")
    if a.data.dtype != b.data.dtype:
        raise TypeError(f"matmul: dtypes {a.data.dtype} and {b.data.dtype} differ")
    out_data = np.matmul(a.data, b.data)

    def backward():
        if a.requires_grad:
            a.grad += np.matmul(out.grad, np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            b.grad += np.matmul(np.swapaxes(a.data, -1, -2), out.grad)

    out = _result(out_data, (a, b), "matmul", backward)
    return out


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add `b` to every leading slice of `x`; b.shape must be a strict trailing suffix of x.shape."""
    if b.data.ndim >= x.data.ndim or x.data.shape[x.data.ndim - b.data.ndim :] != b.data.shape:
        raise ShapeError(f"add_bias: {b.data.shape} is not a trailing suffix of {x.data.shape}")
    if x.data.dtype != b.data.dtype:
        raise TypeError(f"add_bias: dtypes {x.data.dtype} and {b.data.dtype} differ")
    lead_axes = tuple(range(x.data.ndim - b.data.ndim))
    out_data = x.data + b.data

    def backward():
        if x.requires_grad:
            x.grad += out.grad
        if b.requires_grad:
            b.grad += np.sum(out.grad, axis=lead_axes, dtype=np.float64).astype(b.data.dtype)

    out = _result(out_data, (x, b), "add_bias", backward)
    return out


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup into `table` by an integer id array; gradients scatter-add."""
    ids = np.asarray(ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise TypeError(f"embedding: ids must be integers, got {ids.dtype}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError(f"embedding: id out of range for table with {table.data.shape[0]} rows")
    out_data = table.data[ids]

    def backward():
        if table.requires_grad:
            width = table.data.shape[1]
            np.add.at(table.grad, ids.reshape(-1), out.grad.reshape(-1, width))

    out = _result(out_data, (table,), "embedding", backward)
    return out


def reshape(x: Tensor, shape) -> Tensor:
    in_shape = x.data.shape
    out_data = np.reshape(x.data, shape)

    def backward():
        if x.requires_grad:
            x.grad += out.grad.reshape(in_shape)

    out = _result(out_data, (x,), "reshape", backward)
    return out


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out_data = np.transpose(x.data, axes)

    def backward():
        if x.requires_grad:
            x.grad += np.transpose(out.grad, inverse)

    out = _result(out_data, (x,), "transpose", backward)
    return out


def concat(parts, axis: int) -> Tensor:
    parts = list(parts)
    if not parts:
        raise ShapeError("concat: need at least one tensor")
    sizes = [p.data.shape[axis] for p in parts]
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def backward():
        for part, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if part.requires_grad:
                index = [slice(None)] * out.grad.ndim
                index[axis] = slice(start, stop)
                part.grad += out.grad[tuple(index)]

    out = _result(out_data, parts, "concat", backward)
    return out


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    out_data = x.data[start:stop]

    def backward():
        if x.requires_grad:
            x.grad[start:stop] += out.grad

    out = _result(out_data, (x,), "slice_rows", backward)
    return out


def select_index(x: Tensor, axis: int, index: int) -> Tensor:
    """Pick one slice along `axis`, removing that axis."""
    out_data = np.take(x.data, index, axis=axis)

    def backward():
        if x.requires_grad:
            slicer = [slice(None)] * x.data.ndim
            slicer[axis] = index
            x.grad[tuple(slicer)] += out.grad

    out = _result(out_data, (x,), "select_index", backward)
    return out


# ---------------------------------------------------------------------------
# reductions


def tsum(x: Tensor, axis=None) -> Tensor:
    out_data = _reduce_sum(x.data, axis=axis)

    def backward():
        if x.requires_grad:
            if axis is None:
                x.grad += out.grad
            else:
                x.grad += np.expand_dims(out.grad, axis)

    out = _result(out_data, (x,), "sum", backward)
    return out


def tmean(x: Tensor, axis=None) -> Tensor:
    count = x.data.size if axis is None else x.data.shape[axis]
    if count == 0:
        raise ShapeError("mean: empty axis")
    out_data = (_reduce_sum(x.data, axis=axis).astype(np.float64) / count).astype(x.data.dtype)
    inv = 1.0 / count

    def backward():
        if x.requires_grad:
            if axis is None:
                x.grad += out.grad * inv
            else:
                x.grad += np.expand_dims(out.grad, axis) * inv

    out = _result(out_data, (x,), "mean", backward)
    return out


def max_over_axis(x: Tensor, axis: int) -> Tensor:
    """Maximum along `axis`; gradient routes to the first maximal index on ties."""
    if x.data.shape[axis] == 0:
        raise ShapeError("max_over_axis: empty axis")
    out_data = np.max(x.data, axis=axis)
    argmax = np.argmax(x.data, axis=axis)  # first occurrence wins ties

    def backward():
        if x.requires_grad:
            mask = np.zeros_like(x.data)
            np.put_along_axis(mask, np.expand_dims(argmax, axis), 1.0, axis=axis)
            x.grad += mask * np.expand_dims(out.grad, axis)

    out = _result(out_data, (x,), "max_over_axis", backward)
    return out


# ---------------------------------------------------------------------------
# nonlinear ops


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max-subtraction for stability."""
    shifted = x.data - np.max(x.data, axis=-1, keepdims=True)
    exp = np.exp(shifted.astype(np.float64))
    y = (exp / np.sum(exp, axis=-1, keepdims=True)).astype(x.data.dtype)

    def backward():
        if x.requires_grad:
            g = out.grad
            inner = np.sum((g * y).astype(np.float64), axis=-1, keepdims=True).astype(x.data.dtype)
            x.grad += (g - inner) * y

    out = _result(y, (x,), "softmax", backward)
    return out


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Per-row negative log-likelihood of `labels` under softmax(logits).

    Computed via log-sum-exp in float64; backward uses softmax - one_hot.
    """
    labels = np.asarray(labels)
    if logits.data.ndim != 2:
        raise ShapeError(f"cross_entropy: logits must be 2-D, got {logits.data.shape}")
    rows, k = logits.data.shape
    if labels.shape != (rows,):
        raise ShapeError(f"cross_entropy: labels shape {labels.shape} does not match {rows} rows")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise IndexError(f"cross_entropy: label out of range [0, {k})")
    z = logits.data.astype(np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(z), axis=-1, keepdims=True))
    log_probs = z - log_norm
    losses = (-log_probs[np.arange(rows), labels]).astype(logits.data.dtype)
    probs = np.exp(log_probs)

    def backward():
        if logits.requires_grad:
            delta = probs.copy()
            delta[np.arange(rows), labels] -= 1.0
            logits.grad += (delta * out.grad[:, None]).astype(logits.data.dtype)

    out = _result(losses, (logits,), "cross_entropy", backward)
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    n = x.data.shape[-1]
    if gain.data.shape != (n,) or bias.data.shape != (n,):
        raise ShapeError(f"layer_norm: gain/bias must have shape ({n},)")
    xf = x.data.astype(np.float64)
    mu = np.mean(xf, axis=-1, keepdims=True)
    var = np.mean((xf - mu) ** 2, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xf - mu) * inv_std
    out_data = (xhat * gain.data.astype(np.float64) + bias.data.astype(np.float64)).astype(x.data.dtype)

    def backward():
        g = out.grad.astype(np.float64)
        if gain.requires_grad:
            lead = tuple(range(g.ndim - 1))
            gain.grad += np.sum(g * xhat, axis=lead).astype(gain.data.dtype)
        if bias.requires_grad:
            lead = tuple(range(g.ndim - 1))
            bias.grad += np.sum(g, axis=lead).astype(bias.data.dtype)
        if x.requires_grad:
            gx = g * gain.data.astype(np.float64)
            mean_gx = np.mean(gx, axis=-1, keepdims=True)
            mean_gx_xhat = np.mean(gx * xhat, axis=-1, keepdims=True)
            dx = (gx - mean_gx - xhat * mean_gx_xhat) * inv_std
            x.grad += dx.astype(x.data.dtype)

    out = _result(out_data, (x, gain, bias), "layer_norm", backward)
    return out


_GELU_C = float(np.sqrt(2.0 / np.pi))


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit (tanh approximation)."""
    xd = x.data
    inner = _GELU_C * (xd + 0.044715 * xd**3)
    t = np.tanh(inner)
    out_data = (0.5 * xd * (1.0 + t)).astype(xd.dtype)

    def backward():
        if x.requires_grad:
            sech2 = 1.0 - t * t
            local = 0.5 * (1.0 + t) + 0.5 * xd * sech2 * _GELU_C * (1.0 + 3 * 0.044715 * xd**2)
            x.grad += (out.grad * local).astype(xd.dtype)

    out = _result(out_data, (x,), "gelu", backward)
    return out


def relu(x: Tensor) -> Tensor:
    """max(x, 0); subgradient 0 at x == 0."""
    mask = x.data > 0

    def backward():
        if x.requires_grad:
            x.grad += out.grad * mask

    out = _result(np.where(mask, x.data, x.data.dtype.type(0)), (x,), "relu", backward)
    return out


def sqrt(x: Tensor) -> Tensor:
    out_data = np.sqrt(x.data)

    def backward():
        if x.requires_grad:
            # clamp keeps the subgradient finite if an input sits exactly at 0
            x.grad += out.grad * (0.5 / np.maximum(out_data, 1e-12))

    out = _result(out_data, (x,), "sqrt", backward)
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when rate == 0. Mask is drawn from `rng`."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate).astype(x.data.dtype)
    scale = x.data.dtype.type(1.0 / (1.0 - rate))

    def backward():
        if x.requires_grad:
            x.grad += out.grad * keep * scale

    out = _result(x.data * keep * scale, (x,), "dropout", backward)
    return out


# ---------------------------------------------------------------------------
# gradient checking


def grad_check(f, args, eps: float = 1e-4, jitter: float = 0.0, rng=None) -> float:
    """Compare analytic gradients of scalar-valued `f` against central differences.

    `args` is a Tensor or sequence of Tensors; each is rebuilt with
    requires_grad so the check does not disturb the caller's graph. With
    `jitter` > 0 each point is shifted once by a uniform random offset,
    which keeps checks away from kinks (|.|, max ties) when the caller
    cannot guarantee it. Returns max over coordinates of
    |analytic - numeric| / max(1, |numeric|). Run at float64 for tight
    tolerances; float32 rounding dominates otherwise.
    """
    if isinstance(args, Tensor):
        args = [args]
    points = []
    for a in args:
        data = a.data.copy()
        if jitter > 0.0:
            gen = rng if rng is not None else np.random.default_rng(0)
            data = data + gen.uniform(-jitter, jitter, size=data.shape).astype(data.dtype)
        points.append(Tensor(data, requires_grad=True))

    loss = f(*points)
    if loss.data.size != 1:
        raise ValueError("grad_check: f must be scalar-valued")
    loss.backward()
    analytic = [p.grad.copy() for p in points]

    worst = 0.0
    for p, ana in zip(points, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            up = f(*points).item()
            flat[i] = saved - eps
            down = f(*points).item()
            flat[i] = saved
            numeric = (up - down) / (2.0 * eps)
            err = abs(float(ana.reshape(-1)[i]) - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst
