"""Training objectives over pairs and triplets of sentence vectors.

All three operate on pooled sentence embeddings produced elsewhere; the
classification head is the only one that owns trainable weights.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor

__all__ = [
    "COMBINE_MODES",
    "combine",
    "combined_width",
    "cosine_rows",
    "euclidean_rows",
    "ClassificationObjective",
    "RegressionObjective",
    "TripletObjective",
]

COMBINE_MODES = (
    "u,v",
    "abs",
    "prod",
    "abs,prod",
    "u,v,prod",
    "u,v,abs",
    "u,v,abs,prod",
)


def _mode_parts(mode: str) -> list[str]:
    if mode not in COMBINE_MODES:
        raise ValueError(f"unknown combine mode {mode!r}; expected one of {COMBINE_MODES}")
    return mode.split(",")


def combined_width(mode: str, dim: int) -> int:
    return len(_mode_parts(mode)) * dim


def combine(u: Tensor, v: Tensor, mode: str) -> Tensor:
    """Build the pair feature vector named by `mode`.

    Tokens: u and v pass the embeddings through, abs contributes
    |u - v|, prod contributes u * v. Pieces are concatenated in the
    order the mode string lists them.
    """
    parts = _mode_parts(mode)
    if u.shape != v.shape or u.ndim != 2:
        raise ShapeError(f"combine: u {u.shape} and v {v.shape} must be matching 2-D")
    built = []
    for token in parts:
        if token == "u":
            built.append(u)
        elif token == "v":
            built.append(v)
        elif token == "abs":
            built.append(T.abs_diff(u, v))
        else:
            built.append(T.mul(u, v))
    if len(built) == 1:
        return built[0]
    return T.concat(built, axis=1)


def _row_norms(x: Tensor) -> Tensor:
    return T.sqrt(T.tsum(T.mul(x, x), axis=1))


def cosine_rows(u: Tensor, v: Tensor) -> Tensor:
    """Per-row cosine similarity of two (batch, dim) tensors.

    Zero-norm rows have no direction, so the cosine is undefined there;
    refusing beats silently dividing by zero inside a training step.
    """
    norms = T.mul(_row_norms(u), _row_norms(v))
    if not np.all(norms.data > 0):
        row = int(np.argmin(norms.data > 0))
        raise ValueError(f"cosine is undefined for the zero-norm embedding at row {row}")
    return T.div(T.tsum(T.mul(u, v), axis=1), norms)


def euclidean_rows(a: Tensor, b: Tensor) -> Tensor:
    """Per-row Euclidean distance of two (batch, dim) tensors."""
    d = T.sub(a, b)
    return T.sqrt(T.tsum(T.mul(d, d), axis=1))


class ClassificationObjective:
    """Softmax classification over a combined pair representation.

    The head is a single bias-free weight matrix of shape
    (combined width, n_classes); the loss is mean cross-entropy.
    """

    def __init__(self, dim: int, n_classes: int, mode: str = "u,v,abs", seed: int = 0, dtype=np.float32):
        if n_classes < 2:
            raise ValueError(f"need at least 2 classes, got {n_classes}")
        self.mode = mode
        self.n_classes = n_classes
        width = combined_width(mode, dim)
        rng = np.random.default_rng(seed)
        self.W = Tensor(rng.normal(0.0, 0.02, size=(width, n_classes)).astype(dtype), requires_grad=True)

    def parameters(self) -> dict[str, Tensor]:
        return {"classifier.W": self.W}

    def logits(self, u: Tensor, v: Tensor) -> Tensor:
        return T.matmul(combine(u, v, self.mode), self.W)

    def loss(self, u: Tensor, v: Tensor, labels: np.ndarray) -> Tensor:
        return T.tmean(T.cross_entropy(self.logits(u, v), np.asarray(labels)))


class RegressionObjective:
    """Mean squared error between cosine similarity and a target score."""

    def parameters(self) -> dict[str, Tensor]:
        return {}

    def predict(self, u: Tensor, v: Tensor) -> Tensor:
        return cosine_rows(u, v)

    def loss(self, u: Tensor, v: Tensor, targets: np.ndarray) -> Tensor:
        targets = np.asarray(targets, dtype=u.dtype)
        if targets.shape != (u.shape[0],):
            raise ShapeError(f"targets shape {targets.shape} does not match batch of {u.shape[0]}")
        err = T.sub(self.predict(u, v), Tensor(targets))
        return T.tmean(T.mul(err, err))


class TripletObjective:
    """Euclidean triplet hinge: mean of max(d(a,p) - d(a,n) + margin, 0)."""

    def __init__(self, margin: float = 1.0):
        if margin < 0:
            raise ValueError(f"margin must be non-negative, got {margin}")
        self.margin = margin

    def parameters(self) -> dict[str, Tensor]:
        return {}

    def loss(self, anchor: Tensor, positive: Tensor, negative: Tensor) -> Tensor:
        gap = T.add_scalar(T.sub(euclidean_rows(anchor, positive), euclidean_rows(anchor, negative)), self.margin)
        return T.tmean(T.relu(gap))
