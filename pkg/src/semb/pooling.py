"""Collapse per-token hidden states into one sentence vector."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor

__all__ = ["POOLING_MODES", "pool"]

POOLING_MODES = ("mean", "max", "cls")

# finite stand-in for -inf so masked positions can never win a max
_MASK_FILL = -1e30


def pool(hidden: Tensor, mask: np.ndarray, mode: str) -> Tensor:
    """Reduce (batch, length, dim) hidden states to (batch, dim) vectors.

    `mask` marks the positions that count (1.0) versus padding (0.0).
    mean averages over counted positions, max takes their elementwise
    maximum, cls returns position 0 regardless of the mask.
    """
    if mode not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}; expected one of {POOLING_MODES}")
    if hidden.ndim != 3:
        raise ShapeError(f"pool: hidden must be 3-D, got {hidden.shape}")
    B, L, n = hidden.shape
    mask = np.asarray(mask, dtype=hidden.dtype)
    if mask.shape != (B, L):
        raise ShapeError(f"pool: mask shape {mask.shape} does not match hidden {hidden.shape}")

    if mode == "cls":
        return T.select_index(hidden, axis=1, index=0)

    counts = mask.sum(axis=1)
    if (counts == 0).any():
        raise ValueError("pool: a row has no unmasked positions")
    keep = Tensor(np.ascontiguousarray(np.broadcast_to(mask[:, :, None], (B, L, n))))

    if mode == "mean":
        denom = Tensor(np.ascontiguousarray(np.broadcast_to(counts[:, None], (B, n)), dtype=hidden.dtype))
        return T.div(T.tsum(T.mul(hidden, keep), axis=1), denom)

    # max: push masked positions far below any representable activation
    fill = Tensor(((1.0 - mask)[:, :, None] * _MASK_FILL * np.ones((1, 1, n))).astype(hidden.dtype))
    return T.max_over_axis(T.add(T.mul(hidden, keep), fill), axis=1)
