"""The user-facing bundle: vocabulary + encoder + pooling = text to vectors."""

from __future__ import annotations

import numpy as np

from .binio import FormatError
from .checkpoint import load_checkpoint, save_checkpoint
from .encoder import CLS_ID, PAD_ID, SEP_ID, Encoder, EncoderConfig, Vocab
from .pooling import POOLING_MODES, pool
from .tensor import Tensor

__all__ = ["SentenceEmbedder"]


class SentenceEmbedder:
    """Maps sentences to fixed-size vectors.

    `include_special` controls whether the cls/sep positions take part in
    mean and max pooling (they do by default; cls pooling always reads
    position 0).
    """

    def __init__(self, vocab: Vocab, encoder: Encoder, pooling: str = "mean", include_special: bool = True):
        if pooling not in POOLING_MODES:
            raise ValueError(f"unknown pooling mode {pooling!r}; expected one of {POOLING_MODES}")
        self.vocab = vocab
        self.encoder = encoder
        self.pooling = pooling
        self.include_special = include_special
        if vocab.size != encoder.config.vocab_size:
            raise ValueError(
                f"vocabulary has {vocab.size} ids but encoder expects {encoder.config.vocab_size}"
            )

    @property
    def dim(self) -> int:
        return self.encoder.config.dim

    def encode_batch(self, texts):
        """Pad a list of texts to the longest member; returns (ids, mask, pool_mask)."""
        encoded = [self.vocab.encode(text, self.encoder.config.max_seq_len) for text in texts]
        width = max(len(row) for row in encoded)
        ids = np.full((len(encoded), width), PAD_ID, dtype=np.int64)
        mask = np.zeros((len(encoded), width), dtype=self.encoder.dtype)
        for r, row in enumerate(encoded):
            ids[r, : len(row)] = row
            mask[r, : len(row)] = 1.0
        if self.include_special:
            pool_mask = mask
        else:
            pool_mask = mask.copy()
            pool_mask[ids == CLS_ID] = 0.0
            pool_mask[ids == SEP_ID] = 0.0
            # a sentence with no interior tokens falls back to its markers
            empty = pool_mask.sum(axis=1) == 0
            pool_mask[empty] = mask[empty]
        return ids, mask, pool_mask

    def embed_tensor(self, texts, train: bool = False) -> Tensor:
        """One differentiable forward pass over `texts` (single padded batch)."""
        ids, mask, pool_mask = self.encode_batch(texts)
        hidden = self.encoder.forward(ids, mask, train=train)
        return pool(hidden, pool_mask, self.pooling)

    def embed(self, texts, batch_size: int = 32) -> np.ndarray:
        """Embed texts in evaluation mode; returns a float32 (len(texts), dim) array."""
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        rows = []
        for start in range(0, len(texts), batch_size):
            chunk = self.embed_tensor(texts[start : start + batch_size], train=False)
            rows.append(chunk.data.astype(np.float32, copy=False))
        return np.vstack(rows)

    def save(self, path, objective: dict | None = None, steps: int = 0) -> None:
        save_checkpoint(
            path,
            config=self.encoder.config.to_dict(),
            pooling=self.pooling,
            include_special=self.include_special,
            vocab_tokens=self.vocab.tokens,
            params=self.encoder.params,
            objective=objective,
            steps=steps,
        )

    @classmethod
    def load(cls, path) -> "SentenceEmbedder":
        manifest, params = load_checkpoint(path)
        config = EncoderConfig.from_dict(manifest["config"])
        vocab = Vocab(manifest["vocab"])
        if vocab.size != config.vocab_size:
            raise FormatError(
                f"{path}: manifest vocabulary has {vocab.size} ids but config says {config.vocab_size}"
            )
        encoder = Encoder(config)
        expected = set(encoder.params)
        loaded = set(params)
        if expected != loaded:
            missing = sorted(expected - loaded)
            extra = sorted(loaded - expected)
            raise FormatError(f"{path}: parameter set mismatch (missing {missing}, unexpected {extra})")
        for name, tensor_param in encoder.params.items():
            if params[name].shape != tensor_param.shape:
                raise FormatError(
                    f"{path}: parameter {name} has shape {params[name].shape}, expected {tensor_param.shape}"
                )
            tensor_param.data[...] = params[name]
        return cls(vocab, encoder, pooling=manifest["pooling"], include_special=manifest["include_special"])
