import struct
import zlib

import numpy as np
import pytest

from semb.binio import ChecksumError, FormatError, TruncatedError, VersionError
from semb.checkpoint import MAGIC, VERSION, load_checkpoint, save_checkpoint
from semb.embedder import SentenceEmbedder
from semb.encoder import Encoder, EncoderConfig, Vocab


def small_embedder(seed=0, pooling="mean"):
    vocab = Vocab(["red", "green", "blue", "fish"])
    cfg = EncoderConfig(vocab_size=vocab.size, dim=8, n_layers=1, n_heads=2, ffn_dim=12, max_seq_len=10)
    return SentenceEmbedder(vocab, Encoder(cfg, seed=seed), pooling=pooling)


def test_roundtrip_is_bit_exact(tmp_path):
    emb = small_embedder(seed=4, pooling="max")
    path = tmp_path / "model.semb"
    emb.save(path)
    back = SentenceEmbedder.load(path)
    assert back.pooling == "max"
    assert back.include_special is True
    assert back.vocab.tokens == emb.vocab.tokens
    for name, p in emb.encoder.params.items():
        np.testing.assert_array_equal(back.encoder.params[name].data, p.data)
    texts = ["red fish", "blue green fish fish"]
    np.testing.assert_array_equal(back.embed(texts), emb.embed(texts))


def test_header_layout(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC == b"SEMB"
    assert struct.unpack("<I", raw[4:8])[0] == VERSION == 1
    manifest_len = struct.unpack("<I", raw[8:12])[0]
    manifest = raw[12 : 12 + manifest_len].decode("utf-8")
    assert '"pooling"' in manifest
    # trailer is the crc of the tensor payload (everything between manifest and crc)
    stored = struct.unpack("<I", raw[-4:])[0]
    assert stored == zlib.crc32(raw[12 + manifest_len : -4]) & 0xFFFFFFFF


def test_payload_is_little_endian_f32_in_manifest_order(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path)
    raw = path.read_bytes()
    manifest_len = struct.unpack("<I", raw[8:12])[0]
    payload = raw[12 + manifest_len : -4]
    first = emb.encoder.params["tok_emb"].data.astype("<f4")
    got = np.frombuffer(payload[: first.nbytes], dtype="<f4").reshape(first.shape)
    np.testing.assert_array_equal(got, first)


def test_bad_magic(tmp_path):
    path = tmp_path / "x.semb"
    path.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(FormatError) as err:
        load_checkpoint(path)
    assert "magic" in str(err.value)


def test_unsupported_version(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 9)
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        load_checkpoint(path)


def test_truncated_file(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(TruncatedError):
        load_checkpoint(path)


def test_corrupted_payload_fails_checksum(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path)
    raw = bytearray(path.read_bytes())
    raw[-20] ^= 0xFF  # flip bits inside the last parameter array
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError):
        load_checkpoint(path)


def test_trailing_garbage_rejected(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path)
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_load_checkpoint_returns_manifest_and_arrays(tmp_path):
    path = tmp_path / "raw.semb"
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    save_checkpoint(
        path,
        config={"vocab_size": 8, "dim": 3},
        pooling="mean",
        include_special=True,
        vocab_tokens=["a", "b", "c", "d"],
        params={"w": arr},
    )
    manifest, params = load_checkpoint(path)
    assert manifest["vocab"] == ["a", "b", "c", "d"]
    assert manifest["params"] == [{"name": "w", "shape": [2, 3], "offset": 0}]
    assert manifest["objective"] is None
    assert manifest["steps"] == 0
    np.testing.assert_array_equal(params["w"], arr)


def test_manifest_offsets_walk_the_payload(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    emb.save(path, objective={"objective": "triplet", "margin": 1.0}, steps=42)
    manifest, params = load_checkpoint(path)
    assert manifest["objective"] == {"objective": "triplet", "margin": 1.0}
    assert manifest["steps"] == 42
    running = 0
    for entry in manifest["params"]:
        assert entry["offset"] == running
        running += params[entry["name"]].nbytes


def test_wrong_offset_in_manifest_rejected(tmp_path):
    path = tmp_path / "raw.semb"
    save_checkpoint(
        path,
        config={"vocab_size": 8, "dim": 3},
        pooling="mean",
        include_special=True,
        vocab_tokens=["a", "b", "c", "d"],
        params={"w": np.zeros((2, 3), dtype=np.float32), "b": np.zeros(3, dtype=np.float32)},
    )
    raw = path.read_bytes()
    manifest_len = struct.unpack("<I", raw[8:12])[0]
    doctored = raw[12 : 12 + manifest_len].decode("utf-8").replace('"offset": 24', '"offset": 16')
    body = doctored.encode("utf-8")
    path.write_bytes(raw[:8] + struct.pack("<I", len(body)) + body + raw[12 + manifest_len :])
    with pytest.raises(FormatError) as err:
        load_checkpoint(path)
    assert "offset" in str(err.value)


def test_embedder_load_rejects_param_set_mismatch(tmp_path):
    emb = small_embedder()
    path = tmp_path / "model.semb"
    params = dict(emb.encoder.params)
    params.pop("tok_emb")
    save_checkpoint(
        path,
        config=emb.encoder.config.to_dict(),
        pooling="mean",
        include_special=True,
        vocab_tokens=emb.vocab.tokens,
        params=params,
    )
    with pytest.raises(FormatError) as err:
        SentenceEmbedder.load(path)
    assert "tok_emb" in str(err.value)


def test_embedder_vocab_size_must_match_config():
    vocab = Vocab(["only", "two"])
    cfg = EncoderConfig(vocab_size=99, dim=8, n_layers=1, n_heads=2, ffn_dim=8, max_seq_len=8)
    with pytest.raises(ValueError):
        SentenceEmbedder(vocab, Encoder(cfg))


def test_embed_batches_agree_with_single_batch():
    emb = small_embedder(seed=9)
    texts = ["red", "green blue", "fish fish fish red green", "blue"] * 3
    whole = emb.embed(texts, batch_size=64)
    split = emb.embed(texts, batch_size=2)
    np.testing.assert_allclose(split, whole, rtol=1e-5, atol=1e-6)
    assert whole.dtype == np.float32
    assert whole.shape == (len(texts), emb.dim)


def test_embed_empty_list():
    emb = small_embedder()
    out = emb.embed([])
    assert out.shape == (0, emb.dim)


def test_exclude_special_changes_mean_pooling():
    vocab = Vocab(["red", "green", "blue", "fish"])
    cfg = EncoderConfig(vocab_size=vocab.size, dim=8, n_layers=1, n_heads=2, ffn_dim=12, max_seq_len=10)
    enc = Encoder(cfg, seed=2)
    with_special = SentenceEmbedder(vocab, enc, pooling="mean", include_special=True)
    without = SentenceEmbedder(vocab, enc, pooling="mean", include_special=False)
    texts = ["red green fish"]
    a = with_special.embed(texts)
    b = without.embed(texts)
    assert not np.allclose(a, b)
    # with no interior tokens the marker positions are all there is
    np.testing.assert_array_equal(with_special.embed([""]), without.embed([""]))
