import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctcfuse.core import FormatError, Kind, PosteriorMatrix, Vocab, load_vocab, read_pfm, to_log_probs, to_probs, write_pfm


def test_load_vocab_basic(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("<blank>\na\nb\n", encoding="utf-8")
    v = load_vocab(p)
    assert len(v) == 3 and v.blank_id == 0 and v.id("b") == 2


def test_load_vocab_512(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("\n".join(["<blank>"] + [f"▁t{i}" for i in range(511)]) + "\n", encoding="utf-8")
    assert len(load_vocab(p)) == 512


@pytest.mark.parametrize(
    "content",
    [b"<blank>\na\na\n", b"", b"<blank>\n\xff\xfe\n", b"<blank>\n"],
    ids=["duplicate", "empty", "not-utf8", "single-token"],
)
def test_load_vocab_rejects(tmp_path, content):
    p = tmp_path / "v.txt"
    p.write_bytes(content)
    with pytest.raises(FormatError):
        load_vocab(p)


def test_detokenize_sentencepiece():
    v = Vocab(("<blank>", "▁the", "▁he", "art", "."))
    assert v.detokenize([1, 2, 3, 4]) == "the heart."
    assert Vocab(("<b>", "x", "y")).detokenize([1, 2]) == "x y"


def test_pfm_empty_roundtrip(tmp_path):
    m = PosteriorMatrix(np.zeros((0, 4)), Kind.LOGITS)
    p = tmp_path / "e.pfm"
    write_pfm(m, p)
    assert p.stat().st_size == 13
    back = read_pfm(p)
    assert back.frames == 0 and back.vocab_size == 4 and back.kind == Kind.LOGITS


def test_pfm_probs_roundtrip_bit_exact(tmp_path, rng):
    vals = rng.dirichlet(np.ones(3), size=5).astype(np.float32)
    m = PosteriorMatrix(vals, Kind.PROBS)
    p = tmp_path / "r.pfm"
    write_pfm(m, p)
    back = read_pfm(p)
    assert back.kind == Kind.PROBS
    assert back.values.tobytes() == vals.astype("<f4").tobytes()
    # second round trip is byte-identical on disk
    q = tmp_path / "r2.pfm"
    write_pfm(back, q)
    assert p.read_bytes() == q.read_bytes()


def test_pfm_layout(tmp_path):
    m = PosteriorMatrix(np.array([[1.0, -2.0]], dtype=np.float32), Kind.LOGITS)
    p = tmp_path / "l.pfm"
    write_pfm(m, p)
    raw = p.read_bytes()
    assert raw[:4] == b"PFM1" and raw[4] == 0
    assert raw[5:9] == (1).to_bytes(4, "little") and raw[9:13] == (2).to_bytes(4, "little")
    assert np.frombuffer(raw[13:], "<f4").tolist() == [1.0, -2.0]


def test_pfm_bad_magic(tmp_path):
    p = tmp_path / "x.pfm"
    p.write_bytes(b"XXXX" + bytes(9))
    with pytest.raises(FormatError, match="magic"):
        read_pfm(p)


def test_pfm_truncated(tmp_path):
    p = tmp_path / "t.pfm"
    write_pfm(PosteriorMatrix(np.zeros((2, 2)), Kind.LOGITS), p)
    p.write_bytes(p.read_bytes()[:-1])
    with pytest.raises(FormatError, match="payload"):
        read_pfm(p)


def test_pfm_nonfinite(tmp_path):
    p = tmp_path / "n.pfm"
    p.write_bytes(b"PFM1" + bytes([0]) + (1).to_bytes(4, "little") + (1).to_bytes(4, "little") + np.array([np.nan], "<f4").tobytes())
    with pytest.raises(FormatError, match="non-finite"):
        read_pfm(p)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(0, 6), st.integers(1, 5)), elements=st.floats(-50, 50, width=32)))
def test_pfm_roundtrip_property(tmp_path_factory, vals):
    p = tmp_path_factory.mktemp("pfm") / "h.pfm"
    write_pfm(PosteriorMatrix(vals, Kind.LOGITS), p)
    back = read_pfm(p)
    assert back.values.shape == vals.shape
    assert back.values.tobytes() == vals.tobytes()


def test_to_probs_examples():
    assert to_probs(PosteriorMatrix([[0.0, 0.0]], Kind.LOGITS)).values.tolist() == [[0.5, 0.5]]
    np.testing.assert_allclose(to_probs(PosteriorMatrix([[math.log(3), 0.0]], Kind.LOGITS)).values, [[0.75, 0.25]], atol=1e-15)
    probs = PosteriorMatrix(np.array([[0.2, 0.8], [1.0, 0.0]]), Kind.PROBS)
    assert to_probs(probs) is probs


def test_to_probs_large_logits_no_overflow():
    out = to_probs(PosteriorMatrix([[1e4, 0.0, -1e4]], Kind.LOGITS)).values
    assert np.all(np.isfinite(out)) and out[0, 0] == 1.0


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(2, 6)), elements=st.floats(-80, 80)),
    st.sampled_from([Kind.LOGITS, Kind.LOG_PROBS, Kind.PROBS]),
)
def test_to_probs_rows_normalised(vals, kind):
    if kind == Kind.LOG_PROBS:
        vals = vals - np.log(np.exp(vals - vals.max(1, keepdims=True)).sum(1, keepdims=True)) - vals.max(1, keepdims=True)
    elif kind == Kind.PROBS:
        vals = np.exp(vals - vals.max(1, keepdims=True))
        vals = vals / vals.sum(1, keepdims=True)
    p = to_probs(PosteriorMatrix(vals, kind)).values
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_to_log_probs_consistent(rng):
    logits = rng.normal(size=(4, 5))
    lp = to_log_probs(PosteriorMatrix(logits, Kind.LOGITS))
    np.testing.assert_allclose(np.exp(lp), to_probs(PosteriorMatrix(logits, Kind.LOGITS)).values, atol=1e-14)


def test_posterior_validation():
    with pytest.raises(ValueError):
        PosteriorMatrix([[0.5, 0.6]], Kind.PROBS)
    with pytest.raises(ValueError):
        PosteriorMatrix([[np.inf, 0.0]], Kind.LOGITS)
    m = PosteriorMatrix([[0.5, 0.5]], Kind.PROBS)
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0
