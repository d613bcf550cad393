import numpy as np
import pytest

from ctcfuse.core import Kind, PosteriorMatrix, Vocab
from ctcfuse.ctc import collapse
from ctcfuse.fusion import hann_weights
from ctcfuse.pipeline import slice_source, synth_source
from ctcfuse.segmentation import chunk_tokens, segment, segment_many
from ctcfuse.synth import SynthSpec, random_track
from ctcfuse.windowing import WindowConfig

VOCAB = Vocab(("<blank>", "▁a", "b", "▁c"))


def planted(T, emits):
    """Log-prob matrix whose best path emits (frame, token) pairs on single frames."""
    logits = np.full((T, 4), -5.0)
    logits[:, 0] = 5.0
    for f, tok in emits:
        logits[f, 0] = -5.0
        logits[f, tok] = 5.0
    return PosteriorMatrix(logits, Kind.LOGITS)


def test_chunk_assignment_by_emit_frame():
    post = planted(1000, [(10, 1), (480, 2), (510, 3)])
    m = segment(slice_source(post), WindowConfig(500, 450), hann_weights(500), [1, 2, 3], 1000, VOCAB)
    assert [s.token_ids for s in m.segments] == [(1, 2), (3,)]
    assert [(s.frame_start, s.frame_end) for s in m.segments] == [(0, 500), (500, 1000)]
    assert m.lines() == ["utt 0 0 500\t▁a b", "utt 1 500 1000\t▁c"]


def test_short_utterance_single_chunk():
    post = planted(300, [(20, 1), (200, 3)])
    m = segment(slice_source(post), WindowConfig(100, 90), hann_weights(100), [1, 3], 300, VOCAB)
    assert len(m.segments) == 1 and m.segments[0].token_ids == (1, 3)


def test_empty_reference():
    post = planted(1200, [])
    m = segment(slice_source(post), WindowConfig(500, 450), hann_weights(500), [], 1200, VOCAB)
    assert [(s.frame_start, s.frame_end, s.token_ids) for s in m.segments] == [(0, 500, ()), (500, 1000, ()), (1000, 1200, ())]


def test_chunk_tokens_validation():
    with pytest.raises(ValueError):
        chunk_tokens([], [], 10, 0)


def test_segment_many_reports_failures(rng):
    good = SynthSpec(random_track(600, 4, rng), 4, sigma=0.3, seed=1)
    bad_post = planted(5, [])
    items = [
        ("u1", synth_source(good), collapse(good.track), 600),
        ("u2", slice_source(bad_post), [1, 1, 1, 1], 5),
    ]
    manifests, failures = segment_many(items, WindowConfig(100, 50), hann_weights(100), VOCAB, chunk_frames=200, jobs=2)
    assert [m.source_id for m in manifests] == ["u1"]
    assert set(failures) == {"u2"}
    assert manifests[0].tokens() == collapse(good.track)


def test_deterministic_manifest(rng):
    spec = SynthSpec(random_track(900, 4, rng), 4, sigma=0.8, seed=2)
    run = lambda: segment(synth_source(spec), WindowConfig(200, 60), hann_weights(200), collapse(spec.track), 900, VOCAB).lines()  # noqa: E731
    assert run() == run()
