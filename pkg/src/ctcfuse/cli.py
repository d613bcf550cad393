"""``ctcfuse`` command line.

Durations may be given in seconds (converted with ``--frame-rate``, default
25 frames/s) or directly in frames; the engine itself only sees frames.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import synth as synth_mod
from .core import FormatError, Vocab, load_vocab, read_pfm, write_pfm
from .ctc import AlignmentError, BeamConfig, alignment_tsv, collapse, cr_ctc_loss, forced_align
from .fusion import make_weights
from .lm import load_arpa
from .pipeline import convergence_log, decode, directory_source, run_fusion, slice_source, synth_source
from .segmentation import segment
from .sweep import stride_sweep
from .textnorm import NormRules, WerReport, load_rules, wer
from .windowing import Mode, WindowConfig, plan

log = logging.getLogger("ctcfuse")


class CliError(Exception):
    pass


def to_frames(seconds: float | None, frames: int | None, rate: float, what: str) -> int:
    if (seconds is None) == (frames is None):
        raise CliError(f"give exactly one of --{what}-seconds / --{what}-frames")
    if frames is not None:
        return frames
    return int(round(seconds * rate))


def _window_config(args) -> WindowConfig:
    W = to_frames(args.window_seconds, args.window_frames, args.frame_rate, "window")
    S = to_frames(args.stride_seconds, args.stride_frames, args.frame_rate, "stride")
    try:
        return WindowConfig(W, S, Mode(args.mode))
    except ValueError as e:
        raise CliError(str(e)) from None


def _default_vocab(V: int) -> Vocab:
    return Vocab(("<blank>",) + tuple(str(i) for i in range(1, V)))


def _vocab(args, V: int | None = None) -> Vocab:
    if getattr(args, "vocab", None):
        vocab = load_vocab(args.vocab)
        if V is not None and len(vocab) != V:
            raise CliError(f"vocabulary has {len(vocab)} tokens, posteriors have {V}")
        return vocab
    if V is None:
        raise CliError("--vocab is required")
    return _default_vocab(V)


def _source(args, config: WindowConfig):
    """Resolve the posterior source: returns (source, total_frames, vocab_size)."""
    given = [x for x in ("pfm", "window_dir", "synth_spec") if getattr(args, x)]
    if len(given) != 1:
        raise CliError("give exactly one of --pfm, --window-dir, --synth-spec")
    if args.pfm:
        long = read_pfm(args.pfm)
        return slice_source(long), long.frames, long.vocab_size
    if args.window_dir:
        if args.frames is None:
            raise CliError("--window-dir needs --frames (utterance length)")
        source, n_files = directory_source(args.window_dir)
        needed = len(plan(config, args.frames))
        if n_files != needed:
            raise CliError(f"plan needs {needed} windows, {args.window_dir} holds {n_files}")
        V = read_pfm(next(p for p in sorted(Path(args.window_dir).iterdir()) if p.suffix == ".pfm")).vocab_size
        return source, args.frames, V
    spec = _synth_spec(args)
    return synth_source(spec), spec.frames, spec.vocab_size


def _synth_spec(args) -> synth_mod.SynthSpec:
    if not args.track:
        raise CliError("--synth-spec needs --track")
    return synth_mod.load_spec(args.synth_spec, synth_mod.load_track(args.track))


def _beam(args):
    if args.decoder == "greedy":
        return None, None
    cfg = BeamConfig(args.beam_width, args.lm_weight, args.bonus, args.prune_logp)
    return cfg, args.lm


def _fuse(args):
    config = _window_config(args)
    weights = make_weights(args.weights, config.window_len)
    source, T, V = _source(args, config)
    state = run_fusion(source, config, weights, T, V, jobs=args.jobs)
    return config, state, V


# ------------------------------------------------------------------ commands


def cmd_fuse(args):
    _, state, _ = _fuse(args)
    write_pfm(state.fused_matrix(), args.out)


def cmd_decode(args):
    post = read_pfm(args.posteriors)
    vocab = _vocab(args, post.vocab_size)
    beam, lm_path = _beam(args)
    lm = load_arpa(lm_path, vocab) if lm_path else None
    print(vocab.detokenize(decode(post, beam, lm, vocab)))


def cmd_transcribe(args):
    config, state, V = _fuse(args)
    vocab = _vocab(args, V)
    beam, lm_path = _beam(args)
    lm = load_arpa(lm_path, vocab) if lm_path else None
    print(vocab.detokenize(decode(state.fused_matrix(), beam, lm, vocab)))
    if args.convergence_log:
        with open(args.convergence_log, "w") as fh:
            fh.write("frame\tframes_to_first\tframes_to_converged\n")
            for t, first, conv in convergence_log(config, state.total_frames):
                fh.write(f"{t}\t{first}\t{conv}\n")


def _read_ref(args, vocab: Vocab) -> list[int]:
    if args.ref is not None:
        text = args.ref
    else:
        text = Path(args.ref_file).read_text(encoding="utf-8")
    try:
        return vocab.encode(text)
    except (KeyError, ValueError) as e:
        raise CliError(f"reference: {e}") from None


def cmd_align(args):
    post = read_pfm(args.posteriors)
    vocab = _vocab(args, post.vocab_size)
    alignment = forced_align(post, _read_ref(args, vocab), vocab.blank_id)
    sys.stdout.write(alignment_tsv(alignment, vocab))


def cmd_segment(args):
    config = _window_config(args)
    weights = make_weights(args.weights, config.window_len)
    source, T, V = _source(args, config)
    vocab = _vocab(args, V)
    if args.ref is None and args.ref_file is None:
        if not args.synth_spec:
            raise CliError("--ref or --ref-file is required")
        ref = collapse(_synth_spec(args).track)
    else:
        ref = _read_ref(args, vocab)
    manifest = segment(source, config, weights, ref, T, vocab, args.chunk_frames, args.utt_id, jobs=args.jobs)
    for ln in manifest.lines():
        print(ln)


def _read_utts(path) -> dict[str, str]:
    out = {}
    for lineno, ln in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not ln.strip():
            continue
        utt, _, text = ln.partition(" ")
        if "\t" in utt:
            utt, _, rest = ln.partition("\t")
            text = rest
        if utt in out:
            raise CliError(f"{path}:{lineno}: duplicate utterance id {utt}")
        out[utt] = text.strip()
    return out


def _fmt_wer(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def cmd_score(args):
    refs = _read_utts(args.ref)
    hyps = _read_utts(args.hyp)
    missing = sorted(set(refs) - set(hyps))
    if missing:
        raise CliError(f"hypothesis file lacks utterances: {' '.join(missing[:5])}")
    rules = load_rules(args.rules) if args.rules else NormRules()
    ids = list(refs)

    def one(utt):
        return wer(refs[utt], hyps[utt], rules, apply_norm=not args.no_norm)

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(one, ids))
    else:
        reports = [one(u) for u in ids]
    total = WerReport(0, 0, 0, 0)
    print("id\tsub\tdel\tins\tref_words\twer")
    for utt, r in zip(ids, reports):
        total = total + r
        print(f"{utt}\t{r.substitutions}\t{r.deletions}\t{r.insertions}\t{r.ref_words}\t{_fmt_wer(r.wer)}")
    print(f"TOTAL\t{total.substitutions}\t{total.deletions}\t{total.insertions}\t{total.ref_words}\t{_fmt_wer(total.wer)}")


def cmd_synth(args):
    if args.random_frames is not None:
        if not args.track_out:
            raise CliError("--random-frames needs --track-out")
        spec0 = synth_mod.load_spec(args.synth_spec, np.zeros(0, dtype=np.int64))
        track = synth_mod.random_track(args.random_frames, spec0.vocab_size, np.random.default_rng(spec0.seed))
        synth_mod.write_track(track, args.track_out)
        args.track = args.track_out
    spec = _synth_spec(args)
    config = _window_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows = plan(config, spec.frames)
    width = max(5, len(str(len(windows))))
    for w in windows:
        write_pfm(synth_mod.window_logits(spec, w), out / f"window_{w.index:0{width}d}.pfm")
    print(f"{len(windows)} windows, {spec.frames} frames -> {out}")


def cmd_ctc_loss(args):
    v1, v2 = read_pfm(args.view1), read_pfm(args.view2)
    vocab = _vocab(args, v1.vocab_size)
    loss = cr_ctc_loss(v1, v2, _read_ref(args, vocab), args.reg_weight, vocab.blank_id)
    print(f"ctc={loss.ctc:.10g}\treg={loss.reg:.10g}\ttotal={loss.total:.10g}\tlambda={loss.lam:g}")


def cmd_stride_sweep(args):
    spec = _synth_spec(args)
    W = to_frames(args.window_seconds, args.window_frames, args.frame_rate, "window")
    strides = [int(round(float(s) * args.frame_rate)) if args.strides_in_seconds else int(s) for s in args.strides.split(",")]
    seeds = range(spec.seed, spec.seed + args.seeds)
    print("stride\tweights\tsub\tdel\tins\tref_words\twer")
    for shape in args.weights.split(","):
        for stride in strides:
            try:
                (rec,) = stride_sweep(spec, W, [stride], shape, Mode(args.mode), seeds)
            except ValueError as e:
                raise CliError(f"stride {stride}: {e}") from None
            r = rec.report
            print(f"{stride}\t{shape}\t{r.substitutions}\t{r.deletions}\t{r.insertions}\t{r.ref_words}\t{_fmt_wer(r.wer)}")


# ------------------------------------------------------------------ parser


def _add_window_args(p, require=True):
    g = p.add_argument_group("windowing")
    g.add_argument("--window-seconds", type=float, help="window length W in seconds (20 in the offline setup)")
    g.add_argument("--window-frames", type=int, help="window length W in frames (500 = 20 s at 25 fps)")
    if require:
        g.add_argument("--stride-seconds", type=float, help="stride S in seconds (18 offline, 0.32 streaming)")
        g.add_argument("--stride-frames", type=int, help="stride S in frames")
    g.add_argument("--frame-rate", type=float, default=25.0, help="encoder frames per second (default 25)")
    g.add_argument("--mode", choices=[m.value for m in Mode], default="offline",
                   help="streaming shifts windows left by W so the first one ends at frame 0")
    g.add_argument("--weights", default="hann", help="fusion weights: hann (end-zero-free Hann taper) or uniform")
    g.add_argument("--jobs", type=int, default=1, help="windows computed concurrently (ingestion stays ordered)")


def _add_source_args(p):
    g = p.add_argument_group("posterior source")
    g.add_argument("--pfm", help="one long PFM1 file sliced into windows")
    g.add_argument("--window-dir", help="directory with one PFM1 file per window (sorted names)")
    g.add_argument("--frames", type=int, help="utterance length in frames (with --window-dir)")
    g.add_argument("--synth-spec", help="synthetic source config (key=value lines)")
    g.add_argument("--track", help="planted frame-label track, one token id per line")


def _add_decoder_args(p):
    g = p.add_argument_group("decoder")
    g.add_argument("--decoder", choices=["greedy", "beam"], default="greedy")
    g.add_argument("--beam-width", type=int, default=8)
    g.add_argument("--lm", help="ARPA n-gram over vocabulary tokens for shallow fusion")
    g.add_argument("--lm-weight", type=float, default=0.5, help="LM log-prob scale (default 0.5, not tuned)")
    g.add_argument("--bonus", type=float, default=0.0, help="per-token insertion bonus")
    g.add_argument("--prune-logp", type=float, default=None, help="skip tokens below this frame log-prob")


def _add_ref_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ref", help="reference as space-separated vocabulary tokens")
    g.add_argument("--ref-file", help="file with the reference tokens")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctcfuse", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse per-window posteriors into one PFM1 (kind=probs)")
    _add_window_args(p)
    _add_source_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("decode", help="greedy or beam decode a PFM1 posterior file")
    p.add_argument("--posteriors", required=True)
    p.add_argument("--vocab")
    _add_decoder_args(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("transcribe", help="plan, fuse and decode in one go")
    _add_window_args(p)
    _add_source_args(p)
    _add_decoder_args(p)
    p.add_argument("--vocab")
    p.add_argument("--convergence-log", help="write per-frame frames-to-first/converged estimate")
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("align", help="Viterbi forced alignment, TSV to stdout")
    p.add_argument("--posteriors", required=True)
    p.add_argument("--vocab")
    _add_ref_args(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("segment", help="fuse, align and cut into fixed-size chunks")
    _add_window_args(p)
    _add_source_args(p)
    _add_ref_args(p)
    p.add_argument("--vocab")
    p.add_argument("--chunk-frames", type=int, default=500, help="chunk length in frames (default 500)")
    p.add_argument("--utt-id", default="utt")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("score", help="WER of id-prefixed hypothesis lines against references")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--rules", help="extra normalisation rules: kind<TAB>pattern<TAB>replacement")
    p.add_argument("--no-norm", action="store_true", help="score raw text")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="write synthetic per-window logits as PFM1 files")
    _add_window_args(p)
    p.add_argument("--synth-spec", required=True)
    p.add_argument("--track")
    p.add_argument("--random-frames", type=int, help="generate a random track of this many frames")
    p.add_argument("--track-out", help="where to write the generated track")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ctc-loss", help="two-view CTC loss with symmetric-KL consistency term")
    p.add_argument("--view1", required=True)
    p.add_argument("--view2", required=True)
    p.add_argument("--vocab")
    _add_ref_args(p)
    p.add_argument("--reg-weight", "--lambda", dest="reg_weight", type=float, default=0.2)
    p.set_defaults(func=cmd_ctc_loss)

    p = sub.add_parser("stride-sweep", help="WER of synthetic transcription over several strides")
    _add_window_args(p, require=False)
    p.add_argument("--synth-spec", required=True)
    p.add_argument("--track", required=True)
    p.add_argument("--strides", required=True, help="comma-separated strides (frames unless --strides-in-seconds)")
    p.add_argument("--strides-in-seconds", action="store_true")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds pooled per stride")
    p.set_defaults(func=cmd_stride_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (CliError, FormatError, AlignmentError, FileNotFoundError, ValueError, KeyError) as e:
        print(f"ctcfuse {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
