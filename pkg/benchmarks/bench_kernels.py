"""Time the numba loops against the numpy paths for each DP kernel.

    python3 benchmarks/bench_kernels.py [--frames 2000] [--labels 100] [--repeat 5]

Both implementations are imported directly, so ``CTCFUSE_BACKEND`` does not
matter here. The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from ctcfuse import kernels
from ctcfuse._accel import HAVE_NUMBA


def cases(frames, labels, vocab, rng):
    logits = rng.normal(size=(frames, vocab))
    logp = logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)
    ext = kernels.extend_labels(rng.integers(1, vocab, size=labels))
    ref = rng.integers(0, 500, size=labels * 4)
    hyp = ref.copy()
    flip = rng.random(hyp.shape) < 0.1
    hyp[flip] = rng.integers(0, 500, size=int(flip.sum()))
    return {
        "ctc_forward": (kernels.ctc_forward_loop, kernels.ctc_forward_np, (logp, ext)),
        "ctc_viterbi": (kernels.ctc_viterbi_loop, kernels.ctc_viterbi_np, (logp, ext)),
        "edit_ops": (kernels.edit_ops_loop, kernels.edit_ops_np, (ref, hyp)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--labels", type=int, default=100)
    ap.add_argument("--vocab", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba not installed: the loop column times interpreted Python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, (loop, vec, inputs) in cases(args.frames, args.labels, args.vocab, rng).items():
        loop(*inputs)  # compile
        a = min(timeit.repeat(lambda: loop(*inputs), number=1, repeat=args.repeat)) * 1e3
        b = min(timeit.repeat(lambda: vec(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12} {a:>10.2f} {b:>10.2f} {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
