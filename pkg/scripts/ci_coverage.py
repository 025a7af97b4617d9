"""Empirical coverage of the change-point confidence intervals on the dense design.

Each true change is paired with the nearest unused estimate within
floor(sqrt(n)/2); unmatched changes count as not covered.

    python scripts/ci_coverage.py --seeds 50 --level 0.95
"""

import argparse
import sys

import numpy as np

from tensorcp.confidence import brownian_argmax_quantiles, ci_for_changepoint
from tensorcp.detector import PRESETS, DetectorConfig, detect
from tensorcp.harness import cp_tolerance
from tensorcp.simgen import gen_dense_order1


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--signal", type=float, default=0.4)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=50, help="data seeds 0..N-1")
    ap.add_argument("--level", type=float, default=0.95)
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="calibrated")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    config = DetectorConfig.preset(args.preset)
    unit = brownian_argmax_quantiles(1.0, 1 - args.level, args.paths, seed=0, workers=args.threads)
    print(f"unit-scale quantiles ({args.paths} paths): {unit[0]:.3f}, {unit[1]:.3f}")
    covered, total, widths, scales = 0, 0, [], []
    for seed in range(args.seeds):
        seq, spec = gen_dense_order1(args.p, args.signal, seed=seed, sigma=args.sigma)
        det = detect(seq, config)
        tol = cp_tolerance(seq.n)
        free = list(range(det.k_hat))
        for z in spec.changepoints:
            total += 1
            near = [k for k in free if abs(det.locations[k] - z) <= tol]
            if not near:
                continue
            k = min(near, key=lambda j: abs(det.locations[j] - z))
            free.remove(k)
            ci = ci_for_changepoint(seq, det, k + 1, level=args.level, quantiles=unit)
            if ci.available:
                covered += ci.covers(z)
                widths.append(ci.upper - ci.lower)
                scales.append(ci.scale)
    print(f"coverage {covered}/{total} = {covered / total:.3f} at nominal {args.level}")
    print(f"median width {np.median(widths):.1f}, median scale {np.median(scales):.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
