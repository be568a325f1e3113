"""Write fidelity profiles for N = 1, 5, 7, 9, 11 at both target angles and
print FWHM and cross-talk metrics.

    python3 scripts/reproduce_fig1.py --outdir profiles/
"""

import argparse
import math
from pathlib import Path

from nbgate.analysis import metrics, profile
from nbgate.design import table_row
from nbgate.sequence import CompositeSequence

PI = math.pi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="profiles")
    ap.add_argument("--samples", type=int, default=3001)
    args = ap.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for theta_pi in (0.25, 0.5):
        base = None
        for n in (1, 5, 7, 9, 11):
            seq = CompositeSequence.single(theta_pi * PI) if n == 1 else table_row(n, theta_pi).sequence()
            p = profile(seq, samples=args.samples)
            (outdir / f"profile_theta{theta_pi}_N{n}.csv").write_text(p.to_csv())
            m = metrics(p)
            base = base or m.fwhm
            ratio = base / m.fwhm if m.fwhm else float("nan")
            print(f"theta={theta_pi}pi N={n:>2}: fwhm={m.fwhm:.4f} (N=1 / N = {ratio:.3f}) "
                  f"min f_identity on [-1,-0.5] = {m.crosstalk_min_identity_fidelity:.4f}")


if __name__ == "__main__":
    main()
