"""How large can the design-equation residual get when an exact solution is
rounded to four decimals (in units of pi)?

Exact solutions are obtained by refining the reference rows, then perturbed
uniformly by up to half a unit in the fourth decimal.

    python3 scripts/rounding_study.py --draws 4000
"""

import argparse
import math

import numpy as np

from nbgate.design import batched_residuals, default_order, reference_table

from reproduce_table import refine

PI = math.pi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    for row in reference_table():
        if row.exact:
            continue
        phases, norm = refine(row)
        if norm > 1e-9:
            print(f"N={row.n_segments} theta={row.theta_pi}pi: no exact solution near the row (residual {norm:.2e})")
            continue
        noise = rng.uniform(-5e-5, 5e-5, (args.draws, row.n_segments)) * PI
        noise[:, [0, -1]] = 0.0
        res = np.linalg.norm(batched_residuals(row.theta, phases + noise, default_order(row.n_segments)), axis=1)
        print(f"N={row.n_segments:>2} theta={row.theta_pi}pi: rounded residual median {np.median(res):.2e}, "
              f"95% {np.quantile(res, 0.95):.2e}, max {res.max():.2e}")


if __name__ == "__main__":
    main()
