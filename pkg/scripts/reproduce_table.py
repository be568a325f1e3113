"""Check the reference rows against the design equations and refine each one
to the nearest exact solution.

    python3 scripts/reproduce_table.py [--out refined.json]
"""

import argparse
import json
import math

import numpy as np

from nbgate.design import (
    DesignSpec,
    SolverOptions,
    batched_residuals,
    circular_distance,
    default_order,
    levenberg_marquardt,
    nb_residuals,
    reference_table,
)
from nbgate.sequence import CompositeSequence

PI = math.pi


def refine(row):
    theta, order = row.theta, default_order(row.n_segments)
    start = np.array(row.phases_pi[1:-1])[None] * PI
    ends = np.full((1, 1), PI / 4)

    def fun(free):
        k = len(free)
        return batched_residuals(theta, np.concatenate([np.repeat(ends, k, 0), free, np.repeat(ends, k, 0)], 1), order)

    x, _ = levenberg_marquardt(fun, start, max_iterations=500, tol=1e-13)
    phases = np.concatenate([[PI / 4], x[0], [PI / 4]])
    norm = float(np.linalg.norm(nb_residuals(CompositeSequence.narrowband(theta, phases), order)))
    return phases, norm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write refined rows as JSON")
    args = ap.parse_args()

    out = []
    print(f"{'N':>3} {'theta':>6} {'order':>5} {'row residual':>17} {'refined residual':>17} {'shift/pi':>9}")
    for row in reference_table():
        order = default_order(row.n_segments)
        row_res = float(np.linalg.norm(nb_residuals(row.sequence(), order)))
        phases, norm = refine(row)
        shift = circular_distance(phases, np.array(row.phases_pi) * PI) / PI
        print(f"{row.n_segments:>3} {row.theta_pi:>6} {order:>5} {row_res:>17.3e} {norm:>17.3e} {shift:>9.2e}")
        out.append({"n_segments": row.n_segments, "theta_target_pi": row.theta_pi, "order": order,
                    "row_phases_pi": list(row.phases_pi), "row_residual": row_res,
                    "refined_phases_pi": [float(f"{p / PI:.10g}") for p in phases], "refined_residual": norm})
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
