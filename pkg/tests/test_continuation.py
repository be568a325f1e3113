import math

import numpy as np
import pytest

from nbgate.continuation import nullity, trace_family, trace_families
from nbgate.design import DesignSpec, SolverOptions, nb_residuals, solve
from nbgate.sequence import CompositeSequence

PI = math.pi


def _spec(n, theta, restarts):
    return DesignSpec(n, theta, solver=SolverOptions(restarts=restarts))


def test_five_segment_solutions_are_isolated():
    spec = _spec(5, PI / 2, 20)
    rec = solve(spec)[0]
    assert nullity(spec, rec.phases) == 0


@pytest.fixture(scope="module")
def seven_half():
    spec = _spec(7, PI / 2, 30)
    recs = solve(spec)
    assert recs
    return spec, recs


def test_seven_segment_solutions_form_curves(seven_half):
    spec, recs = seven_half
    assert all(nullity(spec, r.phases) == 1 for r in recs[:3])


def test_traced_family_stays_on_solutions(seven_half):
    spec, recs = seven_half
    fam = trace_family(spec, recs[0].phases, step=0.05, max_steps=40, close_check=False)
    assert len(fam.points) > 40
    assert np.allclose(fam.points[:, 0], PI / 4) and np.allclose(fam.points[:, -1], PI / 4)
    for p in fam.points[::10]:
        seq = CompositeSequence.narrowband(spec.target_angle, p)
        assert np.linalg.norm(nb_residuals(seq, spec.order)) < 1e-9
    assert fam.distance_to(recs[0].phases) < 1e-9
    # a point half a step along is reachable by a fine local re-trace
    mid = 0.5 * (fam.points[10] + fam.points[11])
    assert fam.nearest_distance(mid, step=0.05) < 1e-3


def test_trace_families_groups_records(seven_half):
    _, recs = seven_half
    fams = trace_families(recs, step=0.02)
    assert 1 <= len(fams) <= len(recs)
    assert all(f.closed for f in fams)
    for r in recs:
        assert min(f.distance_to(r.phases) for f in fams) < 0.1
