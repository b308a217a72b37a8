import dataclasses
import math

import numpy as np
import pytest
from scipy.linalg import expm

from hcmu_surfaces import pipeline
from hcmu_surfaces.config import GridSpec, RunConfig
from hcmu_surfaces.core import (K_of_x, conformal_factor, dp_dK, make_x_map, validate_params,
                                x_of_K)
from hcmu_surfaces.errors import DegenerateMetric
from hcmu_surfaces.immersion import (AmbientModel, Model, canonical_frame, integrability_residual,
                                     sweep_surface, x_generator, y_generator)

P = validate_params(1, 0)


def test_ambient_models():
    assert AmbientModel(0).model is Model.FLAT3 and AmbientModel(0).dim == 3
    assert AmbientModel(1).model is Model.SPHERE4
    h = AmbientModel(-1)
    assert h.model is Model.HYPERBOLOID4 and h.eta4 == -1
    f = canonical_frame(h, 0.5)
    assert h.inner(f.r, f.r) == pytest.approx(-1)
    assert h.inner(f.r_x, f.r_x) == pytest.approx(0.5)


def test_generators_reduce_and_reject():
    M = x_generator(2.0, 0.0, 0.7, 0.0, 0.0)
    # r_xx row: only the normal component h11 survives
    assert np.allclose(M[1], [0, 0, 0, 0.7])
    with pytest.raises(DegenerateMetric):
        y_generator(0.0, 0.1, 0.0, 0.1, 0.0)


def test_half_ux_matches_log_derivative():
    m = make_x_map(P)
    for K in (0.2, 0.5, 0.8):
        x0 = x_of_K(m, K)
        h = 1e-5
        lu = [math.log(conformal_factor(P, K_of_x(m, x0 + d))) for d in (-h, h)]
        assert (lu[1] - lu[0]) / (2 * h) / 2 == pytest.approx(dp_dK(P, K), abs=1e-6)


def test_y_flow_group_law(flat_run):
    _, V = flat_run.profile.generators(10)
    assert np.allclose(expm(0 * V), np.eye(4), atol=0)
    assert np.max(np.abs(expm(0.3 * V) - expm(0.1 * V) @ expm(0.2 * V))) < 1e-10


def test_profile_constraints(flat_run):
    d = flat_run.patch.diagnostics
    assert d["max_orthonormality_drift"] < 1e-8
    assert flat_run.profile.max_drift < 1e-8


@pytest.mark.parametrize("c", [1.0, -1.0])
def test_space_form_constraint(c):
    run = pipeline.immerse(RunConfig(1.0, 0.0, c=c, A=0.01, s=1.0))
    amb = run.patch.ambient
    rr = amb.inner(run.patch.positions, run.patch.positions)
    assert np.max(np.abs(rr - 1 / c)) < 1e-8
    if c < 0:
        assert np.all(run.patch.positions[..., 3] > 0)


def test_zero_sweep_is_profile(flat_run):
    pr = flat_run.profile
    patch = sweep_surface(pr, [0.0])
    assert np.array_equal(patch.positions[:, 0], pr.frames[:, 0, :3])


def test_distances_invariant_under_y(flat_run):
    R = flat_run.patch.positions
    for i1, i2 in ((0, 50), (30, 170), (100, 200)):
        dist = np.linalg.norm(R[i1] - R[i2], axis=-1)
        assert np.ptp(dist) < 1e-8


def test_resweep_from_other_row(flat_run):
    patch, pr = flat_run.patch, flat_run.profile
    j = 70
    moved = dataclasses.replace(pr, frames=patch.frames[:, j])
    again = sweep_surface(moved, patch.y - patch.y[j])
    assert np.max(np.abs(again.positions - patch.positions)) < 1e-8


def test_integrability_second_order_and_control():
    res = []
    for h in (4e-3, 2e-3, 1e-3):
        cfg = pipeline.centred(RunConfig(1.0, 0.0, A=0.01), h)
        run = pipeline.immerse(cfg.replace(y_grid=GridSpec(0, 0, 1)))
        res.append(np.max(integrability_residual(run.profile)))
    assert np.all(np.log2(np.array(res[:-1]) / np.array(res[1:])) > 1.8)
    cfg = RunConfig(1.0, 0.0, A=0.01, y_grid=GridSpec(0, 0, 1))
    bad = pipeline.immerse(cfg, h_scale=1.01)
    assert np.max(integrability_residual(bad.profile)) > 1e3 * res[-1]


def test_digest_is_stable(flat_run):
    assert flat_run.patch.digest() == flat_run.patch.digest()
    assert len(flat_run.patch.digest()) == 64
