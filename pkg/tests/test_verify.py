import numpy as np
import pytest

from hcmu_surfaces import pipeline
from hcmu_surfaces.config import RunConfig
from hcmu_surfaces.errors import StencilOutOfRange
from hcmu_surfaces.immersion import AmbientModel, SurfacePatch
from hcmu_surfaces.verify import (compare, discrete_curvatures, fd_first_form, fd_second_form,
                                  refinement_ladder, run_report)


def fixture_patch(P, N, x, y, c=0.0):
    nx, ny = len(x), len(y)
    return SurfacePatch(x=x, y=y, positions=P, normals=N, frames=np.zeros((nx, ny, 4, 4)),
                        ambient=AmbientModel(c))


def plane():
    x = np.linspace(0, 1, 11)
    y = np.linspace(-1, 0, 11)
    X, Y = np.meshgrid(x, y, indexing="ij")
    P = np.stack([X, Y, np.zeros_like(X)], -1)
    N = np.zeros_like(P)
    N[..., 2] = 1
    return fixture_patch(P, N, x, y)


def sphere(R=1.0, h=1e-3, inward=True):
    u = np.arange(-20, 21) * h
    v = np.arange(-20, 21) * h
    U, Vv = np.meshgrid(u, v, indexing="ij")
    P = R * np.stack([np.cos(Vv) * np.cos(U), np.cos(Vv) * np.sin(U), np.sin(Vv)], -1)
    N = (-1 if inward else 1) * P / R
    return fixture_patch(P, N, u, v)


def test_plane_first_form_exact():
    assert np.max(np.abs(fd_first_form(plane(), 5, 5) - np.eye(2))) < 1e-12
    assert np.max(np.abs(fd_second_form(plane(), 5, 5))) < 1e-12


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_sphere_umbilic(R):
    p = sphere(R)
    I, II = fd_first_form(p, 20, 20), fd_second_form(p, 20, 20)
    assert np.max(np.abs(II - I / R)) < 1e-6
    if R == 1.0:
        K, H = discrete_curvatures(p, 20, 20)
        assert K == pytest.approx(1, abs=1e-6) and H == pytest.approx(1, abs=1e-6)


def test_flipped_normal_negates():
    a = fd_second_form(sphere(inward=True), 10, 10)
    b = fd_second_form(sphere(inward=False), 10, 10)
    assert np.allclose(a, -b, atol=1e-14)


def test_stencil_errors():
    p = plane()
    with pytest.raises(StencilOutOfRange):
        fd_first_form(p, 0, 5)
    with pytest.raises(StencilOutOfRange):
        fd_second_form(p, 5, 10)
    empty = fixture_patch(np.zeros((0, 0, 3)), np.zeros((0, 0, 3)), np.zeros(0), np.zeros(0))
    with pytest.raises(StencilOutOfRange) as info:
        run_report(empty, None)
    assert info.value.record()["error"] == "StencilOutOfRange"


def test_half_row_values(flat_run_a0):
    patch, g = flat_run_a0.patch, flat_run_a0.forms
    i, j = 100, 50
    assert g.K[i] == pytest.approx(0.5, abs=1e-14)
    II = fd_second_form(patch, i, j)
    assert II[0, 0] == pytest.approx(0.168234, rel=1e-4)
    assert abs(II[0, 1]) < 1e-6
    assert II[1, 1] == pytest.approx(0.743015, rel=1e-4)
    K, H = discrete_curvatures(patch, i, j)
    assert K == pytest.approx(0.5, abs=1e-4) and H == pytest.approx(0.911248, abs=1e-4)
    I = fd_first_form(patch, i, j)
    assert abs(I[0, 1]) < 1e-6 * g.e_u[i]


def test_halving_h_quarters_error():
    cfg = RunConfig(1.0, 0.0, A=0.01)

    def build(h):
        r = pipeline.immerse(pipeline.centred(cfg, h))
        return r.patch, r.forms

    lad = refinement_ladder(build, 4e-3)
    assert lad["second_order"]
    for key in ("metric", "second_form", "K", "H"):
        assert min(lad["orders"][key]) > 1.8


def test_nominal_report_passes_and_control_fails(flat_run):
    neg = pipeline.immerse(flat_run.config, h_scale=1.01)
    rep = run_report(flat_run.patch, flat_run.forms, negative_control=(neg.patch, None))
    assert rep.passed, rep.checks
    assert rep.patch_hash == flat_run.patch.digest()
    ctrl = rep.negative_controls["perturbed_H"]
    assert ctrl["report_failed"]
    assert "H" in ctrl["failed_checks"]
    assert abs(rep.summary["reconstructed_h12"] + 0.04) < 1e-4


@pytest.mark.parametrize("c", [1.0, -1.0])
def test_space_form_report(c):
    run = pipeline.immerse(RunConfig(1.0, 0.0, c=c, A=0.01, s=1.0))
    _, _, _, K_err, _ = compare(run.patch, run.forms)
    assert np.max(K_err) < 1e-4
    rep = run_report(run.patch, run.forms)
    assert rep.passed, rep.checks
