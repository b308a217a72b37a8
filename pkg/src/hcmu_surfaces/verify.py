"""Finite-difference oracle for sampled immersions.

Everything here is recomputed from patch positions and the ambient inner
product alone; the analytic forms enter only as comparison targets.
Patch normals are consulted for orientation (their sign), never for values.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, HCMUError, StencilOutOfRange
from .forms import FormsField, FormsGrid, classify_weingarten, codazzi_residual
from .immersion import SurfacePatch


@dataclass(frozen=True)
class Tolerances:
    metric_rel: float = 1e-5
    second_form_rel: float = 1e-4
    curvature_abs: float = 1e-4
    h12_abs: float = 1e-4
    codazzi: float = 1e-6


def _spacing(grid, name):
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 3:
        raise StencilOutOfRange(f"{name}-grid needs at least three points", n=len(grid))
    d = np.diff(grid)
    if np.any(np.abs(d - d[0]) > 1e-9 * abs(d[0])):
        raise DomainError(f"{name}-grid must be uniform")
    return float(d[0])


def _metric_vec(patch):
    return np.array([1.0, 1.0, 1.0, patch.ambient.eta4])[: patch.ambient.dim]


def _inner(patch, u, v):
    return np.sum(u * v * _metric_vec(patch), axis=-1)


def _model_normal(patch, P, Px, Py):
    """Unit vector orthogonal to the tangent plane (and to r when c != 0)."""
    if patch.ambient.dim == 3:
        w = np.cross(Px, Py)
    else:
        rows = np.stack([P, Px, Py], axis=-2)
        w = np.empty(P.shape)
        for k in range(4):
            minor = np.delete(rows, k, axis=-1)
            w[..., k] = (-1) ** k * np.linalg.det(minor)
        # Euclidean-orthogonal cofactor vector -> model-orthogonal vector
        w = w / _metric_vec(patch)
    nn = np.abs(_inner(patch, w, w))
    return w / np.sqrt(nn)[..., None]


@dataclass(frozen=True)
class FDFields:
    """Interior finite-difference data, arrays shaped (nx-2, ny-2, ...)."""

    x: np.ndarray
    y: np.ndarray
    I: np.ndarray
    II: np.ndarray
    normal: np.ndarray

    @property
    def K(self):
        return np.linalg.det(self.II) / np.linalg.det(self.I)

    @property
    def H(self):
        return 0.5 * np.trace(np.linalg.solve(self.I, self.II), axis1=-2, axis2=-1)


def fd_fields(patch: SurfacePatch) -> FDFields:
    """Central differences over every interior grid point."""
    if patch.positions.size == 0:
        raise StencilOutOfRange("empty patch")
    hx = _spacing(patch.x, "x")
    hy = _spacing(patch.y, "y")
    R = patch.positions
    C = R[1:-1, 1:-1]
    Rx = (R[2:, 1:-1] - R[:-2, 1:-1]) / (2 * hx)
    Ry = (R[1:-1, 2:] - R[1:-1, :-2]) / (2 * hy)
    Rxx = (R[2:, 1:-1] - 2 * C + R[:-2, 1:-1]) / hx ** 2
    Ryy = (R[1:-1, 2:] - 2 * C + R[1:-1, :-2]) / hy ** 2
    Rxy = (R[2:, 2:] - R[2:, :-2] - R[:-2, 2:] + R[:-2, :-2]) / (4 * hx * hy)
    n = _model_normal(patch, C, Rx, Ry)
    orient = np.sign(_inner(patch, n, patch.normals[1:-1, 1:-1]))
    n = n * np.where(orient == 0, 1.0, orient)[..., None]
    g11, g12, g22 = _inner(patch, Rx, Rx), _inner(patch, Rx, Ry), _inner(patch, Ry, Ry)
    b11, b12, b22 = _inner(patch, Rxx, n), _inner(patch, Rxy, n), _inner(patch, Ryy, n)
    I = np.stack([np.stack([g11, g12], -1), np.stack([g12, g22], -1)], -2)
    II = np.stack([np.stack([b11, b12], -1), np.stack([b12, b22], -1)], -2)
    return FDFields(x=patch.x[1:-1], y=patch.y[1:-1], I=I, II=II, normal=n)


def _check_point(patch, i, j):
    nx, ny = patch.shape
    if not (1 <= i <= nx - 2 and 1 <= j <= ny - 2):
        raise StencilOutOfRange("point lacks a full central stencil", i=i, j=j, shape=[nx, ny])


def _local(patch, i, j):
    _check_point(patch, i, j)
    sub = SurfacePatch(x=patch.x[i - 1:i + 2], y=patch.y[j - 1:j + 2],
                       positions=patch.positions[i - 1:i + 2, j - 1:j + 2],
                       normals=patch.normals[i - 1:i + 2, j - 1:j + 2],
                       frames=patch.frames[i - 1:i + 2, j - 1:j + 2], ambient=patch.ambient)
    return fd_fields(sub)


def fd_first_form(patch: SurfacePatch, i: int, j: int):
    return _local(patch, i, j).I[0, 0]


def fd_second_form(patch: SurfacePatch, i: int, j: int):
    return _local(patch, i, j).II[0, 0]


def discrete_curvatures(patch: SurfacePatch, i: int, j: int):
    """(K_disc, H_disc) with the ambient shift K = det II / det I + c."""
    f = _local(patch, i, j)
    return float(f.K[0, 0]) + patch.ambient.c, float(f.H[0, 0])


def mixed_partial_residual(patch: SurfacePatch):
    """max |d/dx r_y - d/dy r_x| over interior points, from the swept frame rows."""
    hx = _spacing(patch.x, "x")
    hy = _spacing(patch.y, "y")
    d = patch.ambient.dim
    F = patch.frames
    dry_dx = (F[2:, 1:-1, 2, :d] - F[:-2, 1:-1, 2, :d]) / (2 * hx)
    drx_dy = (F[1:-1, 2:, 1, :d] - F[1:-1, :-2, 1, :d]) / (2 * hy)
    return float(np.max(np.abs(dry_dx - drx_dy)))


@dataclass
class VerificationReport:
    patch_hash: str
    tolerances: dict
    metric_rel_err: np.ndarray
    second_form_rel_err: np.ndarray
    K_abs_err: np.ndarray
    H_abs_err: np.ndarray
    summary: dict
    checks: dict
    passed: bool
    negative_controls: dict = field(default_factory=dict)
    ladder: dict | None = None

    def record(self):
        """JSON-able view (per-point arrays reduced to their maxima)."""
        return {"patch_hash": self.patch_hash, "tolerances": self.tolerances,
                "summary": self.summary, "checks": self.checks, "passed": self.passed,
                "negative_controls": self.negative_controls, "ladder": self.ladder}


def _max(a):
    return float(np.max(a)) if np.size(a) else 0.0


def compare(patch: SurfacePatch, forms: FormsGrid):
    """Per-interior-point errors of the FD oracle against the analytic profile."""
    if len(forms.x) != patch.shape[0] or np.any(forms.x != patch.x):
        raise DomainError("forms grid does not match the patch x-grid")
    f = fd_fields(patch)
    sl = slice(1, -1)
    e_u = forms.e_u[sl][:, None]
    expected_I = e_u[..., None, None] * np.eye(2)
    metric = np.max(np.abs(f.I - expected_I), axis=(-2, -1)) / e_u
    II_an = np.empty_like(f.II)
    II_an[..., 0, 0] = forms.h11[sl][:, None]
    II_an[..., 0, 1] = II_an[..., 1, 0] = forms.h12[sl][:, None]
    II_an[..., 1, 1] = forms.h22[sl][:, None]
    scale = np.linalg.norm(II_an, axis=(-2, -1))
    second = np.max(np.abs(f.II - II_an), axis=(-2, -1)) / np.where(scale > 0, scale, 1.0)
    K_err = np.abs(f.K + patch.ambient.c - forms.K[sl][:, None])
    H_err = np.abs(f.H - forms.H[sl][:, None])
    return f, metric, second, K_err, H_err


def run_report(patch: SurfacePatch, forms: FormsGrid, tolerances: Tolerances | None = None,
               negative_control=None, ladder=None) -> VerificationReport:
    """Full oracle sweep with optional negative control and refinement ladder.

    ``negative_control`` is a (patch, forms) pair generated from perturbed
    data; it passes when the report on it fails. ``ladder`` is the output of
    :func:`refinement_ladder`.
    """
    tol = tolerances or Tolerances()
    if patch.positions.size == 0:
        raise StencilOutOfRange("empty patch")
    f, metric, second, K_err, H_err = compare(patch, forms)
    d = patch.diagnostics
    summary = {
        "metric_rel_err": _max(metric),
        "second_form_rel_err": _max(second),
        "K_abs_err": _max(K_err),
        "H_abs_err": _max(H_err),
        "orthonormality_drift": float(d.get("max_orthonormality_drift", 0.0)),
        "constraint_drift": float(d.get("max_constraint_drift", 0.0)),
        "mixed_partial_residual": mixed_partial_residual(patch),
    }
    r1, r2 = codazzi_residual(forms) if len(forms.x) >= 3 else (np.zeros(0), np.zeros(0))
    summary["codazzi_residual"] = max(_max(np.abs(r1)), _max(np.abs(r2)))
    e_u_rec = 0.5 * (f.I[..., 0, 0] + f.I[..., 1, 1])
    rec = FormsField(x=f.x, y=f.y, K=f.K + patch.ambient.c, e_u=e_u_rec, h11=f.II[..., 0, 0],
                     h12=f.II[..., 0, 1], h22=f.II[..., 1, 1])
    try:
        verdict = classify_weingarten(rec, c=patch.ambient.c, tol_abs=tol.h12_abs, tol_rel=0.0,
                                      metric_tol=tol.metric_rel, x_only_tol=tol.curvature_abs)
        summary["reconstructed_h12"] = verdict.h12_value
        summary["reconstructed_h12_spread"] = verdict.h12_spread
        weingarten = verdict.is_weingarten
    except HCMUError as exc:
        summary["classifier_error"] = exc.record()
        weingarten = False
    h12_target = float(np.median(forms.h12))
    checks = {
        "metric": summary["metric_rel_err"] < tol.metric_rel,
        "second_form": summary["second_form_rel_err"] < tol.second_form_rel,
        "K": summary["K_abs_err"] < tol.curvature_abs,
        "H": summary["H_abs_err"] < tol.curvature_abs,
        "codazzi": summary["codazzi_residual"] < tol.codazzi,
        "weingarten": bool(weingarten),
        "h12_constant": abs(summary.get("reconstructed_h12", np.inf) - h12_target) < tol.h12_abs,
    }
    passed = all(checks.values())
    controls = {}
    if negative_control is not None:
        cp, cf = negative_control
        sub = run_report(cp, forms if cf is None else cf, tol)
        controls["perturbed_H"] = {"report_failed": not sub.passed,
                                   "failed_checks": sorted(k for k, v in sub.checks.items() if not v),
                                   "summary": sub.summary}
        passed = passed and not sub.passed
    if ladder is not None:
        checks["ladder_order"] = bool(ladder.get("second_order", False))
        passed = passed and checks["ladder_order"]
    return VerificationReport(
        patch_hash=patch.digest(), tolerances=asdict(tol), metric_rel_err=metric,
        second_form_rel_err=second, K_abs_err=K_err, H_abs_err=H_err, summary=summary,
        checks={k: bool(v) for k, v in checks.items()}, passed=bool(passed),
        negative_controls=controls, ladder=ladder)


def refinement_ladder(build, h, levels=3, min_order=1.8):
    """Oracle errors for spacings h, h/2, h/4, ... and their observed orders.

    ``build(h)`` returns a (patch, forms) pair on grids of spacing h about a
    fixed centre point; errors are taken at the shared centre row/column so
    the comparison is pointwise.
    """
    hs = [h / 2 ** k for k in range(levels)]
    errs = {"metric": [], "second_form": [], "K": [], "H": []}
    for hk in hs:
        patch, forms = build(hk)
        _, metric, second, K_err, H_err = compare(patch, forms)
        i, j = metric.shape[0] // 2, metric.shape[1] // 2
        for key, arr in zip(errs, (metric, second, K_err, H_err)):
            errs[key].append(float(arr[i, j]))
    orders = {}
    for key, e in errs.items():
        e = np.asarray(e)
        with np.errstate(divide="ignore", invalid="ignore"):
            orders[key] = [float(v) for v in np.log2(e[:-1] / e[1:])]
    ok = all(min(o) > min_order for k, o in orders.items() if k in ("metric", "second_form"))
    return {"h": hs, "errors": errs, "orders": orders, "second_order": bool(ok)}
