"""Frame integration realizing the surface in the space form of curvature c.

The adapted frame (r, r_x, r_y, n) is stored as the rows of a 4x4 array in
ambient coordinates; Euclidean 3-space uses the first three columns. For a
conformal metric e^u(dx^2 + dy^2) with u depending on x alone,

    d/dx (r, r_x, r_y, n) = M(x) (r, r_x, r_y, n)
    d/dy (r, r_x, r_y, n) = V(x) (r, r_x, r_y, n)

where M and V carry the Gauss formula (with the -c e^u r ambient term) and
the Weingarten equations. V does not depend on y, so the y-flow is the
matrix exponential exp(y V(x)).
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ._backend import kernels
from .core import FootballParams, XOfKMap, conformal_factor, dp_dK, invert_x
from .errors import (ConstraintBlowup, DegenerateMetric, DomainError, SolverStopped)
from .forms import ThetaPairing, cos_sign_for
from .ode import HSolution, _STATUS_EVENT

REPAIR_TOL = 1e-10
BLOWUP_TOL = 1e-6


class Model(str, enum.Enum):
    FLAT3 = "Flat3"
    SPHERE4 = "Sphere4"
    HYPERBOLOID4 = "Hyperboloid4"


@dataclass(frozen=True)
class AmbientModel:
    c: float

    @property
    def model(self) -> Model:
        if self.c > 0:
            return Model.SPHERE4
        if self.c < 0:
            return Model.HYPERBOLOID4
        return Model.FLAT3

    @property
    def dim(self):
        return 3 if self.c == 0 else 4

    @property
    def eta4(self):
        return -1.0 if self.c < 0 else 1.0

    @property
    def metric(self):
        return np.diag([1.0, 1.0, 1.0, self.eta4])[: self.dim, : self.dim]

    def inner(self, u, v):
        """Model inner product over the last axis."""
        u = np.asarray(u)
        v = np.asarray(v)
        g = np.array([1.0, 1.0, 1.0, self.eta4])[: u.shape[-1]]
        return np.sum(u * v * g, axis=-1)

    @property
    def radius_sq(self):
        """<r, r> on the model (1/c), or None for Euclidean space."""
        return None if self.c == 0 else 1.0 / self.c


@dataclass(frozen=True)
class FrameState:
    r: np.ndarray
    r_x: np.ndarray
    r_y: np.ndarray
    n: np.ndarray

    def stacked(self):
        S = np.zeros((4, 4))
        for i, v in enumerate((self.r, self.r_x, self.r_y, self.n)):
            S[i, : len(v)] = v
        return S

    @classmethod
    def from_stacked(cls, S, dim):
        return cls(*(np.array(S[i, :dim]) for i in range(4)))


def canonical_frame(ambient: AmbientModel, e_u: float) -> FrameState:
    """Axis-aligned start: r_x, r_y along e1, e2 scaled by sqrt(e^u), n = e3."""
    if e_u <= 0:
        raise DegenerateMetric("conformal factor must be positive", e_u=e_u)
    d = ambient.dim
    s = math.sqrt(e_u)
    r = np.zeros(d)
    if ambient.c != 0:
        r[3] = 1.0 / math.sqrt(abs(ambient.c))
    e = np.eye(d)
    return FrameState(r=r, r_x=s * e[0], r_y=s * e[1], n=e[2].copy())


def _coefficients(params, c, A, K, H, branch, pairing, h_scale=1.0):
    """(e^u, u_x/2, h11, h12, h22) at one sample."""
    e_u = float(conformal_factor(params, K))
    p = e_u / 4
    Hs = H * h_scale
    X = Hs * Hs - K + c
    D = p * p * X - A * A
    if X <= 0 or D < 0:
        raise DomainError("state is not admissible for the forms", K=K, H=Hs)
    cs = float(cos_sign_for(branch, pairing))
    sD = math.sqrt(D)
    h11 = e_u * Hs + 4 * cs * sD
    h22 = e_u * Hs - 4 * cs * sD
    return e_u, float(dp_dK(params, K)), h11, -4.0 * A, h22


def x_generator(e_u, half_ux, h11, h12, c):
    """M(x) with d/dx of the stacked frame equal to M @ S."""
    if e_u <= 0:
        raise DegenerateMetric("conformal factor must be positive", e_u=e_u)
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-c * e_u, half_ux, 0.0, h11],
        [0.0, 0.0, half_ux, h12],
        [0.0, -h11 / e_u, -h12 / e_u, 0.0],
    ])


def y_generator(e_u, half_ux, h12, h22, c):
    """V(x) with d/dy of the stacked frame equal to V @ S."""
    if e_u <= 0:
        raise DegenerateMetric("conformal factor must be positive", e_u=e_u)
    return np.array([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, half_ux, h12],
        [-c * e_u, -half_ux, 0.0, h22],
        [0.0, -h12 / e_u, -h22 / e_u, 0.0],
    ])


def x_system(params, c, A, K, H, branch, pairing=ThetaPairing.STANDARD, h_scale=1.0):
    e_u, hx, h11, h12, _ = _coefficients(params, c, A, K, H, branch, pairing, h_scale)
    return x_generator(e_u, hx, h11, h12, c)


def y_system(params, c, A, K, H, branch, pairing=ThetaPairing.STANDARD, h_scale=1.0):
    e_u, hx, _, h12, h22 = _coefficients(params, c, A, K, H, branch, pairing, h_scale)
    return y_generator(e_u, hx, h12, h22, c)


@dataclass(frozen=True)
class Profile:
    """Frames along the x-grid at y = 0."""

    x: np.ndarray
    K: np.ndarray
    H: np.ndarray
    frames: np.ndarray
    ambient: AmbientModel
    params: FootballParams
    A: float
    branch: int
    pairing: ThetaPairing
    h_scale: float
    base_index: int
    repairs: int
    max_drift: float

    def state(self, i) -> FrameState:
        return FrameState.from_stacked(self.frames[i], self.ambient.dim)

    def generators(self, i):
        args = (self.params, self.ambient.c, self.A, self.K[i], self.H[i], self.branch,
                self.pairing, self.h_scale)
        return x_system(*args), y_system(*args)


_STOP_EXC = {5: ConstraintBlowup}


def integrate_profile(params: FootballParams, sol: HSolution, xmap: XOfKMap,
                      ambient: AmbientModel, x_grid, base_index=None, initial=None,
                      pairing=ThetaPairing.STANDARD, h_scale=1.0, rtol=1e-12, atol=1e-14):
    """Integrate the x-system along ``x_grid`` from a base grid point.

    K and H are carried along with the frame (dK/dx = 2p, dH/dx = 2p dH/dK),
    starting from the solution value at the base point. ``h_scale`` multiplies
    H inside the form coefficients only (negative controls).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or len(x_grid) < 1 or np.any(np.diff(x_grid) <= 0):
        raise DomainError("x_grid must be strictly increasing")
    c, A = ambient.c, sol.meta.A.a
    if sol.meta.space_form_c != c:
        raise DomainError("solution and ambient model disagree on c")
    n = len(x_grid)
    i0 = n // 2 if base_index is None else int(base_index)
    K_all, _ = invert_x(xmap, x_grid)
    K_all = np.atleast_1d(K_all)
    branches = {int(sol.branch_at(k)) for k in K_all}
    if len(branches) != 1:
        raise DomainError("x-grid spans a branch switch; integrate each segment separately")
    branch = branches.pop()
    K0 = float(K_all[i0])
    H0, _ = sol.at(K0)
    if initial is None:
        initial = canonical_frame(ambient, float(conformal_factor(params, K0)))
    S0 = initial.stacked()
    cs = float(cos_sign_for(branch, pairing))
    K_out = np.zeros(n)
    H_out = np.zeros(n)
    S_out = np.zeros((n, 4, 4))
    repairs, drift = 0, 0.0
    max_step = float(np.max(np.diff(x_grid))) if n > 1 else 1.0
    for seg in (x_grid[i0:], x_grid[: i0 + 1][::-1]):
        Ks, Hs, Ss, n_done, status, rep, dr = kernels.integrate_frame(
            params.k1, params.k2, c, A, float(branch), cs, float(h_scale), ambient.eta4,
            seg, K0, H0, S0, rtol, atol, REPAIR_TOL, BLOWUP_TOL, max_step)
        if status != kernels.OK:
            exc = _STOP_EXC.get(status)
            if exc is not None:
                raise exc("frame constraints drifted beyond repair", x=float(seg[n_done]))
            raise SolverStopped(f"frame integration stopped: {_STATUS_EVENT[status].value}",
                                x=float(seg[n_done]))
        repairs += rep
        drift = max(drift, dr)
        if seg[0] == x_grid[i0] and (len(seg) == 1 or seg[-1] >= seg[0]):
            K_out[i0:], H_out[i0:], S_out[i0:] = Ks, Hs, Ss
        else:
            K_out[: i0 + 1], H_out[: i0 + 1], S_out[: i0 + 1] = Ks[::-1], Hs[::-1], Ss[::-1]
    return Profile(x=x_grid, K=K_out, H=H_out, frames=S_out, ambient=ambient, params=params,
                   A=A, branch=branch, pairing=ThetaPairing(pairing), h_scale=float(h_scale),
                   base_index=i0, repairs=repairs, max_drift=drift)


@dataclass(frozen=True)
class SurfacePatch:
    x: np.ndarray
    y: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    frames: np.ndarray
    ambient: AmbientModel
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.positions.shape[:2]

    def digest(self):
        h = hashlib.sha256()
        for a in (self.x, self.y, self.positions):
            h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return h.hexdigest()


def frame_drift(ambient: AmbientModel, e_u, S):
    """Max deviation of the scaled frame from its model Gram matrix."""
    g = np.diag([1.0, 1.0, 1.0, ambient.eta4])
    s = math.sqrt(e_u)
    rows = [S[1] / s, S[2] / s, S[3]]
    target = [1.0, 1.0, 1.0]
    if ambient.c != 0:
        rows.insert(0, S[0] * math.sqrt(abs(ambient.c)))
        target.insert(0, math.copysign(1.0, ambient.c))
    E = np.array(rows)
    G = E @ g @ E.T
    return float(np.max(np.abs(G - np.diag(target))))


def sweep_surface(profile: Profile, y_grid) -> SurfacePatch:
    """Apply the exact y-flow exp(y V(x)) to every profile row."""
    y = np.asarray(y_grid, dtype=float)
    amb = profile.ambient
    nx, ny, d = len(profile.x), len(y), amb.dim
    frames = np.zeros((nx, ny, 4, 4))
    drift_rows = np.zeros(nx)
    constraint_rows = np.zeros(nx)
    for i in range(nx):
        _, V = profile.generators(i)
        E = expm(y[:, None, None] * V[None, :, :])
        frames[i] = E @ profile.frames[i]
        e_u = float(conformal_factor(profile.params, profile.K[i]))
        drift_rows[i] = max(frame_drift(amb, e_u, frames[i, j]) for j in range(ny))
        if amb.c != 0:
            rr = amb.inner(frames[i, :, 0, :], frames[i, :, 0, :])
            constraint_rows[i] = float(np.max(np.abs(rr - 1.0 / amb.c)))
    diagnostics = {
        "orthonormality_drift": drift_rows,
        "constraint_drift": constraint_rows,
        "max_orthonormality_drift": float(drift_rows.max(initial=0.0)),
        "max_constraint_drift": float(constraint_rows.max(initial=0.0)),
        "profile_repairs": profile.repairs,
        "profile_max_drift": profile.max_drift,
    }
    return SurfacePatch(x=profile.x, y=y, positions=frames[:, :, 0, :d],
                        normals=frames[:, :, 3, :d], frames=frames, ambient=amb,
                        diagnostics=diagnostics)


def integrability_residual(profile: Profile):
    """max |dV/dx - [M, V]| over interior rows (zero for Gauss-Codazzi data)."""
    n = len(profile.x)
    if n < 3:
        raise DomainError("need at least three profile rows")
    gens = [profile.generators(i) for i in range(n)]
    out = np.zeros(n - 2)
    for i in range(1, n - 1):
        dV = (gens[i + 1][1] - gens[i - 1][1]) / (profile.x[i + 1] - profile.x[i - 1])
        M, V = gens[i]
        out[i - 1] = np.max(np.abs(dV - (M @ V - V @ M)))
    return out
