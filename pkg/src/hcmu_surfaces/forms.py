"""Second fundamental form, Hopf differential and the Weingarten criterion.

In the conformal coordinate z = x + iy of the HCMU metric the Hopf
coefficient is written Q = (e^u/2) sqrt(H^2 - K + c) e^{i theta}, so

    h11 = e^u (H + sqrt(X) cos theta)
    h12 = -e^u sqrt(X) sin theta
    h22 = e^u (H - sqrt(X) cos theta),      X = H^2 - K + c.

Along a Weingarten realization sin(theta) = A / (p sqrt(X)); ``h12`` is then
the constant ``-4A`` (since e^u = 4p).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .core import FootballParams, XOfKMap, conformal_factor, invert_x, p_of_K
from .errors import DomainError, MetricShapeMismatch, ThetaSaturation, UmbilicReached
from .ode import HSolution


class ThetaPairing(enum.IntEnum):
    """How the ODE branch fixes the sign of cos(theta).

    STANDARD: Plus branch <-> cos(theta) <= 0 (theta = pi when A = 0).
    """

    STANDARD = 1
    FLIPPED = -1


def cos_sign_for(branch, pairing=ThetaPairing.STANDARD):
    return -np.asarray(branch, dtype=int) * int(pairing)


def theta_of_state(params, c, A, K, H, branch, pairing=ThetaPairing.STANDARD):
    """(sin theta, cos theta, theta) at a state of the mean-curvature ODE.

    Works elementwise on arrays; ``branch`` may be an array of +/-1.
    """
    K = np.asarray(K, dtype=float)
    H = np.asarray(H, dtype=float)
    p = p_of_K(params, K)
    X = H * H - K + c
    if np.any(X <= 0):
        raise UmbilicReached("H^2 - K + c <= 0 in theta_of_state")
    sX = np.sqrt(X)
    D = p * p * X - A * A
    if np.any(D < 0):
        raise ThetaSaturation("|A| > p sqrt(H^2 - K + c)", A=A)
    sin_t = A / (p * sX)
    cos_t = cos_sign_for(np.asarray(branch), pairing) * np.sqrt(D) / (p * sX)
    theta = np.arctan2(sin_t, cos_t)
    if theta.ndim == 0:
        return float(sin_t), float(cos_t), float(theta)
    return sin_t, cos_t, theta


@dataclass(frozen=True)
class FormsGrid:
    """Per-x samples of the metric, second fundamental form and curvatures."""

    x: np.ndarray
    K: np.ndarray
    e_u: np.ndarray
    H: np.ndarray
    theta: np.ndarray
    sin_theta: np.ndarray
    cos_theta: np.ndarray
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray
    kp1: np.ndarray
    kp2: np.ndarray
    c: float
    A: float
    pairing: ThetaPairing = ThetaPairing.STANDARD
    near_extremum: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def Q(self):
        return 0.25 * (self.h11 - self.h22 - 2j * self.h12)

    def __len__(self):
        return len(self.x)

    def as_field(self, y):
        """Replicate the x-profile over a y-grid (all coefficients are y-free)."""
        y = np.asarray(y, dtype=float)
        ny = len(y)

        def tile(a):
            return np.repeat(np.asarray(a)[:, None], ny, axis=1)

        return FormsField(x=self.x, y=y, K=tile(self.K), e_u=tile(self.e_u),
                          h11=tile(self.h11), h12=tile(self.h12), h22=tile(self.h22))


def forms_from_state(params, c, A, x, K, H, branch, pairing=ThetaPairing.STANDARD, **extra):
    """Assemble a FormsGrid from per-sample (x, K, H, branch)."""
    x = np.asarray(x, dtype=float)
    K = np.asarray(K, dtype=float)
    H = np.asarray(H, dtype=float)
    e_u = conformal_factor(params, K)
    sin_t, cos_t, theta = theta_of_state(params, c, A, K, H, branch, pairing)
    sX = np.sqrt(H * H - K + c)
    h11 = e_u * H + e_u * sX * cos_t
    h22 = e_u * H - e_u * sX * cos_t
    h12 = -e_u * sX * sin_t
    return FormsGrid(x=x, K=K, e_u=e_u, H=H, theta=theta, sin_theta=sin_t, cos_theta=cos_t,
                     h11=h11, h12=h12, h22=h22, kp1=H + sX, kp2=H - sX, c=float(c),
                     A=float(A), pairing=ThetaPairing(pairing), **extra)


def _sample_solution(sol: HSolution, xmap: XOfKMap, x_grid):
    x_grid = np.asarray(x_grid, dtype=float)
    K, near = invert_x(xmap, x_grid)
    K = np.atleast_1d(K)
    lo, hi = sol.K_range
    bad = (K < lo) | (K > hi)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(f"x={x_grid[i]!r} maps to K={K[i]!r}, outside the solved range",
                          x=float(x_grid[i]), K=float(K[i]))
    H, _ = sol.at(K)
    branch = np.array([int(sol.branch_at(k)) for k in K])
    return x_grid, K, np.atleast_1d(H), branch, np.atleast_1d(near)


def build_forms(sol: HSolution, params: FootballParams, xmap: XOfKMap, x_grid,
                pairing="auto", h_transform=None) -> FormsGrid:
    """Evaluate K(x), H, theta and the fundamental forms on an x-grid.

    ``pairing="auto"`` tries both cos(theta) sign conventions and keeps the
    one with the smaller Codazzi residual. ``h_transform(x, H)`` perturbs the
    mean curvature before the forms are built (negative controls).
    """
    c, A = sol.meta.space_form_c, sol.meta.A.a
    x, K, H, branch, near = _sample_solution(sol, xmap, x_grid)
    if h_transform is not None:
        H = np.asarray(h_transform(x, H), dtype=float)
    try:
        if pairing == "auto":
            pairing = select_pairing(params, c, A, x, K, H, branch)
        return forms_from_state(params, c, A, x, K, H, branch, ThetaPairing(pairing),
                                near_extremum=near)
    except DomainError as exc:
        exc.context.setdefault("x_first", float(x[0]))
        raise


def select_pairing(params, c, A, x, K, H, branch, probe=21):
    """Pick the cos(theta) sign convention that satisfies Codazzi on a probe."""
    n = len(x)
    if n < 3 or not _uniform(x):
        return ThetaPairing.STANDARD
    m = min(n, probe)
    start = (n - m) // 2
    sl = slice(start, start + m)
    best, best_res = ThetaPairing.STANDARD, np.inf
    for pairing in (ThetaPairing.STANDARD, ThetaPairing.FLIPPED):
        g = forms_from_state(params, c, A, x[sl], K[sl], H[sl], branch[sl], pairing)
        r1, r2 = codazzi_residual(g)
        res = max(np.max(np.abs(r1)), np.max(np.abs(r2)))
        if res < best_res:
            best, best_res = pairing, res
    return best


def gauss_residual(grid: FormsGrid, c: float | None = None):
    """Hopf-modulus and determinant forms of the Gauss equation, per sample."""
    c = grid.c if c is None else c
    X = grid.H ** 2 - grid.K + c
    hopf = 4 * np.abs(grid.Q) ** 2 - grid.e_u ** 2 * X
    det = grid.h11 * grid.h22 - grid.h12 ** 2 - grid.e_u ** 2 * (grid.K - c)
    return hopf, det


def _uniform(x, rtol=1e-9):
    d = np.diff(x)
    return len(d) > 0 and np.all(np.abs(d - d[0]) <= rtol * abs(d[0]))


def codazzi_residual(grid: FormsGrid, sol=None, xmap=None):
    """Central-difference residuals of the Codazzi system at interior samples.

        r1 = H_x sin(theta) + sqrt(X) theta_x
        r2 = H_x cos(theta) - sqrt(X) (ln e^u sqrt(X))_x
    """
    x = grid.x
    if len(x) < 3:
        raise DomainError("Codazzi residual needs at least three samples")
    if not _uniform(x):
        raise DomainError("Codazzi residual needs a uniform x-grid")
    h = x[1] - x[0]
    sX = np.sqrt(grid.H ** 2 - grid.K + grid.c)
    theta = np.unwrap(grid.theta)
    log_term = np.log(grid.e_u * sX)

    def d(a):
        return (a[2:] - a[:-2]) / (2 * h)

    H_x, th_x, L_x = d(grid.H), d(theta), d(log_term)
    inner = slice(1, -1)
    r1 = H_x * grid.sin_theta[inner] + sX[inner] * th_x
    r2 = H_x * grid.cos_theta[inner] - sX[inner] * L_x
    return r1, r2


@dataclass(frozen=True)
class FormsField:
    """Form coefficients over an (x, y) grid, arrays shaped (len(x), len(y))."""

    x: np.ndarray
    y: np.ndarray
    K: np.ndarray
    e_u: np.ndarray
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class WeingartenVerdict:
    is_weingarten: bool
    h12_spread: float
    h12_value: float
    H_y_spread: float
    H_reconstructed_y_spread: float
    H_depends_only_on_x: bool


def _y_spread(a):
    a = np.asarray(a)
    return float(np.max(np.max(a, axis=1) - np.min(a, axis=1))) if a.size else 0.0


def classify_weingarten(forms: FormsField, c: float = 0.0, tol_abs: float = 1e-9,
                        tol_rel: float = 1e-6, metric_tol: float = 1e-9,
                        x_only_tol: float = 1e-6) -> WeingartenVerdict:
    """Decide the Weingarten property from sampled form data via h12 constancy.

    The metric must have the HCMU conformal shape (e^u depending on x only).
    H is additionally recomputed with h22 rebuilt from the Gauss equation,
    h22 = (e^{2u}(K - c) + h12^2) / h11, to report whether it is y-free.
    """
    e_u = np.asarray(forms.e_u, dtype=float)
    if e_u.size == 0:
        raise DomainError("empty forms field")
    eu_spread = _y_spread(e_u)
    if eu_spread > metric_tol * max(1.0, float(np.max(np.abs(e_u)))):
        raise MetricShapeMismatch("conformal factor varies in y", spread=eu_spread)
    h12 = np.asarray(forms.h12, dtype=float)
    spread = float(np.max(h12) - np.min(h12))
    is_w = spread < tol_abs + tol_rel * float(np.median(np.abs(h12)))
    H = (forms.h11 + forms.h22) / (2 * e_u)
    h11 = np.asarray(forms.h11, dtype=float)
    if np.any(h11 == 0):
        raise DomainError("Gauss reconstruction needs h11 != 0")
    h22_rec = (e_u ** 2 * (forms.K - c) + h12 ** 2) / h11
    H_rec = (h11 + h22_rec) / (2 * e_u)
    rec_spread = _y_spread(H_rec)
    return WeingartenVerdict(
        is_weingarten=bool(is_w),
        h12_spread=spread,
        h12_value=float(np.median(h12)),
        H_y_spread=_y_spread(H),
        H_reconstructed_y_spread=rec_spread,
        H_depends_only_on_x=bool(rec_spread < x_only_tol),
    )
