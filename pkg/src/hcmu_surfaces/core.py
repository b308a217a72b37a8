"""The HCMU football metric in its conformal normal form.

With the character 1-form written locally as ``dz`` the metric reads
``g = e^u |dz|^2`` with ``e^u = 4 p(K)`` and the curvature cubic

    p(K) = -(K - k1)(K - k2)(K + k1 + k2) / 3.

The Gauss curvature depends on ``x = Re z`` alone through ``dK/dx = 2 p(K)``.
This module holds the parameter validation, the cubic and the bijection
``x <-> K`` on the open interval ``(k2, k1)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, DegenerateMetric, RejectedParams

CUSP_TOL = 1e-12
DEFAULT_MARGIN = 1e-3
NEWTON_MAX_ITER = 200


class SingularityKind(str, enum.Enum):
    CONICAL = "Conical"
    CUSP = "Cusp"


@dataclass(frozen=True)
class FootballParams:
    """Curvature extrema of an HCMU football; ``kind`` follows from them."""

    k1: float
    k2: float
    kind: SingularityKind = field(init=False)

    def __post_init__(self):
        k1, k2 = float(self.k1), float(self.k2)
        if not (math.isfinite(k1) and math.isfinite(k2)):
            raise RejectedParams("k1 and k2 must be finite", k1=k1, k2=k2)
        if k1 <= 0:
            raise RejectedParams("k1 must be positive", k1=k1, k2=k2)
        if k2 >= k1:
            raise RejectedParams("k2 must be smaller than k1", k1=k1, k2=k2)
        if abs(k2 + 0.5 * k1) <= CUSP_TOL:
            k2 = -0.5 * k1
            kind = SingularityKind.CUSP
        elif k2 > -(k1 + k2):
            kind = SingularityKind.CONICAL
        else:
            raise RejectedParams(
                "conical case needs k2 > -(k1 + k2); cusp case needs k2 = -k1/2",
                k1=k1, k2=k2)
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "kind", kind)

    @property
    def is_cusp(self) -> bool:
        return self.kind is SingularityKind.CUSP

    @property
    def delta(self) -> float:
        k1, k2 = self.k1, self.k2
        return (k1 * k1 + k1 * k2 + k2 * k2) / 6.0

    def exponents(self):
        """(sigma, beta, gamma) of the logarithmic x(K); None for a cusp."""
        if self.is_cusp:
            return None
        k1, k2 = self.k1, self.k2
        sigma = -3.0 / ((k1 - k2) * (k2 + 2 * k1))
        beta = -3.0 / ((k2 - k1) * (2 * k2 + k1))
        gamma = -3.0 / ((k2 + 2 * k1) * (2 * k2 + k1))
        return sigma, beta, gamma


def validate_params(k1: float, k2: float) -> FootballParams:
    return FootballParams(k1, k2)


def p_of_K(params: FootballParams, K):
    k1, k2 = params.k1, params.k2
    return -(K - k1) * (K - k2) * (K + k1 + k2) / 3.0


def dp_dK(params: FootballParams, K):
    # expanded cubic: p = -(K^3 - a K - b)/3 with a = k1^2 + k1 k2 + k2^2
    a = params.k1 ** 2 + params.k1 * params.k2 + params.k2 ** 2
    return (a - 3.0 * K * K) / 3.0


def _check_open_interval(params, K):
    K_arr = np.asarray(K, dtype=float)
    if np.any(~((K_arr > params.k2) & (K_arr < params.k1))):
        bad = K_arr[~((K_arr > params.k2) & (K_arr < params.k1))].ravel()[0]
        raise DegenerateMetric(
            f"K={bad!r} outside the open interval ({params.k2}, {params.k1})",
            K=float(bad))


def conformal_factor(params: FootballParams, K):
    """e^u = 4 p(K); only defined strictly between the curvature extrema."""
    _check_open_interval(params, K)
    return 4.0 * p_of_K(params, K)


@dataclass(frozen=True)
class CurvatureWindow:
    k_lo: float
    k_hi: float
    margin: float

    def __contains__(self, K):
        return self.k_lo <= K <= self.k_hi


def default_window(params: FootballParams, margin: float = DEFAULT_MARGIN) -> CurvatureWindow:
    if not 0 < margin < 0.5:
        raise RejectedParams("window margin must lie in (0, 0.5)", margin=margin)
    span = params.k1 - params.k2
    return CurvatureWindow(params.k2 + margin * span, params.k1 - margin * span, margin)


@dataclass(frozen=True)
class KAtZero:
    """Pin the integration constant so that x(K_ref) = 0."""

    K_ref: float


@dataclass(frozen=True)
class RawC1:
    c1: float


def _raw_x(params: FootballParams, K):
    """Antiderivative of 1/(2p) without integration constant."""
    k1, k2 = params.k1, params.k2
    if params.is_cusp:
        # p = (k1-K)(K-k2)^2/3; partial fractions of 3/(2(k1-K)(K-k2)^2)
        d = k1 - k2
        return 1.5 * ((np.log(K - k2) - np.log(k1 - K)) / (d * d) - 1.0 / (d * (K - k2)))
    sigma, beta, gamma = params.exponents()
    return 0.5 * (sigma * np.log(k1 - K) + beta * np.log(K - k2) + gamma * np.log(K + k1 + k2))


@dataclass(frozen=True)
class XOfKMap:
    """The bijection between the conformal coordinate x and the curvature K."""

    params: FootballParams
    c1: float
    normalization: object
    window: CurvatureWindow

    @property
    def sigma(self):
        e = self.params.exponents()
        return None if e is None else e[0]

    @property
    def beta(self):
        e = self.params.exponents()
        return None if e is None else e[1]

    @property
    def gamma(self):
        e = self.params.exponents()
        return None if e is None else e[2]

    @property
    def x_range(self):
        return float(x_of_K(self, self.window.k_lo)), float(x_of_K(self, self.window.k_hi))


def make_x_map(params: FootballParams, normalization=None,
               window: CurvatureWindow | None = None) -> XOfKMap:
    """Build the x(K) map; by default x((k1+k2)/2) = 0."""
    if normalization is None:
        normalization = KAtZero(0.5 * (params.k1 + params.k2))
    if window is None:
        window = default_window(params)
    if isinstance(normalization, KAtZero):
        _check_open_interval(params, normalization.K_ref)
        c1 = -float(_raw_x(params, normalization.K_ref))
    elif isinstance(normalization, RawC1):
        c1 = float(normalization.c1)
    else:
        raise TypeError(f"unknown normalization {normalization!r}")
    return XOfKMap(params, c1, normalization, window)


def x_of_K(xmap: XOfKMap, K):
    _check_open_interval(xmap.params, K)
    out = _raw_x(xmap.params, np.asarray(K, dtype=float)) + xmap.c1
    return float(out) if np.ndim(out) == 0 else out


def invert_x(xmap: XOfKMap, x, tol: float = 1e-13):
    """Solve x_of_K(K) = x for K inside the window.

    Vectorized Newton iteration safeguarded by bisection on the window
    bracket. Values of x beyond the window's image clamp to the window edge
    and are flagged as near an extremum.

    Returns ``(K, near_extremum)`` arrays (or scalars for scalar input).
    """
    params, win = xmap.params, xmap.window
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    x_lo, x_hi = xmap.x_range
    below, above = x < x_lo, x > x_hi
    lo = np.full_like(x, win.k_lo)
    hi = np.full_like(x, win.k_hi)
    # start from linear interpolation of the bracket image
    K = win.k_lo + (np.clip(x, x_lo, x_hi) - x_lo) / (x_hi - x_lo) * (win.k_hi - win.k_lo)
    active = ~(below | above)
    for _ in range(NEWTON_MAX_ITER):
        if not active.any():
            break
        Ka = K[active]
        f = _raw_x(params, Ka) + xmap.c1 - x[active]
        pos = f > 0
        hi_a, lo_a = hi[active], lo[active]
        hi_a = np.where(pos, Ka, hi_a)
        lo_a = np.where(pos, lo_a, Ka)
        step = f * 2.0 * p_of_K(params, Ka)
        K_new = Ka - step
        bad = (K_new <= lo_a) | (K_new >= hi_a)
        K_new = np.where(bad, 0.5 * (lo_a + hi_a), K_new)
        done = (np.abs(f) <= tol) | (
            np.abs(K_new - Ka) <= 4e-16 * np.abs(Ka) + 1e-300)
        K[active] = np.where(done, Ka, K_new)
        hi[active], lo[active] = hi_a, lo_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if active.any():
            raise ConvergenceFailure("K_of_x did not converge",
                                     x=float(x[active][0]), iterations=NEWTON_MAX_ITER)
    K = np.where(below, win.k_lo, np.where(above, win.k_hi, K))
    flag = below | above
    if scalar:
        return float(K[0]), bool(flag[0])
    return K, flag


def K_of_x(xmap: XOfKMap, x):
    K, _ = invert_x(xmap, x)
    return K
