"""Mean curvature H(K) of HCMU Weingarten surfaces.

Along a Weingarten realization without umbilics the mean curvature solves

    dH/dK = (p - 2 p' X) / (2 [p H +/- sqrt(p^2 X - A^2)]),  X = H^2 - K + c,

for a real constant A. The sign in the denominator is the branch. For A = 0
the equation has the closed-form family ``closed_form_H_A0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .core import (CurvatureWindow, FootballParams, default_window, dp_dK, p_of_K)
from .errors import (ConfigError, DenominatorSingular, DomainError, ThetaSaturation,
                     UmbilicReached)


class HBranch(enum.IntEnum):
    PLUS = 1
    MINUS = -1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("plus", "+", "+1", "1"):
            return cls.PLUS
        if key in ("minus", "-", "-1"):
            return cls.MINUS
        raise ConfigError(f"unknown branch {value!r}")


class EventKind(str, enum.Enum):
    UMBILIC = "UmbilicReached"
    THETA_SATURATION = "ThetaSaturation"
    DENOMINATOR = "DenominatorSingular"
    STEP_UNDERFLOW = "StepUnderflow"
    BRANCH_SWITCH = "BranchSwitch"


_STATUS_EVENT = {
    kernels.UMBILIC: EventKind.UMBILIC,
    kernels.THETA_SATURATION: EventKind.THETA_SATURATION,
    kernels.DENOMINATOR: EventKind.DENOMINATOR,
    kernels.STEP_UNDERFLOW: EventKind.STEP_UNDERFLOW,
}


class OnEvent(str, enum.Enum):
    STOP = "Stop"
    SWITCH_BRANCH = "SwitchBranch"


@dataclass(frozen=True)
class WeingartenConstant:
    """The constant A with sin(theta) = A / (p sqrt(H^2 - K + c))."""

    a: float = 0.0

    def admissible(self, params, c, K, H):
        return p_of_K(params, K) ** 2 * (H * H - K + c) >= self.a ** 2


def _margins(params, c, A, K, H):
    p = p_of_K(params, K)
    X = H * H - K + c
    D = p * p * X - A * A
    return p, X, D


def rhs_mean_curvature(params: FootballParams, c: float, A: float, branch, K: float, H: float) -> float:
    """Right-hand side dH/dK of the mean-curvature equation on one branch."""
    A = A.a if isinstance(A, WeingartenConstant) else float(A)
    sign = int(HBranch.parse(branch))
    p, X, D = _margins(params, c, A, K, H)
    if X <= 0:
        raise UmbilicReached("H^2 - K + c <= 0", K=K, H=H)
    if D < 0:
        raise ThetaSaturation("p^2 (H^2 - K + c) < A^2", K=K, H=H, A=A)
    den = p * H + sign * math.sqrt(D)
    if abs(den) <= 1e-12 * (abs(p * H) + math.sqrt(D)):
        raise DenominatorSingular("p H +/- sqrt(p^2 X - A^2) vanishes", K=K, H=H)
    return (p - 2.0 * dp_dK(params, K) * X) / (2.0 * den)


@dataclass(frozen=True)
class AdmissibilityReport:
    umbilic_free: bool
    theta_defined: bool
    denominator_ok: bool
    umbilic_margin: float
    theta_margin: float
    denominator_margin: float

    @property
    def ok(self):
        return self.umbilic_free and self.theta_defined and self.denominator_ok


def admissibility_report(params, c, A, K, H, branch=None, den_tol=1e-12) -> AdmissibilityReport:
    """Flags and margins of the three admissibility conditions at (K, H).

    The denominator margin is ``|2(pH +/- sqrt(p^2 X - A^2))|`` for the given
    branch, or the smaller of the two when no branch is given.
    """
    A = A.a if isinstance(A, WeingartenConstant) else float(A)
    p, X, D = _margins(params, c, A, K, H)
    if D >= 0:
        sD = math.sqrt(D)
        dens = [2 * (p * H + sD), 2 * (p * H - sD)]
        if branch is not None:
            dens = [dens[0] if HBranch.parse(branch) is HBranch.PLUS else dens[1]]
        den_margin = min(abs(d) for d in dens)
    else:
        den_margin = float("nan")
    return AdmissibilityReport(
        umbilic_free=X > 0,
        theta_defined=D >= 0,
        denominator_ok=bool(den_margin > den_tol),
        umbilic_margin=X,
        theta_margin=D,
        denominator_margin=den_margin,
    )


class ClosedFormSign(str, enum.Enum):
    UPPER = "UpperSign"
    LOWER = "LowerSign"


# established numerically by tests/test_ode.py: UpperSign solves the Plus branch
CLOSED_FORM_BRANCH = {ClosedFormSign.UPPER: HBranch.PLUS, ClosedFormSign.LOWER: HBranch.MINUS}


@dataclass(frozen=True)
class ClosedFormParams:
    s: float
    delta: float
    sign: ClosedFormSign = ClosedFormSign.UPPER

    @classmethod
    def for_params(cls, params: FootballParams, s: float, sign=ClosedFormSign.UPPER):
        return cls(float(s), params.delta, ClosedFormSign(sign))

    def poly(self, c, K):
        return -K ** 4 / 4 + c * K ** 3 / 3 + self.delta * K ** 2 - 2 * c * self.delta * K + self.s

    def check_window(self, c, window: CurvatureWindow, n=1001):
        K = np.linspace(window.k_lo, window.k_hi, n)
        if np.any(self.poly(c, K) <= 0):
            raise DomainError("closed-form quartic is not positive on the window",
                              s=self.s, c=c)
        return self

    @property
    def branch(self) -> HBranch:
        return CLOSED_FORM_BRANCH[self.sign]


def closed_form_H_A0(params: FootballParams, c: float, cf: ClosedFormParams, K):
    """Explicit A = 0 solution, -/+ (1/(2 sqrt p)) [(c-K) p / sqrt(q) - sqrt(q)]."""
    q = cf.poly(c, np.asarray(K, dtype=float))
    if np.any(q <= 0):
        raise DomainError("closed-form quartic must be positive", s=cf.s, c=c)
    p = p_of_K(params, np.asarray(K, dtype=float))
    if np.any(p <= 0):
        raise DomainError("K outside the curvature interval")
    sq = np.sqrt(q)
    outer = -1.0 if cf.sign is ClosedFormSign.UPPER else 1.0
    H = outer / (2 * np.sqrt(p)) * ((c - K) * p / sq - sq)
    return float(H) if np.ndim(H) == 0 else H


class EpsForm(str, enum.Enum):
    """Denominator shape: sqrt(4p^2 X - eps) - 2pH or sqrt(4p^2 X - eps) + 2pH."""

    DIFFERENCE = "difference"
    SUM = "sum"


def eps_rhs(params: FootballParams, eps: float, which, K: float, H: float) -> float:
    """Euclidean epsilon-form of the equation (c = 0), both variants."""
    if eps < 0:
        raise DomainError("epsilon must be non-negative", eps=eps)
    which = EpsForm(which)
    p, dp = p_of_K(params, K), dp_dK(params, K)
    X = H * H - K
    rad = 4 * p * p * X - eps
    if rad <= 0:
        raise DomainError("4 p^2 (H^2 - K) - eps must be positive", K=K, H=H, eps=eps)
    num = 2 * dp * X - p
    if which is EpsForm.DIFFERENCE:
        return num / (math.sqrt(rad) - 2 * p * H)
    return -num / (math.sqrt(rad) + 2 * p * H)


# with eps = 4 A^2 the difference form is the Minus branch and the sum form the Plus branch
EPS_BRANCH = {EpsForm.DIFFERENCE: HBranch.MINUS, EpsForm.SUM: HBranch.PLUS}


@dataclass(frozen=True)
class SolverConfig:
    K0: float
    H0: float
    space_form_c: float
    A: WeingartenConstant
    branch: HBranch
    window: CurvatureWindow
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float | None = None
    on_event: OnEvent = OnEvent.STOP
    event_tol: float = 1e-10

    def validated(self, params: FootballParams) -> "SolverConfig":
        """Check the starting state; raises the matching domain error."""
        if not (self.window.k_lo <= self.K0 <= self.window.k_hi):
            raise ConfigError("K0 must lie in the curvature window", K0=self.K0)
        for name in ("rel_tol", "abs_tol", "event_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        rep = admissibility_report(params, self.space_form_c, self.A, self.K0, self.H0,
                                   branch=self.branch)
        if not rep.umbilic_free:
            raise UmbilicReached("umbilic starting state: H0^2 - K0 + c <= 0",
                                 K0=self.K0, H0=self.H0)
        if not rep.theta_defined:
            raise ThetaSaturation("starting state violates p^2 (H0^2 - K0 + c) >= A^2",
                                  K0=self.K0, H0=self.H0, A=self.A.a)
        if not rep.denominator_ok:
            raise DenominatorSingular("ODE denominator vanishes at the starting state",
                                      K0=self.K0, H0=self.H0)
        return self

    @property
    def step_cap(self):
        if self.max_step is not None:
            return self.max_step
        return (self.window.k_hi - self.window.k_lo) / 100


def make_solver_config(params: FootballParams, c: float = 0.0, A: float = 0.0, branch=None,
                       K0: float | None = None, H0: float | None = None, s: float | None = None,
                       window: CurvatureWindow | None = None, **kwargs) -> SolverConfig:
    """SolverConfig with the default initial condition.

    Without H0 the start is the closed-form A=0 solution at K0 (parameter s,
    sign matching the branch); this needs s.
    """
    window = window or default_window(params)
    K0 = 0.5 * (params.k1 + params.k2) if K0 is None else float(K0)
    branch = HBranch.PLUS if branch is None else HBranch.parse(branch)
    if H0 is None:
        if s is None:
            raise ConfigError("either H0 or the closed-form constant s is required")
        sign = ClosedFormSign.UPPER if branch is HBranch.PLUS else ClosedFormSign.LOWER
        cf = ClosedFormParams.for_params(params, s, sign)
        if cf.poly(c, K0) <= 0:
            raise DomainError("closed-form quartic must be positive at K0", s=s, c=c)
        H0 = closed_form_H_A0(params, c, cf, K0)
    if "on_event" in kwargs:
        kwargs["on_event"] = OnEvent(kwargs["on_event"])
    cfg = SolverConfig(K0=K0, H0=float(H0), space_form_c=float(c),
                       A=WeingartenConstant(float(A)), branch=branch, window=window, **kwargs)
    return cfg.validated(params)


@dataclass(frozen=True)
class HSolution:
    """Sampled solution of the mean-curvature equation, sorted by K."""

    K: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    branch: np.ndarray
    meta: SolverConfig
    params: FootballParams
    events: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for arr in (self.K, self.H, self.dH, self.branch):
            arr.setflags(write=False)

    @property
    def K_range(self):
        return float(self.K[0]), float(self.K[-1])

    def branch_at(self, K):
        i = int(np.clip(np.searchsorted(self.K, K), 0, len(self.K) - 1))
        return HBranch(int(self.branch[i]))

    def at(self, K):
        """H and dH/dK by cubic Hermite interpolation between samples."""
        K = np.asarray(K, dtype=float)
        lo, hi = self.K_range
        if np.any((K < lo - 1e-15) | (K > hi + 1e-15)):
            raise DomainError("K outside the solved range", K_lo=lo, K_hi=hi)
        Kc = np.clip(K, lo, hi)
        i = np.clip(np.searchsorted(self.K, Kc, side="right") - 1, 0, len(self.K) - 2)
        K0, K1 = self.K[i], self.K[i + 1]
        h = K1 - K0
        t = (Kc - K0) / h
        H0, H1, d0, d1 = self.H[i], self.H[i + 1], self.dH[i], self.dH[i + 1]
        h00 = 2 * t ** 3 - 3 * t ** 2 + 1
        h10 = t ** 3 - 2 * t ** 2 + t
        h01 = -2 * t ** 3 + 3 * t ** 2
        h11 = t ** 3 - t ** 2
        H = h00 * H0 + h10 * h * d0 + h01 * H1 + h11 * h * d1
        dH = ((6 * t ** 2 - 6 * t) * H0 + (3 * t ** 2 - 4 * t + 1) * h * d0
              + (-6 * t ** 2 + 6 * t) * H1 + (3 * t ** 2 - 2 * t) * h * d1) / h
        if H.ndim == 0:
            return float(H), float(dH)
        return H, dH

    @property
    def stopped_early(self):
        return any(kind is not EventKind.BRANCH_SWITCH for _, kind in self.events)


COS_RESUME = 0.05
MAX_SWITCHES = 16


def _theta_rhs(params, c, A, sH):
    """(K, theta) system in x, regular where cos(theta) = 0.

    With A != 0 the Weingarten relation fixes sqrt(H^2 - K + c) = A/(p sin theta),
    and the Codazzi system collapses to one equation for theta.
    """
    def f(x, y):
        K, th = y
        p, dp = p_of_K(params, K), dp_dK(params, K)
        w = A / (p * math.sin(th))
        H = sH * math.sqrt(K - c + w * w)
        return [2 * p, math.sin(th) * (p - 2 * dp * w * w) / (w * (w * math.cos(th) - H))]
    return f


def _theta_state(params, c, A, sH, K, th, f):
    p, dp = p_of_K(params, K), dp_dK(params, K)
    w = A / (p * math.sin(th))
    H = sH * math.sqrt(K - c + w * w)
    th_x = f(0.0, [K, th])[1]
    H_x = (p - w * w * (2 * dp + th_x / math.tan(th))) / H
    return H, H_x / (2 * p)


def _bridge_saturation(params, cfg, K, H, sign, direction, targets):
    """Carry the solution through cos(theta) = 0 using the theta-form.

    Returns (K_end, H_end, new_sign, sampled) or None when the crossing
    cannot be completed inside the targets' range.
    """
    from scipy.integrate import solve_ivp

    c, A = cfg.space_form_c, cfg.A.a
    if A == 0 or H == 0:
        return None
    p = p_of_K(params, K)
    X = H * H - K + c
    sin0 = min(1.0, abs(A) / (p * math.sqrt(X))) * math.copysign(1.0, A)
    cos_sign = -sign
    D = max(p * p * X - A * A, 0.0)
    cos0 = cos_sign * math.sqrt(D) / (p * math.sqrt(X))
    th0 = math.atan2(sin0, cos0)
    sH = math.copysign(1.0, H)
    f = _theta_rhs(params, c, A, sH)
    K_last = targets[-1]

    def crossed(x, y):
        return -cos_sign * math.cos(y[1]) - COS_RESUME
    crossed.terminal = True
    crossed.direction = 1

    def end(x, y):
        return direction * (K_last - y[0])
    end.terminal = True

    span = direction * 10.0 * (cfg.window.k_hi - cfg.window.k_lo) / max(p, 1e-300)
    res = solve_ivp(f, (0.0, span), [K, th0], method="DOP853", rtol=cfg.rel_tol,
                    atol=cfg.abs_tol, dense_output=True, events=(crossed, end))
    if res.status != 1 or not len(res.t_events[0]):
        return None
    x_end = res.t_events[0][0]
    K_end, th_end = res.sol(x_end)
    # sample targets swept by the bridge
    sampled = []
    for Kt in targets:
        if direction * (Kt - K_end) > 0:
            break
        lo, hi = (0.0, x_end) if direction > 0 else (x_end, 0.0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (res.sol(mid)[0] - Kt) * direction > 0:
                hi = mid if direction > 0 else hi
                lo = lo if direction > 0 else mid
            else:
                lo = mid if direction > 0 else lo
                hi = hi if direction > 0 else mid
            if hi - lo < 1e-15:
                break
        th_t = res.sol(0.5 * (lo + hi))[1]
        Ht, dHt = _theta_state(params, c, A, sH, Kt, th_t, f)
        sampled.append((Kt, Ht, dHt))
    H_end, _ = _theta_state(params, c, A, sH, K_end, th_end, f)
    return float(K_end), float(H_end), -sign, sampled


def _integrate_direction(params, cfg, targets):
    """Integrate from K0 through targets (monotone away from K0)."""
    c, A = cfg.space_form_c, cfg.A.a
    K, H = cfg.K0, cfg.H0
    sign = int(cfg.branch)
    Ks, Hs, dHs, brs, events = [], [], [], [], []
    remaining = np.asarray(targets, dtype=float)
    direction = 1.0 if (remaining.size and remaining[-1] > K) else -1.0
    switches = 0
    while remaining.size:
        H_out, dH_out, n_done, status, K_stop, H_stop = kernels.integrate_h(
            params.k1, params.k2, c, A, float(sign), K, H, remaining,
            cfg.rel_tol, cfg.abs_tol, cfg.step_cap, cfg.event_tol)
        Ks.extend(remaining[:n_done])
        Hs.extend(H_out[:n_done])
        dHs.extend(dH_out[:n_done])
        brs.extend([sign] * n_done)
        if status == kernels.OK:
            break
        kind = _STATUS_EVENT[status]
        remaining = remaining[n_done:]
        if (kind is EventKind.THETA_SATURATION and cfg.on_event is OnEvent.SWITCH_BRANCH
                and switches < MAX_SWITCHES):
            bridge = _bridge_saturation(params, cfg, K_stop, H_stop, sign, direction, remaining)
            if bridge is not None:
                K, H, sign, sampled = bridge
                events.append((float(K_stop), EventKind.BRANCH_SWITCH))
                for Kt, Ht, dHt in sampled:
                    Ks.append(Kt)
                    Hs.append(Ht)
                    dHs.append(dHt)
                    brs.append(sign)
                remaining = remaining[len(sampled):]
                switches += 1
                continue
        events.append((float(K_stop), kind))
        break
    return Ks, Hs, dHs, brs, events


def solve_H(cfg: SolverConfig, params: FootballParams, K_grid=None) -> HSolution:
    """Integrate the mean-curvature equation in both directions from K0.

    Samples are returned at the points of ``K_grid`` (default: 201 uniform
    points over the window, plus K0) reached before any stopping event.
    """
    cfg.validated(params)
    win = cfg.window
    if K_grid is None:
        K_grid = np.linspace(win.k_lo, win.k_hi, 201)
    K_grid = np.unique(np.asarray(K_grid, dtype=float))
    if K_grid.size and (K_grid[0] < win.k_lo - 1e-15 or K_grid[-1] > win.k_hi + 1e-15):
        raise ConfigError("output grid must lie inside the curvature window")
    up = K_grid[K_grid > cfg.K0]
    down = K_grid[K_grid < cfg.K0][::-1]
    f0 = rhs_mean_curvature(params, cfg.space_form_c, cfg.A.a, cfg.branch, cfg.K0, cfg.H0)
    Ku, Hu, du, bu, eu = _integrate_direction(params, cfg, up)
    Kd, Hd, dd, bd, ed = _integrate_direction(params, cfg, down)
    K = np.array(Kd[::-1] + [cfg.K0] + Ku)
    H = np.array(Hd[::-1] + [cfg.H0] + Hu)
    dH = np.array(dd[::-1] + [f0] + du)
    br = np.array(bd[::-1] + [int(cfg.branch)] + bu, dtype=int)
    events = tuple(sorted(ed + eu, key=lambda e: e[0]))
    return HSolution(K=K, H=H, dH=dH, branch=br, meta=cfg, params=params, events=events)
