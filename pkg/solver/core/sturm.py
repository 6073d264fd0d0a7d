"""
Sturm-Liouville transport in the (h, h'/[q,q']) plane.

The main equation (h'/[q,q'])' + λ [p,p'] h = 0 is integrated as the system

    h' = bq · w
    w' = -λ · bp · h

with the embedded Runge-Kutta pair of ``core.integrator``. The half-turn
monodromy A(λ, π) decides everything else: its trace classifies the cycloid
(bounded, unbounded, closed) and its powers extend solutions to many turns.

Usage:
    m = monodromy(field, 19.79)
    cls = classify(m, 1e-7)
    if cls.tag.is_hyperbolic:
        print(growth_factor(m))
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from core.integrator import solve
from core.plane import PlaneField, cross

logger = logging.getLogger(__name__)

DEFAULT_ODE_TOL = 1e-12
DEFAULT_PARABOLIC_TOL = 1e-7


# ============================================
# TYPES
# ============================================

@dataclass(frozen=True)
class StateVector:
    """(h, w) with w = h'/[q,q']"""
    h: float
    w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.w], dtype=float)

    @classmethod
    def from_array(cls, y) -> "StateVector":
        return cls(float(y[0]), float(y[1]))


@dataclass(frozen=True)
class Monodromy:
    """Transport matrix of (h, w) over t_span. Columns are the images of (1,0) and (0,1)."""
    a11: float
    a12: float
    a21: float
    a22: float
    lam: float
    t_span: Tuple[float, float]

    @classmethod
    def from_matrix(cls, m: np.ndarray, lam: float, t_span: Tuple[float, float]) -> "Monodromy":
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]), float(lam), t_span)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, k)

    def to_dict(self):
        return {
            'lambda': self.lam,
            'matrix': self.matrix.tolist(),
            'trace': self.trace,
            'det': self.det,
            't_span': list(self.t_span),
        }


class MonodromyTag(str, Enum):
    """Conjugacy-type classes of SL2(R) relevant to cycloids"""
    ELLIPTIC = "EllipticM0"
    HYPERBOLIC_PLUS = "HyperbolicPlus"
    HYPERBOLIC_MINUS = "HyperbolicMinus"
    PARABOLIC_PLUS = "ParabolicPlusOne"
    PARABOLIC_MINUS = "ParabolicMinusOne"

    @property
    def is_hyperbolic(self) -> bool:
        return self in (MonodromyTag.HYPERBOLIC_PLUS, MonodromyTag.HYPERBOLIC_MINUS)

    @property
    def is_parabolic(self) -> bool:
        return self in (MonodromyTag.PARABOLIC_PLUS, MonodromyTag.PARABOLIC_MINUS)


@dataclass(frozen=True)
class MonodromyClass:
    tag: MonodromyTag
    rotation: Optional[float]     # φ with tr = 2cos φ, elliptic only
    trace: float

    def to_dict(self):
        return {'tag': self.tag.value, 'rotation': self.rotation, 'trace': self.trace}


@dataclass
class Trajectory:
    """Dense samples of a solution on grid nodes"""
    t: np.ndarray
    h: np.ndarray
    w: np.ndarray
    n_steps: int = 0


# ============================================
# INTEGRATION
# ============================================

def _system(field: PlaneField, lam: float) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(t, y):
        bp, bq = field.coefficients(t)
        pairs = y.reshape(-1, 2)
        out = np.empty_like(pairs)
        out[:, 0] = bq[0] * pairs[:, 1]
        out[:, 1] = -lam * bp[0] * pairs[:, 0]
        return out.ravel()
    return rhs


def node_times(field: PlaneField, t0: float, t1: float) -> np.ndarray:
    """Grid nodes (continued periodically) lying in [t0, t1]."""
    h = field.step
    first = math.ceil((t0 - field.origin) / h - 1e-9)
    last = math.floor((t1 - field.origin) / h + 1e-9)
    return field.origin + np.arange(first, last + 1) * h


def integrate(
    field: PlaneField,
    lam: float,
    init: StateVector,
    t0: float,
    t1: float,
    tol: float = DEFAULT_ODE_TOL,
    dense: bool = False,
) -> Tuple[StateVector, Optional[Trajectory]]:
    """
    Advance (h, w) from t0 to t1.

    Args:
        field: Plane
        lam: Spectral parameter λ
        init: State at t0
        t0, t1: Interval, t0 < t1
        tol: Local error tolerance
        dense: Also return samples at the grid nodes inside [t0, t1]

    Returns:
        (endpoint, trajectory or None)

    Raises:
        StepUnderflow: the step controller could not meet tol
    """
    if not t1 > t0:
        raise ValueError("integrate needs t0 < t1")
    t_eval = node_times(field, t0, t1) if dense else None
    result = solve(_system(field, lam), t0, t1, init.as_array(), tol, t_eval=t_eval)
    end = StateVector.from_array(result.y_end)
    if not dense:
        return end, None
    return end, Trajectory(t=result.t, h=result.y[:, 0], w=result.y[:, 1], n_steps=result.n_steps)


def monodromy(field: PlaneField, lam: float, tol: float = DEFAULT_ODE_TOL) -> Monodromy:
    """
    A(λ, π) from the staggered-grid origin. Both columns are integrated together.
    The determinant is not renormalized.
    """
    t0 = field.origin
    t1 = t0 + np.pi
    result = solve(_system(field, lam), t0, t1, np.array([1.0, 0.0, 0.0, 1.0]), tol)
    y = result.y_end
    m = np.array([[y[0], y[2]], [y[1], y[3]]])
    logger.debug(f"monodromy λ={lam:.10g}: tr={np.trace(m):.12g} steps={result.n_steps}")
    return Monodromy.from_matrix(m, lam, (t0, t1))


@dataclass
class FundamentalSolution:
    """
    Fundamental matrix Y(τ) at the nodes origin + i·step, i < turns·n.
    Y[i] @ v is the solution started from v at the origin.
    """
    t: np.ndarray
    Y: np.ndarray            # shape (turns·n, 2, 2)
    monodromy: Monodromy

    def solution(self, init) -> Tuple[np.ndarray, np.ndarray]:
        v = np.asarray(init, dtype=float)
        hw = self.Y @ v
        return hw[:, 0], hw[:, 1]


def fundamental_solution(
    field: PlaneField,
    lam: float,
    turns: int = 1,
    tol: float = DEFAULT_ODE_TOL,
) -> FundamentalSolution:
    """
    Integrate one half turn on the grid and continue with Y(τ + π) = Y(τ)·A.
    """
    n = field.n
    half = n // 2
    t_eval = field.origin + np.arange(half + 1) * field.step
    result = solve(_system(field, lam), t_eval[0], t_eval[-1], np.array([1.0, 0.0, 0.0, 1.0]), tol, t_eval=t_eval)
    Y_half = result.y.reshape(-1, 2, 2).transpose(0, 2, 1)    # rows h,w ; columns inits
    A = Y_half[-1]

    blocks = []
    power = np.eye(2)
    for _ in range(2 * turns):
        blocks.append(Y_half[:-1] @ power)
        power = A @ power
    Y = np.concatenate(blocks, axis=0)
    t = field.origin + np.arange(Y.shape[0]) * field.step
    return FundamentalSolution(
        t=t,
        Y=Y,
        monodromy=Monodromy.from_matrix(A, lam, (float(t_eval[0]), float(t_eval[-1]))),
    )


# ============================================
# ROTATION INDEX
# ============================================

def prufer_rate(field: PlaneField, lam: float, tau, beta) -> np.ndarray:
    """dβ/dt = λ·bp·cos²β + bq·sin²β (positive for λ > 0)."""
    bp, bq = field.coefficients(tau)
    return lam * bp * np.cos(beta) ** 2 + bq * np.sin(beta) ** 2


def initial_angle(init: StateVector) -> float:
    # clockwise angle: h = ρ cos β, w = -ρ sin β
    return math.atan2(-init.w, init.h)


def prufer_angle(
    field: PlaneField,
    lam: float,
    init: StateVector,
    turns: float = 1.0,
    tol: float = DEFAULT_ODE_TOL,
    dense: bool = False,
) -> Tuple[float, Optional[Trajectory], Optional[np.ndarray]]:
    """
    Integrate the angle equation together with the system.

    Returns:
        (β(end) - β(start), trajectory, β samples) with the last two only when dense
    """
    def rhs(t, y):
        bp, bq = field.coefficients(t)
        c, s = math.cos(y[2]), math.sin(y[2])
        return np.array([
            bq[0] * y[1],
            -lam * bp[0] * y[0],
            lam * bp[0] * c * c + bq[0] * s * s,
        ])

    beta0 = initial_angle(init)
    t0 = field.origin
    t1 = t0 + 2.0 * np.pi * turns
    t_eval = node_times(field, t0, t1) if dense else None
    result = solve(rhs, t0, t1, np.array([init.h, init.w, beta0]), tol, t_eval=t_eval)
    advance = float(result.y_end[2] - beta0)
    if not dense:
        return advance, None, None
    traj = Trajectory(t=result.t, h=result.y[:, 0], w=result.y[:, 1], n_steps=result.n_steps)
    return advance, traj, result.y[:, 2]


def rotation_index(
    field: PlaneField,
    lam: float,
    init: StateVector,
    turns: float = 1.0,
    tol: float = DEFAULT_ODE_TOL,
) -> float:
    """
    Δ = (β(t0 + 2π·turns) - β(t0)) / (2π·turns), the mean number of phase-plane
    turns per 2π. Positive for λ > 0 and strictly increasing in λ.
    """
    if init.h == 0.0 and init.w == 0.0:
        raise ValueError("rotation_index needs a nonzero initial state")
    advance, _, _ = prufer_angle(field, lam, init, turns, tol)
    return advance / (2.0 * np.pi * turns)


def half_turn_advance(field: PlaneField, lam: float, tol: float = 1e-10) -> float:
    """Prüfer advance over [origin, origin + π] from (1, 0)."""
    advance, _, _ = prufer_angle(field, lam, StateVector(1.0, 0.0), 0.5, tol)
    return advance


# ============================================
# CLASSIFICATION
# ============================================

def classify(m: Monodromy, tol: float = DEFAULT_PARABOLIC_TOL) -> MonodromyClass:
    """Trace classification with parabolic band |tr ∓ 2| <= tol."""
    tr = m.trace
    if abs(tr - 2.0) <= tol:
        return MonodromyClass(MonodromyTag.PARABOLIC_PLUS, None, tr)
    if abs(tr + 2.0) <= tol:
        return MonodromyClass(MonodromyTag.PARABOLIC_MINUS, None, tr)
    if abs(tr) < 2.0:
        return MonodromyClass(MonodromyTag.ELLIPTIC, float(math.acos(tr / 2.0)), tr)
    if tr > 2.0:
        return MonodromyClass(MonodromyTag.HYPERBOLIC_PLUS, None, tr)
    return MonodromyClass(MonodromyTag.HYPERBOLIC_MINUS, None, tr)


def growth_factor(m: Monodromy) -> float:
    """Spectral radius of the monodromy (> 1 exactly for hyperbolic classes)."""
    return float(np.max(np.abs(np.linalg.eigvals(m.matrix))))


def expanding_direction(m: Monodromy) -> Optional[np.ndarray]:
    """Unit eigenvector of the eigenvalue with modulus > 1, None unless hyperbolic."""
    values, vectors = np.linalg.eig(m.matrix)
    if np.max(np.abs(values.imag)) > 0.0:
        return None
    i = int(np.argmax(np.abs(values.real)))
    if abs(values[i].real) <= 1.0:
        return None
    v = vectors[:, i].real
    return v / np.linalg.norm(v)


# ============================================
# COMPARISON
# ============================================

@dataclass
class ComparisonReport:
    lam: float
    lam_bar: float
    theta0: float
    theta1: Optional[float]        # next zero of h' for λ
    theta1_bar: Optional[float]    # next zero of h' for λ̄
    holds: bool

    def to_dict(self):
        return dict(self.__dict__)


def _first_zero(t: np.ndarray, v: np.ndarray) -> Optional[float]:
    ref = np.sign(v[1])
    for i in range(2, v.size):
        if np.sign(v[i]) != ref and v[i] != 0.0:
            return float(t[i - 1] + (t[i] - t[i - 1]) * v[i - 1] / (v[i - 1] - v[i]))
    return None


def comparison_check(
    field: PlaneField,
    lam: float,
    lam_bar: float,
    start_index: int = 0,
    tol: float = DEFAULT_ODE_TOL,
) -> ComparisonReport:
    """
    Sturm comparison: with h'(θ0) = 0, the λ̄-solution (λ̄ > λ) has its next
    zero of h' strictly before the next zero of the λ-solution.
    """
    if not lam_bar > lam:
        raise ValueError("comparison_check needs lam < lam_bar")
    theta0 = field.origin + start_index * field.step
    t1 = theta0 + 2.0 * np.pi
    start = StateVector(1.0, 0.0)
    _, traj = integrate(field, lam, start, theta0, t1, tol, dense=True)
    _, traj_bar = integrate(field, lam_bar, start, theta0, t1, tol, dense=True)
    theta1 = _first_zero(traj.t, traj.w)
    theta1_bar = _first_zero(traj_bar.t, traj_bar.w)
    holds = theta1_bar is not None and (theta1 is None or theta0 < theta1_bar < theta1)
    return ComparisonReport(lam, lam_bar, theta0, theta1, theta1_bar, holds)


# ============================================
# λ = 1 AND CLOSED FORMS
# ============================================

def lambda_one_solution(field: PlaneField, theta0: float, r0: float, dr0: float) -> np.ndarray:
    """
    Grid samples of the λ = 1 solution with r(θ0) = r0, r'(θ0) = dr0:

        r(θ) = ([q(θ0), q(θ)]·r'(θ0) - [q'(θ0), q(θ)]·r(θ0)) / [q,q'](θ0)
    """
    f0 = field.frame_at(theta0)
    q0, dq0, bq0 = f0.q[0], f0.dq[0], float(f0.bq[0])
    return (cross(q0, field.q) * dr0 - cross(dq0, field.q) * r0) / bq0


def lp_trace_closed_form(p: float, lam) -> np.ndarray:
    """
    tr A(λ, π) on the L_p plane:  4cos²(πs)/sin²(π/p) - 2,
    s = √(κλ + β²)/2, κ = 4/(p·p*), β = 1 - 2/p.
    """
    p_conj = p / (p - 1.0)
    kappa = 4.0 / (p * p_conj)
    beta = 1.0 - 2.0 / p
    s = np.emath.sqrt(kappa * np.asarray(lam, dtype=float) + beta ** 2) / 2.0
    return np.real(4.0 * np.cos(np.pi * s) ** 2 / np.sin(np.pi / p) ** 2 - 2.0)


def lp_odd_eigenvalue(p: float, j: int) -> float:
    """Double eigenvalue ((2j+1)² - β²)/κ of the odd index k = 2j+1."""
    p_conj = p / (p - 1.0)
    kappa = 4.0 / (p * p_conj)
    beta = 1.0 - 2.0 / p
    return ((2 * j + 1) ** 2 - beta ** 2) / kappa
