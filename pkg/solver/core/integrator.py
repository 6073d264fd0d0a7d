"""
Embedded Runge-Kutta 5(4) integrator with PI step-size control.

Used by the Sturm-Liouville transport in ``core.sturm``. The pair is
Dormand-Prince (FSAL); the Butcher table is stored the same way as the
other explicit pairs: ``BT[i]`` holds the weights that build the input of
stage ``i + 1`` and the last row is the propagating 5th-order solution.

Usage:
    result = solve(rhs, 0.0, np.pi, np.array([1.0, 0.0]), tol=1e-12)
    result.y_end
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from core.error_handler import StepUnderflow

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]


class DormandPrince54:
    """Dormand-Prince 5(4) pair. Seven stages, first-same-as-last."""

    def __init__(self):
        #number of stages in RK scheme
        self.s = 7

        #order of scheme and embedded method
        self.n = 5
        self.m = 4

        #intermediate evaluation times
        self.eval_stages = [0.0, 1/5, 3/10, 4/5, 8/9, 1.0, 1.0]

        #extended butcher table
        self.BT = {
            0: [       1/5],
            1: [      3/40,         9/40],
            2: [     44/45,       -56/15,       32/9],
            3: [19372/6561,  -25360/2187, 64448/6561, -212/729],
            4: [ 9017/3168,      -355/33, 46732/5247,   49/176, -5103/18656],
            5: [    35/384,            0,   500/1113,  125/192,  -2187/6784, 11/84],
            }

        #coefficients for local truncation error estimate
        self.TR = [71/57600, 0, -71/16695, 71/1920, -17253/339200, 22/525, -1/40]

    def step(self, fun: RHS, t: float, y: np.ndarray, dt: float, k0: np.ndarray):
        """
        One trial step.

        Returns:
            (y_new, error_vector, derivative at y_new)
        """
        k = [k0]
        y_new = y
        for i in range(1, self.s):
            incr = np.zeros_like(y)
            for a, kj in zip(self.BT[i - 1], k):
                if a:
                    incr = incr + a * kj
            y_stage = y + dt * incr
            if i == self.s - 1:
                y_new = y_stage
            k.append(fun(t + self.eval_stages[i] * dt, y_stage))

        err = np.zeros_like(y)
        for e, kj in zip(self.TR, k):
            if e:
                err = err + e * kj
        return y_new, dt * err, k[-1]


@dataclass
class IntegrationResult:
    """Output of solve(): samples at the requested times plus step statistics"""
    t: np.ndarray
    y: np.ndarray            # shape (len(t), dim)
    y_end: np.ndarray        # state at t1
    n_steps: int
    n_rejected: int


@dataclass
class StepControl:
    """PI controller constants"""
    safety: float = 0.9
    beta1: float = 0.7 / 5       # Proportional exponent
    beta2: float = 0.4 / 5       # Integral exponent
    min_factor: float = 0.2
    max_factor: float = 5.0
    max_steps: int = 2_000_000


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, tol: float) -> float:
    scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def solve(
    fun: RHS,
    t0: float,
    t1: float,
    y0: np.ndarray,
    tol: float,
    t_eval: Optional[Sequence[float]] = None,
    dt0: Optional[float] = None,
    control: Optional[StepControl] = None,
) -> IntegrationResult:
    """
    Integrate y' = fun(t, y) from t0 to t1 (t1 > t0).

    Args:
        fun: Right-hand side, returns an array shaped like y
        t0, t1: Interval
        y0: Initial state
        tol: Mixed absolute/relative local error tolerance
        t_eval: Optional increasing times in [t0, t1]; steps land exactly on them
        dt0: Optional first trial step
        control: Step controller constants

    Returns:
        IntegrationResult with samples at t_eval (or at t0 and t1)

    Raises:
        StepUnderflow: step size fell below the machine-relative floor
    """
    control = control or StepControl()
    method = DormandPrince54()
    y = np.array(y0, dtype=float)

    slack = 1e-14 * max(1.0, abs(t0), abs(t1))
    if t_eval is None:
        requested = np.array([t0, t1])
    else:
        requested = np.asarray(t_eval, dtype=float)
    record_t0 = bool(requested.size) and abs(requested[0] - t0) <= slack
    targets = requested[requested > t0 + slack]
    record = [True] * targets.size
    if targets.size == 0 or targets[-1] < t1 - slack:
        targets = np.append(targets, t1)
        record.append(False)

    out_t = [t0] if record_t0 else []
    out_y = [y.copy()] if record_t0 else []

    t = t0
    k = fun(t, y)
    dt = dt0 if dt0 else min(t1 - t0, 0.01 * (t1 - t0) + 1e-3)
    err_prev = 1.0
    n_steps = 0
    n_rejected = 0

    for target_index, target in enumerate(targets):
        while t < target:
            floor = 16.0 * np.finfo(float).eps * max(1.0, abs(t))
            dt_free = dt
            capped = t + dt >= target - floor
            if capped:
                dt = target - t

            y_new, err_vec, k_new = method.step(fun, t, y, dt, k)
            err = _error_norm(err_vec, y, y_new, tol)

            if not np.isfinite(err):
                err = 1e10

            if err <= 1.0:
                t = target if capped else t + dt
                y = y_new
                k = k_new
                n_steps += 1
                err = max(err, 1e-10)
                factor = control.safety * err ** (-control.beta1) * err_prev ** control.beta2
                factor = min(control.max_factor, max(control.min_factor, factor))
                err_prev = err
                dt = dt * factor
                if capped:
                    dt = max(dt, dt_free)
            else:
                n_rejected += 1
                factor = max(control.min_factor, control.safety * err ** (-1.0 / method.n))
                dt = dt * factor
                logger.debug(f"Step rejected at t={t:.6g}, err={err:.3g}, new dt={dt:.3g}")

            if dt < floor:
                raise StepUnderflow(
                    message="Step size underflow",
                    context={'t': t, 'dt': dt, 'tol': tol},
                )
            if n_steps + n_rejected > control.max_steps:
                raise StepUnderflow(
                    message="Step budget exhausted",
                    context={'t': t, 'steps': n_steps, 'rejected': n_rejected},
                )

        if record[target_index]:
            out_t.append(t)
            out_y.append(y.copy())

    return IntegrationResult(
        t=np.array(out_t),
        y=np.array(out_y).reshape(len(out_t), y.size),
        y_end=y.copy(),
        n_steps=n_steps,
        n_rejected=n_rejected,
    )
