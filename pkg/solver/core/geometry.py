"""
Curve reconstruction, evolutes, involutes, cusps, vertices and width.

A front with support function h is γ = h·p + (h'/[q,q'])·q, its curvature
radius r satisfies γ' = r·p' and r = h - Th, where

    Th = -(1/[p,p']) · (h'/[q,q'])'

is the double-evolute operator. Evolutes live in the dual plane
(``PlaneField.dual()``); the evolute of an evolute is back in the original
plane with support Th and radius Tr.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from core.error_handler import NotZeroDualLength, SingularSupport
from core.plane import PlaneField, cross
from core.spectral import (
    cumulative_integral,
    fourier_antiderivative,
    fourier_diff,
    sign_changes,
    trapezoid,
)
from core.spectrum import CycloidKind, EigenRecord, NTurnRecord

logger = logging.getLogger(__name__)


# ============================================
# CURVE DATA
# ============================================

@dataclass
class CurveData:
    """
    Sampled front over ``turns`` full turns of the parameter.

    ``hw`` is h'/[q,q'] and ``dr`` is r'. ``lam`` is set for eigen-cycloids,
    whose evolutes are computed from exact eigen-relations.
    """
    field: PlaneField = dataclass_field(repr=False)
    t: np.ndarray = dataclass_field(repr=False)
    h: np.ndarray = dataclass_field(repr=False)
    hw: np.ndarray = dataclass_field(repr=False)
    r: np.ndarray = dataclass_field(repr=False)
    dr: np.ndarray = dataclass_field(repr=False)
    points: np.ndarray = dataclass_field(repr=False)
    cusps: List[float]
    vertices: List[float]
    turns: int = 1
    lam: Optional[float] = None
    displacement: np.ndarray = dataclass_field(default_factory=lambda: np.zeros(2))
    support_against_p: Optional[np.ndarray] = dataclass_field(default=None, repr=False)

    @property
    def is_dual(self) -> bool:
        return self.field.is_dual

    @property
    def period(self) -> float:
        return 2.0 * np.pi * self.turns

    def velocity(self) -> np.ndarray:
        return self.r[:, None] * _tile(self.field.dp, self.turns)

    def cusp_flags(self) -> np.ndarray:
        return _near_flags(self.t, self.cusps, self.field.step)

    def vertex_flags(self) -> np.ndarray:
        return _near_flags(self.t, self.vertices, self.field.step)

    def min_cusp_acceleration(self) -> Optional[float]:
        """min |γ''| = |r'|·|p'| over the cusps (nonzero for ordinary cusps)."""
        if not self.cusps:
            return None
        speed = np.linalg.norm(_tile(self.field.dp, self.turns), axis=1)
        acc = np.abs(self.dr) * speed
        return float(min(np.interp(c, self.t, acc, period=self.period) for c in self.cusps))

    def summary(self) -> Dict[str, Any]:
        return {
            'turns': self.turns,
            'lambda': self.lam,
            'cusps': len(self.cusps),
            'vertices': len(self.vertices),
            'dual': self.is_dual,
            'closure_gap': closure_gap(self),
        }


def _tile(values: np.ndarray, turns: int) -> np.ndarray:
    if turns == 1:
        return values
    reps = (turns,) + (1,) * (values.ndim - 1)
    return np.tile(values, reps)


def _grid(field: PlaneField, turns: int) -> np.ndarray:
    return field.origin + np.arange(turns * field.n) * field.step


def _turns_of(field: PlaneField, samples: np.ndarray) -> int:
    if samples.shape[0] % field.n:
        raise ValueError("samples must cover a whole number of turns of the grid")
    return samples.shape[0] // field.n


def _near_flags(t: np.ndarray, marks: Sequence[float], step: float) -> np.ndarray:
    flags = np.zeros(t.size, dtype=bool)
    for m in marks:
        flags[int(np.argmin(np.abs(t - m)))] = True
    return flags


def _scan(values: np.ndarray, t: np.ndarray, mask: Optional[np.ndarray] = None) -> List[float]:
    if mask is not None:
        values = np.where(mask, values, 0.0)
    return sign_changes(values, t, periodic=True)


# Brackets below this fraction of their maximum are treated as vanishing.
BAND_TOL = 1e-4


def _bridge(values: np.ndarray, coord: np.ndarray, band: np.ndarray, total: float) -> np.ndarray:
    """Linear interpolation in ``coord`` across each (circular) run of band nodes."""
    idx = np.flatnonzero(band)
    good = np.flatnonzero(~band)
    pos = np.searchsorted(good, idx)
    left = good[pos - 1]
    right = good[pos % good.size]
    c_left = np.where(left > idx, coord[left] - total, coord[left])
    c_right = np.where(right < idx, coord[right] + total, coord[right])
    weight = (coord[idx] - c_left) / (c_right - c_left)
    out = values.copy()
    out[idx] = values[left] + weight * (values[right] - values[left])
    return out


def _bracket_quotient(
    values: np.ndarray,
    weight: np.ndarray,
    other: np.ndarray,
    period: float,
) -> np.ndarray:
    """
    values'/weight by spectral differentiation.

    Where ``weight`` falls below BAND_TOL of its maximum the quotient is taken
    linear in ∫other between the nearest regular nodes: h'/[q,q'] is linear in
    ∫[p,p'] near an axis and Th is linear in ∫[q,q'].
    """
    d = fourier_diff(values, period=period)
    band = weight < BAND_TOL * np.max(weight)
    out = np.zeros_like(d)
    out[~band] = d[~band] / weight[~band]
    if not band.any():
        return out
    n = values.size
    mean = float(np.mean(other))
    coord = fourier_antiderivative(other - mean, period=period) + mean * np.arange(n) * (period / n)
    return _bridge(out, coord, band, mean * period)


def _require_hw(field: PlaneField, hw: Optional[np.ndarray], what: str) -> None:
    if hw is None and field.circle.singular:
        raise SingularSupport(
            message=f"{what} needs h'/[q,q'] samples on this plane",
            context={'family': field.family.value, 'dual': field.is_dual},
            suggestions=[
                "Differentiation amplifies roundoff where [q,q'] vanishes",
                "Pass hw from the integrator, synthesize() or involute_operator(return_hw=True)",
            ],
        )


def _assemble(
    field: PlaneField,
    h: np.ndarray,
    hw: np.ndarray,
    r: np.ndarray,
    dr: np.ndarray,
    points: np.ndarray,
    turns: int,
    lam: Optional[float] = None,
) -> CurveData:
    t = _grid(field, turns)
    displacement = np.array([
        trapezoid((r[:, None] * _tile(field.dp, turns))[:, i], period=2.0 * np.pi * turns)
        for i in range(2)
    ])
    return CurveData(
        field=field, t=t, h=h, hw=hw, r=r, dr=dr, points=points,
        cusps=_scan(r, t),
        vertices=_scan(dr, t),
        turns=turns, lam=lam, displacement=displacement,
    )


# ============================================
# RECONSTRUCTION
# ============================================

def curve_from_support(
    field: PlaneField,
    h: np.ndarray,
    hw: Optional[np.ndarray] = None,
) -> CurveData:
    """
    γ = h·p + (h'/bq)·q with r = h - Th.

    Args:
        field: Plane (or dual plane)
        h: Support samples over a whole number of turns
        hw: Optional h'/[q,q'] samples; spectral differentiation otherwise
            (required on planes whose brackets vanish)

    Raises:
        SingularSupport: h'/[q,q'] is not finite at a regular node, or hw is
            missing on a plane whose brackets vanish
    """
    h = np.asarray(h, dtype=float)
    turns = _turns_of(field, h)
    period = 2.0 * np.pi * turns
    bp, bq = _tile(field.bp, turns), _tile(field.bq, turns)
    regular = _tile(field.regular_mask, turns)

    _require_hw(field, hw, "curve_from_support")
    if hw is None:
        hw = _bracket_quotient(h, bq, bp, period)
    hw = np.asarray(hw, dtype=float)
    bad = ~np.isfinite(hw) & regular
    if bad.any():
        raise SingularSupport(
            message="h'/[q,q'] is not finite",
            context={'nodes': int(bad.sum()), 'first': int(np.flatnonzero(bad)[0])},
        )
    hw = np.where(np.isfinite(hw), hw, 0.0)

    points = h[:, None] * _tile(field.p, turns) + hw[:, None] * _tile(field.q, turns)
    r = h + _bracket_quotient(hw, bp, bq, period)
    dr = fourier_diff(r, period=period)
    return _assemble(field, h, hw, r, dr, points, turns)


def curve_from_eigen(field: PlaneField, record: Union[EigenRecord, NTurnRecord]) -> CurveData:
    """
    Eigen-cycloid from integrator samples: r = (1-λ)h and r' = (1-λ)·bq·hw,
    so no numerical differentiation is involved.
    """
    h, hw, lam = record.h, record.hw, record.lam
    turns = _turns_of(field, h)
    return _eigen_curve(field, h, hw, lam, turns)


def _eigen_curve(field, h, hw, lam, turns) -> CurveData:
    r = (1.0 - lam) * h
    dr = (1.0 - lam) * _tile(field.bq, turns) * hw
    points = h[:, None] * _tile(field.p, turns) + hw[:, None] * _tile(field.q, turns)
    return _assemble(field, h, hw, r, dr, points, turns, lam=lam)


def curve_from_radius(
    field: PlaneField,
    r: np.ndarray,
    gamma0=(0.0, 0.0),
    t0: Optional[float] = None,
) -> CurveData:
    """
    Integrate γ' = r·p' from γ(t0) = gamma0 (spectral cumulative quadrature,
    exact linear drift for curves that do not close).
    """
    r = np.asarray(r, dtype=float)
    turns = _turns_of(field, r)
    period = 2.0 * np.pi * turns
    t = _grid(field, turns)
    t0 = field.origin if t0 is None else t0
    velocity = r[:, None] * _tile(field.dp, turns)
    points = np.stack([
        cumulative_integral(velocity[:, i], t, t0, period) for i in range(2)
    ], axis=1) + np.asarray(gamma0, dtype=float)

    p, q = _tile(field.p, turns), _tile(field.q, turns)
    h = cross(points, q)
    hw = cross(p, points)
    dr = fourier_diff(r, period=period)
    return _assemble(field, h, hw, r, dr, points, turns)


# ============================================
# EVOLUTES
# ============================================

def evolute(field: PlaneField, c: CurveData) -> CurveData:
    """
    δ = γ - r·p, living in field.dual().

    From the original plane the support is h_δ = h'/[q,q'] and r_δ = r'/[q,q'];
    from the dual plane back both flip sign. ``support_against_p`` keeps the
    value [δ, p] measured in the source plane.
    """
    if c.field is not field:
        raise ValueError("curve does not live in the given plane")
    target = field.dual()
    sign = -1.0 if field.is_dual else 1.0
    turns = c.turns

    p = _tile(field.p, turns)
    points = c.points - c.r[:, None] * p
    h_d = sign * c.hw
    hw_d = sign * (c.r - c.h)

    if c.lam is not None:
        curve = _eigen_curve(target, h_d, hw_d, c.lam, turns)
        curve.points = points
    else:
        bp, bq = _tile(field.bp, turns), _tile(field.bq, turns)
        r_d = sign * _bracket_quotient(c.r, bq, bp, c.period)
        dr_d = fourier_diff(r_d, period=c.period)
        curve = _assemble(target, h_d, hw_d, r_d, dr_d, points, turns)
        curve.points = points

    curve.support_against_p = cross(points, p)
    return curve


def double_evolute(field: PlaneField, c: CurveData) -> CurveData:
    """Evolute of the evolute; back in ``field`` with support Th and radius Tr."""
    first = evolute(field, c)
    return evolute(first.field, first)


def double_evolute_operator(
    field: PlaneField,
    h: np.ndarray,
    hw: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Th = -(1/bp)·(h'/bq)' by spectral differentiation.

    Raises:
        SingularSupport: hw is missing on a plane whose brackets vanish
    """
    h = np.asarray(h, dtype=float)
    turns = _turns_of(field, h)
    period = 2.0 * np.pi * turns
    bp, bq = _tile(field.bp, turns), _tile(field.bq, turns)
    _require_hw(field, hw, "double_evolute_operator")
    if hw is None:
        hw = _bracket_quotient(h, bq, bp, period)
    hw = np.where(np.isfinite(hw), np.asarray(hw, dtype=float), 0.0)
    return -_bracket_quotient(hw, bp, bq, period)


def dual_length(field: PlaneField, h: np.ndarray) -> float:
    """∫ h·[p,p'] over one turn (zero exactly on L0)."""
    return trapezoid(np.asarray(h) * field.bp)


def involute_operator(
    field: PlaneField,
    h: np.ndarray,
    tol: float = 1e-8,
    return_hw: bool = False,
):
    """
    S = T⁻¹ on L0 by double integration:

        f = -∫ h·bp   with ∫ f·bq = 0
        g =  ∫ f·bq   with ∫ g·bp = 0

    Then T g = h and g'/bq = f.

    Raises:
        NotZeroDualLength: |∫ h·bp| above tol (relative to ∫ |h|·bp when that exceeds 1)
    """
    h = np.asarray(h, dtype=float)
    length = dual_length(field, h)
    scale = max(1.0, trapezoid(np.abs(h) * field.bp))
    if abs(length) > tol * scale:
        raise NotZeroDualLength(
            message="Support function has nonzero dual length",
            context={'dual_length': length, 'tol': tol},
        )

    bp, bq = field.bp, field.bq
    f = -fourier_antiderivative(h * bp - np.mean(h * bp))
    f = f - trapezoid(f * bq) / trapezoid(bq)
    g = fourier_antiderivative(f * bq - np.mean(f * bq))
    g = g - trapezoid(g * bp) / trapezoid(bp)
    return (g, f) if return_hw else g


def involute(field: PlaneField, c: CurveData, tol: float = 1e-8) -> CurveData:
    """Curve whose double evolute is ``c`` (support in L0 required)."""
    g, f = involute_operator(field, c.h, tol, return_hw=True)
    return curve_from_support(field, g, hw=f)


# ============================================
# ORIENTATION / WIDTH / CLOSURE
# ============================================

@dataclass
class OrientationReport:
    lam: float
    expected_sign: int
    consistent: bool
    identity_residual: float      # max |[γ,γ'] - h²·bp·(1-λ)|, relative
    checked_nodes: int

    def to_dict(self):
        return dict(self.__dict__)


def orientation_sign(field: PlaneField, c: CurveData, lam: float, guard: int = 3) -> OrientationReport:
    """
    [γ, γ'] = h²·bp·(1-λ) on an eigen-cycloid: positive for 0 < λ < 1,
    negative for λ > 1, away from cusps and singular nodes.
    """
    turns = c.turns
    measured = cross(c.points, c.velocity())
    expected = c.h ** 2 * _tile(field.bp, turns) * (1.0 - lam)
    scale = max(float(np.max(np.abs(expected))), 1e-300)

    mask = _tile(field.regular_mask, turns).copy()
    for cusp in c.cusps:
        i = int(np.argmin(np.abs(c.t - cusp)))
        for d in range(-guard, guard + 1):
            mask[(i + d) % c.t.size] = False
    mask &= np.abs(measured) > 1e-10 * scale

    sign = 1 if lam < 1.0 else -1
    consistent = bool(np.all(np.sign(measured[mask]) == sign))
    residual = float(np.max(np.abs(measured - expected)) / scale)
    return OrientationReport(lam, sign, consistent, residual, int(mask.sum()))


def width_function(field: PlaneField, h: np.ndarray) -> np.ndarray:
    """w(θ) = h(θ) + h(θ+π)."""
    h = np.asarray(h, dtype=float)
    return h + np.roll(h, -(field.n // 2))


def diameter(points: np.ndarray) -> float:
    """Largest pairwise distance, taken over the convex hull vertices."""
    points = np.asarray(points, dtype=float)
    try:
        candidates = points[ConvexHull(points).vertices]
    except (QhullError, ValueError):
        candidates = points
    if len(candidates) < 2:
        return 0.0
    return float(np.max(pdist(candidates)))


def travel(c: CurveData) -> np.ndarray:
    """∫_{t0}^{t} γ' at every node plus the end of the span (length turns·n + 1)."""
    velocity = c.velocity()
    cumulative = np.stack([
        cumulative_integral(velocity[:, i], c.t, c.t[0], c.period) for i in range(2)
    ], axis=1)
    return np.vstack([cumulative, c.displacement])


def closure_gap(c: CurveData, turns: Optional[int] = None) -> float:
    """‖γ(t0 + 2π·turns) - γ(t0)‖ relative to the curve's diameter."""
    turns = c.turns if turns is None else turns
    if turns > c.turns or turns < 1:
        raise ValueError("turns outside the sampled span")
    size = diameter(c.points)
    gap = float(np.linalg.norm(travel(c)[turns * c.field.n]))
    return gap / size if size > 0 else gap


# ============================================
# EUCLIDEAN ORACLES
# ============================================

def rolling_cycloid(R_fixed: float, R_rolling: float, kind: CycloidKind, theta: np.ndarray) -> np.ndarray:
    """Classical hypocycloid/epicycloid traced by a circle rolling inside/outside another."""
    theta = np.asarray(theta, dtype=float)
    R, r = R_fixed, R_rolling
    if CycloidKind(kind) == CycloidKind.HYPOCYCLOID:
        x = (R - r) * np.cos(theta) + r * np.cos((R - r) / r * theta)
        y = (R - r) * np.sin(theta) - r * np.sin((R - r) / r * theta)
    else:
        x = (R + r) * np.cos(theta) - r * np.cos((R + r) / r * theta)
        y = (R + r) * np.sin(theta) - r * np.sin((R + r) / r * theta)
    return np.stack([x, y], axis=1)


def euclidean_cycloid(R: float, theta0: float, theta: np.ndarray) -> np.ndarray:
    """R(2s - sin 2s, 1 - cos 2s), s = θ - θ0."""
    s = np.asarray(theta, dtype=float) - theta0
    return np.stack([R * (2.0 * s - np.sin(2.0 * s)), R * (1.0 - np.cos(2.0 * s))], axis=1)
