"""
Normed-plane unit circles, their dual parameterization and bracket fields.

A plane is described by a small JSON model (``PlaneModel``) and sampled on a
staggered periodic grid by ``build_plane`` into an immutable ``PlaneField``:

    p, q          unit circle and dual circle, [p, q] = 1
    bp = [p,p']   bq = [q,q']
    ddp, ddq      second derivatives (needed by the plane identity and dual())

All families have closed forms. The L_p ball is sampled in a regularizing
parameter τ (see ``LpCircle``) so that its coefficients stay bounded.

Usage:
    model = parse_model_shorthand("lp:3")
    field = build_plane(model, 2048)
    report = validate_plane(field, 1e-8)
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator
from scipy import special

from core.error_handler import GridTooCoarse, InvalidModel
from core.spectral import fourier_diff

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DUALITY_TOL = 1e-8


# ============================================
# MODELS
# ============================================

class PlaneFamily(str, Enum):
    """Supported unit-circle families"""
    EUCLIDEAN = "euclidean"
    LP = "lp"
    ELLIPSE = "ellipse"
    FOURIER = "fourier"


class EuclideanModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    family: Literal["euclidean"] = "euclidean"
    label: str = ""


class LpModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    family: Literal["lp"] = "lp"
    p: float = Field(gt=1.0)
    label: str = ""

    @property
    def conjugate(self) -> float:
        return self.p / (self.p - 1.0)


class EllipseModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    family: Literal["ellipse"] = "ellipse"
    a: float = Field(gt=0.0)
    b: float = Field(gt=0.0)
    label: str = ""


class FourierTerm(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    k: int
    a: float = 0.0
    b: float = 0.0

    @field_validator('k')
    @classmethod
    def _even_k(cls, k: int) -> int:
        if k < 2 or k % 2:
            raise ValueError("support-function terms need even k >= 2")
        return k


class FourierModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    family: Literal["fourier"] = "fourier"
    a0: float = Field(gt=0.0)
    terms: List[FourierTerm] = Field(default_factory=list)
    label: str = ""


PlaneModel = Annotated[
    Union[EuclideanModel, LpModel, EllipseModel, FourierModel],
    Field(discriminator='family'),
]

_MODEL_ADAPTER = TypeAdapter(PlaneModel)


def model_from_json(data: Union[str, Dict[str, Any]]) -> PlaneModel:
    """
    Validate a model given as a JSON string or an already-decoded dict.

    Raises:
        InvalidModel: unknown family or out-of-range parameters
    """
    try:
        if isinstance(data, str):
            data = json.loads(data)
        return _MODEL_ADAPTER.validate_python(data)
    except (ValidationError, ValueError) as e:
        raise InvalidModel(
            message="Plane model failed validation",
            context={'model': str(data)[:200]},
            original_error=e,
        ) from e


def model_to_json(model: PlaneModel) -> Dict[str, Any]:
    return model.model_dump(mode='json', exclude={'label'} if not model.label else None)


_TERM_PATTERN = re.compile(r'^k(\d+)([ab])$')


def parse_model_shorthand(text: str) -> PlaneModel:
    """
    Parse the command-line model grammar:

        euclidean | lp:<p> | ellipse:<a>,<b> | fourier:a0=<v>[,k<k>a=<v>][,k<k>b=<v>]

    A JSON object is accepted as well.
    """
    text = text.strip()
    if text.startswith('{'):
        return model_from_json(text)

    family, _, rest = text.partition(':')
    family = family.strip().lower()

    try:
        if family == PlaneFamily.EUCLIDEAN.value and not rest:
            data: Dict[str, Any] = {'family': 'euclidean'}
        elif family == PlaneFamily.LP.value:
            data = {'family': 'lp', 'p': float(rest)}
        elif family == PlaneFamily.ELLIPSE.value:
            a, b = rest.split(',')
            data = {'family': 'ellipse', 'a': float(a), 'b': float(b)}
        elif family == PlaneFamily.FOURIER.value:
            data = {'family': 'fourier', 'terms': []}
            coeffs: Dict[int, Dict[str, float]] = {}
            for item in filter(None, rest.split(',')):
                key, _, value = item.partition('=')
                key = key.strip()
                if key == 'a0':
                    data['a0'] = float(value)
                    continue
                match = _TERM_PATTERN.match(key)
                if not match:
                    raise ValueError(f"unknown fourier key {key!r}")
                coeffs.setdefault(int(match.group(1)), {})[match.group(2)] = float(value)
            data['terms'] = [{'k': k, **ab} for k, ab in sorted(coeffs.items())]
        else:
            raise ValueError(f"unknown family {family!r}")
    except ValueError as e:
        raise InvalidModel(
            message="Could not parse model shorthand",
            context={'model': text},
            suggestions=["Use euclidean, lp:3, ellipse:2,1 or fourier:a0=1,k2a=0.2"],
            original_error=e,
        ) from e

    return model_from_json(data)


# ============================================
# UNIT CIRCLES
# ============================================

class Frame(NamedTuple):
    """Closed-form samples at parameter values τ"""
    t: np.ndarray
    jac: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    ddp: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray
    bp: np.ndarray
    bq: np.ndarray


def _stack(x, y) -> np.ndarray:
    return np.stack([x, y], axis=-1)


def cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bracket [u, v] of 2-vectors (last axis)."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


class UnitCircle:
    """Base class of the closed-form families"""

    singular = False
    symmetric_quarter_turn = False

    def frame(self, tau: np.ndarray) -> Frame:
        raise NotImplementedError

    def brackets(self, tau):
        f = self.frame(np.atleast_1d(np.asarray(tau, dtype=float)))
        return f.bp, f.bq

    def norm(self, points: np.ndarray) -> Optional[np.ndarray]:
        """Closed-form norm of points, None when the family has none"""
        return None


class EuclideanCircle(UnitCircle):
    symmetric_quarter_turn = True

    def frame(self, tau):
        c, s = np.cos(tau), np.sin(tau)
        one = np.ones_like(tau)
        p = _stack(c, s)
        q = _stack(-s, c)
        return Frame(t=tau.copy(), jac=one, p=p, dp=q, ddp=-p, q=q, dq=-p, ddq=-q, bp=one, bq=one.copy())

    def brackets(self, tau):
        one = np.ones_like(np.atleast_1d(np.asarray(tau, dtype=float)))
        return one, one

    def norm(self, points):
        return np.hypot(points[..., 0], points[..., 1])


class EllipseCircle(UnitCircle):
    # B = diag(a,b) R(π/2) diag(1/a,1/b) maps the ellipse to itself with B² = -I
    symmetric_quarter_turn = True

    def __init__(self, a: float, b: float):
        self.a = a
        self.b = b

    def frame(self, tau):
        a, b = self.a, self.b
        c, s = np.cos(tau), np.sin(tau)
        p = _stack(a * c, b * s)
        dp = _stack(-a * s, b * c)
        q = _stack(-s / b, c / a)
        dq = _stack(-c / b, -s / a)
        ab = np.full_like(tau, a * b)
        return Frame(t=tau.copy(), jac=np.ones_like(tau), p=p, dp=dp, ddp=-p,
                     q=q, dq=dq, ddq=-q, bp=ab, bq=1.0 / ab)

    def brackets(self, tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        return np.full_like(tau, self.a * self.b), np.full_like(tau, 1.0 / (self.a * self.b))

    def norm(self, points):
        return np.hypot(points[..., 0] / self.a, points[..., 1] / self.b)


class FourierCircle(UnitCircle):
    """
    Unit circle given by its support function H(θ) = a0 + Σ a_k cos kθ + b_k sin kθ.

    p = H u + H' u', q = u'/H, [p,p'] = H (H + H''), [q,q'] = 1/H².
    """

    def __init__(self, a0: float, terms: List[FourierTerm]):
        self.a0 = a0
        self.k = np.array([t.k for t in terms], dtype=float)
        self.ak = np.array([t.a for t in terms], dtype=float)
        self.bk = np.array([t.b for t in terms], dtype=float)
        self.symmetric_quarter_turn = all(t.k % 4 == 0 for t in terms)

    def support(self, tau: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """H and its first three derivatives."""
        tau = np.asarray(tau, dtype=float)
        if self.k.size == 0:
            zero = np.zeros_like(tau)
            return np.full_like(tau, self.a0), zero, zero, zero
        kt = np.multiply.outer(tau, self.k)
        c, s = np.cos(kt), np.sin(kt)
        H = self.a0 + c @ self.ak + s @ self.bk
        H1 = s @ (-self.k * self.ak) + c @ (self.k * self.bk)
        H2 = c @ (-self.k ** 2 * self.ak) + s @ (-self.k ** 2 * self.bk)
        H3 = s @ (self.k ** 3 * self.ak) + c @ (-self.k ** 3 * self.bk)
        return H, H1, H2, H3

    def frame(self, tau):
        H, H1, H2, H3 = self.support(tau)
        u = _stack(np.cos(tau), np.sin(tau))
        du = _stack(-np.sin(tau), np.cos(tau))
        col = lambda v: v[..., None]

        p = col(H) * u + col(H1) * du
        dp = col(H + H2) * du
        ddp = col(H1 + H3) * du - col(H + H2) * u
        q = du / col(H)
        dq = -u / col(H) - col(H1) * du / col(H ** 2)
        ddq = (-du / col(H) + 2.0 * col(H1) * u / col(H ** 2)
               - col(H2) * du / col(H ** 2) + 2.0 * col(H1 ** 2) * du / col(H ** 3))
        return Frame(t=tau.copy(), jac=np.ones_like(tau), p=p, dp=dp, ddp=ddp,
                     q=q, dq=dq, ddq=ddq, bp=H * (H + H2), bq=1.0 / H ** 2)

    def brackets(self, tau):
        H, _, H2, _ = self.support(np.atleast_1d(np.asarray(tau, dtype=float)))
        return H * (H + H2), 1.0 / H ** 2


def _finite(x: np.ndarray) -> np.ndarray:
    # products of a vanishing Jacobian with a diverging power tend to zero
    return np.where(np.isfinite(x), x, 0.0)


class LpCircle(UnitCircle):
    """
    L_p unit circle (sgn(cos t)|cos t|^{2/p}, sgn(sin t)|sin t|^{2/p}) sampled in a
    regularizing parameter τ.

    Per quadrant, t = jπ/2 + (π/2)·I_{sin²u}(m/2, m/2) with τ = jπ/2 + u and
    m = 4⌈max(p, p*)⌉. The Jacobian dt/dτ = π (sin u cos u)^{m-1} / B(m/2, m/2)
    vanishes at the axes fast enough to cancel the power-law blow-up of the
    brackets, so every τ-coefficient is bounded and vanishes at the axes.
    """

    singular = True
    symmetric_quarter_turn = True

    def __init__(self, p: float):
        self.p = p
        self.p_conj = p / (p - 1.0)
        self.m = 4 * math.ceil(max(p, self.p_conj))
        self.beta = special.beta(self.m / 2.0, self.m / 2.0)
        self.a = 2.0 / p
        self.b = 2.0 / self.p_conj

    def reparameterize(self, tau: np.ndarray):
        """
        Local quadrant data of τ.

        Returns:
            (j, cos_t, sin_t, t, jac, djac) where cos_t, sin_t are computed from
            the in-quadrant offset so they stay accurate next to the axes.
        """
        tau = np.mod(np.asarray(tau, dtype=float), TWO_PI)
        j = np.minimum(np.floor(tau / (np.pi / 2.0)).astype(int), 3)
        u = tau - j * (np.pi / 2.0)
        su, cu = np.sin(u), np.cos(u)
        half_m = self.m / 2.0

        low = u <= np.pi / 4.0
        v_low = (np.pi / 2.0) * special.betainc(half_m, half_m, su ** 2)
        w_high = (np.pi / 2.0) * special.betainc(half_m, half_m, cu ** 2)
        sv = np.where(low, np.sin(v_low), np.cos(w_high))
        cv = np.where(low, np.cos(v_low), np.sin(w_high))
        v = np.where(low, v_low, np.pi / 2.0 - w_high)

        sc = su * cu
        jac = np.pi * sc ** (self.m - 1) / self.beta
        djac = np.pi * (self.m - 1) * sc ** (self.m - 2) * np.cos(2.0 * u) / self.beta

        # rotate the first-quadrant pair by jπ/2
        cos_t = np.choose(j, [cv, -sv, -cv, sv])
        sin_t = np.choose(j, [sv, cv, -sv, -cv])
        t = j * (np.pi / 2.0) + v
        return j, cos_t, sin_t, t, jac, djac

    @staticmethod
    def _powers(c: np.ndarray, s: np.ndarray, e: float):
        """
        f = sgn(s)|s|^e and g = sgn(c)|c|^e with their first two t-derivatives.
        """
        ac, as_ = np.abs(c), np.abs(s)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            f = np.sign(s) * as_ ** e
            f1 = e * as_ ** (e - 1.0) * c
            f2 = e * np.sign(s) * ((e - 1.0) * as_ ** (e - 2.0) * c ** 2 - as_ ** e)
            g = np.sign(c) * ac ** e
            g1 = -e * ac ** (e - 1.0) * s
            g2 = e * np.sign(c) * ((e - 1.0) * ac ** (e - 2.0) * s ** 2 - ac ** e)
        return f, f1, f2, g, g1, g2

    def frame(self, tau):
        _, c, s, t, jac, djac = self.reparameterize(tau)
        fa, fa1, fa2, ga, ga1, ga2 = self._powers(c, s, self.a)
        fb, fb1, fb2, gb, gb1, gb2 = self._powers(c, s, self.b)

        with np.errstate(invalid='ignore', over='ignore'):
            p = _stack(ga, fa)
            dp = _finite(_stack(ga1, fa1) * jac[:, None])
            ddp = _finite(_stack(ga2, fa2) * (jac ** 2)[:, None]) + _finite(_stack(ga1, fa1) * djac[:, None])
            q = _stack(-fb, gb)
            dq = _finite(_stack(-fb1, gb1) * jac[:, None])
            ddq = _finite(_stack(-fb2, gb2) * (jac ** 2)[:, None]) + _finite(_stack(-fb1, gb1) * djac[:, None])
            bp, bq = self._tau_brackets(c, s, jac)

        return Frame(t=t, jac=jac, p=p, dp=dp, ddp=ddp, q=q, dq=dq, ddq=ddq, bp=bp, bq=bq)

    def _tau_brackets(self, c, s, jac):
        acs = np.abs(c * s)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            bp = _finite(self.a * acs ** (self.a - 1.0) * jac)
            bq = _finite(self.b * acs ** (self.b - 1.0) * jac)
        return bp, bq

    def brackets(self, tau):
        _, c, s, _, jac, _ = self.reparameterize(np.atleast_1d(tau))
        return self._tau_brackets(c, s, jac)

    def norm(self, points):
        return (np.abs(points[..., 0]) ** self.p + np.abs(points[..., 1]) ** self.p) ** (1.0 / self.p)


def circle_for(model: PlaneModel) -> UnitCircle:
    """Closed-form family object for a validated model."""
    if isinstance(model, EuclideanModel):
        return EuclideanCircle()
    if isinstance(model, LpModel):
        if model.p == 2.0:
            return EuclideanCircle()
        return LpCircle(model.p)
    if isinstance(model, EllipseModel):
        return EllipseCircle(model.a, model.b)
    if isinstance(model, FourierModel):
        return FourierCircle(model.a0, model.terms)
    raise InvalidModel(message="Unsupported plane family", context={'model': repr(model)})


# ============================================
# PLANE FIELD
# ============================================

@dataclass(frozen=True)
class PlaneField:
    """
    Sampled plane on the staggered grid τ_j = (j + ½)·2π/n.

    Arrays are read-only. ``t``/``jac`` give the family's natural parameter and
    dt/dτ (identity except for L_p). For the dual plane returned by ``dual()``
    the roles of p and q are exchanged.
    """
    model: Any
    grid: np.ndarray
    t: np.ndarray
    jac: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    ddp: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray
    bp: np.ndarray
    bq: np.ndarray
    singular_nodes: Tuple[int, ...]
    symmetric_quarter_turn: bool
    circle: UnitCircle = dataclass_field(repr=False, compare=False)
    is_dual: bool = False
    _partner: Optional["PlaneField"] = dataclass_field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def step(self) -> float:
        return TWO_PI / self.n

    @property
    def origin(self) -> float:
        """Staggered-grid origin, the start of every monodromy."""
        return float(self.grid[0])

    @property
    def family(self) -> PlaneFamily:
        return PlaneFamily(self.model.family)

    @property
    def regular_mask(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.singular_nodes)] = False
        return mask

    def coefficients(self, tau):
        """(bp, bq) at arbitrary parameter values, closed form."""
        bp, bq = self.circle.brackets(tau)
        return (bq, bp) if self.is_dual else (bp, bq)

    def frame_at(self, tau) -> Frame:
        """Closed-form frame at arbitrary parameter values, in this field's roles."""
        f = self.circle.frame(np.atleast_1d(np.asarray(tau, dtype=float)))
        if not self.is_dual:
            return f
        return Frame(t=f.t, jac=f.jac, p=f.q, dp=f.dq, ddp=f.ddq,
                     q=-f.p, dq=-f.dp, ddq=-f.ddp, bp=f.bq, bq=f.bp)

    def natural_brackets(self) -> Tuple[np.ndarray, np.ndarray]:
        """Brackets in the family's natural parameter t (bp/jac, bq/jac)."""
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.bp / self.jac, self.bq / self.jac

    def dual(self) -> "PlaneField":
        """
        Dual plane of evolutes: p* = q, q* = -p. dual().dual() is this object.
        """
        if self._partner is not None:
            return self._partner
        partner = PlaneField(
            model=self.model,
            grid=self.grid,
            t=self.t,
            jac=self.jac,
            p=self.q,
            dp=self.dq,
            ddp=self.ddq,
            q=_readonly(-self.p),
            dq=_readonly(-self.dp),
            ddq=_readonly(-self.ddp),
            bp=self.bq,
            bq=self.bp,
            singular_nodes=self.singular_nodes,
            symmetric_quarter_turn=self.symmetric_quarter_turn,
            circle=self.circle,
            is_dual=not self.is_dual,
            _partner=self,
        )
        object.__setattr__(self, '_partner', partner)
        return partner

    def shift_half_turn(self, values: np.ndarray) -> np.ndarray:
        """Samples at τ + π (index shift by n/2)."""
        return np.roll(values, -(self.n // 2), axis=0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _axis_nodes(n: int) -> Tuple[int, ...]:
    h = TWO_PI / n
    nodes = set()
    for alpha in (0.0, np.pi / 2.0, np.pi, 1.5 * np.pi):
        lo = int(math.floor(alpha / h - 0.5))
        nodes.add(lo % n)
        nodes.add((lo + 1) % n)
    return tuple(sorted(nodes))


def _check_fourier(circle: FourierCircle, n: int):
    if circle.k.size and circle.k.max() > n // 4:
        raise GridTooCoarse(
            message="Fourier terms are not resolved by the grid",
            context={'k_max': int(circle.k.max()), 'n': n},
        )
    probe = np.linspace(0.0, TWO_PI, max(4 * n, 8192), endpoint=False)
    H, _, H2, _ = circle.support(probe)
    if H.min() <= 0.0:
        raise InvalidModel(
            message="Support function H is not positive",
            context={'min_H': float(H.min())},
        )
    if (H + H2).min() <= 0.0:
        raise InvalidModel(
            message="Unit circle is not quadratically convex (H + H'' <= 0)",
            context={'min_H_plus_H2': float((H + H2).min())},
        )


def build_plane(model: PlaneModel, n: int = 2048) -> PlaneField:
    """
    Sample a plane model on the staggered grid.

    Args:
        model: Validated PlaneModel
        n: Grid size, power of two >= 64

    Returns:
        PlaneField

    Raises:
        InvalidModel: convexity or positivity violated
        GridTooCoarse: grid too small or duality residual above tolerance
    """
    if n < 64 or n & (n - 1):
        raise GridTooCoarse(
            message="Grid size must be a power of two >= 64",
            context={'n': n},
        )

    circle = circle_for(model)
    if isinstance(circle, FourierCircle):
        _check_fourier(circle, n)

    grid = (np.arange(n) + 0.5) * (TWO_PI / n)
    frame = circle.frame(grid)
    singular = _axis_nodes(n) if circle.singular else ()

    field = PlaneField(
        model=model,
        grid=_readonly(grid),
        t=_readonly(frame.t),
        jac=_readonly(frame.jac),
        p=_readonly(frame.p),
        dp=_readonly(frame.dp),
        ddp=_readonly(frame.ddp),
        q=_readonly(frame.q),
        dq=_readonly(frame.dq),
        ddq=_readonly(frame.ddq),
        bp=_readonly(frame.bp),
        bq=_readonly(frame.bq),
        singular_nodes=singular,
        symmetric_quarter_turn=circle.symmetric_quarter_turn,
        circle=circle,
    )

    mask = field.regular_mask
    duality = float(np.max(np.abs(cross(field.p, field.q) - 1.0)[mask]))
    if duality > DUALITY_TOL:
        raise GridTooCoarse(
            message="Duality residual [p,q] - 1 above tolerance",
            context={'residual': duality, 'n': n},
        )

    logger.info(f"🧭 Plane built: {model.family} n={n} singular_nodes={len(singular)}")
    return field


# ============================================
# VALIDATION
# ============================================

@dataclass
class CheckResult:
    name: str
    residual: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'residual': self.residual, 'pass': self.passed}


@dataclass
class PlaneReport:
    """Per-check residuals of validate_plane"""
    family: str
    n: int
    tol: float
    checks: Dict[str, CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def residual(self, name: str) -> float:
        return self.checks[name].residual

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'n': self.n,
            'tol': self.tol,
            'pass': self.passed,
            'checks': {name: c.to_dict() for name, c in self.checks.items()},
        }


def validate_plane(field: PlaneField, tol: float = 1e-8) -> PlaneReport:
    """
    Residuals of the defining relations at the regular nodes.

    Checks:
        duality          max |[p,q] - 1|
        symmetry         max |p(τ+π) + p(τ)|, same for q
        periodicity      max |bp(τ+π) - bp(τ)|, same for bq (relative)
        positivity       -min(bp, bq) clipped at 0
        identity         max |[p,p']·[q,q']² - [q',q'']|
        reconstruction   max |p + q'/[q,q']|
        spectral         bp, bq against brackets of spectrally differentiated p, q (relative)
        unit_circle      closed-form norm of p minus 1 (families with a closed-form norm)
    """
    mask = field.regular_mask
    checks: Dict[str, CheckResult] = {}

    def add(name: str, residual: float, passed: Optional[bool] = None):
        residual = float(residual)
        if passed is None:
            passed = bool(np.isfinite(residual) and residual <= tol)
        checks[name] = CheckResult(name, residual, passed)

    add('duality', np.max(np.abs(cross(field.p, field.q) - 1.0)[mask]))

    add('symmetry', max(
        np.max(np.abs(field.shift_half_turn(field.p) + field.p)),
        np.max(np.abs(field.shift_half_turn(field.q) + field.q)),
    ))

    scale_p = np.max(np.abs(field.bp))
    scale_q = np.max(np.abs(field.bq))
    add('periodicity', max(
        np.max(np.abs(field.shift_half_turn(field.bp) - field.bp)) / scale_p,
        np.max(np.abs(field.shift_half_turn(field.bq) - field.bq)) / scale_q,
    ))

    min_bracket = min(np.min(field.bp[mask]), np.min(field.bq[mask]))
    add('positivity', max(0.0, -min_bracket), passed=bool(min_bracket > 0.0))

    identity = field.bp * field.bq ** 2 - cross(field.dq, field.ddq)
    add('identity', np.max(np.abs(identity[mask])))

    with np.errstate(divide='ignore', invalid='ignore'):
        recon = field.p + field.dq / field.bq[:, None]
    add('reconstruction', np.max(np.abs(recon[mask])))

    dp_spectral = fourier_diff(field.p.T).T
    dq_spectral = fourier_diff(field.q.T).T
    add('spectral', max(
        np.max(np.abs(cross(field.p, dp_spectral) - field.bp)[mask]) / scale_p,
        np.max(np.abs(cross(field.q, dq_spectral) - field.bq)[mask]) / scale_q,
    ))

    norms = field.circle.norm(field.q if field.is_dual else field.p)
    if norms is not None and not field.is_dual:
        add('unit_circle', np.max(np.abs(norms - 1.0)))

    report = PlaneReport(family=field.model.family, n=field.n, tol=tol, checks=checks)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"{'✅' if report.passed else '⚠️ '} Plane validation ({field.model.family}): "
                      + ", ".join(f"{k}={v.residual:.2e}" for k, v in checks.items()))
    return report
