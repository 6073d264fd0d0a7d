"""
Eigenvalue ladder, N-turn eigenvalues and the symmetry doubling check.

The ladder of the 2π-periodic problem is 0 = λ0 < λ1 = 1 < λ2¹ <= λ2² < λ3¹ ...
Periodic eigenvalues (k even) are where tr A(λ,π) = 2, antiperiodic ones
(k odd) where tr A(λ,π) = -2. Each pair is bracketed by the rotation roots
λ*_j (half-turn Prüfer advance = jπ), which lie inside [λ_j¹, λ_j²].
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from core.error_handler import BracketFailure
from core.plane import PlaneField, model_to_json
from core.spectral import count_sign_changes, fourier_diff, trapezoid
from core.sturm import (
    DEFAULT_ODE_TOL,
    DEFAULT_PARABOLIC_TOL,
    MonodromyTag,
    classify,
    fundamental_solution,
    half_turn_advance,
    monodromy,
)

logger = logging.getLogger(__name__)

DOUBLE_MONODROMY_TOL = 1e-6


class PeriodicityType(str, Enum):
    PERIODIC = "periodic"           # k even
    ANTIPERIODIC = "antiperiodic"   # k odd

    @classmethod
    def for_index(cls, k: int) -> "PeriodicityType":
        return cls.PERIODIC if k % 2 == 0 else cls.ANTIPERIODIC


class CycloidKind(str, Enum):
    EPICYCLOID = "epicycloid"       # 0 < λ < 1
    HYPOCYCLOID = "hypocycloid"     # λ > 1


@dataclass
class EigenRecord:
    """One eigenvalue of the ladder with its normalized eigenfunction"""
    k: int
    branch: int
    lam: float
    ptype: PeriodicityType
    double_flag: bool
    h: np.ndarray = dataclass_field(repr=False)
    hw: np.ndarray = dataclass_field(repr=False)     # h'/[q,q']
    zero_count: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'branch': self.branch,
            'lambda': self.lam,
            'ptype': self.ptype.value,
            'double': self.double_flag,
            'zeros': self.zero_count,
        }


@dataclass
class Ladder:
    """Eigen-records ordered by (k, branch), plus the rotation roots used to bracket them"""
    records: List[EigenRecord]
    rotation_roots: List[float]
    k_max: int
    tol: float

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def get(self, k: int, branch: int = 1) -> EigenRecord:
        for r in self.records:
            if r.k == k and r.branch == branch:
                return r
        raise KeyError((k, branch))

    def eigenvalue(self, k: int, branch: int = 1) -> float:
        return self.get(k, branch).lam

    def basis(self, k_max: Optional[int] = None) -> List[EigenRecord]:
        """Records with 1 <= k <= k_max (the constant record excluded)."""
        k_max = self.k_max if k_max is None else k_max
        return [r for r in self.records if 1 <= r.k <= k_max]


@dataclass
class NTurnRecord:
    """Double eigenvalue of the 2πN-periodic problem"""
    N: int
    k: int
    lam: float
    kind: CycloidKind
    multiplicity: int                 # gcd(k, N): the curve repeats a reduced N/gcd-turn curve
    closure_residual: float           # ‖A(λ,π)^{2N} - I‖
    h: np.ndarray = dataclass_field(repr=False)
    hw: np.ndarray = dataclass_field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'N': self.N,
            'k': self.k,
            'lambda': self.lam,
            'kind': self.kind.value,
            'multiplicity': self.multiplicity,
            'closure_residual': self.closure_residual,
        }


# ============================================
# HELPERS
# ============================================

def _norm(field: PlaneField, h: np.ndarray) -> float:
    return math.sqrt(trapezoid(h * h * field.bp))


def _inner(field: PlaneField, a: np.ndarray, b: np.ndarray) -> float:
    return trapezoid(a * b * field.bp)


def _normalize(field: PlaneField, h: np.ndarray, hw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit weighted norm, largest sample positive."""
    scale = _norm(field, h)
    h, hw = h / scale, hw / scale
    if h[np.argmax(np.abs(h))] < 0:
        h, hw = -h, -hw
    return h, hw


def _gram_schmidt(field: PlaneField, pairs: Sequence[Tuple[np.ndarray, np.ndarray]]):
    out: List[Tuple[np.ndarray, np.ndarray]] = []
    for h, hw in pairs:
        for g, gw in out:
            c = _inner(field, h, g)
            h, hw = h - c * g, hw - c * gw
        scale = _norm(field, h)
        out.append((h / scale, hw / scale))
    return [_normalize(field, h, hw) for h, hw in out]


def lambda_cap(field: PlaneField, k_max: int) -> float:
    """Search ceiling 4·(k_max+1)²·max(bp·bq) in the natural parameter."""
    bp, bq = field.natural_brackets()
    product = (bp * bq)[field.regular_mask]
    return 4.0 * (k_max + 1) ** 2 * float(np.max(product[np.isfinite(product)]))


# ============================================
# λ = 1
# ============================================

@dataclass
class LambdaOneEigenspace:
    """r_i = [e_i, q] and w_i = r_i'/[q,q'] = -[e_i, p]"""
    r: np.ndarray                  # shape (2, n)
    w: np.ndarray
    ode_residual: float
    antiperiodic_residual: float
    half_turn_gaps: np.ndarray     # ‖∫ r·p' over a half turn‖ per solution

    @property
    def closed(self) -> bool:
        return bool(np.all(self.half_turn_gaps < 1e-8))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'ode_residual': self.ode_residual,
            'antiperiodic_residual': self.antiperiodic_residual,
            'half_turn_gaps': self.half_turn_gaps.tolist(),
            'closed': self.closed,
        }


def lambda_one_eigenspace(field: PlaneField) -> LambdaOneEigenspace:
    """
    Closed-form λ = 1 eigenspace. These cycloids never close: the half-turn
    integral of r·p' is nonzero.
    """
    r = np.stack([field.q[:, 1], -field.q[:, 0]])
    w = np.stack([-field.p[:, 1], field.p[:, 0]])

    residual = fourier_diff(w) + field.bp * r
    ode_residual = float(np.max(np.abs(residual[:, field.regular_mask])))
    antiperiodic = float(np.max(np.abs(np.roll(r, -(field.n // 2), axis=1) + r)))

    gaps = []
    for ri in r:
        # r·p' is π-periodic, so the half-turn integral is half the full-turn sum
        integrand = ri[:, None] * field.dp
        vec = np.array([trapezoid(integrand[:, 0]), trapezoid(integrand[:, 1])]) / 2.0
        gaps.append(np.linalg.norm(vec))

    space = LambdaOneEigenspace(r=r, w=w, ode_residual=ode_residual,
                                antiperiodic_residual=antiperiodic, half_turn_gaps=np.array(gaps))
    logger.debug(f"λ=1 eigenspace: residual={ode_residual:.2e} gaps={space.half_turn_gaps}")
    return space


# ============================================
# LADDER
# ============================================

def rotation_root(
    field: PlaneField,
    j: int,
    lower: float,
    cap: float,
    tol: float,
    ode_tol: float,
) -> float:
    """λ*_j: half-turn Prüfer advance equals jπ. Searched above ``lower``."""
    target = j * np.pi

    def f(lam):
        return half_turn_advance(field, lam, ode_tol) - target

    lo = lower
    growth = (j / max(j - 1, 1)) ** 2
    hi = max(lower * growth * 1.25, lower + 1.0)
    while f(hi) < 0.0:
        lo = hi
        hi *= 1.5
        if hi > cap:
            if f(cap) < 0.0:
                raise BracketFailure(
                    message=f"Rotation index never reached {j}/2 below the search cap",
                    context={'j': j, 'cap': cap, 'lower': lower},
                )
            hi = cap
            break
    root = optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
    logger.debug(f"rotation root λ*_{j} = {root:.12g}")
    return float(root)


def _pair_for_index(
    field: PlaneField,
    k: int,
    roots: List[float],
    tol: float,
    parabolic_tol: float,
    ode_tol: float,
) -> List[EigenRecord]:
    sigma = (-1) ** k

    def g(lam):
        return sigma * monodromy(field, lam, ode_tol).trace - 2.0

    left, star, right = roots[k - 1], roots[k], roots[k + 1]
    g_star = g(star)
    double_at: Optional[float] = None
    lams: Tuple[float, float]

    if g_star > parabolic_tol:
        lams = (optimize.brentq(g, left, star, xtol=tol), optimize.brentq(g, star, right, xtol=tol))
    else:
        a_star = monodromy(field, star, ode_tol).matrix
        if np.max(np.abs(a_star - sigma * np.eye(2))) <= DOUBLE_MONODROMY_TOL:
            double_at = star
        else:
            best = optimize.minimize_scalar(lambda x: -g(x), bounds=(left, right),
                                            method='bounded', options={'xatol': tol})
            peak = float(best.x)
            if -best.fun > parabolic_tol:
                lams = (optimize.brentq(g, left, peak, xtol=tol), optimize.brentq(g, peak, right, xtol=tol))
            else:
                double_at = peak

    ptype = PeriodicityType.for_index(k)
    half = field.n // 2

    def eigenfunction(lam, inits):
        fs = fundamental_solution(field, lam, 1, ode_tol)
        out = []
        for v in inits:
            first = fs.Y[:half] @ np.asarray(v, dtype=float)
            hw = np.concatenate([first, sigma * first])
            out.append((hw[:, 0], hw[:, 1]))
        return out, fs.monodromy.matrix

    records: List[EigenRecord] = []
    if double_at is not None:
        pairs, _ = eigenfunction(double_at, [(1.0, 0.0), (0.0, 1.0)])
        for branch, (h, hw) in enumerate(_gram_schmidt(field, pairs), start=1):
            records.append(EigenRecord(k, branch, double_at, ptype, True, h, hw, count_sign_changes(h)))
    else:
        double = abs(lams[1] - lams[0]) < 10.0 * tol
        for branch, lam in enumerate(lams, start=1):
            a = monodromy(field, lam, ode_tol).matrix
            m = a - sigma * np.eye(2)
            row = m[int(np.argmax(np.linalg.norm(m, axis=1)))]
            v = (row[1], -row[0]) if np.linalg.norm(row) > DOUBLE_MONODROMY_TOL else (1.0, 0.0)
            (pair,), _ = eigenfunction(lam, [v])
            h, hw = _normalize(field, *pair)
            records.append(EigenRecord(k, branch, float(lam), ptype, double, h, hw, count_sign_changes(h)))

    logger.info(f"🪜 k={k}: λ¹={records[0].lam:.10g} λ²={records[1].lam:.10g} "
                f"{'double' if records[0].double_flag else 'split'}")
    return records


def find_ladder(
    field: PlaneField,
    k_max: int = 8,
    tol: float = 1e-9,
    parabolic_tol: float = DEFAULT_PARABOLIC_TOL,
    ode_tol: float = DEFAULT_ODE_TOL,
    cap: Optional[float] = None,
    workers: int = 1,
) -> Ladder:
    """
    Compute λ0 = 0, λ1 = 1 and the pairs λ_k¹ <= λ_k² for 2 <= k <= k_max.

    Args:
        field: Plane
        k_max: Deepest index (>= 2)
        tol: Bracket width of the eigenvalue refinement
        parabolic_tol: Band on |tr ∓ 2| treated as touching
        ode_tol: Integrator tolerance
        cap: λ search ceiling (default lambda_cap(field, k_max))
        workers: Threads used across indices

    Returns:
        Ladder ordered by (k, branch)

    Raises:
        BracketFailure: a rotation root is not found below the cap
    """
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    cap = cap if cap is not None else lambda_cap(field, k_max)

    # rotation roots λ*_0 .. λ*_{k_max+1}
    roots = [0.0, 1.0]
    for j in range(2, k_max + 2):
        roots.append(rotation_root(field, j, roots[-1], cap, tol, ode_tol))

    records: List[EigenRecord] = []
    const = np.full(field.n, 1.0 / _norm(field, np.ones(field.n)))
    records.append(EigenRecord(0, 1, 0.0, PeriodicityType.PERIODIC, False, const, np.zeros(field.n), 0))

    space = lambda_one_eigenspace(field)
    for branch, (h, hw) in enumerate(_gram_schmidt(field, list(zip(space.r, space.w))), start=1):
        records.append(EigenRecord(1, branch, 1.0, PeriodicityType.ANTIPERIODIC, True, h, hw, count_sign_changes(h)))

    indices = list(range(2, k_max + 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(
                lambda k: _pair_for_index(field, k, roots, tol, parabolic_tol, ode_tol), indices))
    else:
        blocks = [_pair_for_index(field, k, roots, tol, parabolic_tol, ode_tol) for k in indices]
    for block in blocks:
        records.extend(block)

    logger.info(f"✅ Ladder complete ({field.model.family}, k_max={k_max})")
    return Ladder(records=records, rotation_roots=roots, k_max=k_max, tol=tol)


# ============================================
# N TURNS
# ============================================

def _n_turn_record(field, N, k, lam, kind, ode_tol) -> NTurnRecord:
    fs = fundamental_solution(field, lam, N, ode_tol)
    h, hw = fs.solution((1.0, 0.0))
    residual = float(np.max(np.abs(fs.monodromy.power(2 * N) - np.eye(2))))
    return NTurnRecord(N=N, k=k, lam=float(lam), kind=kind, multiplicity=math.gcd(k, N),
                       closure_residual=residual, h=h, hw=hw)


def find_n_turn(
    field: PlaneField,
    N: int,
    tol: float = 1e-9,
    hypo_k_max: Optional[int] = None,
    ode_tol: float = DEFAULT_ODE_TOL,
    cap: Optional[float] = None,
) -> List[NTurnRecord]:
    """
    Eigenvalues of the 2πN-periodic problem: tr A(λ,π) = 2cos(πk/N).

    Epicycloids use k = 1..N-1 in (0, 1). Hypocycloids use N < k <= hypo_k_max
    (default 2N+1), each found in the elliptic gap between the rotation roots
    λ*_{j-1} and λ*_j, j = ⌈k/N⌉. Indices sharing a factor with N are reported
    with their multiplicity.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    hypo_k_max = 2 * N + 1 if hypo_k_max is None else hypo_k_max

    def trace_minus(target):
        return lambda lam: monodromy(field, lam, ode_tol).trace - target

    records: List[NTurnRecord] = []
    for k in range(1, N):
        target = 2.0 * math.cos(math.pi * k / N)
        lam = optimize.brentq(trace_minus(target), 0.0, 1.0, xtol=tol)
        records.append(_n_turn_record(field, N, k, lam, CycloidKind.EPICYCLOID, ode_tol))

    hypo = [k for k in range(N + 1, hypo_k_max + 1) if k % N]
    if hypo:
        j_max = max(math.ceil(k / N) for k in hypo)
        cap = cap if cap is not None else lambda_cap(field, j_max)
        roots = [0.0, 1.0]
        for j in range(2, j_max + 1):
            roots.append(rotation_root(field, j, roots[-1], cap, tol, ode_tol))
        for k in hypo:
            j = math.ceil(k / N)
            target = 2.0 * math.cos(math.pi * k / N)
            lam = optimize.brentq(trace_minus(target), roots[j - 1], roots[j], xtol=tol)
            records.append(_n_turn_record(field, N, k, lam, CycloidKind.HYPOCYCLOID, ode_tol))

    logger.info(f"🔁 N={N}: " + ", ".join(f"k={r.k} λ={r.lam:.8g}" for r in records))
    return records


# ============================================
# SYMMETRY DOUBLING
# ============================================

@dataclass
class DoublingEntry:
    k: int
    gap: float
    monodromy_defect: Optional[float]    # max |A(λ,π) + I|, odd k only
    passed: Optional[bool]               # None for recorded observations


@dataclass
class DoublingReport:
    applicable: bool
    tol: float
    entries: List[DoublingEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed is not False for e in self.entries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'applicable': self.applicable,
            'pass': self.passed,
            'entries': [e.__dict__ for e in self.entries],
        }


def symmetry_doubling_check(
    field: PlaneField,
    ladder: Ladder,
    k_max: Optional[int] = None,
    tol: float = 1e-6,
    ode_tol: float = DEFAULT_ODE_TOL,
) -> DoublingReport:
    """
    Planes invariant under a linear B with B² = -I have λ_k¹ = λ_k² for odd k
    and A(λ_k, π) = -I there. Other gaps are recorded without assertion.
    """
    k_max = ladder.k_max if k_max is None else min(k_max, ladder.k_max)
    applicable = field.symmetric_quarter_turn
    entries = []
    for k in range(2, k_max + 1):
        gap = abs(ladder.eigenvalue(k, 2) - ladder.eigenvalue(k, 1))
        if applicable and k % 2 == 1:
            lam = 0.5 * (ladder.eigenvalue(k, 1) + ladder.eigenvalue(k, 2))
            defect = float(np.max(np.abs(monodromy(field, lam, ode_tol).matrix + np.eye(2))))
            entries.append(DoublingEntry(k, gap, defect, gap < tol and defect < tol))
        else:
            entries.append(DoublingEntry(k, gap, None, None))
    report = DoublingReport(applicable=applicable, tol=tol, entries=entries)
    logger.info(f"{'✅' if report.passed else '❌'} Doubling check ({field.model.family}), applicable={applicable}")
    return report


# ============================================
# GAPS
# ============================================

@dataclass
class GapSample:
    lam: float
    k: int
    zone: str                 # "elliptic" (between pairs) or "instability" (inside a split pair)
    tag: MonodromyTag
    trace: float

    def to_dict(self):
        return {'lambda': self.lam, 'k': self.k, 'zone': self.zone, 'tag': self.tag.value, 'trace': self.trace}


def gap_samples(
    field: PlaneField,
    ladder: Ladder,
    per_gap: int = 3,
    parabolic_tol: float = DEFAULT_PARABOLIC_TOL,
    ode_tol: float = DEFAULT_ODE_TOL,
) -> List[GapSample]:
    """
    Classify λ values strictly inside each elliptic gap (λ_{k-1}², λ_k¹) and
    inside each split instability zone (λ_k¹, λ_k²).
    """
    samples = []
    fractions = (np.arange(per_gap) + 1.0) / (per_gap + 1.0)
    for k in range(1, ladder.k_max + 1):
        lo = ladder.eigenvalue(k - 1, 2 if k - 1 >= 1 else 1)
        hi = ladder.eigenvalue(k, 1)
        for f in fractions:
            lam = lo + f * (hi - lo)
            m = monodromy(field, lam, ode_tol)
            samples.append(GapSample(lam, k, "elliptic", classify(m, parabolic_tol).tag, m.trace))
        lo, hi = ladder.eigenvalue(k, 1), ladder.eigenvalue(k, 2)
        if hi - lo > 10.0 * ladder.tol:
            for f in fractions:
                lam = lo + f * (hi - lo)
                m = monodromy(field, lam, ode_tol)
                samples.append(GapSample(lam, k, "instability", classify(m, parabolic_tol).tag, m.trace))
    return samples


def ladder_to_json(
    field: PlaneField,
    ladder: Ladder,
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """{"model": ..., "n": ..., "ladder": [...]} plus optional extra sections."""
    data: Dict[str, Any] = {
        'model': model_to_json(field.model),
        'n': field.n,
        'tol': ladder.tol,
        'ladder': [r.to_dict() for r in ladder.records],
    }
    if extra:
        data.update(extra)
    return data
