"""
Weighted L² machinery on support functions.

The inner product is ⟨h1, h2⟩ = ∫ h1·h2·[p,p'] over one turn. The ladder
eigenfunctions are an orthonormal basis; the space splits as
K (constants) ⊕ λ=1 (translations) ⊕ E0 (even k >= 2) ⊕ W0 (odd k >= 3).
The involute operator S contracts C0 toward the k=2 eigenspace, and the
vertex suites exercise the four- and six-vertex theorems on random curves.
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.error_handler import LadderTooShort, PreconditionViolated
from core.geometry import double_evolute_operator, dual_length, involute_operator, width_function
from core.plane import PlaneField
from core.spectral import count_sign_changes, trapezoid
from core.spectrum import EigenRecord, Ladder

logger = logging.getLogger(__name__)

Key = Tuple[int, int]     # (k, branch)


# ============================================
# INNER PRODUCT
# ============================================

def inner_product(field: PlaneField, h1: np.ndarray, h2: np.ndarray) -> float:
    """⟨h1, h2⟩ = ∫ h1·h2·[p,p'] dθ (trapezoid)."""
    return trapezoid(np.asarray(h1) * np.asarray(h2) * field.bp)


def weighted_norm(field: PlaneField, h: np.ndarray) -> float:
    return float(np.sqrt(max(inner_product(field, h, h), 0.0)))


def dirichlet_form(field: PlaneField, hw1: np.ndarray, hw2: np.ndarray) -> float:
    """⟨h1, T h2⟩ after integration by parts: ∫ (h1'/bq)·(h2'/bq)·bq."""
    return trapezoid(np.asarray(hw1) * np.asarray(hw2) * field.bq)


def _records(ladder: Ladder, k_max: Optional[int] = None) -> List[EigenRecord]:
    k_max = ladder.k_max if k_max is None else k_max
    if k_max > ladder.k_max:
        raise LadderTooShort(
            message="Ladder does not reach the requested index",
            context={'requested': k_max, 'available': ladder.k_max},
        )
    return [r for r in ladder.records if r.k <= k_max]


def gram_matrix(
    field: PlaneField,
    ladder: Ladder,
    k_max: Optional[int] = None,
    include_lambda_one: bool = True,
) -> np.ndarray:
    """Gram matrix of {1/‖1‖, h_k^i} in (k, branch) order."""
    records = [r for r in _records(ladder, k_max) if include_lambda_one or r.k != 1]
    basis = np.stack([r.h for r in records])
    return (basis * field.bp) @ basis.T * field.step


def synthesize(ladder: Ladder, coeffs: Dict[Key, float]) -> Tuple[np.ndarray, np.ndarray]:
    """Σ c·h_k^i and the matching h'/[q,q'] samples."""
    n = ladder.records[0].h.size
    h, hw = np.zeros(n), np.zeros(n)
    for (k, branch), c in coeffs.items():
        rec = ladder.get(k, branch)
        h = h + c * rec.h
        hw = hw + c * rec.hw
    return h, hw


# ============================================
# DECOMPOSITION
# ============================================

@dataclass
class SpectralDecomposition:
    """Coefficients of h on K ⊕ λ=1 ⊕ E0 ⊕ W0 through k_max"""
    c0: float
    lambda_one_coeffs: Dict[Key, float]
    even_coeffs: Dict[Key, float]
    odd_coeffs: Dict[Key, float]
    residual: float
    k_max: int
    norm: float = 0.0

    def coefficients(self) -> Dict[Key, float]:
        out = {(0, 1): self.c0}
        out.update(self.lambda_one_coeffs)
        out.update(self.even_coeffs)
        out.update(self.odd_coeffs)
        return dict(sorted(out.items()))

    @property
    def captured_energy(self) -> float:
        """Σ c² (never above ‖h‖²)."""
        return float(sum(c * c for c in self.coefficients().values()))

    def low_order(self, k0: int) -> Dict[Key, float]:
        return {key: c for key, c in self.coefficients().items() if key[0] < k0}

    def to_dict(self) -> Dict[str, Any]:
        def fmt(d):
            return [{'k': k, 'branch': b, 'coeff': c} for (k, b), c in sorted(d.items())]
        return {
            'c0': self.c0,
            'lambda_one': fmt(self.lambda_one_coeffs),
            'even': fmt(self.even_coeffs),
            'odd': fmt(self.odd_coeffs),
            'residual': self.residual,
            'k_max': self.k_max,
            'norm': self.norm,
        }


def decompose(
    field: PlaneField,
    h: np.ndarray,
    ladder: Ladder,
    k_max: Optional[int] = None,
    tol: Optional[float] = None,
) -> SpectralDecomposition:
    """
    Project h onto the constant direction and every eigenfunction through k_max.

    Raises:
        LadderTooShort: max-norm residual of the truncated expansion above tol
    """
    h = np.asarray(h, dtype=float)
    records = _records(ladder, k_max)
    k_max = ladder.k_max if k_max is None else k_max

    coeffs = {(r.k, r.branch): inner_product(field, h, r.h) for r in records}
    expansion = np.zeros_like(h)
    for r in records:
        expansion = expansion + coeffs[(r.k, r.branch)] * r.h
    residual = float(np.max(np.abs(h - expansion)))

    decomposition = SpectralDecomposition(
        c0=coeffs.pop((0, 1)),
        lambda_one_coeffs={key: c for key, c in coeffs.items() if key[0] == 1},
        even_coeffs={key: c for key, c in coeffs.items() if key[0] >= 2 and key[0] % 2 == 0},
        odd_coeffs={key: c for key, c in coeffs.items() if key[0] >= 3 and key[0] % 2 == 1},
        residual=residual,
        k_max=k_max,
        norm=weighted_norm(field, h),
    )
    if tol is not None and residual > tol:
        raise LadderTooShort(
            message="Truncated expansion does not reproduce the input",
            context={'residual': residual, 'tol': tol, 'k_max': k_max},
        )
    return decomposition


def project_c0(field: PlaneField, h: np.ndarray, ladder: Ladder) -> np.ndarray:
    """Remove the constant and λ = 1 components."""
    h = np.asarray(h, dtype=float)
    for r in ladder.records:
        if r.k <= 1:
            h = h - inner_product(field, h, r.h) * r.h
    return h


# ============================================
# INVOLUTES
# ============================================

@dataclass
class InvoluteReport:
    norms: List[float]
    ratios: List[float]
    limit_ratio: float
    monotone_from: Optional[int]     # first n after which ‖Sⁿh‖ only decreases
    geometric: bool
    dominant_k: Optional[int] = None
    eigen_correlation: Optional[float] = None
    iterate: np.ndarray = dataclass_field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'norms': self.norms,
            'ratios': self.ratios,
            'limit_ratio': self.limit_ratio,
            'monotone_from': self.monotone_from,
            'geometric': self.geometric,
            'dominant_k': self.dominant_k,
            'eigen_correlation': self.eigen_correlation,
        }


def involute_iteration(
    field: PlaneField,
    h: np.ndarray,
    n_iters: int = 12,
    ladder: Optional[Ladder] = None,
    tol: float = 1e-8,
) -> InvoluteReport:
    """
    Apply S repeatedly and track ‖Sⁿh‖ and ‖Sⁿ⁺¹h‖/‖Sⁿh‖.

    With a ladder, the normalized last iterate is projected onto the
    eigenspaces; the index carrying most of it and the fraction of its norm
    captured there are reported.

    Raises:
        NotZeroDualLength: h has nonzero dual length
        PreconditionViolated: h has a λ = 1 component (needs a ladder to detect)
    """
    h = np.asarray(h, dtype=float)
    if ladder is not None:
        scale = max(1.0, weighted_norm(field, h))
        for r in ladder.records:
            if r.k == 1 and abs(inner_product(field, h, r.h)) > tol * scale:
                raise PreconditionViolated(
                    message="Input has a λ = 1 component",
                    context={'branch': r.branch, 'coeff': inner_product(field, h, r.h)},
                )

    norms = [weighted_norm(field, h)]
    current = h
    for _ in range(n_iters):
        current = involute_operator(field, current, tol=tol)
        norms.append(weighted_norm(field, current))

    ratios = [b / a for a, b in zip(norms[:-1], norms[1:]) if a > 0]
    monotone_from = None
    for start in range(len(norms) - 1):
        if all(b < a for a, b in zip(norms[start:-1], norms[start + 1:])):
            monotone_from = start
            break
    tail = ratios[-3:]
    geometric = bool(tail) and max(tail) < 1.0 and (max(tail) - min(tail)) <= 0.05 * max(tail)

    report = InvoluteReport(
        norms=norms,
        ratios=ratios,
        limit_ratio=ratios[-1] if ratios else float('nan'),
        monotone_from=monotone_from,
        geometric=geometric,
        iterate=current,
    )

    if ladder is not None and norms[-1] > 0:
        unit = current / norms[-1]
        energy: Dict[int, float] = {}
        for r in ladder.records:
            if r.k >= 2:
                energy[r.k] = energy.get(r.k, 0.0) + inner_product(field, unit, r.h) ** 2
        if energy:
            k_dom = max(energy, key=energy.get)
            report.dominant_k = k_dom
            report.eigen_correlation = float(np.sqrt(energy[k_dom]))

    logger.info(f"🌀 Involute iteration: limit ratio {report.limit_ratio:.6g}, dominant k={report.dominant_k}")
    return report


@dataclass
class CompactnessReport:
    f_sup: float
    f_bound: float
    dg_sup: float
    dg_bound: float
    g_sup: float
    g_bound: float
    quadratic_form: float            # ⟨Sh, h⟩, positive on L0 \ {0}

    @property
    def passed(self) -> bool:
        return (self.f_sup <= self.f_bound and self.dg_sup <= self.dg_bound
                and self.g_sup <= self.g_bound and self.quadratic_form > 0.0)

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.__dict__)
        data['pass'] = self.passed
        return data


def compactness_bounds(field: PlaneField, h: np.ndarray, tol: float = 1e-8) -> CompactnessReport:
    """
    Sup-norm bounds of g = Sh and f = g'/[q,q'] in terms of ‖h‖₂:
    ‖f‖∞ <= 2‖bp‖₂‖h‖₂, ‖g'‖∞ <= ‖bq‖∞‖f‖∞, ‖g‖∞ <= 2‖bq‖₁‖f‖∞.
    """
    h = np.asarray(h, dtype=float)
    g, f = involute_operator(field, h, tol=tol, return_hw=True)

    def l2(v):
        return float(np.sqrt(trapezoid(v * v)))

    f_sup = float(np.max(np.abs(f)))
    return CompactnessReport(
        f_sup=f_sup,
        f_bound=2.0 * l2(field.bp) * l2(h),
        dg_sup=float(np.max(np.abs(f * field.bq))),
        dg_bound=float(np.max(np.abs(field.bq))) * f_sup,
        g_sup=float(np.max(np.abs(g))),
        g_bound=2.0 * trapezoid(np.abs(field.bq)) * f_sup,
        quadratic_form=inner_product(field, g, h),
    )


# ============================================
# ZERO COUNTS
# ============================================

@dataclass
class SturmHurwitzReport:
    k0: int
    zeros: int
    bound: int
    low_order_max: float

    @property
    def passed(self) -> bool:
        return self.zeros >= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {'k0': self.k0, 'zeros': self.zeros, 'bound': self.bound,
                'low_order_max': self.low_order_max, 'pass': self.passed}


def sturm_hurwitz_count(
    field: PlaneField,
    h: np.ndarray,
    k0: int,
    ladder: Ladder,
    tol: float = 1e-8,
) -> SturmHurwitzReport:
    """
    Sign changes of h on one turn; at least 2·k0 when every coefficient with
    k < k0 vanishes.

    Raises:
        PreconditionViolated: a coefficient below k0 exceeds tol (relative to ‖h‖ when > 1)
    """
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    decomposition = decompose(field, h, ladder, k_max=k0 - 1)
    low = decomposition.low_order(k0)
    low_max = max((abs(c) for c in low.values()), default=0.0)
    if low_max > tol * max(1.0, decomposition.norm):
        raise PreconditionViolated(
            message=f"Coefficients below k0={k0} do not vanish",
            context={'max_coeff': low_max, 'tol': tol},
        )
    zeros = count_sign_changes(np.asarray(h, dtype=float))
    report = SturmHurwitzReport(k0=k0, zeros=zeros, bound=2 * k0, low_order_max=low_max)
    logger.debug(f"Sturm-Hurwitz k0={k0}: {zeros} zeros")
    return report


def zero_count_monotone(
    field: PlaneField,
    h: np.ndarray,
    th: Optional[np.ndarray] = None,
    hw: Optional[np.ndarray] = None,
) -> Tuple[int, int, bool]:
    """
    (#zeros(h), #zeros(Th), #zeros(Th) >= #zeros(h)). ``th`` overrides the
    spectral T; ``hw`` is h'/[q,q'] and is required on L_p planes.
    """
    h = np.asarray(h, dtype=float)
    th = double_evolute_operator(field, h, hw=hw) if th is None else np.asarray(th, dtype=float)
    before, after = count_sign_changes(h), count_sign_changes(th)
    return before, after, after >= before


# ============================================
# RANDOM CURVES
# ============================================

@dataclass
class RandomCurve:
    """Support function from an eigen-expansion with exact r and r' samples"""
    h: np.ndarray = dataclass_field(repr=False)
    hw: np.ndarray = dataclass_field(repr=False)
    r: np.ndarray = dataclass_field(repr=False)
    dr: np.ndarray = dataclass_field(repr=False)
    coeffs: Dict[Key, float]
    shift: float


def _expansion_curve(
    field: PlaneField,
    ladder: Ladder,
    coeffs: Dict[Key, float],
) -> RandomCurve:
    h, hw = synthesize(ladder, coeffs)
    r, dr = np.zeros_like(h), np.zeros_like(h)
    for (k, branch), c in coeffs.items():
        rec = ladder.get(k, branch)
        r = r + c * (1.0 - rec.lam) * rec.h
        dr = dr + c * (1.0 - rec.lam) * rec.hw
    dr = dr * field.bq
    shift = 1.0 + max(0.0, -float(np.min(r)))
    return RandomCurve(h=h + shift, hw=hw, r=r + shift, dr=dr, coeffs=coeffs, shift=shift)


def _random_coeffs(rng: np.random.Generator, records: Sequence[EigenRecord]) -> Dict[Key, float]:
    return {(r.k, r.branch): float(rng.normal(0.0, r.k ** -2.0)) for r in records}


def random_support(
    field: PlaneField,
    ladder: Ladder,
    rng: np.random.Generator,
    k_max: Optional[int] = None,
) -> RandomCurve:
    """Random curve in H: k >= 2 eigen-expansion with variance k⁻⁴, shifted so r > 0."""
    records = [r for r in _records(ladder, k_max) if r.k >= 2]
    return _expansion_curve(field, ladder, _random_coeffs(rng, records))


def random_constant_width(
    field: PlaneField,
    ladder: Ladder,
    rng: np.random.Generator,
    k_max: Optional[int] = None,
) -> RandomCurve:
    """Random constant-width curve: constant plus odd k >= 3 eigenfunctions."""
    records = [r for r in _records(ladder, k_max) if r.k >= 3 and r.k % 2 == 1]
    if not records:
        raise LadderTooShort(
            message="Constant-width curves need odd indices k >= 3",
            context={'k_max': ladder.k_max},
        )
    return _expansion_curve(field, ladder, _random_coeffs(rng, records))


# ============================================
# VERTEX SUITES
# ============================================

@dataclass
class VertexTrial:
    index: int
    vertices: int
    convex: bool
    min_r: float
    width_deviation: Optional[float] = None
    evolute_defect: Optional[float] = None     # distance of the evolute support from W0 of the dual plane

    def to_dict(self) -> Dict[str, Any]:
        return {key: value for key, value in self.__dict__.items() if value is not None}


@dataclass
class VertexSuiteReport:
    name: str
    bound: int
    seed: int
    trials: List[VertexTrial]
    width_tol: float = 1e-7

    @property
    def min_count(self) -> int:
        return min((t.vertices for t in self.trials), default=0)

    @property
    def distribution(self) -> Dict[int, int]:
        return dict(sorted(Counter(t.vertices for t in self.trials).items()))

    @property
    def passed(self) -> bool:
        widths_ok = all(t.width_deviation is None or t.width_deviation < self.width_tol for t in self.trials)
        return bool(self.trials) and self.min_count >= self.bound and widths_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            'suite': self.name,
            'bound': self.bound,
            'seed': self.seed,
            'min_count': self.min_count,
            'distribution': {str(k): v for k, v in self.distribution.items()},
            'convex_trials': sum(t.convex for t in self.trials),
            'pass': self.passed,
            'trials': [t.to_dict() for t in self.trials],
        }


def _run_trials(trials: int, seed: int, workers: int, one) -> List[VertexTrial]:
    children = np.random.SeedSequence(seed).spawn(trials)
    jobs = [(i, np.random.default_rng(child)) for i, child in enumerate(children)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: one(*job), jobs))
    return [one(*job) for job in jobs]


def four_vertex_suite(
    field: PlaneField,
    ladder: Ladder,
    trials: int = 50,
    seed: int = 7,
    workers: int = 1,
) -> VertexSuiteReport:
    """Every random closed curve in H has at least four vertices."""
    def one(index, rng):
        curve = random_support(field, ladder, rng)
        return VertexTrial(
            index=index,
            vertices=count_sign_changes(curve.dr),
            convex=bool(np.min(curve.r) > 0),
            min_r=float(np.min(curve.r)),
        )

    report = VertexSuiteReport('four_vertex', 4, seed, _run_trials(trials, seed, workers, one))
    logger.info(f"{'✅' if report.passed else '❌'} Four-vertex suite: min {report.min_count} over {trials} trials")
    return report


def six_vertex_suite(
    field: PlaneField,
    ladder: Ladder,
    trials: int = 50,
    seed: int = 7,
    workers: int = 1,
) -> VertexSuiteReport:
    """
    Every random constant-width curve has at least six vertices. Each trial
    also records that the evolute support h'/[q,q'] lies in W0 of the dual
    plane (antiperiodic, zero dual length).
    """
    half = field.n // 2

    def one(index, rng):
        curve = random_constant_width(field, ladder, rng)
        width = width_function(field, curve.h)
        antiperiodic = float(np.max(np.abs(curve.hw + np.roll(curve.hw, -half))))
        dual = abs(dual_length(field.dual(), curve.hw))
        return VertexTrial(
            index=index,
            vertices=count_sign_changes(curve.dr),
            convex=bool(np.min(curve.r) > 0),
            min_r=float(np.min(curve.r)),
            width_deviation=float(np.max(np.abs(width - np.mean(width)))),
            evolute_defect=max(antiperiodic, dual),
        )

    report = VertexSuiteReport('six_vertex', 6, seed, _run_trials(trials, seed, workers, one))
    logger.info(f"{'✅' if report.passed else '❌'} Six-vertex suite: min {report.min_count} over {trials} trials")
    return report
