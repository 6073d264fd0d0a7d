#!/usr/bin/env python3
"""
Cycloid solver command line.

    python tools/cycloid_cli.py plane    --model lp:3 --n 2048
    python tools/cycloid_cli.py spectrum --model lp:3 --kmax 6 --probe 19.79
    python tools/cycloid_cli.py cycloid  --model lp:3 --k 5 --svg k5.svg --csv k5.csv
    python tools/cycloid_cli.py cycloid  --model lp:3 --lambda1 --v 1,0 --svg open.svg
    python tools/cycloid_cli.py verify   --model euclidean --suite all

Reports are JSON (stdout unless --out is given). Exit codes: 0 success,
1 invariant failure, 2 invalid model, 3 search failure, 4 bad request.
"""

import os
import sys
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.error_handler import (
    BadRequest,
    CycloidError,
    InvariantFailure,
    log_error,
    safe_execute,
    setup_logging,
)
from core.settings import SolverSettings, load_settings
from core.plane import PlaneField, PlaneFamily, build_plane, parse_model_shorthand, validate_plane
from core.sturm import classify, expanding_direction, growth_factor, monodromy
from core.spectrum import (
    Ladder,
    find_ladder,
    find_n_turn,
    gap_samples,
    lambda_one_eigenspace,
    ladder_to_json,
    symmetry_doubling_check,
)
from core.geometry import (
    closure_gap,
    curve_from_eigen,
    curve_from_radius,
    double_evolute,
    double_evolute_operator,
)
from core.analysis import (
    four_vertex_suite,
    gram_matrix,
    involute_iteration,
    six_vertex_suite,
    sturm_hurwitz_count,
    synthesize,
)
from tools.exporters import dumps_report, write_curve_csv, write_curve_svg, write_json

logger = logging.getLogger(__name__)

SUITES = ('plane', 'spectrum', 'geometry', 'analysis')


# ============================================
# RUN CONFIG
# ============================================

@dataclass
class RunConfig:
    """Resolved command configuration (settings with CLI overrides applied)"""
    model: Any
    n: int
    tol: float
    k_max: int
    seed: int
    settings: SolverSettings
    out: Optional[str] = None
    svg: Optional[str] = None
    csv: Optional[str] = None

    @classmethod
    def from_args(cls, args, settings: SolverSettings) -> "RunConfig":
        for path in (args.out, getattr(args, 'svg', None), getattr(args, 'csv', None)):
            _check_writable(path)
        return cls(
            model=parse_model_shorthand(args.model),
            n=settings.grid_n,
            tol=settings.tol,
            k_max=settings.k_max,
            seed=settings.seed,
            settings=settings,
            out=args.out,
            svg=getattr(args, 'svg', None),
            csv=getattr(args, 'csv', None),
        )

    def build(self) -> PlaneField:
        return build_plane(self.model, self.n)

    def ladder(self, field: PlaneField, k_max: Optional[int] = None, cap: Optional[float] = None) -> Ladder:
        return find_ladder(
            field,
            k_max=self.k_max if k_max is None else k_max,
            tol=self.tol,
            parabolic_tol=self.settings.parabolic_tol,
            ode_tol=self.settings.ode_tol,
            cap=cap,
            workers=self.settings.workers,
        )


def _check_writable(path: Optional[str]):
    if not path:
        return
    directory = os.path.dirname(os.path.abspath(path)) or '.'
    probe = directory
    while not os.path.exists(probe):
        probe = os.path.dirname(probe)
    if not os.access(probe, os.W_OK):
        raise BadRequest(
            message="Output path is not writable",
            context={'path': path},
        )


def _parse_vector(text: str) -> np.ndarray:
    try:
        x, y = (float(part) for part in text.split(','))
    except ValueError as e:
        raise BadRequest(
            message="--v expects two comma-separated numbers",
            context={'value': text},
            original_error=e,
        ) from e
    v = np.array([x, y])
    if not np.any(v):
        raise BadRequest(message="--v must be a nonzero vector", context={'value': text})
    return v


def _emit(config: RunConfig, report: Dict[str, Any]):
    if config.out:
        write_json(config.out, report)
    else:
        sys.stdout.write(dumps_report(report))


# ============================================
# COMMANDS
# ============================================

@safe_execute
def cmd_plane(config: RunConfig) -> int:
    """Build and validate the plane; exit 0 iff every check passes."""
    field = config.build()
    report = validate_plane(field)
    _emit(config, report.to_dict())
    print(f"{'✅' if report.passed else '❌'} Plane {field.family.value}: "
          f"duality residual {report.residual('duality'):.2e}", file=sys.stderr)
    return 0 if report.passed else 1


def _probe_report(field: PlaneField, lam: float, config: RunConfig) -> Dict[str, Any]:
    m = monodromy(field, lam, config.settings.ode_tol)
    cls = classify(m, config.settings.parabolic_tol)
    if cls.tag.is_hyperbolic:
        label = "hyperbolic/unbounded"
    elif cls.tag.is_parabolic:
        label = "parabolic"
    else:
        label = "elliptic/bounded"
    data = {
        'lambda': lam,
        'classification': label,
        'tag': cls.tag.value,
        'trace': m.trace,
        'det': m.det,
        'growth_factor': growth_factor(m),
    }
    direction = expanding_direction(m)
    if direction is not None:
        data['expanding_direction'] = direction.tolist()
    return data


@safe_execute
def cmd_spectrum(config: RunConfig, probes: List[float], per_gap: int = 3,
                 lambda_cap: Optional[float] = None) -> int:
    """Ladder through k_max with double flags, gap classification and probes."""
    field = config.build()
    ladder = config.ladder(field, cap=lambda_cap)
    extra = {
        'rotation_roots': ladder.rotation_roots,
        'gaps': [s.to_dict() for s in gap_samples(field, ladder, per_gap,
                                                   config.settings.parabolic_tol,
                                                   config.settings.ode_tol)],
        'doubling': symmetry_doubling_check(field, ladder, ode_tol=config.settings.ode_tol).to_dict(),
        'probes': [_probe_report(field, lam, config) for lam in probes],
    }
    _emit(config, ladder_to_json(field, ladder, extra))
    return 0


def _write_curve(config: RunConfig, curve):
    if config.svg:
        write_curve_svg(config.svg, curve)
    if config.csv:
        write_curve_csv(config.csv, curve)


@safe_execute
def cmd_cycloid(
    config: RunConfig,
    k: Optional[int] = None,
    branch: int = 1,
    lam: Optional[float] = None,
    lambda1: bool = False,
    v: str = "1,0",
    turns: int = 1,
) -> int:
    """Render an eigen-cycloid, an N-turn cycloid or the open λ = 1 cycloid."""
    field = config.build()

    if lambda1:
        direction = _parse_vector(v)
        space = lambda_one_eigenspace(field)
        r = direction[0] * space.r[0] + direction[1] * space.r[1]
        curve = curve_from_radius(field, r)
        summary = {'lambda': 1.0, 'open': True, 'v': direction.tolist(), **curve.summary()}
    elif turns > 1:
        if k is None:
            raise BadRequest(message="--turns needs --k", context={'turns': turns})
        records = {rec.k: rec for rec in find_n_turn(field, turns, tol=config.tol,
                                                      hypo_k_max=max(2 * turns + 1, k),
                                                      ode_tol=config.settings.ode_tol)}
        if k not in records:
            raise BadRequest(
                message=f"No {turns}-turn cycloid with index k={k}",
                context={'available': sorted(records)},
                suggestions=["Indices that are multiples of N are one-turn cycloids; use --turns 1"],
            )
        record = records[k]
        curve = curve_from_eigen(field, record)
        summary = {**record.to_dict(), **curve.summary()}
    else:
        if lam is not None:
            ladder = config.ladder(field)
            matches = [rec for rec in ladder if rec.k >= 2
                       and abs(rec.lam - lam) <= max(config.tol, 1e-6) * max(1.0, lam)]
            if not matches:
                raise BadRequest(
                    message="λ is not an eigenvalue of the ladder",
                    context={'lambda': lam, 'k_max': ladder.k_max},
                    suggestions=["Run the spectrum command to list eigenvalues"],
                )
            record = matches[0]
        else:
            if k is None or k < 2:
                raise BadRequest(
                    message="Closed cycloids need --k >= 2 (or --lambda)",
                    context={'k': k},
                    suggestions=["Use --lambda1 for the open λ = 1 cycloid"],
                )
            if branch not in (1, 2):
                raise BadRequest(message="--branch must be 1 or 2", context={'branch': branch})
            ladder = config.ladder(field, k_max=max(k, 2))
            record = ladder.get(k, branch)
        curve = curve_from_eigen(field, record)
        summary = {**record.to_dict(), **curve.summary()}

    _write_curve(config, curve)
    summary['cusp_parameters'] = curve.cusps
    _emit(config, summary)
    print(f"✅ Cycloid: {len(curve.cusps)} cusps, closure gap {closure_gap(curve):.2e}", file=sys.stderr)
    return 0


# ============================================
# VERIFY SUITES
# ============================================

Check = Dict[str, Any]


def _check(name: str, passed: bool, **values) -> Check:
    return {'name': name, 'pass': bool(passed), **values}


def verify_plane(field: PlaneField, config: RunConfig, ladder_fn) -> List[Check]:
    report = validate_plane(field)
    return [_check(name, c.passed, residual=c.residual) for name, c in report.checks.items()]


def verify_spectrum(field: PlaneField, config: RunConfig, ladder_fn) -> List[Check]:
    ladder = ladder_fn()
    checks = []

    rng = np.random.default_rng(config.seed)
    dets = [abs(monodromy(field, lam, config.settings.ode_tol).det - 1.0) for lam in rng.uniform(0.0, 100.0, 20)]
    checks.append(_check('determinant', max(dets) < 1e-9, max_defect=max(dets)))

    ok = True
    for k in range(2, ladder.k_max):
        ok &= (ladder.eigenvalue(k - 1, 2) < ladder.eigenvalue(k, 1)
               <= ladder.eigenvalue(k, 2) < ladder.eigenvalue(k + 1, 1))
    checks.append(_check('interlacing', ok, k_max=ladder.k_max))

    samples = [s for s in gap_samples(field, ladder, 3, config.settings.parabolic_tol, config.settings.ode_tol)
               if s.zone == 'elliptic' and s.k >= 2]
    checks.append(_check('gap_classification', all(s.tag.value == 'EllipticM0' for s in samples),
                         samples=len(samples)))

    doubling = symmetry_doubling_check(field, ladder, ode_tol=config.settings.ode_tol)
    checks.append(_check('symmetry_doubling', doubling.passed, applicable=doubling.applicable))

    if field.family in (PlaneFamily.EUCLIDEAN, PlaneFamily.ELLIPSE):
        err = max(abs(rec.lam - rec.k ** 2) for rec in ladder)
        checks.append(_check('squares', err < 1e-6, max_error=err))
    return checks


def verify_geometry(field: PlaneField, config: RunConfig, ladder_fn) -> List[Check]:
    ladder = ladder_fn()
    checks = []
    for rec in ladder:
        if not 2 <= rec.k <= 6:
            continue
        curve = curve_from_eigen(field, rec)
        gap = closure_gap(curve)
        twice = double_evolute(field, curve)
        homothety = float(np.max(np.abs(twice.h - rec.lam * rec.h)) / (rec.lam * np.max(np.abs(rec.h))))
        checks.append(_check(f'cycloid_k{rec.k}_{rec.branch}',
                             len(curve.cusps) == 2 * rec.k and gap < 1e-6 and homothety < 1e-6,
                             cusps=len(curve.cusps), closure_gap=gap, homothety=homothety))
        th = double_evolute_operator(field, rec.h, hw=rec.hw)
        defect = float(np.max(np.abs(th - rec.lam * rec.h)) / (rec.lam * np.max(np.abs(rec.h))))
        checks.append(_check(f'operator_k{rec.k}_{rec.branch}', defect < 1e-6, residual=defect))

    space = lambda_one_eigenspace(field)
    checks.append(_check('lambda_one_residuals', space.ode_residual < 1e-7 and space.antiperiodic_residual < 1e-8,
                         ode=space.ode_residual, antiperiodic=space.antiperiodic_residual))
    for i, r in enumerate(space.r):
        gap = closure_gap(curve_from_radius(field, r))
        checks.append(_check(f'lambda_one_open_{i + 1}', gap >= 1e-3, closure_gap=gap))
    return checks


def verify_analysis(field: PlaneField, config: RunConfig, ladder_fn, trials: int = 50) -> List[Check]:
    ladder = ladder_fn()
    checks = []
    gram = gram_matrix(field, ladder)
    deviation = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    checks.append(_check('orthonormal_basis', deviation < 1e-6, deviation=deviation))

    rng = np.random.default_rng(config.seed)
    lam2 = ladder.eigenvalue(2, 1)
    worst = 0.0
    for _ in range(10):
        coeffs = {(r.k, r.branch): float(rng.normal()) for r in ladder if r.k >= 2}
        h, _ = synthesize(ladder, coeffs)
        report = involute_iteration(field, h, 12, ladder)
        worst = max(worst, abs(report.limit_ratio * lam2 - 1.0))
    checks.append(_check('involute_ratio', worst < 0.01, worst_relative_error=worst))

    failures = 0
    for k0 in (3, 4, 5):
        if k0 > ladder.k_max:
            continue
        for _ in range(10):
            coeffs = {(r.k, r.branch): float(rng.normal()) for r in ladder if r.k >= k0}
            h, _ = synthesize(ladder, coeffs)
            failures += not sturm_hurwitz_count(field, h, k0, ladder).passed
    checks.append(_check('sturm_hurwitz', failures == 0, failures=failures))

    workers = config.settings.workers
    four = four_vertex_suite(field, ladder, trials, config.seed, workers)
    six = six_vertex_suite(field, ladder, trials, config.seed, workers)
    checks.append(_check('four_vertex', four.passed, min_count=four.min_count, distribution=four.distribution))
    checks.append(_check('six_vertex', six.passed, min_count=six.min_count, distribution=six.distribution))
    return checks


@safe_execute
def cmd_verify(config: RunConfig, suite: str = 'all', trials: int = 50) -> int:
    """Run the invariant suites; raises InvariantFailure after writing the report if any check fails."""
    field = config.build()
    cache: Dict[str, Ladder] = {}

    def ladder_fn():
        if 'ladder' not in cache:
            cache['ladder'] = config.ladder(field, k_max=max(config.k_max, 7))
        return cache['ladder']

    runners: Dict[str, Callable] = {
        'plane': verify_plane,
        'spectrum': verify_spectrum,
        'geometry': verify_geometry,
        'analysis': lambda f, c, l: verify_analysis(f, c, l, trials),
    }
    selected = SUITES if suite == 'all' else (suite,)
    results = {name: runners[name](field, config, ladder_fn) for name in selected}
    failed = [f"{name}.{c['name']}" for name, checks in results.items() for c in checks if not c['pass']]

    _emit(config, {'suite': suite, 'seed': config.seed, 'pass': not failed, 'results': results})
    for name, checks in results.items():
        ok = all(c['pass'] for c in checks)
        print(f"{'✅' if ok else '❌'} {name}: {sum(c['pass'] for c in checks)}/{len(checks)} checks", file=sys.stderr)

    if failed:
        raise InvariantFailure(
            message=f"{len(failed)} invariant check(s) failed",
            context={'failed': failed},
        )
    return 0


# ============================================
# CLI INTERFACE
# ============================================

def build_parser():
    import argparse

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--model', default='euclidean',
                        help="euclidean | lp:<p> | ellipse:<a>,<b> | fourier:a0=<v>[,k<k>a=<v>][,k<k>b=<v>] | JSON")
    common.add_argument('--n', type=int, help='Grid size, power of two >= 64 (default: CYCLOID_GRID_N)')
    common.add_argument('--tol', type=float, help='Eigenvalue tolerance (default: CYCLOID_TOL)')
    common.add_argument('--kmax', type=int, help='Ladder depth (default: CYCLOID_KMAX)')
    common.add_argument('--seed', type=int, help='Seed of the random suites (default: CYCLOID_SEED)')
    common.add_argument('--workers', type=int, help='Threads for k / trial fan-out')
    common.add_argument('--out', help='Write the JSON report here instead of stdout')
    common.add_argument('--env-file', help='Load settings from this .env file')
    common.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')
    common.add_argument('--log-json', action='store_true', default=None, help='JSON log lines')

    parser = argparse.ArgumentParser(
        description="Cycloids of normed planes: spectra, curves and invariant suites"
    )
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('plane', parents=[common], help='Build and validate a plane')

    spectrum = sub.add_parser('spectrum', parents=[common], help='Eigenvalue ladder')
    spectrum.add_argument('--probe', type=float, action='append', default=[],
                          help='Classify the monodromy at this λ (repeatable)')
    spectrum.add_argument('--per-gap', type=int, default=3, help='Classified samples per gap')
    spectrum.add_argument('--lambda-cap', type=float, help='Override the λ search ceiling')

    cycloid = sub.add_parser('cycloid', parents=[common], help='Render a cycloid')
    cycloid.add_argument('--k', type=int, help='Ladder index (or N-turn index with --turns)')
    cycloid.add_argument('--branch', type=int, default=1, help='1 or 2')
    cycloid.add_argument('--lambda', dest='lam', type=float, help='Select by eigenvalue instead of index')
    cycloid.add_argument('--lambda1', action='store_true', help='Open λ = 1 cycloid')
    cycloid.add_argument('--v', default='1,0', help='λ = 1 direction x,y (r = [v, q])')
    cycloid.add_argument('--turns', type=int, default=1, help='N for N-turn cycloids')
    cycloid.add_argument('--svg', help='SVG output path')
    cycloid.add_argument('--csv', help='CSV output path')

    verify = sub.add_parser('verify', parents=[common], help='Run invariant suites')
    verify.add_argument('--suite', choices=('all',) + SUITES, default='all')
    verify.add_argument('--trials', type=int, default=50, help='Trials per vertex suite')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line interface for the cycloid solver"""
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings(
            env_file=args.env_file,
            grid_n=args.n,
            tol=args.tol,
            k_max=args.kmax,
            seed=args.seed,
            workers=args.workers,
            log_level=args.log_level,
            log_json=args.log_json,
        )
        setup_logging(settings.log_level, settings.log_file, settings.log_json)
        config = RunConfig.from_args(args, settings)

        if args.command == 'plane':
            return cmd_plane(config)
        if args.command == 'spectrum':
            return cmd_spectrum(config, args.probe, args.per_gap, args.lambda_cap)
        if args.command == 'cycloid':
            return cmd_cycloid(config, args.k, args.branch, args.lam, args.lambda1, args.v, args.turns)
        return cmd_verify(config, args.suite, args.trials)

    except CycloidError as e:
        log_error(logger, e)
        print(e, file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
