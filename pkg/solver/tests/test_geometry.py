"""Reconstruction, evolutes, involutes and the Euclidean oracles."""

import numpy as np
import pytest
from scipy.linalg import orthogonal_procrustes
from scipy.spatial import cKDTree

from core.analysis import synthesize
from core.error_handler import NotZeroDualLength, SingularSupport
from core.geometry import (
    closure_gap,
    curve_from_eigen,
    curve_from_radius,
    curve_from_support,
    diameter,
    double_evolute,
    double_evolute_operator,
    dual_length,
    euclidean_cycloid,
    evolute,
    involute,
    involute_operator,
    orientation_sign,
    rolling_cycloid,
    width_function,
)
from core.plane import cross
from core.spectrum import CycloidKind, find_n_turn, lambda_one_eigenspace


def _tau(field):
    return field.grid - field.origin


def _in_l0(field, h):
    """Remove the constant component so that ∫ h·[p,p'] = 0."""
    return h - dual_length(field, h) / dual_length(field, np.ones(field.n))


@pytest.fixture(scope="module")
def lp3_three_turn(lp3_field):
    return find_n_turn(lp3_field, 3, hypo_k_max=3)


# ── Reconstruction ───────────────────────────────────────────────────────────

def test_unit_circle(euclidean_field):
    curve = curve_from_support(euclidean_field, np.ones(euclidean_field.n))
    assert np.allclose(np.linalg.norm(curve.points, axis=1), 1.0, atol=1e-12)
    assert np.allclose(curve.r, 1.0, atol=1e-10)
    assert curve.cusps == []
    assert closure_gap(curve) < 1e-12
    assert diameter(curve.points) == pytest.approx(2.0, abs=1e-12)


def test_support_reconstruction_identities(fourier_field):
    t = _tau(fourier_field)
    h = 1.0 + 0.05 * np.cos(2 * t) + 0.02 * np.sin(3 * t)
    curve = curve_from_support(fourier_field, h)
    # h = [γ, q] and h'/[q,q'] = [p, γ]
    assert np.max(np.abs(cross(curve.points, fourier_field.q) - h)) < 1e-12
    assert np.max(np.abs(cross(fourier_field.p, curve.points) - curve.hw)) < 1e-12
    # γ' = r·p'
    velocity = np.stack([np.gradient(curve.points[:, i], fourier_field.step) for i in range(2)], axis=1)
    inner = slice(5, -5)
    assert np.max(np.abs(velocity[inner] - curve.velocity()[inner])) < 1e-4


def test_radius_round_trip(euclidean_field, euclidean_ladder):
    curve = curve_from_eigen(euclidean_field, euclidean_ladder.get(3, 1))
    rebuilt = curve_from_radius(euclidean_field, curve.r, gamma0=curve.points[0])
    assert np.max(np.abs(rebuilt.points - curve.points)) < 1e-9
    assert np.max(np.abs(rebuilt.h - curve.h)) < 1e-9


def test_partial_turns_rejected(euclidean_field):
    with pytest.raises(ValueError):
        curve_from_support(euclidean_field, np.ones(euclidean_field.n + 1))


def test_singular_support(fourier_field):
    hw = np.zeros(fourier_field.n)
    hw[10] = np.nan
    with pytest.raises(SingularSupport) as info:
        curve_from_support(fourier_field, np.ones(fourier_field.n), hw=hw)
    assert info.value.exit_code == 4
    assert info.value.context['first'] == 10


def test_singular_nodes_tolerated(lp3_field):
    hw = np.zeros(lp3_field.n)
    hw[list(lp3_field.singular_nodes)] = np.inf
    curve = curve_from_support(lp3_field, np.ones(lp3_field.n), hw=hw)
    assert np.all(np.isfinite(curve.points))


def test_support_only_rejected_on_lp(lp3_field, lp3_ladder):
    h = lp3_ladder.get(5, 1).h
    with pytest.raises(SingularSupport):
        curve_from_support(lp3_field, h)
    with pytest.raises(SingularSupport):
        double_evolute_operator(lp3_field, h)


def test_lp_support_curve_radius(lp3_field, lp3_ladder):
    record = lp3_ladder.get(5, 1)
    curve = curve_from_support(lp3_field, record.h, hw=record.hw)
    scale = record.lam * np.max(np.abs(record.h))
    assert np.max(np.abs(curve.r - (1.0 - record.lam) * record.h)) < 1e-6 * scale
    assert len(curve.cusps) == 10


# ── Eigen-cycloids ───────────────────────────────────────────────────────────

@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_cusps_and_closure(any_plane, k):
    field, ladder = any_plane
    for branch in (1, 2):
        curve = curve_from_eigen(field, ladder.get(k, branch))
        assert len(curve.cusps) == 2 * k
        assert closure_gap(curve) < 1e-6


def test_astroid(euclidean_field, euclidean_ladder):
    curve = curve_from_eigen(euclidean_field, euclidean_ladder.get(2, 1))
    R = 2.0 * np.max(np.abs(curve.h))

    i = int(np.argmin(np.abs(curve.r)))
    angle = np.arctan2(curve.points[i, 1], curve.points[i, 0])
    assert np.linalg.norm(curve.points[i]) == pytest.approx(R, rel=1e-4)

    theta = np.linspace(0.0, 2.0 * np.pi, 40001)
    oracle = rolling_cycloid(R, R / 4.0, CycloidKind.HYPOCYCLOID, theta)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    distance, _ = cKDTree(oracle @ rot.T).query(curve.points)
    assert np.max(distance) < 1e-3 * R


def test_classical_cycloid(euclidean_field):
    # r = 4R·sin t is a λ = 1 solution; its front is the cycloid at s = π - t
    R = 0.7
    t = euclidean_field.grid
    curve = curve_from_radius(euclidean_field, 4.0 * R * np.sin(t))
    oracle = euclidean_cycloid(R, 0.0, np.pi - t)

    ours = curve.points - curve.points.mean(axis=0)
    ref = oracle - oracle.mean(axis=0)
    rotation, _ = orthogonal_procrustes(ours, ref)
    assert np.max(np.abs(ours @ rotation - ref)) < 1e-6 * R
    assert np.linalg.norm(curve.displacement) == pytest.approx(4.0 * np.pi * R, rel=1e-10)
    assert closure_gap(curve) > 0.5


def test_orientation_hypocycloid(lp3_field, lp3_ladder):
    record = lp3_ladder.get(3)
    report = orientation_sign(lp3_field, curve_from_eigen(lp3_field, record), record.lam)
    assert report.expected_sign == -1
    assert report.consistent
    assert report.identity_residual < 1e-8
    assert report.checked_nodes > lp3_field.n // 2


def test_orientation_epicycloid(euclidean_field):
    record = find_n_turn(euclidean_field, 3, hypo_k_max=3)[0]
    curve = curve_from_eigen(euclidean_field, record)
    report = orientation_sign(euclidean_field, curve, record.lam)
    assert report.expected_sign == 1 and report.consistent


def test_lp3_three_turn_closure(lp3_field, lp3_three_turn):
    for record in lp3_three_turn:
        curve = curve_from_eigen(lp3_field, record)
        assert curve.turns == 3
        assert len(curve.cusps) == 2 * record.k
        assert closure_gap(curve, 3) < 1e-6
        assert closure_gap(curve, 1) > 1e-3
        assert closure_gap(curve, 2) > 1e-3


def test_closure_gap_span(euclidean_field, euclidean_ladder):
    curve = curve_from_eigen(euclidean_field, euclidean_ladder.get(2))
    with pytest.raises(ValueError):
        closure_gap(curve, 2)


def test_lambda_one_cycloids_stay_open(any_plane):
    field, _ = any_plane
    space = lambda_one_eigenspace(field)
    for r in space.r:
        assert closure_gap(curve_from_radius(field, r)) >= 1e-3


# ── Evolutes ─────────────────────────────────────────────────────────────────

def test_evolute_lives_in_dual(fourier_field, fourier_ladder):
    curve = curve_from_eigen(fourier_field, fourier_ladder.get(2))
    ev = evolute(fourier_field, curve)
    assert ev.is_dual and ev.field is fourier_field.dual()
    assert ev.lam == curve.lam
    assert np.max(np.abs(ev.support_against_p + curve.hw)) < 1e-12
    assert len(ev.cusps) == len(curve.vertices)


def test_evolute_needs_matching_plane(euclidean_field, fourier_field):
    curve = curve_from_support(euclidean_field, np.ones(euclidean_field.n))
    with pytest.raises(ValueError):
        evolute(fourier_field, curve)


def test_double_evolute_homothety(any_plane):
    field, ladder = any_plane
    record = ladder.get(3, 2)
    curve = curve_from_eigen(field, record)
    twice = double_evolute(field, curve)
    scale = np.max(np.abs(curve.points))
    assert twice.field is field
    assert np.max(np.abs(twice.h - record.lam * curve.h)) < 1e-10 * record.lam
    assert np.max(np.abs(twice.points - record.lam * curve.points)) < 1e-10 * record.lam * scale


def test_double_evolute_support_is_th(fourier_field):
    t = _tau(fourier_field)
    h = 1.0 + 0.05 * np.cos(2 * t) + 0.01 * np.cos(6 * t)
    curve = curve_from_support(fourier_field, h)
    twice = double_evolute(fourier_field, curve)
    assert np.max(np.abs(twice.h - double_evolute_operator(fourier_field, h))) < 1e-8


@pytest.mark.parametrize("k", [2, 3, 5])
def test_euclidean_operator(euclidean_field, k):
    h = np.cos(k * _tau(euclidean_field))
    assert np.max(np.abs(double_evolute_operator(euclidean_field, h) - k * k * h)) < 1e-8 * k * k


def test_operator_on_eigenfunction(fourier_field, fourier_ladder):
    record = fourier_ladder.get(4, 2)
    th = double_evolute_operator(fourier_field, record.h)
    assert np.max(np.abs(th - record.lam * record.h)) < 1e-6 * record.lam


@pytest.mark.parametrize("branch", [1, 2])
def test_lp3_operator_on_double_eigenvalue(lp3_field, lp3_ladder, branch):
    record = lp3_ladder.get(5, branch)
    th = double_evolute_operator(lp3_field, record.h, hw=record.hw)
    assert np.max(np.abs(th - record.lam * record.h)) < 1e-6 * record.lam * np.max(np.abs(record.h))


# ── Involutes ────────────────────────────────────────────────────────────────

def test_involute_of_cosine(euclidean_field):
    h = np.cos(2 * _tau(euclidean_field))
    assert np.max(np.abs(involute_operator(euclidean_field, h) - h / 4.0)) < 1e-12


def test_involute_inverts_operator(fourier_field):
    t = _tau(fourier_field)
    h = _in_l0(fourier_field, np.cos(2 * t) + 0.3 * np.sin(5 * t) + 0.1 * np.cos(t))
    g, f = involute_operator(fourier_field, h, return_hw=True)
    assert np.max(np.abs(double_evolute_operator(fourier_field, g, hw=f) - h)) < 1e-8
    assert dual_length(fourier_field, g) == pytest.approx(0.0, abs=1e-12)


def test_involute_curve(euclidean_field):
    t = _tau(euclidean_field)
    curve = curve_from_support(euclidean_field, np.cos(2 * t) + 0.2 * np.cos(4 * t))
    inv = involute(euclidean_field, curve)
    assert np.max(np.abs(double_evolute(euclidean_field, inv).h - curve.h)) < 1e-8


def test_lp3_involute_on_eigenfunction(lp3_field, lp3_ladder):
    record = lp3_ladder.get(5, 1)
    g = involute_operator(lp3_field, record.h)
    assert np.max(np.abs(g - record.h / record.lam)) < 1e-8 * np.max(np.abs(record.h))


def test_operator_inverts_involute(any_plane):
    field, ladder = any_plane
    rng = np.random.default_rng(11)
    keys = [(rec.k, rec.branch) for rec in ladder if rec.k >= 2]
    for _ in range(20):
        h, _ = synthesize(ladder, {key: rng.normal() / key[0] ** 2 for key in keys})
        h = _in_l0(field, h)
        g, f = involute_operator(field, h, return_hw=True)
        th = double_evolute_operator(field, g, hw=f)
        assert np.max(np.abs(th - h)) < 1e-6 * np.max(np.abs(h))


def test_involute_needs_zero_dual_length(fourier_field):
    with pytest.raises(NotZeroDualLength) as info:
        involute_operator(fourier_field, np.ones(fourier_field.n))
    assert info.value.exit_code == 4


# ── Vertices ─────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("k, count", [(2, 4), (3, 6)])
def test_perturbed_circle_vertices(euclidean_field, k, count):
    # r = 1 - 0.05(k² - 1)cos kθ, so r' has 2k simple zeros
    h = 1.0 + 0.05 * np.cos(k * _tau(euclidean_field))
    curve = curve_from_support(euclidean_field, h)
    assert len(curve.vertices) == count
    assert np.min(curve.r) > 0


# ── Width ────────────────────────────────────────────────────────────────────

def test_constant_width(euclidean_field):
    h = 1.0 + 0.1 * np.cos(3 * _tau(euclidean_field))
    assert np.allclose(width_function(euclidean_field, h), 2.0, atol=1e-12)


def test_odd_fronts_have_zero_width(ellipse_field, ellipse_ladder):
    width = width_function(ellipse_field, ellipse_ladder.get(3).h)
    assert np.max(np.abs(width)) < 1e-12


def test_summary(euclidean_field, euclidean_ladder):
    summary = curve_from_eigen(euclidean_field, euclidean_ladder.get(4)).summary()
    assert summary['cusps'] == 8
    assert summary['lambda'] == pytest.approx(16.0, abs=1e-6)
    assert not summary['dual']
    assert summary['closure_gap'] < 1e-8
    assert curve_from_eigen(euclidean_field, euclidean_ladder.get(4)).min_cusp_acceleration() > 0.1
