"""Eigenvalue ladders, N-turn cycloids, doubling and gap classification."""

import json

import numpy as np
import pytest

from core.error_handler import BracketFailure
from core.spectrum import (
    CycloidKind,
    PeriodicityType,
    find_ladder,
    find_n_turn,
    gap_samples,
    lambda_one_eigenspace,
    ladder_to_json,
    rotation_root,
    symmetry_doubling_check,
)
from core.spectral import trapezoid
from core.sturm import MonodromyTag, lp_odd_eigenvalue

LP3_LADDER = {
    (2, 1): 3.0, (2, 2): 6.0,
    (3, 1): 10.0, (3, 2): 10.0,
    (4, 1): 15.0, (4, 2): 21.0,
    (5, 1): 28.0, (5, 2): 28.0,
    (6, 1): 36.0, (6, 2): 45.0,
    (7, 1): 55.0, (7, 2): 55.0,
}

LP4_LADDER = {
    (2, 1): 8.0 / 3.0, (2, 2): 8.0,
    (3, 1): 35.0 / 3.0, (3, 2): 35.0 / 3.0,
    (4, 1): 16.0, (4, 2): 80.0 / 3.0,
    (5, 1): 33.0, (5, 2): 33.0,
}


# ── Ladders ──────────────────────────────────────────────────────────────────

def test_euclidean_squares(euclidean_ladder):
    for k in range(2, 9):
        for branch in (1, 2):
            assert euclidean_ladder.eigenvalue(k, branch) == pytest.approx(k * k, abs=1e-6)


def test_ellipse_squares(ellipse_ladder):
    for k in range(2, 8):
        assert ellipse_ladder.eigenvalue(k, 1) == pytest.approx(k * k, abs=1e-6)
        assert ellipse_ladder.eigenvalue(k, 2) == pytest.approx(k * k, abs=1e-6)


def test_lp3_ladder(lp3_ladder):
    for key, lam in LP3_LADDER.items():
        assert lp3_ladder.eigenvalue(*key) == pytest.approx(lam, abs=1e-5), key


def test_lp3_fifth_pair_is_double(lp3_ladder):
    record = lp3_ladder.get(5)
    assert record.double_flag and lp3_ladder.get(5, 2).double_flag
    assert record.lam == pytest.approx(lp_odd_eigenvalue(3.0, 2), abs=1e-5)


def test_lp3_even_pairs_split(lp3_ladder):
    for k in (2, 4, 6):
        assert not lp3_ladder.get(k).double_flag


def test_lp4_ladder(lp4_ladder):
    for key, lam in LP4_LADDER.items():
        assert lp4_ladder.eigenvalue(*key) == pytest.approx(lam, abs=1e-5), key


def test_fixed_low_end(any_plane):
    _, ladder = any_plane
    assert ladder.get(0).lam == 0.0
    assert ladder.get(1, 1).lam == ladder.get(1, 2).lam == 1.0
    assert ladder.get(1).double_flag


def test_interlacing(any_plane):
    _, ladder = any_plane
    for k in range(2, ladder.k_max + 1):
        assert ladder.eigenvalue(k - 1, 2) < ladder.eigenvalue(k, 1) <= ladder.eigenvalue(k, 2)


def test_zero_counts_and_parity(any_plane):
    field, ladder = any_plane
    for record in ladder.basis():
        assert record.zero_count == 2 * record.k
        assert record.ptype is PeriodicityType.for_index(record.k)
        sigma = 1.0 if record.k % 2 == 0 else -1.0
        assert np.max(np.abs(field.shift_half_turn(record.h) - sigma * record.h)) < 1e-8


def test_eigenfunctions_normalized(lp3_field, lp3_ladder):
    for record in lp3_ladder:
        assert trapezoid(record.h ** 2 * lp3_field.bp) == pytest.approx(1.0, abs=1e-9)


def test_rotation_roots_euclidean(euclidean_ladder):
    roots = euclidean_ladder.rotation_roots
    assert roots[:2] == [0.0, 1.0]
    for j, root in enumerate(roots[2:], start=2):
        assert root == pytest.approx(j * j, abs=1e-6)


def test_rotation_roots_separate_pairs(lp3_ladder):
    roots = lp3_ladder.rotation_roots
    for k in range(2, lp3_ladder.k_max + 1):
        assert roots[k - 1] <= lp3_ladder.eigenvalue(k, 1) + 1e-9
        assert lp3_ladder.eigenvalue(k, 2) <= roots[k + 1] + 1e-9


def test_parallel_ladder_matches_serial(fourier_field, fourier_ladder):
    threaded = find_ladder(fourier_field, k_max=4, workers=3)
    for k in range(2, 5):
        for branch in (1, 2):
            assert threaded.eigenvalue(k, branch) == pytest.approx(fourier_ladder.eigenvalue(k, branch), abs=1e-8)


def test_ladder_lookup(euclidean_ladder):
    with pytest.raises(KeyError):
        euclidean_ladder.get(42)
    assert all(r.k >= 1 for r in euclidean_ladder.basis(3))
    assert len(euclidean_ladder.basis(3)) == 6


def test_k_max_too_small(euclidean_field):
    with pytest.raises(ValueError):
        find_ladder(euclidean_field, k_max=1)


def test_bracket_failure(euclidean_field):
    with pytest.raises(BracketFailure) as info:
        rotation_root(euclidean_field, 5, 1.0, cap=2.0, tol=1e-9, ode_tol=1e-10)
    assert info.value.exit_code == 3


# ── λ = 1 ────────────────────────────────────────────────────────────────────

def test_lambda_one_euclidean(euclidean_field):
    space = lambda_one_eigenspace(euclidean_field)
    assert space.ode_residual < 1e-10
    assert space.antiperiodic_residual < 1e-12
    assert np.allclose(space.half_turn_gaps, np.pi / 2, atol=1e-10)
    assert not space.closed


@pytest.mark.parametrize("name", ["lp3_field", "fourier_field", "ellipse_field"])
def test_lambda_one_open(name, request):
    space = lambda_one_eigenspace(request.getfixturevalue(name))
    assert space.ode_residual < 1e-6
    assert space.antiperiodic_residual < 1e-10
    assert not space.closed
    json.dumps(space.to_dict())


# ── N turns ──────────────────────────────────────────────────────────────────

def test_three_turn_euclidean(euclidean_field):
    records = find_n_turn(euclidean_field, 3)
    by_k = {r.k: r for r in records}
    assert sorted(by_k) == [1, 2, 4, 5, 7]
    for k, record in by_k.items():
        assert record.lam == pytest.approx(k * k / 9.0, abs=1e-8)
        assert record.closure_residual < 1e-7
        assert record.multiplicity == 1
    assert by_k[1].kind is CycloidKind.EPICYCLOID
    assert by_k[2].kind is CycloidKind.EPICYCLOID
    assert by_k[4].kind is CycloidKind.HYPOCYCLOID
    assert by_k[1].h.size == 3 * euclidean_field.n


def test_n_turn_multiplicity(euclidean_field):
    records = find_n_turn(euclidean_field, 4, hypo_k_max=6)
    assert {r.k: r.multiplicity for r in records} == {1: 1, 2: 2, 3: 1, 5: 1, 6: 2}
    assert [r.k for r in records if r.kind is CycloidKind.EPICYCLOID] == [1, 2, 3]


def test_n_turn_lp3_epicycloids(lp3_field):
    records = find_n_turn(lp3_field, 3, hypo_k_max=3)
    assert len(records) == 2
    assert all(0.0 < r.lam < 1.0 for r in records)
    assert records[0].lam < records[1].lam
    assert all(r.closure_residual < 1e-6 for r in records)


def test_n_turn_needs_two(euclidean_field):
    with pytest.raises(ValueError):
        find_n_turn(euclidean_field, 1)


# ── Doubling and gaps ────────────────────────────────────────────────────────

@pytest.mark.parametrize("field_name, ladder_name", [
    ("lp3_field", "lp3_ladder"),
    ("lp4_field", "lp4_ladder"),
    ("ellipse_field", "ellipse_ladder"),
])
def test_symmetry_doubling(field_name, ladder_name, request):
    field = request.getfixturevalue(field_name)
    ladder = request.getfixturevalue(ladder_name)
    report = symmetry_doubling_check(field, ladder)
    assert report.applicable
    assert report.passed
    checked = [e.k for e in report.entries if e.passed is not None]
    assert checked == [3, 5, 7]


def test_doubling_recorded_only(fourier_field, fourier_ladder):
    report = symmetry_doubling_check(fourier_field, fourier_ladder)
    assert not report.applicable
    assert all(e.passed is None for e in report.entries)
    assert report.to_dict()['pass']


def test_gaps_lp3(lp3_field, lp3_ladder):
    samples = gap_samples(lp3_field, lp3_ladder, per_gap=3)
    elliptic = [s for s in samples if s.zone == "elliptic"]
    unstable = [s for s in samples if s.zone == "instability"]
    assert elliptic and all(s.tag is MonodromyTag.ELLIPTIC for s in elliptic)
    assert {s.k for s in unstable} == {2, 4, 6, 8}
    assert all(s.tag is MonodromyTag.HYPERBOLIC_PLUS for s in unstable)


@pytest.mark.parametrize("name", ["euclidean", "ellipse"])
def test_gaps_without_instability(name, request):
    field = request.getfixturevalue(f"{name}_field")
    ladder = request.getfixturevalue(f"{name}_ladder")
    samples = gap_samples(field, ladder, per_gap=3)
    assert len(samples) == 3 * ladder.k_max
    assert all(s.tag is MonodromyTag.ELLIPTIC for s in samples)


def test_ladder_json(lp3_field, lp3_ladder):
    data = ladder_to_json(lp3_field, lp3_ladder, extra={'rotation_roots': lp3_ladder.rotation_roots})
    text = json.dumps(data)
    assert data['model']['family'] == 'lp'
    assert data['n'] == lp3_field.n
    assert len(data['ladder']) == len(lp3_ladder)
    entry = next(e for e in data['ladder'] if e['k'] == 5)
    assert entry['double'] and entry['ptype'] == 'antiperiodic'
    assert 'rotation_roots' in json.loads(text)
