"""Plane models, sampled fields and their validation."""

import json

import numpy as np
import pytest

from core.error_handler import GridTooCoarse, InvalidModel
from core.plane import (
    EllipseModel,
    EuclideanModel,
    FourierModel,
    LpModel,
    PlaneFamily,
    build_plane,
    cross,
    model_from_json,
    model_to_json,
    parse_model_shorthand,
    validate_plane,
)


# ── Models ───────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("text, cls", [
    ("euclidean", EuclideanModel),
    ("lp:3", LpModel),
    ("ellipse:2,1", EllipseModel),
    ("fourier:a0=1,k2a=0.1,k4b=0.02", FourierModel),
])
def test_shorthand_families(text, cls):
    assert isinstance(parse_model_shorthand(text), cls)


def test_fourier_shorthand_terms():
    model = parse_model_shorthand("fourier:a0=1.5,k2a=0.1,k2b=-0.05,k4a=0.01")
    assert model.a0 == 1.5
    terms = {t.k: (t.a, t.b) for t in model.terms}
    assert terms == {2: (0.1, -0.05), 4: (0.01, 0.0)}


def test_model_json_round_trip():
    model = parse_model_shorthand("lp:3")
    assert model_from_json(json.dumps(model_to_json(model))) == model
    assert parse_model_shorthand('{"family": "ellipse", "a": 2, "b": 1}') == EllipseModel(a=2, b=1)


@pytest.mark.parametrize("text", [
    "lp:1",                  # p must exceed 1
    "ellipse:2,-1",
    "fourier:a0=1,k3a=0.1",  # odd k breaks central symmetry
    "hexagon",
    "lp:abc",
    '{"family": "lp", "p": 3, "extra": 1}',
])
def test_invalid_models(text):
    with pytest.raises(InvalidModel) as info:
        parse_model_shorthand(text)
    assert info.value.exit_code == 2


def test_lp_conjugate():
    assert LpModel(p=3).conjugate == pytest.approx(1.5)


# ── Build ────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("n", [32, 100, 1000])
def test_grid_size_rejected(n):
    with pytest.raises(GridTooCoarse):
        build_plane(EuclideanModel(), n)


def test_fourier_not_convex():
    # H + H'' = 1 - 2.7 cos 2θ changes sign
    with pytest.raises(InvalidModel):
        build_plane(parse_model_shorthand("fourier:a0=1,k2a=0.9"), 256)


def test_fourier_unresolved_terms():
    with pytest.raises(GridTooCoarse):
        build_plane(parse_model_shorthand("fourier:a0=1,k20a=0.0001"), 64)


def test_lp2_is_euclidean():
    field = build_plane(LpModel(p=2), 128)
    assert field.singular_nodes == ()
    assert np.allclose(field.bp, 1.0) and np.allclose(field.bq, 1.0)


def test_staggered_grid(euclidean_field):
    n = euclidean_field.n
    assert euclidean_field.origin == pytest.approx(np.pi / n)
    assert euclidean_field.grid[n // 2] - euclidean_field.grid[0] == pytest.approx(np.pi)


def test_arrays_read_only(euclidean_field):
    with pytest.raises(ValueError):
        euclidean_field.bp[0] = 2.0


def test_lp_singular_nodes(lp3_field):
    nodes = lp3_field.singular_nodes
    assert len(nodes) == 8
    n = lp3_field.n
    assert {0, n - 1, n // 4 - 1, n // 4, n // 2 - 1, n // 2}.issubset(nodes)


def test_lp_natural_brackets(lp3_field):
    """bp·bq = 4/(p·p*) and bp = (2/p)(cos t sin t)^{2/p-1} in the signed-power parameter."""
    bp, bq = lp3_field.natural_brackets()
    mask = lp3_field.regular_mask
    assert np.max(np.abs((bp * bq)[mask] - 4.0 / 4.5)) < 1e-8

    # t itself loses relative accuracy next to the axes, compare in the interior
    inner = (lp3_field.t > 0.05) & (lp3_field.t < np.pi / 2 - 0.05)
    t = lp3_field.t[inner]
    expected = (2.0 / 3.0) * (np.cos(t) * np.sin(t)) ** (2.0 / 3.0 - 1.0)
    assert np.max(np.abs(bp[inner] / expected - 1.0)) < 1e-8


def test_lp_tau_brackets_bounded(lp3_field):
    assert np.all(np.isfinite(lp3_field.bp)) and np.all(np.isfinite(lp3_field.bq))
    assert np.all(lp3_field.bp >= 0.0) and np.all(lp3_field.bq >= 0.0)


# ── Validation ───────────────────────────────────────────────────────────────

def test_euclidean_validation_exact(euclidean_field):
    report = validate_plane(euclidean_field)
    assert report.passed
    assert max(c.residual for c in report.checks.values()) < 1e-10


@pytest.mark.parametrize("name", ["euclidean_field", "ellipse_field", "fourier_field", "lp3_field", "lp4_field"])
def test_validation_passes(name, request):
    field = request.getfixturevalue(name)
    report = validate_plane(field)
    assert report.passed, report.to_dict()
    assert report.residual('duality') < 1e-6


@pytest.mark.parametrize("name", ["euclidean_field", "ellipse_field", "fourier_field", "lp3_field"])
def test_plane_identity(name, request):
    field = request.getfixturevalue(name)
    identity = field.bp * field.bq ** 2 - cross(field.dq, field.ddq)
    assert np.max(np.abs(identity[field.regular_mask])) < 1e-8


def test_report_json(lp3_field):
    data = validate_plane(lp3_field).to_dict()
    assert data['family'] == 'lp'
    assert set(data['checks']) >= {'duality', 'symmetry', 'identity', 'spectral', 'unit_circle'}
    json.dumps(data)


# ── Dual ─────────────────────────────────────────────────────────────────────

def test_dual_involution(fourier_field):
    dual = fourier_field.dual()
    assert dual.is_dual and not fourier_field.is_dual
    assert dual.dual() is fourier_field
    assert np.array_equal(dual.p, fourier_field.q)
    assert np.array_equal(dual.q, -fourier_field.p)
    assert np.array_equal(dual.bp, fourier_field.bq)
    assert np.max(np.abs(cross(dual.p, dual.q) - 1.0)) < 1e-12


def test_dual_validates(ellipse_field):
    assert validate_plane(ellipse_field.dual()).passed


def test_dual_coefficients_swap(fourier_field):
    tau = np.array([0.3, 1.1])
    bp, bq = fourier_field.coefficients(tau)
    dbp, dbq = fourier_field.dual().coefficients(tau)
    assert np.allclose(dbp, bq) and np.allclose(dbq, bp)


def test_family(lp3_field):
    assert lp3_field.family is PlaneFamily.LP
