"""Periodic grid numerics."""

import numpy as np
import pytest

from core.spectral import (
    count_sign_changes,
    cumulative_integral,
    fourier_antiderivative,
    fourier_diff,
    sign_changes,
    trapezoid,
    trig_eval,
)

N = 256
GRID = (np.arange(N) + 0.5) * 2 * np.pi / N


def test_derivatives_of_trig():
    v = np.sin(3 * GRID) + 0.5 * np.cos(7 * GRID)
    assert np.max(np.abs(fourier_diff(v) - (3 * np.cos(3 * GRID) - 3.5 * np.sin(7 * GRID)))) < 1e-11
    assert np.max(np.abs(fourier_diff(v, order=2) + 9 * np.sin(3 * GRID) + 24.5 * np.cos(7 * GRID))) < 1e-9


def test_derivative_on_longer_period():
    t = np.arange(3 * N) * 2 * np.pi / N
    v = np.cos(t / 3)
    assert np.max(np.abs(fourier_diff(v, period=6 * np.pi) + np.sin(t / 3) / 3)) < 1e-12


def test_derivative_last_axis():
    stacked = np.stack([np.sin(GRID), np.cos(GRID)])
    d = fourier_diff(stacked)
    assert np.allclose(d[0], np.cos(GRID)) and np.allclose(d[1], -np.sin(GRID))


def test_antiderivative_drops_mean():
    v = 2.0 + np.cos(2 * GRID)
    anti = fourier_antiderivative(v)
    assert np.max(np.abs(anti - np.sin(2 * GRID) / 2)) < 1e-12


def test_trapezoid_exact_for_trig():
    assert trapezoid(np.ones(N)) == pytest.approx(2 * np.pi)
    assert abs(trapezoid(np.cos(5 * GRID))) < 1e-12
    assert trapezoid(np.cos(GRID) ** 2) == pytest.approx(np.pi)


def test_trig_eval_between_nodes():
    v = np.cos(4 * GRID) + np.sin(GRID)
    for t in (0.0, 0.123, 3.0):
        assert trig_eval(v, GRID, t) == pytest.approx(np.cos(4 * t) + np.sin(t), abs=1e-12)


def test_cumulative_integral_with_drift():
    v = 1.0 + np.cos(GRID)
    F = cumulative_integral(v, GRID, t0=0.0)
    assert np.max(np.abs(F - (GRID + np.sin(GRID)))) < 1e-12


def test_sign_changes_positions():
    zeros = sign_changes(np.cos(2 * GRID), GRID)
    assert len(zeros) == 4
    assert np.allclose(zeros, [np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4], atol=1e-3)


def test_sign_changes_wraps():
    # sin has a zero at the grid seam
    assert count_sign_changes(np.sin(GRID)) == 2
    assert count_sign_changes(np.sin(GRID), periodic=False) == 1


def test_tangency_cluster_dropped():
    v = np.cos(GRID) ** 2 - 1e-3      # two flips two nodes apart near θ = π/2
    v = np.where(np.abs(GRID - np.pi / 2) < 0.08, v, np.abs(v))
    assert count_sign_changes(v, cluster=3) == 0


def test_tiny_values_ignored():
    v = np.cos(2 * GRID)
    v[10] = -1e-14 * np.sign(v[10])
    assert count_sign_changes(v) == 4


def test_zero_function():
    assert count_sign_changes(np.zeros(N)) == 0
