"""
Periodic grid numerics: Fourier differentiation and antiderivatives,
trapezoid sums, trigonometric evaluation and the clustered sign-change scan
used for cusps, vertices and zero counts.

All functions take samples on a uniform grid covering one full period of
length ``period`` (2π per turn).
"""

from typing import List, Optional

import numpy as np


def wavenumbers(n: int, period: float = 2.0 * np.pi) -> np.ndarray:
    """Angular wavenumbers in numpy FFT order."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=period / n)


def fourier_diff(v: np.ndarray, order: int = 1, period: float = 2.0 * np.pi) -> np.ndarray:
    """
    Spectral derivative of periodic samples (last axis).

    The Nyquist mode is dropped for odd orders so real input stays real.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    k = wavenumbers(n, period)
    factor = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        factor[n // 2] = 0.0
    return np.real(np.fft.ifft(factor * np.fft.fft(v, axis=-1), axis=-1))


def fourier_antiderivative(v: np.ndarray, period: float = 2.0 * np.pi) -> np.ndarray:
    """
    Periodic antiderivative with zero mean of the zero-mean part of ``v``.

    The mean of ``v`` is ignored; callers that need the linear drift add
    ``mean * (t - t0)`` themselves (see cumulative_integral).
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    k = wavenumbers(n, period)
    hat = np.fft.fft(v, axis=-1)
    out = np.zeros_like(hat)
    nz = k != 0
    out[..., nz] = hat[..., nz] / (1j * k[nz])
    if n % 2 == 0:
        out[..., n // 2] = 0.0
    return np.real(np.fft.ifft(out, axis=-1))


def trapezoid(v: np.ndarray, period: float = 2.0 * np.pi) -> float:
    """Trapezoid rule over one period (every node has weight period/n)."""
    v = np.asarray(v, dtype=float)
    return float(np.sum(v, axis=-1) * (period / v.shape[-1]))


def trig_eval(v: np.ndarray, grid: np.ndarray, t: float, period: float = 2.0 * np.pi) -> float:
    """Evaluate the trigonometric interpolant of samples ``v`` on ``grid`` at ``t``."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    k = wavenumbers(n, period)
    hat = np.fft.fft(v) / n
    if n % 2 == 0:
        # split the Nyquist coefficient symmetrically
        hat = hat.copy()
        hat[n // 2] *= 0.5
        k = np.append(k, -k[n // 2])
        hat = np.append(hat, hat[n // 2])
    phase = np.exp(1j * k * (t - grid[0]))
    return float(np.real(np.sum(hat * phase)))


def cumulative_integral(
    v: np.ndarray,
    grid: np.ndarray,
    t0: float,
    period: float = 2.0 * np.pi,
) -> np.ndarray:
    """
    F(t_j) = ∫_{t0}^{t_j} v dt for periodic ``v``, including the linear drift
    produced by a nonzero mean. Spectrally accurate for smooth integrands.
    """
    v = np.asarray(v, dtype=float)
    mean = float(np.mean(v))
    anti = fourier_antiderivative(v - mean, period)
    anti0 = trig_eval(anti, grid, t0, period)
    return anti - anti0 + mean * (grid - t0)


def sign_changes(
    v: np.ndarray,
    grid: np.ndarray,
    periodic: bool = True,
    rel_floor: float = 1e-10,
    cluster: int = 3,
) -> List[float]:
    """
    Parameter values where ``v`` changes sign.

    Values below ``rel_floor * max|v|`` are skipped. Flips whose node indices
    lie within ``cluster`` steps of each other are grouped; a group with an odd
    number of flips is one zero (placed at its middle flip), an even group is
    a tangency and is dropped.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    scale = float(np.max(np.abs(v))) if n else 0.0
    if scale == 0.0:
        return []
    keep = np.flatnonzero(np.abs(v) > rel_floor * scale)
    if keep.size < 2:
        return []

    idx = keep
    if periodic:
        nxt = np.roll(idx, -1)
    else:
        nxt = idx[1:]
        idx = idx[:-1]
    flips = np.flatnonzero(np.sign(v[idx]) != np.sign(v[nxt]))
    if flips.size == 0:
        return []

    step = grid[1] - grid[0]
    positions = []
    for f in flips:
        i, j = idx[f], nxt[f]
        span = (j - i) % n if periodic else j - i
        # linear interpolation of the crossing
        frac = v[i] / (v[i] - v[j])
        positions.append((i, grid[i] + frac * span * step))

    return _cluster(positions, n, cluster, periodic)


def _cluster(positions, n: int, cluster: int, periodic: bool) -> List[float]:
    groups: List[List[float]] = []
    last_index: Optional[int] = None
    for index, t in positions:
        if last_index is not None and (index - last_index) <= cluster:
            groups[-1].append(t)
        else:
            groups.append([t])
        last_index = index

    if periodic and len(groups) > 1:
        first_index = positions[0][0]
        if (first_index + n - positions[-1][0]) <= cluster:
            groups[0] = groups.pop() + groups[0]

    zeros = []
    for group in groups:
        if len(group) % 2 == 1:
            zeros.append(group[len(group) // 2])
    return sorted(zeros)


def count_sign_changes(v: np.ndarray, periodic: bool = True, **kwargs) -> int:
    """Number of clustered sign changes (grid spacing only matters for positions)."""
    v = np.asarray(v, dtype=float)
    grid = np.arange(v.size, dtype=float)
    return len(sign_changes(v, grid, periodic=periodic, **kwargs))
