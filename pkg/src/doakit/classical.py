"""Model-based DoA baselines: MUSIC, the Bartlett beamformer, and random
guessing.

MUSIC: sample covariance -> eigendecomposition -> the m-d eigenvectors of
the smallest eigenvalues span the noise subspace -> inverse squared
distance between the steering manifold and that subspace, scanned on a
uniform angular grid -> d dominant peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import hermitian_evd, sample_covariance
from .signal import steering_matrix

EPS_DEN = 1e-12  # caps the on-grid noiseless peak without moving the argmax
DEFAULT_GRID_SIZE = 360


def grid_angles(g: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """g cell-center angles in (-pi/2, pi/2); endpoints excluded because
    the ULA steering flattens at +-pi/2."""
    if g < 1:
        raise ValueError("grid size must be >= 1")
    return -math.pi / 2 + (np.arange(g) + 0.5) * math.pi / g


@dataclass
class SpectrumGrid:
    angles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.angles.size == 0 or self.angles.shape != self.values.shape:
            raise ValueError("angles/values must be nonempty and congruent")
        if self.angles.size > 1 and np.min(np.diff(self.angles)) <= 0:
            raise ValueError("angles must be strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.min(self.values) < 0:
            raise ValueError("spectrum values must be finite and >= 0")


@dataclass
class PeakResult:
    angles: np.ndarray  # d angles, sorted ascending
    shortage: bool      # True when fewer than d strict local maxima existed


def music_spectrum(noise_basis: np.ndarray, angles: np.ndarray) -> SpectrumGrid:
    """values[g] = 1 / (||E_n^H a(psi_g)||^2 + eps)."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.size == 0:
        raise ValueError("empty grid")
    en = np.asarray(noise_basis, dtype=np.complex128)
    a = steering_matrix(angles, en.shape[0])  # (m, G)
    den = np.sum(np.abs(en.conj().T @ a) ** 2, axis=0)
    return SpectrumGrid(angles, 1.0 / (den + EPS_DEN))


def bartlett_spectrum(k_hat: np.ndarray, angles: np.ndarray) -> SpectrumGrid:
    """Conventional beamformer power a^H K a / m^2 over the grid."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.size == 0:
        raise ValueError("empty grid")
    m = k_hat.shape[0]
    a = steering_matrix(angles, m)
    vals = np.einsum("mg,mn,ng->g", a.conj(), k_hat, a).real / m**2
    return SpectrumGrid(angles, np.maximum(vals, 0.0))


def find_peaks(spec: SpectrumGrid, d: int) -> PeakResult:
    """Angles of the d largest strict local maxima, ascending.

    Plateaus and monotone stretches can leave fewer than d maxima; the
    remainder is then filled with the largest not-yet-selected grid values
    and the shortage flag is set.
    """
    v = spec.values
    g = v.size
    if not (1 <= d <= g):
        raise ValueError(f"need 1 <= d <= {g}, got {d}")
    is_peak = np.ones(g, dtype=bool)
    if g > 1:
        is_peak[1:] &= v[1:] > v[:-1]
        is_peak[:-1] &= v[:-1] > v[1:]
    order = np.argsort(-v, kind="stable")
    peak_idx = [i for i in order if is_peak[i]][:d]
    shortage = len(peak_idx) < d
    if shortage:
        chosen = set(peak_idx)
        for i in order:
            if len(peak_idx) == d:
                break
            if i not in chosen:
                peak_idx.append(i)
                chosen.add(i)
    return PeakResult(np.sort(spec.angles[peak_idx]), shortage)


def noise_subspace(k_hat: np.ndarray, d: int) -> np.ndarray:
    """Eigenvectors of the m-d smallest eigenvalues of a Hermitian matrix."""
    m = k_hat.shape[0]
    if not (1 <= d < m):
        raise ValueError(f"need 1 <= d < m={m}, got d={d}")
    return hermitian_evd(k_hat).eigenvectors[:, : m - d]


def music_estimate(x: np.ndarray, d: int, grid: np.ndarray | None = None) -> np.ndarray:
    angles = grid_angles() if grid is None else grid
    en = noise_subspace(sample_covariance(x), d)
    return find_peaks(music_spectrum(en, angles), d).angles


def bartlett_estimate(x: np.ndarray, d: int, grid: np.ndarray | None = None) -> np.ndarray:
    angles = grid_angles() if grid is None else grid
    if not (1 <= d < x.shape[0]):
        raise ValueError(f"need 1 <= d < m={x.shape[0]}, got d={d}")
    return find_peaks(bartlett_spectrum(sample_covariance(x), angles), d).angles


def random_estimate(d: int, rng: np.random.Generator) -> np.ndarray:
    """d i.i.d. uniform guesses over (-pi/2, pi/2), sorted."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return np.sort(rng.uniform(-math.pi / 2, math.pi / 2, d))
