"""Narrowband far-field observation model for a half-wavelength ULA.

x(t) = A(theta) s(t) + w(t), with circularly-symmetric complex Gaussian
sources and noise. Coherent operation shares one source waveform across all
d wavefronts, which collapses the signal covariance to rank 1. Array
imperfections are modeled as additive complex Gaussian offsets on the
steering entries used to synthesize data (the estimator keeps the nominal
steering).

All randomness flows through counter-based Philox streams keyed by
(seed, stream), so any sample of any dataset is reproducible in isolation.
Sample ell of a dataset uses stream ell; consumers needing unrelated
randomness (weight init, shuffling, ...) must use streams >= 2**62.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

MIN_SEP = 0.05  # pairwise DoA guard during random draws, radians
MAX_DOA_REDRAWS = 10_000
DATASET_MAGIC = b"DOAKIT1\n"
FORMAT_VERSION = 1

# reserved stream offsets, far above any dataset index
STREAM_INIT = 2**62
STREAM_SHUFFLE = 2**62 + 1
STREAM_EVAL = 2**62 + 2
STREAM_RANDOM_EST = 2**62 + 3


def sub_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream), stable across processes."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class Scenario:
    """Everything that defines the statistical setting of one experiment."""

    m: int
    d: int
    T: int
    snr_db: float
    coherent: bool = False
    doa_range: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    steering_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.d < self.m):
            raise ValueError(f"need 1 <= d < m, got d={self.d} m={self.m}")
        if self.T < 1:
            raise ValueError(f"need T >= 1, got {self.T}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        lo, hi = self.doa_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"bad doa_range {self.doa_range}")
        if self.steering_noise_sigma < 0:
            raise ValueError("steering_noise_sigma must be >= 0")
        self.doa_range = (float(lo), float(hi))

    @property
    def noise_var(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass
class LabeledSample:
    x: np.ndarray      # (m, T) complex128 snapshots
    theta: np.ndarray  # (d,) float64 radians


def steering_vector(theta: float, m: int) -> np.ndarray:
    """[a(theta)]_k = exp(-j*pi*k*sin(theta)) for a half-wavelength ULA."""
    if m < 1:
        raise ValueError("m must be >= 1")
    k = np.arange(m)
    return np.exp(-1j * np.pi * k * np.sin(theta))


def steering_matrix(thetas: np.ndarray, m: int) -> np.ndarray:
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    if thetas.size == 0:
        raise ValueError("need at least one angle")
    k = np.arange(m)[:, None]
    return np.exp(-1j * np.pi * k * np.sin(thetas)[None, :])


def circular_gaussian(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """CN(0, var) i.i.d. entries: Re and Im each N(0, var/2)."""
    if var < 0:
        raise ValueError("variance must be >= 0")
    s = math.sqrt(var / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_doas(scn: Scenario, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. uniform DoAs with a pairwise separation guard.

    The whole vector is redrawn until the minimum gap clears MIN_SEP;
    failure after MAX_DOA_REDRAWS attempts means the range cannot hold d
    angles that far apart.
    """
    lo, hi = scn.doa_range
    for _ in range(MAX_DOA_REDRAWS):
        theta = rng.uniform(lo, hi, scn.d)
        if scn.d == 1 or np.min(np.diff(np.sort(theta))) >= MIN_SEP:
            return theta
    raise ValueError(
        f"could not draw {scn.d} angles separated by {MIN_SEP} in {scn.doa_range}"
    )


def draw_sources(scn: Scenario, rng: np.random.Generator) -> np.ndarray:
    """d x T unit-variance source block; coherent shares one waveform."""
    if scn.coherent:
        base = circular_gaussian(rng, (1, scn.T))
        return np.repeat(base, scn.d, axis=0)
    return circular_gaussian(rng, (scn.d, scn.T))


def generate_sample(
    scn: Scenario, rng: np.random.Generator, theta: np.ndarray | None = None
) -> LabeledSample:
    """One labeled observation. Draw order: DoAs, steering offsets,
    sources, noise — fixed so streams replay identically. Passing theta
    pins the angles (sweep protocols) and skips the DoA draw."""
    if theta is None:
        theta = draw_doas(scn, rng)
    else:
        theta = np.sort(np.asarray(theta, dtype=np.float64))
        if theta.shape != (scn.d,):
            raise ValueError(f"theta must have shape ({scn.d},)")
    a = steering_matrix(theta, scn.m)
    if scn.steering_noise_sigma > 0.0:
        a = a + circular_gaussian(rng, a.shape, scn.steering_noise_sigma**2)
    s = draw_sources(scn, rng)
    w = circular_gaussian(rng, (scn.m, scn.T), scn.noise_var)
    return LabeledSample(x=a @ s + w, theta=theta)


def perturb_steering(
    m: int, sigma: float, rng: np.random.Generator, grid_size: int = 360
) -> np.ndarray:
    """m x grid_size table of additive steering offsets, CN(0, sigma^2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return np.zeros((m, grid_size), dtype=np.complex128)
    return circular_gaussian(rng, (m, grid_size), sigma**2)


def generate_dataset(
    scn: Scenario, L: int, path: str | os.PathLike | None = None
) -> list[LabeledSample]:
    """L independent samples, sample ell drawn from stream ell of scn.seed.

    A pure function of (scn, L); pass a path to persist in the binary
    dataset format.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    samples = [generate_sample(scn, sub_rng(scn.seed, ell)) for ell in range(L)]
    if path is not None:
        save_dataset(path, scn, samples)
    return samples


# ------------------------------------------------------------ persistence
#
# Layout: 8-byte magic, u32 little-endian header length, UTF-8 JSON header,
# then L records. Each record is 2*m*T float64 little-endian (Re(X)
# row-major, then Im(X) row-major) followed by d float64 angles.


def _header_dict(scn: Scenario, L: int) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "m": scn.m,
        "d": scn.d,
        "T": scn.T,
        "L": L,
        "snr_db": scn.snr_db,
        "coherent": scn.coherent,
        "seed": scn.seed,
        "doa_range": list(scn.doa_range),
        "steering_noise_sigma": scn.steering_noise_sigma,
        "min_sep": MIN_SEP,
    }


def scenario_from_header(h: dict) -> Scenario:
    return Scenario(
        m=h["m"],
        d=h["d"],
        T=h["T"],
        snr_db=h["snr_db"],
        coherent=h["coherent"],
        doa_range=tuple(h.get("doa_range", (-math.pi / 2, math.pi / 2))),
        steering_noise_sigma=h.get("steering_noise_sigma", 0.0),
        seed=h["seed"],
    )


def save_dataset(path, scn: Scenario, samples: list[LabeledSample]) -> None:
    header = json.dumps(_header_dict(scn, len(samples)), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(np.uint32(len(header)).tobytes())
        fh.write(header)
        for smp in samples:
            x = np.ascontiguousarray(smp.x, dtype=np.complex128)
            if x.shape != (scn.m, scn.T) or smp.theta.shape != (scn.d,):
                raise ValueError("sample shape does not match the scenario")
            fh.write(x.real.astype("<f8").tobytes())
            fh.write(x.imag.astype("<f8").tobytes())
            fh.write(np.asarray(smp.theta, dtype="<f8").tobytes())


def load_dataset(path) -> tuple[Scenario, list[LabeledSample]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(DATASET_MAGIC))
        if magic != DATASET_MAGIC:
            raise ValueError(f"{path}: not a dataset file (bad magic {magic!r})")
        (hlen,) = np.frombuffer(fh.read(4), dtype="<u4")
        h = json.loads(fh.read(int(hlen)).decode())
        if h.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported dataset version {h.get('format_version')}")
        scn = scenario_from_header(h)
        m, t, d, L = h["m"], h["T"], h["d"], h["L"]
        rec = 2 * m * t + d
        raw = fh.read()
    data = np.frombuffer(raw, dtype="<f8")
    if data.size != rec * L:
        raise ValueError(
            f"{path}: expected {rec * L} floats of payload, found {data.size}"
        )
    samples = []
    for ell in range(L):
        chunk = data[ell * rec : (ell + 1) * rec]
        re = chunk[: m * t].reshape(m, t)
        im = chunk[m * t : 2 * m * t].reshape(m, t)
        samples.append(LabeledSample(x=re + 1j * im, theta=chunk[2 * m * t :].copy()))
    return scn, samples
