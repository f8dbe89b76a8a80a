"""Seedable input, noise and plant generators for the simulation harness.

The scalar input process is either white Gaussian or a first-order
autoregression driven by a symmetric two-component Gaussian mixture.  The
regressor seen by the filters is the tapped-delay line of the scalar process
(zero pre-padding before the first sample), and the unknown system is a
piecewise-constant schedule of weight vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

__all__ = [
    "WhiteGaussian",
    "AR1GaussianMixture",
    "InputProcess",
    "PlantSchedule",
    "SignalStream",
    "gen_white_gaussian",
    "gen_ar1_mixture",
    "scalar_stream",
    "benchmark_plants",
    "benchmark_schedule",
    "simulate_plant",
    "export_plants_csv",
]

AR1_BURN_IN = 1000


@dataclass(frozen=True)
class WhiteGaussian:
    """Zero-mean i.i.d. Gaussian scalar input with the given variance."""

    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("input variance must be positive")


@dataclass(frozen=True)
class AR1GaussianMixture:
    """First-order AR scalar input driven by a symmetric Gaussian mixture.

    The innovation is drawn from ``0.5 N(a sigma_v, sigma_v2) +
    0.5 N(-a sigma_v, sigma_v2)`` and fed through ``u_t = alpha u_{t-1} + v_t``.
    """

    alpha: float = 0.5
    a: float = 1.5
    sigma_v2: float = 4.0 / 13.0

    def __post_init__(self):
        if not abs(self.alpha) < 1:
            raise ValueError("AR coefficient must satisfy |alpha| < 1")
        if not self.sigma_v2 > 0:
            raise ValueError("innovation variance must be positive")


InputProcess = Union[WhiteGaussian, AR1GaussianMixture]


@dataclass(frozen=True)
class PlantSchedule:
    """Piecewise-constant true weight vectors with 1-based switch times.

    Segment ``k`` is active for samples ``start_k <= n < start_{k+1}`` (the
    last one until ``total_iterations`` inclusive).  The first start must be
    1 and all weight vectors must share one length.
    """

    segments: tuple[tuple[int, np.ndarray], ...]
    total_iterations: int

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        if self.segments[0][0] != 1:
            raise ValueError("first segment must start at iteration 1")
        starts = [s for s, _ in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment starts must be strictly increasing")
        L = self.segments[0][1].shape[0]
        if any(w.shape != (L,) for _, w in self.segments):
            raise ValueError("all plant vectors must share one length")

    @property
    def L(self) -> int:
        return self.segments[0][1].shape[0]

    def active_indices(self, n_iterations: int) -> np.ndarray:
        """Segment index active at each 0-based sample ``0..n_iterations-1``."""
        starts = np.array([s for s, _ in self.segments])
        # sample i is 1-based iteration i+1
        return np.searchsorted(starts, np.arange(1, n_iterations + 1), side="right") - 1

    def plant_matrix(self) -> np.ndarray:
        """All segment weight vectors stacked as rows."""
        return np.stack([w for _, w in self.segments])

    def stage_bounds(self) -> list[tuple[int, int]]:
        """Half-open 0-based sample ranges of each segment."""
        starts = [s - 1 for s, _ in self.segments] + [self.total_iterations]
        return [(starts[k], starts[k + 1]) for k in range(len(self.segments))]


def gen_white_gaussian(n: int, variance: float, seed) -> np.ndarray:
    """``n`` i.i.d. zero-mean Gaussian samples, reproducible per seed."""
    if not variance > 0:
        raise ValueError("input variance must be positive")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, np.sqrt(variance), size=n)


def gen_ar1_mixture(
    n: int,
    alpha: float,
    a: float,
    sigma_v2: float,
    seed,
    burn_in: int = AR1_BURN_IN,
) -> np.ndarray:
    """``n`` samples of the AR(1) process with Gaussian-mixture innovations.

    The recursion starts from zero and discards ``burn_in`` samples so the
    returned stretch is approximately stationary.
    """
    if not abs(alpha) < 1:
        raise ValueError("AR coefficient must satisfy |alpha| < 1")
    rng = np.random.default_rng(seed)
    total = n + burn_in
    sigma_v = np.sqrt(sigma_v2)
    means = np.where(rng.random(total) < 0.5, a * sigma_v, -a * sigma_v)
    v = means + rng.normal(0.0, sigma_v, size=total)
    u = lfilter([1.0], [1.0, -alpha], v)
    return u[burn_in:]


def scalar_stream(process: InputProcess, n: int, seed) -> np.ndarray:
    """Draw ``n`` samples of the configured scalar input process."""
    if isinstance(process, WhiteGaussian):
        return gen_white_gaussian(n, process.variance, seed)
    if isinstance(process, AR1GaussianMixture):
        return gen_ar1_mixture(n, process.alpha, process.a, process.sigma_v2, seed)
    raise TypeError(f"unknown input process {process!r}")


def stationary_power(process: InputProcess) -> float:
    """Exact stationary variance of the scalar input process.

    For the AR(1) mixture this is (1 + a^2) sigma_v2 / (1 - alpha^2): the
    innovation variance of the symmetric two-component mixture divided by the
    usual AR(1) geometric factor.
    """
    if isinstance(process, WhiteGaussian):
        return process.variance
    if isinstance(process, AR1GaussianMixture):
        return (1.0 + process.a**2) * process.sigma_v2 / (1.0 - process.alpha**2)
    raise TypeError(f"unknown input process {process!r}")


def benchmark_plants() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three built-in length-35 plant vectors of the benchmark.

    The first and third are group-sparse (their nonzero coefficients sit in
    blocks of five); the second has no zero entry at all.
    """
    w1 = np.array(
        [0.8, 0.5, 0.3, 0.2, 0.1]
        + [0.0] * 15
        + [-0.05, -0.1, -0.2, -0.3, -0.5]
        + [0.0] * 5
        + [0.5, 0.25, 0.5, -0.25, -0.5]
    )
    w2 = np.array(
        [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]
        + [1.0] * 17
        + [-0.1, -0.2, -0.3, -0.4, -0.5, -0.6, -0.7, -0.8, -0.9]
    )
    w3 = np.array(
        [1.2, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.2, 0.5, 0.4]
        + [0.0] * 15
        + [-0.4, -0.5, -0.2, -0.4, -0.5, -0.6, -0.7, -0.8, -0.9, -1.2]
    )
    return w1, w2, w3


def benchmark_schedule(
    switch_iterations: tuple[int, ...] = (1, 8000, 16000),
    total_iterations: int = 24000,
) -> PlantSchedule:
    """Built-in schedule cycling through the three benchmark plants."""
    plants = benchmark_plants()
    segments = tuple(
        (start, plants[k % 3]) for k, start in enumerate(switch_iterations)
    )
    return PlantSchedule(segments=segments, total_iterations=total_iterations)


@dataclass(frozen=True)
class SignalStream:
    """One realization of the regressor/desired-signal pair.

    ``U[i]`` is the tapped-delay regressor ``[x_i, x_{i-1}, ...]`` (zero
    pre-padding), ``d`` the noisy plant output, ``plant_index[i]`` the active
    schedule segment at sample ``i``.
    """

    U: np.ndarray
    d: np.ndarray
    plant_index: np.ndarray
    schedule: PlantSchedule

    def rows(self) -> Iterator[tuple[np.ndarray, float, np.ndarray]]:
        """Iterate ``(u_n, d_n, w_star_n)`` triples."""
        plants = self.schedule.plant_matrix()
        for i in range(self.d.shape[0]):
            yield self.U[i], float(self.d[i]), plants[self.plant_index[i]]


def simulate_plant(
    schedule: PlantSchedule, x: np.ndarray, sigma_z2: float, noise_seed
) -> SignalStream:
    """Pass a scalar input stream through the scheduled plant plus noise.

    Builds the tapped-delay regressors from ``x``, applies the active plant
    vector per sample and adds i.i.d. Gaussian measurement noise drawn from
    an RNG stream independent of the input.
    """
    n = x.shape[0]
    L = schedule.L
    if n == 0:
        U = np.zeros((0, L))
    else:
        padded = np.concatenate([np.zeros(L - 1), x])
        U = np.ascontiguousarray(sliding_window_view(padded, L)[:, ::-1])
    idx = schedule.active_indices(n)
    plants = schedule.plant_matrix()
    d = np.einsum("ij,ij->i", U, plants[idx])
    if sigma_z2 > 0:
        rng = np.random.default_rng(noise_seed)
        d = d + rng.normal(0.0, np.sqrt(sigma_z2), size=n)
    return SignalStream(U=U, d=d, plant_index=idx, schedule=schedule)


def export_plants_csv(path) -> None:
    """Write the built-in plant vectors to ``path`` for inspection."""
    w1, w2, w3 = benchmark_plants()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "w_star_1", "w_star_2", "w_star_3"])
        for i in range(w1.shape[0]):
            writer.writerow([i + 1, repr(float(w1[i])), repr(float(w2[i])), repr(float(w3[i]))])
