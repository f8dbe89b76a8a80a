"""Brute-force oracles for the closed-form code paths.

Everything in here re-derives a quantity by independent means — exhaustive
grid search, central finite differences, or a vectorized Monte-Carlo ensemble
— so the analytic implementations elsewhere in the package can be checked
against something that cannot share their bugs.  The ensemble simulator keeps
all trajectories as rows of an (E, L) matrix and advances them with batched
numpy expressions rather than reusing the per-sample filter loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .filters import FilterConfig
from .groups import ZERO_GROUP_TOL, GRZA, AttractorMode, GroupPartition, l12_norm
from .signals import AR1GaussianMixture, WhiteGaussian, stationary_power
from .varparam import MomentEstimates


@dataclass(frozen=True)
class EnsembleMoments:
    """Sample means of the five transient-model moments with standard errors."""

    g: float
    h: float
    ell: float
    r1: float
    r2: float
    g_se: float
    h_se: float
    ell_se: float
    r1_se: float
    r2_se: float
    ensemble: int

    def __post_init__(self):
        if self.ensemble < 2:
            raise ValueError("ensemble size must be at least 2")
        ses = (self.g_se, self.h_se, self.ell_se, self.r1_se, self.r2_se)
        if not all(math.isfinite(s) for s in ses):
            raise ValueError("standard errors must be finite")


def grid_minimize_quadratic(
    m: MomentEstimates,
    box: tuple[tuple[float, float], tuple[float, float]],
    resolution: int,
) -> tuple[float, float, float]:
    """Exhaustively minimize the per-step MSD quadratic over a box.

    Evaluates q(mu, rho) = mu^2 g + rho^2 h + 2 mu rho ell - 2 mu r1 - 2 rho r2
    on a resolution x resolution grid and returns (mu, rho, value) at the
    smallest sample.
    """
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    (mu_lo, mu_hi), (rho_lo, rho_hi) = box
    mu_axis = np.linspace(mu_lo, mu_hi, resolution)
    rho_axis = np.linspace(rho_lo, rho_hi, resolution)
    mu_g, rho_g = np.meshgrid(mu_axis, rho_axis, indexing="ij")
    q = (
        mu_g * mu_g * m.g
        + rho_g * rho_g * m.h
        + 2.0 * mu_g * rho_g * m.ell
        - 2.0 * mu_g * m.r1
        - 2.0 * rho_g * m.r2
    )
    flat = int(np.argmin(q))
    i, j = divmod(flat, resolution)
    return float(mu_axis[i]), float(rho_axis[j]), float(q[i, j])


def finite_diff_subgradient(w: np.ndarray, p: GroupPartition, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the group l1,2 norm.

    Only valid away from the nondifferentiable set: every group norm must
    exceed 10*step, otherwise the difference quotient straddles a kink.
    """
    w = np.asarray(w, dtype=float)
    norms = np.sqrt(np.add.reduceat(w * w, p.starts))
    if np.any(norms <= 10.0 * step):
        raise ValueError("finite differences need all group norms > 10*step")
    grad = np.empty_like(w)
    for i in range(w.size):
        wp = w.copy()
        wm = w.copy()
        wp[i] += step
        wm[i] -= step
        grad[i] = (l12_norm(wp, p) - l12_norm(wm, p)) / (2.0 * step)
    return grad


def _attractor_matrix(W: np.ndarray, p: GroupPartition, mode: AttractorMode | None) -> np.ndarray:
    """Row-wise beta .* s for an (E, L) matrix of weight vectors."""
    if mode is None:
        return np.zeros_like(W)
    norms = np.sqrt(np.add.reduceat(W * W, p.starts, axis=1))
    safe = np.where(norms > ZERO_GROUP_TOL, norms, np.inf)
    if mode.tag == GRZA:
        # combined beta/norm factor; the inf denominator of a zero group
        # divides out to an exact 0 without touching 1/0
        per_group = 1.0 / ((norms + mode.epsilon) * safe)
        return W * np.repeat(per_group, p.sizes, axis=1)
    return W / np.repeat(safe, p.sizes, axis=1)


def _member_samples(input_model, ensemble: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """(ensemble, count) matrix of scalar input samples, one row per member."""
    if isinstance(input_model, WhiteGaussian):
        return rng.normal(0.0, math.sqrt(input_model.variance), size=(ensemble, count))
    if isinstance(input_model, AR1GaussianMixture):
        burn = 1000
        sd = math.sqrt(input_model.sigma_v2)
        total = count + burn
        signs = np.where(rng.random(size=(ensemble, total)) < 0.5, -1.0, 1.0)
        v = input_model.a * sd * signs + rng.normal(0.0, sd, size=(ensemble, total))
        x = lfilter([1.0], [1.0, -input_model.alpha], v, axis=1)
        return x[:, burn:]
    raise TypeError(f"unsupported input model {type(input_model).__name__}")


def _mean_se(samples: np.ndarray) -> tuple[float, float]:
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))


class _EnsemblePass:
    """Batched simulation of `ensemble` independent trajectories.

    Each call to advance() performs one filter update on every member and
    returns the sampled moments seen at that step, paired with the realized
    change in the ensemble tr{Q}.
    """

    def __init__(
        self,
        plant: np.ndarray,
        input_model,
        cfg: FilterConfig,
        sigma_z2: float,
        steps: int,
        ensemble: int,
        seed: int,
        w_init: np.ndarray | None = None,
    ):
        plant = np.asarray(plant, dtype=float)
        L = cfg.L
        if plant.shape != (L,):
            raise ValueError("plant length must match the filter length")
        ss = np.random.SeedSequence(seed)
        x_rng, z_rng = (np.random.default_rng(s) for s in ss.spawn(2))
        x = _member_samples(input_model, ensemble, steps, x_rng)
        padded = np.concatenate([np.zeros((ensemble, L - 1)), x], axis=1)
        # windows[:, t, :] is sample t..t-L+1 oldest-first; reverse on use
        self._windows = np.lib.stride_tricks.sliding_window_view(padded, L, axis=1)
        self._z = z_rng.normal(0.0, math.sqrt(sigma_z2), size=(ensemble, steps))
        if w_init is None:
            W0 = np.zeros((ensemble, L))
        else:
            W0 = np.broadcast_to(np.asarray(w_init, dtype=float), (ensemble, L)).copy()
        self.plant = plant
        self.cfg = cfg
        self.sigma_z2 = sigma_z2
        self.trace_ru = L * stationary_power(input_model)
        self.Wt = W0 - plant  # weight-error rows
        self.ensemble = ensemble
        self.steps = steps
        self.t = 0

    def trq(self) -> float:
        return float(np.einsum("ij,ij->i", self.Wt, self.Wt).mean())

    def sample_moments(self) -> tuple[EnsembleMoments, dict]:
        """Moments at the current step, without advancing."""
        t = self.t
        U = self._windows[:, t, ::-1]
        a = np.einsum("ij,ij->i", self.Wt, U)
        unorm2 = np.einsum("ij,ij->i", U, U)
        BS = _attractor_matrix(self.Wt + self.plant, self.cfg.partition, self.cfg.mode)
        g_samples = self.sigma_z2 * self.trace_ru + a * a * unorm2
        h_samples = np.einsum("ij,ij->i", BS, BS)
        ell_samples = a * np.einsum("ij,ij->i", U, BS)
        r1_samples = a * a
        r2_samples = np.einsum("ij,ij->i", BS, self.Wt)
        vals = [_mean_se(s) for s in (g_samples, h_samples, ell_samples, r1_samples, r2_samples)]
        m = EnsembleMoments(
            g=vals[0][0], h=vals[1][0], ell=vals[2][0], r1=vals[3][0], r2=vals[4][0],
            g_se=vals[0][1], h_se=vals[1][1], ell_se=vals[2][1], r1_se=vals[3][1],
            r2_se=vals[4][1], ensemble=self.ensemble,
        )
        aux = {"U": U, "a": a, "BS": BS}
        return m, aux

    def advance(self, aux: dict) -> None:
        t = self.t
        e = self._z[:, t] - aux["a"]
        self.Wt += (self.cfg.mu * e)[:, None] * aux["U"]
        if self.cfg.rho != 0.0:
            self.Wt -= self.cfg.rho * aux["BS"]
        self.t = t + 1


def ensemble_moments(
    plant: np.ndarray,
    input_model,
    cfg: FilterConfig,
    sigma_z2: float,
    n: int,
    ensemble: int,
    seed: int,
    w_init: np.ndarray | None = None,
) -> EnsembleMoments:
    """Sample the five transient-model moments at iteration n.

    Runs `ensemble` independent trajectories of the configured filter for n
    steps from w_init (zeros by default), then evaluates the moment
    expectations with the true weight error w_n - plant.
    """
    run = _EnsemblePass(plant, input_model, cfg, sigma_z2, n + 1, ensemble, seed, w_init)
    for _ in range(n):
        _, aux = run.sample_moments()
        run.advance(aux)
    m, _ = run.sample_moments()
    return m


@dataclass(frozen=True)
class ModelValidationReport:
    """Per-step comparison of ensemble tr{Q} increments against the model."""

    mu: float
    rho: float
    mode: str
    horizon: int
    ensemble: int
    trq: np.ndarray
    ensemble_increments: np.ndarray
    model_increments: np.ndarray
    rel_deviation: np.ndarray

    @property
    def max_rel_deviation(self) -> float:
        return float(self.rel_deviation.max()) if self.rel_deviation.size else 0.0

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "rho": self.rho,
            "mode": self.mode,
            "horizon": self.horizon,
            "ensemble": self.ensemble,
            "max_rel_deviation": self.max_rel_deviation,
            "trq": self.trq.tolist(),
            "ensemble_increments": self.ensemble_increments.tolist(),
            "model_increments": self.model_increments.tolist(),
            "rel_deviation": self.rel_deviation.tolist(),
        }


def validate_model_recursion(
    plant: np.ndarray,
    input_model: WhiteGaussian,
    cfg: FilterConfig,
    sigma_z2: float,
    horizon: int,
    ensemble: int,
    seed: int,
) -> ModelValidationReport:
    """Check the one-step MSD recursion against a Monte-Carlo ensemble.

    At every step t < horizon the realized change in the ensemble tr{Q} is
    compared with mu^2 g + rho^2 h + 2 mu rho ell - 2 mu r1 - 2 rho r2
    evaluated at that step's sampled moments.  Restricted to white Gaussian
    input: the moment estimators pair exactly with the realized update there,
    so any systematic gap indicates a genuine model or implementation error
    rather than a colored-input artifact.
    """
    if not isinstance(input_model, WhiteGaussian):
        raise TypeError("model validation is defined for white Gaussian input only")
    run = _EnsemblePass(plant, input_model, cfg, sigma_z2, horizon, ensemble, seed)
    trq = np.empty(horizon + 1)
    ens_inc = np.empty(horizon)
    model_inc = np.empty(horizon)
    trq[0] = run.trq()
    mu, rho = cfg.mu, cfg.rho
    for t in range(horizon):
        m, aux = run.sample_moments()
        model_inc[t] = (
            mu * mu * m.g + rho * rho * m.h + 2.0 * mu * rho * m.ell
            - 2.0 * mu * m.r1 - 2.0 * rho * m.r2
        )
        run.advance(aux)
        trq[t + 1] = run.trq()
        ens_inc[t] = trq[t + 1] - trq[t]
    denom = np.maximum(np.abs(model_inc), np.finfo(float).tiny)
    rel = np.abs(ens_inc - model_inc) / denom
    mode = cfg.mode.tag if cfg.mode is not None else "lms"
    return ModelValidationReport(
        mu=mu, rho=rho, mode=mode, horizon=horizon, ensemble=ensemble,
        trq=trq, ensemble_increments=ens_inc, model_increments=model_inc,
        rel_deviation=rel,
    )
