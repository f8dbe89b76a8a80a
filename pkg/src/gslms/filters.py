"""Adaptive filter update engines.

Plain LMS and the group zero-attracting variants (uniform and reweighted)
share a single update path: per step the caller supplies the step size and
shrinkage parameter, so fixed-parameter and variable-parameter operation
cannot drift apart.  Setting the shrinkage parameter to zero reduces every
mode to plain LMS bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from .groups import AttractorMode, GroupPartition, attractor_term

__all__ = [
    "DivergenceError",
    "FilterConfig",
    "FilterState",
    "initial_state",
    "predict",
    "step",
    "run_sequence",
]

# Hook signature: (state, u, error) -> (mu_n, rho_n), queried before each
# update when a config runs with variable parameters.
ParamSource = Callable[["FilterState", np.ndarray, float], tuple[float, float]]


class DivergenceError(RuntimeError):
    """Raised when the weight vector leaves the finite range."""

    def __init__(self, iteration: int):
        super().__init__(f"filter diverged (non-finite weights) at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class FilterConfig:
    """Static description of one adaptive filter.

    ``mode is None`` selects plain LMS; otherwise the attractor mode picks
    the uniform or reweighted group attractor.  ``mu``/``rho`` are the
    fixed-parameter values; they are ignored when ``variable_params`` is set
    and a parameter source drives the run instead.
    """

    L: int
    partition: GroupPartition
    mode: Optional[AttractorMode] = None
    mu: float = 0.0
    rho: float = 0.0
    variable_params: bool = False

    def __post_init__(self):
        if self.partition.L != self.L:
            raise ValueError(
                f"partition covers {self.partition.L} coefficients, filter has {self.L}"
            )
        if self.mu < 0 or self.rho < 0:
            raise ValueError("mu and rho must be non-negative")


@dataclass(frozen=True)
class FilterState:
    """Weight estimate after ``n`` updates plus the last estimation error."""

    w: np.ndarray
    n: int = 0
    last_error: float = 0.0


def initial_state(L: int) -> FilterState:
    """All-zero starting point."""
    return FilterState(w=np.zeros(L), n=0, last_error=0.0)


def predict(state: FilterState, u: np.ndarray) -> float:
    """Filter output ``w^T u`` for the current weights."""
    if u.shape != state.w.shape:
        raise ValueError(f"regressor shape {u.shape} != weight shape {state.w.shape}")
    return float(np.dot(state.w, u))


def step(
    state: FilterState,
    cfg: FilterConfig,
    u: np.ndarray,
    d: float,
    mu_n: float,
    rho_n: float,
) -> FilterState:
    """One adaptive update with the supplied step size and shrinkage.

    Computes the estimation error ``e = d - w^T u`` and applies
    ``w <- w + mu_n e u - rho_n (beta o s)`` where the attractor product is
    evaluated at the current weights.  Plain-LMS configs (and ``rho_n == 0``)
    skip the attractor term entirely, which is bit-identical to subtracting
    a zero multiple of it.
    """
    if u.shape[0] != cfg.L:
        raise ValueError(f"regressor length {u.shape[0]} != filter length {cfg.L}")
    if mu_n < 0 or rho_n < 0:
        raise ValueError("per-step mu and rho must be non-negative")
    e = np.dot(state.w, u)
    e = d - e
    w_next = state.w + (mu_n * e) * u
    if rho_n != 0.0 and cfg.mode is not None:
        w_next -= rho_n * attractor_term(state.w, cfg.partition, cfg.mode)
    if not math.isfinite(w_next.sum()):
        raise DivergenceError(state.n)
    return FilterState(w=w_next, n=state.n + 1, last_error=float(e))


def run_sequence(
    cfg: FilterConfig,
    samples: Iterable[tuple[np.ndarray, float]],
    param_source: Optional[ParamSource] = None,
) -> Iterator[FilterState]:
    """Fold :func:`step` over a stream of ``(u, d)`` pairs.

    Yields the state after each update.  With ``variable_params`` set, the
    parameter source is queried before every update with the current state,
    regressor and estimation error; otherwise the config's fixed ``mu`` and
    ``rho`` apply throughout.  Divergence aborts the stream with the
    iteration index attached.
    """
    if cfg.variable_params and param_source is None:
        raise ValueError("variable-parameter run needs a parameter source")
    state = initial_state(cfg.L)
    mu_n, rho_n = cfg.mu, cfg.rho
    for u, d in samples:
        if param_source is not None:
            e = d - np.dot(state.w, u)
            mu_n, rho_n = param_source(state, u, float(e))
        state = step(state, cfg, u, d, mu_n, rho_n)
        yield state
