"""Transition kernels of the monotone flows.

Four flow variants share one interface.  ``polya_sum`` and
``cox_mixture`` run on the clock t in [0, 1) where the state at time t
is a condensation of the terminal regime; ``poisson`` and
``polya_difference`` run on [0, inf).  Forward kernels add an
independent increment on top of the current state, backward kernels
thin the later state, and ``split_posterior`` carries the environment
disintegration for Cox flows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (
    CellMeasure,
    PointConfig,
    _measure_unchecked,
    cell_counts,
    config_diff,
    config_leq,
    empty_config,
)
from .samplers import (
    PolyaParams,
    as_generator,
    sample_poisson_process,
    sample_polya_sum,
    thin,
)

__all__ = [
    "TMAX",
    "VARIANTS",
    "FlowSpec",
    "CoxPosterior",
    "gamma_param",
    "gamma_param_difference",
    "forward_increment",
    "backward_thin",
    "split_posterior",
    "rho_config",
]

# largest admissible time for flows on [0, 1); keeps 1/(1-t) finite
TMAX = 1.0 - 1e-6

VARIANTS = ("polya_sum", "poisson", "polya_difference", "cox_mixture")
_UNIT_HORIZON = ("polya_sum", "cox_mixture")


def gamma_param(z: float, q: float) -> float:
    """Parameter of a q-thinned Polya sum process: z q / (1 - z (1 - q))."""
    if not (0.0 < z < 1.0):
        raise ValueError(f"z must be in (0, 1), got {z}")
    if not (0.0 < q <= 1.0):
        raise ValueError(f"q must be in (0, 1], got {q}")
    return z * q / (1.0 - z * (1.0 - q))


def gamma_param_difference(z: float, q: float) -> float:
    """Parameter of a q-thinned Polya difference process: z q / (1 + z (1 - q))."""
    if not z > 0.0:
        raise ValueError(f"z must be > 0, got {z}")
    if not (0.0 < q <= 1.0):
        raise ValueError(f"q must be in (0, 1], got {q}")
    return z * q / (1.0 + z * (1.0 - q))


@dataclass(frozen=True)
class FlowSpec:
    """Static description of one flow.

    Fields
    ------
    variant : one of VARIANTS.
    rho : CellMeasure
        Shape measure.  For polya_difference the masses must be
        integers (they form the base configuration); for a finite Cox
        mixture only the window is used.
    z : float
        Base parameter for polya_difference thinning identities;
        unused by the other variants.
    mixture : optional tuple of (weight, CellMeasure)
        Finite mixture of deterministic environments (cox_mixture).
    gamma_rate : optional float
        Rate of the Gamma-conjugate environment (cox_mixture): the
        directing measure puts independent Gamma(rho_i, gamma_rate)
        mass on each cell.  Exactly one of mixture / gamma_rate must
        be given for cox_mixture.
    """

    variant: str
    rho: CellMeasure
    z: float = 0.5
    mixture: tuple | None = None
    gamma_rate: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.variant == "cox_mixture":
            if (self.mixture is None) == (self.gamma_rate is None):
                raise ValueError("cox_mixture requires exactly one of mixture / gamma_rate")
            if self.mixture is not None:
                weights = np.array([w for w, _ in self.mixture], dtype=float)
                if weights.size == 0 or np.any(weights <= 0.0):
                    raise ValueError("mixture weights must be positive")
                if abs(weights.sum() - 1.0) > 1e-9:
                    raise ValueError(f"mixture weights must sum to 1, got {weights.sum()}")
                for _, lam in self.mixture:
                    if lam.window != self.rho.window:
                        raise ValueError("mixture intensity window mismatch")
            if self.gamma_rate is not None and not self.gamma_rate > 0.0:
                raise ValueError(f"gamma_rate must be > 0, got {self.gamma_rate}")
        else:
            if self.mixture is not None or self.gamma_rate is not None:
                raise ValueError(f"{self.variant} takes neither mixture nor gamma_rate")
        if self.variant in ("polya_sum",) and self.rho.total() <= 0.0:
            raise ValueError("polya_sum requires rho with positive total mass")
        if self.variant == "polya_difference":
            if not math.isfinite(self.z) and not math.isinf(self.z):
                raise ValueError(f"invalid base parameter z = {self.z}")
            if math.isfinite(self.z) and self.z <= 0.0:
                raise ValueError(f"polya_difference base parameter must be > 0, got {self.z}")
            masses = self.rho.masses
            if np.any(np.abs(masses - np.round(masses)) > 1e-9) or masses.sum() < 1:
                raise ValueError("polya_difference requires integer rho masses, total >= 1")

    @property
    def horizon(self) -> tuple[float, float]:
        """Admissible time interval (closed at 0, open at the right end)."""
        if self.variant in _UNIT_HORIZON:
            return (0.0, 1.0)
        return (0.0, math.inf)

    def validate_time(self, t: float) -> None:
        if not (isinstance(t, (int, float)) and math.isfinite(t)):
            raise ValueError(f"time must be finite, got {t}")
        if t < 0.0:
            raise ValueError(f"time must be >= 0, got {t}")
        if self.variant in _UNIT_HORIZON and t > TMAX:
            raise ValueError(f"time {t} exceeds horizon bound {TMAX} for {self.variant}")


def rho_config(spec: FlowSpec) -> PointConfig:
    """Base configuration of a polya_difference flow: rho placed at cell midpoints."""
    if spec.variant != "polya_difference":
        raise ValueError(f"rho_config is defined for polya_difference, not {spec.variant}")
    window = spec.rho.window
    mults = np.round(spec.rho.masses).astype(np.int64)
    keep = mults > 0
    mids = window.lo + (np.arange(window.cells) + 0.5) * window.width
    return PointConfig(window, mids[keep], mults[keep])


@dataclass(frozen=True)
class CoxPosterior:
    """Posterior of the directing environment given an observed configuration."""

    weights: tuple | None = None
    gamma_shape: tuple | None = None
    gamma_rate: float | None = None


def split_posterior(
    spec: FlowSpec, p: float, observed: PointConfig, exposure: float = 1.0
) -> CoxPosterior:
    """Environment posterior after observing a p-thinning of the condensed regime.

    ``observed`` counts are Poisson with per-cell mean exposure * lambda
    under each candidate environment; exposure defaults to 1, the base
    level of the flow (observation at time 0), and equals 1/(1-s) for
    an observation at time s.
    """
    if spec.variant != "cox_mixture":
        raise ValueError(f"split_posterior requires cox_mixture, got {spec.variant}")
    if not (0.0 < p < 1.0):
        raise ValueError(f"thinning probability must be in (0, 1), got {p}")
    if not (math.isfinite(exposure) and exposure > 0.0):
        raise ValueError(f"exposure must be finite and > 0, got {exposure}")
    counts = cell_counts(observed)
    if spec.mixture is not None:
        log_post = np.empty(len(spec.mixture))
        for k, (w, lam) in enumerate(spec.mixture):
            mean = exposure * lam.masses
            with np.errstate(divide="ignore", invalid="ignore"):
                ll = np.where(counts > 0, counts * np.log(mean), 0.0) - mean
            log_post[k] = math.log(w) + ll.sum()
        log_post -= log_post.max()
        post = np.exp(log_post)
        post /= post.sum()
        if not np.all(np.isfinite(post)):
            raise ValueError("observed configuration impossible under every component")
        return CoxPosterior(weights=tuple(float(w) for w in post))
    shape = spec.rho.masses + counts
    return CoxPosterior(
        gamma_shape=tuple(float(a) for a in shape),
        gamma_rate=float(spec.gamma_rate + exposure),
    )


def _sample_environment(spec: FlowSpec, posterior: CoxPosterior, g) -> np.ndarray:
    if posterior.weights is not None:
        k = int(g.choice(len(posterior.weights), p=posterior.weights))
        return spec.mixture[k][1].masses
    shape = np.asarray(posterior.gamma_shape)
    return g.gamma(shape) / posterior.gamma_rate


def forward_increment(
    spec: FlowSpec, s: float, t: float, state: PointConfig, rng
) -> PointConfig:
    """Sample the conditional increment of the flow between times s < t."""
    spec.validate_time(s)
    spec.validate_time(t)
    if not s < t:
        raise ValueError(f"forward step requires s < t, got s={s}, t={t}")
    if state.window != spec.rho.window:
        raise ValueError("state window does not match the flow window")
    g = as_generator(rng)

    if spec.variant == "polya_sum":
        z_inc = (t - s) / (1.0 - s)
        base = _measure_unchecked(spec.rho.window, spec.rho.masses + cell_counts(state))
        return sample_polya_sum(PolyaParams(z_inc, base), g)

    if spec.variant == "poisson":
        return sample_poisson_process(spec.rho.scaled(t - s), g)

    if spec.variant == "polya_difference":
        base = rho_config(spec)
        if not config_leq(state, base):
            raise ValueError("polya_difference state must stay below the rho configuration")
        remaining = config_diff(base, state)
        return thin(remaining, (t - s) / (1.0 + t), g)

    # cox_mixture: disintegrate over the environment, then Poisson increment
    posterior = split_posterior(
        spec, p=(1.0 - t) / (1.0 - s), observed=state, exposure=1.0 / (1.0 - s)
    )
    lam = _sample_environment(spec, posterior, g)
    scale = (t - s) / ((1.0 - s) * (1.0 - t))
    return sample_poisson_process(_measure_unchecked(spec.rho.window, scale * lam), g)


def _backward_retention(spec: FlowSpec, s: float, t: float) -> float:
    if spec.variant == "polya_sum":
        return s * (1.0 - t) / (t * (1.0 - s))
    if spec.variant == "cox_mixture":
        return (1.0 - t) / (1.0 - s)
    if spec.variant == "poisson":
        return s / t
    return s * (1.0 + t) / (t * (1.0 + s))  # polya_difference


def backward_thin(spec: FlowSpec, s: float, t: float, state: PointConfig, rng) -> PointConfig:
    """Resample the time-s state by thinning the time-t state."""
    spec.validate_time(s)
    spec.validate_time(t)
    if s > t:
        raise ValueError(f"backward step requires s <= t, got s={s}, t={t}")
    if state.window != spec.rho.window:
        raise ValueError("state window does not match the flow window")
    if s == t:
        return state
    if s == 0.0 and spec.variant != "cox_mixture":
        return empty_config(state.window)
    return thin(state, _backward_retention(spec, s, t), rng)
