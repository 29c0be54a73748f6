"""Path simulation, backward resampling, exit limits, and the exact oracle.

Forward paths are built by iterated conditional increments, so every
path is monotone by construction; the module still asserts
``states[k] <= states[k+1]`` at each step and keeps a global tally of
checked steps, which the acceptance suite reads.

The enumeration side (`DiscreteModel`) reproduces the same flows on a
small discrete state space with truncated exact pmfs.  It provides the
semigroup, iterated reduced Palm distributions, and the pointwise
generator formula

    A_s phi(nu) = [ sum_x palm(one point at x) (phi(nu + x) - phi(nu)) ]
                  / ( (1 - s) * palm(empty) )

where palm is the reduced Palm distribution of the time-s marginal at
nu.  That formula is exact for the Cox clock, the one whose state at
time s is a (1-s)-condensation of a fixed base process; on the
standard Polya clock the same expression differs from the semigroup
derivative by the clock-change factor z(s), which `verify` measures
and reports rather than absorbs.
"""

from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .kernels import TMAX, FlowSpec, backward_thin, forward_increment
from .measures import (
    CellMeasure,
    PointConfig,
    cell_counts,
    config_leq,
    empty_config,
    superpose,
)
from .samplers import as_generator, sample_poisson_process, thin

__all__ = [
    "MonotonicityError",
    "NumericError",
    "Path",
    "simulate_path",
    "backward_resample",
    "exit_limit",
    "sample_extremal_flow",
    "monotone_counters",
    "reset_monotone_counters",
    "DiscreteModel",
    "semigroup_apply",
    "reduced_palm_enumerate",
    "generator_apply",
]


class MonotonicityError(RuntimeError):
    """A simulated path violated the pathwise partial order."""


class NumericError(RuntimeError):
    """Truncation or normalization failure in the enumeration oracle."""


_mono_lock = threading.Lock()
_mono_steps = 0
_mono_violations = 0


def monotone_counters() -> tuple[int, int]:
    """(steps checked, violations) accumulated since the last reset."""
    with _mono_lock:
        return _mono_steps, _mono_violations


def reset_monotone_counters() -> None:
    global _mono_steps, _mono_violations
    with _mono_lock:
        _mono_steps = 0
        _mono_violations = 0


def _assert_monotone(lower: PointConfig, upper: PointConfig) -> None:
    global _mono_steps, _mono_violations
    ok = config_leq(lower, upper)
    with _mono_lock:
        _mono_steps += 1
        if not ok:
            _mono_violations += 1
    if not ok:
        raise MonotonicityError("path step violated the configuration partial order")


@dataclass(frozen=True)
class Path:
    """A realized flow on a finite time grid."""

    grid: tuple
    states: tuple
    variant: str

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.states):
            raise ValueError("grid and states must have equal length")
        if len(self.grid) > 1 and any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid times must be strictly increasing")

    def counts(self) -> np.ndarray:
        """Per-cell counts of each state, shape (len(grid), cells)."""
        return np.array([cell_counts(s) for s in self.states], dtype=np.int64)


def _validate_grid(spec: FlowSpec, grid) -> tuple:
    grid = tuple(float(t) for t in grid)
    for t in grid:
        spec.validate_time(t)
    if len(grid) > 1 and any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"grid must be strictly increasing, got {grid}")
    return grid


def _initial_state(spec: FlowSpec, g) -> PointConfig:
    """State at time 0: the base process for cox_mixture, empty otherwise."""
    if spec.variant != "cox_mixture":
        return empty_config(spec.rho.window)
    if spec.mixture is not None:
        weights = [w for w, _ in spec.mixture]
        k = int(g.choice(len(weights), p=weights))
        lam = spec.mixture[k][1].masses
    else:
        lam = g.gamma(spec.rho.masses) / spec.gamma_rate
    return sample_poisson_process(CellMeasure(spec.rho.window, lam), g)


def simulate_path(spec: FlowSpec, grid, rng) -> Path:
    """Run the flow forward over a strictly increasing time grid."""
    grid = _validate_grid(spec, grid)
    g = as_generator(rng)
    if not grid:
        return Path((), (), spec.variant)
    current = _initial_state(spec, g)
    current_t = 0.0
    states = []
    for t in grid:
        if t > current_t:
            increment = forward_increment(spec, current_t, t, current, g)
            nxt = superpose(current, increment)
            _assert_monotone(current, nxt)
            current, current_t = nxt, t
        states.append(current)
    return Path(grid, tuple(states), spec.variant)


def backward_resample(spec: FlowSpec, path: Path, pivot_index: int, rng) -> Path:
    """Regenerate states before the pivot by successive backward thinning."""
    if not 0 <= pivot_index < len(path.grid):
        raise ValueError(f"pivot index {pivot_index} out of range")
    if path.variant != spec.variant:
        raise ValueError("path variant does not match the flow spec")
    if pivot_index == 0:
        return path
    g = as_generator(rng)
    states = list(path.states)
    for k in range(pivot_index - 1, -1, -1):
        resampled = backward_thin(spec, path.grid[k], path.grid[k + 1], states[k + 1], g)
        _assert_monotone(resampled, states[k + 1])
        states[k] = resampled
    return Path(path.grid, tuple(states), path.variant)


def exit_limit(path: Path) -> CellMeasure:
    """Scaled terminal state estimating the exit-space environment.

    [0,1)-horizon variants scale counts by (1 - t_last); the poisson
    variant divides by t_last; polya_difference returns raw counts.
    """
    if not path.grid:
        raise ValueError("exit_limit requires a nonempty path")
    t_last = path.grid[-1]
    terminal = path.states[-1]
    counts = cell_counts(terminal).astype(np.float64)
    if path.variant in ("polya_sum", "cox_mixture"):
        return CellMeasure(terminal.window, (1.0 - t_last) * counts)
    if path.variant == "poisson":
        if t_last <= 0.0:
            raise ValueError("poisson exit limit requires t_last > 0")
        return CellMeasure(terminal.window, counts / t_last)
    return CellMeasure(terminal.window, counts)  # polya_difference


def sample_extremal_flow(nu: CellMeasure, grid, rng, clock: str = "polya") -> Path:
    """Flow conditioned on exit environment nu: Poisson terminal state,
    earlier states by successive backward thinning.

    clock "polya" places Poisson(t/(1-t) nu) at the terminal time with
    polya_sum backward retentions; clock "cox" uses Poisson(nu/(1-t))
    with condensation retentions (1-t')/(1-t).
    """
    if clock not in ("polya", "cox"):
        raise ValueError(f"clock must be 'polya' or 'cox', got {clock}")
    grid = tuple(float(t) for t in grid)
    if not grid:
        return Path((), (), "polya_sum" if clock == "polya" else "cox_mixture")
    arr = np.asarray(grid)
    if np.any(arr < 0.0) or np.any(arr > TMAX) or (arr.size > 1 and np.any(np.diff(arr) <= 0)):
        raise ValueError(f"grid must be strictly increasing within [0, {TMAX}], got {grid}")
    g = as_generator(rng)
    t_n = grid[-1]
    if clock == "polya":
        scale = t_n / (1.0 - t_n)
        variant = "polya_sum"
    else:
        scale = 1.0 / (1.0 - t_n)
        variant = "cox_mixture"
    states = [None] * len(grid)
    states[-1] = sample_poisson_process(nu.scaled(scale), g)
    for k in range(len(grid) - 2, -1, -1):
        s, t = grid[k], grid[k + 1]
        if clock == "polya":
            r = 0.0 if s == 0.0 else s * (1.0 - t) / (t * (1.0 - s))
        else:
            r = (1.0 - t) / (1.0 - s)
        states[k] = thin(states[k + 1], r, g)
        _assert_monotone(states[k], states[k + 1])
    return Path(grid, tuple(states), variant)


# ---------------------------------------------------------------------------
# exact enumeration oracle
# ---------------------------------------------------------------------------

_HARD_ENUM_CAP = 100_000


def _nb_pmf(shape: float, z: float, n: int) -> np.ndarray:
    """pmf vector of NB(shape, z) on 0..n; shape 0 and z 0 degenerate at 0."""
    out = np.zeros(n + 1)
    if shape == 0.0 or z == 0.0:
        out[0] = 1.0
        return out
    return stats.nbinom.pmf(np.arange(n + 1), shape, 1.0 - z)


def _nb_tail(shape: float, z: float, n: int) -> float:
    if shape == 0.0 or z == 0.0:
        return 0.0
    return float(stats.nbinom.sf(n, shape, 1.0 - z))


@dataclass(frozen=True)
class DiscreteModel:
    """Small discrete state space with exactly enumerable laws.

    The marginal count law at time t is a product over cells of
    NB(rho_i, z(t)) where the clock map z(t) distinguishes the two
    [0,1)-horizon flows:

    - clock "polya": z(t) = t (flow started at the empty state),
    - clock "cox":   z(t) = z0 / (z0 + (1-t)(1-z0)) (flow started at
      the base process with parameter z0, so the time-s state is a
      (1-s)-condensation of it),
    - clock "poisson": fixed product Poisson(rho) reference law, used
      only by the Palm oracle.

    Truncation at max_count is validated a priori from closed-form NB
    tails; any operation whose tail mass at the requested parameters
    exceeds tail_tol raises NumericError instead of silently clipping.
    """

    rho: tuple
    max_count: int = 40
    clock: str = "polya"
    z0: float = 0.5
    tail_tol: float = 1e-10
    check_times: tuple = field(default=())

    def __post_init__(self) -> None:
        if not 1 <= len(self.rho) <= 3:
            raise ValueError("DiscreteModel supports 1 to 3 cells")
        if any(r < 0.0 for r in self.rho) or sum(self.rho) <= 0.0:
            raise ValueError("rho masses must be >= 0 with positive total")
        if self.max_count < 2:
            raise ValueError("max_count must be >= 2")
        if self.clock not in ("polya", "cox", "poisson"):
            raise ValueError(f"unknown clock {self.clock!r}")
        if not (0.0 < self.z0 < 1.0):
            raise ValueError(f"z0 must be in (0, 1), got {self.z0}")
        for t in self.check_times:
            z = self.marginal_z(t)
            for r in self.rho:
                if _nb_tail(r, z, self.max_count) >= self.tail_tol:
                    raise NumericError(
                        f"truncation bound violated at t={t}: increase max_count"
                    )

    @property
    def cells(self) -> int:
        return len(self.rho)

    def marginal_z(self, t: float) -> float:
        if not (0.0 <= t <= TMAX):
            raise ValueError(f"time must lie in [0, {TMAX}], got {t}")
        if self.clock == "polya":
            return t
        if self.clock == "cox":
            return self.z0 / (self.z0 + (1.0 - t) * (1.0 - self.z0))
        raise ValueError("the poisson reference model has no clock map")

    def marginal_pmf(self, t: float | None = None) -> np.ndarray:
        """Truncated joint pmf over count vectors, shape (max_count+1,)^cells."""
        vecs = []
        for r in self.rho:
            if self.clock == "poisson":
                vec = stats.poisson.pmf(np.arange(self.max_count + 1), r)
                tail = float(stats.poisson.sf(self.max_count, r)) if r > 0 else 0.0
            else:
                z = self.z0 if t is None else self.marginal_z(t)
                vec = _nb_pmf(r, z, self.max_count)
                tail = _nb_tail(r, z, self.max_count)
            if tail >= self.tail_tol:
                raise NumericError(
                    f"truncation bound violated (tail {tail:.2e} >= {self.tail_tol:.0e})"
                )
            vecs.append(vec)
        return functools.reduce(np.multiply.outer, vecs)


def semigroup_apply(model: DiscreteModel, s: float, t: float, phi):
    """Exact semigroup: returns nu -> E[phi(nu + increment)].

    The increment between s and t is a product of per-cell NB pmfs
    with shapes rho_i + nu_i and parameter (z(t) - z(s)) / (1 - z(s));
    on the polya clock that parameter is (t - s)/(1 - s).  Enumeration
    bounds are chosen per call so the neglected tail mass stays below
    tail_tol.
    """
    if model.clock == "poisson":
        raise ValueError("semigroup_apply requires a polya or cox clock model")
    if not s <= t:
        raise ValueError(f"semigroup requires s <= t, got ({s}, {t})")
    zs, zt = model.marginal_z(s), model.marginal_z(t)
    u = (zt - zs) / (1.0 - zs)

    def apply(nu) -> float:
        nu_vec = np.asarray(nu, dtype=np.int64).reshape(model.cells)
        if np.any(nu_vec < 0):
            raise ValueError("count vectors must be nonnegative")
        if u == 0.0:
            return float(phi(nu_vec))
        pmfs = []
        for i in range(model.cells):
            shape = model.rho[i] + nu_vec[i]
            if shape == 0.0:
                pmfs.append(np.ones(1))
                continue
            bound = int(stats.nbinom.isf(model.tail_tol, shape, 1.0 - u)) + 1
            if bound > _HARD_ENUM_CAP:
                raise NumericError(f"increment enumeration bound {bound} too large")
            pmfs.append(_nb_pmf(shape, u, bound))
        total = 0.0
        for delta in np.ndindex(*(p.size for p in pmfs)):
            w = 1.0
            for i, d in enumerate(delta):
                w *= pmfs[i][d]
            total += w * phi(nu_vec + np.asarray(delta, dtype=np.int64))
        return float(total)

    return apply


def _palm_once(pmf: np.ndarray, axis: int) -> np.ndarray:
    """One reduced Palm step at a point in cell `axis`:
    new(mu) proportional to (mu_axis + 1) * pmf(mu + e_axis)."""
    k = pmf.shape[axis] - 1
    moved = np.take(pmf, np.arange(1, k + 1), axis=axis)
    w_shape = [1] * pmf.ndim
    w_shape[axis] = k
    weights = np.arange(1, k + 1, dtype=np.float64).reshape(w_shape)
    out = np.zeros_like(pmf)
    slicer = [slice(None)] * pmf.ndim
    slicer[axis] = slice(0, k)
    out[tuple(slicer)] = moved * weights
    norm = out.sum()
    if norm <= 0.0:
        raise NumericError("reduced Palm normalizer vanished")
    return out / norm


def reduced_palm_enumerate(
    model: DiscreteModel, nu, t: float | None = None
) -> np.ndarray:
    """Iterated reduced Palm distribution of the marginal law at nu.

    Returns the pmf array over count vectors after conditioning on one
    point per unit of nu; t = None uses the model's reference law
    (parameter z0, or the Poisson reference).
    """
    nu_vec = np.asarray(nu, dtype=np.int64).reshape(model.cells)
    if np.any(nu_vec < 0):
        raise ValueError("count vectors must be nonnegative")
    pmf = model.marginal_pmf(t)
    for axis in np.repeat(np.arange(model.cells), nu_vec):
        pmf = _palm_once(pmf, int(axis))
    return pmf


def generator_apply(model: DiscreteModel, s: float, phi, nu) -> float:
    """Pointwise generator via the Palm-kernel formula (see module docstring).

    Both the void probability and the one-point masses are read off
    the enumerated reduced Palm distribution of the time-s marginal.
    """
    if model.clock == "poisson":
        raise ValueError("generator_apply requires a polya or cox clock model")
    nu_vec = np.asarray(nu, dtype=np.int64).reshape(model.cells)
    palm = reduced_palm_enumerate(model, nu_vec, t=s)
    void = float(palm[(0,) * model.cells])
    if void <= 0.0:
        raise NumericError("void probability of the reduced Palm law vanished")
    phi0 = float(phi(nu_vec))
    acc = 0.0
    for i in range(model.cells):
        idx = [0] * model.cells
        idx[i] = 1
        one_point = float(palm[tuple(idx)])
        if one_point == 0.0:
            continue
        e_i = np.zeros(model.cells, dtype=np.int64)
        e_i[i] = 1
        acc += one_point * (float(phi(nu_vec + e_i)) - phi0)
    return acc / ((1.0 - s) * void)
