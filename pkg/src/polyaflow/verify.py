"""Statistical and exact checkers for the distributional identities.

Conventions shared by every checker:

- chi-square bins are pooled deterministically so each expected count
  is at least 5; the two-sample variant pools both samples identically
  using the combined counts;
- moment identities (Mecke, duality) are reported as |mean difference|
  against 3 combined standard errors, with paired samples whenever the
  two sides can share draws;
- test functions over counts or masses take (cell, batch) arguments:
  ``h(i, x)`` where x has shape (..., cells), returning an array of
  the batch shape, so checkers can stay vectorized.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .flows import DiscreteModel, NumericError, semigroup_apply, simulate_path
from .kernels import FlowSpec, backward_thin, forward_increment
from .measures import (
    CellMeasure,
    StepFunction,
    cell_counts,
    config_integrate,
    superpose,
)
from .samplers import PolyaParams, as_generator, sample_polya_sum

__all__ = [
    "TestReport",
    "chi_square_counts",
    "laplace_mc",
    "laplace_poisson_exact",
    "laplace_polya_exact",
    "mecke_check_polya",
    "mecke_check_polya_exact",
    "mecke_check_gamma",
    "duality_check",
    "duality_check_exact",
]

_MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class TestReport:
    """Outcome of one verification check.

    Exactly one of p_value / max_abs_error is set; ``passed`` is
    derived (p_value > threshold, or max_abs_error < threshold).
    """

    __test__ = False  # not a pytest collection target despite the name

    name: str
    statistic: float
    n_samples: int
    threshold: float
    seed: int
    passed: bool
    p_value: float | None = None
    max_abs_error: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.p_value is None) == (self.max_abs_error is None):
            raise ValueError("exactly one of p_value / max_abs_error must be set")
        expect = (
            self.p_value > self.threshold
            if self.p_value is not None
            else self.max_abs_error < self.threshold
        )
        if self.passed != expect:
            raise ValueError("passed flag inconsistent with threshold rule")

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "statistic": self.statistic,
            "n_samples": self.n_samples,
            "threshold": self.threshold,
            "seed": self.seed,
            "passed": self.passed,
        }
        if self.p_value is not None:
            out["p_value"] = self.p_value
        if self.max_abs_error is not None:
            out["max_abs_error"] = self.max_abs_error
        if self.details:
            out["details"] = dict(sorted(self.details.items()))
        return out


def report_p(name, statistic, p_value, n_samples, threshold, seed, details=None):
    return TestReport(
        name=name,
        statistic=float(statistic),
        n_samples=int(n_samples),
        threshold=float(threshold),
        seed=int(seed),
        passed=bool(p_value > threshold),
        p_value=float(p_value),
        details=details or {},
    )


def report_err(name, max_abs_error, threshold, n_samples, seed, details=None):
    return TestReport(
        name=name,
        statistic=float(max_abs_error),
        n_samples=int(n_samples),
        threshold=float(threshold),
        seed=int(seed),
        passed=bool(max_abs_error < threshold),
        max_abs_error=float(max_abs_error),
        details=details or {},
    )


def _as_count_matrix(samples) -> np.ndarray:
    arr = np.asarray(samples)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("samples must be an (n,) or (n, cells) integer array")
    return arr


def _pmf_to_dict(pmf) -> dict:
    if isinstance(pmf, dict):
        return {tuple(np.atleast_1d(k)): float(v) for k, v in pmf.items()}
    arr = np.asarray(pmf, dtype=float)
    return {idx: float(arr[idx]) for idx in np.ndindex(arr.shape) if arr[idx] > 0.0}


def _observed_by_key(arr: np.ndarray) -> dict:
    uniq, counts = np.unique(arr, axis=0, return_counts=True)
    return {tuple(int(v) for v in row): int(c) for row, c in zip(uniq, counts)}


def chi_square_counts(samples, reference, *, name, alpha=0.01, seed=0) -> TestReport:
    """Pearson chi-square of count vectors against an exact pmf or a second sample.

    ``reference`` is a pmf (dict keyed by count tuples, or a float
    array indexed by counts) for the one-sample test, or a second
    integer sample for the homogeneity test.  Bins with expected count
    below 5 are pooled into a shared tail bin.
    """
    obs = _as_count_matrix(samples)
    n = obs.shape[0]
    if n < 1000:
        raise ValueError(f"chi-square requires n >= 1000 samples, got {n}")
    if isinstance(reference, dict) or (
        isinstance(reference, np.ndarray) and np.issubdtype(np.asarray(reference).dtype, np.floating)
    ):
        return _chi_square_exact(obs, _pmf_to_dict(reference), name, alpha, seed)
    ref = _as_count_matrix(reference)
    if ref.shape[0] < 1000:
        raise ValueError(f"chi-square requires n >= 1000 samples, got {ref.shape[0]}")
    if ref.shape[1] != obs.shape[1]:
        raise ValueError("samples must have the same number of cells")
    return _chi_square_two_sample(obs, ref, name, alpha, seed)


def _chi_square_exact(obs, pmf, name, alpha, seed) -> TestReport:
    n = obs.shape[0]
    observed = _observed_by_key(obs)
    keys = sorted(pmf)
    kept, tail_exp, tail_obs = [], 0.0, 0
    leftover_prob = max(0.0, 1.0 - sum(pmf.values()))
    tail_exp += n * leftover_prob
    known = set(keys)
    for key, cnt in observed.items():
        if key not in known:
            tail_obs += cnt
    for key in keys:
        exp = n * pmf[key]
        if exp >= _MIN_EXPECTED:
            kept.append((key, exp, observed.get(key, 0)))
        else:
            tail_exp += exp
            tail_obs += observed.get(key, 0)
    # fold an undersized tail into the smallest retained bin
    while kept and 0.0 < tail_exp < _MIN_EXPECTED:
        kept.sort(key=lambda kv: (kv[1], kv[0]))
        key, exp, cnt = kept.pop(0)
        tail_exp += exp
        tail_obs += cnt
    bins = [(exp, cnt) for _, exp, cnt in kept]
    if tail_exp > 0.0:
        bins.append((tail_exp, tail_obs))
    if len(bins) < 2:
        raise ValueError("chi-square is degenerate: fewer than two usable bins")
    exp_arr = np.array([b[0] for b in bins])
    obs_arr = np.array([b[1] for b in bins], dtype=float)
    stat = float(np.sum((obs_arr - exp_arr) ** 2 / exp_arr))
    df = len(bins) - 1
    p = float(stats.chi2.sf(stat, df))
    return report_p(name, stat, p, n, alpha, seed, details={"df": df, "bins": len(bins)})


def _chi_square_two_sample(a, b, name, alpha, seed) -> TestReport:
    na, nb = a.shape[0], b.shape[0]
    total = na + nb
    ca, cb = _observed_by_key(a), _observed_by_key(b)
    keys = sorted(set(ca) | set(cb))
    # pooling by combined counts keeps both expected rows above the floor
    floor = _MIN_EXPECTED * total / min(na, nb)
    kept, tail_a, tail_b = [], 0, 0
    for key in keys:
        xa, xb = ca.get(key, 0), cb.get(key, 0)
        if xa + xb >= floor:
            kept.append((xa, xb))
        else:
            tail_a += xa
            tail_b += xb
    if tail_a + tail_b > 0:
        kept.append((tail_a, tail_b))
    if len(kept) < 2:
        raise ValueError("chi-square is degenerate: fewer than two usable bins")
    table = np.array(kept, dtype=float).T  # 2 x bins
    col = table.sum(axis=0)
    row = table.sum(axis=1)
    expected = np.outer(row, col) / total
    stat = float(np.sum((table - expected) ** 2 / expected))
    df = len(kept) - 1
    p = float(stats.chi2.sf(stat, df))
    return report_p(
        name, stat, p, na, alpha, seed, details={"df": df, "bins": len(kept), "n_b": nb}
    )


def laplace_mc(configs, f: StepFunction) -> tuple[float, float]:
    """Monte Carlo Laplace functional: mean and standard error of exp(-<f, mu>)."""
    if not configs:
        raise ValueError("laplace_mc requires at least one configuration")
    vals = np.array([math.exp(-config_integrate(c, f)) for c in configs])
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), se


def laplace_poisson_exact(intensity: CellMeasure, f: StepFunction) -> float:
    """Closed form exp(-sum_i rho_i (1 - e^{-f_i}))."""
    return float(np.exp(-np.sum(intensity.masses * (1.0 - np.exp(-f.values)))))


def laplace_polya_exact(z: float, rho: CellMeasure, f: StepFunction) -> float:
    """Closed form prod_i ((1-z) / (1 - z e^{-f_i}))^{rho_i}."""
    if not (0.0 < z < 1.0):
        raise ValueError(f"z must be in (0, 1), got {z}")
    return float(np.prod(((1.0 - z) / (1.0 - z * np.exp(-f.values))) ** rho.masses))


def mecke_check_polya(z, rho: CellMeasure, h, n: int, rng, *, name, seed) -> TestReport:
    """MC Campbell-Mecke identity for the Polya sum process.

    LHS integrates h against the configuration; RHS integrates the
    shifted h against the kernel z (rho + mu).  Both sides share
    draws, and the report compares |mean difference| to 3 SE.
    """
    g = as_generator(rng)
    params = PolyaParams(z, rho)
    cells = rho.window.cells
    counts = np.empty((n, cells), dtype=np.int64)
    for j in range(n):
        counts[j] = cell_counts(sample_polya_sum(params, g))
    lhs = np.zeros(n)
    rhs = np.zeros(n)
    eye = np.eye(cells, dtype=np.int64)
    for i in range(cells):
        lhs += counts[:, i] * h(i, counts)
        rhs += z * (rho.masses[i] + counts[:, i]) * h(i, counts + eye[i])
    diff = lhs - rhs
    err = abs(float(diff.mean()))
    se = float(diff.std(ddof=1) / math.sqrt(n))
    return report_err(name, err, max(3.0 * se, 1e-12), n, seed, details={"se": se})


def mecke_check_polya_exact(
    z: float, rho_masses, h, max_count: int, *, name, tol=1e-10
) -> TestReport:
    """Exact enumeration twin of the Polya Mecke identity on 1-3 cells."""
    rho = np.asarray(rho_masses, dtype=float)
    cells = rho.size
    for r in rho:
        if r > 0.0 and stats.nbinom.sf(max_count, r, 1.0 - z) >= 1e-13:
            raise NumericError("truncation bound violated; increase max_count")
    vecs = []
    for r in rho:
        if r == 0.0:
            v = np.zeros(max_count + 1)
            v[0] = 1.0
        else:
            v = stats.nbinom.pmf(np.arange(max_count + 1), r, 1.0 - z)
        vecs.append(v)
    pmf = functools.reduce(np.multiply.outer, vecs)
    eye = np.eye(cells, dtype=np.int64)
    lhs = rhs = 0.0
    for idx in np.ndindex(pmf.shape):
        w = pmf[idx]
        if w == 0.0:
            continue
        mu = np.asarray(idx, dtype=np.int64)
        for i in range(cells):
            lhs += w * mu[i] * float(h(i, mu))
            rhs += w * z * (rho[i] + mu[i]) * float(h(i, mu + eye[i]))
    err = abs(lhs - rhs)
    return report_err(name, err, tol, pmf.size, 0, details={"lhs": lhs, "rhs": rhs})


def mecke_check_gamma(
    rho: CellMeasure, h, n: int, rng, *, name, seed, quad_nodes=64, quad_eps=1e-8
) -> TestReport:
    """MC Campbell-Mecke identity for the Gamma random measure.

    LHS: E sum_i Q_i h(i, Q); RHS: E sum_i rho_i int h(i, Q + r e_i)
    e^{-r} dr, the radial integral evaluated by Gauss-Laguerre
    quadrature whose stated error allowance is added to the threshold.
    """
    g = as_generator(rng)
    cells = rho.window.cells
    q = g.gamma(np.broadcast_to(rho.masses, (n, cells)))
    nodes, weights = np.polynomial.laguerre.laggauss(quad_nodes)
    lhs = np.zeros(n)
    rhs = np.zeros(n)
    eye = np.eye(cells)
    for i in range(cells):
        lhs += q[:, i] * h(i, q)
        if rho.masses[i] == 0.0:
            continue
        radial = np.zeros(n)
        for x, w in zip(nodes, weights):
            radial += w * h(i, q + x * eye[i])
        rhs += rho.masses[i] * radial
    diff = lhs - rhs
    err = abs(float(diff.mean()))
    se = float(diff.std(ddof=1) / math.sqrt(n))
    return report_err(
        name,
        err,
        max(3.0 * se + quad_eps, 1e-12),
        n,
        seed,
        details={"se": se, "quad_nodes": quad_nodes},
    )


def duality_check(
    spec: FlowSpec, s: float, t: float, phi, psi, n: int, rng, *, name, seed
) -> TestReport:
    """MC duality of forward and backward kernels between times s < t.

    One side samples Y_t and a single backward draw; the other samples
    Y_s and a single forward increment.  phi and psi act on count
    vectors.  Both estimates should agree within 3 combined SE.
    """
    g = as_generator(rng)
    a_vals = np.empty(n)
    b_vals = np.empty(n)
    for j in range(n):
        y_t = simulate_path(spec, (t,), g).states[0]
        back = backward_thin(spec, s, t, y_t, g)
        a_vals[j] = phi(cell_counts(y_t)) * psi(cell_counts(back))
        y_s = simulate_path(spec, (s,), g).states[0]
        inc = forward_increment(spec, s, t, y_s, g)
        b_vals[j] = psi(cell_counts(y_s)) * phi(cell_counts(superpose(y_s, inc)))
    err = abs(float(a_vals.mean() - b_vals.mean()))
    se = math.sqrt(a_vals.var(ddof=1) / n + b_vals.var(ddof=1) / n)
    return report_err(
        name,
        err,
        max(3.0 * se, 1e-12),
        n,
        seed,
        details={
            "lhs": float(a_vals.mean()),
            "rhs": float(b_vals.mean()),
            "se": se,
            "se_lhs": float(a_vals.std(ddof=1) / math.sqrt(n)),
            "se_rhs": float(b_vals.std(ddof=1) / math.sqrt(n)),
        },
    )


def _model_backward_retention(model: DiscreteModel, s: float, t: float) -> float:
    zs, zt = model.marginal_z(s), model.marginal_z(t)
    return zs * (1.0 - zt) / (zt * (1.0 - zs))


def duality_check_exact(
    model: DiscreteModel, s: float, t: float, phi, psi, *, name, tol=1e-9
) -> TestReport:
    """Enumeration twin of the duality identity on a DiscreteModel.

    LHS runs the exact binomial backward kernel under the time-t
    marginal; RHS runs the exact forward semigroup under the time-s
    marginal.
    """
    if not (0.0 < s < t):
        raise ValueError(f"duality requires 0 < s < t, got ({s}, {t})")
    pmf_t = model.marginal_pmf(t)
    pmf_s = model.marginal_pmf(s)
    r = _model_backward_retention(model, s, t)
    cells = model.cells

    lhs = 0.0
    for idx in np.ndindex(pmf_t.shape):
        w = pmf_t[idx]
        if w == 0.0:
            continue
        mu = np.asarray(idx, dtype=np.int64)
        # E psi(binomial thinning of mu), factorized over cells
        inner = 0.0
        sub_pmfs = [stats.binom.pmf(np.arange(m + 1), m, r) for m in mu]
        for sub in np.ndindex(*(m + 1 for m in mu)):
            wp = 1.0
            for i, v in enumerate(sub):
                wp *= sub_pmfs[i][v]
            inner += wp * float(psi(np.asarray(sub, dtype=np.int64)))
        lhs += w * float(phi(mu)) * inner

    forward = semigroup_apply(model, s, t, phi)
    rhs = 0.0
    for idx in np.ndindex(pmf_s.shape):
        w = pmf_s[idx]
        if w == 0.0:
            continue
        nu = np.asarray(idx, dtype=np.int64)
        rhs += w * float(psi(nu)) * forward(nu)

    err = abs(lhs - rhs)
    return report_err(name, err, tol, pmf_t.size, 0, details={"lhs": lhs, "rhs": rhs})
