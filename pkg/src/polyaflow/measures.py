"""Windows, point configurations, and cell measures.

Everything lives on a one-dimensional window split into equal-width
cells.  Point configurations are finite integer-valued measures given
by ordered atoms with multiplicities; cell measures and step functions
are plain nonnegative vectors indexed by cell.  Cells are half-open,
``[edge_k, edge_{k+1})``, so every location in ``[lo, hi)`` belongs to
exactly one cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Window",
    "PointConfig",
    "CellMeasure",
    "StepFunction",
    "empty_config",
    "superpose",
    "config_diff",
    "config_leq",
    "config_integrate",
    "cell_counts",
    "config_to_json",
    "config_from_json",
    "cell_measure_to_json",
    "cell_measure_from_json",
]


@dataclass(frozen=True)
class Window:
    """Observation window ``[lo, hi)`` divided into ``cells`` equal cells."""

    lo: float
    hi: float
    cells: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("window bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"window requires lo < hi, got [{self.lo}, {self.hi})")
        if self.cells < 1:
            raise ValueError(f"window requires at least one cell, got {self.cells}")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.cells

    def edges(self) -> np.ndarray:
        return self.lo + self.width * np.arange(self.cells + 1)

    def cell_of(self, locations: np.ndarray) -> np.ndarray:
        """Cell index of each location; right window endpoint excluded."""
        locations = np.asarray(locations, dtype=float)
        idx = np.floor((locations - self.lo) / (self.hi - self.lo) * self.cells)
        # guard against float roundup for locations just below hi
        return np.minimum(idx.astype(np.int64), self.cells - 1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _config_unchecked(
    window: Window, locations: np.ndarray, multiplicities: np.ndarray
) -> "PointConfig":
    """Internal fast constructor for arrays whose invariants hold structurally.

    Callers must hand over freshly allocated 1-d arrays (float64 /
    int64) with strictly increasing in-window locations and positive
    multiplicities; the arrays are frozen in place.
    """
    cfg = object.__new__(PointConfig)
    object.__setattr__(cfg, "window", window)
    object.__setattr__(cfg, "locations", _frozen(locations))
    object.__setattr__(cfg, "multiplicities", _frozen(multiplicities))
    return cfg


_EMPTY_F = _frozen(np.empty(0, dtype=np.float64))
_EMPTY_I = _frozen(np.empty(0, dtype=np.int64))


def _measure_unchecked(window: Window, masses: np.ndarray) -> "CellMeasure":
    """Internal fast constructor: caller owns ``masses`` and guarantees a
    float64 vector of window.cells finite nonnegative entries."""
    m = object.__new__(CellMeasure)
    object.__setattr__(m, "window", window)
    object.__setattr__(m, "masses", _frozen(masses))
    return m


@dataclass(frozen=True, eq=False)
class PointConfig:
    """Finite point configuration on a window.

    Parameters
    ----------
    window : Window
        Carrier window; all locations must lie in ``[lo, hi)``.
    locations : array of float
        Atom locations, strictly increasing.
    multiplicities : array of int
        Positive multiplicity of each atom.
    """

    window: Window
    locations: np.ndarray = field(default=None)  # type: ignore[assignment]
    multiplicities: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        locs = np.asarray(
            self.locations if self.locations is not None else [], dtype=np.float64
        )
        mults = np.asarray(
            self.multiplicities if self.multiplicities is not None else [],
            dtype=np.int64,
        )
        if locs.ndim != 1 or mults.ndim != 1 or locs.shape != mults.shape:
            raise ValueError("locations and multiplicities must be 1-d and equal length")
        if locs.size:
            if not np.all(np.isfinite(locs)):
                raise ValueError("atom locations must be finite")
            if np.any(locs < self.window.lo) or np.any(locs >= self.window.hi):
                raise ValueError("atom locations must lie in [lo, hi)")
            if np.any(np.diff(locs) <= 0.0):
                raise ValueError("atom locations must be strictly increasing")
            if np.any(mults < 1):
                raise ValueError("atom multiplicities must be >= 1")
        object.__setattr__(self, "locations", _frozen(locs))
        object.__setattr__(self, "multiplicities", _frozen(mults))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointConfig):
            return NotImplemented
        return (
            self.window == other.window
            and np.array_equal(self.locations, other.locations)
            and np.array_equal(self.multiplicities, other.multiplicities)
        )

    @property
    def n_atoms(self) -> int:
        return int(self.locations.size)

    def total(self) -> int:
        """Total number of points counted with multiplicity."""
        return int(self.multiplicities.sum())


@dataclass(frozen=True, eq=False)
class CellMeasure:
    """Nonnegative measure with constant density on each cell."""

    window: Window
    masses: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        masses = np.asarray(self.masses, dtype=np.float64)
        if masses.ndim != 1 or masses.size != self.window.cells:
            raise ValueError(
                f"expected {self.window.cells} cell masses, got shape {masses.shape}"
            )
        if not np.all(np.isfinite(masses)) or np.any(masses < 0.0):
            raise ValueError("cell masses must be finite and >= 0")
        object.__setattr__(self, "masses", _frozen(masses))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CellMeasure):
            return NotImplemented
        return self.window == other.window and np.array_equal(self.masses, other.masses)

    def total(self) -> float:
        return float(self.masses.sum())

    def scaled(self, factor: float) -> "CellMeasure":
        if not np.isfinite(factor) or factor < 0.0:
            raise ValueError(f"scale factor must be finite and >= 0, got {factor}")
        return CellMeasure(self.window, self.masses * factor)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonnegative test function, constant on each cell of its window."""

    window: Window
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != self.window.cells:
            raise ValueError(
                f"expected {self.window.cells} cell values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("step function values must be finite and >= 0")
        object.__setattr__(self, "values", _frozen(values))

    def __call__(self, locations: np.ndarray) -> np.ndarray:
        return self.values[self.window.cell_of(locations)]


def _require_same_window(a, b) -> None:
    if a.window != b.window:
        raise ValueError(f"window mismatch: {a.window} vs {b.window}")


def empty_config(window: Window) -> PointConfig:
    return _config_unchecked(window, _EMPTY_F, _EMPTY_I)


def superpose(a: PointConfig, b: PointConfig) -> PointConfig:
    """Atomwise sum a + b; multiplicities add at exactly shared locations."""
    _require_same_window(a, b)
    if a.n_atoms == 0:
        return b
    if b.n_atoms == 0:
        return a
    locs = np.concatenate([a.locations, b.locations])
    mults = np.concatenate([a.multiplicities, b.multiplicities])
    uniq, inverse = np.unique(locs, return_inverse=True)
    summed = np.bincount(inverse, weights=mults, minlength=uniq.size)
    return _config_unchecked(a.window, uniq, summed.astype(np.int64))


def config_diff(a: PointConfig, b: PointConfig) -> PointConfig:
    """Atomwise difference a - b; requires b <= a."""
    _require_same_window(a, b)
    if not config_leq(b, a):
        raise ValueError("config_diff requires b <= a atomwise")
    if b.n_atoms == 0:
        return a
    pos = np.searchsorted(a.locations, b.locations)
    mults = a.multiplicities.copy()
    mults[pos] -= b.multiplicities
    keep = mults > 0
    return _config_unchecked(a.window, a.locations[keep], mults[keep])


def config_leq(a: PointConfig, b: PointConfig) -> bool:
    """Partial order: every atom of a occurs in b with at least its multiplicity."""
    _require_same_window(a, b)
    if a.n_atoms == 0:
        return True
    if a.n_atoms > b.n_atoms:
        return False
    pos = np.searchsorted(b.locations, a.locations)
    if np.any(pos >= b.n_atoms):
        return False
    if not np.all(b.locations[pos] == a.locations):
        return False
    return bool(np.all(a.multiplicities <= b.multiplicities[pos]))


def config_integrate(config: PointConfig, f: StepFunction) -> float:
    """Integral of f against the configuration, atoms weighted by multiplicity."""
    _require_same_window(config, f)
    if config.n_atoms == 0:
        return 0.0
    return float(np.dot(config.multiplicities, f(config.locations)))


def cell_counts(config: PointConfig) -> np.ndarray:
    """Vector of per-cell point counts (with multiplicity)."""
    counts = np.zeros(config.window.cells, dtype=np.int64)
    if config.n_atoms:
        idx = config.window.cell_of(config.locations)
        np.add.at(counts, idx, config.multiplicities)
    return counts


def config_to_json(config: PointConfig) -> dict:
    return {
        "atoms": [
            [float(loc), int(mult)]
            for loc, mult in zip(config.locations, config.multiplicities)
        ]
    }


def config_from_json(window: Window, data: dict) -> PointConfig:
    atoms = data["atoms"]
    locs = np.array([a[0] for a in atoms], dtype=np.float64)
    mults = np.array([a[1] for a in atoms], dtype=np.int64)
    return PointConfig(window, locs, mults)


def cell_measure_to_json(measure: CellMeasure) -> dict:
    return {
        "lo": float(measure.window.lo),
        "hi": float(measure.window.hi),
        "masses": [float(m) for m in measure.masses],
    }


def cell_measure_from_json(data: dict) -> CellMeasure:
    masses = np.asarray(data["masses"], dtype=np.float64)
    window = Window(float(data["lo"]), float(data["hi"]), masses.size)
    return CellMeasure(window, masses)
