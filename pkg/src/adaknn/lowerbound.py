"""Adversarial cube worlds where fixed-k nearest neighbors votes itself wrong.

The construction places ``n_cubes`` low-mass cubes plus one high-mass cube
along the first coordinate, with the target flipping sign from cube to cube
(``eta = a * (-1)**j`` on cube ``I_j``).  Each low cube is sized to hold
about a third of a nearest-neighbor budget, so a fixed-k query ball must
straddle three cubes and the two opposite-signed neighbors outvote the home
cube.  A ball-based adaptive choice of k shrinks with the local sample
count and stays inside the home cube.

Cube ``I_j`` spans ``(4j - 1) L < x_1 < (4j + 1) L`` with the remaining
coordinates in ``[-L, L]``; gaps of width ``2L`` separate the cubes.  Off
the support ``eta`` is 0 (never sampled, only visible to direct calls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import AdaptiveK, FixedK
from .index import MAX_NORM
from .theory import optimal_growth
from .validation import check_positive_int
from .worlds import BayesRisk, labels_from_eta

__all__ = ["CubeFamily", "make_cube_world", "demonstrate_gap"]

_MASS_TOL = 1e-9


@dataclass(frozen=True)
class CubeFamily:
    """Mixture of ``n_cubes + 1`` axis-aligned cubes with alternating targets.

    Acts as a classification world: it has the same sampling surface as
    ``WorldSpec`` (``sample_features`` / ``eta_values`` / ``sample_labels`` /
    ``bayes_risk``), so the experiment harness runs on it unchanged.
    """

    n_cubes: int
    cube_halfwidth: float
    low_density: float
    dim: int = 1
    eta_amplitude: float = 1.0

    def __post_init__(self):
        if self.n_cubes < 0:
            raise ValueError(f"n_cubes must be >= 0, got {self.n_cubes}")
        if not self.cube_halfwidth > 0:
            raise ValueError(f"cube_halfwidth must be > 0, got {self.cube_halfwidth}")
        if not self.low_density > 0:
            raise ValueError(f"low_density must be > 0, got {self.low_density}")
        check_positive_int(self.dim, "dim")
        if not 0.0 < self.eta_amplitude <= 1.0:
            raise ValueError("eta out of range for classification")
        if self.top_mass < -_MASS_TOL:
            raise ValueError(
                f"infeasible mass budget: {self.n_cubes} low cubes already "
                f"carry mass {self.n_cubes * self.cube_mass:.6g} > 1"
            )

    # geometry and masses ----------------------------------------------------

    @property
    def cube_volume(self) -> float:
        return (2.0 * self.cube_halfwidth) ** self.dim

    @property
    def cube_mass(self) -> float:
        """Mass of one low cube."""
        return self.cube_volume * self.low_density

    @property
    def top_mass(self) -> float:
        return 1.0 - self.n_cubes * self.cube_mass

    @property
    def top_density(self) -> float:
        return max(self.top_mass, 0.0) / self.cube_volume

    @property
    def masses(self) -> np.ndarray:
        """Masses of cubes I_1 .. I_{n+1} (the last one absorbs the rest)."""
        out = np.full(self.n_cubes + 1, self.cube_mass)
        out[-1] = max(self.top_mass, 0.0)
        return out

    def cube_center(self, j: int) -> np.ndarray:
        center = np.zeros(self.dim)
        center[0] = 4.0 * j * self.cube_halfwidth
        return center

    def density(self, X: np.ndarray) -> np.ndarray:
        """Joint density at each row (piecewise constant, 0 off the cubes)."""
        j, inside = self._locate(np.asarray(X, dtype=float))
        dens = np.where(j == self.n_cubes + 1, self.top_density, self.low_density)
        return np.where(inside, dens, 0.0)

    # world surface ------------------------------------------------------------

    task = "classification"

    @property
    def name(self) -> str:
        return f"cube{self.dim}-n{self.n_cubes}"

    def sample_features(self, n: int, rng: np.random.Generator) -> np.ndarray:
        check_positive_int(n, "n")
        p = self.masses
        p = p / p.sum()
        j = 1 + rng.choice(self.n_cubes + 1, size=n, p=p)
        L = self.cube_halfwidth
        X = rng.uniform(-L, L, (n, self.dim))
        X[:, 0] += 4.0 * L * j
        return X

    def _locate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest cube index (1-based) and whether the point is inside it."""
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"X must have shape (n, {self.dim})")
        L = self.cube_halfwidth
        j = np.rint(X[:, 0] / (4.0 * L)).astype(int)
        inside = (j >= 1) & (j <= self.n_cubes + 1)
        inside &= np.abs(X[:, 0] - 4.0 * L * j) <= L
        if self.dim > 1:
            inside &= np.max(np.abs(X[:, 1:]), axis=1) <= L
        return j, inside

    def eta_values(self, X: np.ndarray) -> np.ndarray:
        j, inside = self._locate(np.asarray(X, dtype=float))
        signs = np.where(j % 2 == 0, 1.0, -1.0)
        return np.where(inside, self.eta_amplitude * signs, 0.0)

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return labels_from_eta(self.eta_values(X), rng)

    def sample(self, n: int, rng: np.random.Generator):
        X = self.sample_features(n, rng)
        return X, self.sample_labels(X, rng)

    def bayes_predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.eta_values(X) >= 0.0, 1.0, -1.0)

    def bayes_risk(self, **_ignored) -> BayesRisk:
        """Exact: |eta| equals the amplitude everywhere on the support."""
        return BayesRisk(0.5 * (1.0 - self.eta_amplitude), 0.0, "exact")

    # JSON round trip -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": "cube_family",
            "n_cubes": self.n_cubes,
            "cube_halfwidth": self.cube_halfwidth,
            "low_density": self.low_density,
            "dim": self.dim,
            "eta_amplitude": self.eta_amplitude,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CubeFamily":
        if "k_target" in d:
            allowed = {"kind", "k_target", "n_train", "variant", "delta", "dim", "n_cubes"}
            unknown = set(d) - allowed
            if unknown:
                raise ValueError(f"unknown world key: {sorted(unknown)[0]!r}")
            if "n_train" not in d:
                raise ValueError("cube_family construction needs 'n_train'")
            return make_cube_world(
                k_target=int(d["k_target"]),
                n_train=int(d["n_train"]),
                variant=d.get("variant", "fixed_size"),
                delta=float(d.get("delta", 0.5)),
                dim=int(d.get("dim", 1)),
                n_cubes=int(d["n_cubes"]) if "n_cubes" in d else None,
            )
        allowed = {"kind", "n_cubes", "cube_halfwidth", "low_density", "dim", "eta_amplitude"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown world key: {sorted(unknown)[0]!r}")
        for key in ("n_cubes", "cube_halfwidth", "low_density"):
            if key not in d:
                raise ValueError(f"cube_family config is missing {key!r}")
        return cls(
            n_cubes=int(d["n_cubes"]),
            cube_halfwidth=float(d["cube_halfwidth"]),
            low_density=float(d["low_density"]),
            dim=int(d.get("dim", 1)),
            eta_amplitude=float(d.get("eta_amplitude", 1.0)),
        )


def make_cube_world(
    k_target: int,
    n_train: int,
    variant: str = "fixed_size",
    *,
    delta: float = 0.5,
    dim: int = 1,
    n_cubes: int | None = None,
) -> CubeFamily:
    """Size a cube family against a neighbor budget ``k_target`` at ``n_train``.

    ``fixed_size`` keeps unit cubes and thins the density so each low cube
    holds about ``k_target / 3`` training points; ``adaptive_size`` shrinks
    the cubes with ``n_train`` at exponent ``delta`` and scales the target
    amplitude down accordingly.  ``n_cubes`` defaults to the largest count
    the mass budget allows.
    """
    check_positive_int(k_target, "k_target")
    check_positive_int(n_train, "n_train")
    check_positive_int(dim, "dim")
    if variant == "fixed_size":
        halfwidth = 1.0
        low_density = k_target / (3.0 * 2.0**dim * n_train)
        amplitude = 1.0
    elif variant == "adaptive_size":
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {delta}")
        ratio = k_target * n_train ** (delta - 1.0)
        halfwidth = 0.5 * ratio ** (1.0 / dim)
        low_density = n_train ** (-delta) / 3.0
        amplitude = 0.25 * ratio ** (2.0 / dim)
        if amplitude > 1.0:
            raise ValueError(
                f"adaptive_size amplitude {amplitude:.3g} > 1; "
                "lower k_target or raise n_train"
            )
    else:
        raise ValueError(f"unknown variant {variant!r}")

    per_cube = (2.0 * halfwidth) ** dim * low_density
    max_cubes = int(math.floor((1.0 + _MASS_TOL) / per_cube))
    if n_cubes is None:
        n_cubes = max_cubes
    elif n_cubes > max_cubes:
        raise ValueError(
            f"infeasible mass budget: n_cubes={n_cubes} needs mass "
            f"{n_cubes * per_cube:.6g} > 1"
        )
    return CubeFamily(
        n_cubes=n_cubes,
        cube_halfwidth=halfwidth,
        low_density=low_density,
        dim=dim,
        eta_amplitude=amplitude,
    )


def demonstrate_gap(
    N_grid,
    trials: int,
    seed: int,
    *,
    k_target: int = 27,
    variant: str = "fixed_size",
    delta: float = 0.5,
    dim: int = 1,
    n_test: int = 1000,
    workers: int = 1,
):
    """Run matched standard/adaptive sweeps on one adversarial cube world.

    The family is sized against the largest N in the grid, where the fixed-k
    three-cube failure is sharpest; the adaptive run uses the rate-optimal
    growth exponent for ``dim``.  Returns the two sweep results
    (standard first).
    """
    from .harness import ExperimentConfig, sweep  # deferred: harness imports us

    N_grid = [int(N) for N in N_grid]
    if not N_grid:
        raise ValueError("N_grid must not be empty")
    world = make_cube_world(k_target, max(N_grid), variant, delta=delta, dim=dim)
    common = dict(
        world=world,
        N_grid=N_grid,
        trials=trials,
        n_test=n_test,
        base_seed=seed,
        norm=MAX_NORM,
    )
    standard = sweep(
        ExperimentConfig(method="standard", selector=FixedK(k_target), **common),
        workers=workers,
    )
    adaptive = sweep(
        ExperimentConfig(
            method="adaptive",
            selector=AdaptiveK(scale=1.0, growth=optimal_growth(dim), radius=1.0),
            **common,
        ),
        workers=workers,
    )
    return standard, adaptive
