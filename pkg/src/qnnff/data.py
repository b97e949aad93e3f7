"""Datasets, file persistence, analytic surrogate oracles and augmentation.

The analytic oracles (Morse diatomic, harmonic triatomic, hydronium with a
double-well umbrella term) stand in for ab initio labels so that every
pipeline stage can be exercised end to end without external chemistry codes.
Externally produced datasets are ingested either from the native file format
below or through a user-registered converter.

File format (space-delimited decimal text):

    line 1:   <n_atoms> <element_1> ... <element_n> forces=<0|1> [preset=<tag>]
    line 2:   # provenance: <free text>            (optional)
    line 3+:  3n coordinates, energy, then 3n force components if forces=1

Units are Angstrom, eV, eV/Angstrom.  Floats are written with shortest
round-trip precision, so save/load is bit exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .descriptors import bond_angle, bond_length, dihedral
from .errors import ArgumentError, DataError


@dataclass
class Sample:
    """One labelled configuration: flat Cartesian vector, energy, forces."""

    cartesian: np.ndarray
    energy: float
    forces: np.ndarray | None = None

    def __post_init__(self):
        self.cartesian = np.asarray(self.cartesian, dtype=float).ravel()
        self.energy = float(self.energy)
        if not np.all(np.isfinite(self.cartesian)) or not math.isfinite(self.energy):
            raise DataError("non-finite sample data")
        if self.forces is not None:
            self.forces = np.asarray(self.forces, dtype=float).ravel()
            if self.forces.shape != self.cartesian.shape:
                raise DataError(
                    f"forces length {self.forces.size} does not match "
                    f"{self.cartesian.size} coordinates"
                )
            if not np.all(np.isfinite(self.forces)):
                raise DataError("non-finite forces")


@dataclass
class Dataset:
    samples: list[Sample]
    elements: tuple[str, ...]
    preset: str = "custom"
    provenance: str = ""

    def __post_init__(self):
        if not self.samples:
            raise DataError("dataset needs at least one sample")
        self.elements = tuple(self.elements)
        want = 3 * len(self.elements)
        for s in self.samples:
            if s.cartesian.size != want:
                raise DataError(
                    f"sample has {s.cartesian.size} coordinates, expected {want}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def num_atoms(self) -> int:
        return len(self.elements)

    @property
    def has_forces(self) -> bool:
        return all(s.forces is not None for s in self.samples)

    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])

    def cartesians(self) -> np.ndarray:
        return np.stack([s.cartesian for s in self.samples])

    def forces_matrix(self) -> np.ndarray:
        if not self.has_forces:
            raise DataError("dataset has samples without force labels")
        return np.stack([s.forces for s in self.samples])


# ---------------------------------------------------------------------------
# Analytic oracles.

def morse_oracle(r: float, well_depth: float = 2.5, width: float = 1.1,
                 r_eq: float = 1.6) -> tuple[float, float]:
    """Morse diatomic: V = D (1 - exp(-a (r - r_e)))^2, plus F = -dV/dr."""
    if r <= 0:
        raise ArgumentError(f"bond length must be positive, got {r}")
    ex = math.exp(-width * (r - r_eq))
    energy = well_depth * (1.0 - ex) ** 2
    force = -2.0 * well_depth * width * ex * (1.0 - ex)
    return energy, force


@dataclass(frozen=True)
class TriatomicParams:
    k_bond: float = 20.0       # eV / A^2
    r_eq: float = 0.9584       # A
    k_angle: float = 2.0       # eV / rad^2
    theta_eq: float = 1.8235   # rad


def triatomic_oracle(geom, params: TriatomicParams = TriatomicParams()):
    """Harmonic bend-stretch surrogate for a triatomic (atom 0 is the vertex)."""
    pos = np.asarray(geom, dtype=float).reshape(3, 3)
    energy = 0.0
    forces = np.zeros(9)
    for j in (1, 2):
        r, grad = bond_length(pos, 0, j)
        energy += 0.5 * params.k_bond * (r - params.r_eq) ** 2
        forces -= params.k_bond * (r - params.r_eq) * grad
    theta, grad = bond_angle(pos, 1, 0, 2)
    energy += 0.5 * params.k_angle * (theta - params.theta_eq) ** 2
    forces -= params.k_angle * (theta - params.theta_eq) * grad
    return energy, forces


@dataclass(frozen=True)
class HydroniumParams:
    k_bond: float = 25.0
    r_eq: float = 0.98
    k_angle: float = 4.0
    theta_eq: float = 1.91
    k_umbrella: float = 0.1    # barrier height of the dihedral double well, eV
    d_well: float = 0.5        # rad, positions of the two minima


def hydronium_oracle(geom, params: HydroniumParams = HydroniumParams()):
    """Four-atom surrogate: harmonic bonds/angles plus a double-well dihedral.

    Atom order (O, H1, H2, H3); the umbrella coordinate is the dihedral over
    the chain (O, H3, H2, H1) with minima at +-d_well.
    """
    pos = np.asarray(geom, dtype=float).reshape(4, 3)
    energy = 0.0
    forces = np.zeros(12)
    for j in (1, 2, 3):
        r, grad = bond_length(pos, 0, j)
        energy += 0.5 * params.k_bond * (r - params.r_eq) ** 2
        forces -= params.k_bond * (r - params.r_eq) * grad
    for j in (2, 3):
        theta, grad = bond_angle(pos, 1, 0, j)
        energy += 0.5 * params.k_angle * (theta - params.theta_eq) ** 2
        forces -= params.k_angle * (theta - params.theta_eq) * grad
    d, grad = dihedral(pos, 0, 3, 2, 1)
    u = (d / params.d_well) ** 2 - 1.0
    energy += params.k_umbrella * u * u
    forces -= params.k_umbrella * 4.0 * u * d / params.d_well ** 2 * grad
    return energy, forces


def finite_difference_forces(energy_fn, cartesian, h: float = 1e-5) -> np.ndarray:
    """Central-difference forces F_c = -dE/dc, one energy pair per coordinate."""
    if h <= 0:
        raise ArgumentError("finite-difference step must be positive")
    x = np.asarray(cartesian, dtype=float).ravel()
    forces = np.zeros_like(x)
    for c in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[c] += h
        xm[c] -= h
        forces[c] = -(energy_fn(xp) - energy_fn(xm)) / (2 * h)
    return forces


# ---------------------------------------------------------------------------
# Geometry builders for the presets (positions are canonical: first atom at
# the origin, first bond along x, second neighbour in the xy plane).

def diatomic_geometry(r: float) -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, r, 0.0, 0.0])


def triatomic_geometry(r1: float, r2: float, theta: float) -> np.ndarray:
    return np.array([
        0.0, 0.0, 0.0,
        r1, 0.0, 0.0,
        r2 * math.cos(theta), r2 * math.sin(theta), 0.0,
    ])


def hydronium_geometry(r1: float, r2: float, r3: float, theta12: float,
                       theta13: float, d_target: float) -> np.ndarray:
    """Place (O, H1, H2, H3) with the requested bonds, angles at the oxygen,
    and dihedral over (O, H3, H2, H1).

    H3 sits on the cone of half-angle theta13 around the O-H1 axis; its
    azimuth is solved numerically so the signed dihedral hits ``d_target``.
    """
    from scipy.optimize import brentq

    base = np.array([
        [0.0, 0.0, 0.0],
        [r1, 0.0, 0.0],
        [r2 * math.cos(theta12), r2 * math.sin(theta12), 0.0],
        [0.0, 0.0, 0.0],
    ])

    def with_azimuth(psi: float) -> np.ndarray:
        pos = base.copy()
        pos[3] = r3 * np.array([
            math.cos(theta13),
            math.sin(theta13) * math.cos(psi),
            math.sin(theta13) * math.sin(psi),
        ])
        return pos

    def objective(psi: float) -> float:
        return dihedral(with_azimuth(psi), 0, 3, 2, 1)[0] - d_target

    grid = np.linspace(-np.pi + 0.05, np.pi - 0.05, 73)
    vals = []
    for psi in grid:
        try:
            vals.append(objective(psi))
        except Exception:
            vals.append(np.nan)
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.isfinite(fa) and np.isfinite(fb) and fa * fb <= 0 and abs(fa - fb) < np.pi:
            psi = brentq(objective, a, b, xtol=1e-12)
            return with_azimuth(psi).ravel()
    raise ArgumentError(
        f"no hydronium placement reaches dihedral {d_target:.3f} rad with the "
        f"given bonds and angles"
    )


# ---------------------------------------------------------------------------
# Mirroring augmentation for 1D bond-coordinate datasets.

def mirror_augment(dataset: Dataset, mirror_point: float) -> Dataset:
    """Reflect a diatomic dataset about r = mirror_point.

    Every sample at bond length r <= mirror_point gains a partner at
    2*mirror_point - r with the same energy and sign-flipped forces, making
    the extended potential exactly even about the mirror point.  A sample
    sitting exactly on the mirror point is not duplicated.
    """
    if dataset.num_atoms != 2:
        raise ArgumentError("mirroring is defined for diatomic datasets")
    mirrored = []
    for idx, s in enumerate(dataset.samples):
        pos = s.cartesian.reshape(2, 3)
        r, _ = bond_length(pos, 0, 1)
        if r > mirror_point + 1e-12:
            raise ArgumentError(
                f"sample {idx} has r={r:.6f} beyond the mirror point "
                f"{mirror_point}"
            )
        if abs(r - mirror_point) <= 1e-12:
            continue
        unit = (pos[1] - pos[0]) / r
        new_pos = pos.copy()
        new_pos[1] = pos[0] + unit * (2.0 * mirror_point - r)
        forces = None if s.forces is None else -s.forces
        mirrored.append(Sample(new_pos.ravel(), s.energy, forces))
    return Dataset(
        samples=list(dataset.samples) + mirrored,
        elements=dataset.elements,
        preset=dataset.preset,
        provenance=dataset.provenance,
    )


# ---------------------------------------------------------------------------
# Persistence and splitting.

def _fmt(x: float) -> str:
    return repr(float(x))


def save_dataset(dataset: Dataset, path) -> None:
    tokens = [str(dataset.num_atoms), *dataset.elements,
              f"forces={int(dataset.has_forces)}"]
    if dataset.preset:
        tokens.append(f"preset={dataset.preset}")
    lines = [" ".join(tokens)]
    if dataset.provenance:
        lines.append(f"# provenance: {dataset.provenance}")
    with_forces = dataset.has_forces
    for s in dataset.samples:
        row = [_fmt(v) for v in s.cartesian] + [_fmt(s.energy)]
        if with_forces:
            row += [_fmt(v) for v in s.forces]
        lines.append(" ".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty dataset file")
    header = lines[0].split()
    try:
        n_atoms = int(header[0])
        elements = tuple(header[1: 1 + n_atoms])
        if len(elements) != n_atoms:
            raise ValueError("missing element labels")
        flags = dict(tok.split("=", 1) for tok in header[1 + n_atoms:])
        with_forces = bool(int(flags.get("forces", "0")))
        preset = flags.get("preset", "custom")
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed header line: {exc}") from exc
    provenance = ""
    body_start = 1
    if len(lines) > 1 and lines[1].startswith("# provenance:"):
        provenance = lines[1][len("# provenance:"):].strip()
        body_start = 2
    want = 3 * n_atoms + 1 + (3 * n_atoms if with_forces else 0)
    samples = []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != want:
            raise DataError(
                f"{path}: row {lineno}: expected {want} columns, got {len(parts)}"
            )
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: {exc}") from exc
        cart = np.array(vals[: 3 * n_atoms])
        energy = vals[3 * n_atoms]
        forces = np.array(vals[3 * n_atoms + 1:]) if with_forces else None
        samples.append(Sample(cart, energy, forces))
    if not samples:
        raise DataError(f"{path}: no samples")
    return Dataset(samples, elements, preset=preset, provenance=provenance)


def train_test_split(dataset: Dataset, n_train: int, seed: int = 0):
    """Deterministic disjoint split: n_train samples train, the rest test."""
    if not 0 < n_train < len(dataset):
        raise ArgumentError(
            f"n_train={n_train} infeasible for {len(dataset)} samples"
        )
    order = np.random.default_rng(seed).permutation(len(dataset))
    pick = lambda idx: [dataset.samples[i] for i in idx]
    common = dict(elements=dataset.elements, preset=dataset.preset,
                  provenance=dataset.provenance)
    return (Dataset(pick(order[:n_train]), **common),
            Dataset(pick(order[n_train:]), **common))


def filter_bond_range(dataset: Dataset, i: int, j: int, lo: float, hi: float) -> Dataset:
    """Keep samples whose i-j bond length lies inside [lo, hi] (units as given)."""
    kept = [s for s in dataset.samples
            if lo <= bond_length(s.cartesian.reshape(-1, 3), i, j)[0] <= hi]
    if not kept:
        raise DataError("bond-range filter removed every sample")
    return Dataset(kept, dataset.elements, dataset.preset, dataset.provenance)


# Converter stub for external ab initio dumps: register a parser that maps a
# file to (samples, elements), then load through it.
_CONVERTERS: dict[str, callable] = {}


def register_converter(name: str, parser) -> None:
    _CONVERTERS[name] = parser


def load_external(path, converter: str, **kwargs) -> Dataset:
    if converter not in _CONVERTERS:
        raise ArgumentError(
            f"no converter {converter!r} registered; known: {sorted(_CONVERTERS)}"
        )
    samples, elements = _CONVERTERS[converter](path, **kwargs)
    return Dataset(list(samples), tuple(elements), preset="custom",
                   provenance=f"converted:{converter}:{path}")
