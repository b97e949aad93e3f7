"""Classical preprocessing: Cartesian -> internal coordinates -> scaling ->
nonlinearity, with analytic Jacobians for the force chain rule.

Internal coordinates are translation and rotation invariant by construction.
Sign conventions pinned here (and by the finite-difference tests):

* bond(i, j): r = |r_i - r_j|, d r / d r_i = (r_i - r_j) / r.
* angle(i, j, k): vertex at j, theta = arccos(u.v / |u||v|) with
  u = r_i - r_j, v = r_k - r_j, in [0, pi].
* dihedral(i, j, k, l): signed angle between the (i, j, k) and (j, k, l)
  planes, d = sign(chi) * arccos(b1.b2 / |b1||b2|) with b1 = r_ij x r_kj,
  b2 = r_kj x r_kl, chi = r_kj . (b1 x b2) and r_ab = r_a - r_b.  The result
  lies in (-pi, pi]; a planar trans arrangement maps to +pi (sign(0) -> +).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DegenerateGeometryError, ScalerError

_EPS_COINCIDENT = 1e-8
_EPS_CROSS = 1e-10
_EPS_COLLINEAR = 1e-10
CLAMP_EPS = 1e-6

NONLINEARITIES = ("pi_scale", "arcsin", "arccos", "identity")


@dataclass(frozen=True, eq=False)
class MoleculeGeometry:
    """Element labels plus a flat Cartesian coordinate vector in Angstrom."""

    elements: tuple[str, ...]
    cartesian: np.ndarray

    def __post_init__(self):
        cart = np.asarray(self.cartesian, dtype=float).ravel()
        if cart.size != 3 * len(self.elements):
            raise ArgumentError(
                f"{len(self.elements)} atoms need {3 * len(self.elements)} "
                f"coordinates, got {cart.size}"
            )
        object.__setattr__(self, "cartesian", cart)
        object.__setattr__(self, "elements", tuple(self.elements))


def _positions(geom) -> np.ndarray:
    if isinstance(geom, MoleculeGeometry):
        return geom.cartesian.reshape(-1, 3)
    arr = np.asarray(geom, dtype=float)
    return arr.reshape(-1, 3)


def _distinct(*indices):
    if len(set(indices)) != len(indices):
        raise ArgumentError(f"atom indices must be distinct, got {indices}")


def bond_length(geom, i: int, j: int):
    """Distance between atoms i and j, with its gradient over all 3n coords."""
    _distinct(i, j)
    pos = _positions(geom)
    diff = pos[i] - pos[j]
    r = float(np.linalg.norm(diff))
    if r <= _EPS_COINCIDENT:
        raise DegenerateGeometryError(f"atoms {i} and {j} coincide (r={r:.2e})")
    grad = np.zeros(pos.size)
    unit = diff / r
    grad[3 * i: 3 * i + 3] = unit
    grad[3 * j: 3 * j + 3] = -unit
    return r, grad


def bond_angle(geom, i: int, j: int, k: int):
    """Angle at vertex j between arms j->i and j->k, in [0, pi]."""
    _distinct(i, j, k)
    pos = _positions(geom)
    u = pos[i] - pos[j]
    v = pos[k] - pos[j]
    ru = float(np.linalg.norm(u))
    rv = float(np.linalg.norm(v))
    if ru <= _EPS_COINCIDENT or rv <= _EPS_COINCIDENT:
        raise DegenerateGeometryError("degenerate arm in bond angle")
    cosang = float(u @ v / (ru * rv))
    if abs(cosang) >= 1.0 - _EPS_COLLINEAR:
        warnings.warn(
            f"near-collinear angle ({i},{j},{k}); arccos argument clamped",
            RuntimeWarning,
            stacklevel=2,
        )
        cosang = float(np.clip(cosang, -1.0 + _EPS_COLLINEAR, 1.0 - _EPS_COLLINEAR))
    theta = float(np.arccos(cosang))
    sin = np.sqrt(1.0 - cosang * cosang)
    di = (cosang * u / ru - v / rv) / (ru * sin)
    dk = (cosang * v / rv - u / ru) / (rv * sin)
    grad = np.zeros(pos.size)
    grad[3 * i: 3 * i + 3] = di
    grad[3 * k: 3 * k + 3] = dk
    grad[3 * j: 3 * j + 3] = -(di + dk)
    return theta, grad


def dihedral(geom, i: int, j: int, k: int, l: int):
    """Signed dihedral for the atom chain (i, j, k, l), in (-pi, pi]."""
    _distinct(i, j, k, l)
    pos = _positions(geom)
    f = pos[i] - pos[j]
    g = pos[j] - pos[k]
    h = pos[l] - pos[k]
    a = np.cross(f, g)
    b = np.cross(h, g)
    na2 = float(a @ a)
    nb2 = float(b @ b)
    ng = float(np.linalg.norm(g))
    if na2 <= _EPS_CROSS ** 2 or nb2 <= _EPS_CROSS ** 2 or ng <= _EPS_COINCIDENT:
        raise DegenerateGeometryError(
            f"collinear atoms make dihedral ({i},{j},{k},{l}) undefined"
        )
    # b1 = f x (-g) = -a and b2 = (-g) x (-h) = -b, so b1.b2 = a.b and the
    # sign scalar chi = r_kj.(b1 x b2) equals (b x a).g
    sin_term = float(np.cross(b, a) @ g) / ng
    cos_term = float(a @ b)
    angle = float(np.arctan2(sin_term, cos_term))
    if angle <= -np.pi + 1e-15:
        angle = np.pi
    di = -(ng / na2) * a
    dl = (ng / nb2) * b
    fg = float(f @ g)
    hg = float(h @ g)
    dj = (ng / na2) * a + (fg / (na2 * ng)) * a - (hg / (nb2 * ng)) * b
    dk = -(ng / nb2) * b - (fg / (na2 * ng)) * a + (hg / (nb2 * ng)) * b
    grad = np.zeros(pos.size)
    grad[3 * i: 3 * i + 3] = di
    grad[3 * j: 3 * j + 3] = dj
    grad[3 * k: 3 * k + 3] = dk
    grad[3 * l: 3 * l + 3] = dl
    return angle, grad


# ---------------------------------------------------------------------------
# Coordinate definitions and the full pipeline.

@dataclass(frozen=True)
class Bond:
    i: int
    j: int

    def evaluate(self, geom):
        return bond_length(geom, self.i, self.j)


@dataclass(frozen=True)
class Angle:
    i: int
    j: int
    k: int

    def evaluate(self, geom):
        return bond_angle(geom, self.i, self.j, self.k)


@dataclass(frozen=True)
class Dihedral:
    i: int
    j: int
    k: int
    l: int

    def evaluate(self, geom):
        return dihedral(geom, self.i, self.j, self.k, self.l)


def coord_to_tuple(coord):
    if isinstance(coord, Bond):
        return ("bond", coord.i, coord.j)
    if isinstance(coord, Angle):
        return ("angle", coord.i, coord.j, coord.k)
    if isinstance(coord, Dihedral):
        return ("dihedral", coord.i, coord.j, coord.k, coord.l)
    raise ArgumentError(f"unknown coordinate {coord!r}")


def coord_from_tuple(t):
    kind, *idx = t
    if kind == "bond":
        return Bond(*idx)
    if kind == "angle":
        return Angle(*idx)
    if kind == "dihedral":
        return Dihedral(*idx)
    raise ArgumentError(f"unknown coordinate kind {kind!r}")


def minmax_fit(values) -> tuple[float, float]:
    """Column extrema for the affine [-1, 1] scaler."""
    arr = np.asarray(values, dtype=float)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        raise ScalerError(f"constant column (min == max == {lo}) cannot be scaled")
    return lo, hi


def minmax_apply(x, lo: float, hi: float):
    """Affine map sending [lo, hi] onto [-1, 1]; out-of-range passes through."""
    return 2.0 * (np.asarray(x, dtype=float) - lo) / (hi - lo) - 1.0


def minmax_derivative(lo: float, hi: float) -> float:
    return 2.0 / (hi - lo)


def _nonlin(tag: str, x: float, pipeline) -> float:
    if tag == "pi_scale":
        return np.pi * x
    if tag == "identity":
        return x
    arg = x
    if abs(arg) > 1.0 - CLAMP_EPS:
        pipeline.clamp_count += 1
        arg = float(np.clip(arg, -1.0, 1.0))
    if tag == "arcsin":
        return float(np.arcsin(arg))
    if tag == "arccos":
        return float(np.arccos(arg))
    raise ArgumentError(f"unknown nonlinearity {tag!r}")


def _nonlin_derivative(tag: str, x: float) -> float:
    if tag == "pi_scale":
        return np.pi
    if tag == "identity":
        return 1.0
    # derivative argument stays strictly inside (-1, 1) so Jacobians are finite
    arg = float(np.clip(x, -1.0 + CLAMP_EPS, 1.0 - CLAMP_EPS))
    d = 1.0 / np.sqrt(1.0 - arg * arg)
    if tag == "arcsin":
        return d
    if tag == "arccos":
        return -d
    raise ArgumentError(f"unknown nonlinearity {tag!r}")


@dataclass
class DescriptorPipeline:
    """Composition internal(C) -> minmax -> nonlinearity, one row per feature.

    ``features`` maps each output feature to (source coordinate index,
    nonlinearity tag), which lets several features share one coordinate.
    Bounds come from ``fit`` on the training geometries; inputs that land
    outside the arcsin/arccos domain are clamped and counted in
    ``clamp_count``.
    """

    coords: tuple
    features: tuple[tuple[int, str], ...]
    bounds: tuple[tuple[float, float], ...] | None = None
    clamp_count: int = field(default=0, compare=False)

    def __post_init__(self):
        self.coords = tuple(self.coords)
        self.features = tuple((int(s), str(tag)) for s, tag in self.features)
        for src, tag in self.features:
            if not 0 <= src < len(self.coords):
                raise ArgumentError(f"feature source {src} out of range")
            if tag not in NONLINEARITIES:
                raise ArgumentError(f"unknown nonlinearity {tag!r}")
        if self.bounds is not None:
            self.bounds = tuple((float(a), float(b)) for a, b in self.bounds)
            for lo, hi in self.bounds:
                if hi <= lo:
                    raise ScalerError(f"invalid bounds ({lo}, {hi})")

    @property
    def num_features(self) -> int:
        return len(self.features)

    @property
    def num_coords(self) -> int:
        return len(self.coords)

    def internal_values(self, geom) -> np.ndarray:
        return np.array([c.evaluate(geom)[0] for c in self.coords])

    def fit(self, geometries) -> "DescriptorPipeline":
        """Set scaler bounds from the extrema of each internal coordinate."""
        table = np.array([self.internal_values(g) for g in geometries])
        self.bounds = tuple(minmax_fit(table[:, c]) for c in range(self.num_coords))
        return self

    def _require_fit(self):
        if self.bounds is None:
            raise ArgumentError("pipeline has no scaler bounds; call fit() first")

    def apply(self, geom) -> np.ndarray:
        self._require_fit()
        q = self.internal_values(geom)
        y = np.empty(self.num_features)
        for f, (src, tag) in enumerate(self.features):
            lo, hi = self.bounds[src]
            y[f] = _nonlin(tag, float(minmax_apply(q[src], lo, hi)), self)
        return y

    def jacobian(self, geom) -> np.ndarray:
        return self.apply_with_jacobian(geom)[1]

    def apply_with_jacobian(self, geom):
        """Feature vector plus d(features)/d(cartesian), shape (N, 3n)."""
        self._require_fit()
        values, grads = [], []
        for c in self.coords:
            v, g = c.evaluate(geom)
            values.append(v)
            grads.append(g)
        y = np.empty(self.num_features)
        jac = np.zeros((self.num_features, grads[0].size))
        for f, (src, tag) in enumerate(self.features):
            lo, hi = self.bounds[src]
            scaled = float(minmax_apply(values[src], lo, hi))
            y[f] = _nonlin(tag, scaled, self)
            slope = _nonlin_derivative(tag, scaled) * minmax_derivative(lo, hi)
            jac[f] = slope * grads[src]
        return y, jac


def pipeline_to_dict(p: DescriptorPipeline) -> dict:
    return {
        "coords": [list(coord_to_tuple(c)) for c in p.coords],
        "features": [[src, tag] for src, tag in p.features],
        "bounds": None if p.bounds is None else [list(b) for b in p.bounds],
    }


def pipeline_from_dict(d: dict) -> DescriptorPipeline:
    coords = tuple(coord_from_tuple(tuple(c)) for c in d["coords"])
    features = tuple((int(s), str(t)) for s, t in d["features"])
    bounds = d.get("bounds")
    if bounds is not None:
        bounds = tuple((float(a), float(b)) for a, b in bounds)
    return DescriptorPipeline(coords, features, bounds)
