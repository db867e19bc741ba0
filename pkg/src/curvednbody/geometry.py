"""Spherical kinematics and the cotangent force function on the unit sphere.

Bodies live on the unit sphere, parametrized by colatitude theta in (0, pi)
and longitude phi.  The mutual potential of a pair is proportional to the
cotangent of its geodesic separation, which blows up at collision and at
antipodal alignment; both ends are guarded by a shared tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidConfiguration,
    NonpositiveMass,
    PolarSingularity,
    SingularConfiguration,
)

# Geodesic separations within this distance of 0 or pi are treated as singular.
SINGULAR_TOL = 1e-10

# Colatitudes with sin(theta) at or below this value leave the chart.
POLAR_TOL = 1e-8

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MassVector:
    """Positive masses of n >= 2 bodies, optionally flagged as summing to one."""

    masses: tuple
    normalized: bool = False

    def __post_init__(self):
        values = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "masses", values)
        if len(values) < 2:
            raise InvalidConfiguration("need at least two bodies, got %d" % len(values))
        for m in values:
            if not (m > 0.0) or not math.isfinite(m):
                raise NonpositiveMass("masses must be positive, got %r" % (m,))
        if self.normalized and abs(sum(values) - 1.0) > 1e-12:
            raise InvalidConfiguration(
                "normalized flag set but masses sum to %.17g" % sum(values)
            )

    @classmethod
    def unit_sum(cls, values):
        """Scale ``values`` to total mass one and return the normalized vector."""
        total = float(sum(values))
        if not (total > 0.0):
            raise NonpositiveMass("total mass must be positive")
        return cls(tuple(float(v) / total for v in values), normalized=True)

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total(self) -> float:
        return sum(self.masses)

    def array(self) -> np.ndarray:
        return np.array(self.masses, dtype=float)


def _reduce_longitude(phi: float) -> float:
    out = math.fmod(float(phi), TWO_PI)
    if out < 0.0:
        out += TWO_PI
    return out


def _check_pair_separations(thetas, phis):
    """Reject configurations with a pair at or numerically at 0 or pi."""
    n = len(thetas)
    xs = [math.sin(t) * math.cos(p) for t, p in zip(thetas, phis)]
    ys = [math.sin(t) * math.sin(p) for t, p in zip(thetas, phis)]
    zs = [math.cos(t) for t in thetas]
    for i in range(n):
        for j in range(i + 1, n):
            cosd = xs[i] * xs[j] + ys[i] * ys[j] + zs[i] * zs[j]
            sind2 = max(1.0 - cosd * cosd, 0.0)
            if math.sqrt(sind2) <= SINGULAR_TOL:
                kind = "collision" if cosd > 0 else "antipodal alignment"
                raise SingularConfiguration(
                    "bodies %d and %d at %s (cos distance %.17g)" % (i + 1, j + 1, kind, cosd)
                )


@dataclass(frozen=True)
class SphereConfiguration:
    """Positions of n bodies on the unit sphere in spherical angles.

    Longitudes are reduced mod 2*pi on construction.  Construction fails if
    any colatitude leaves (0, pi) or any pair separation is singular.
    """

    thetas: tuple
    phis: tuple

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        phis = tuple(_reduce_longitude(p) for p in self.phis)
        if len(thetas) != len(phis):
            raise InvalidConfiguration("theta and phi counts differ")
        if len(thetas) < 2:
            raise InvalidConfiguration("need at least two bodies")
        for t in thetas:
            if not (0.0 < t < math.pi):
                raise PolarSingularity("colatitude %.17g outside (0, pi)" % t)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "phis", phis)
        _check_pair_separations(thetas, phis)

    @classmethod
    def from_pairs(cls, pairs):
        thetas = tuple(p[0] for p in pairs)
        phis = tuple(p[1] for p in pairs)
        return cls(thetas, phis)

    @property
    def n(self) -> int:
        return len(self.thetas)

    @property
    def angles(self):
        return tuple(zip(self.thetas, self.phis))


@dataclass(frozen=True)
class RingConfiguration:
    """Bodies on the equator in canonical ring order.

    The first longitude is rotated to zero and all angles reduced mod 2*pi.
    The canonical order requires strictly increasing longitudes, consecutive
    gaps in (0, pi), and a wrap-around gap exceeding pi, which forces n >= 3.
    """

    longitudes: tuple

    def __post_init__(self):
        raw = tuple(float(p) for p in self.longitudes)
        if len(raw) < 3:
            raise InvalidConfiguration("a ring needs at least three bodies")
        base = raw[0]
        phis = tuple(_reduce_longitude(p - base) for p in raw)
        for i in range(len(phis) - 1):
            gap = phis[i + 1] - phis[i]
            if not (0.0 < gap < math.pi):
                raise InvalidConfiguration(
                    "gap %d -> %d is %.17g, outside (0, pi)" % (i + 1, i + 2, gap)
                )
        if not (phis[-1] - phis[0] > math.pi):
            raise InvalidConfiguration(
                "total spread %.17g does not exceed pi" % (phis[-1] - phis[0])
            )
        object.__setattr__(self, "longitudes", phis)
        _check_pair_separations(tuple(math.pi / 2 for _ in phis), phis)

    @property
    def n(self) -> int:
        return len(self.longitudes)

    def gaps(self) -> tuple:
        return tuple(
            self.longitudes[i + 1] - self.longitudes[i] for i in range(self.n - 1)
        )

    def to_sphere(self) -> SphereConfiguration:
        return SphereConfiguration(
            tuple(math.pi / 2 for _ in self.longitudes), self.longitudes
        )


def to_cartesian(config) -> np.ndarray:
    """Unit-sphere embedding of a configuration as an (n, 3) array."""
    if isinstance(config, RingConfiguration):
        config = config.to_sphere()
    out = np.empty((config.n, 3))
    for i, (t, p) in enumerate(zip(config.thetas, config.phis)):
        st = math.sin(t)
        out[i] = (st * math.cos(p), st * math.sin(p), math.cos(t))
    return out


def geodesic_distance(qi, qj) -> float:
    """Great-circle distance between two unit vectors.

    Parameters
    ----------
    qi, qj : array_like
        Cartesian points with unit norm (checked to 1e-12).

    Returns
    -------
    float
        arccos of the clamped inner product, a value in [0, pi].
    """
    qi = np.asarray(qi, dtype=float)
    qj = np.asarray(qj, dtype=float)
    if qi.shape != (3,) or qj.shape != (3,):
        raise InvalidConfiguration("geodesic_distance expects 3-vectors")
    for q in (qi, qj):
        if abs(float(q @ q) - 1.0) > 1e-12:
            raise InvalidConfiguration("input vector is not unit length")
    dot = float(qi @ qj)
    return math.acos(min(1.0, max(-1.0, dot)))


def _unpack(masses: MassVector, config):
    if isinstance(config, RingConfiguration):
        config = config.to_sphere()
    if masses.n != config.n:
        raise InvalidConfiguration(
            "mass count %d does not match body count %d" % (masses.n, config.n)
        )
    return config


def _trig_tables(config: SphereConfiguration):
    st = [math.sin(t) for t in config.thetas]
    ct = [math.cos(t) for t in config.thetas]
    sp = [math.sin(p) for p in config.phis]
    cp = [math.cos(p) for p in config.phis]
    xs = [s * c for s, c in zip(st, cp)]
    ys = [s * c for s, c in zip(st, sp)]
    return st, ct, sp, cp, xs, ys, ct  # zs coincide with cos(theta)


def _pair_geometry(xs, ys, zs, i, j):
    cosd = xs[i] * xs[j] + ys[i] * ys[j] + zs[i] * zs[j]
    sind2 = max(1.0 - cosd * cosd, 0.0)
    sind = math.sqrt(sind2)
    if sind <= SINGULAR_TOL:
        raise SingularConfiguration(
            "bodies %d and %d at singular separation" % (i + 1, j + 1)
        )
    return cosd, sind


def force_function(masses: MassVector, config) -> float:
    """Value of the force function: the sum over pairs of m_i m_j cot(d_ij)."""
    config = _unpack(masses, config)
    m = masses.masses
    st, ct, sp, cp, xs, ys, zs = _trig_tables(config)
    total = 0.0
    for i in range(config.n):
        for j in range(i + 1, config.n):
            cosd, sind = _pair_geometry(xs, ys, zs, i, j)
            total += m[i] * m[j] * cosd / sind
    return total


def force_gradient(masses: MassVector, config) -> np.ndarray:
    """Gradient of the force function in spherical angles.

    Parameters
    ----------
    masses : MassVector
    config : SphereConfiguration or RingConfiguration

    Returns
    -------
    numpy.ndarray
        Length-2n vector: the n partials with respect to theta followed by
        the n partials with respect to phi.  Pair contributions to the phi
        block are accumulated with exactly opposite signs, so the phi block
        sums to zero to the last bit.
    """
    config = _unpack(masses, config)
    m = masses.masses
    n = config.n
    st, ct, sp, cp, xs, ys, zs = _trig_tables(config)
    dtheta = [0.0] * n
    dphi = [0.0] * n
    for i in range(n):
        for j in range(i + 1, n):
            cosd, sind = _pair_geometry(xs, ys, zs, i, j)
            f = m[i] * m[j] / (sind * sind * sind)
            # d q_i / d theta_i dotted with q_j, and the mirrored term
            a_i = ct[i] * cp[i] * xs[j] + ct[i] * sp[i] * ys[j] - st[i] * zs[j]
            a_j = ct[j] * cp[j] * xs[i] + ct[j] * sp[j] * ys[i] - st[j] * zs[i]
            # d q_i / d phi_i is z-hat cross q_i, so the two phi terms cancel exactly
            b = xs[i] * ys[j] - ys[i] * xs[j]
            dtheta[i] += f * a_i
            dtheta[j] += f * a_j
            dphi[i] += f * b
            dphi[j] -= f * b
    return np.array(dtheta + dphi)


def force_hessian_blocks(masses: MassVector, config):
    """Second derivatives of the force function in spherical angles.

    Returns the three n-by-n blocks (V_tt, V_tp, V_pp), where V_tt holds
    d2V/dtheta_i dtheta_j, V_tp holds d2V/dtheta_i dphi_j, and V_pp holds
    d2V/dphi_i dphi_j.  The theta-phi block for swapped index order is the
    transpose of V_tp.
    """
    config = _unpack(masses, config)
    m = masses.masses
    n = config.n
    st, ct, sp, cp, xs, ys, zs = _trig_tables(config)
    vtt = np.zeros((n, n))
    vtp = np.zeros((n, n))
    vpp = np.zeros((n, n))
    # tangent vectors along theta and phi for each body
    tth = [(ct[i] * cp[i], ct[i] * sp[i], -st[i]) for i in range(n)]
    tph = [(-ys[i], xs[i], 0.0) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            cosd, sind = _pair_geometry(xs, ys, zs, i, j)
            s3 = sind * sind * sind
            f3 = 1.0 / s3
            f5 = 3.0 * cosd / (s3 * sind * sind)
            mm = m[i] * m[j]
            qi = (xs[i], ys[i], zs[i])
            qj = (xs[j], ys[j], zs[j])

            def dot(a, b):
                return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

            at_i = dot(qj, tth[i])
            at_j = dot(qi, tth[j])
            ap_i = dot(qj, tph[i])
            ap_j = dot(qi, tph[j])

            vtt[i, j] = mm * (f5 * at_i * at_j + f3 * dot(tth[j], tth[i]))
            vtt[j, i] = vtt[i, j]
            vpp[i, j] = mm * (f5 * ap_i * ap_j + f3 * dot(tph[j], tph[i]))
            vpp[j, i] = vpp[i, j]
            vtp[i, j] = mm * (f5 * at_i * ap_j + f3 * dot(tph[j], tth[i]))
            vtp[j, i] = mm * (f5 * at_j * ap_i + f3 * dot(tph[i], tth[j]))

            # same-body second derivatives accumulate on the diagonal
            qi2_tt = (-xs[i], -ys[i], -zs[i])
            qj2_tt = (-xs[j], -ys[j], -zs[j])
            qi2_pp = (-xs[i], -ys[i], 0.0)
            qj2_pp = (-xs[j], -ys[j], 0.0)
            qi2_tp = (-ct[i] * sp[i], ct[i] * cp[i], 0.0)
            qj2_tp = (-ct[j] * sp[j], ct[j] * cp[j], 0.0)
            vtt[i, i] += mm * (f5 * at_i * at_i + f3 * dot(qj, qi2_tt))
            vtt[j, j] += mm * (f5 * at_j * at_j + f3 * dot(qi, qj2_tt))
            vpp[i, i] += mm * (f5 * ap_i * ap_i + f3 * dot(qj, qi2_pp))
            vpp[j, j] += mm * (f5 * ap_j * ap_j + f3 * dot(qi, qj2_pp))
            vtp[i, i] += mm * (f5 * at_i * ap_i + f3 * dot(qj, qi2_tp))
            vtp[j, j] += mm * (f5 * at_j * ap_j + f3 * dot(qi, qj2_tp))
    return vtt, vtp, vpp


def kinetic_energy(masses: MassVector, state) -> float:
    """Kinetic energy of a phase state in the spherical chart.

    ``state`` needs ``thetas``, ``pthetas`` and ``pphis`` attributes; the
    chart requires sin(theta) above the polar guard for every body.
    """
    m = masses.masses
    thetas = state.thetas
    if len(thetas) != masses.n:
        raise InvalidConfiguration("state and mass sizes differ")
    total = 0.0
    for i in range(masses.n):
        st = math.sin(float(thetas[i]))
        if st <= POLAR_TOL:
            raise PolarSingularity("body %d at sin(theta) = %.3g" % (i + 1, st))
        pt = float(state.pthetas[i])
        pp = float(state.pphis[i])
        total += pt * pt / (2.0 * m[i]) + pp * pp / (2.0 * m[i] * st * st)
    return total
