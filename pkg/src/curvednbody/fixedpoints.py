"""Equatorial fixed points: the n-body criterion and the 3-body mass-shape maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateShape,
    InconsistentPair,
    InvalidConfiguration,
    NoConvergence,
    NonpositiveMass,
    NotAdmissible,
    SingularIterate,
)
from .geometry import SINGULAR_TOL, MassVector, RingConfiguration

TWO_PI = 2.0 * math.pi

# Clamp arccos arguments only this close to +-1; anything further out is a
# genuine domain violation rather than rounding.
ACOS_CLAMP_TOL = 1e-14


@dataclass(frozen=True)
class TriangleShape:
    """Ring shape of three bodies given by consecutive gaps alpha and beta.

    Valid shapes satisfy 0 < alpha < pi, 0 < beta < pi and
    pi < alpha + beta < 2*pi, which keeps all three pair separations inside
    (0, pi).
    """

    alpha: float
    beta: float

    def __post_init__(self):
        a = float(self.alpha)
        b = float(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if not (0.0 < a < math.pi and 0.0 < b < math.pi):
            raise DegenerateShape("gaps must lie strictly inside (0, pi)")
        if not (math.pi < a + b < TWO_PI):
            raise DegenerateShape(
                "gap sum %.17g must lie strictly inside (pi, 2*pi)" % (a + b)
            )

    @property
    def d12(self) -> float:
        return self.alpha

    @property
    def d23(self) -> float:
        return self.beta

    @property
    def d13(self) -> float:
        return TWO_PI - (self.alpha + self.beta)


def admissibility_value(m1: float, m2: float, m3: float) -> float:
    """Value of the admissibility inequality for a unit-sum mass triple."""
    return (
        m1 * m1 * m2 * m2
        + m1 * m1 * m3 * m3
        + m2 * m2 * m3 * m3
        - 2.0 * m1 * m2 * m3
    )


def admissibility_values_on_simplex(m1, m2):
    """Vectorized admissibility values over the open unit-sum simplex.

    ``m1`` and ``m2`` broadcast; the third mass is 1 - m1 - m2.  Values are
    returned for every point, including invalid ones outside the simplex,
    so callers must mask by positivity themselves.
    """
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    m3 = 1.0 - m1 - m2
    return (
        m1 * m1 * m2 * m2
        + m1 * m1 * m3 * m3
        + m2 * m2 * m3 * m3
        - 2.0 * m1 * m2 * m3
    )


class AdmissibilityCheck(NamedTuple):
    admissible: bool
    value: float


def is_admissible(m1: float, m2: float, m3: float) -> AdmissibilityCheck:
    """Check whether a raw positive triple (normalized internally) admits a fixed point."""
    for m in (m1, m2, m3):
        if not (float(m) > 0.0) or not math.isfinite(float(m)):
            raise NonpositiveMass("masses must be positive, got %r" % (m,))
    total = float(m1) + float(m2) + float(m3)
    value = admissibility_value(m1 / total, m2 / total, m3 / total)
    return AdmissibilityCheck(value < 0.0, value)


@dataclass(frozen=True)
class AdmissibleMassTriple:
    """Unit-sum positive mass triple strictly inside the admissible region.

    Raw triples are normalized to total mass one on construction; the
    admissibility inequality must then be strictly negative.
    """

    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        raw = (float(self.m1), float(self.m2), float(self.m3))
        for m in raw:
            if not (m > 0.0) or not math.isfinite(m):
                raise NonpositiveMass("masses must be positive, got %r" % (m,))
        total = sum(raw)
        m1, m2, m3 = (m / total for m in raw)
        value = admissibility_value(m1, m2, m3)
        if not (value < 0.0):
            raise NotAdmissible(
                "inequality value %.17g is not negative for (%.17g, %.17g, %.17g)"
                % (value, m1, m2, m3)
            )
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)
        object.__setattr__(self, "m3", m3)

    def as_tuple(self) -> tuple:
        return (self.m1, self.m2, self.m3)

    def mass_vector(self) -> MassVector:
        return MassVector(self.as_tuple(), normalized=True)


def as_mass_triple(masses) -> AdmissibleMassTriple:
    """Coerce a triple-like input to an AdmissibleMassTriple."""
    if isinstance(masses, AdmissibleMassTriple):
        return masses
    if isinstance(masses, MassVector):
        masses = masses.masses
    values = tuple(float(m) for m in masses)
    if len(values) != 3:
        raise InvalidConfiguration("expected exactly three masses")
    return AdmissibleMassTriple(*values)


def fixed_point_residual(masses: MassVector, config: RingConfiguration) -> np.ndarray:
    """Residual vector of the equatorial fixed-point criterion.

    Entry k holds the sum over the other bodies of
    m_k m_i sin(phi_k - phi_i) / sin^3(d_ki).  Pair terms are accumulated
    with exactly opposite signs, so the entries sum to zero identically.
    """
    if not isinstance(config, RingConfiguration):
        raise InvalidConfiguration("fixed_point_residual expects a RingConfiguration")
    if masses.n != config.n:
        raise InvalidConfiguration("mass and body counts differ")
    m = masses.masses
    phis = config.longitudes
    n = config.n
    out = [0.0] * n
    for i in range(n):
        for j in range(i + 1, n):
            s = math.sin(phis[i] - phis[j])
            cosd = math.cos(phis[i] - phis[j])
            sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
            if sind <= SINGULAR_TOL:
                raise SingularIterate(
                    "bodies %d and %d at singular separation" % (i + 1, j + 1)
                )
            t = m[i] * m[j] * s / (sind * sind * sind)
            out[i] += t
            out[j] -= t
    return np.array(out)


def shape_from_masses(masses) -> TriangleShape:
    """Invert the mass map: recover the unique ring shape of an admissible triple."""
    triple = as_mass_triple(masses)
    m1, m2, m3 = triple.as_tuple()
    cos_alpha = (m1 * m2 - m3 * (m1 + m2)) / (2.0 * m3 * math.sqrt(m1 * m2))
    cos_beta = (m3 * (m2 - m1) - m1 * m2) / (2.0 * m1 * math.sqrt(m2 * m3))
    angles = []
    for c in (cos_alpha, cos_beta):
        if abs(c) > 1.0:
            if abs(c) > 1.0 + ACOS_CLAMP_TOL:
                raise NotAdmissible(
                    "arccos argument %.17g leaves [-1, 1] beyond rounding" % c
                )
            c = math.copysign(1.0, c)
        angles.append(math.acos(c))
    return TriangleShape(angles[0], angles[1])


def masses_from_shape(shape: TriangleShape) -> AdmissibleMassTriple:
    """Map a ring shape to the unique unit-sum mass triple fixing it."""
    sa = math.sin(shape.alpha)
    sb = math.sin(shape.beta)
    sab = math.sin(shape.alpha + shape.beta)
    if abs(sab) <= SINGULAR_TOL or abs(sb) <= SINGULAR_TOL:
        raise DegenerateShape("shape sits on the degenerate boundary")
    w1 = (sa * sa) / (sb * sb)
    w2 = (sa * sa) / (sab * sab)
    return AdmissibleMassTriple(w1, w2, 1.0)


def ring_from_shape(shape: TriangleShape) -> RingConfiguration:
    """Canonical equatorial ring (0, alpha, alpha + beta) of a shape."""
    return RingConfiguration((0.0, shape.alpha, shape.alpha + shape.beta))


def shape_mass_defect(shape: TriangleShape, masses) -> float:
    """Largest relative defect of the three fixed-point proportionality relations."""
    triple = as_mass_triple(masses)
    m1, m2, m3 = triple.as_tuple()
    sa2 = math.sin(shape.alpha) ** 2
    sb2 = math.sin(shape.beta) ** 2
    sab2 = math.sin(shape.alpha + shape.beta) ** 2
    pairs = (
        (m2 * sab2, m3 * sa2),
        (m1 * sb2, m3 * sa2),
        (m2 * sab2, m1 * sb2),
    )
    worst = 0.0
    for lhs, rhs in pairs:
        scale = max(abs(lhs), abs(rhs), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def check_shape_mass_pair(shape: TriangleShape, masses, tol: float = 1e-8):
    """Raise InconsistentPair unless masses and shape satisfy the criterion relations."""
    defect = shape_mass_defect(shape, masses)
    if defect > tol:
        raise InconsistentPair(
            "mass-shape relations violated (relative defect %.3g > %.3g)" % (defect, tol)
        )


@dataclass(frozen=True)
class IsoscelesVerdict:
    """Outcome of the isosceles admissibility test for a raw triple."""

    masses: tuple
    isosceles: bool
    bound_margin: float
    bound_holds: bool
    admissible: bool
    value: float
    alpha_beta_gap: float | None


def isosceles_bound_check(m1: float, m2: float, m3: float) -> IsoscelesVerdict:
    """Test the equal-outer-mass criterion: admissible iff m1 = m3 and m1 < 4 m2."""
    check = is_admissible(m1, m2, m3)
    total = float(m1) + float(m2) + float(m3)
    t = (float(m1) / total, float(m2) / total, float(m3) / total)
    isosceles = abs(t[0] - t[2]) <= 1e-12
    margin = 4.0 * t[1] - t[0]
    bound_holds = margin > 0.0
    gap = None
    if check.admissible:
        shape = shape_from_masses(AdmissibleMassTriple(*t))
        gap = abs(shape.alpha - shape.beta)
    return IsoscelesVerdict(
        masses=t,
        isosceles=isosceles,
        bound_margin=margin,
        bound_holds=bound_holds,
        admissible=check.admissible,
        value=check.value,
        alpha_beta_gap=gap,
    )


def _ring_phi_hessian(masses: MassVector, phis) -> np.ndarray:
    """Hessian of the force function in the longitudes of an equatorial layout."""
    n = len(phis)
    m = masses.masses
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            cosd = math.cos(phis[i] - phis[j])
            sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
            if sind <= SINGULAR_TOL:
                raise SingularIterate(
                    "bodies %d and %d at singular separation" % (i + 1, j + 1)
                )
            g = -2.0 * m[i] * m[j] * cosd / (sind * sind * sind)
            out[i, j] = g
            out[j, i] = g
            out[i, i] -= g
            out[j, j] -= g
    return out


def _raw_residual(m, phis):
    n = len(phis)
    out = [0.0] * n
    for i in range(n):
        for j in range(i + 1, n):
            cosd = math.cos(phis[i] - phis[j])
            sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
            if sind <= SINGULAR_TOL:
                raise SingularIterate(
                    "iterate entered the singular set at pair (%d, %d)" % (i + 1, j + 1)
                )
            t = m[i] * m[j] * math.sin(phis[i] - phis[j]) / (sind * sind * sind)
            out[i] += t
            out[j] -= t
    return np.array(out)


def solve_fixed_point_numeric(
    masses: MassVector,
    initial: RingConfiguration,
    tol: float = 1e-11,
    max_iterations: int = 100,
) -> RingConfiguration:
    """Newton solve of the fixed-point criterion with the first longitude pinned.

    Parameters
    ----------
    masses : MassVector
        Masses of the n >= 3 bodies.
    initial : RingConfiguration
        Starting guess; the returned configuration keeps its first body at
        longitude zero.
    tol : float
        Convergence threshold on the residual max-norm.
    max_iterations : int
        Newton iteration cap; exceeding it raises NoConvergence.
    """
    if masses.n != initial.n:
        raise InvalidConfiguration("mass and body counts differ")
    m = masses.masses
    phis = np.array(initial.longitudes)
    res = _raw_residual(m, phis)
    norm = float(np.max(np.abs(res)))
    for _ in range(max_iterations):
        if norm < tol:
            break
        jac = -_ring_phi_hessian(masses, phis)[1:, 1:]
        try:
            step = np.linalg.solve(jac, -res[1:])
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Newton system: %s" % exc) from None
        # damped update: halve until the residual norm stops increasing
        scale = 1.0
        for _halving in range(40):
            trial = phis.copy()
            trial[1:] += scale * step
            try:
                trial_res = _raw_residual(m, trial)
            except SingularIterate:
                if scale <= 2.0 ** -39:
                    raise
                scale *= 0.5
                continue
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < norm or scale <= 2.0 ** -39:
                break
            scale *= 0.5
        phis, res, norm = trial, trial_res, trial_norm
    else:
        raise NoConvergence(
            "residual %.3g above %.3g after %d iterations" % (norm, tol, max_iterations)
        )
    try:
        return RingConfiguration(tuple(phis))
    except InvalidConfiguration as exc:
        raise NoConvergence("converged to a non-canonical ring: %s" % exc) from None
