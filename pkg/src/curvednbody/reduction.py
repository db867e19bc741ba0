"""Reduction of the three-body equatorial dynamics by its rotational symmetry.

Mass-weighted angle coordinates split off the conserved total angular
momentum; on a fixed momentum level the remaining two degrees of freedom
carry a reduced Hamiltonian whose rest points are the ring fixed points.
The Hessian of the force function in the gap variables certifies those rest
points as strict minima, giving nonlinear stability of the circular motions
within the equatorial subsystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfiguration, SingularConfiguration
from .fixedpoints import (
    TriangleShape,
    as_mass_triple,
    check_shape_mass_pair,
    shape_from_masses,
)
from .geometry import SINGULAR_TOL, MassVector
from .integrators import MIDPOINT_TOL, midpoint_step


@dataclass(frozen=True)
class JacobiConstants:
    """Mass combinations entering the symmetry-adapted angle coordinates."""

    mbar: float
    nu1: float
    nu2: float
    nu3: float
    nu4: float

    @classmethod
    def from_masses(cls, masses) -> "JacobiConstants":
        m1, m2, m3 = _triple_values(masses)
        mbar = m1 + m2 + m3
        m12 = m1 + m2
        return cls(
            mbar=mbar,
            nu1=m1 / m12,
            nu2=m2 / m12,
            nu3=m1 * m2 / m12,
            nu4=m12 * m3 / mbar,
        )


def _triple_values(masses):
    if isinstance(masses, MassVector):
        values = masses.masses
    elif hasattr(masses, "as_tuple"):
        values = masses.as_tuple()
    else:
        values = tuple(float(m) for m in masses)
    if len(values) != 3:
        raise InvalidConfiguration("reduction requires exactly three bodies")
    return values


def angle_transform_matrix(masses) -> np.ndarray:
    """Matrix sending raw longitudes to (mean angle, first gap, second combination)."""
    m1, m2, m3 = _triple_values(masses)
    jc = JacobiConstants.from_masses(masses)
    return np.array(
        [
            [m1 / jc.mbar, m2 / jc.mbar, m3 / jc.mbar],
            [-1.0, 1.0, 0.0],
            [-jc.nu1, -jc.nu2, 1.0],
        ]
    )


def momentum_transform_matrix(masses) -> np.ndarray:
    """Contragredient momentum map, written mass-weighted so no inverse is needed.

    With A the angle transform, D the mass diagonal and D' the reduced-mass
    diagonal, the momentum map is B = D' A D^-1; the congruence A^T B = I
    encodes that the pairing of angles and momenta is preserved.
    """
    m1, m2, m3 = _triple_values(masses)
    jc = JacobiConstants.from_masses(masses)
    a = angle_transform_matrix(masses)
    dprime = np.diag([jc.mbar, jc.nu3, jc.nu4])
    dinv = np.diag([1.0 / m1, 1.0 / m2, 1.0 / m3])
    return dprime @ a @ dinv


@dataclass(frozen=True)
class ReducedState:
    """Point of the reduced phase space on a fixed momentum level.

    phi1 is the gap from body 1 to body 2; phi2 combines body 3 with the
    mass-weighted pair angle.  momentum_level records the conserved total
    angular momentum of the underlying full state.
    """

    phi1: float
    phi2: float
    p1: float
    p2: float
    momentum_level: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.phi1, self.phi2, self.p1, self.p2])

    @classmethod
    def from_vector(cls, vec, momentum_level: float = 0.0) -> "ReducedState":
        v = [float(x) for x in vec]
        if len(v) != 4:
            raise InvalidConfiguration("reduced state vector must have length 4")
        return cls(v[0], v[1], v[2], v[3], momentum_level)

    def separations(self, masses) -> tuple:
        """The three pair separation angles (signed) determined by this state."""
        jc = JacobiConstants.from_masses(masses)
        return (
            self.phi1,
            self.phi2 - jc.nu1 * self.phi1,
            self.phi2 + jc.nu2 * self.phi1,
        )

    def is_singular(self, masses, tol: float = SINGULAR_TOL) -> bool:
        return any(abs(math.sin(d)) <= tol for d in self.separations(masses))


def to_jacobi(longitudes, momenta, masses):
    """Transform raw equatorial angles and momenta to the reduced chart.

    Returns (mean_angle, ReducedState, total_momentum); the total momentum
    equals the plain sum of the input momenta and is stored on the state as
    its momentum level.
    """
    phis = np.array([float(p) for p in longitudes])
    ps = np.array([float(p) for p in momenta])
    if phis.shape != (3,) or ps.shape != (3,):
        raise InvalidConfiguration("to_jacobi expects three angles and three momenta")
    a = angle_transform_matrix(masses)
    b = momentum_transform_matrix(masses)
    new_phi = a @ phis
    new_p = b @ ps
    p_total = float(ps[0] + ps[1] + ps[2])
    state = ReducedState(
        phi1=float(new_phi[1]),
        phi2=float(new_phi[2]),
        p1=float(new_p[1]),
        p2=float(new_p[2]),
        momentum_level=p_total,
    )
    return float(new_phi[0]), state, p_total


def from_jacobi(mean_angle: float, state: ReducedState, masses):
    """Invert the reduced chart back to raw longitudes and momenta."""
    a = angle_transform_matrix(masses)
    new_phi = np.array([float(mean_angle), state.phi1, state.phi2])
    new_p = np.array([state.momentum_level, state.p1, state.p2])
    phis = np.linalg.solve(a, new_phi)
    ps = a.T @ new_p
    return phis, ps


def _cot_from_angle(x: float) -> float:
    """Cotangent of the geodesic separation for a signed gap angle."""
    s = abs(math.sin(x))
    if s <= SINGULAR_TOL:
        raise SingularConfiguration("reduced separation %.17g is singular" % x)
    return math.cos(x) / s


def reduced_force_function(state: ReducedState, masses) -> float:
    """Force function evaluated through the reduced angles."""
    m1, m2, m3 = _triple_values(masses)
    da, db, dc = state.separations(masses)
    return (
        m1 * m2 * _cot_from_angle(da)
        + m2 * m3 * _cot_from_angle(db)
        + m1 * m3 * _cot_from_angle(dc)
    )


def _cot_derivative(x: float) -> float:
    """Derivative of the separation cotangent with respect to the signed gap."""
    s = math.sin(x)
    if abs(s) <= SINGULAR_TOL:
        raise SingularConfiguration("reduced separation %.17g is singular" % x)
    return -math.copysign(1.0, s) / (s * s)


def reduced_potential_gradient(state: ReducedState, masses) -> np.ndarray:
    """Partials of the reduced force function with respect to (phi1, phi2)."""
    m1, m2, m3 = _triple_values(masses)
    jc = JacobiConstants.from_masses(masses)
    da, db, dc = state.separations(masses)
    ga = _cot_derivative(da)
    gb = _cot_derivative(db)
    gc = _cot_derivative(dc)
    dv_dphi1 = m1 * m2 * ga - jc.nu1 * m2 * m3 * gb + jc.nu2 * m1 * m3 * gc
    dv_dphi2 = m2 * m3 * gb + m1 * m3 * gc
    return np.array([dv_dphi1, dv_dphi2])


def reduced_hamiltonian(state: ReducedState, masses, omega: float = 0.0) -> float:
    """Reduced energy on the momentum level of a rigid rotation with rate omega."""
    jc = JacobiConstants.from_masses(masses)
    kinetic = 0.5 * (state.p1 ** 2 / jc.nu3 + state.p2 ** 2 / jc.nu4)
    level_term = 0.5 * jc.mbar * omega * omega
    return kinetic - reduced_force_function(state, masses) + level_term


def reduced_eom(state: ReducedState, masses) -> np.ndarray:
    """Hamiltonian vector field of the reduced system, as (dphi1, dphi2, dp1, dp2)."""
    jc = JacobiConstants.from_masses(masses)
    grad = reduced_potential_gradient(state, masses)
    return np.array(
        [state.p1 / jc.nu3, state.p2 / jc.nu4, grad[0], grad[1]]
    )


def rest_point_from_shape(shape: TriangleShape, masses, omega: float = 0.0) -> ReducedState:
    """Reduced rest point sitting over the ring with the given shape."""
    jc = JacobiConstants.from_masses(masses)
    return ReducedState(
        phi1=shape.alpha,
        phi2=shape.beta + jc.nu1 * shape.alpha,
        p1=0.0,
        p2=0.0,
        momentum_level=jc.mbar * omega,
    )


def hessian_alpha_beta(shape: TriangleShape, masses, tol: float = 1e-8) -> np.ndarray:
    """Hessian of the force function in the gap variables at a consistent pair.

    The pair must satisfy the fixed-point proportionality relations to the
    given tolerance; at such points both eigenvalues are negative, making
    the ring shape a strict maximum of the force function on the level.
    """
    check_shape_mass_pair(shape, masses, tol)
    m1, m2, m3 = _triple_values(as_mass_triple(masses).as_tuple())
    sa, ca = math.sin(shape.alpha), math.cos(shape.alpha)
    sb, cb = math.sin(shape.beta), math.cos(shape.beta)
    sab = math.sin(shape.alpha + shape.beta)
    cab = math.cos(shape.alpha + shape.beta)
    cross = -m1 * m3 * cab / sab ** 3
    h11 = m1 * m2 * ca / sa ** 3 + cross
    h22 = m2 * m3 * cb / sb ** 3 + cross
    return 2.0 * np.array([[h11, cross], [cross, h22]])


def hessian_determinant_closed_form(shape: TriangleShape, masses) -> float:
    """Closed form for the determinant of half the gap Hessian."""
    m1, m2, m3 = _triple_values(as_mass_triple(masses).as_tuple())
    sa = math.sin(shape.alpha)
    sb = math.sin(shape.beta)
    return m1 * m3 * m2 ** 2 / (sa ** 2 * sb ** 2)


@dataclass(frozen=True)
class LyapunovCertificate:
    """Certificate that a ring rest point minimizes the reduced energy.

    The gap Hessian of the force function must be negative definite, and
    the full second variation of the reduced Hamiltonian (kinetic block
    plus negated potential Hessian in the reduced angles) must be positive
    definite.  ``certified`` collects both checks.
    """

    shape: TriangleShape
    hessian: np.ndarray
    eigenvalues: tuple
    trace: float
    determinant_half: float
    determinant_closed_form: float
    reduced_min_eigenvalue: float
    certified: bool


def lyapunov_certificate(masses, tol: float = 1e-8) -> LyapunovCertificate:
    """Build the stability certificate for the ring fixed point of a triple."""
    triple = as_mass_triple(masses)
    shape = shape_from_masses(triple)
    hess = hessian_alpha_beta(shape, triple, tol)
    eigs = np.linalg.eigvalsh(hess)
    jc = JacobiConstants.from_masses(triple)
    # chain rule from gap variables to the reduced angles
    b = np.array([[1.0, 0.0], [-jc.nu1, 1.0]])
    potential_block = -(b.T @ hess @ b)
    second_variation = np.zeros((4, 4))
    second_variation[:2, :2] = potential_block
    second_variation[2, 2] = 1.0 / jc.nu3
    second_variation[3, 3] = 1.0 / jc.nu4
    min_eig = float(np.linalg.eigvalsh(second_variation)[0])
    det_half = float(np.linalg.det(0.5 * hess))
    certified = bool(eigs[1] < 0.0 and min_eig > 0.0)
    return LyapunovCertificate(
        shape=shape,
        hessian=hess,
        eigenvalues=(float(eigs[0]), float(eigs[1])),
        trace=float(np.trace(hess)),
        determinant_half=det_half,
        determinant_closed_form=hessian_determinant_closed_form(shape, triple),
        reduced_min_eigenvalue=min_eig,
        certified=certified,
    )


@dataclass(frozen=True)
class ReducedTrajectory:
    """Sampled reduced trajectory with its energy drift."""

    times: np.ndarray
    states: np.ndarray
    energy_drift: float
    momentum_level: float


def integrate_reduced(
    masses,
    initial: ReducedState,
    horizon: float,
    step: float = 1e-3,
    record_stride: int = 10,
    inner_tol: float = MIDPOINT_TOL,
) -> ReducedTrajectory:
    """Implicit midpoint integration of the reduced system.

    Records every ``record_stride``-th step (plus the endpoints) and reports
    the largest deviation of the reduced energy from its initial value over
    the recorded samples.
    """
    jc = JacobiConstants.from_masses(masses)
    m1, m2, m3 = _triple_values(masses)
    nu1, nu2 = jc.nu1, jc.nu2
    inv_nu3, inv_nu4 = 1.0 / jc.nu3, 1.0 / jc.nu4

    def field(x):
        phi1, phi2, p1, p2 = x
        da = phi1
        db = phi2 - nu1 * phi1
        dc = phi2 + nu2 * phi1
        ga = _cot_derivative(da)
        gb = _cot_derivative(db)
        gc = _cot_derivative(dc)
        return np.array(
            [
                p1 * inv_nu3,
                p2 * inv_nu4,
                m1 * m2 * ga - nu1 * m2 * m3 * gb + nu2 * m1 * m3 * gc,
                m2 * m3 * gb + m1 * m3 * gc,
            ]
        )

    def energy(x):
        st = ReducedState.from_vector(x, initial.momentum_level)
        return reduced_hamiltonian(st, masses)

    nsteps = int(round(horizon / step))
    if nsteps <= 0:
        raise InvalidConfiguration("horizon must cover at least one step")
    x = initial.as_vector()
    times = [0.0]
    states = [x.copy()]
    e0 = energy(x)
    drift = 0.0
    for k in range(1, nsteps + 1):
        x = midpoint_step(field, x, step, tol=inner_tol)
        if k % record_stride == 0 or k == nsteps:
            times.append(k * step)
            states.append(x.copy())
            drift = max(drift, abs(energy(x) - e0))
    return ReducedTrajectory(
        times=np.array(times),
        states=np.array(states),
        energy_drift=drift,
        momentum_level=initial.momentum_level,
    )
