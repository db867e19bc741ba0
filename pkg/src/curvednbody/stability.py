"""Linear stability of rigid ring rotations on the equator.

At an equatorial fixed point the linearized flow splits into a block acting
on colatitude perturbations and one acting on longitude perturbations.  Both
blocks are built from pairwise couplings of the ring; their null vectors
reflect the rotational symmetries, and the signs of the remaining
eigenvalues decide linear stability as a function of the rotation rate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBasis,
    DegenerateSpectrum,
    DimensionMismatch,
    InvalidConfiguration,
    NotAFixedPoint,
    SingularConfiguration,
)
from .fixedpoints import (
    TriangleShape,
    as_mass_triple,
    fixed_point_residual,
    ring_from_shape,
    shape_from_masses,
)
from .geometry import (
    POLAR_TOL,
    SINGULAR_TOL,
    MassVector,
    RingConfiguration,
    force_hessian_blocks,
)

# Eigenvalues below this fraction of the matrix scale count as zero modes.
EIG_ZERO_TOL = 1e-9

FIXED_POINT_TOL = 1e-10


@dataclass(frozen=True)
class LinearizationBlocks:
    """Coupling matrices of the linearized flow at an equatorial fixed point.

    ``vertical`` couples colatitude perturbations, ``tangential`` couples
    longitude perturbations; both are symmetric n-by-n.  ``mass_diagonal``
    holds the masses, the diagonal of the kinetic metric on the equator.
    """

    masses: MassVector
    ring: RingConfiguration
    vertical: np.ndarray
    tangential: np.ndarray
    mass_diagonal: np.ndarray

    @property
    def n(self) -> int:
        return self.masses.n


def assemble_blocks(
    masses: MassVector,
    ring: RingConfiguration,
    verify_fixed_point: bool = True,
    residual_tol: float = FIXED_POINT_TOL,
) -> LinearizationBlocks:
    """Build the coupling blocks of the linearization at a ring fixed point.

    Off the diagonal the vertical block carries m_i m_j / sin^3(d_ij) and the
    tangential block -2 m_i m_j cos(d_ij) / sin^3(d_ij); the diagonals are
    fixed by the null vectors of the rotational symmetries.  By default the
    ring is checked to actually be a fixed point first.
    """
    if masses.n != ring.n:
        raise InvalidConfiguration(
            "mass count %d does not match ring size %d" % (masses.n, ring.n)
        )
    if verify_fixed_point:
        res = fixed_point_residual(masses, ring)
        worst = float(np.max(np.abs(res)))
        if worst >= residual_tol:
            raise NotAFixedPoint(
                "ring misses the fixed-point equations by %.3g" % worst
            )
    n = ring.n
    m = masses.masses
    phis = ring.longitudes
    vertical = np.zeros((n, n))
    tangential = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            cosd = math.cos(phis[i] - phis[j])
            sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
            if sind <= SINGULAR_TOL:
                raise SingularConfiguration(
                    "bodies %d and %d at singular separation" % (i + 1, j + 1)
                )
            f3 = m[i] * m[j] / (sind * sind * sind)
            vertical[i, j] = f3
            vertical[j, i] = f3
            vertical[i, i] -= f3 * cosd
            vertical[j, j] -= f3 * cosd
            g = -2.0 * f3 * cosd
            tangential[i, j] = g
            tangential[j, i] = g
            tangential[i, i] -= g
            tangential[j, j] -= g
    return LinearizationBlocks(
        masses=masses,
        ring=ring,
        vertical=vertical,
        tangential=tangential,
        mass_diagonal=masses.array(),
    )


@dataclass(frozen=True)
class NullVectors:
    """Symmetry directions annihilated by the coupling blocks.

    ``radial`` and ``transverse`` are the x and y coordinates of the ring,
    killed by the vertical block; ``uniform`` is the all-ones vector, killed
    by the tangential block.
    """

    radial: np.ndarray
    transverse: np.ndarray
    uniform: np.ndarray


def null_vectors(ring: RingConfiguration) -> NullVectors:
    phis = np.array(ring.longitudes)
    return NullVectors(
        radial=np.cos(phis),
        transverse=np.sin(phis),
        uniform=np.ones(ring.n),
    )


def null_structure_check(blocks: LinearizationBlocks) -> dict:
    """Relative norms of the blocks applied to their symmetry null vectors."""
    nv = null_vectors(blocks.ring)
    vnorm = float(np.linalg.norm(blocks.vertical))
    tnorm = float(np.linalg.norm(blocks.tangential))
    return {
        "vertical_radial": float(np.linalg.norm(blocks.vertical @ nv.radial)) / vnorm,
        "vertical_transverse": float(np.linalg.norm(blocks.vertical @ nv.transverse))
        / vnorm,
        "tangential_uniform": float(np.linalg.norm(blocks.tangential @ nv.uniform))
        / tnorm,
    }


def assemble_L_from_blocks(blocks: LinearizationBlocks, omega: float) -> np.ndarray:
    """Full 4n-by-4n linearized flow matrix at the rotating ring.

    Coordinate order is (theta, phi, p_theta, p_phi).  The rotation enters
    only through the centrifugal shift of the vertical block.
    """
    n = blocks.n
    m = blocks.mass_diagonal
    L = np.zeros((4 * n, 4 * n))
    minv = np.diag(1.0 / m)
    L[0:n, 2 * n : 3 * n] = minv
    L[n : 2 * n, 3 * n : 4 * n] = minv
    L[2 * n : 3 * n, 0:n] = blocks.vertical - omega * omega * np.diag(m)
    L[3 * n : 4 * n, n : 2 * n] = blocks.tangential
    return L


def assemble_L_general(masses: MassVector, state) -> np.ndarray:
    """Linearized Hamiltonian flow at an arbitrary phase state.

    ``state`` needs ``thetas``, ``phis``, ``pthetas`` and ``pphis``; the
    coordinate order of the output matches assemble_L_from_blocks.  A frame
    rotating at constant rate shifts the flow by a constant, so the same
    matrix is the Jacobian in every such frame.  At an equatorial fixed
    point with the rigid-rotation momenta this reduces to the block form.
    """
    n = masses.n
    m = masses.masses
    thetas = [float(t) for t in state.thetas]
    pphis = [float(p) for p in state.pphis]
    if len(thetas) != n or len(pphis) != n:
        raise InvalidConfiguration("state size does not match mass count")
    vtt, vtp, vpp = force_hessian_blocks(masses, state)
    L = np.zeros((4 * n, 4 * n))
    for i in range(n):
        st = math.sin(thetas[i])
        ct = math.cos(thetas[i])
        if st <= POLAR_TOL:
            raise SingularConfiguration("body %d at the polar guard" % (i + 1))
        s2 = st * st
        k = -2.0 * pphis[i] * ct / (m[i] * s2 * st)
        ncent = -pphis[i] * pphis[i] * (1.0 + 2.0 * ct * ct) / (m[i] * s2 * s2)
        L[i, 2 * n + i] = 1.0 / m[i]
        L[n + i, i] = k
        L[n + i, 3 * n + i] = 1.0 / (m[i] * s2)
        L[2 * n + i, 3 * n + i] = -k
        L[2 * n + i, i] = ncent
    L[2 * n : 3 * n, 0:n] += vtt
    L[2 * n : 3 * n, n : 2 * n] = vtp
    L[3 * n : 4 * n, 0:n] = vtp.T
    L[3 * n : 4 * n, n : 2 * n] = vpp
    return L


def _mass_weighted_eigensolve(block: np.ndarray, m: np.ndarray):
    """Eigenpairs of block @ diag(1/m) through the symmetric congruence.

    Conjugating by the square root of the mass diagonal turns the product
    into a symmetric matrix, so the eigenvalues are real and the solve is
    well conditioned.  Returned vectors u satisfy block @ diag(1/m) u = lam u.
    """
    root = np.sqrt(m)
    sym = block / root[:, None] / root[None, :]
    lams, w = np.linalg.eigh(sym)
    vecs = root[:, None] * w
    return lams, vecs, float(np.linalg.norm(sym))


@dataclass(frozen=True)
class StabilityReport:
    """Spectral classification of a rigid ring rotation.

    ``vertical_eigenvalues`` and ``tangential_eigenvalues`` list the spectra
    of the mass-weighted coupling blocks in ascending order.  ``lambda1`` is
    the single positive vertical eigenvalue whose square root separates the
    unstable and stable rotation rates.  ``spectrum`` holds the 4n - 6
    eigenvalues of the linearized flow transverse to the symmetry modes.
    """

    masses: MassVector
    omega: float
    vertical_eigenvalues: tuple
    tangential_eigenvalues: tuple
    lambda1: float
    omega_critical: float
    verdict: str
    spectrum: tuple
    unstable_exponent: float


VERDICT_FIXED_POINT = "fixed-point-unstable"
VERDICT_UNSTABLE = "re-unstable"
VERDICT_BOUNDARY = "re-degenerate-boundary"
VERDICT_STABLE = "re-linearly-stable"

# omega^2 within this distance of lambda1 counts as the degenerate boundary.
BOUNDARY_TOL = 1e-9


def _classify_rate(omega: float, lam1: float) -> str:
    if omega == 0.0:
        return VERDICT_FIXED_POINT
    w2 = omega * omega
    if abs(w2 - lam1) < BOUNDARY_TOL:
        return VERDICT_BOUNDARY
    if w2 < lam1:
        return VERDICT_UNSTABLE
    return VERDICT_STABLE


def spectral_analysis(blocks: LinearizationBlocks, omega: float = 0.0) -> StabilityReport:
    """Classify the rotating ring through the mass-weighted block spectra.

    The vertical block must show exactly two zero modes with the rest
    positive, the tangential block exactly one zero mode with the rest
    negative; any other pattern raises DegenerateSpectrum.
    """
    m = blocks.mass_diagonal
    vlams, _, vscale = _mass_weighted_eigensolve(blocks.vertical, m)
    tlams, _, tscale = _mass_weighted_eigensolve(blocks.tangential, m)
    vzero = np.abs(vlams) <= EIG_ZERO_TOL * vscale
    tzero = np.abs(tlams) <= EIG_ZERO_TOL * tscale
    if int(np.sum(vzero)) != 2:
        raise DegenerateSpectrum(
            "vertical block has %d zero modes, expected 2" % int(np.sum(vzero))
        )
    if int(np.sum(tzero)) != 1:
        raise DegenerateSpectrum(
            "tangential block has %d zero modes, expected 1" % int(np.sum(tzero))
        )
    vrest = vlams[~vzero]
    trest = tlams[~tzero]
    if vrest.size == 0 or np.any(vrest <= 0.0):
        raise DegenerateSpectrum("vertical block has a nonpositive transverse mode")
    if np.any(trest >= 0.0):
        raise DegenerateSpectrum("tangential block has a nonnegative transverse mode")
    lam1 = float(np.max(vrest))
    w2 = omega * omega
    spectrum = []
    for lam in vrest:
        s = cmath.sqrt(complex(lam - w2))
        spectrum.extend([s, -s])
    for lam in trest:
        s = complex(0.0, math.sqrt(-lam))
        spectrum.extend([s, -s])
    exponent = math.sqrt(lam1 - w2) if lam1 > w2 else 0.0
    return StabilityReport(
        masses=blocks.masses,
        omega=float(omega),
        vertical_eigenvalues=tuple(float(x) for x in vlams),
        tangential_eigenvalues=tuple(float(x) for x in tlams),
        lambda1=lam1,
        omega_critical=math.sqrt(lam1),
        verdict=_classify_rate(float(omega), lam1),
        spectrum=tuple(spectrum),
        unstable_exponent=exponent,
    )


def vertical_mode(blocks: LinearizationBlocks):
    """The positive vertical eigenvalue and its mass-weighted eigenvector.

    Returns (lambda1, u) with vertical @ diag(1/m) u = lambda1 u; the pair
    seeds the unstable direction of the growth experiment.
    """
    m = blocks.mass_diagonal
    lams, vecs, scale = _mass_weighted_eigensolve(blocks.vertical, m)
    idx = int(np.argmax(lams))
    if lams[idx] <= EIG_ZERO_TOL * scale:
        raise DegenerateSpectrum("vertical block has no positive mode")
    return float(lams[idx]), vecs[:, idx].copy()


def classify(masses, omega: float = 0.0) -> StabilityReport:
    """Stability report for the ring fixed point of an admissible mass triple."""
    triple = as_mass_triple(masses)
    shape = shape_from_masses(triple)
    ring = ring_from_shape(shape)
    blocks = assemble_blocks(triple.mass_vector(), ring)
    return spectral_analysis(blocks, omega)


def lambda1_closed_form(shape: TriangleShape, masses) -> float:
    """Closed form of the positive vertical eigenvalue for a mass triple.

    Agrees with the trace of the mass-weighted vertical block; each term is
    positive because the wrap separation has negative sine on admissible
    shapes.
    """
    m1, m2, m3 = as_mass_triple(masses).as_tuple()
    sa = math.sin(shape.alpha)
    sb = math.sin(shape.beta)
    sab = math.sin(shape.alpha + shape.beta)
    return (
        -(m2 / sa ** 2) * sb / (sab * sa)
        - (m2 / sb ** 2) * sa / (sab * sb)
        - (m3 / sb ** 2) * sab / (sa * sb)
    )


def omega_critical(masses) -> float:
    """Smallest rotation rate at which the vertical instability switches off."""
    return classify(masses, 0.0).omega_critical


def skew_product(v, w) -> float:
    """Canonical symplectic pairing of two phase-space vectors.

    Both vectors must have length 4n; positions occupy the first half and
    momenta the second.  The pairing of the first position coordinate with
    the first momentum coordinate is -1.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape or v.ndim != 1 or v.size % 4 != 0:
        raise DimensionMismatch(
            "skew product needs two equal-length vectors of length 4n"
        )
    half = v.size // 2
    return float(w[:half] @ v[half:] - v[:half] @ w[half:])


def _skew_matrix(dim4n: int) -> np.ndarray:
    half = dim4n // 2
    J = np.zeros((dim4n, dim4n))
    J[:half, half:] = -np.eye(half)
    J[half:, :half] = np.eye(half)
    return J


@dataclass(frozen=True)
class InvariantSplitting:
    """Symmetry subspaces of the linearized flow and the transverse spectra.

    ``symmetry_basis`` spans the modes generated by the rotational
    symmetries and their momentum shifts (dimension 6); ``rotation_basis``
    is the 2-dimensional part from the rotation about the polar axis alone.
    The complements are skew-orthogonal: ``transverse_basis`` (dimension
    4n - 6) pairs to zero with every symmetry mode, ``reduced_basis``
    (dimension 4n - 2) with the rotation modes.  Residuals measure how far
    the flow matrix is from leaving each subspace invariant.
    """

    symmetry_basis: np.ndarray
    rotation_basis: np.ndarray
    transverse_basis: np.ndarray
    reduced_basis: np.ndarray
    symmetry_residual: float
    transverse_residual: float
    reduced_residual: float
    transverse_spectrum: tuple
    reduced_spectrum: tuple
    nilpotent_residual: float | None


def _skew_complement(basis: np.ndarray, expected_dim: int) -> np.ndarray:
    """Orthonormal basis of the skew-orthogonal complement of ``basis``."""
    dim = basis.shape[0]
    J = _skew_matrix(dim)
    constraint = basis.T @ J
    _, sing, vt = np.linalg.svd(constraint)
    rank = int(np.sum(sing > 1e-10 * (sing[0] if sing.size else 1.0)))
    null_dim = dim - rank
    if null_dim != expected_dim:
        raise DegenerateBasis(
            "skew complement has dimension %d, expected %d" % (null_dim, expected_dim)
        )
    return vt[rank:].T


def _restriction(L: np.ndarray, q: np.ndarray):
    """Matrix of L on the span of the orthonormal columns q, with residual."""
    lq = L @ q
    coeffs = q.T @ lq
    leak = lq - q @ coeffs
    denom = float(np.linalg.norm(L))
    return coeffs, float(np.linalg.norm(leak)) / denom


def invariant_subspaces(
    blocks: LinearizationBlocks, omega: float = 0.0
) -> InvariantSplitting:
    """Split phase space at the rotating ring into symmetry and transverse parts.

    The symmetry modes are built explicitly from the null vectors; both
    skew-complements come from an SVD null space.  The symmetry subspace is
    invariant at every rotation rate, and at rate zero its restriction is
    nilpotent of index two, which is reported through ``nilpotent_residual``.
    """
    n = blocks.n
    dim = 4 * n
    m = blocks.mass_diagonal
    nv = null_vectors(blocks.ring)
    L = assemble_L_from_blocks(blocks, omega)

    def embed(theta=None, phi=None, ptheta=None, pphi=None):
        out = np.zeros(dim)
        if theta is not None:
            out[0:n] = theta
        if phi is not None:
            out[n : 2 * n] = phi
        if ptheta is not None:
            out[2 * n : 3 * n] = ptheta
        if pphi is not None:
            out[3 * n : 4 * n] = pphi
        return out

    symmetry = np.column_stack(
        [
            embed(theta=nv.radial),
            embed(ptheta=m * nv.radial),
            embed(theta=nv.transverse),
            embed(ptheta=m * nv.transverse),
            embed(phi=nv.uniform),
            embed(pphi=m * nv.uniform),
        ]
    )
    rotation = symmetry[:, 4:6]

    q_sym, _ = np.linalg.qr(symmetry)
    sym_restriction, sym_residual = _restriction(L, q_sym)
    nilpotent = None
    if omega == 0.0:
        nilpotent = float(
            np.linalg.norm(sym_restriction @ sym_restriction)
        ) / max(float(np.linalg.norm(L)), 1.0)

    transverse = _skew_complement(symmetry, dim - 6)
    reduced = _skew_complement(rotation, dim - 2)
    trans_restriction, trans_residual = _restriction(L, transverse)
    red_restriction, red_residual = _restriction(L, reduced)
    return InvariantSplitting(
        symmetry_basis=symmetry,
        rotation_basis=rotation,
        transverse_basis=transverse,
        reduced_basis=reduced,
        symmetry_residual=sym_residual,
        transverse_residual=trans_residual,
        reduced_residual=red_residual,
        transverse_spectrum=tuple(np.linalg.eigvals(trans_restriction)),
        reduced_spectrum=tuple(np.linalg.eigvals(red_restriction)),
        nilpotent_residual=nilpotent,
    )
