"""Hamiltonian dynamics of the curved n-body problem in spherical angles.

The flow is integrated in the chart (theta, phi, p_theta, p_phi) with the
implicit midpoint rule as the reference integrator and an adaptive
Runge-Kutta route for cross-checks.  Pair contributions to the longitude
momenta cancel in exactly opposite floating-point pairs, so the total
angular momentum about the polar axis is conserved to the iteration floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidConfiguration,
    NoGrowthWindow,
    PolarSingularity,
    SingularConfiguration,
    StepFailure,
)
from .fixedpoints import as_mass_triple, ring_from_shape, shape_from_masses
from .geometry import (
    POLAR_TOL,
    SINGULAR_TOL,
    MassVector,
    RingConfiguration,
    SphereConfiguration,
)
from .integrators import MIDPOINT_TOL, midpoint_step, rk45_solve
from .stability import assemble_blocks, vertical_mode

# Integration aborts when any pair separation sine falls below this.
SEPARATION_FLOOR = 1e-6

EQUATOR = math.pi / 2.0


@dataclass(frozen=True)
class PhaseState:
    """Phase point of the spherical chart.

    Longitudes are kept unreduced so trajectories can wind.  Construction
    rejects colatitudes at the polar guard and singular pair separations.
    """

    thetas: tuple
    phis: tuple
    pthetas: tuple
    pphis: tuple

    def __post_init__(self):
        fields = {}
        for name in ("thetas", "phis", "pthetas", "pphis"):
            vals = tuple(float(v) for v in getattr(self, name))
            for v in vals:
                if not math.isfinite(v):
                    raise InvalidConfiguration("%s contains a non-finite entry" % name)
            fields[name] = vals
        n = len(fields["thetas"])
        if any(len(v) != n for v in fields.values()) or n < 2:
            raise InvalidConfiguration("phase state blocks must share a length >= 2")
        for i, t in enumerate(fields["thetas"]):
            if math.sin(t) <= POLAR_TOL:
                raise PolarSingularity("body %d at the polar guard" % (i + 1))
        for name, vals in fields.items():
            object.__setattr__(self, name, vals)
        _pair_guard(fields["thetas"], fields["phis"], SINGULAR_TOL)

    @property
    def n(self) -> int:
        return len(self.thetas)

    def as_vector(self) -> np.ndarray:
        return np.array(self.thetas + self.phis + self.pthetas + self.pphis)

    @classmethod
    def from_vector(cls, vec) -> "PhaseState":
        v = [float(x) for x in vec]
        if len(v) % 4 != 0:
            raise InvalidConfiguration("phase vector length must be 4n")
        n = len(v) // 4
        return cls(
            tuple(v[0:n]),
            tuple(v[n : 2 * n]),
            tuple(v[2 * n : 3 * n]),
            tuple(v[3 * n : 4 * n]),
        )

    def configuration(self) -> SphereConfiguration:
        return SphereConfiguration(self.thetas, self.phis)


def _pair_guard(thetas, phis, floor):
    """Smallest pair separation sine, raising below the given floor."""
    n = len(thetas)
    st = [math.sin(t) for t in thetas]
    xs = [st[i] * math.cos(phis[i]) for i in range(n)]
    ys = [st[i] * math.sin(phis[i]) for i in range(n)]
    zs = [math.cos(t) for t in thetas]
    worst = 2.0
    for i in range(n):
        for j in range(i + 1, n):
            cosd = xs[i] * xs[j] + ys[i] * ys[j] + zs[i] * zs[j]
            sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
            if sind <= floor:
                raise SingularConfiguration(
                    "bodies %d and %d at separation sine %.3g" % (i + 1, j + 1, sind)
                )
            worst = min(worst, sind)
    return worst


def relative_equilibrium(
    masses: MassVector, ring: RingConfiguration, omega: float
) -> PhaseState:
    """Phase state of the ring rotating rigidly at the given rate."""
    if masses.n != ring.n:
        raise InvalidConfiguration("mass count does not match ring size")
    return PhaseState(
        thetas=tuple(EQUATOR for _ in range(ring.n)),
        phis=ring.longitudes,
        pthetas=tuple(0.0 for _ in range(ring.n)),
        pphis=tuple(m * omega for m in masses.masses),
    )


def make_field(masses: MassVector, omega: float = 0.0):
    """Right-hand side of the equations of motion on flat 4n vectors.

    ``omega`` is the rotation rate of the observing frame; it shifts the
    longitude velocities by a constant and nothing else.  The longitude
    momentum derivatives are accumulated as exactly opposite pairs.
    """
    m = masses.masses
    n = masses.n
    om = float(omega)

    def field(x):
        vals = x.tolist()
        th = vals[0:n]
        ph = vals[n : 2 * n]
        pt = vals[2 * n : 3 * n]
        pf = vals[3 * n : 4 * n]
        st = [math.sin(t) for t in th]
        ct = [math.cos(t) for t in th]
        for i in range(n):
            if st[i] <= POLAR_TOL:
                raise PolarSingularity("body %d at the polar guard" % (i + 1))
        cp = [math.cos(p) for p in ph]
        sp = [math.sin(p) for p in ph]
        xs = [st[i] * cp[i] for i in range(n)]
        ys = [st[i] * sp[i] for i in range(n)]
        zs = ct
        dth = [0.0] * n
        dph = [0.0] * n
        for i in range(n):
            for j in range(i + 1, n):
                cosd = xs[i] * xs[j] + ys[i] * ys[j] + zs[i] * zs[j]
                sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
                if sind <= SINGULAR_TOL:
                    raise SingularConfiguration(
                        "bodies %d and %d at singular separation" % (i + 1, j + 1)
                    )
                f = m[i] * m[j] / (sind * sind * sind)
                a_i = ct[i] * cp[i] * xs[j] + ct[i] * sp[i] * ys[j] - st[i] * zs[j]
                a_j = ct[j] * cp[j] * xs[i] + ct[j] * sp[j] * ys[i] - st[j] * zs[i]
                b = xs[i] * ys[j] - ys[i] * xs[j]
                dth[i] += f * a_i
                dth[j] += f * a_j
                dph[i] += f * b
                dph[j] -= f * b
        out = [0.0] * (4 * n)
        for i in range(n):
            s2 = st[i] * st[i]
            out[i] = pt[i] / m[i]
            out[n + i] = pf[i] / (m[i] * s2) - om
            out[2 * n + i] = pf[i] * pf[i] * ct[i] / (m[i] * s2 * st[i]) + dth[i]
            out[3 * n + i] = dph[i]
        return np.array(out)

    return field


def hamiltonian(masses: MassVector, state, omega: float = 0.0) -> float:
    """Energy in a frame rotating at rate omega: kinetic + potential - omega J."""
    x = state.as_vector() if isinstance(state, PhaseState) else np.asarray(state, float)
    n = masses.n
    if x.shape != (4 * n,):
        raise InvalidConfiguration("state length does not match mass count")
    m = masses.masses
    vals = x.tolist()
    th = vals[0:n]
    ph = vals[n : 2 * n]
    pt = vals[2 * n : 3 * n]
    pf = vals[3 * n : 4 * n]
    st = [math.sin(t) for t in th]
    total = 0.0
    for i in range(n):
        if st[i] <= POLAR_TOL:
            raise PolarSingularity("body %d at the polar guard" % (i + 1))
        s2 = st[i] * st[i]
        total += pt[i] * pt[i] / (2.0 * m[i]) + pf[i] * pf[i] / (2.0 * m[i] * s2)
    xs = [st[i] * math.cos(ph[i]) for i in range(n)]
    ys = [st[i] * math.sin(ph[i]) for i in range(n)]
    zs = [math.cos(t) for t in th]
    for i in range(n):
        for j in range(i + 1, n):
            cosd = xs[i] * xs[j] + ys[i] * ys[j] + zs[i] * zs[j]
            sind = math.sqrt(max(1.0 - cosd * cosd, 0.0))
            if sind <= SINGULAR_TOL:
                raise SingularConfiguration(
                    "bodies %d and %d at singular separation" % (i + 1, j + 1)
                )
            total -= m[i] * m[j] * cosd / sind
    if omega != 0.0:
        total -= omega * sum(pf)
    return total


def angular_momentum(state) -> float:
    """Total momentum conjugate to a rigid rotation about the polar axis."""
    if isinstance(state, PhaseState):
        return sum(state.pphis)
    x = np.asarray(state, float)
    n = x.size // 4
    return float(np.sum(x[3 * n :]))


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled trajectory with its conservation and proximity monitors.

    Drifts are the largest deviations of the frame energy and the total
    longitude momentum from their initial values over the recorded samples.
    """

    times: np.ndarray
    states: np.ndarray
    omega: float
    energy_drift: float
    momentum_drift: float
    max_equator_deviation: float
    min_separation_sine: float

    @property
    def n(self) -> int:
        return self.states.shape[1] // 4

    def final_state(self) -> PhaseState:
        return PhaseState.from_vector(self.states[-1])


def integrate(
    masses: MassVector,
    initial,
    horizon: float,
    step: float = 1e-3,
    omega: float = 0.0,
    record_stride: int = 10,
    inner_tol: float = MIDPOINT_TOL,
    method: str = "midpoint",
) -> TrajectoryRecord:
    """Integrate the equations of motion and collect conservation monitors.

    ``method`` selects the implicit midpoint reference integrator or the
    adaptive "rk45" cross-check route.  Integration aborts with StepFailure
    when a step stalls or a recorded sample has a pair separation sine below
    the hard floor.
    """
    x0 = initial.as_vector() if isinstance(initial, PhaseState) else np.asarray(
        initial, float
    )
    n = masses.n
    if x0.shape != (4 * n,):
        raise InvalidConfiguration("initial state length does not match mass count")
    nsteps = int(round(horizon / step))
    if nsteps <= 0:
        raise InvalidConfiguration("horizon must cover at least one step")
    if record_stride < 1:
        raise InvalidConfiguration("record stride must be positive")
    field = make_field(masses, omega)

    def monitors(x, t, acc):
        vals = x.tolist()
        th = vals[0:n]
        ph = vals[n : 2 * n]
        try:
            sep = _pair_guard(th, ph, SEPARATION_FLOOR)
        except SingularConfiguration as exc:
            raise StepFailure(str(exc), time=t) from None
        acc["min_sep"] = min(acc["min_sep"], sep)
        acc["max_eq"] = max(acc["max_eq"], max(abs(t_ - EQUATOR) for t_ in th))
        h = hamiltonian(masses, x, omega)
        j = float(sum(vals[3 * n :]))
        if "h0" not in acc:
            acc["h0"] = h
            acc["j0"] = j
        acc["h_drift"] = max(acc["h_drift"], abs(h - acc["h0"]))
        acc["j_drift"] = max(acc["j_drift"], abs(j - acc["j0"]))

    acc = {"min_sep": 2.0, "max_eq": 0.0, "h_drift": 0.0, "j_drift": 0.0}
    times = [0.0]
    states = [x0.copy()]
    monitors(x0, 0.0, acc)

    if method == "rk45":
        t_record = [k * step for k in range(record_stride, nsteps + 1, record_stride)]
        if not t_record or t_record[-1] < nsteps * step:
            t_record.append(nsteps * step)
        ts, xs = rk45_solve(field, x0, nsteps * step, t_eval=np.array(t_record))
        for t, x in zip(ts, xs):
            times.append(float(t))
            states.append(np.asarray(x))
            monitors(states[-1], float(t), acc)
    elif method == "midpoint":
        x = x0
        for k in range(1, nsteps + 1):
            t = k * step
            try:
                x = midpoint_step(field, x, step, tol=inner_tol)
            except (StepFailure, SingularConfiguration, PolarSingularity) as exc:
                raise StepFailure(str(exc), time=t) from None
            if k % record_stride == 0 or k == nsteps:
                times.append(t)
                states.append(x.copy())
                monitors(x, t, acc)
    else:
        raise InvalidConfiguration("unknown integration method %r" % method)

    return TrajectoryRecord(
        times=np.array(times),
        states=np.array(states),
        omega=float(omega),
        energy_drift=acc["h_drift"],
        momentum_drift=acc["j_drift"],
        max_equator_deviation=acc["max_eq"],
        min_separation_sine=acc["min_sep"],
    )


@dataclass(frozen=True)
class GrowthFit:
    """Outcome of the deviation-growth experiment at a rotating ring.

    ``rate`` is the slope of log deviation over the fit window; for an
    unstable rate it should match ``expected_rate``, the square root of the
    shifted vertical eigenvalue.  Times and deviations cover all recorded
    samples, not just the window.
    """

    omega: float
    amplitude: float
    rate: float
    expected_rate: float | None
    n_points: int
    window: tuple
    log_residual: float
    max_deviation: float
    times: np.ndarray
    deviations: np.ndarray


def growth_rate_experiment(
    masses,
    omega: float,
    amplitude: float = 1e-6,
    horizon: float = 200.0,
    step: float = 0.01,
    record_stride: int = 10,
    fit_floor_factor: float = 10.0,
    fit_ceiling: float = 1e-2,
    min_points: int = 8,
    inner_tol: float = MIDPOINT_TOL,
) -> GrowthFit:
    """Measure the growth rate of a seeded perturbation in the rotating frame.

    The ring is perturbed along the vertical mode: the exact unstable
    eigenvector when the rate is subcritical, otherwise the same shape used
    as a neutral probe.  Deviations are fit on the window where they exceed
    ``fit_floor_factor`` times the amplitude but stay below ``fit_ceiling``,
    where growth is linear before nonlinear saturation.  Fewer than
    ``min_points`` samples in the window raises NoGrowthWindow, the expected
    outcome at supercritical rates.
    """
    triple = as_mass_triple(masses)
    mv = triple.mass_vector()
    ring = ring_from_shape(shape_from_masses(triple))
    blocks = assemble_blocks(mv, ring)
    lam1, u = vertical_mode(blocks)
    mu = lam1 - omega * omega
    scale = math.sqrt(mu) if mu > 0.0 else math.sqrt(lam1)
    n = mv.n
    m = mv.array()
    w = np.zeros(4 * n)
    w[0:n] = u / (m * scale)
    w[2 * n : 3 * n] = u
    w /= np.max(np.abs(w))

    rest = relative_equilibrium(mv, ring, omega).as_vector()
    x = rest + amplitude * w
    field = make_field(mv, omega)
    nsteps = int(round(horizon / step))
    times = [0.0]
    devs = [float(np.max(np.abs(x - rest)))]
    for k in range(1, nsteps + 1):
        t = k * step
        try:
            x = midpoint_step(field, x, step, tol=inner_tol)
        except (StepFailure, SingularConfiguration, PolarSingularity) as exc:
            raise StepFailure(str(exc), time=t) from None
        if k % record_stride == 0 or k == nsteps:
            dev = float(np.max(np.abs(x - rest)))
            times.append(t)
            devs.append(dev)
            if dev > 2.0 * fit_ceiling:
                break
    times_arr = np.array(times)
    devs_arr = np.array(devs)
    floor = fit_floor_factor * amplitude
    mask = (devs_arr >= floor) & (devs_arr <= fit_ceiling)
    count = int(np.sum(mask))
    max_dev = float(np.max(devs_arr))
    if count < min_points:
        raise NoGrowthWindow(
            "only %d samples between %.3g and %.3g" % (count, floor, fit_ceiling),
            max_deviation=max_dev,
        )
    tw = times_arr[mask]
    logd = np.log(devs_arr[mask])
    slope, intercept = np.polyfit(tw, logd, 1)
    residual = float(np.max(np.abs(logd - (slope * tw + intercept))))
    return GrowthFit(
        omega=float(omega),
        amplitude=float(amplitude),
        rate=float(slope),
        expected_rate=math.sqrt(mu) if mu > 0.0 else None,
        n_points=count,
        window=(float(tw[0]), float(tw[-1])),
        log_residual=residual,
        max_deviation=max_dev,
        times=times_arr,
        deviations=devs_arr,
    )
