import math

import numpy as np
import pytest

from curvednbody.dynamics import (
    GrowthFit,
    PhaseState,
    angular_momentum,
    growth_rate_experiment,
    hamiltonian,
    integrate,
    make_field,
    relative_equilibrium,
)
from curvednbody.errors import (
    InvalidConfiguration,
    NoGrowthWindow,
    PolarSingularity,
    SingularConfiguration,
    StepFailure,
)
from curvednbody.fixedpoints import as_mass_triple, ring_from_shape, shape_from_masses
from curvednbody.geometry import MassVector, force_function, kinetic_energy

EQUAL = as_mass_triple((1.0, 1.0, 1.0))
MV = EQUAL.mass_vector()
RING = ring_from_shape(shape_from_masses(EQUAL))
LAMBDA1_EQUAL = 8.0 * math.sqrt(3.0) / 9.0


def random_state(rng, spread=0.3):
    while True:
        try:
            return PhaseState.from_vector(
                np.concatenate(
                    [
                        math.pi / 2 + rng.uniform(-spread, spread, 3),
                        np.array([0.0, 2.1, 4.2]) + rng.uniform(-spread, spread, 3),
                        rng.normal(0.0, 0.3, 6),
                    ]
                )
            )
        except SingularConfiguration:
            continue


class TestPhaseState:
    def test_vector_roundtrip(self):
        state = PhaseState((1.0, 1.5), (0.2, 7.0), (0.1, -0.1), (0.3, 0.4))
        back = PhaseState.from_vector(state.as_vector())
        assert back == state
        # longitudes are not reduced, so winding survives
        assert back.phis[1] == 7.0

    def test_polar_guard(self):
        with pytest.raises(PolarSingularity):
            PhaseState((1e-10, 1.0), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0))

    def test_singular_pair_rejected(self):
        with pytest.raises(SingularConfiguration):
            PhaseState((1.0, 1.0), (2.0, 2.0), (0.0, 0.0), (0.0, 0.0))

    def test_size_checks(self):
        with pytest.raises(InvalidConfiguration):
            PhaseState((1.0,), (1.0,), (0.0,), (0.0,))
        with pytest.raises(InvalidConfiguration):
            PhaseState((1.0, 1.0), (1.0,), (0.0, 0.0), (0.0, 0.0))
        with pytest.raises(InvalidConfiguration):
            PhaseState((1.0, math.inf), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0))
        with pytest.raises(InvalidConfiguration):
            PhaseState.from_vector(np.zeros(10))


class TestField:
    def test_matches_hamiltonian_gradient(self, rng):
        # the field must be the symplectic gradient of the energy
        field = make_field(MV, 0.0)
        eps = 1e-6
        for _ in range(5):
            x = random_state(rng).as_vector()
            rhs = field(x)
            for k in range(12):
                d = np.zeros(12)
                d[k] = eps
                fd = (hamiltonian(MV, x + d) - hamiltonian(MV, x - d)) / (2 * eps)
                partner = (k + 6) % 12
                expected = fd if k >= 6 else -fd
                assert rhs[partner] == pytest.approx(
                    expected, abs=1e-6 * max(1.0, abs(expected))
                )

    def test_rotating_frame_shifts_longitude_rate(self, rng):
        x = random_state(rng).as_vector()
        inertial = make_field(MV, 0.0)(x)
        rotating = make_field(MV, 0.9)(x)
        diff = inertial - rotating
        assert np.max(np.abs(diff[3:6] - 0.9)) < 1e-15
        diff[3:6] = 0.0
        assert np.max(np.abs(diff)) == 0.0

    def test_vanishes_at_relative_equilibrium(self):
        state = relative_equilibrium(MV, RING, 1.1)
        rhs = make_field(MV, 1.1)(state.as_vector())
        assert np.max(np.abs(rhs)) < 1e-14


class TestHamiltonian:
    def test_matches_energy_pieces(self, rng):
        state = random_state(rng)
        expected = kinetic_energy(MV, state) - force_function(
            MV, state.configuration()
        )
        assert hamiltonian(MV, state) == pytest.approx(expected, rel=1e-13)

    def test_rotating_frame_subtracts_momentum(self, rng):
        state = random_state(rng)
        inertial = hamiltonian(MV, state)
        rotating = hamiltonian(MV, state, omega=0.7)
        assert rotating == pytest.approx(
            inertial - 0.7 * angular_momentum(state), rel=1e-13
        )


class TestIntegrate:
    def test_tracks_relative_equilibrium(self):
        state = relative_equilibrium(MV, RING, 1.3)
        record = integrate(MV, state, horizon=5.0, step=1e-3, omega=1.3)
        assert np.max(np.abs(record.states[-1] - state.as_vector())) < 1e-12
        assert record.max_equator_deviation < 1e-12

    def test_conservation_on_perturbed_run(self, rng):
        rest = relative_equilibrium(MV, RING, 1.3).as_vector()
        x0 = rest + 1e-2 * rng.uniform(-1.0, 1.0, 12)
        record = integrate(MV, x0, horizon=10.0, step=1e-3, omega=1.3)
        assert record.energy_drift < 5e-11
        assert record.momentum_drift < 1e-13

    def test_midpoint_and_rk45_agree(self, rng):
        rest = relative_equilibrium(MV, RING, 1.3).as_vector()
        x0 = rest + 1e-2 * rng.uniform(-1.0, 1.0, 12)
        mid = integrate(MV, x0, horizon=5.0, step=1e-3, omega=1.3)
        rk = integrate(MV, x0, horizon=5.0, step=1e-3, omega=1.3, method="rk45")
        assert np.array_equal(mid.times, rk.times)
        assert np.max(np.abs(mid.states - rk.states)) < 1e-6

    def test_frame_consistency(self, rng):
        # integrating in the rotating frame then unwinding the rotation
        # reproduces the inertial trajectory
        om = 1.3
        rest = relative_equilibrium(MV, RING, om).as_vector()
        x0 = rest + 1e-3 * rng.uniform(-1.0, 1.0, 12)
        rot = integrate(MV, x0, horizon=5.0, step=1e-3, omega=om)
        inert = integrate(MV, x0, horizon=5.0, step=1e-3, omega=0.0)
        unwound = rot.states.copy()
        unwound[:, 3:6] += om * rot.times[:, None]
        assert np.max(np.abs(unwound - inert.states)) < 1e-6

    def test_rotational_equivariance(self, rng):
        shift = 0.8
        rest = relative_equilibrium(MV, RING, 0.0).as_vector()
        x0 = rest + 1e-3 * rng.uniform(-1.0, 1.0, 12)
        x0_shifted = x0.copy()
        x0_shifted[3:6] += shift
        base = integrate(MV, x0, horizon=5.0, step=1e-3)
        moved = integrate(MV, x0_shifted, horizon=5.0, step=1e-3)
        expected = base.states.copy()
        expected[:, 3:6] += shift
        assert np.max(np.abs(moved.states - expected)) < 1e-6

    def test_equator_is_invariant(self, rng):
        rest = relative_equilibrium(MV, RING, 1.3).as_vector()
        x0 = rest.copy()
        x0[3:6] += 1e-2 * rng.uniform(-1.0, 1.0, 3)
        x0[9:12] += 1e-2 * rng.uniform(-1.0, 1.0, 3)
        record = integrate(MV, x0, horizon=10.0, step=1e-3, omega=1.3)
        assert record.max_equator_deviation < 1e-11

    def test_collision_aborts_with_step_failure(self):
        mv = MassVector((1.0, 1.0))
        state = PhaseState(
            (math.pi / 2, math.pi / 2), (0.0, 0.5), (0.0, 0.0), (0.4, -0.4)
        )
        with pytest.raises(StepFailure) as info:
            integrate(mv, state, horizon=5.0, step=1e-3)
        assert info.value.time is not None

    def test_invalid_inputs(self):
        state = relative_equilibrium(MV, RING, 0.0)
        with pytest.raises(InvalidConfiguration):
            integrate(MV, state, horizon=0.0)
        with pytest.raises(InvalidConfiguration):
            integrate(MV, state, horizon=1.0, record_stride=0)
        with pytest.raises(InvalidConfiguration):
            integrate(MV, state, horizon=1.0, method="euler")
        with pytest.raises(InvalidConfiguration):
            integrate(MV, np.zeros(8), horizon=1.0)


class TestGrowthExperiment:
    def test_unstable_rate_at_rest(self):
        fit = growth_rate_experiment(EQUAL, 0.0, horizon=30.0)
        expected = math.sqrt(LAMBDA1_EQUAL)
        assert isinstance(fit, GrowthFit)
        assert abs(fit.rate - expected) / expected < 0.05
        assert fit.expected_rate == pytest.approx(expected, abs=1e-12)
        assert fit.n_points >= 8

    def test_no_growth_when_stable(self):
        with pytest.raises(NoGrowthWindow) as info:
            growth_rate_experiment(EQUAL, 1.3, horizon=30.0)
        assert info.value.max_deviation < 1e-5

    def test_deviation_series_recorded(self):
        fit = growth_rate_experiment(EQUAL, 0.0, horizon=30.0)
        assert fit.times.shape == fit.deviations.shape
        assert fit.deviations[0] == pytest.approx(fit.amplitude, rel=1e-9)
