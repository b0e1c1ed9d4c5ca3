import math

import numpy as np
import pytest

from kerrjc import dynamics, hilbert
from kerrjc.dynamics import (
    IntegratorConfig,
    LindbladSpec,
    LOWEX_DIM,
    LOWEX_PATTERN,
    NORM_DRIFT_TOL,
    PositivityError,
    dissipator,
    evolve_closed,
    evolve_lindblad,
    lindblad_rhs,
    liouvillian,
    lowex_rhs,
    rk4_step_matrix,
    write_trajectory_csv,
)
from kerrjc.hilbert import SpaceSpec, TruncationError, basis_state
from kerrjc.model import (
    InitialStateSpec,
    ModelParams,
    dressed_states,
    hamiltonian,
    initial_state,
    resonant_state,
    sector_analytics,
)

SPACE = SpaceSpec(4)
RESONANT = ModelParams(delta=0.5, chi=0.5)
OPEN = ModelParams(delta=0.5, chi=0.5, gamma=0.1, p_z=0.01)


def random_lowex_rho(rng):
    """Random PSD unit-trace matrix supported on the printed pattern."""

    def psd2():
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        return x @ x.conj().T

    m = np.zeros((LOWEX_DIM, LOWEX_DIM), dtype=complex)
    m[0, 0] = rng.uniform(0.1, 1.0)
    m[1:3, 1:3] = psd2()
    m[3:5, 3:5] = psd2()
    return m / np.trace(m).real


def embed_lowex(block, space):
    full = np.zeros((space.dim, space.dim), dtype=complex)
    full[:LOWEX_DIM, :LOWEX_DIM] = block
    return full


def resonant_config(periods=3.0, steps_per_period=2000, stride=4):
    sa = sector_analytics(RESONANT, 1)
    return IntegratorConfig.for_periods(2 * math.pi / sa.rabi_frequency, periods,
                                        steps_per_period, stride)


class TestDissipator:
    def test_vacuum_dark_to_photon_loss(self):
        g0 = basis_state("g", 0, SPACE)
        rho = np.outer(g0, g0.conj())
        assert np.abs(dissipator(hilbert.annihilation(SPACE), rho)).max() == 0.0

    def test_dephasing_leaves_populations(self):
        rng = np.random.default_rng(31)
        rho = np.diag(rng.random(SPACE.dim)).astype(complex)
        rho /= np.trace(rho).real
        out = dissipator(hilbert.sigma_z(SPACE), rho)
        assert np.abs(out).max() < 1e-15

    def test_trace_free(self):
        rng = np.random.default_rng(32)
        for _ in range(10):
            x = rng.normal(size=(SPACE.dim, SPACE.dim)) \
                + 1j * rng.normal(size=(SPACE.dim, SPACE.dim))
            rho = x @ x.conj().T
            rho /= np.trace(rho).real
            op = rng.normal(size=(SPACE.dim, SPACE.dim)) \
                + 1j * rng.normal(size=(SPACE.dim, SPACE.dim))
            assert abs(np.trace(dissipator(op, rho))) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            dissipator(np.eye(2, dtype=complex), np.eye(3, dtype=complex))


class TestRhs:
    def test_zero_rates_is_von_neumann(self):
        rng = np.random.default_rng(33)
        h = hamiltonian(RESONANT, SPACE)
        spec = LindbladSpec(hamiltonian=h)
        x = rng.normal(size=(SPACE.dim, SPACE.dim)) \
            + 1j * rng.normal(size=(SPACE.dim, SPACE.dim))
        rho = x @ x.conj().T
        rho /= np.trace(rho).real
        assert np.allclose(lindblad_rhs(spec, rho), -1j * (h @ rho - rho @ h))

    def test_pure_loss_flows_down_the_ladder(self):
        g1 = basis_state("g", 1, SPACE)
        rho = np.outer(g1, g1.conj())
        spec = LindbladSpec(hamiltonian=np.zeros((SPACE.dim, SPACE.dim), complex),
                            collapse_ops=((hilbert.annihilation(SPACE), 0.2),))
        out = lindblad_rhs(spec, rho)
        assert out[0, 0].real > 0      # |g0> gains
        assert out[2, 2].real < 0      # |g1> loses

    def test_matches_lowex_oracle_on_pattern(self):
        rng = np.random.default_rng(34)
        params = ModelParams(delta=0.7, chi=0.3, gamma=0.13, p=0.07, p_z=0.02)
        spec = LindbladSpec.from_params(params, SPACE)
        for _ in range(25):
            block = random_lowex_rho(rng)
            full = embed_lowex(block, SPACE)
            generic = lindblad_rhs(spec, full)
            oracle = lowex_rhs(params, block)
            assert np.abs(generic[:LOWEX_DIM, :LOWEX_DIM] - oracle).max() < 1e-12
            outside = generic.copy()
            outside[:LOWEX_DIM, :LOWEX_DIM] = 0.0
            assert np.abs(outside).max() < 1e-14

    def test_lowex_rejects_off_pattern_support(self):
        rho = np.zeros((LOWEX_DIM, LOWEX_DIM), dtype=complex)
        rho[0, 0] = 0.5
        rho[0, 2] = rho[2, 0] = 0.3   # ground-state coherence, not in the pattern
        rho[2, 2] = 0.5
        with pytest.raises(ValueError):
            lowex_rhs(ModelParams(delta=0.5, chi=0.5), rho)

    def test_lowex_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            lowex_rhs(ModelParams(delta=0.5, chi=0.5), np.eye(4, dtype=complex))

    def test_liouvillian_matches_rhs(self):
        rng = np.random.default_rng(35)
        spec = LindbladSpec.from_params(OPEN, SPACE)
        sup = liouvillian(spec)
        for _ in range(5):
            x = rng.normal(size=(SPACE.dim, SPACE.dim)) \
                + 1j * rng.normal(size=(SPACE.dim, SPACE.dim))
            rho = x @ x.conj().T
            rho /= np.trace(rho).real
            direct = lindblad_rhs(spec, rho)
            via_sup = (sup @ rho.reshape(-1)).reshape(SPACE.dim, SPACE.dim)
            assert np.abs(direct - via_sup).max() < 1e-13

    def test_step_matrix_equals_staged_rk4(self):
        spec = LindbladSpec.from_params(OPEN, SPACE)
        rng = np.random.default_rng(36)
        x = rng.normal(size=(SPACE.dim, SPACE.dim)) \
            + 1j * rng.normal(size=(SPACE.dim, SPACE.dim))
        rho = x @ x.conj().T
        rho /= np.trace(rho).real
        dt = 1e-3
        k1 = lindblad_rhs(spec, rho)
        k2 = lindblad_rhs(spec, rho + dt / 2 * k1)
        k3 = lindblad_rhs(spec, rho + dt / 2 * k2)
        k4 = lindblad_rhs(spec, rho + dt * k3)
        staged = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        step = rk4_step_matrix(liouvillian(spec), dt)
        via_matrix = (step @ rho.reshape(-1)).reshape(SPACE.dim, SPACE.dim)
        assert np.abs(staged - via_matrix).max() < 1e-13


class TestEvolveClosed:
    def test_matches_resonant_closed_form(self):
        config = resonant_config()
        psi0 = resonant_state(RESONANT, 1, 0.0, SPACE)
        traj = evolve_closed(hamiltonian(RESONANT, SPACE), psi0, config,
                             space=SPACE)
        worst = max(
            np.abs(traj.states[k] - resonant_state(RESONANT, 1, t, SPACE)).max()
            for k, t in enumerate(traj.times))
        assert worst < 1e-8
        assert traj.max_norm_drift < NORM_DRIFT_TOL

    def test_eigenstate_stationary_up_to_phase(self):
        params = ModelParams(delta=0.8, chi=0.2)
        plus, _ = dressed_states(params, 1)
        sa = sector_analytics(params, 1)
        psi0 = np.zeros(SPACE.dim, dtype=complex)
        i_e, i_g = hilbert.sector_indices(1, SPACE)
        psi0[i_e], psi0[i_g] = plus
        config = IntegratorConfig.for_periods(2 * math.pi / sa.rabi_frequency, 2.0)
        traj = evolve_closed(hamiltonian(params, SPACE), psi0, config, space=SPACE)
        for k, t in enumerate(traj.times):
            expected = np.exp(-1j * sa.e_plus * t) * psi0
            assert np.abs(traj.states[k] - expected).max() < 1e-9

    def test_excitation_expectation_constant(self):
        config = resonant_config(periods=2.0)
        psi0 = initial_state(InitialStateSpec(theta0=0.9, phi0=0.4), SPACE)
        traj = evolve_closed(hamiltonian(RESONANT, SPACE), psi0, config, space=SPACE)
        nexc = hilbert.excitation_number(SPACE)
        vals = np.einsum("ki,ij,kj->k", traj.states.conj(), nexc, traj.states).real
        assert np.abs(vals - vals[0]).max() < 1e-10

    def test_requires_normalized_input(self):
        with pytest.raises(ValueError):
            evolve_closed(hamiltonian(RESONANT, SPACE),
                          2.0 * basis_state("g", 1, SPACE), resonant_config())

    def test_truncation_guard(self):
        tiny = SpaceSpec(1)
        psi0 = basis_state("g", 1, tiny)   # top level occupied from the start
        with pytest.raises(TruncationError):
            evolve_closed(hamiltonian(RESONANT, tiny), psi0, resonant_config(1.0),
                          space=tiny)


class TestEvolveLindblad:
    def test_relaxes_to_ground_state(self):
        # all rates positive, resonant params, t = 50/gamma
        params = ModelParams(delta=0.5, chi=0.5, gamma=0.1, p=0.05, p_z=0.01)
        sa = sector_analytics(params, 1)
        period = 2 * math.pi / sa.rabi_frequency
        dt = period / 500
        n_steps = int(round(50.0 / params.gamma / dt))
        n_steps += (-n_steps) % 500
        config = IntegratorConfig(dt=dt, t_final=n_steps * dt, record_stride=500)
        psi0 = initial_state(InitialStateSpec(theta0=1.1, phi0=0.3), SPACE)
        rho0 = np.outer(psi0, psi0.conj())
        traj = evolve_lindblad(LindbladSpec.from_params(params, SPACE), rho0,
                               config, space=SPACE)
        ground_fidelity = traj.states[-1][0, 0].real
        assert ground_fidelity > 1 - 1e-6

    def test_zero_rates_preserve_purity(self):
        config = resonant_config(periods=2.0)
        psi0 = initial_state(InitialStateSpec(theta0=0.7), SPACE)
        rho0 = np.outer(psi0, psi0.conj())
        traj = evolve_lindblad(LindbladSpec.from_params(RESONANT, SPACE), rho0,
                               config, space=SPACE)
        purity = np.einsum("kij,kji->k", traj.states, traj.states).real
        assert np.abs(purity - 1.0).max() < 1e-9

    def test_cptp_invariants_on_samples(self):
        config = resonant_config(periods=3.0)
        psi0 = initial_state(InitialStateSpec(theta0=0.0), SPACE)
        rho0 = np.outer(psi0, psi0.conj())
        traj = evolve_lindblad(LindbladSpec.from_params(OPEN, SPACE), rho0,
                               config, space=SPACE)
        for rho in traj.states[::50]:
            assert abs(np.trace(rho).real - 1.0) < 1e-9
            assert np.linalg.norm(rho - rho.conj().T) < 1e-9
            assert np.linalg.eigvalsh(rho).min() > -1e-8

    def test_matches_direct_rk4_of_lowex_oracle(self):
        rng = np.random.default_rng(41)
        params = ModelParams(delta=0.7, chi=0.3, gamma=0.12, p=0.05, p_z=0.02)
        block = random_lowex_rho(rng)
        full = embed_lowex(block, SPACE)
        sa = sector_analytics(params, 1)
        dt = (2 * math.pi / sa.rabi_frequency) / 2000
        steps = 400
        config = IntegratorConfig(dt=dt, t_final=steps * dt, record_stride=steps)
        traj = evolve_lindblad(LindbladSpec.from_params(params, SPACE), full,
                               config, space=SPACE)

        b = block.copy()
        for _ in range(steps):
            k1 = lowex_rhs(params, b)
            k2 = lowex_rhs(params, b + dt / 2 * k1)
            k3 = lowex_rhs(params, b + dt / 2 * k2)
            k4 = lowex_rhs(params, b + dt * k3)
            b = b + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        assert np.abs(traj.states[-1][:LOWEX_DIM, :LOWEX_DIM] - b).max() < 1e-10

    def test_excitation_monotone_under_decay(self):
        config = resonant_config(periods=3.0)
        psi0 = initial_state(InitialStateSpec(theta0=0.3), SPACE)
        rho0 = np.outer(psi0, psi0.conj())
        traj = evolve_lindblad(LindbladSpec.from_params(OPEN, SPACE), rho0,
                               config, space=SPACE)
        nexc = hilbert.excitation_number(SPACE)
        vals = np.einsum("kij,ji->k", traj.states, nexc).real
        assert (np.diff(vals) <= 1e-10).all()

    def test_step_halving_convergence(self):
        psi0 = initial_state(InitialStateSpec(theta0=0.4), SPACE)
        rho0 = np.outer(psi0, psi0.conj())
        spec = LindbladSpec.from_params(OPEN, SPACE)
        coarse = evolve_lindblad(spec, rho0, resonant_config(2.0, 2000, 8), space=SPACE)
        fine = evolve_lindblad(spec, rho0, resonant_config(2.0, 4000, 16), space=SPACE)
        assert np.allclose(coarse.times, fine.times)
        assert np.abs(coarse.states - fine.states).max() < 1e-8

    def test_positivity_guard_trips_on_coarse_step(self):
        # absurdly large step makes RK4 leave the physical cone
        params = ModelParams(delta=0.5, chi=0.5, gamma=2.0, p=1.0, p_z=1.0)
        psi0 = initial_state(InitialStateSpec(theta0=0.4), SPACE)
        rho0 = np.outer(psi0, psi0.conj())
        config = IntegratorConfig(dt=2.0, t_final=40.0, record_stride=1)
        with pytest.raises(PositivityError):
            evolve_lindblad(LindbladSpec.from_params(params, SPACE), rho0, config,
                            space=SPACE)


class TestRecordAndDump:
    def test_record_immutable_and_grid(self):
        config = resonant_config(periods=1.0)
        psi0 = initial_state(InitialStateSpec(theta0=0.0), SPACE)
        traj = evolve_closed(hamiltonian(RESONANT, SPACE), psi0, config, space=SPACE)
        assert len(traj.times) == config.n_steps // config.record_stride + 1
        with pytest.raises(ValueError):
            traj.states[0] = 0.0
        with pytest.raises(ValueError):
            traj.index_of(config.dt * 1.5)

    def test_trajectory_csv(self, tmp_path):
        config = resonant_config(periods=1.0, steps_per_period=200, stride=50)
        psi0 = initial_state(InitialStateSpec(theta0=0.0), SPACE)
        traj = evolve_closed(hamiltonian(RESONANT, SPACE), psi0, config, space=SPACE)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("t,re_00,im_00")
        assert len(lines) == len(traj.times) + 1
        first = [float(x) for x in lines[1].split(",")]
        assert len(first) == 1 + 2 * SPACE.dim**2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(dt=0.0, t_final=1.0)
        with pytest.raises(ValueError):
            IntegratorConfig(dt=0.1, t_final=1.05)
        with pytest.raises(ValueError):
            IntegratorConfig(dt=0.1, t_final=1.0, record_stride=3)
