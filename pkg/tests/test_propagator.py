import numpy as np
import pytest

from gridwave.errors import ConfigError
from gridwave.grid import SimulationBox
from gridwave.hamiltonian import (AttenuationSpec, HamiltonianSpec, Nucleus,
                                  ParticleSpec, UniformEdgeRegion)
from gridwave.propagator import (StepPlan, attenuation_step, compile_step,
                                 field_phase_step, kinetic_constant,
                                 kinetic_phase_step, nuclear_phase_step,
                                 pairwise_phase_step, propagate, split_step,
                                 split_step_inverse)
from gridwave.registers import particle_layout, pattern_of_value
from gridwave.statevector import StateVector, inner_product
from .conftest import cached_eig, hydrogen_spec, random_state
from .oracles import dense_split_cycle, free_gaussian_evolved


def _random_sv(rng, layout):
    return StateVector(random_state(rng, layout.num_qubits), layout)


def test_kinetic_constant_value():
    box = SimulationBox(1, 5, 10.0)
    assert kinetic_constant(box, 5, 1.0) == pytest.approx(2 * np.pi ** 2 / 100,
                                                          abs=1e-12)
    assert kinetic_constant(box, 5, 1.0) == pytest.approx(0.197392, abs=1e-6)


def test_kinetic_phase_on_momentum_component():
    # a register prepared at k=-4 picks up exactly exp(-i C dt 16)
    box = SimulationBox(1, 3, 8.0)
    layout = particle_layout(1, 1, 3, box=box)
    state = StateVector.basis_state(3, pattern_of_value(-4, 3), layout)
    plan = StepPlan(0.05)
    kinetic_phase_step(state, plan, hydrogen_spec(1))
    c = kinetic_constant(box, 3, 1.0)
    expect = np.exp(-1j * c * 0.05 * 16)
    assert state.amps[pattern_of_value(-4, 3)] == pytest.approx(expect, abs=1e-12)
    # k=0 component untouched
    state0 = StateVector.zero_state(3, layout)
    kinetic_phase_step(state0, plan, hydrogen_spec(1))
    assert state0.amps[0] == pytest.approx(1.0, abs=1e-15)


def test_split_step_identity_at_zero_dt(rng):
    box = SimulationBox(2, 3, 8.0)
    layout = particle_layout(1, 2, 3, box=box)
    state = _random_sv(rng, layout)
    before = state.amps.copy()
    split_step(state, StepPlan(0.0), hydrogen_spec(2))
    assert np.abs(state.amps - before).max() < 1e-10


def test_split_step_matches_dense_oracle_2d(rng):
    box = SimulationBox(2, 4, 10.0, 0.5)
    layout = particle_layout(1, 2, 4, box=box)
    spec = hydrogen_spec(2)
    u = dense_split_cycle(4, 2, 1, 10.0, 0.5, 0.01, [1.0], [-1.0],
                          [((0.0, 0.0), 1.0)], [[0.0]])
    for _ in range(5):
        psi = random_state(rng, 8)
        state = StateVector(psi.copy(), layout)
        split_step(state, StepPlan(0.01), spec)
        assert np.abs(state.amps - u @ psi).max() < 1e-10


def test_split_step_matches_dense_oracle_two_particles(rng):
    box = SimulationBox(1, 3, 8.0, 0.5)
    layout = particle_layout(2, 1, 3, box=box)
    spec = HamiltonianSpec((ParticleSpec(1.0, -1.0), ParticleSpec(1.0, -1.0)),
                           (Nucleus((0.0,), 1.0),))
    u = dense_split_cycle(3, 1, 2, 8.0, 0.5, 0.02, [1.0, 1.0], [-1.0, -1.0],
                          [((0.0,), 1.0)], [[0.0, 1.0], [1.0, 0.0]])
    for _ in range(5):
        psi = random_state(rng, 6)
        state = StateVector(psi.copy(), layout)
        split_step(state, StepPlan(0.02), spec)
        assert np.abs(state.amps - u @ psi).max() < 1e-10


def test_split_step_preserves_norm(rng):
    box = SimulationBox(2, 4, 12.0)
    layout = particle_layout(1, 2, 4, box=box)
    state = _random_sv(rng, layout)
    kernel = compile_step(layout, StepPlan(0.01), hydrogen_spec(2))
    for _ in range(20):
        kernel.apply(state)
    assert abs(state.norm_sq() - 1.0) < 1e-12


def test_split_step_inverse_roundtrip(rng):
    box = SimulationBox(1, 3, 8.0)
    layout = particle_layout(2, 1, 3, box=box)
    spec = HamiltonianSpec((ParticleSpec(), ParticleSpec()), (Nucleus((0.0,), 1.0),))
    state = _random_sv(rng, layout)
    before = state.amps.copy()
    plan = StepPlan(0.03)
    split_step(state, plan, spec)
    split_step_inverse(state, plan, spec)
    assert np.abs(state.amps - before).max() < 1e-12


def test_free_gaussian_matches_closed_form():
    # pure kinetic evolution: the split cycle is exact, so after 1 a.u. the
    # discretised packet must match the analytic dispersing Gaussian
    box = SimulationBox(1, 7, 20.0, 0.5)
    layout = particle_layout(1, 1, 7, box=box)
    spec = HamiltonianSpec((ParticleSpec(1.0, -1.0),))
    from gridwave.states import Gaussian, discretize
    amps, _ = discretize(Gaussian((-2.0,), (1.0,), (1.0,)), box)
    state = StateVector(amps.copy(), layout)
    plan = StepPlan(0.01)
    kernel = compile_step(layout, plan, spec)
    for _ in range(100):
        kernel.apply(state)
    xs = box.coordinates()
    ref = free_gaussian_evolved(xs, 1.0, -2.0, 1.0, 1.0)
    ref = ref / np.linalg.norm(ref)
    fid = abs(np.vdot(ref, state.amps)) ** 2
    assert fid > 1.0 - 1e-6


def test_nuclear_phase_zero_charge_identity(rng):
    box = SimulationBox(2, 3, 8.0)
    layout = particle_layout(1, 2, 3, box=box)
    spec = HamiltonianSpec((ParticleSpec(1.0, -1.0),), (Nucleus((0.0, 0.0), 0.0),))
    state = _random_sv(rng, layout)
    before = state.amps.copy()
    nuclear_phase_step(state, StepPlan(0.1), spec)
    assert np.abs(state.amps - before).max() < 1e-15


def test_nuclear_phase_half_pixel_denominator():
    # at offset 0.5 the central pixel's Coulomb distance is delta_r*sqrt(0.5)
    box = SimulationBox(2, 3, 8.0, 0.5)
    layout = particle_layout(1, 2, 3, box=box)
    state = StateVector.basis_state(6, 0, layout)   # pixel (0, 0)
    dt = 0.1
    nuclear_phase_step(state, StepPlan(dt), hydrogen_spec(2))
    dist = box.delta_r * np.sqrt(0.5 ** 2 + 0.5 ** 2)
    expect = np.exp(-1j * (-1.0) * dt / dist)
    assert state.amps[0] == pytest.approx(expect, abs=1e-12)


def test_pairwise_phase_examples(rng):
    box = SimulationBox(1, 4, 16.0)   # delta_r = 1
    layout = particle_layout(2, 1, 4, box=box)
    # zero coupling: identity
    spec0 = HamiltonianSpec((ParticleSpec(), ParticleSpec()),
                            pair_couplings=np.zeros((2, 2)))
    state = _random_sv(rng, layout)
    before = state.amps.copy()
    pairwise_phase_step(state, StepPlan(0.1), spec0)
    assert np.abs(state.amps - before).max() == 0.0
    # fixed pixels n1=3, n2=5, q=1, dt=0.1: phase 0.1/2 = 0.05 rad
    spec1 = HamiltonianSpec((ParticleSpec(), ParticleSpec()),
                            pair_couplings=np.array([[0.0, 1.0], [1.0, 0.0]]))
    idx = (pattern_of_value(5, 4) << 4) | pattern_of_value(3, 4)
    st2 = StateVector.basis_state(8, idx, layout)
    pairwise_phase_step(st2, StepPlan(0.1), spec1)
    assert st2.amps[idx] == pytest.approx(np.exp(-1j * 0.05), abs=1e-12)


def test_pairwise_roundtrip_with_zero_phase(rng):
    box = SimulationBox(2, 3, 8.0)
    layout = particle_layout(2, 2, 3, box=box)
    spec = HamiltonianSpec((ParticleSpec(), ParticleSpec()),
                           pair_couplings=np.array([[0.0, 1e-300], [1e-300, 0.0]]))
    state = _random_sv(rng, layout)
    before = state.amps.copy()
    pairwise_phase_step(state, StepPlan(0.0), spec)
    assert np.abs(state.amps - before).max() < 1e-12


def test_field_phase_values(rng):
    box = SimulationBox(1, 4, 32.0, 0.0)   # delta_r = 2, offset 0 -> x = 2n
    layout = particle_layout(1, 1, 4, box=box)
    spec = HamiltonianSpec((ParticleSpec(1.0, -1.0),), efield=(0.1,))
    # pixel x=2.0 (n=1), dt=0.01: phase -Q*x*E*dt = +0.002 rad
    state = StateVector.basis_state(4, pattern_of_value(1, 4), layout)
    field_phase_step(state, StepPlan(0.01), spec)
    expect = np.exp(1j * 0.002)
    assert state.amps[pattern_of_value(1, 4)] == pytest.approx(expect, abs=1e-14)
    # zero field: identity
    state2 = _random_sv(rng, layout)
    before = state2.amps.copy()
    field_phase_step(state2, StepPlan(0.01),
                     HamiltonianSpec((ParticleSpec(),), efield=(0.0,)))
    assert np.abs(state2.amps - before).max() == 0.0


def test_pixel_eigenstate_is_stationary(hyd2d_spec):
    # exact eigenvector of the pixelated Hamiltonian stays put over 100 fine steps
    box = SimulationBox(2, 4, 10.0, 0.5)
    evals, evecs = cached_eig(box, hyd2d_spec)
    layout = particle_layout(1, 2, 4, box=box)
    state = StateVector(evecs[:, 0].astype(complex).copy(), layout)
    plan = StepPlan(2e-4)
    kernel = compile_step(layout, plan, hyd2d_spec)
    initial = state.copy()
    for _ in range(100):
        kernel.apply(state)
    assert abs(inner_product(initial, state)) >= 1.0 - 1e-6


def test_trotter_convergence_order(hyd2d_spec):
    # final-state error after fixed physical time shrinks ~O(dt) over a decade
    from gridwave.states import Hydrogen2D, discretize
    box = SimulationBox(2, 4, 10.0, 0.5)
    evals, evecs = cached_eig(box, hyd2d_spec)
    layout = particle_layout(1, 2, 4, box=box)
    amps, _ = discretize(Hydrogen2D(1, 1), box)
    total_t = 0.4
    errs = []
    for dt in (0.02, 0.002):
        state = StateVector(amps.copy(), layout)
        kernel = compile_step(layout, StepPlan(dt), hyd2d_spec)
        for _ in range(int(round(total_t / dt))):
            kernel.apply(state)
        coeff = evecs.conj().T @ amps
        ideal = evecs @ (coeff * np.exp(-1j * evals * total_t))
        errs.append(np.linalg.norm(state.amps - ideal))
    ratio = errs[0] / errs[1]
    assert 5.0 < ratio < 20.0    # first-order: one decade in dt -> ~one decade in error


# -- attenuation -------------------------------------------------------------------

def _cap_setup(strength=1.0, msb=2, n_r=6, momentum=2.0):
    box = SimulationBox(1, n_r, 20.0, 0.5)
    layout = particle_layout(1, 1, n_r, box=box).with_ancilla("cap")
    atten = AttenuationSpec(UniformEdgeRegion(msb, strength))
    spec = HamiltonianSpec((ParticleSpec(1.0, -1.0),), attenuation=atten)
    from gridwave.states import Gaussian, discretize
    amps, _ = discretize(Gaussian((-4.0,), (momentum,), (0.5,)), box)
    state = StateVector(np.concatenate([amps, np.zeros_like(amps)]), layout)
    return box, layout, spec, state


def test_attenuation_zero_strength_is_identity():
    box, layout, spec, state = _cap_setup(strength=0.0)
    before = state.amps.copy()
    plan = StepPlan(0.01, attenuation=spec.attenuation)
    _, inc = attenuation_step(state, plan, spec)
    assert inc == 0.0
    assert np.abs(state.amps - before).max() == 0.0


def test_attenuation_detects_fully_inside_region():
    # all amplitude inside the strip, rotation near pi/2: detection -> 1
    box = SimulationBox(1, 4, 16.0, 0.5)
    layout = particle_layout(1, 1, 4, box=box).with_ancilla("cap")
    strength = 600.0   # theta = arccos(e^-6) close to pi/2
    atten = AttenuationSpec(UniformEdgeRegion(1, strength))
    spec = HamiltonianSpec((ParticleSpec(),), attenuation=atten)
    amps = np.zeros(16, dtype=complex)
    amps[pattern_of_value(-8, 4)] = 1.0   # leftmost pixel, inside the strip
    state = StateVector(np.concatenate([amps, np.zeros(16)]), layout)
    plan = StepPlan(0.01, attenuation=atten)
    _, inc = attenuation_step(state, plan, spec)
    assert inc > 1.0 - 1e-5
    # renormalising by the tiny survival amplifies rounding; stay within 1e-9
    assert abs(state.norm_sq() - 1.0) < 1e-9


def test_attenuation_cumulative_escape(rng):
    box, layout, spec, state = _cap_setup()
    plan = StepPlan(0.01, attenuation=spec.attenuation)
    escapes = []
    propagate(state, plan, spec, 1500, escape=escapes)
    from gridwave.observables import escape_tracker
    series = escape_tracker(escapes)
    assert np.all(np.diff(series.values) >= -1e-15)
    assert series.values[-1] > 0.9
    assert abs(state.norm_sq() - 1.0) < 1e-9


# -- propagate loop -----------------------------------------------------------------

def test_propagate_zero_steps(rng):
    box = SimulationBox(1, 3, 8.0)
    layout = particle_layout(1, 1, 3, box=box)
    state = _random_sv(rng, layout)
    before = state.amps.copy()
    propagate(state, StepPlan(0.01), hydrogen_spec(1), 0)
    assert np.abs(state.amps - before).max() == 0.0


def test_propagate_callbacks_and_events(rng):
    box = SimulationBox(1, 3, 8.0)
    layout = particle_layout(2, 1, 3, box=box)
    spec = HamiltonianSpec((ParticleSpec(), ParticleSpec()), (Nucleus((0.0,), 1.0),))
    state = _random_sv(rng, layout)
    times = []

    def cb(step, t, current):
        times.append(t)

    def event(state_, plan_, spec_):
        from gridwave.statevector import enlarge_particle
        state_ = enlarge_particle(state_, 0, 1)
        return state_, plan_.with_dt(0.02), spec_.with_couplings_zeroed()

    out = propagate(state, StepPlan(0.01), spec, 4, callbacks=[cb],
                    events={2: event})
    assert out.num_qubits == 7
    assert times == pytest.approx([0.01, 0.02, 0.04, 0.06])
    assert abs(out.norm_sq() - 1.0) < 1e-12


def test_stale_augmentation_refused():
    from gridwave.corrections import CoreCorrection
    corr = CoreCorrection(1, 0, 1, np.eye(2, dtype=complex), dt=0.004)
    plan = StepPlan(0.004, augmentation=corr)
    with pytest.raises(ConfigError):
        plan.with_dt(0.002)
    box = SimulationBox(1, 3, 8.0)
    layout = particle_layout(1, 1, 3, box=box)
    bad_plan = StepPlan(0.002, augmentation=corr)
    with pytest.raises(ConfigError):
        compile_step(layout, bad_plan, hydrogen_spec(1))


def test_exchange_symmetry_preserved(rng):
    # antisymmetric two-particle state keeps SWAP expectation -1 over 100 steps
    from gridwave.states import Gaussian, Hydrogen2D, antisymmetrize_direct, discretize
    from gridwave.statevector import swap_particle_registers
    box = SimulationBox(2, 4, 16.0, 0.5)
    layout = particle_layout(2, 2, 4, box=box)
    spec = HamiltonianSpec((ParticleSpec(1.0, -1.0), ParticleSpec(1.0, -1.0)),
                           (Nucleus((0.0, 0.0), 1.0),))
    a, _ = discretize(Hydrogen2D(0, 0), box)
    b, _ = discretize(Gaussian((0.0, 5.0), (0.0, -1.5), (0.4, 0.4)), box)
    combined, _ = antisymmetrize_direct(a, b)
    state = StateVector(combined, layout)
    kernel = compile_step(layout, StepPlan(0.01), spec)
    for _ in range(100):
        kernel.apply(state)
    swapped = swap_particle_registers(state, 0, 1)
    assert inner_product(state, swapped).real == pytest.approx(-1.0, abs=1e-9)
