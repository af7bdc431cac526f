import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridwave.errors import LayoutError, PostSelectionError, SingularPhaseError
from gridwave.grid import SimulationBox
from gridwave.registers import Span, get_reg_val, particle_layout
from gridwave.statevector import (StateVector, apply_diagonal_phase,
                                  apply_inverse_qft, apply_qft,
                                  controlled_apply, enlarge_particle, fidelity,
                                  inner_product, measure_qubit,
                                  multi_controlled_x_rotation, pairwise_sum,
                                  register_add_sub, swap_particle_registers)
from .conftest import random_state
from .oracles import qft_matrix_reference


# -- reductions ----------------------------------------------------------------

def test_pairwise_sum_matches_fsum(rng):
    x = rng.normal(size=1 << 12)
    assert pairwise_sum(x) == pytest.approx(math.fsum(x), abs=1e-12)


def test_pairwise_sum_requires_power_of_two():
    with pytest.raises(ValueError):
        pairwise_sum(np.ones(3))


def test_inner_product_basics(rng):
    psi = StateVector(random_state(rng, 4))
    assert inner_product(psi, psi) == pytest.approx(1.0, abs=1e-12)
    e0 = StateVector.basis_state(4, 0)
    e7 = StateVector.basis_state(4, 7)
    assert inner_product(e0, e7) == 0.0
    with pytest.raises(LayoutError):
        inner_product(e0, StateVector.basis_state(3, 0))


# -- Fourier transform ----------------------------------------------------------

@pytest.mark.parametrize("signed", [True, False])
def test_qft_matches_reference_matrix(rng, signed):
    n_r = 3
    f = qft_matrix_reference(n_r)
    if not signed:
        # shifted convention: same physical matrix, indices relabelled by +rho
        m = 1 << n_r
        rho = m >> 1
        perm = [(v + rho) % m for v in range(m)]   # pattern of each signed row
        f = f[np.ix_(np.argsort(perm), np.argsort(perm))]
    layout = particle_layout(1, 1, n_r, signed=signed)
    a = random_state(rng, n_r)
    state = StateVector(a.copy(), layout)
    apply_qft(state, Span(0, n_r))
    assert np.abs(state.amps - f @ a).max() < 1e-12


@pytest.mark.parametrize("signed", [True, False])
def test_qft_inverse_roundtrip(rng, signed):
    layout = particle_layout(1, 2, 4, signed=signed)
    a = random_state(rng, 8)
    state = StateVector(a.copy(), layout)
    for span in layout.particles[0].spans:
        apply_qft(state, span)
    for span in layout.particles[0].spans:
        apply_inverse_qft(state, span)
    assert np.abs(state.amps - a).max() < 1e-12


def test_qft_zero_state_uniform():
    state = StateVector.zero_state(3)
    apply_qft(state, Span(0, 3))
    expect = np.full(8, 1 / np.sqrt(8))
    assert np.abs(state.amps - expect).max() < 1e-12


# -- diagonal phases --------------------------------------------------------------

def test_zero_phase_is_identity(rng):
    a = random_state(rng, 6)
    state = StateVector(a.copy(), particle_layout(1, 2, 3))
    apply_diagonal_phase(state, lambda vx, vy: 0.0 * vx, list(state.layout.particles[0].spans))
    assert np.abs(state.amps - a).max() == 0.0


def test_z_gate_via_phase():
    # theta(0)=0, theta(1)=pi on |+> gives |->
    state = StateVector(np.array([1, 1]) / np.sqrt(2), particle_layout(1, 1, 1))
    apply_diagonal_phase(state, lambda v: np.where(v == -1, np.pi, 0.0), [Span(0, 1)])
    expect = np.array([1, -1]) / np.sqrt(2)
    assert np.abs(state.amps - expect).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_diagonal_phase_preserves_moduli(seed):
    rng = np.random.default_rng(seed)
    a = random_state(rng, 6)
    state = StateVector(a.copy(), particle_layout(1, 2, 3))
    apply_diagonal_phase(state, lambda vx, vy: 0.3 * vx ** 2 - 1.7 * vy,
                         list(state.layout.particles[0].spans))
    assert np.abs(np.abs(state.amps) - np.abs(a)).max() < 1e-12
    assert abs(state.norm_sq() - 1.0) < 1e-12


def test_singular_phase_names_offender():
    state = StateVector.zero_state(4, particle_layout(1, 2, 2))
    spans = list(state.layout.particles[0].spans)
    with pytest.raises(SingularPhaseError) as err:
        apply_diagonal_phase(state, lambda vx, vy: 1.0 / (vx ** 2 + vy ** 2), spans)
    assert err.value.values == (0, 0)
    # an override at the singular tuple silences it
    apply_diagonal_phase(state, lambda vx, vy: 1.0 / (vx ** 2 + vy ** 2), spans,
                         overrides={(0, 0): 0.0})


# -- controlled application -------------------------------------------------------

def test_controlled_apply_basis_controls(rng):
    layout = particle_layout(1, 1, 3).with_ancilla("c")
    a = random_state(rng, 3)

    def op(sub):
        apply_qft(sub, Span(0, 3))

    # control |0>: untouched
    state = StateVector(np.concatenate([a, np.zeros(8)]), layout)
    controlled_apply(state, 3, op)
    assert np.abs(state.amps[:8] - a).max() == 0.0
    # control |1>: equals unconditional op
    state = StateVector(np.concatenate([np.zeros(8), a]), layout)
    controlled_apply(state, 3, op)
    ref = StateVector(a.copy())
    apply_qft(ref, Span(0, 3))
    assert np.abs(state.amps[8:] - ref.amps).max() < 1e-12


def test_controlled_phase_traces_cosine(rng):
    # |+> control, op = global phase e^{-iEt}: <+| probability cos^2(Et/2)
    e, t = -2.0, 0.7
    layout = particle_layout(1, 1, 2).with_ancilla("c")
    a = random_state(rng, 2)
    state = StateVector(np.concatenate([a, a]) / np.sqrt(2), layout)

    def op(sub):
        sub.amps *= np.exp(-1j * e * t)

    controlled_apply(state, 2, op)
    view = state.amps.reshape(2, 4)
    plus = np.linalg.norm((view[0] + view[1]) / np.sqrt(2)) ** 2
    assert plus == pytest.approx(np.cos(e * t / 2) ** 2, abs=1e-12)


def test_controlled_apply_rejects_control_inside_span():
    layout = particle_layout(1, 1, 3)
    state = StateVector.zero_state(3, layout)
    with pytest.raises(LayoutError):
        controlled_apply(state, 1, lambda sub: apply_qft(sub, Span(0, 3)))


# -- measurement --------------------------------------------------------------------

def test_measure_zero_state():
    state = StateVector.zero_state(3)
    record, _ = measure_qubit(state, 0, "z", forced_outcome=0)
    assert record.outcome == 0 and record.probability == pytest.approx(1.0)


def test_measure_plus_state(rng):
    state = StateVector(np.array([1, 1]) / np.sqrt(2))
    record, state = measure_qubit(state, 0, "z", rng=rng)
    assert record.probability == pytest.approx(0.5, abs=1e-12)
    assert abs(state.norm_sq() - 1.0) < 1e-12


def test_impossible_post_selection():
    # ancilla phased to |->: forcing the |+> outcome must fail
    state = StateVector(np.array([1, -1]) / np.sqrt(2))
    with pytest.raises(PostSelectionError):
        measure_qubit(state, 0, "x", forced_outcome=0)
    record, _ = measure_qubit(StateVector(np.array([1, -1]) / np.sqrt(2)),
                              0, "x", forced_outcome=1)
    assert record.probability == pytest.approx(1.0, abs=1e-12)


def test_measure_requires_rng_or_forcing():
    with pytest.raises(ValueError):
        measure_qubit(StateVector.zero_state(1), 0, "z")


# -- conditioned ancilla rotation ------------------------------------------------------

def test_x_rotation_identity_and_split():
    layout = particle_layout(1, 1, 2).with_ancilla("cap")
    spans = [Span(0, 2)]
    state = StateVector.basis_state(3, 0b01, layout)   # value 1, ancilla 0
    multi_controlled_x_rotation(state, spans, (1,), 2, 0.0)
    assert state.amps[0b01] == pytest.approx(1.0)
    theta = np.pi / 2 * 0.5
    multi_controlled_x_rotation(state, spans, (1,), 2, theta)
    assert state.amps[0b001] == pytest.approx(np.cos(theta))
    assert state.amps[0b101] == pytest.approx(1j * np.sin(theta))
    # non-matching value untouched
    other = StateVector.basis_state(3, 0b10, layout)
    multi_controlled_x_rotation(other, spans, (1,), 2, theta)
    assert other.amps[0b10] == pytest.approx(1.0)


def test_attenuation_angle_value():
    from gridwave.hamiltonian import AttenuationSpec, UniformEdgeRegion
    spec = AttenuationSpec(UniformEdgeRegion(1, 1.0))
    # arccos(exp(-V dt)) at V=1, dt=0.01: leading order sqrt(2 V dt) = 0.14107,
    # exact value 0.1411858 (frozen from direct evaluation)
    assert spec.angle(1.0, 0.01) == pytest.approx(0.1411858, abs=1e-6)


# -- register arithmetic ------------------------------------------------------------

@pytest.mark.parametrize("signed", [True, False])
def test_add_sub_examples(signed):
    layout = particle_layout(2, 1, 4, signed=signed)
    a_span, b_span = layout.span(0, 0), layout.span(1, 0)

    def mk(a, b):
        from gridwave.registers import pattern_of_value
        idx = (pattern_of_value(b, 4, signed=signed) << 4) \
            | pattern_of_value(a, 4, signed=signed)
        return StateVector.basis_state(8, idx, layout)

    def read(state):
        idx = int(np.argmax(np.abs(state.amps)))
        return (get_reg_val(idx, 0, 4, signed=signed),
                get_reg_val(idx, 4, 4, signed=signed))

    st1 = mk(3, 5)
    register_add_sub(st1, a_span, b_span, "subtract")
    assert read(st1) == (-2, 5)
    register_add_sub(st1, a_span, b_span, "add")
    assert read(st1) == (3, 5)


def test_add_sub_wraparound():
    layout = particle_layout(2, 1, 3)
    state = StateVector.basis_state(6, (0b001 << 3) | 0b100, layout)  # |-4>|1>
    register_add_sub(state, layout.span(0, 0), layout.span(1, 0), "subtract")
    idx = int(np.argmax(np.abs(state.amps)))
    assert get_reg_val(idx, 0, 3) == 3 and get_reg_val(idx, 3, 3) == 1


@pytest.mark.parametrize("signed", [True, False])
def test_add_sub_is_permutation(signed):
    # round-trip over every basis state at n_r=4
    layout = particle_layout(2, 1, 4, signed=signed)
    a_span, b_span = layout.span(0, 0), layout.span(1, 0)
    dim = 1 << 8
    amps = np.arange(1, dim + 1, dtype=np.complex128)
    amps /= np.linalg.norm(amps)
    state = StateVector(amps.copy(), layout)
    register_add_sub(state, a_span, b_span, "subtract")
    assert np.abs(np.sort(np.abs(state.amps)) - np.sort(np.abs(amps))).max() < 1e-15
    register_add_sub(state, a_span, b_span, "add")
    assert np.abs(state.amps - amps).max() < 1e-12


def test_add_sub_span_order_irrelevant(rng):
    # arithmetic register above the static one
    layout = particle_layout(2, 1, 3)
    a = random_state(rng, 6)
    s1 = StateVector(a.copy(), layout)
    register_add_sub(s1, layout.span(1, 0), layout.span(0, 0), "subtract")
    register_add_sub(s1, layout.span(1, 0), layout.span(0, 0), "add")
    assert np.abs(s1.amps - a).max() < 1e-12


# -- enlargement ---------------------------------------------------------------------

@pytest.mark.parametrize("value", [-1, 3])
def test_enlarge_sign_extension(value):
    from gridwave.registers import pattern_of_value
    box = SimulationBox(1, 3, 8.0)
    layout = particle_layout(1, 1, 3, box=box)
    state = StateVector.basis_state(3, pattern_of_value(value, 3), layout)
    grown = enlarge_particle(state, 0, 1)
    assert grown.num_qubits == 4
    idx = int(np.argmax(np.abs(grown.amps)))
    assert get_reg_val(idx, 0, 4) == value


def test_enlarge_preserves_marginals(rng):
    from gridwave.observables import probability_density
    box = SimulationBox(2, 3, 8.0)
    layout = particle_layout(1, 2, 3, box=box)
    state = StateVector(random_state(rng, 6), layout)
    before = probability_density(state, 0)
    grown = enlarge_particle(state, 0, 1)
    after = probability_density(grown, 0)
    # old pixels sit in the centre of the doubled axis
    assert after.shape == (16, 16)
    core = after[4:12, 4:12]
    assert np.abs(core - before).max() < 1e-12
    assert after.sum() == pytest.approx(1.0, abs=1e-12)
    outer = after.copy()
    outer[4:12, 4:12] = 0.0
    assert outer.max() == 0.0


def test_swap_particles_is_exchange(rng):
    layout = particle_layout(2, 1, 3)
    a, b = random_state(rng, 3), random_state(rng, 3)
    product = np.kron(b, a)   # particle0 = a, particle1 = b
    state = StateVector(product, layout)
    swapped = swap_particle_registers(state, 0, 1)
    assert np.abs(swapped.amps - np.kron(a, b)).max() < 1e-12


def test_statevector_length_validation():
    with pytest.raises(LayoutError):
        StateVector(np.ones(3))


def test_fidelity_symmetry(rng):
    a = StateVector(random_state(rng, 5))
    b = StateVector(random_state(rng, 5))
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-14)
    assert 0.0 <= fidelity(a, b) <= 1.0
