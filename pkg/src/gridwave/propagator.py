"""First-order split-operator time stepping on the register statevector.

One step applies, in order: per-sub-register transform to momentum space,
quadratic kinetic phases, transform back, diagonal interaction phases
(nuclear/field per particle, then pairwise via relative-coordinate
arithmetic), optional boundary damping, optional core patch correction.
All interaction factors are diagonal in the position grid and commute, so
the fixed ordering is a convention, not an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, LayoutError
from .hamiltonian import (AttenuationSpec, ExplicitRegion, HamiltonianSpec,
                          UniformEdgeRegion, pair_potential,
                          single_particle_potential)
from .registers import RegisterLayout, pattern_of_value, span_values
from .statevector import (StateVector, apply_inverse_qft, apply_phase_table,
                          apply_qft, masked_ancilla_x_rotation, measure_qubit,
                          register_add_sub)

CAP_ANCILLA = "cap"


@dataclass(frozen=True)
class StepPlan:
    """One split-operator cycle description."""

    dt: float
    trotter_order: int = 1
    augmentation: object | None = None     # CoreCorrection, see corrections.py
    attenuation: AttenuationSpec | None = None

    def __post_init__(self):
        if self.dt < 0:
            raise ConfigError("dt must be non-negative", field="plan.dt")
        if self.trotter_order != 1:
            raise ConfigError("only the first-order splitting is supported",
                              field="plan.trotter_order")

    def with_dt(self, dt: float) -> "StepPlan":
        # a patch correction is derived for one specific dt; changing dt
        # silently would apply a stale correction
        if self.augmentation is not None and dt != self.dt:
            raise ConfigError(
                "changing dt invalidates the attached core correction; "
                "derive a new one", field="plan.dt")
        return replace(self, dt=dt)


def kinetic_constant(box, width: int, mass: float) -> float:
    """Phase prefactor C with phases exp(-i*C*dt*k^2); C = 2*pi^2/(L^2 m)."""
    box_width = box.width_for(width)
    return 2.0 * np.pi ** 2 / (box_width ** 2 * mass)


class StepKernel:
    """Phase tables for one (layout, plan, spec) triple, reused across steps."""

    def __init__(self, layout: RegisterLayout, plan: StepPlan, spec: HamiltonianSpec):
        box = layout.box
        if box is None:
            raise LayoutError("propagation needs a layout with an attached box")
        if len(spec.particles) != len(layout.particles):
            raise ConfigError("particle count differs between layout and spec")
        if plan.augmentation is not None and plan.augmentation.dt != plan.dt:
            raise ConfigError(
                f"core correction was derived for dt={plan.augmentation.dt}, "
                f"plan has dt={plan.dt}", field="plan.augmentation")
        self.layout = layout
        self.plan = plan
        self.spec = spec
        signed = layout.signed
        dt = plan.dt

        # kinetic factors, one 1D table per sub-register
        self.kinetic = []
        for p, particle in enumerate(layout.particles):
            mass = spec.particles[p].mass
            for s in particle.spans:
                k = span_values(s.width, signed=signed).astype(np.float64)
                c = kinetic_constant(box, s.width, mass)
                self.kinetic.append((s, np.exp(-1j * c * dt * k ** 2)))

        # per-particle nuclear + field factors over the particle's d spans
        self.potential = []
        for p, particle in enumerate(layout.particles):
            spans = list(particle.spans)
            coord_axes = [box.coordinates(s.width, signed=signed) for s in spans]
            grids = np.meshgrid(*coord_axes, indexing="ij")
            v, singular = single_particle_potential(spec, p, grids)
            v = np.where(singular, 0.0, v)   # zero-phase override at exact zeros
            if spec.nuclei or any(spec.efield):
                self.potential.append((spans, np.exp(-1j * v * dt)))

        # pairwise factors on the relative grid of the lower-index particle
        self.pairs = []
        for p in range(len(layout.particles)):
            for q in range(p + 1, len(layout.particles)):
                coupling = spec.coupling(p, q)
                if coupling == 0.0:
                    continue
                spans_p = list(layout.particles[p].spans)
                spans_q = list(layout.particles[q].spans)
                if [s.width for s in spans_p] != [s.width for s in spans_q]:
                    raise LayoutError("paired particles need equal-shape registers")
                deltas = np.meshgrid(
                    *[span_values(s.width, signed=signed) for s in spans_p],
                    indexing="ij")
                v = pair_potential(spec, p, q, box.delta_r, deltas)
                self.pairs.append((spans_p, spans_q, np.exp(-1j * v * dt)))

        # boundary damping
        self.damping = None
        if plan.attenuation is not None:
            self.damping = self._compile_damping(plan.attenuation)

    def _compile_damping(self, atten: AttenuationSpec):
        layout, box, signed = self.layout, self.layout.box, self.layout.signed
        if CAP_ANCILLA not in layout.ancillas:
            raise LayoutError(
                f"attenuation needs a reserved '{CAP_ANCILLA}' ancilla in |0>")
        ancilla = layout.ancillas[CAP_ANCILLA]
        if ancilla.width != 1:
            raise LayoutError("the damping ancilla must be a single qubit")
        ops = []
        region = atten.region
        if isinstance(region, UniformEdgeRegion):
            theta = atten.angle(region.strength, self.plan.dt)
            for particle in layout.particles:
                for s in particle.spans:
                    allowed = np.zeros(1 << s.width, dtype=bool)
                    pats = pattern_of_value(region.member_values(s.width),
                                            s.width, signed=signed)
                    allowed[pats] = True
                    ops.append(([s], allowed, theta))
        elif isinstance(region, ExplicitRegion):
            for particle in layout.particles:
                spans = list(particle.spans)
                for pix, strength in region.pixels.items():
                    if len(pix) != len(spans):
                        raise ConfigError(
                            f"pixel {pix} has wrong dimensionality",
                            field="attenuation.pixels")
                    theta = atten.angle(strength, self.plan.dt)
                    table = np.zeros([1 << s.width for s in spans], dtype=bool)
                    idx = tuple(pattern_of_value(v, s.width, signed=signed)
                                for v, s in zip(pix, spans))
                    table[idx] = True
                    ops.append((spans, table, theta))
        else:
            raise ConfigError("unknown attenuation region type", field="attenuation")
        return ancilla.start, ops

    # -- application --------------------------------------------------------

    def kinetic_cycle(self, state: StateVector) -> StateVector:
        for s, _ in self.kinetic:
            apply_inverse_qft(state, s)
        for s, factors in self.kinetic:
            apply_phase_table(state, [s], factors)
        for s, _ in self.kinetic:
            apply_qft(state, s)
        return state

    def interaction(self, state: StateVector) -> StateVector:
        for spans, factors in self.potential:
            apply_phase_table(state, spans, factors)
        for spans_p, spans_q, factors in self.pairs:
            for sa, sb in zip(spans_p, spans_q):
                register_add_sub(state, sa, sb, "subtract")
            apply_phase_table(state, spans_p, factors)
            for sa, sb in zip(spans_p, spans_q):
                register_add_sub(state, sa, sb, "add")
        return state

    def damp(self, state: StateVector) -> float:
        """Boundary measurement round; returns this step's detection probability."""
        ancilla, ops = self.damping
        survival = 1.0
        for spans, allowed, theta in ops:
            if theta == 0.0:
                continue
            masked_ancilla_x_rotation(state, spans, allowed, ancilla, theta)
            record, _ = measure_qubit(state, ancilla, "z", forced_outcome=0)
            survival *= record.probability
        return 1.0 - survival

    def apply(self, state: StateVector, escape=None) -> StateVector:
        self.kinetic_cycle(state)
        self.interaction(state)
        if self.damping is not None:
            increment = self.damp(state)
            if escape is not None:
                escape.append(increment)
        if self.plan.augmentation is not None:
            from .corrections import apply_core_correction
            apply_core_correction(state, self.plan.augmentation)
        return state


def compile_step(layout: RegisterLayout, plan: StepPlan,
                 spec: HamiltonianSpec) -> StepKernel:
    return StepKernel(layout, plan, spec)


def split_step(state: StateVector, plan: StepPlan, spec: HamiltonianSpec,
               escape=None, kernel: StepKernel | None = None) -> StateVector:
    """One full split-operator cycle (compiles phase tables ad hoc unless a
    kernel is supplied; loops should use :func:`propagate`)."""
    if kernel is None:
        kernel = compile_step(state.layout, plan, spec)
    return kernel.apply(state, escape)


# individual phase sub-steps, mainly for direct checks

def kinetic_phase_step(state: StateVector, plan: StepPlan,
                       spec: HamiltonianSpec) -> StateVector:
    """Quadratic momentum phases; the state must already be in k-space."""
    box, signed = state.layout.box, state.layout.signed
    for p, particle in enumerate(state.layout.particles):
        for s in particle.spans:
            k = span_values(s.width, signed=signed).astype(np.float64)
            c = kinetic_constant(box, s.width, spec.particles[p].mass)
            apply_phase_table(state, [s], np.exp(-1j * c * plan.dt * k ** 2))
    return state


def nuclear_phase_step(state: StateVector, plan: StepPlan,
                       spec: HamiltonianSpec) -> StateVector:
    box, signed = state.layout.box, state.layout.signed
    field_free = HamiltonianSpec(spec.particles, spec.nuclei, spec.pair_couplings)
    for p, particle in enumerate(state.layout.particles):
        spans = list(particle.spans)
        grids = np.meshgrid(*[box.coordinates(s.width, signed=signed) for s in spans],
                            indexing="ij")
        v, singular = single_particle_potential(field_free, p, grids)
        v = np.where(singular, 0.0, v)
        apply_phase_table(state, spans, np.exp(-1j * v * plan.dt))
    return state


def field_phase_step(state: StateVector, plan: StepPlan,
                     spec: HamiltonianSpec) -> StateVector:
    box, signed = state.layout.box, state.layout.signed
    for p, particle in enumerate(state.layout.particles):
        q_p = spec.particles[p].charge
        for d, s in enumerate(particle.spans):
            e_d = spec.efield[d] if d < len(spec.efield) else 0.0
            if e_d == 0.0:
                continue
            x = box.coordinates(s.width, signed=signed)
            apply_phase_table(state, [s], np.exp(-1j * q_p * e_d * x * plan.dt))
    return state


def pairwise_phase_step(state: StateVector, plan: StepPlan,
                        spec: HamiltonianSpec) -> StateVector:
    box, signed = state.layout.box, state.layout.signed
    for p in range(len(state.layout.particles)):
        for q in range(p + 1, len(state.layout.particles)):
            coupling = spec.coupling(p, q)
            if coupling == 0.0:
                continue
            spans_p = list(state.layout.particles[p].spans)
            spans_q = list(state.layout.particles[q].spans)
            for sa, sb in zip(spans_p, spans_q):
                register_add_sub(state, sa, sb, "subtract")
            deltas = np.meshgrid(*[span_values(s.width, signed=signed)
                                   for s in spans_p], indexing="ij")
            v = pair_potential(spec, p, q, box.delta_r, deltas)
            apply_phase_table(state, spans_p, np.exp(-1j * v * plan.dt))
            for sa, sb in zip(spans_p, spans_q):
                register_add_sub(state, sa, sb, "add")
    return state


def attenuation_step(state: StateVector, plan: StepPlan, spec: HamiltonianSpec):
    """One boundary-damping round; returns (state, detection probability)."""
    if plan.attenuation is None:
        return state, 0.0
    kernel = compile_step(state.layout, plan, spec)
    increment = kernel.damp(state)
    return state, increment


def split_step_inverse(state: StateVector, plan: StepPlan, spec: HamiltonianSpec,
                       kernel: StepKernel | None = None) -> StateVector:
    """Exact inverse of the unitary part of one cycle (no damping, no patch)."""
    if kernel is None:
        kernel = compile_step(state.layout, plan, spec)
    for spans_p, spans_q, factors in reversed(kernel.pairs):
        for sa, sb in zip(spans_p, spans_q):
            register_add_sub(state, sa, sb, "subtract")
        apply_phase_table(state, spans_p, np.conj(factors))
        for sa, sb in zip(spans_p, spans_q):
            register_add_sub(state, sa, sb, "add")
    for spans, factors in reversed(kernel.potential):
        apply_phase_table(state, spans, np.conj(factors))
    for s, _ in kernel.kinetic:
        apply_inverse_qft(state, s)
    for s, factors in kernel.kinetic:
        apply_phase_table(state, [s], np.conj(factors))
    for s, _ in kernel.kinetic:
        apply_qft(state, s)
    return state


def propagate(state: StateVector, plan: StepPlan, spec: HamiltonianSpec,
              steps: int, callbacks=(), events: dict | None = None,
              escape=None, t0: float = 0.0) -> StateVector:
    """Repeated split-operator stepping with observable callbacks.

    ``callbacks`` are called as cb(step_index, time, state) after every step
    (the state must be treated as read-only).  ``events`` maps a step index
    to a callable (state, plan, spec) -> (state, plan, spec) applied after
    that step completes; the kernel is recompiled, so mid-run dt changes,
    register enlargement and coupling changes are supported.
    """
    if steps < 0:
        raise ConfigError("steps must be non-negative", field="plan.steps")
    kernel = compile_step(state.layout, plan, spec) if steps else None
    t = t0
    for step in range(1, steps + 1):
        kernel.apply(state, escape)
        t += plan.dt
        for cb in callbacks:
            cb(step, t, state)
        if events and step in events:
            state, plan, spec = events[step](state, plan, spec)
            if step < steps:
                kernel = compile_step(state.layout, plan, spec)
    return state
