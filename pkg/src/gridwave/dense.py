"""Dense matrix forms of the step operators, for derivations and anchors.

Everything here scales as the cube of the grid size and is gated by
``max_dim``; production stepping never goes through these matrices.  They
exist to derive core patch corrections and to anchor tests against exact
eigenpairs of the pixelated Hamiltonian.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import SimulationBox
from .hamiltonian import HamiltonianSpec, pair_potential, single_particle_potential
from .propagator import kinetic_constant
from .registers import RegisterLayout, Span, particle_layout, span_values

DEFAULT_MAX_DIM = 4096


def fourier_matrix(width: int, *, signed: bool = True) -> np.ndarray:
    """Position-to-momentum matrix for one sub-register (rows = k patterns)."""
    m = 1 << width
    j = np.arange(m)
    f = np.exp(-2j * np.pi * np.outer(j, j) / m) / np.sqrt(m)
    if not signed:
        tw = np.where(j % 2, -1.0, 1.0)
        sign = -1.0 if width == 1 else 1.0
        f = sign * (tw[:, None] * f * tw[None, :])
    return f


def _field_over_index(num_qubits: int, span: Span, per_pattern: np.ndarray) -> np.ndarray:
    hi = 1 << (num_qubits - span.stop)
    lo = 1 << span.start
    return np.broadcast_to(per_pattern[None, :, None],
                           (hi, per_pattern.size, lo)).reshape(-1)


def _default_layout(box: SimulationBox, spec: HamiltonianSpec, signed: bool):
    return particle_layout(len(spec.particles), box.dims, box.n_r,
                           signed=signed, box=box)


def full_fourier(layout: RegisterLayout) -> np.ndarray:
    """Kronecker product of per-sub-register transforms over all particle spans."""
    spans = sorted((s for p in layout.particles for s in p.spans),
                   key=lambda s: -s.start)
    f = np.ones((1, 1), dtype=np.complex128)
    for s in spans:
        f = np.kron(f, fourier_matrix(s.width, signed=layout.signed))
    return f


def diagonal_vectors(layout: RegisterLayout, spec: HamiltonianSpec):
    """(kinetic energies, interaction potential) over the full dense index."""
    box, signed = layout.box, layout.signed
    n = layout.num_qubits
    dim = 1 << n
    kin = np.zeros(dim)
    for p, particle in enumerate(layout.particles):
        mass = spec.particles[p].mass
        for s in particle.spans:
            k = span_values(s.width, signed=signed).astype(np.float64)
            kin += _field_over_index(n, s, kinetic_constant(box, s.width, mass) * k ** 2)
    pot = np.zeros(dim)
    for p, particle in enumerate(layout.particles):
        coords = [_field_over_index(n, s, box.coordinates(s.width, signed=signed))
                  for s in particle.spans]
        v, singular = single_particle_potential(spec, p, coords)
        pot += np.where(singular, 0.0, v)
    for p in range(len(layout.particles)):
        for q in range(p + 1, len(layout.particles)):
            if spec.coupling(p, q) == 0.0:
                continue
            deltas = []
            for sa, sb in zip(layout.particles[p].spans, layout.particles[q].spans):
                va = _field_over_index(n, sa, span_values(sa.width, signed=signed))
                vb = _field_over_index(n, sb, span_values(sb.width, signed=signed))
                # the relative coordinate lives in a register of the same
                # width, so differences wrap modulo the box (minimum image)
                half = 1 << (sa.width - 1)
                deltas.append((va - vb + half) % (2 * half) - half)
            pot += pair_potential(spec, p, q, box.delta_r, deltas)
    return kin, pot


def pixel_hamiltonian(box: SimulationBox, spec: HamiltonianSpec,
                      layout: RegisterLayout | None = None, *,
                      signed: bool = True,
                      max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Dense Hamiltonian of the discretised model: Fourier-built kinetic part
    plus the diagonal interaction potential."""
    layout = layout or _default_layout(box, spec, signed)
    dim = 1 << layout.num_qubits
    if dim > max_dim:
        raise ConfigError(f"dense dimension {dim} exceeds threshold {max_dim}")
    f = full_fourier(layout)
    kin, pot = diagonal_vectors(layout, spec)
    h = f.conj().T @ (kin[:, None] * f)
    h[np.diag_indices_from(h)] += pot
    return h


def hamiltonian_eig(box: SimulationBox, spec: HamiltonianSpec,
                    layout: RegisterLayout | None = None, *,
                    signed: bool = True, max_dim: int = DEFAULT_MAX_DIM):
    """Eigenvalues and eigenvectors of the pixelated Hamiltonian."""
    from scipy.linalg import eigh
    h = pixel_hamiltonian(box, spec, layout, signed=signed, max_dim=max_dim)
    return eigh(h)


def projected_potential_matrix(box: SimulationBox, spec: HamiltonianSpec, *,
                               refine: int = 8, signed: bool = True,
                               max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Matrix elements of the interaction potential between grid basis
    functions, for a single particle.

    The diagonal-potential shortcut used by the split cycle is exact only for
    point-like basis functions; near a Coulomb singularity the finite width
    of the basis makes the true matrix elements differ appreciably.  They are
    evaluated here by band-limited upsampling onto a ``refine``-times finer
    grid (midpoint quadrature, exactly orthonormal for the band-limited
    factors).
    """
    if len(spec.particles) != 1:
        raise ConfigError("projected potential is built per particle")
    m = 1 << box.n_r
    if (m ** box.dims) > max_dim:
        raise ConfigError(f"dense dimension {m ** box.dims} exceeds {max_dim}")
    nf = refine * m
    length = box.length
    hf = length / nf
    xj = (np.arange(nf) - nf / 2 + 0.5) * hf
    ks = span_values(box.n_r, signed=True)  # physical wavenumbers by pattern
    e1 = np.exp(2j * np.pi * np.outer(xj, ks) / length) * np.sqrt(hf / length)
    a1 = e1 @ fourier_matrix(box.n_r, signed=signed)   # pixel -> fine samples
    # fine-grid potential, axes ordered (highest dim ... x) to match kron order
    grids = np.meshgrid(*([xj] * box.dims), indexing="ij")
    vf, singular = single_particle_potential(spec, 0, grids[::-1])
    vf = np.where(singular, 0.0, vf)
    g1 = np.einsum("jp,jn->jpn", a1.conj(), a1)
    if box.dims == 1:
        return np.tensordot(vf, g1, axes=([0], [0]))
    if box.dims == 2:
        t1 = np.tensordot(vf, g1, axes=([1], [0]))       # (nf_y, m, m) over x
        vt = np.tensordot(g1, t1, axes=([0], [0]))       # (my', my, mx', mx)
        return np.ascontiguousarray(
            vt.transpose(0, 2, 1, 3).reshape(m * m, m * m))
    raise ConfigError("projected potential supports 1D and 2D boxes")


_REFERENCE_CACHE: dict = {}


def _spec_key(spec: HamiltonianSpec):
    coup = None if spec.pair_couplings is None else spec.pair_couplings.tobytes()
    return (tuple((p.mass, p.charge) for p in spec.particles),
            tuple((n.position, n.charge) for n in spec.nuclei),
            coup, spec.efield)


def reference_step_matrix(box: SimulationBox, spec: HamiltonianSpec, dt: float, *,
                          refine: int = 8, signed: bool = True,
                          max_dim: int = DEFAULT_MAX_DIM):
    """(U_ideal, U_SO, evals, evecs) with the ideal step generated by the
    reference Hamiltonian: Fourier kinetic part plus the projected (full
    matrix) potential.  This is the target the patch correction repairs
    towards; the plain :func:`build_dense_step_matrices` keeps the diagonal
    potential on both sides.  Results are cached per configuration, since one
    diagonalisation feeds state preparation, correction derivation and
    anchoring alike."""
    from scipy.linalg import eigh
    key = ((box.dims, box.n_r, box.length, box.origin_offset),
           _spec_key(spec), dt, refine, signed)
    if key in _REFERENCE_CACHE:
        return _REFERENCE_CACHE[key]
    layout = _default_layout(box, spec, signed)
    dim = 1 << layout.num_qubits
    if dim > max_dim:
        raise ConfigError(f"dense dimension {dim} exceeds threshold {max_dim}")
    f = full_fourier(layout)
    kin, pot = diagonal_vectors(layout, spec)
    u_so = np.exp(-1j * pot * dt)[:, None] \
        * (f.conj().T @ (np.exp(-1j * kin * dt)[:, None] * f))
    h = f.conj().T @ (kin[:, None] * f)
    h += projected_potential_matrix(box, spec, refine=refine, signed=signed,
                                    max_dim=max_dim)
    evals, evecs = eigh(h)
    u_ideal = (evecs * np.exp(-1j * evals * dt)[None, :]) @ evecs.conj().T
    result = (u_ideal, u_so, evals, evecs)
    _REFERENCE_CACHE[key] = result
    return result


def build_dense_step_matrices(box: SimulationBox, spec: HamiltonianSpec, dt: float,
                              layout: RegisterLayout | None = None, *,
                              signed: bool = True,
                              max_dim: int = DEFAULT_MAX_DIM):
    """(U_ideal, U_SO) as dense matrices.

    U_ideal is the exact exponential of the pixelated Hamiltonian over one
    time step; U_SO is the split cycle exactly as the stepper applies it.
    """
    from scipy.linalg import eigh
    layout = layout or _default_layout(box, spec, signed)
    dim = 1 << layout.num_qubits
    if dim > max_dim:
        raise ConfigError(f"dense dimension {dim} exceeds threshold {max_dim}")
    f = full_fourier(layout)
    kin, pot = diagonal_vectors(layout, spec)
    u_so = np.exp(-1j * pot * dt)[:, None] \
        * (f.conj().T @ (np.exp(-1j * kin * dt)[:, None] * f))
    h = f.conj().T @ (kin[:, None] * f)
    h[np.diag_indices_from(h)] += pot
    evals, evecs = eigh(h)
    u_ideal = (evecs * np.exp(-1j * evals * dt)[None, :]) @ evecs.conj().T
    return u_ideal, u_so


def best_overlap_eigenpair(evals: np.ndarray, evecs: np.ndarray,
                           target: np.ndarray):
    """Eigenpair with the largest overlap against a target vector."""
    overlaps = np.abs(evecs.conj().T @ target)
    idx = int(np.argmax(overlaps))
    return float(evals[idx]), evecs[:, idx], float(overlaps[idx] ** 2)
