"""Register bookkeeping: qubit spans, signed value conventions, layouts.

A basis index is an integer in [0, 2^N); qubit q is bit q (LSB = qubit 0).
A sub-register is a contiguous span of qubits whose bit pattern encodes a
signed grid index, by default in two's complement so that index 0 sits
mid-box.  The alternative "shifted" convention stores value+2^(w-1) as an
unsigned pattern; both encode the same value range [-2^(w-1), 2^(w-1)-1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LayoutError


@dataclass(frozen=True)
class Span:
    """A contiguous run of ``width`` qubits starting at ``start``."""

    start: int
    width: int

    def __post_init__(self):
        if self.start < 0 or self.width < 1:
            raise LayoutError(f"bad span ({self.start}, {self.width})")

    @property
    def stop(self) -> int:
        return self.start + self.width

    def qubits(self) -> range:
        return range(self.start, self.stop)

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.stop and other.start < self.stop


def get_reg_val(basis_index: int, start_qubit: int, n_r: int, *, signed: bool = True) -> int:
    """Signed value of the ``n_r`` contiguous qubits starting at ``start_qubit``.

    Two's complement: sum the low n_r-1 bits, then subtract 2^(n_r-1) if the
    top bit is set.  The shifted convention instead subtracts 2^(n_r-1)
    unconditionally from the raw pattern.
    """
    if basis_index < 0:
        raise LayoutError("basis index must be non-negative")
    raw = (basis_index >> start_qubit) & ((1 << n_r) - 1)
    if signed:
        v = raw & ((1 << (n_r - 1)) - 1)
        if raw >> (n_r - 1):
            v -= 1 << (n_r - 1)
        return v
    return raw - (1 << (n_r - 1))


def span_values(width: int, *, signed: bool = True) -> np.ndarray:
    """Vector of signed values indexed by raw bit pattern, for one span."""
    raw = np.arange(1 << width, dtype=np.int64)
    half = 1 << (width - 1)
    if signed:
        return np.where(raw < half, raw, raw - (1 << width))
    return raw - half


def pattern_of_value(value, width: int, *, signed: bool = True):
    """Inverse of :func:`span_values`: raw bit pattern encoding ``value``.

    Accepts scalars or arrays; values wrap modulo 2^width.
    """
    full = 1 << width
    half = full >> 1
    v = np.asarray(value, dtype=np.int64)
    out = np.mod(v if signed else v + half, full)
    if out.ndim == 0:
        return int(out)
    return out


@dataclass(frozen=True)
class Particle:
    """One particle's sub-registers, ordered x, y, z."""

    spans: tuple[Span, ...]

    def __post_init__(self):
        widths = {s.width for s in self.spans}
        if len(widths) != 1:
            raise LayoutError("all sub-registers of one particle must have equal width")

    @property
    def n_r(self) -> int:
        return self.spans[0].width

    @property
    def dims(self) -> int:
        return len(self.spans)


@dataclass(frozen=True)
class RegisterLayout:
    """Maps particles x dimensions x qubits, plus named ancilla spans.

    ``signed`` selects the two's-complement value convention (default) versus
    the shifted unsigned one.  ``box`` optionally attaches grid geometry so
    that propagation code can convert register integers to coordinates.
    """

    particles: tuple[Particle, ...]
    ancillas: dict[str, Span] = field(default_factory=dict)
    signed: bool = True
    box: object | None = None

    def __post_init__(self):
        spans = list(self.all_spans())
        for i, a in enumerate(spans):
            for b in spans[i + 1:]:
                if a.overlaps(b):
                    raise LayoutError(f"overlapping spans {a} and {b}")

    def all_spans(self):
        for p in self.particles:
            yield from p.spans
        yield from self.ancillas.values()

    @property
    def num_qubits(self) -> int:
        return max((s.stop for s in self.all_spans()), default=0)

    def span(self, particle: int, dim: int) -> Span:
        return self.particles[particle].spans[dim]

    def check_within(self, total_qubits: int) -> None:
        if self.num_qubits > total_qubits:
            raise LayoutError(
                f"layout needs {self.num_qubits} qubits, state has {total_qubits}"
            )

    def with_ancilla(self, name: str, width: int = 1) -> "RegisterLayout":
        """New layout with an extra ancilla span on top of all current qubits."""
        anc = dict(self.ancillas)
        anc[name] = Span(self.num_qubits, width)
        return RegisterLayout(self.particles, anc, self.signed, self.box)

    def without_ancilla(self, name: str) -> "RegisterLayout":
        anc = dict(self.ancillas)
        anc.pop(name)
        return RegisterLayout(self.particles, anc, self.signed, self.box)

    def with_box(self, box) -> "RegisterLayout":
        return RegisterLayout(self.particles, dict(self.ancillas), self.signed, box)


def particle_layout(num_particles: int, dims: int, n_r: int, *,
                    signed: bool = True, box=None) -> RegisterLayout:
    """Standard packing: particle p, dimension q occupies qubits starting
    at (p*dims + q)*n_r; x is lowest."""
    particles = []
    for p in range(num_particles):
        spans = tuple(Span((p * dims + q) * n_r, n_r) for q in range(dims))
        particles.append(Particle(spans))
    return RegisterLayout(tuple(particles), {}, signed, box)
