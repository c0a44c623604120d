"""Density matrices, reference states, and coherence-order bookkeeping.

A :class:`DensityMatrix` wraps a dense complex matrix together with the
register size and validates the physical invariants on construction:
unit trace, Hermiticity, and positivity up to a small numerical
tolerance.  Violations raise :class:`StateInvariantError`.

Coherence order of a matrix element ``(r, c)`` is the magnetization
difference ``m(r) - m(c)`` of the two basis states, i.e. the number of
up spins in ``r`` minus the number in ``c``.  A cat state of ``n``
spins carries orders ``-n``, ``0`` and ``+n`` only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from collections.abc import Iterable, Sequence

import numpy as np

from . import operators

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8
_ENTROPY_EIG_FLOOR = 1e-14


class StateInvariantError(ValueError):
    """A density matrix violated trace, Hermiticity, or positivity."""


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix of an ``n_spins`` register.

    ``pseudopure_background`` records the weight of the maximally mixed
    component for states built by :func:`pseudopure`; it is carried
    along for reporting only and does not affect any operation.
    """

    matrix: np.ndarray
    n_spins: int
    pseudopure_background: float | None = None

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if operators.n_spins_of(matrix) != self.n_spins:
            raise StateInvariantError(
                f"matrix dimension {matrix.shape[0]} does not match {self.n_spins} spins"
            )
        trace = matrix.trace()
        if abs(trace - 1.0) > TRACE_TOL:
            raise StateInvariantError(f"trace {trace} differs from 1 beyond {TRACE_TOL}")
        if not operators.is_hermitian(matrix, HERMITIAN_TOL):
            raise StateInvariantError("matrix is not Hermitian")
        eigmin = float(np.linalg.eigvalsh(matrix)[0])
        if eigmin < -POSITIVITY_TOL:
            raise StateInvariantError(f"negative eigenvalue {eigmin} beyond {POSITIVITY_TOL}")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CatWeights:
    """Superposition weights (a, b) with ``|a|^2 + |b|^2 = 1``.

    Inputs off unit norm by more than 1e-9 are rejected; smaller
    deviations are renormalized so downstream amplitude identities hold
    to machine precision.
    """

    a: complex
    b: complex

    def __post_init__(self) -> None:
        a = complex(self.a)
        b = complex(self.b)
        norm_sq = abs(a) ** 2 + abs(b) ** 2
        if abs(norm_sq - 1.0) > 1e-9:
            raise ValueError(f"unnormalized weights: |a|^2 + |b|^2 = {norm_sq}")
        norm = math.sqrt(norm_sq)
        object.__setattr__(self, "a", a / norm)
        object.__setattr__(self, "b", b / norm)

    @classmethod
    def balanced(cls) -> "CatWeights":
        s = 1.0 / math.sqrt(2.0)
        return cls(s, s)


@dataclass(frozen=True)
class CoherenceDecomposition:
    """Split of a matrix into components of fixed coherence order."""

    n_spins: int
    components: dict[int, np.ndarray] = field(repr=False)

    def component(self, order: int) -> np.ndarray:
        return self.components[order]

    def weight(self, order: int) -> float:
        """Frobenius norm of one order's component."""
        return float(np.linalg.norm(self.components[order]))

    @property
    def weights(self) -> dict[int, float]:
        return {q: self.weight(q) for q in sorted(self.components)}

    def reconstruct(self) -> np.ndarray:
        return sum(self.components.values())


def ferro_state(n_spins: int, which: str) -> DensityMatrix:
    """Projector onto the all-up (``which="up"``) or all-down corner state."""
    if which not in ("up", "down"):
        raise ValueError(f"which must be 'up' or 'down', got {which!r}")
    dim = 1 << n_spins
    matrix = np.zeros((dim, dim), dtype=complex)
    index = 0 if which == "up" else dim - 1
    matrix[index, index] = 1.0
    return DensityMatrix(matrix, n_spins)


def cat_state(n_spins: int, weights: CatWeights) -> DensityMatrix:
    """Pure superposition ``a|u> + b|d>`` of the two corner states."""
    dim = 1 << n_spins
    psi = np.zeros(dim, dtype=complex)
    psi[0] = weights.a
    psi[dim - 1] = weights.b
    return DensityMatrix(np.outer(psi, psi.conj()), n_spins)


def entangled_pair_state(n_system: int, weights: CatWeights) -> DensityMatrix:
    """Control-conditioned cat ``a|up>|u> + b|down>|d>`` on ``n_system + 1`` spins.

    The control occupies site 0 of the combined register.
    """
    n_total = n_system + 1
    dim = 1 << n_total
    psi = np.zeros(dim, dtype=complex)
    psi[0] = weights.a
    psi[dim - 1] = weights.b
    return DensityMatrix(np.outer(psi, psi.conj()), n_total)


def decohered_mixture(n_system: int, weights: CatWeights) -> DensityMatrix:
    """Classical mixture left after the entangled pair loses its coherences."""
    n_total = n_system + 1
    dim = 1 << n_total
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[0, 0] = abs(weights.a) ** 2
    matrix[dim - 1, dim - 1] = abs(weights.b) ** 2
    return DensityMatrix(matrix, n_total)


def thermal_state(n_spins: int, polarization: float = 1e-3) -> DensityMatrix:
    """High-temperature equilibrium state: identity plus a small equal
    polarization on every spin, ``(I + polarization * 2*Sz_total) / D``."""
    if not 0.0 <= polarization < 1.0 / max(n_spins, 1):
        raise ValueError(f"polarization must lie in [0, 1/n_spins), got {polarization}")
    dim = 1 << n_spins
    sz_total = operators.total_spin_operator("z", list(range(n_spins)), n_spins)
    matrix = (np.eye(dim, dtype=complex) + polarization * 2.0 * sz_total) / dim
    return DensityMatrix(matrix, n_spins)


def pseudopure(target: DensityMatrix, purity_fraction: float) -> DensityMatrix:
    """Mix ``target`` with the maximally mixed state: ``(1-f)*I/D + f*target``."""
    f = float(purity_fraction)
    if not 0.0 < f <= 1.0:
        raise ValueError(f"purity fraction must lie in (0, 1], got {f}")
    dim = target.dim
    matrix = (1.0 - f) * np.eye(dim, dtype=complex) / dim + f * target.matrix
    previous = target.pseudopure_background or 0.0
    background = (1.0 - f) + f * previous
    return DensityMatrix(matrix, target.n_spins, pseudopure_background=background)


def coherence_orders(rho: DensityMatrix) -> CoherenceDecomposition:
    """Decompose into components of fixed coherence order.

    Components are elementwise-disjoint, so they are orthogonal under
    the Frobenius inner product and sum back to the input exactly.
    """
    n = rho.n_spins
    order = _order_matrix(n)
    components = {}
    for q in range(-n, n + 1):
        components[q] = np.where(order == q, rho.matrix, 0.0)
    return CoherenceDecomposition(n, components)


def strip_coherences(rho: DensityMatrix, keep_orders: Iterable[int]) -> DensityMatrix:
    """Zero every element whose coherence order is not listed.

    The kept set must be symmetric (``q`` kept iff ``-q`` kept) so the
    result stays Hermitian.  Order 0 must be kept to preserve the trace.
    """
    keep = set(int(q) for q in keep_orders)
    if 0 not in keep:
        raise ValueError("order 0 must be kept to preserve the trace")
    if any(-q not in keep for q in keep):
        raise ValueError("kept orders must be symmetric about 0")
    order = _order_matrix(rho.n_spins)
    mask = np.isin(order, sorted(keep))
    return DensityMatrix(np.where(mask, rho.matrix, 0.0), rho.n_spins)


def reduced_state(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace over every spin not in ``keep``."""
    reduced = operators.partial_trace(rho.matrix, keep)
    return DensityMatrix(reduced, len(keep))


def nq_amplitude(rho: DensityMatrix, sites: Sequence[int] | None = None) -> complex:
    """Highest-order coherence amplitude ``<u|rho|d>`` over the listed spins.

    Spins outside ``sites`` are traced out first.
    """
    if sites is None or list(sites) == list(range(rho.n_spins)):
        matrix = rho.matrix
    else:
        matrix = reduced_state(rho, sites).matrix
    return complex(matrix[0, matrix.shape[0] - 1])


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy ``-sum(lam * ln lam)`` in nats; eigenvalues below 1e-14 are dropped."""
    eigs = np.linalg.eigvalsh(rho.matrix)
    eigs = eigs[eigs >= _ENTROPY_EIG_FLOOR]
    return max(float(-np.sum(eigs * np.log(eigs))), 0.0)


def purity(rho: DensityMatrix) -> float:
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))


def fidelity(rho: DensityMatrix, target: DensityMatrix) -> float:
    """Overlap ``Tr(rho * target)`` with a pure target state."""
    if abs(purity(target) - 1.0) > 1e-8:
        raise ValueError("fidelity target must be pure (rank one)")
    return float(np.real(np.trace(rho.matrix @ target.matrix)))


def expectation(rho: DensityMatrix, observable: np.ndarray) -> complex:
    """``Tr(rho * observable)``; real for Hermitian observables."""
    observable = np.asarray(observable, dtype=complex)
    if observable.shape != rho.matrix.shape:
        raise ValueError("observable dimension does not match the state")
    return complex(np.trace(rho.matrix @ observable))


def _order_matrix(n_spins: int) -> np.ndarray:
    """Matrix of coherence orders ``m(r) - m(c)`` for every element."""
    down_counts = operators.bit_table(n_spins).sum(axis=0)
    m = 0.5 * n_spins - down_counts
    return np.rint(m[:, None] - m[None, :]).astype(int)
