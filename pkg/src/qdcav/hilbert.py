"""Dense operators on the joint dot+cavity Hilbert space.

Basis ordering is dot-major: index = s*(n_max+1) + n, where s = 0 labels the
dot ground state, s = 1 the excited state, and n the cavity photon number up
to the truncation n_max. States and operators are plain complex128 ndarrays;
HilbertLayout carries the truncation and the index arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GROUND = 0
EXCITED = 1


class InvariantViolation(RuntimeError):
    """A propagated state left the physically valid set."""


@dataclass(frozen=True)
class HilbertLayout:
    """Bookkeeping for the two-level-dot x truncated-Fock product space."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")

    @property
    def n_photon_states(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    def index(self, dot_state: int, n: int) -> int:
        if dot_state not in (GROUND, EXCITED):
            raise ValueError(f"dot_state must be {GROUND} or {EXCITED}, got {dot_state}")
        if not 0 <= n <= self.n_max:
            raise ValueError(f"photon number {n} outside [0, {self.n_max}]")
        return dot_state * self.n_photon_states + n

    def basis_state(self, dot_state: int, n: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(dot_state, n)] = 1.0
        return psi


def annihilation_operator(n_max: int) -> np.ndarray:
    """Cavity annihilation operator on the (n_max+1)-level Fock space.

    Entry (n, n+1) is sqrt(n+1). The top Fock level has no upward coupling,
    which is where truncation error enters.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1).astype(complex)


def dot_lowering_operator() -> np.ndarray:
    """sigma = |g><e| on the bare two-level dot."""
    op = np.zeros((2, 2), dtype=complex)
    op[GROUND, EXCITED] = 1.0
    return op


def embed(op: np.ndarray, subsystem: str, layout: HilbertLayout) -> np.ndarray:
    """Lift a single-subsystem operator to the joint space.

    subsystem is "dot" (2x2 input) or "cavity" ((n_max+1)-dim input). With
    the dot-major basis this is kron(op, 1) resp. kron(1, op).
    """
    op = np.asarray(op, dtype=complex)
    if subsystem == "dot":
        if op.shape != (2, 2):
            raise ValueError(f"dot operator must be 2x2, got {op.shape}")
        return np.kron(op, np.eye(layout.n_photon_states, dtype=complex))
    if subsystem == "cavity":
        m = layout.n_photon_states
        if op.shape != (m, m):
            raise ValueError(f"cavity operator must be {m}x{m}, got {op.shape}")
        return np.kron(np.eye(2, dtype=complex), op)
    raise ValueError(f"subsystem must be 'dot' or 'cavity', got {subsystem!r}")


def photon_number_operator(layout: HilbertLayout) -> np.ndarray:
    a = annihilation_operator(layout.n_max)
    return embed(a.conj().T @ a, "cavity", layout)


def dot_population_operator(layout: HilbertLayout) -> np.ndarray:
    s = dot_lowering_operator()
    return embed(s.conj().T @ s, "dot", layout)


def expectation(op: np.ndarray, state: np.ndarray) -> complex:
    """<O> for a ket (1-D input) or a density matrix (2-D input)."""
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    if state.ndim == 2:
        return complex(np.trace(op @ state))
    raise ValueError(f"state must be 1-D or 2-D, got ndim={state.ndim}")


def validate_density_matrix(
    rho: np.ndarray,
    trace_tol: float = 1e-8,
    herm_tol: float = 1e-9,
    eig_floor: float = -1e-7,
    purity_tol: float = 1e-9,
    context: str = "",
) -> None:
    """Raise InvariantViolation unless rho is a valid (truncated) state.

    Checks unit trace, hermiticity, spectrum above eig_floor and purity
    at most 1 + purity_tol. The tolerances are the propagation contract;
    violations indicate a solver or step-size problem, not user error.
    """
    where = f" ({context})" if context else ""
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolation(f"trace deviates from 1 by {abs(tr - 1.0):.3e}{where}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise InvariantViolation(f"hermiticity defect {herm:.3e}{where}")
    eigs = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if eigs.min() < eig_floor:
        raise InvariantViolation(f"negative eigenvalue {eigs.min():.3e}{where}")
    purity = float(np.einsum("ij,ji->", rho, rho).real)
    if purity > 1.0 + purity_tol:
        raise InvariantViolation(f"purity {purity:.12f} exceeds 1{where}")
