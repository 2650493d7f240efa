"""Operator algebra of three indistinguishable spin-1/2 nuclei.

Everything acts on the 8-dimensional product space of three spins, with
computational basis |i1 i2 i3>, spin 1 most significant, 0 = up and
1 = down (|uuu> is index 0, |ddd> is index 7).  The cyclic permutations
of the three spins generate a C3 symmetry whose irreducible
representations {A, E+, E-} classify a basis in which every collective
spin operator is block diagonal.  The symmetry label of the E sector is
the protected logical degree of freedom; the magnetization label m is
the noisy subsystem that gets traced out.

All operators are plain complex ndarrays in the computational basis.
States carry light validation wrappers (`DensityMatrix8`,
`LogicalDensity`).  Everything is pure and safe to share.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .linalg import max_abs, readonly, trace_distance

__all__ = [
    "CYCLIC_PHASE",
    "PAULI",
    "SymmetryLabel",
    "DensityMatrix8",
    "LogicalDensity",
    "CPBasis",
    "BlockReport",
    "build_cyclic_permutation",
    "permutation_from_pauli",
    "build_cp_basis",
    "collective_spin_operator",
    "block_report",
    "symmetry_polarized_state",
    "lls_state",
    "extract_logical",
    "logical_from_density",
    "collective_unitary",
    "apply_collective_unitary",
    "spin_hamiltonian",
]

# structural identities (unitarity, commutators, block zeros) hold to
# near machine precision on 8x8 matrices; derived equalities get 1e-10
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12

CYCLIC_PHASE = np.exp(2j * np.pi / 3)

PAULI = {
    "i": readonly(np.eye(2, dtype=complex)),
    "x": readonly(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)),
    "y": readonly(np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)),
    "z": readonly(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)),
}


class SymmetryLabel(enum.Enum):
    """Irreducible representation of the cyclic group C3."""

    A = "A"
    E_PLUS = "E+"
    E_MINUS = "E-"

    def __str__(self) -> str:
        return self.value


def _kron3(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.kron(np.kron(a, b), c)


def _single_spin(axis: str, position: int) -> np.ndarray:
    ops = [PAULI["i"]] * 3
    ops[position] = PAULI[axis]
    return _kron3(*ops)


def _check_hermitian_unit_trace(mat: np.ndarray, dim: int, what: str) -> None:
    if mat.shape != (dim, dim):
        raise ValueError(f"{what} must be {dim}x{dim}, got {mat.shape}")
    if max_abs(mat - mat.conj().T) > HERMITIAN_TOL:
        raise ValueError(f"{what} is not Hermitian to {HERMITIAN_TOL}")
    if abs(mat.trace() - 1.0) > TRACE_TOL:
        raise ValueError(f"{what} trace is {mat.trace():.3e}, expected 1")
    if np.linalg.eigvalsh(mat).min() < -PSD_TOL:
        raise ValueError(f"{what} has a negative eigenvalue beyond {PSD_TOL}")


@dataclass(frozen=True)
class DensityMatrix8:
    """Hermitian, unit-trace, positive-semidefinite 8x8 matrix."""

    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        _check_hermitian_unit_trace(mat, 8, "DensityMatrix8")
        object.__setattr__(self, "mat", readonly(mat))

    def in_cp_basis(self) -> np.ndarray:
        """The same state expressed in the |s, m> basis."""
        u = build_cp_basis().u
        return u.conj().T @ self.mat @ u

    def distance(self, other: "DensityMatrix8") -> float:
        return trace_distance(self.mat, other.mat)


@dataclass(frozen=True)
class LogicalDensity:
    """2x2 density matrix on the symmetry-label subsystem of the E sector."""

    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        _check_hermitian_unit_trace(mat, 2, "LogicalDensity")
        object.__setattr__(self, "mat", readonly(mat))

    def distance(self, other: "LogicalDensity") -> float:
        return trace_distance(self.mat, other.mat)


@dataclass(frozen=True)
class CPBasis:
    """Unitary change of basis from the computational basis to |s, m>.

    Columns are ordered (A,3/2), (A,1/2), (A,-1/2), (A,-3/2),
    (E+,1/2), (E+,-1/2), (E-,1/2), (E-,-1/2).  The phase convention is
    fixed once and for all here (epsilon = exp(2*pi*i/3) on the third
    ket of each E+ row, conjugated for E-); every other operation uses
    this single instance instead of re-deriving eigenvectors, because
    eigensolvers return arbitrary phases inside degenerate subspaces.
    """

    u: np.ndarray
    labels: tuple[tuple[SymmetryLabel, float], ...]

    def column(self, label: SymmetryLabel, m: float) -> np.ndarray:
        return self.u[:, self.index(label, m)]

    def index(self, label: SymmetryLabel, m: float) -> int:
        return self.labels.index((label, m))


@functools.lru_cache(maxsize=1)
def build_cp_basis() -> CPBasis:
    """The cyclic-permutation eigenbasis of three spins."""
    eps = CYCLIC_PHASE
    s3 = 1.0 / np.sqrt(3.0)
    u = np.zeros((8, 8), dtype=complex)
    # computational indices: |uud>=1 |udu>=2 |udd>=3 |duu>=4 |dud>=5 |ddu>=6
    u[0, 0] = 1.0
    u[[1, 4, 2], 1] = s3
    u[[6, 3, 5], 2] = s3
    u[7, 3] = 1.0
    u[[1, 4, 2], 4] = s3 * np.array([1.0, eps.conj(), eps])
    u[[6, 3, 5], 5] = s3 * np.array([1.0, eps.conj(), eps])
    u[[1, 4, 2], 6] = s3 * np.array([1.0, eps, eps.conj()])
    u[[6, 3, 5], 7] = s3 * np.array([1.0, eps, eps.conj()])
    labels = (
        (SymmetryLabel.A, 1.5),
        (SymmetryLabel.A, 0.5),
        (SymmetryLabel.A, -0.5),
        (SymmetryLabel.A, -1.5),
        (SymmetryLabel.E_PLUS, 0.5),
        (SymmetryLabel.E_PLUS, -0.5),
        (SymmetryLabel.E_MINUS, 0.5),
        (SymmetryLabel.E_MINUS, -0.5),
    )
    return CPBasis(u=readonly(u), labels=labels)


def _check_direction(direction: str) -> None:
    if direction not in ("plus", "minus"):
        raise ValueError(f"direction must be 'plus' or 'minus', got {direction!r}")


def build_cyclic_permutation(direction: str) -> np.ndarray:
    """Matrix of the cyclic permutation P_+ (|ijk> -> |kij>) or P_-."""
    _check_direction(direction)
    p = np.zeros((8, 8), dtype=complex)
    for idx in range(8):
        i, j, k = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        new = (k << 2) | (i << 1) | j if direction == "plus" else (j << 2) | (k << 1) | i
        p[new, idx] = 1.0
    return p


def levi_civita_term() -> np.ndarray:
    """sum over axes of epsilon_{abc} sigma_a x sigma_b x sigma_c."""
    term = np.zeros((8, 8), dtype=complex)
    for (a, b, c), sign in (
        (("x", "y", "z"), 1),
        (("y", "z", "x"), 1),
        (("z", "x", "y"), 1),
        (("x", "z", "y"), -1),
        (("z", "y", "x"), -1),
        (("y", "x", "z"), -1),
    ):
        term += sign * _kron3(PAULI[a], PAULI[b], PAULI[c])
    return term


def pairwise_scalar_couplings() -> np.ndarray:
    """sum over spin pairs of sigma(j).sigma(k)."""
    total = np.zeros((8, 8), dtype=complex)
    for a, b in ((0, 1), (1, 2), (0, 2)):
        for axis in "xyz":
            total += _single_spin(axis, a) @ _single_spin(axis, b)
    return total


def permutation_from_pauli(direction: str) -> np.ndarray:
    """Cyclic permutation assembled from its Pauli-string expansion.

    P_{+/-} = (1 + sum sigma.sigma -/+ i * Levi-Civita triple product)/4.
    Agrees entrywise with `build_cyclic_permutation`.
    """
    _check_direction(direction)
    sign = -1.0 if direction == "plus" else 1.0
    return 0.25 * (np.eye(8, dtype=complex) + pairwise_scalar_couplings() + sign * 1j * levi_civita_term())


def collective_spin_operator(axis: str) -> np.ndarray:
    """Total spin component S_axis = (1/2) sum_i sigma_axis^(i), hbar = 1."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    return 0.5 * sum(_single_spin(axis, pos) for pos in range(3))


_A_SLICE = slice(0, 4)
_EP_SLICE = slice(4, 6)
_EM_SLICE = slice(6, 8)


@dataclass(frozen=True)
class BlockReport:
    """Decomposition of an operator in the CP basis.

    `off_block_max` is the largest coupling between distinct symmetry
    sectors (A <-> E+, A <-> E-, E+ <-> E-); collective operators give
    zero to machine precision, spin-selective ones do not.
    """

    off_block_max: float
    a_block: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray

    @property
    def e_block_mismatch(self) -> float:
        return max_abs(self.b_plus - self.b_minus)


def block_report(op: np.ndarray, basis: CPBasis | None = None) -> BlockReport:
    """Transform `op` to the CP basis and measure its block structure."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (8, 8):
        raise ValueError(f"operator must be 8x8, got {op.shape}")
    u = (basis or build_cp_basis()).u
    cp = u.conj().T @ op @ u
    off = cp.copy()
    off[_A_SLICE, _A_SLICE] = 0.0
    off[_EP_SLICE, _EP_SLICE] = 0.0
    off[_EM_SLICE, _EM_SLICE] = 0.0
    return BlockReport(
        off_block_max=max_abs(off),
        a_block=cp[_A_SLICE, _A_SLICE],
        b_plus=cp[_EP_SLICE, _EP_SLICE],
        b_minus=cp[_EM_SLICE, _EM_SLICE],
    )


def _from_cp_diagonal(weights: np.ndarray) -> DensityMatrix8:
    u = build_cp_basis().u
    return DensityMatrix8((u * weights) @ u.conj().T)


_SECTOR_WEIGHTS = {
    SymmetryLabel.A: np.array([0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0], dtype=float),
    SymmetryLabel.E_PLUS: np.array([0, 0, 0, 0, 0.5, 0.5, 0, 0], dtype=float),
    SymmetryLabel.E_MINUS: np.array([0, 0, 0, 0, 0, 0, 0.5, 0.5], dtype=float),
}


def symmetry_polarized_state(label: SymmetryLabel | str) -> DensityMatrix8:
    """Maximally mixed state inside one symmetry sector.

    `label` may be a `SymmetryLabel` or one of "A", "E+", "E-";
    "E" (or "E_mixed") gives the even mixture of the two E sectors.
    """
    if isinstance(label, str):
        if label in ("E", "E_mixed"):
            ep = _SECTOR_WEIGHTS[SymmetryLabel.E_PLUS]
            em = _SECTOR_WEIGHTS[SymmetryLabel.E_MINUS]
            return _from_cp_diagonal(0.5 * (ep + em))
        label = SymmetryLabel(label)
    return _from_cp_diagonal(_SECTOR_WEIGHTS[label])


def lls_state(gamma: float) -> DensityMatrix8:
    """Long-lived state: (1+gamma)/2 rho_A + (1-gamma)/2 rho_E.

    Equivalently (1/8)(1 + (gamma/3) sum_{j<k} sigma(j).sigma(k)); the
    two forms are cross-checked on every call.
    """
    if abs(gamma) > 1.0:
        raise ValueError(f"gamma must lie in [-1, 1], got {gamma}")
    rho_a = _SECTOR_WEIGHTS[SymmetryLabel.A]
    rho_e = 0.5 * (_SECTOR_WEIGHTS[SymmetryLabel.E_PLUS] + _SECTOR_WEIGHTS[SymmetryLabel.E_MINUS])
    state = _from_cp_diagonal(0.5 * (1.0 + gamma) * rho_a + 0.5 * (1.0 - gamma) * rho_e)
    pauli_form = (np.eye(8, dtype=complex) + (gamma / 3.0) * pairwise_scalar_couplings()) / 8.0
    assert max_abs(state.mat - pauli_form) <= 1e-12
    return state


def _unit_2vector(phi, what: str) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.shape != (2,):
        raise ValueError(f"{what} must be a 2-vector")
    if abs(np.vdot(phi, phi).real - 1.0) > 1e-10:
        raise ValueError(f"{what} must be normalized to 1e-10")
    return phi


def extract_logical(a: complex, b: complex, phi1, phi2) -> LogicalDensity:
    """Logical qubit carried by a|E+>|phi1> + b|E->|phi2>.

    Builds the pure state in the E sector and traces out the
    magnetization subsystem.  The off-diagonal of the result is
    proportional to <phi2|phi1>, so imperfect preparation of
    phi1 = phi2 shows up as logical decoherence.
    """
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-10:
        raise ValueError("require |a|^2 + |b|^2 = 1 to 1e-10")
    phi1 = _unit_2vector(phi1, "phi1")
    phi2 = _unit_2vector(phi2, "phi2")
    u = build_cp_basis().u
    psi = a * (phi1[0] * u[:, 4] + phi1[1] * u[:, 5]) + b * (phi2[0] * u[:, 6] + phi2[1] * u[:, 7])
    return logical_from_density(DensityMatrix8(np.outer(psi, psi.conj())))


def logical_from_density(rho: DensityMatrix8) -> LogicalDensity:
    """Partial trace over m inside the E sector, renormalized.

    For states fully supported on the E sector the trace is already 1;
    otherwise the E-sector weight is divided out.
    """
    cp = rho.in_cp_basis()
    logical = np.array(
        [
            [cp[4, 4] + cp[5, 5], cp[4, 6] + cp[5, 7]],
            [cp[6, 4] + cp[7, 5], cp[6, 6] + cp[7, 7]],
        ]
    )
    weight = logical.trace().real
    if weight < 1e-14:
        raise ValueError("state has no support on the E sector")
    return LogicalDensity(logical / weight)


def collective_unitary(coeffs) -> np.ndarray:
    """exp(-i sum_axis c_axis S_axis): a symmetric (collective) rotation."""
    coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
    if coeffs.shape != (3,):
        raise ValueError("coeffs must be a real 3-vector")
    gen = sum(c * collective_spin_operator(ax) for c, ax in zip(coeffs, "xyz"))
    return expm(-1j * gen)


def apply_collective_unitary(rho: DensityMatrix8, coeffs) -> DensityMatrix8:
    u = collective_unitary(coeffs)
    return DensityMatrix8(u @ rho.mat @ u.conj().T)


def spin_hamiltonian(omega_h: float, j0: float) -> np.ndarray:
    """Zeeman + isotropic scalar coupling Hamiltonian of the three protons.

    H = (omega_h/2) sum_i sigma_z^(i) + 2*pi*J0 sum_{j<k} sigma(j).sigma(k).
    Symmetric under spin exchange, hence commutes with both cyclic
    permutations (checked).
    """
    h = omega_h * collective_spin_operator("z") + 2.0 * np.pi * j0 * pairwise_scalar_couplings()
    scale = max(max_abs(h), 1.0)
    for direction in ("plus", "minus"):
        p = build_cyclic_permutation(direction)
        assert max_abs(h @ p - p @ h) <= 1e-12 * scale
    return h
