"""Microwave dipole drive: selection rules, pulses and logical gates.

A circularly polarized field couples to the in-plane dipole of the
rotor through X +- iY, i.e. multiplication by e^{+-i phi}: a unit shift
of the plane-wave index l.  Since torsional eigenfunctions live on
single residue classes of l mod 3, transitions between sectors not
connected by a unit shift vanish identically, which is the selection
rule that lets one symmetry sector of the degenerate E subspace be
populated without ever lifting its degeneracy.

On resonance with the ground-band splitting the drive reduces to a
two-level coupling between the band-0 A sector and one E sector,
carried along on the spin side by the total-wavefunction symmetry
constraint.  The rotations U+-(theta, phi) built from it compose into
the logical X, Z and R(alpha, beta) gates; gate sequences are written
and applied in pulse-program order (leftmost pulse first).
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .linalg import max_abs, readonly
from .rotor import RotorSpectrum
from .space_spin import AllowedBasisElement, CombinedState, build_allowed_basis, single_band_spectrum
from .spin_symmetry import (
    DensityMatrix8,
    SymmetryLabel,
    build_cp_basis,
    collective_unitary,
    symmetry_polarized_state,
)

__all__ = [
    "Polarization",
    "PulseSpec",
    "GateReport",
    "PostSelectionError",
    "GateExtractionError",
    "PulseProgramError",
    "symmetry_projector",
    "dipole_operator",
    "transition_table",
    "build_h_eff",
    "evolve_pulse",
    "post_select_m_half",
    "q_logic_mixture",
    "u_rotation",
    "apply_sequence",
    "logical_indices",
    "logical_action",
    "logical_gate",
    "logical_rotation",
    "gate_algebra_residuals",
    "default_basis",
    "apply_collective_to_combined",
    "parse_pulse_program",
    "X_SEQUENCE",
    "Z_SEQUENCE",
    "rotation_sequence",
]

GATE_TOL = 1e-10


class PostSelectionError(RuntimeError):
    """Post-selection hit a branch of (numerically) zero probability."""


class GateExtractionError(RuntimeError):
    """Composed unitary does not act as a clean per-m logical operation."""


class PulseProgramError(ValueError):
    """Malformed pulse-program line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Polarization:
    """Circular polarization of the drive field."""

    handedness: str  # "right" | "left"
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        _check_handedness(self.handedness)
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


@dataclass(frozen=True)
class PulseSpec:
    """One resonant pulse: flip angle theta = 2*pi*kappa*tau.

    kappa (Hz) is the effective coupling set by the field amplitude and
    the in-plane dipole component; it fixes the duration tau for a
    requested flip angle rather than entering the dynamics separately.
    """

    polarization: Polarization
    kappa: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")

    @property
    def duration(self) -> float:
        return self.theta / (2.0 * math.pi * self.kappa)


@dataclass(frozen=True)
class GateReport:
    """Composed gate, its per-m logical action and algebra residuals."""

    name: str
    matrix: np.ndarray
    logical: np.ndarray  # 2x2, global phase stripped
    global_phase: float
    residuals: dict[str, float] = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(self.residuals.values())


def _check_handedness(handedness: str) -> None:
    if handedness not in ("right", "left"):
        raise ValueError(f"handedness must be 'right' or 'left', got {handedness!r}")


def symmetry_projector(label: SymmetryLabel, l_max: int) -> np.ndarray:
    """Character projector (1/3)(1 + chi(R+) R+ + chi(R-) R-) on plane waves.

    R+- rotates phi by +-2*pi/3 and multiplies e^{i l phi} by
    exp(+-2*pi*i*l/3), so each projector is diagonal: P_A keeps
    l = 0 mod 3, P_E+ keeps l = -1 mod 3 and P_E- keeps l = +1 mod 3.
    Note the E labels here follow the operator/character convention,
    the conjugate of the residue classes that label eigenFUNCTIONS
    (`classify_symmetry`); it is what makes P_E- fix the right-circular
    dipole function e^{+i phi}.
    """
    ls = np.arange(-l_max, l_max + 1)
    residue = {SymmetryLabel.A: 0, SymmetryLabel.E_PLUS: 2, SymmetryLabel.E_MINUS: 1}[label]
    return np.diag((ls % 3 == residue).astype(float))


def dipole_operator(handedness: str, l_max: int) -> np.ndarray:
    """In-plane dipole coupling for circular polarization, up to constants.

    right -> multiplication by e^{+i phi} (shift l -> l+1);
    left  -> multiplication by e^{-i phi} (shift l -> l-1).
    """
    _check_handedness(handedness)
    n = 2 * l_max + 1
    return np.eye(n, k=-1 if handedness == "right" else 1)


def transition_table(spectrum: RotorSpectrum, handedness: str) -> np.ndarray:
    """Squared dipole matrix elements |<final| d |initial>|^2.

    Entry [j, i] is the weight for level i -> level j.  Pairs not
    connected by a unit shift of the residue class are exactly zero:
    the eigenvectors have no support outside their class, so the
    products vanish term by term, not merely in the sum.
    """
    dip = dipole_operator(handedness, spectrum.params.l_max)
    coeffs = np.stack([lv.fourier for lv in spectrum.levels])
    amplitudes = coeffs.conj() @ dip @ coeffs.T
    return np.abs(amplitudes) ** 2


# combined-space sectors coupled by each drive: the resonant pulse moves
# band-0 A x A population into one E x E-conjugate sector
_EXCITED_SECTOR = {
    "right": (SymmetryLabel.E_MINUS, SymmetryLabel.E_PLUS),  # torsional, spin
    "left": (SymmetryLabel.E_PLUS, SymmetryLabel.E_MINUS),
}
# u_rotation sign -> same sector pairing: "plus" matches the right drive
_SIGN_SECTOR = {"plus": "right", "minus": "left"}


def _find_index(
    basis: list[AllowedBasisElement] | tuple[AllowedBasisElement, ...],
    tor_sym: SymmetryLabel,
    spin_sym: SymmetryLabel,
    m: float,
    band: int = 0,
) -> int:
    for i, el in enumerate(basis):
        if (
            el.torsional.band == band
            and el.torsional.symmetry is tor_sym
            and el.spin_symmetry is spin_sym
            and el.m == m
        ):
            return i
    raise ValueError(f"basis lacks band-{band} element ({tor_sym}, {spin_sym}, m={m})")


def _coupled_pairs(basis, handedness: str) -> list[tuple[int, int]]:
    """(ground, excited) index pairs, one per m in {+1/2, -1/2}."""
    tor_sym, spin_sym = _EXCITED_SECTOR[handedness]
    pairs = []
    for m in (0.5, -0.5):
        g = _find_index(basis, SymmetryLabel.A, SymmetryLabel.A, m)
        e = _find_index(basis, tor_sym, spin_sym, m)
        pairs.append((g, e))
    return pairs


def build_h_eff(
    kappa: float, handedness: str, basis: list[AllowedBasisElement], phase: float = 0.0
) -> np.ndarray:
    """Resonant effective Hamiltonian of the circularly polarized drive.

    kappa * (|tor E-sector><tor A,0| x sum_{m=+-1/2} |spin E-conj,m><A,m|)
    plus Hermitian conjugate; the phase multiplies the raising part as
    e^{i phase}.  The |A, +-3/2> states have no partner of matching m in
    the E sector and stay uncoupled.
    """
    _check_handedness(handedness)
    d = len(basis)
    h = np.zeros((d, d), dtype=complex)
    for g, e in _coupled_pairs(basis, handedness):
        h[e, g] = kappa * cmath.exp(1j * phase)
        h[g, e] = kappa * cmath.exp(-1j * phase)
    return h


def evolve_pulse(state: CombinedState, pulse: PulseSpec) -> CombinedState:
    """Unitary conjugation by the resonant pulse propagator.

    The flip angle theta = 2*pi*kappa*tau sets the two-level rotation
    exp(-i (theta/2) (e^{i phi} raise + h.c.)) on each coupled m pair:
    theta = pi converts the A x A population of m = +-1/2 into the
    driven E sector, theta = 2*pi returns the density matrix to itself.
    """
    h_unit = build_h_eff(1.0, pulse.polarization.handedness, list(state.basis), phase=pulse.phi)
    u = expm(-0.5j * pulse.theta * h_unit)
    return CombinedState(basis=state.basis, mat=u @ state.mat @ u.conj().T)


def post_select_m_half(rho: DensityMatrix8) -> tuple[DensityMatrix8, float]:
    """Keep the m = +-1/2 manifold, renormalized, with its probability.

    Experimentally this is conditioning on the carbon-shifted
    m = +-1/2 lines; the discarded weight sits in |A, +-3/2>.
    """
    u = build_cp_basis().u
    keep = np.array([0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0])
    projector = (u * keep) @ u.conj().T
    projected = projector @ rho.mat @ projector
    probability = float(projected.trace().real)
    if probability < 1e-14:
        raise PostSelectionError("no population with m = +-1/2 to select")
    return DensityMatrix8(projected / probability), probability


def q_logic_mixture(beta: float) -> DensityMatrix8:
    """Classical mixture (1+beta)/2 rho_E+ + (1-beta)/2 rho_E-."""
    if abs(beta) > 1.0:
        raise ValueError(f"beta must lie in [-1, 1], got {beta}")
    rho_p = symmetry_polarized_state(SymmetryLabel.E_PLUS).mat
    rho_m = symmetry_polarized_state(SymmetryLabel.E_MINUS).mat
    return DensityMatrix8(0.5 * (1.0 + beta) * rho_p + 0.5 * (1.0 - beta) * rho_m)


def u_rotation(sign: str, theta: float, phi: float, basis) -> np.ndarray:
    """Two-level rotation between the ground sector and one E sector.

    Acts identically for m = +1/2 and m = -1/2 and as the identity on
    every other basis element:

        |ground,m>  -> cos(theta/2) |ground,m> + e^{i phi} sin(theta/2) |excited,m>
        |excited,m> -> cos(theta/2) |excited,m> - e^{-i phi} sin(theta/2) |ground,m>

    "plus" couples to (torsional E-, spin E+), "minus" to the mirror.
    U(theta, phi) @ U(-theta, phi) is the identity.
    """
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    d = len(basis)
    u = np.eye(d, dtype=complex)
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    for g, e in _coupled_pairs(basis, _SIGN_SECTOR[sign]):
        u[g, g] = c
        u[e, e] = c
        u[e, g] = cmath.exp(1j * phi) * s
        u[g, e] = -cmath.exp(-1j * phi) * s
    return u


def apply_sequence(basis, pulses) -> np.ndarray:
    """Compose pulses in program order: the first listed acts first."""
    d = len(basis)
    total = np.eye(d, dtype=complex)
    for sign, theta, phi in pulses:
        total = u_rotation(sign, theta, phi, basis) @ total
    return total


X_SEQUENCE = (("minus", math.pi, 0.0), ("plus", math.pi, 0.0), ("minus", math.pi, 0.0))
Z_SEQUENCE = (
    ("minus", 2.0 * math.pi, 0.0),
    ("plus", 2.0 * math.pi, 0.0),
    ("minus", 2.0 * math.pi, 0.0),
)


def rotation_sequence(alpha: float, beta: float) -> tuple:
    """Pulse program of the arbitrary logical rotation R(alpha, beta)."""
    return (("minus", -math.pi, math.pi), ("plus", alpha, -beta), ("minus", math.pi, math.pi))


def logical_indices(basis) -> dict[float, tuple[int, int]]:
    """Per m: (index of |0bar>, index of |1bar>) in the combined basis.

    |0bar> is the sector populated by the right/"plus" drive
    (torsional E-, spin E+); |1bar> is its mirror.
    """
    out = {}
    for m in (0.5, -0.5):
        zero = _find_index(basis, SymmetryLabel.E_MINUS, SymmetryLabel.E_PLUS, m)
        one = _find_index(basis, SymmetryLabel.E_PLUS, SymmetryLabel.E_MINUS, m)
        out[m] = (zero, one)
    return out


def logical_action(matrix: np.ndarray, basis) -> tuple[np.ndarray, float, dict[str, float]]:
    """Extract the 2x2 logical action of a combined-space unitary.

    Checks that the unitary maps the logical span of each m onto
    itself (no leakage), that the two m blocks agree, then strips a
    single global phase (first entry above 1e-6 made real positive).
    Returns (logical 2x2, stripped phase, diagnostics).
    """
    idx = logical_indices(basis)
    blocks = []
    leakage = 0.0
    for m, cols in idx.items():
        block = matrix[np.ix_(cols, cols)]
        # unitary columns have norm 1; weight outside the block is leakage
        col_norms = np.linalg.norm(block, axis=0)
        leakage = max(leakage, float(np.sqrt(max(0.0, 1.0 - float(col_norms.min()) ** 2))))
        blocks.append(block)
    mismatch = max_abs(blocks[0] - blocks[1])
    if mismatch > GATE_TOL:
        raise GateExtractionError(f"logical action differs between m sectors by {mismatch:.3e}")
    if leakage > math.sqrt(GATE_TOL):
        raise GateExtractionError(f"gate leaks out of the logical span by {leakage:.3e}")
    block = blocks[0]
    flat = block.reshape(-1)
    pivot = flat[np.abs(flat) > 1e-6][0]
    phase = cmath.phase(pivot)
    fixed = block * cmath.exp(-1j * phase)
    return fixed, phase, {"m_mismatch": mismatch, "leakage": leakage}


_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@lru_cache(maxsize=1)
def default_basis() -> tuple[AllowedBasisElement, ...]:
    """Ground-band basis over a synthetic spectrum (gates are energy-free)."""
    return tuple(build_allowed_basis(single_band_spectrum(0.0269), n_bands=1))


def gate_algebra_residuals(x_logical: np.ndarray, z_logical: np.ndarray) -> dict[str, float]:
    """Pauli-algebra residuals of the extracted (phase-fixed) X and Z.

    Y is the algebra completion -i X Z, so the commutator residual
    coincides with the anticommutator one; both are reported.
    """
    eye = np.eye(2)
    y = -1j * (x_logical @ z_logical)
    return {
        "x_squared": max_abs(x_logical @ x_logical - eye),
        "z_squared": max_abs(z_logical @ z_logical - eye),
        "anticommutator": max_abs(x_logical @ z_logical + z_logical @ x_logical),
        "commutator_vs_2iY": max_abs(
            x_logical @ z_logical - z_logical @ x_logical - 2j * y
        ),
        "x_map": max_abs(x_logical - _PAULI_X),
        "z_map": max_abs(z_logical - _PAULI_Z),
    }


def logical_gate(name: str, basis=None) -> GateReport:
    """Compose the X or Z pulse sequence and verify its logical action.

    X swaps the two logical sectors (populations and torsional label
    together); Z leaves populations alone and imprints a relative -1 on
    |1bar>.  Both are accepted only up to a single global phase, fixed
    so that Z|0bar> = +|0bar> and X|0bar> = +|1bar>.
    """
    if name not in ("X", "Z"):
        raise ValueError(f"gate name must be 'X' or 'Z', got {name!r}")
    basis = list(basis) if basis is not None else list(default_basis())
    x_mat = apply_sequence(basis, X_SEQUENCE)
    z_mat = apply_sequence(basis, Z_SEQUENCE)
    x_logical, x_phase, x_diag = logical_action(x_mat, basis)
    z_logical, z_phase, z_diag = logical_action(z_mat, basis)
    residuals = gate_algebra_residuals(x_logical, z_logical)
    if name == "X":
        matrix, logical, phase, diag = x_mat, x_logical, x_phase, x_diag
    else:
        matrix, logical, phase, diag = z_mat, z_logical, z_phase, z_diag
    residuals.update(diag)
    return GateReport(
        name=name,
        matrix=readonly(matrix),
        logical=readonly(logical),
        global_phase=phase,
        residuals=residuals,
    )


def logical_rotation(alpha: float, beta: float, basis=None) -> GateReport:
    """Arbitrary logical rotation R(alpha, beta).

    Verified behaviorally: on |0bar> it produces
    cos(alpha/2) |0bar> + e^{i beta} sin(alpha/2) |1bar>, compared as a
    logical density matrix (the composed-sequence global phase is not
    observable).
    """
    basis = list(basis) if basis is not None else list(default_basis())
    matrix = apply_sequence(basis, rotation_sequence(alpha, beta))
    logical, phase, diag = logical_action(matrix, basis)
    target = np.array([math.cos(0.5 * alpha), cmath.exp(1j * beta) * math.sin(0.5 * alpha)])
    produced = logical @ np.array([1.0, 0.0])
    overlap = abs(np.vdot(target, produced))
    residuals = dict(diag)
    residuals["target_state"] = float(abs(1.0 - overlap))
    return GateReport(
        name=f"R({alpha:.6g},{beta:.6g})",
        matrix=readonly(matrix),
        logical=readonly(logical),
        global_phase=phase,
        residuals=residuals,
    )


def apply_collective_to_combined(state: CombinedState, coeffs) -> CombinedState:
    """Collective spin rotation lifted to the Pauli-allowed combined space.

    exp(-i sum c_a S_a) is block diagonal over spin symmetry sectors,
    so it never creates Pauli-forbidden components: each torsional
    level just carries the matching sector block of the 8x8 rotation.
    """
    u8 = collective_unitary(coeffs)
    u_cp = build_cp_basis().u.conj().T @ u8 @ build_cp_basis().u
    d = len(state.basis)
    lifted = np.zeros((d, d), dtype=complex)
    ids = [(el.torsional.band, el.torsional.symmetry) for el in state.basis]
    cp = [el.spin_cp_index for el in state.basis]
    for p in range(d):
        for q in range(d):
            if ids[p] == ids[q]:
                lifted[p, q] = u_cp[cp[p], cp[q]]
    return CombinedState(basis=state.basis, mat=lifted @ state.mat @ lifted.conj().T)


_VALUE_RE = re.compile(r"^([+-]?)(\d+(?:\.\d*)?|\.\d+)?(pi)?(?:/(\d+(?:\.\d*)?))?$")


def _parse_angle(token: str, line_no: int) -> float:
    """Angle literal: a float, optionally times pi, optionally over a number."""
    match = _VALUE_RE.match(token.strip())
    if not match or (match.group(2) is None and match.group(3) is None):
        raise PulseProgramError(line_no, f"cannot parse angle {token!r}")
    sign, number, pi, divisor = match.groups()
    value = float(number) if number is not None else 1.0
    if pi:
        value *= math.pi
    if divisor:
        value /= float(divisor)
    return -value if sign == "-" else value


def parse_pulse_program(text: str) -> list[tuple[str, float, float]]:
    """Parse a pulse program: one `U+ theta=<angle> phi=<angle>` per line.

    Blank lines and `#` comments are ignored.  Angles accept plain
    floats and pi forms like `pi`, `2pi`, `-pi/2`, `0.5pi`.  Pulses are
    returned in program order (the order they are applied).
    """
    pulses = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] not in ("U+", "U-"):
            raise PulseProgramError(line_no, f"expected 'U+' or 'U-', got {parts[0]!r}")
        sign = "plus" if parts[0] == "U+" else "minus"
        values = {"theta": None, "phi": 0.0}
        for part in parts[1:]:
            if "=" not in part:
                raise PulseProgramError(line_no, f"expected key=value, got {part!r}")
            key, _, token = part.partition("=")
            if key not in values:
                raise PulseProgramError(line_no, f"unknown key {key!r}")
            values[key] = _parse_angle(token, line_no)
        if values["theta"] is None:
            raise PulseProgramError(line_no, "missing theta=<angle>")
        pulses.append((sign, values["theta"], values["phi"]))
    return pulses
