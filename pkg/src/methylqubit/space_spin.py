"""Pauli-allowed combined torsional x spin space and thermal preparation.

A 2*pi/3 rotation of the methyl group is the same physical operation as
a cyclic permutation of its three protons, so the total wavefunction
constrains the symmetry labels of the two factors: allowed products are
A x A, E+ x E- and E- x E+ only.  Each complete torsional band
therefore carries exactly 8 combined states (4 above the A level, 2
above each E level).  Cooling well below the ground-band splitting
concentrates population in the A x A sector, which reduces on the spin
side to a symmetry-polarized long-lived state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import spin_symmetry
from .linalg import max_abs, readonly
from .rotor import RotorParams, RotorSpectrum, TorsionalLevel
from .spin_symmetry import DensityMatrix8, SymmetryLabel, build_cp_basis
from .units import KB_MEV_PER_K

__all__ = [
    "AllowedBasisElement",
    "CombinedState",
    "LlsPolarization",
    "build_allowed_basis",
    "thermal_state",
    "ground_band_a_state",
    "spin_reduced",
    "lls_polarization",
    "fit_lls_gamma",
    "single_band_spectrum",
    "state_to_json_dict",
]

# spin partner required by Sym(tor) x Sym(spin) = A
PAULI_PARTNER = {
    SymmetryLabel.A: SymmetryLabel.A,
    SymmetryLabel.E_PLUS: SymmetryLabel.E_MINUS,
    SymmetryLabel.E_MINUS: SymmetryLabel.E_PLUS,
}

_SPIN_M = {
    SymmetryLabel.A: (1.5, 0.5, -0.5, -1.5),
    SymmetryLabel.E_PLUS: (0.5, -0.5),
    SymmetryLabel.E_MINUS: (0.5, -0.5),
}


@dataclass(frozen=True)
class AllowedBasisElement:
    """One Pauli-allowed product |torsional level> x |spin s, m>."""

    torsional: TorsionalLevel
    spin_symmetry: SymmetryLabel
    m: float
    total_energy: float

    @property
    def spin_cp_index(self) -> int:
        return build_cp_basis().index(self.spin_symmetry, self.m)

    def key(self) -> tuple:
        return (self.torsional.band, self.torsional.symmetry, self.spin_symmetry, self.m)


@dataclass(frozen=True)
class CombinedState:
    """Density matrix over a Pauli-allowed basis."""

    basis: tuple[AllowedBasisElement, ...]
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        d = len(self.basis)
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match basis size {d}")
        if max_abs(mat - mat.conj().T) > spin_symmetry.HERMITIAN_TOL:
            raise ValueError("combined state is not Hermitian")
        if abs(mat.trace() - 1.0) > spin_symmetry.TRACE_TOL:
            raise ValueError(f"combined state trace is {mat.trace():.3e}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -spin_symmetry.PSD_TOL:
            raise ValueError("combined state has a negative eigenvalue")
        object.__setattr__(self, "mat", readonly(mat))
        object.__setattr__(self, "basis", tuple(self.basis))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.mat)).copy()


def build_allowed_basis(
    spectrum: RotorSpectrum, n_bands: int, omega_h_mev: float = 0.0
) -> list[AllowedBasisElement]:
    """Pauli-allowed products for the lowest `n_bands` complete bands.

    Each torsional level carries exactly the spin states its symmetry
    admits; 8 combined states per band.  The optional Zeeman term adds
    -m * omega_h_mev to the total energy (the preparation regime of
    interest has omega_h_mev = 0).  Spectra with unassigned bands in
    range are rejected rather than truncated so the 8-per-band
    invariant that pulse operations rely on always holds.
    """
    if n_bands < 1:
        raise ValueError("n_bands must be positive")
    elements: list[AllowedBasisElement] = []
    for band in range(n_bands):
        levels = spectrum.band_levels(band)
        if len(levels) != 3:
            raise ValueError(f"band {band} is unassigned or incomplete in the spectrum")
        by_symmetry = {lv.symmetry: lv for lv in levels}
        for tor_sym in (SymmetryLabel.A, SymmetryLabel.E_PLUS, SymmetryLabel.E_MINUS):
            level = by_symmetry[tor_sym]
            spin_sym = PAULI_PARTNER[tor_sym]
            for m in _SPIN_M[spin_sym]:
                elements.append(
                    AllowedBasisElement(
                        torsional=level,
                        spin_symmetry=spin_sym,
                        m=m,
                        total_energy=level.energy - m * omega_h_mev,
                    )
                )
    return elements


def thermal_state(basis: list[AllowedBasisElement], temperature_k: float) -> CombinedState:
    """Diagonal Gibbs state over the allowed basis."""
    if temperature_k <= 0:
        raise ValueError("temperature must be positive")
    energies = np.array([el.total_energy for el in basis])
    weights = np.exp(-(energies - energies.min()) / (KB_MEV_PER_K * temperature_k))
    return CombinedState(basis=tuple(basis), mat=np.diag(weights / weights.sum()).astype(complex))


def ground_band_a_state(basis: list[AllowedBasisElement]) -> CombinedState:
    """|Phi_A,0> x (1/4) sum_m |A,m><A,m|: the post-cooling initial state."""
    weights = np.array(
        [
            0.25
            if (
                el.torsional.band == 0
                and el.torsional.symmetry is SymmetryLabel.A
                and el.spin_symmetry is SymmetryLabel.A
            )
            else 0.0
            for el in basis
        ]
    )
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("basis does not contain the four band-0 A x A states")
    return CombinedState(basis=tuple(basis), mat=np.diag(weights).astype(complex))


def spin_reduced(state: CombinedState) -> DensityMatrix8:
    """Partial trace over the torsional factor, back in the full spin space."""
    rho_cp = np.zeros((8, 8), dtype=complex)
    ids = [(el.torsional.band, el.torsional.symmetry) for el in state.basis]
    cp = [el.spin_cp_index for el in state.basis]
    for p in range(len(state.basis)):
        for q in range(len(state.basis)):
            if ids[p] == ids[q]:
                rho_cp[cp[p], cp[q]] += state.mat[p, q]
    u = build_cp_basis().u
    return DensityMatrix8(u @ rho_cp @ u.conj().T)


class LlsPolarization(NamedTuple):
    """Symmetry polarization gamma from two conventions.

    `gamma_paper` is tanh(dE0 / kB T); `gamma_boltzmann` is
    tanh(dE0 / 2 kB T), the value the explicit Gibbs sum over the eight
    ground-band states (degeneracy 4 against 4) actually produces.
    The factor-of-two discrepancy is surfaced, not silently resolved.
    """

    gamma_paper: float
    gamma_boltzmann: float


def lls_polarization(delta_e0_mev: float, temperature_k: float) -> LlsPolarization:
    if temperature_k <= 0:
        raise ValueError("temperature must be positive")
    x = delta_e0_mev / (KB_MEV_PER_K * temperature_k)
    return LlsPolarization(gamma_paper=float(np.tanh(x)), gamma_boltzmann=float(np.tanh(0.5 * x)))


def fit_lls_gamma(rho: DensityMatrix8) -> float:
    """Least-squares gamma of the long-lived-state family closest to rho.

    The family is affine in gamma, rho(gamma) = 1/8 + gamma * M, so the
    projection is a single Frobenius inner product.
    """
    direction = 0.5 * (
        spin_symmetry.symmetry_polarized_state(SymmetryLabel.A).mat
        - spin_symmetry.symmetry_polarized_state("E").mat
    )
    residual = rho.mat - np.eye(8) / 8.0
    return float(
        np.real(np.vdot(direction, residual)) / np.real(np.vdot(direction, direction))
    )


def single_band_spectrum(delta_e0_mev: float, f_const: float = 1.0) -> RotorSpectrum:
    """Minimal synthetic spectrum: one assigned band with splitting dE0.

    Useful when only the ground-band level structure matters (gate
    algebra, polarization estimates from a measured splitting); the
    Fourier content is the free-rotor one.
    """
    l_max = 3
    params = RotorParams(f_const=f_const, v0=0.0, l_max=l_max)

    def unit(l: int) -> np.ndarray:
        v = np.zeros(2 * l_max + 1)
        v[l + l_max] = 1.0
        return v

    levels = (
        TorsionalLevel(energy=0.0, symmetry=SymmetryLabel.A, band=0, fourier=unit(0)),
        TorsionalLevel(energy=delta_e0_mev, symmetry=SymmetryLabel.E_PLUS, band=0, fourier=unit(1)),
        TorsionalLevel(energy=delta_e0_mev, symmetry=SymmetryLabel.E_MINUS, band=0, fourier=unit(-1)),
    )
    return RotorSpectrum(params=params, levels=levels, splittings={0: delta_e0_mev})


def state_to_json_dict(state: CombinedState) -> dict:
    """JSON-ready view: labeled basis plus diagonal populations."""
    return {
        "basis": [
            {
                "band": el.torsional.band,
                "torsional_symmetry": el.torsional.symmetry.value,
                "spin_symmetry": el.spin_symmetry.value,
                "m": el.m,
                "total_energy_mev": el.total_energy,
            }
            for el in state.basis
        ],
        "populations": [float(p) for p in state.populations()],
    }
