"""Hindered-rotor (torsional) eigenproblem for a three-fold barrier.

The Hamiltonian is H = F * L_z^2 + (V0/2)(1 - cos 3*phi) with
F = hbar^2 / (2 I0) in meV.  In the plane-wave basis e^{i l phi} it is
pentadiagonal with stride 3 and exactly block diagonal over the residue
classes l mod 3, so each class is solved as an independent tridiagonal
eigenproblem.  That makes the symmetry classification of every
eigenfunction structural: class 0 -> A, class +1 -> E+, class -1 -> E-,
and the degenerate E pairs are never mixed by the eigensolver.

A real-space finite-difference solver (`finite_difference_oracle`) is
kept as an independent cross-check of the spectral method.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .spin_symmetry import SymmetryLabel
from .units import GHZ_PER_MEV

__all__ = [
    "RotorParams",
    "TorsionalLevel",
    "RotorSpectrum",
    "LcaoFit",
    "SweepRow",
    "TruncationError",
    "AmbiguousSymmetryError",
    "RegimeWarning",
    "build_torsional_hamiltonian",
    "classify_symmetry",
    "solve_spectrum",
    "solve_auto",
    "suggest_l_max",
    "lcao_fit",
    "lcao_from_energies",
    "harmonic_limit_energy",
    "barrier_from_q",
    "sweep_barrier",
    "sweep_rows_to_csv",
    "finite_difference_oracle",
    "fd_noise_floor",
    "spectrum_to_json_dict",
]

log = logging.getLogger(__name__)

SWEEP_CSV_HEADER = "q,v0_over_f,level,band,symmetry,energy_mev,delta_e_n_ghz"

# residue class of l mod 3 -> symmetry of the eigenfunction
RESIDUE_LABEL = {0: SymmetryLabel.A, 1: SymmetryLabel.E_PLUS, 2: SymmetryLabel.E_MINUS}
LABEL_RESIDUE = {v: k for k, v in RESIDUE_LABEL.items()}


class TruncationError(RuntimeError):
    """Plane-wave cutoff too small for the requested levels."""


class AmbiguousSymmetryError(ValueError):
    """No residue class dominates the Fourier weight of an eigenvector."""


class RegimeWarning(UserWarning):
    """Closed-form approximation evaluated outside its validity regime."""


@dataclass(frozen=True)
class RotorParams:
    """f_const: free-rotor energy constant F (meV); v0: barrier height (meV)."""

    f_const: float
    v0: float
    l_max: int = 30

    def __post_init__(self):
        if self.f_const <= 0:
            raise ValueError(f"f_const must be positive, got {self.f_const}")
        if self.v0 < 0:
            raise ValueError(f"v0 must be non-negative, got {self.v0}")
        if self.l_max < 3:
            raise ValueError(f"l_max must be at least 3, got {self.l_max}")

    @property
    def l_values(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)


@dataclass(frozen=True)
class TorsionalLevel:
    """One torsional eigenpair with its symmetry classification.

    `fourier` holds the coefficients c_l over l in [-l_max, l_max]; the
    support lies on a single residue class of l mod 3.  `band` is None
    outside the regime where levels group into clean triples.
    """

    energy: float
    symmetry: SymmetryLabel
    band: int | None
    fourier: np.ndarray

    def residue_weights(self) -> dict[str, float]:
        """Fourier weight per residue class {0, +1, -1} of l mod 3."""
        n = self.fourier.size
        l_max = (n - 1) // 2
        ls = np.arange(-l_max, l_max + 1)
        w2 = np.abs(self.fourier) ** 2
        return {
            "0": float(w2[ls % 3 == 0].sum()),
            "+1": float(w2[ls % 3 == 1].sum()),
            "-1": float(w2[ls % 3 == 2].sum()),
        }


@dataclass(frozen=True)
class RotorSpectrum:
    """Energy-ordered torsional levels plus per-band tunneling splittings.

    splittings[n] = E(E, n) - E(A, n) in meV; its sign alternates from
    band to band below the barrier top.
    """

    params: RotorParams
    levels: tuple[TorsionalLevel, ...]
    splittings: dict[int, float] = field(default_factory=dict)

    def band_levels(self, band: int) -> tuple[TorsionalLevel, ...]:
        return tuple(lv for lv in self.levels if lv.band == band)

    def band_energies(self, band: int) -> tuple[float, float]:
        """(E_A, E_E) of one assigned band; E_E averages the degenerate pair."""
        levels = self.band_levels(band)
        if len(levels) != 3:
            raise ValueError(f"band {band} is not assigned in this spectrum")
        e_a = next(lv.energy for lv in levels if lv.symmetry is SymmetryLabel.A)
        e_e = float(np.mean([lv.energy for lv in levels if lv.symmetry is not SymmetryLabel.A]))
        return e_a, e_e

    @property
    def n_bands(self) -> int:
        return len(self.splittings)


@dataclass(frozen=True)
class LcaoFit:
    """Three-site tight-binding parameters of one band.

    E(A) = alpha + 2*beta and E(E) = alpha - beta, so the tunneling
    splitting is |3*beta|.
    """

    band: int
    alpha: float
    beta: float


def build_torsional_hamiltonian(params: RotorParams) -> np.ndarray:
    """Dense plane-wave Hamiltonian: diag F*l^2 + V0/2, off-diag -V0/4 at l <-> l+-3."""
    ls = params.l_values.astype(float)
    n = ls.size
    h = np.zeros((n, n))
    np.fill_diagonal(h, params.f_const * ls**2 + 0.5 * params.v0)
    for a in range(n - 3):
        h[a, a + 3] = h[a + 3, a] = -0.25 * params.v0
    return h


def classify_symmetry(fourier: np.ndarray, tol: float = 1e-10) -> SymmetryLabel:
    """Symmetry of an eigenvector from the residue class carrying its weight.

    Raises `AmbiguousSymmetryError` when no class holds at least
    1 - tol of the squared norm, which signals an eigensolver that
    mixed degenerate eigenvectors across classes; solve the residue
    blocks separately in that case.
    """
    fourier = np.asarray(fourier)
    n = fourier.size
    l_max = (n - 1) // 2
    if n != 2 * l_max + 1:
        raise ValueError("fourier vector must have odd length 2*l_max + 1")
    norm = float(np.abs(fourier) ** 2 @ np.ones(n))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError("fourier vector must be normalized")
    ls = np.arange(-l_max, l_max + 1)
    for residue, label in RESIDUE_LABEL.items():
        if np.abs(fourier[ls % 3 == residue]).__pow__(2).sum() >= 1.0 - tol:
            return label
    raise AmbiguousSymmetryError("no residue class of l mod 3 dominates the Fourier weight")


def _solve_residue_blocks(params: RotorParams) -> list[tuple[float, SymmetryLabel, np.ndarray]]:
    """All eigenpairs, each confined to one residue class, sorted by energy."""
    ls_all = params.l_values
    out: list[tuple[float, SymmetryLabel, np.ndarray]] = []
    for residue, label in RESIDUE_LABEL.items():
        sel = np.where(ls_all % 3 == residue)[0]
        ls = ls_all[sel].astype(float)
        diag = params.f_const * ls**2 + 0.5 * params.v0
        if ls.size == 1:
            vals, vecs = diag.copy(), np.ones((1, 1))
        else:
            vals, vecs = eigh_tridiagonal(diag, np.full(ls.size - 1, -0.25 * params.v0))
        for j in range(vals.size):
            coeff = np.zeros(ls_all.size)
            coeff[sel] = vecs[:, j]
            out.append((float(vals[j]), label, coeff))
    rank = {SymmetryLabel.A: 0, SymmetryLabel.E_PLUS: 1, SymmetryLabel.E_MINUS: 2}
    out.sort(key=lambda t: (t[0], rank[t[1]]))
    return out


# a band is a triple whose spread stays below this fraction of the gap
# to the next level; above it the tight-binding labeling breaks down
BAND_SPREAD_FRACTION = 0.5
E_DEGENERACY_RTOL = 1e-10


def _assign_bands(
    entries: list[tuple[float, SymmetryLabel, np.ndarray]], n_levels: int, f_const: float
) -> tuple[list[int | None], dict[int, float]]:
    bands: list[int | None] = [None] * n_levels
    splittings: dict[int, float] = {}
    band = 0
    i = 0
    while i + 3 <= n_levels and i + 3 < len(entries):
        triple = entries[i : i + 3]
        labels = sorted(t[1].value for t in triple)
        if labels != ["A", "E+", "E-"]:
            break
        spread = triple[2][0] - triple[0][0]
        gap = entries[i + 3][0] - triple[2][0]
        if not spread < BAND_SPREAD_FRACTION * gap:
            break
        e_a = next(t[0] for t in triple if t[1] is SymmetryLabel.A)
        e_pair = [t[0] for t in triple if t[1] is not SymmetryLabel.A]
        scale = max(abs(e_pair[0]), abs(e_pair[1]), f_const)
        if abs(e_pair[0] - e_pair[1]) > E_DEGENERACY_RTOL * scale:
            break
        bands[i : i + 3] = [band] * 3
        splittings[band] = float(np.mean(e_pair) - e_a)
        band += 1
        i += 3
    return bands, splittings


# relative shift of the highest requested eigenvalue allowed when the
# cutoff is raised by 6 (two extra couplings per residue class)
TRUNCATION_RTOL = 1e-8


def solve_spectrum(params: RotorParams, n_levels: int) -> RotorSpectrum:
    """Lowest `n_levels` eigenpairs, symmetry-classified and band-assigned.

    Truncation adequacy is checked by re-solving with l_max + 6; a
    relative shift above 1e-8 in the highest requested eigenvalue
    raises `TruncationError`.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be positive")
    if n_levels > 2 * params.l_max - 5:
        raise ValueError(
            f"n_levels={n_levels} exceeds the safety margin 2*l_max-5={2 * params.l_max - 5}"
        )
    entries = _solve_residue_blocks(params)
    wider = RotorParams(params.f_const, params.v0, params.l_max + 6)
    entries_wide = _solve_residue_blocks(wider)
    e_top, e_top_wide = entries[n_levels - 1][0], entries_wide[n_levels - 1][0]
    scale = max(abs(e_top), abs(e_top_wide), params.f_const)
    if abs(e_top - e_top_wide) > TRUNCATION_RTOL * scale:
        raise TruncationError(
            f"level {n_levels - 1} shifts by {abs(e_top - e_top_wide):.3e} meV "
            f"(> {TRUNCATION_RTOL:g} relative) when l_max grows from "
            f"{params.l_max} to {params.l_max + 6}; increase l_max"
        )
    bands, splittings = _assign_bands(entries, n_levels, params.f_const)
    levels = []
    for (energy, label, coeff), band in zip(entries[:n_levels], bands):
        assert classify_symmetry(coeff) is label
        levels.append(TorsionalLevel(energy=energy, symmetry=label, band=band, fourier=coeff))
    return RotorSpectrum(params=params, levels=tuple(levels), splittings=splittings)


def suggest_l_max(f_const: float, v0: float, n_levels: int) -> int:
    """Plane-wave cutoff expected to pass the truncation check.

    Sized from the harmonic-well momentum spread of the highest
    requested band, with a floor of 30 (adequate for <= 12 levels in
    the free and intermediate regimes).
    """
    n_bands = max(1, math.ceil(n_levels / 3))
    ratio = max(v0 / f_const, 1.0)
    sigma2 = 1.5 * (n_bands + 1.0) * math.sqrt(ratio)
    guess = math.ceil(4.5 * math.sqrt(sigma2)) + 9
    return max(30, (n_levels + 7) // 2 + 3, guess)


def solve_auto(f_const: float, v0: float, n_levels: int, l_max: int | None = None) -> RotorSpectrum:
    """`solve_spectrum` with an automatically grown plane-wave cutoff."""
    cutoff = l_max if l_max is not None else suggest_l_max(f_const, v0, n_levels)
    last_error: TruncationError | None = None
    for _ in range(4):
        try:
            return solve_spectrum(RotorParams(f_const, v0, cutoff), n_levels)
        except TruncationError as err:
            last_error = err
            cutoff = int(cutoff * 1.5) + 6
    raise last_error


def lcao_from_energies(e_a: float, e_e: float, band: int = 0) -> LcaoFit:
    """Exact two-parameter fit: alpha = (E_A + 2 E_E)/3, beta = (E_A - E_E)/3."""
    return LcaoFit(band=band, alpha=(e_a + 2.0 * e_e) / 3.0, beta=(e_a - e_e) / 3.0)


def lcao_fit(spectrum: RotorSpectrum, band: int) -> LcaoFit:
    e_a, e_e = spectrum.band_energies(band)
    return lcao_from_energies(e_a, e_e, band)


HARMONIC_REGIME_RATIO = 100.0


def harmonic_limit_energy(params: RotorParams, band: int) -> float:
    """Firm-rotor estimate 3*sqrt(F*V0)*(n + 1/2) for the band-n center.

    Warns outside the deep-well regime v0/f_const >= 100 where the
    harmonic expansion of the wells is not guaranteed accurate.
    """
    if band < 0:
        raise ValueError("band must be non-negative")
    if params.v0 < HARMONIC_REGIME_RATIO * params.f_const:
        warnings.warn(
            f"v0/f = {params.v0 / params.f_const:.3g} < {HARMONIC_REGIME_RATIO:g}: "
            "harmonic-well estimate outside its accuracy regime",
            RegimeWarning,
            stacklevel=2,
        )
    return 3.0 * math.sqrt(params.f_const * params.v0) * (band + 0.5)


def barrier_from_q(f_const: float, q: float, scale: float = 100.0) -> float:
    """Map the sweep parameter q in [0, 1) to V0 = F * scale * q / (1 - q)."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    return f_const * scale * q / (1.0 - q)


@dataclass(frozen=True)
class SweepRow:
    q: float
    v0_over_f: float
    level: int
    band: int | None
    symmetry: SymmetryLabel
    energy_mev: float
    delta_e_n_ghz: float | None


def sweep_barrier(
    f_const: float,
    q_grid,
    n_levels: int,
    scale: float = 100.0,
    l_max: int | None = None,
) -> list[SweepRow]:
    """Solve the spectrum across a q grid; rows ordered by q then level.

    Failed grid points are logged and skipped so the sweep always
    completes.
    """
    rows: list[SweepRow] = []
    for q in q_grid:
        v0 = barrier_from_q(f_const, q, scale)
        try:
            spectrum = solve_auto(f_const, v0, n_levels, l_max=l_max)
        except (TruncationError, ValueError) as err:
            log.warning("sweep point q=%g failed: %s", q, err)
            continue
        for i, lv in enumerate(spectrum.levels):
            delta = spectrum.splittings.get(lv.band) if lv.band is not None else None
            rows.append(
                SweepRow(
                    q=float(q),
                    v0_over_f=v0 / f_const,
                    level=i,
                    band=lv.band,
                    symmetry=lv.symmetry,
                    energy_mev=lv.energy,
                    delta_e_n_ghz=None if delta is None else delta * GHZ_PER_MEV,
                )
            )
    return rows


def _fmt(x: float) -> str:
    return format(x, ".12g")


def sweep_rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.q),
                    _fmt(r.v0_over_f),
                    str(r.level),
                    "" if r.band is None else str(r.band),
                    r.symmetry.value,
                    _fmt(r.energy_mev),
                    "" if r.delta_e_n_ghz is None else _fmt(r.delta_e_n_ghz),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _fd_eigenvalues(params: RotorParams, n_points: int, n_levels: int) -> np.ndarray:
    """Lowest eigenvalues of the second-order periodic stencil on n_points."""
    h = 2.0 * np.pi / n_points
    phi = h * np.arange(n_points)
    main = 2.0 * params.f_const / h**2 + 0.5 * params.v0 * (1.0 - np.cos(3.0 * phi))
    off = -params.f_const / h**2
    idx = np.arange(n_points)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx + 1) % n_points, (idx - 1) % n_points])
    data = np.concatenate([main, np.full(n_points, off), np.full(n_points, off)])
    mat = scipy.sparse.csc_matrix((data, (rows, cols)), shape=(n_points, n_points))
    # fixed generic start vector: keeps ARPACK deterministic and avoids
    # starting exactly on the V0=0 ground eigenvector (a constant)
    start = np.random.default_rng(20260810).standard_normal(n_points)
    vals = eigsh(
        mat,
        k=n_levels,
        sigma=-params.f_const,
        which="LM",
        v0=start,
        return_eigenvectors=False,
    )
    return np.sort(vals)


def finite_difference_oracle(params: RotorParams, n_points: int, n_levels: int) -> np.ndarray:
    """Real-space cross-check of the spectral solver.

    Second-order central differences on a uniform periodic grid, with
    one Richardson step (grids n_points and n_points/2) to push the
    discretization error from O(h^2) to O(h^4); the plain stencil at
    4096 points is only ~3e-6 accurate on free-rotor levels near l = 4,
    short of the 1e-6 agreement this oracle certifies.
    """
    if n_points < 512:
        raise ValueError("n_points must be at least 512")
    if n_points % 2:
        raise ValueError("n_points must be even (Richardson halving)")
    if n_levels >= n_points // 4:
        raise ValueError("n_levels too large for the coarse grid")
    fine = _fd_eigenvalues(params, n_points, n_levels)
    coarse = _fd_eigenvalues(params, n_points // 2, n_levels)
    return (4.0 * fine - coarse) / 3.0


def fd_noise_floor(params: RotorParams, n_points: int) -> float:
    """Absolute round-off scale of the oracle's eigenvalues (meV).

    Eigenvalues are only defined up to ~eps * ||H||; the stencil norm
    grows like 4F/h^2, so near-zero levels (free-rotor ground state)
    must be compared with this floor rather than relatively.
    """
    h = 2.0 * np.pi / n_points
    return 256.0 * np.finfo(float).eps * (4.0 * params.f_const / h**2 + params.v0)


def spectrum_to_json_dict(spectrum: RotorSpectrum) -> dict:
    """JSON-ready view: params, classified levels, splittings in GHz."""
    return {
        "params": {
            "f_const_mev": spectrum.params.f_const,
            "v0_mev": spectrum.params.v0,
            "l_max": spectrum.params.l_max,
        },
        "levels": [
            {
                "energy_mev": lv.energy,
                "symmetry": lv.symmetry.value,
                "band": lv.band,
                "fourier_abs2_by_residue": lv.residue_weights(),
            }
            for lv in spectrum.levels
        ],
        "splittings_ghz": {str(n): d * GHZ_PER_MEV for n, d in sorted(spectrum.splittings.items())},
    }
