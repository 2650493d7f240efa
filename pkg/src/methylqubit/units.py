"""Unit constants. All internal energies are meV; conversions happen at I/O."""

GHZ_PER_MEV = 241.798935  # 1 meV / h
KB_MEV_PER_K = 0.08617333  # Boltzmann constant


def mev_to_ghz(energy_mev: float) -> float:
    return energy_mev * GHZ_PER_MEV


def ghz_to_mev(freq_ghz: float) -> float:
    return freq_ghz / GHZ_PER_MEV
