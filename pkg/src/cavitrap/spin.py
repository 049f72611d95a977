"""Phonon-mediated spin-spin couplings and their distance power law.

With spin-dependent forces at frequencies mu_n addressing a set of normal
modes, the effective Ising couplings are

    J_ij = E_recoil sum_n Omega_in Omega_jn sum_m b_im b_jm / (mu_n^2 - omega_m^2)

reported in rad/s (divided by hbar). Driving just above the highest
out-of-plane mode makes the center-of-mass term dominate, giving nearly
uniform positive (anti-ferromagnetic) couplings; far above all modes the
kernel flattens to the 1/r^3 Coulomb z-block tail, so the fitted power
law exponent beta sweeps the full range between 0 and 3.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import CONST
from .errors import DomainError, FitError, ResonanceError
from .modes import IN_PLANE, OUT_OF_PLANE
from .equilibrium import EquilibriumResult

RESONANCE_TOL_FACTOR = 1e-3

PARTITION_ALL = "all"


@dataclass(frozen=True)
class SpinDriveConfig:
    """SDF frequencies, Rabi matrix, recoil scale, and mode selection.

    rabi is (n_ions, n_drives) in rad/s; resonance_tolerance of None
    resolves to RESONANCE_TOL_FACTOR times the highest used mode
    frequency. axis picks the displacement component that couples to the
    drive (z for the out-of-plane geometry).
    """

    mu: tuple                      # rad/s, one per drive
    rabi: np.ndarray               # (n_ions, n_drives), rad/s
    recoil_energy: float           # J
    mode_partition: str = OUT_OF_PLANE
    axis: str = "z"
    resonance_tolerance: float = None

    def __post_init__(self):
        if self.recoil_energy < 0:
            raise DomainError("recoil energy must be nonnegative")
        if np.any(np.asarray(self.rabi) < 0):
            raise DomainError("Rabi frequencies must be nonnegative")
        if self.mode_partition not in (OUT_OF_PLANE, IN_PLANE, PARTITION_ALL):
            raise DomainError(f"unknown mode partition {self.mode_partition!r}")


@dataclass(frozen=True)
class SpinGraph:
    j: np.ndarray                  # (N, N) rad/s, symmetric, zero diagonal
    af_fraction: float             # fraction of pairs with J_ij > 0
    beta_fit: tuple = None         # (beta, residual) once fitted


def uniform_drive(n_ions, mu, rabi, recoil_energy, **kwargs):
    """Single SDF with the same Rabi frequency on every ion."""
    return SpinDriveConfig(
        mu=(float(mu),),
        rabi=np.full((n_ions, 1), float(rabi)),
        recoil_energy=recoil_energy,
        **kwargs,
    )


_AXIS_OFFSET = {"x": 0, "y": 1, "z": 2}


def _mode_selection(spectrum, drive):
    if drive.mode_partition == PARTITION_ALL:
        idx = np.arange(spectrum.n_modes)
    else:
        idx = spectrum.select(drive.mode_partition)
    if np.any(spectrum.imaginary[idx]):
        raise DomainError("selected mode partition contains imaginary modes")
    offset = _AXIS_OFFSET[drive.axis]
    patterns = spectrum.vectors[offset::3, :][:, idx]
    return spectrum.omega[idx], patterns, idx


def compute_jij(spectrum, eq, drive):
    """SpinGraph for the given drive over the selected mode partition."""
    omega, patterns, idx = _mode_selection(spectrum, drive)
    tol = drive.resonance_tolerance
    if tol is None:
        tol = RESONANCE_TOL_FACTOR * omega.max()
    rabi = np.atleast_2d(np.asarray(drive.rabi, dtype=float))
    n_ions = rabi.shape[0]

    j = np.zeros((n_ions, n_ions))
    for n, mu in enumerate(drive.mu):
        gaps = np.abs(mu - omega)
        if gaps.min() < tol:
            m = int(idx[np.argmin(gaps)])
            raise ResonanceError(
                f"drive {n} (mu = {mu:.6e} rad/s) within {tol:.3e} of mode {m}"
            )
        kernel = (patterns / (mu**2 - omega**2)) @ patterns.T
        j += np.outer(rabi[:, n], rabi[:, n]) * kernel
    j *= drive.recoil_energy / CONST.hbar
    j = 0.5 * (j + j.T)  # kill the last-ulp asymmetry of the matmul
    np.fill_diagonal(j, 0.0)

    iu = np.triu_indices(n_ions, 1)
    return SpinGraph(j=j, af_fraction=float(np.mean(j[iu] > 0.0)))


def fit_beta(graph, eq):
    """Power-law exponent of |J| versus pair distance, (beta, residual RMS)."""
    xy = eq.xy if isinstance(eq, EquilibriumResult) else np.asarray(eq).reshape(-1, 2)
    n = len(xy)
    iu = np.triu_indices(n, 1)
    r = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)[iu]
    j_abs = np.abs(graph.j[iu])
    if np.any(j_abs == 0.0):
        raise FitError("zero couplings, power-law fit undefined")
    if len(np.unique(np.round(np.log(r), 12))) < 3:
        raise FitError("need at least 3 distinct pair distances")
    design = np.column_stack([np.log(r), np.ones(len(r))])
    coef, *_ = np.linalg.lstsq(design, np.log(j_abs), rcond=None)
    resid = design @ coef - np.log(j_abs)
    return -float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def beta_sweep(spectrum, eq, mu_values, drive_template):
    """Fit beta at each drive frequency; resonant points are recorded, not fatal.

    Returns a list of dicts with keys mu, beta, residual, af_fraction,
    error (None on success).
    """
    records = []
    for mu in mu_values:
        drive = replace(drive_template, mu=(float(mu),))
        try:
            graph = compute_jij(spectrum, eq, drive)
            beta, resid = fit_beta(graph, eq)
            records.append(
                dict(mu=float(mu), beta=beta, residual=resid,
                     af_fraction=graph.af_fraction, error=None)
            )
        except (ResonanceError, FitError) as exc:
            records.append(
                dict(mu=float(mu), beta=math.nan, residual=math.nan,
                     af_fraction=math.nan, error=f"{type(exc).__name__}: {exc}")
            )
    return records
