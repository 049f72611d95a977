"""2D-3D structural transition points and their scaling with N and waist.

The transition is located where the softest out-of-plane mode frequency
crosses zero while the in-plane equilibrium is held fixed and the optical
depth (hence the aspect ratio alpha = omega_z / omega_r) is scanned. The
z block is linear in the depth, so the scan only rebuilds a diagonal:
K(alpha) = A/m + diag(U(alpha) c_i / m - omega_z_dc^2) with A the Coulomb
z block and c_i the per-ion lattice curvature per unit depth.

In the uniform-waist limit (c_i identical) the root has a closed form,
alpha_tr = sqrt(max eig(-A/m)) / omega_r, kept here as a cross-check.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import ANTINODE_COS2, depth_for_aspect
from .equilibrium import find_equilibria
from .errors import BracketError, FitError
from .potential import coulomb_z_block, optical_z_curvature

BRACKET_START = 0.5
BRACKET_GROW = 1.5
BRACKET_MAX = 10.0
ALPHA_REL_TOL = 1e-4


@dataclass(frozen=True)
class TransitionPoint:
    n_ions: int
    alpha_tr: float
    stability: str
    w0_over_rmax: float


@dataclass(frozen=True)
class PowerLawFit:
    prefactor: float
    exponent: float
    residual: float  # RMS in log space


def _softest_z_eig(a_over_m, curv_per_depth, trap, species, alpha):
    depth = depth_for_aspect(trap, species, alpha)
    diag = depth * curv_per_depth / species.mass - trap.omega_z_dc**2
    return np.linalg.eigvalsh(a_over_m + np.diag(diag))[0]


def find_alpha_tr(eq, trap, species, rel_tol=ALPHA_REL_TOL):
    """Transition aspect ratio of one configuration by bracketed bisection."""
    xy = eq.xy
    if len(xy) == 1:
        return TransitionPoint(1, 0.0, eq.stability, math.inf)
    a_over_m = coulomb_z_block(xy) / species.mass
    curv = optical_z_curvature(xy, trap.optical)
    f = lambda alpha: _softest_z_eig(a_over_m, curv, trap, species, alpha)

    lo = hi = BRACKET_START
    if f(hi) < 0.0:
        while f(hi) < 0.0:
            lo = hi
            hi *= BRACKET_GROW
            if hi > BRACKET_MAX:
                raise BracketError(
                    f"no transition found for alpha in [0, {BRACKET_MAX}]"
                )
    else:
        while f(lo) > 0.0:
            hi = lo
            lo /= BRACKET_GROW
            if lo < 1e-6:
                raise BracketError("transition point below alpha = 1e-6")
    while (hi - lo) > rel_tol * (0.5 * (hi + lo)):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    r_max = float(np.linalg.norm(xy - xy.mean(axis=0), axis=1).max())
    return TransitionPoint(
        n_ions=len(xy),
        alpha_tr=alpha,
        stability=eq.stability,
        w0_over_rmax=trap.optical.waist / r_max if r_max > 0 else math.inf,
    )


def alpha_tr_uniform(eq, trap, species):
    """Closed-form transition point in the uniform-waist (large w0) limit."""
    xy = eq.xy if hasattr(eq, "xy") else np.asarray(eq, dtype=float).reshape(-1, 2)
    if len(xy) == 1:
        return 0.0
    a_over_m = coulomb_z_block(xy) / species.mass
    lam_max = np.linalg.eigvalsh(-a_over_m)[-1]
    return math.sqrt(lam_max) / trap.omega_r


def fit_power_law(points):
    """Least squares of ln(alpha_tr) on ln(N); returns PowerLawFit."""
    pts = [(n, a) for n, a in points]
    if len(pts) < 3:
        raise FitError("power-law fit needs at least 3 points")
    n = np.array([p[0] for p in pts], dtype=float)
    alpha = np.array([p[1] for p in pts], dtype=float)
    if np.any(n <= 0) or np.any(alpha <= 0):
        raise FitError("power-law fit needs positive N and alpha")
    design = np.column_stack([np.log(n), np.ones(len(n))])
    coef, *_ = np.linalg.lstsq(design, np.log(alpha), rcond=None)
    resid = design @ coef - np.log(alpha)
    return PowerLawFit(
        prefactor=float(np.exp(coef[1])),
        exponent=float(coef[0]),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def transition_scan(n_values, trap, species, n_restarts=12, seed=0, threads=None):
    """alpha_tr of the stable configuration for each N in n_values."""
    out = []
    for n in n_values:
        eqs = find_equilibria(n, trap, species, n_restarts=n_restarts, seed=seed,
                              threads=threads)
        out.append(find_alpha_tr(eqs[0], trap, species))
    return out


def waist_sweep(n_ions, trap, species, w0_values, n_restarts=12, seed=0):
    """alpha_tr versus waist; per-point failures are recorded, not raised.

    Returns a list of (w0, TransitionPoint or None, error message or None).
    For the node_sin2 lattice the planar equilibrium is waist independent
    (the plane is dark), so it is solved once and reused.
    """
    records = []
    shared_eq = None
    if trap.optical.lattice_variant != ANTINODE_COS2:
        shared_eq = find_equilibria(
            n_ions, trap, species, n_restarts=n_restarts, seed=seed
        )[0]
    for w0 in w0_values:
        trap_w = trap.with_waist(w0)
        try:
            eq = shared_eq
            if eq is None:
                eq = find_equilibria(
                    n_ions, trap_w, species, n_restarts=n_restarts, seed=seed
                )[0]
            records.append((w0, find_alpha_tr(eq, trap_w, species), None))
        except Exception as exc:  # per-point isolation by design
            records.append((w0, None, f"{type(exc).__name__}: {exc}"))
    return records
