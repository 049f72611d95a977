"""Planar equilibrium configurations via multistart quasi-Newton descent.

The search runs in scaled units (lengths over the Coulomb length ell,
energies over e^2/(4 pi eps0 ell)) because SI crystal energies are ~1e-19 J
and quasi-Newton stopping tests with absolute floors stall there. Each
restart draws its own RNG stream from (seed, restart_index), so results are
reproducible regardless of execution order. Minima are deduplicated up to
rotation, reflection, and ion relabeling.

Note on "positive definite": with an isotropic trap every crystal has one
exact zero eigenvalue in the in-plane Hessian, the global-rotation mode.
Minima are therefore accepted as strict up to that symmetry mode, and
genuinely negative curvature is rejected.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize

from .core import CONST, characteristic_length
from .errors import ConvergenceError, DomainError
from .potential import planar_energy, planar_gradient, planar_hessian

STABLE = "stable"
METASTABLE = "metastable"

# relative energy agreement + geometric match distance for two minima to count
# as the same configuration
ENERGY_MATCH_RTOL = 1e-9
GEOMETRY_MATCH_TOL = 1e-3

RING_GAP_FACTOR = 0.25


@dataclass(frozen=True)
class EquilibriumResult:
    """One distinct planar equilibrium: positions (flat 3N, z = 0) and metrics."""

    positions: np.ndarray
    energy: float
    stability: str
    ring_configuration: tuple
    ring_ambiguous: bool
    r_max: float
    d_min: float
    n_found_duplicates: int
    grad_norm: float

    @property
    def n_ions(self):
        return len(self.positions) // 3

    @property
    def xy(self):
        return self.positions.reshape(-1, 3)[:, :2]

    @property
    def xy_flat(self):
        return self.xy.ravel().copy()


def _rotations(points, angle):
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return points @ rot.T


def align_configurations(reference, other, n_angles=96):
    """Match `other` onto `reference` over rotations, reflections, relabelings.

    Coarse scan over n_angles rotation angles times the two parities with
    optimal assignment at each, then iterated orthogonal-Procrustes polish
    against the best assignment. Returns (aligned points, permutation,
    rms distance); reference and other are (N, 2) arrays.
    """
    ref = np.asarray(reference, dtype=float)
    oth = np.asarray(other, dtype=float)
    if ref.shape != oth.shape:
        raise DomainError("configurations must have the same shape to align")

    best = (np.inf, None, None)
    flip = np.array([[1.0, 0.0], [0.0, -1.0]])
    for reflect in (False, True):
        base = oth @ flip if reflect else oth
        for angle in np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False):
            cand = _rotations(base, angle)
            cost = np.sum((ref[:, None, :] - cand[None, :, :]) ** 2, axis=-1)
            rows, cols = linear_sum_assignment(cost)
            rms = math.sqrt(cost[rows, cols].mean())
            if rms < best[0]:
                best = (rms, cand[cols].copy(), cols.copy())

    rms, aligned, perm = best
    for _ in range(10):
        # orthogonal Procrustes (reflections allowed, the trap has O(2) symmetry)
        u, _, vt = np.linalg.svd(aligned.T @ ref)
        rot = u @ vt
        aligned = aligned @ rot
        cost = np.sum((ref[:, None, :] - aligned[None, :, :]) ** 2, axis=-1)
        rows, cols = linear_sum_assignment(cost)
        new_rms = math.sqrt(cost[rows, cols].mean())
        aligned = aligned[cols]
        perm = perm[cols]
        if new_rms >= rms * (1.0 - 1e-12):
            rms = min(rms, new_rms)
            break
        rms = new_rms
    return aligned, perm, rms


def ring_configuration(xy, ell=None):
    """Shell counts from innermost outward, plus an ambiguity flag.

    Shells split where consecutive sorted centroid distances jump by more
    than RING_GAP_FACTOR*ell. If any resulting shell is itself wider than
    that gap the clustering is ambiguous and a single shell [N] is
    returned flagged.
    """
    pts = np.asarray(xy, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 1:
        return (1,), False
    if ell is None:
        radii_sorted = np.sort(np.linalg.norm(pts - pts.mean(axis=0), axis=1))
        ell = max(radii_sorted[-1], 1e-30)
    gap = RING_GAP_FACTOR * ell
    radii = np.sort(np.linalg.norm(pts - pts.mean(axis=0), axis=1))
    breaks = np.where(np.diff(radii) > gap)[0]
    counts = []
    start = 0
    for b in breaks:
        counts.append(int(b) + 1 - start)
        start = int(b) + 1
    counts.append(n - start)
    # a shell wider than the gap criterion means the split is not trustworthy
    start = 0
    for c in counts:
        if radii[start + c - 1] - radii[start] > gap:
            return (n,), True
        start += c
    return tuple(counts), False


def crystal_metrics(xy):
    """(r_max from the centroid, minimum pair spacing) of a planar crystal."""
    pts = np.asarray(xy, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise DomainError("d_min needs at least two ions")
    r_max = float(np.linalg.norm(pts - pts.mean(axis=0), axis=1).max())
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    np.fill_diagonal(r, np.inf)
    return r_max, float(r.min())


def _polish_newton(x, trap, species, ell, grad_tol, max_iter=60):
    """Guarded Newton refinement of a near-converged minimum."""
    step_cap = 0.1 * ell
    g = planar_gradient(x, trap, species)
    for _ in range(max_iter):
        gnorm = np.linalg.norm(g)
        if gnorm < grad_tol:
            break
        h = planar_hessian(x, trap, species)
        # pseudo-inverse on the well-conditioned subspace; the global
        # rotation direction has a noisy near-zero eigenvalue and a raw
        # solve would step wildly along it
        w, v = np.linalg.eigh(h)
        keep = w > 1e-8 * w[-1]
        step = -(v[:, keep] @ ((v[:, keep].T @ g) / w[keep]))
        norm = np.linalg.norm(step)
        if norm > step_cap:
            step *= step_cap / norm
        scale = 1.0
        for _ in range(12):
            trial = x + scale * step
            g_trial = planar_gradient(trial, trap, species)
            if np.linalg.norm(g_trial) < gnorm:
                x, g = trial, g_trial
                break
            scale *= 0.5
        else:
            break
    return x, np.linalg.norm(g)


def _one_restart(n_ions, trap, species, seed, index, ell, echar, fchar, grad_tol):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    radius = 1.5 * ell * math.sqrt(n_ions)
    # uniform in a disc of that radius
    r = radius * np.sqrt(rng.random(n_ions))
    phi = 2.0 * math.pi * rng.random(n_ions)
    x0 = np.column_stack([r * np.cos(phi), r * np.sin(phi)]).ravel()

    fun = lambda y: planar_energy(y * ell, trap, species) / echar
    jac = lambda y: planar_gradient(y * ell, trap, species) / fchar
    res = minimize(
        fun,
        x0 / ell,
        jac=jac,
        method="L-BFGS-B",
        options=dict(maxiter=20000, ftol=1e-14, gtol=1e-7),
    )
    x, gnorm = _polish_newton(res.x * ell, trap, species, ell, grad_tol)
    if gnorm >= grad_tol:
        return None
    # reject saddles; one near-zero eigenvalue (global rotation) is expected
    eigs = np.linalg.eigvalsh(planar_hessian(x, trap, species))
    if eigs.min() < -1e-6 * species.mass * trap.omega_r**2:
        return None
    return x, planar_energy(x, trap, species)


def find_equilibria(n_ions, trap, species, n_restarts=50, seed=0, threads=None):
    """All distinct planar equilibria found over n_restarts random starts.

    Returns EquilibriumResults sorted by energy; the first is labeled
    stable, the rest metastable. Raises ConvergenceError if no restart
    converges.
    """
    if n_ions < 1 or n_restarts < 1:
        raise DomainError("need n_ions >= 1 and n_restarts >= 1")
    ell = characteristic_length(species, trap.omega_r)
    echar = CONST.coulomb_coefficient / ell
    fchar = CONST.coulomb_coefficient / ell**2
    grad_tol = 1e-8 * fchar

    args = [
        (n_ions, trap, species, seed, k, ell, echar, fchar, grad_tol)
        for k in range(n_restarts)
    ]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(lambda a: _one_restart(*a), args))
    else:
        raw = [_one_restart(*a) for a in args]

    found = []  # list of [x, energy, count]
    for item in raw:
        if item is None:
            continue
        x, e = item
        matched = False
        # floor the relative comparison so exact-zero energies (N = 1) match
        e_scale = max(abs(e), 1e-6 * echar)
        for entry in found:
            if abs(e - entry[1]) > ENERGY_MATCH_RTOL * max(e_scale, abs(entry[1])):
                continue
            _, _, rms = align_configurations(entry[0].reshape(-1, 2), x.reshape(-1, 2))
            if rms < GEOMETRY_MATCH_TOL * ell:
                entry[2] += 1
                matched = True
                break
        if not matched:
            found.append([x, e, 1])
    if not found:
        raise ConvergenceError(f"no converged minimum in {n_restarts} restarts")

    found.sort(key=lambda entry: entry[1])
    results = []
    for rank, (x, e, count) in enumerate(found):
        pts = x.reshape(-1, 2)
        rings, ambiguous = ring_configuration(pts, ell)
        if n_ions >= 2:
            r_max, d_min = crystal_metrics(pts)
        else:
            r_max, d_min = 0.0, math.nan
        coords = np.zeros(3 * n_ions)
        coords[0::3] = pts[:, 0]
        coords[1::3] = pts[:, 1]
        results.append(
            EquilibriumResult(
                positions=coords,
                energy=float(e),
                stability=STABLE if rank == 0 else METASTABLE,
                ring_configuration=rings,
                ring_ambiguous=ambiguous,
                r_max=r_max,
                d_min=d_min,
                n_found_duplicates=count,
                grad_norm=float(
                    np.linalg.norm(planar_gradient(x, trap, species))
                ),
            )
        )
    return results
