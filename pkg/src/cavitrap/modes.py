"""Normal modes of a planar crystal: spectrum, partition, and labels.

At a planar equilibrium the z block of the Hessian decouples exactly from
the xy block (mirror symmetry about the crystal plane), so the two are
diagonalized separately and reassembled into one 3N spectrum. Modes are
mass weighted; with a single species that is a uniform 1/m scaling, so
eigenvalues are omega^2 directly and eigenvectors stay orthonormal.

Out-of-plane modes get semantic labels by projecting onto the polynomial
basis {1, x, y, xy} evaluated at the ion positions: uniform motion is the
center-of-mass mode, linear patterns are the two tilts, and the bilinear
pattern is the saddle mode.
"""

from dataclasses import dataclass, replace

import numpy as np

from .equilibrium import EquilibriumResult
from .potential import coulomb_z_block, optical_z_curvature, planar_hessian

OUT_OF_PLANE = "out_of_plane"
IN_PLANE = "in_plane"

LABEL_COM = "com"
LABEL_TILT_X = "tilt_x"
LABEL_TILT_Y = "tilt_y"
LABEL_SADDLE = "saddle_xy"
LABEL_OTHER = "other"

DEGENERACY_RTOL = 1e-6
LABEL_OVERLAP_THRESHOLD = 0.5


@dataclass(frozen=True)
class ModeSpectrum:
    """3N normal modes, out-of-plane partition first, descending within each.

    omega_sq keeps the signed eigenvalues; omega holds magnitudes with the
    imaginary flags marking omega_sq < 0 (planar configuration past the
    2D-3D transition).
    """

    omega: np.ndarray        # rad/s magnitudes
    omega_sq: np.ndarray     # signed (rad/s)^2
    vectors: np.ndarray      # (3N, 3N), column m is mode m
    partition: tuple         # per-mode OUT_OF_PLANE / IN_PLANE
    imaginary: np.ndarray    # per-mode bool
    labels: tuple = None     # per-mode, filled by label_modes

    @property
    def n_modes(self):
        return len(self.omega)

    def select(self, which):
        """Indices of modes in the given partition."""
        return np.array([i for i, p in enumerate(self.partition) if p == which])

    def z_amplitudes(self, mode_index):
        """Per-ion z displacement pattern of an out-of-plane mode."""
        return self.vectors[2::3, mode_index]


def _xy_of(eq):
    if isinstance(eq, EquilibriumResult):
        return eq.xy
    return np.asarray(eq, dtype=float).reshape(-1, 2)


def normal_modes(eq, trap, species):
    """Eigendecomposition of the mass-weighted Hessian at a planar equilibrium."""
    xy = _xy_of(eq)
    n = len(xy)
    m = species.mass

    z_block = coulomb_z_block(xy) / m
    z_block += np.diag(
        trap.optical.depth * optical_z_curvature(xy, trap.optical) / m
        - trap.omega_z_dc**2
    )
    w2_z, vec_z = np.linalg.eigh(z_block)
    order = np.argsort(w2_z)[::-1]
    w2_z, vec_z = w2_z[order], vec_z[:, order]

    w2_xy, vec_xy = np.linalg.eigh(planar_hessian(xy.ravel(), trap, species) / m)
    order = np.argsort(w2_xy)[::-1]
    w2_xy, vec_xy = w2_xy[order], vec_xy[:, order]

    vectors = np.zeros((3 * n, 3 * n))
    vectors[2::3, :n] = vec_z
    vectors[0::3, n:] = vec_xy[0::2]
    vectors[1::3, n:] = vec_xy[1::2]
    omega_sq = np.concatenate([w2_z, w2_xy])
    return ModeSpectrum(
        omega=np.sqrt(np.abs(omega_sq)),
        omega_sq=omega_sq,
        vectors=vectors,
        partition=(OUT_OF_PLANE,) * n + (IN_PLANE,) * (2 * n),
        imaginary=omega_sq < 0.0,
    )


def out_of_plane_lowest(spectrum):
    """(magnitude, imaginary flag) of the softest out-of-plane mode."""
    idx = spectrum.select(OUT_OF_PLANE)
    softest = idx[np.argmin(spectrum.omega_sq[idx])]
    return spectrum.omega[softest], bool(spectrum.imaginary[softest])


def _label_basis(xy):
    """Orthonormal columns spanning {1, x, y, xy} at the ion positions."""
    x, y = xy[:, 0], xy[:, 1]
    raw = np.column_stack([np.ones(len(xy)), x, y, x * y])
    basis = np.empty_like(raw)
    for j in range(raw.shape[1]):
        v = raw[:, j].copy()
        for i in range(j):
            v -= (basis[:, i] @ v) * basis[:, i]
        basis[:, j] = v / np.linalg.norm(v)
    return basis


_BASIS_LABELS = (LABEL_COM, LABEL_TILT_X, LABEL_TILT_Y, LABEL_SADDLE)


def _complete_orthonormal(rows, dim):
    """Extend k orthonormal rows to a full (dim, dim) orthonormal matrix."""
    out = list(rows)
    for cand in np.eye(dim):
        if len(out) == dim:
            break
        v = cand.copy()
        for t in out:
            v -= (t @ v) * t
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            out.append(v / norm)
    return np.array(out)


def label_modes(spectrum, eq):
    """Attach COM/tilt/saddle labels to the out-of-plane modes.

    Degenerate groups (frequencies within DEGENERACY_RTOL) are rotated to
    the basis-overlap-maximizing orthogonal combination before labeling,
    since individual eigenvectors of a degenerate pair are arbitrary.
    Returns a new spectrum; in-plane modes keep label None.
    """
    xy = _xy_of(eq)
    basis = _label_basis(xy)
    z_idx = spectrum.select(OUT_OF_PLANE)
    vecs = spectrum.vectors.copy()

    groups = []
    for i in z_idx:
        if groups and abs(spectrum.omega[i] - spectrum.omega[groups[-1][-1]]) <= (
            DEGENERACY_RTOL * max(spectrum.omega[i], spectrum.omega[groups[-1][-1]])
        ):
            groups[-1].append(i)
        else:
            groups.append([i])

    labels = [None] * spectrum.n_modes
    for group in groups:
        sub = np.column_stack([vecs[2::3, i] for i in group])
        taken = []
        assigned = {}
        for b_col, name in zip(basis.T, _BASIS_LABELS):
            coeff = sub.T @ b_col
            for t in taken:
                coeff -= (t @ coeff) * t
            weight = coeff @ coeff
            if weight > LABEL_OVERLAP_THRESHOLD and len(taken) < len(group):
                coeff /= np.sqrt(weight)
                assigned[len(taken)] = name
                taken.append(coeff)
        if taken:
            rot = _complete_orthonormal(np.array(taken), len(group))
            new_sub = sub @ rot.T
            for slot, i in enumerate(group):
                vecs[2::3, i] = new_sub[:, slot]
                labels[i] = assigned.get(slot, LABEL_OTHER)
        else:
            for i in group:
                overlaps = (basis.T @ vecs[2::3, i]) ** 2
                j = int(np.argmax(overlaps))
                labels[i] = (
                    _BASIS_LABELS[j]
                    if overlaps[j] > LABEL_OVERLAP_THRESHOLD
                    else LABEL_OTHER
                )
    return replace(spectrum, vectors=vecs, labels=tuple(labels))


def amplitude_ratio(spectrum, mode_index):
    """min/max of per-ion |z| amplitudes of one out-of-plane mode."""
    amps = np.abs(spectrum.z_amplitudes(mode_index))
    return float(amps.min() / amps.max())
