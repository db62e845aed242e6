"""Sample-covariance eigendecomposition and the PCA/MUSIC/DTFT estimators.

The three estimators share one geometric fact: for a candidate basis V the
data energy splits as |Y|^2 = |V A0|^2 + |H0|^2 with A0 the least-squares
amplitudes and H0 the residual.  projection_stats packages that split, plus
the signal/noise degree counts, for the Bayesian order scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arraysim import steering_matrix

__all__ = [
    "EigenBasis",
    "SpectrumCurve",
    "ProjectionStats",
    "sample_covariance",
    "eigendecompose",
    "pca_basis",
    "dtft_spectrum",
    "music_pseudospectrum",
    "pick_peaks",
    "projection_stats",
]

# residual-energy floor, relative to |Y|^2: keeps q > 0 for noiseless inputs
T_CLAMP_REL = 1e-12


@dataclass(frozen=True)
class EigenBasis:
    """Unitary eigenvectors (columns) and descending nonnegative eigenvalues."""

    eigvecs: np.ndarray
    eigvals: np.ndarray


@dataclass(frozen=True)
class SpectrumCurve:
    """Nonnegative spectrum values on an ascending angle grid (degrees)."""

    grid_deg: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.grid_deg) != len(self.values):
            raise ValueError("grid and values must have equal length")

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("angle_deg,value\n")
            for a, v in zip(self.grid_deg, self.values):
                fh.write(f"{a:.6f},{v!r}\n")


@dataclass(frozen=True)
class ProjectionStats:
    """Energy split of Y on a K-dimensional basis plus degree counts.

    s = |V A0|^2, t = |H0|^2 (clamped away from zero), alpha = K*M,
    beta = (D-K)*M.  q is stored as t/(s+t) and p as 1-q so p + q == 1.
    """

    s: float
    t: float
    alpha: int
    beta: int
    p: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        q = self.t / (self.s + self.t)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", 1.0 - q)


def sample_covariance(freq_or_y):
    """Hermitian sample covariance Y Y^H (symmetrized)."""
    y = getattr(freq_or_y, "y", freq_or_y)
    r = y @ y.conj().T
    return (r + r.conj().T) / 2.0


def eigendecompose(cov):
    """Descending eigenpairs of a Hermitian PSD matrix.

    Negative round-off eigenvalues are clamped to zero; each eigenvector is
    rotated so its first significantly nonzero component is real positive,
    which pins the arbitrary phase for reproducible fixtures.
    """
    cov = np.asarray(cov)
    herm_err = np.max(np.abs(cov - cov.conj().T))
    scale = max(np.max(np.abs(cov)), 1.0)
    if herm_err > 1e-6 * scale:
        raise ValueError(f"matrix is not Hermitian (max asymmetry {herm_err:.3g})")
    vals, vecs = np.linalg.eigh(cov)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    vals[vals < 0] = 0.0
    absvecs = np.abs(vecs)
    for j in range(vecs.shape[1]):
        col_max = absvecs[:, j].max()
        idx = np.argmax(absvecs[:, j] > 1e-12 * col_max)
        pivot = vecs[idx, j]
        if abs(pivot) > 0:
            vecs[:, j] *= np.conj(pivot) / abs(pivot)
    return EigenBasis(eigvecs=vecs, eigvals=vals)


def pca_basis(basis: EigenBasis, k):
    """First k eigenvectors (unit columns; scale by sqrt(D) for radius-D use)."""
    return basis.eigvecs[:, :k]


def dtft_spectrum(freq_or_y, grid_deg):
    """Power spectrum |v(pi*cos(phi))^H Y|^2 over the angle grid."""
    y = getattr(freq_or_y, "y", freq_or_y)
    d = y.shape[0]
    vg = steering_matrix(np.asarray(grid_deg, dtype=float), d)
    vals = np.sum(np.abs(vg.conj().T @ y) ** 2, axis=1)
    return SpectrumCurve(grid_deg=np.asarray(grid_deg, dtype=float), values=vals)


def music_pseudospectrum(basis: EigenBasis, k_sub, grid_deg):
    """Reciprocal noise-subspace projection 1 / |Q_noise^H v(phi)|^2."""
    d = basis.eigvecs.shape[0]
    if not 0 < k_sub < d:
        raise ValueError(f"signal subspace size must lie in (0, {d}), got {k_sub}")
    noise = basis.eigvecs[:, k_sub:]
    vg = steering_matrix(np.asarray(grid_deg, dtype=float), d)
    denom = np.sum(np.abs(noise.conj().T @ vg) ** 2, axis=0)
    vals = 1.0 / np.maximum(denom, 1e-300)
    return SpectrumCurve(grid_deg=np.asarray(grid_deg, dtype=float), values=vals)


def pick_peaks(curve: SpectrumCurve, count):
    """Local maxima of the curve, height-descending, ties toward smaller angle.

    Interior points must strictly exceed both neighbors; boundary points get a
    one-sided test.  Returns up to `count` (angle, height) pairs, fewer when
    the curve has fewer maxima.
    """
    v = np.asarray(curve.values, dtype=float)
    if v.size == 0:
        raise ValueError("empty spectrum curve")
    if v.size == 1:
        idx = np.array([0])
    else:
        is_peak = np.zeros(v.size, dtype=bool)
        is_peak[1:-1] = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])
        is_peak[0] = v[0] > v[1]
        is_peak[-1] = v[-1] > v[-2]
        idx = np.nonzero(is_peak)[0]
    if idx.size == 0:
        return []
    # stable sort on -height keeps the smaller-angle peak first on ties
    order = np.argsort(-v[idx], kind="stable")
    idx = idx[order][:count]
    return [(float(curve.grid_deg[i]), float(v[i])) for i in idx]


def _name_dependent_columns(v):
    """Most mutually coherent column pair, for the rank-deficiency error."""
    norms = np.linalg.norm(v, axis=0)
    norms[norms == 0] = 1.0
    g = np.abs((v.conj().T @ v)) / np.outer(norms, norms)
    np.fill_diagonal(g, 0.0)
    i, j = np.unravel_index(np.argmax(g), g.shape)
    return min(i, j), max(i, j)


def projection_stats(freq_or_y, v, m):
    """Energy split of Y on basis V via an SVD least-squares fit.

    Never forms (V^H V)^-1; rank deficiency (smallest singular value below
    1e-10 of the largest) is an error naming the offending column pair.
    K = 0 is the pure-noise convention (s = 0, t = |Y|^2).
    """
    y = getattr(freq_or_y, "y", freq_or_y)
    d = y.shape[0]
    norm2_y = float(np.sum(np.abs(y) ** 2))
    k = 0 if v is None else v.shape[1]
    if k > d:
        raise ValueError(f"basis has more columns ({k}) than sensors ({d})")
    if k == 0:
        return ProjectionStats(s=0.0, t=norm2_y, alpha=0, beta=d * m)
    u, sv, _ = np.linalg.svd(v, full_matrices=False)
    if sv[-1] < 1e-10 * sv[0]:
        i, j = _name_dependent_columns(v)
        raise ValueError(
            f"basis is rank deficient: columns {i} and {j} are (near) parallel"
        )
    s = float(np.sum(np.abs(u.conj().T @ y) ** 2))
    t = max(norm2_y - s, T_CLAMP_REL * norm2_y)
    return ProjectionStats(s=s, t=t, alpha=k * m, beta=(d - k) * m)
