"""Potential kernel of the planar simple random walk.

``a`` vanishes at the origin, is discrete-harmonic on Z^2 minus the origin and
grows like ``(2/pi) ln|z| + (2 gamma + ln 8) / pi``. Natural logarithms are used
for the asymptotic constants; this is the normalisation in which ``a(1,0) = 1``.
"""
from functools import lru_cache
import math

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_reps, check_seed
from .stats import Estimate, binomial_estimate
from .walk import derive_stream, exit_ball, hit_point, run_until

LOG_COEF = 2.0 / math.pi
OFFSET = (2.0 * np.euler_gamma + math.log(8.0)) / math.pi


def asymptotic_kernel(z):
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    r = np.hypot(z[:, 0], z[:, 1])
    with np.errstate(divide="ignore"):
        out = LOG_COEF * np.log(r) + OFFSET
    out[r == 0] = 0.0
    return out


class PotentialKernel(BaseEstimator):
    """Numerical potential kernel on a disk.

    The harmonic system is solved for every lattice point strictly inside the
    disk of radius ``solve_radius`` (origin pinned to 0), with asymptotic values
    imposed on the lattice points just outside. The linear system is the
    Dirichlet Laplacian, solved by conjugate gradients.

    Parameters
    ----------
    solve_radius : int, default=128
    tol : float, default=1e-13
        Relative residual for the conjugate-gradient solve.

    Attributes
    ----------
    values_ : ndarray of shape (2R+3, 2R+3)
        Kernel on ``[-R-1, R+1]^2`` (exterior cells hold the boundary data).
    residual_ : float
        Max over interior non-origin points of ``|a(z) - mean of neighbours|``.
    """

    def __init__(self, solve_radius=128, tol=1e-13):
        self.solve_radius = solve_radius
        self.tol = tol

    def fit(self, X=None, y=None):
        R = check_positive_int(self.solve_radius, "solve_radius")
        if R < 2:
            raise ValueError("solve_radius must be >= 2")
        off = R + 1
        coords = np.arange(-off, off + 1)
        gx, gy = np.meshgrid(coords, coords, indexing="ij")
        r2 = gx * gx + gy * gy
        interior = r2 < R * R
        interior[off, off] = False
        values = asymptotic_kernel(np.column_stack([gx.ravel(), gy.ravel()])).reshape(gx.shape)
        values[off, off] = 0.0
        values[interior] = 0.0

        idx = -np.ones(gx.shape, dtype=np.int64)
        ix, iy = np.nonzero(interior)
        idx[ix, iy] = np.arange(ix.size)
        rows, cols = [], []
        rhs = np.zeros(ix.size)
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jx, jy = ix + dx, iy + dy
            nb = idx[jx, jy]
            unknown = nb >= 0
            rows.append(np.flatnonzero(unknown))
            cols.append(nb[unknown])
            rhs[~unknown] += values[jx[~unknown], jy[~unknown]]
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        A = (4.0 * sparse.identity(ix.size, format="csr")
             - sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(ix.size, ix.size)))
        x0 = asymptotic_kernel(np.column_stack([gx[ix, iy], gy[ix, iy]]))
        sol, info = cg(A, rhs, x0=x0, rtol=self.tol, atol=0.0, maxiter=20 * ix.size)
        if info != 0:
            raise RuntimeError(f"conjugate gradients did not converge (info={info})")
        values[ix, iy] = sol

        nbr_mean = 0.25 * (values[ix + 1, iy] + values[ix - 1, iy] + values[ix, iy + 1] + values[ix, iy - 1])
        self.values_ = values
        self.residual_ = float(np.abs(values[ix, iy] - nbr_mean).max())
        self.offset_ = off
        return self

    def predict(self, X):
        """Kernel values at an ``(m, 2)`` array of lattice points."""
        check_is_fitted(self, "values_")
        z = np.asarray(X, dtype=np.int64).reshape(-1, 2)
        R = self.solve_radius
        if np.any(4 * (z * z).sum(axis=1) >= R * R):
            raise ValueError(f"points must satisfy |z| < solve_radius/2 = {R / 2}")
        return self.values_[z[:, 0] + self.offset_, z[:, 1] + self.offset_]


@lru_cache(maxsize=8)
def _fitted_kernel(solve_radius):
    return PotentialKernel(solve_radius=solve_radius).fit()


def potential_kernel(z, solve_radius=128):
    """``a(z)`` for one point of Z^2."""
    return float(_fitted_kernel(int(solve_radius)).predict([z])[0])


def hit_origin_before_exit(z, r, reps, master_seed, cap=None, stream_offset=0):
    """Monte Carlo of ``Pr_z[T_0 <= tau_r]`` plus the exit points of the other walks.

    The walk is translated so that it starts at the origin; the target then sits
    at ``-z`` and the ball is centred there.
    """
    reps = check_reps(reps)
    master_seed = check_seed(master_seed)
    z = tuple(int(c) for c in z)
    target = (-z[0], -z[1])
    cap = cap if cap is not None else 1000 * (int(r) + 1) ** 2
    stops = [hit_point(target), exit_ball(target, r)]
    hits = 0
    exits = []
    for i in range(reps):
        out = run_until(2, derive_stream(master_seed, stream_offset + i), stops, cap)
        if out.kind == "hit":
            hits += 1
        elif out.kind == "exit":
            p = out.terminal_point
            exits.append((p[0] - target[0], p[1] - target[1]))
        else:
            raise RuntimeError("walk neither hit nor exited before the cap")
    return binomial_estimate(hits, reps), np.array(exits, dtype=np.int64).reshape(-1, 2)


def optional_stopping_check(z=(4, 0), r=16, reps=20000, master_seed=0, solve_radius=128):
    """Compare ``Pr_z[T_0 <= tau_r]`` with ``1 - a(z) / E[a(S(tau_r)) | tau_r < T_0]``.

    Both sides come from the same replicas: the direct hit frequency, and the
    prediction from the potential kernel averaged over exit points. Returns
    ``(direct, predicted)`` estimates; the prediction's standard error is by the
    delta method.
    """
    direct, exits = hit_origin_before_exit(z, r, reps, master_seed)
    kernel = _fitted_kernel(int(solve_radius))
    a_z = float(kernel.predict([z])[0])
    a_exit = kernel.predict(exits)
    mean_exit = float(a_exit.mean())
    se_exit = float(a_exit.std(ddof=1) / math.sqrt(a_exit.size))
    pred = 1.0 - a_z / mean_exit
    pred_se = a_z * se_exit / mean_exit**2
    return direct, Estimate(pred, pred_se, int(a_exit.size))

