"""Least-squares recovery of CGPTs from an MSR matrix.

The receptors ride with the fish, so each pose sees its own receiver
weights and the data are ``MSR[p, r] = G[p, r] . (M S[p])`` rather than a
fixed product ``S M G^T``.  The ``4 K^2`` unknowns are solved for
directly: the design matrix (rows ``outer(G[p, r], S[p])``) is reduced
once to its triangular factor by a blocked QR, and each data vector is
then handled with ``A^T b`` (computed without forming ``A``), the
semi-normal equations through the SVD of that factor, and one step of
iterative refinement.  Columns are equilibrated first since harmonic
orders differ by powers of the orbit radius.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .algebra import translate_cgpt
from .cgpt import K_MAX, CgptMatrix
from .sensing import AcquisitionConfig, MsrMatrix, pose_factors

__all__ = [
    "AcquisitionOperator",
    "ReconstructionDiagnostics",
    "build_acquisition",
    "reconstruct_cgpt",
    "per_order_error",
    "write_diagnostics_csv",
]

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10
_ROWS_PER_BLOCK = 32768


@dataclass(frozen=True, eq=False)
class AcquisitionOperator:
    """Linear map from the stacked CGPT (about ``center``) to MSR data."""

    S: np.ndarray  # (P, 2K) source harmonics per pose
    G: np.ndarray  # (P, R, 2K) receiver weights per pose and receptor
    center: tuple[float, float]
    order: int
    col_scale: np.ndarray
    Vt: np.ndarray
    sing: np.ndarray
    rank: int

    @property
    def shape(self):
        return self.G.shape[:2]

    @property
    def cond(self) -> float:
        return float(self.sing[0] / self.sing[self.rank - 1])

    def apply(self, big: np.ndarray) -> np.ndarray:
        """MSR of the stacked ``(2K, 2K)`` CGPT ``big``."""
        return kernels.msr_forward(self.G, self.S @ big.T)

    def adjoint(self, B: np.ndarray) -> np.ndarray:
        """``A^T vec(B)`` reshaped to ``(2K, 2K)``."""
        return kernels.msr_adjoint(self.G, np.ascontiguousarray(B)).T @ self.S

    def _solve_normal(self, rhs: np.ndarray) -> np.ndarray:
        # (D A^T A D) y = D rhs with A D = Q U diag(sing) Vt, truncated to rank
        k = self.rank
        y = self.Vt[:k].T @ ((self.Vt[:k] @ (self.col_scale * rhs.ravel())) / self.sing[:k] ** 2)
        return (self.col_scale * y).reshape(rhs.shape)

    def solve(self, B: np.ndarray) -> np.ndarray:
        x = self._solve_normal(self.adjoint(B))
        # one refinement step recovers the accuracy lost to the normal equations
        x = x + self._solve_normal(self.adjoint(B - self.apply(x)))
        return x


def _design_block(G, S, p0, p1):
    K2 = S.shape[1]
    blk = G[p0:p1, :, :, None] * S[p0:p1, None, None, :]
    return blk.reshape(-1, K2 * K2)


def build_acquisition(config: AcquisitionConfig, center=None, K: int = 5) -> AcquisitionOperator:
    """Factor the acquisition model at order ``K`` about ``center`` (default: config centre)."""
    if not 1 <= K <= K_MAX:
        raise ValueError(f"order must be in 1..{K_MAX}")
    if center is not None and tuple(map(float, center)) != config.target_center:
        config = config.with_(target_center=tuple(map(float, center)))
    S, G = pose_factors(config, K)
    P, R, K2 = G.shape
    n = K2 * K2
    if P * R < n:
        warnings.warn(f"{P * R} measurements for {n} unknowns; solution is not unique", RuntimeWarning)

    # column norms of the design matrix: sum_p |G_p[:, i]|^2 |S_p[j]|^2
    gn = np.einsum("prk,prk->pk", G, G)
    col = np.sqrt(np.einsum("pi,pj->ij", gn, S * S)).ravel()
    col_scale = np.where(col > 0, 1.0 / np.where(col > 0, col, 1.0), 1.0)

    step = max(1, _ROWS_PER_BLOCK // R)
    Rfac = np.zeros((0, n))
    for p0 in range(0, P, step):
        blk = _design_block(G, S, p0, min(P, p0 + step)) * col_scale[None, :]
        Rfac = np.linalg.qr(np.vstack([Rfac, blk]), mode="r")
    _, sing, Vt = np.linalg.svd(Rfac)
    if sing.size < n:
        sing = np.concatenate([sing, np.zeros(n - sing.size)])
        Vt = np.vstack([Vt, np.zeros((n - Vt.shape[0], n))])
    rank = int(np.sum(sing > RANK_RTOL * sing[0]))
    if rank < n:
        warnings.warn(
            f"acquisition operator is rank deficient ({rank} < {n}); using truncated SVD",
            RuntimeWarning,
        )
    log.debug("acquisition K=%d rank=%d cond=%.3e", K, rank, sing[0] / sing[rank - 1])
    return AcquisitionOperator(S, G, config.target_center, K, col_scale, Vt, sing, rank)


@dataclass(frozen=True)
class ReconstructionDiagnostics:
    rank: int
    n_unknowns: int
    cond: float
    residual: float
    truncated: bool
    per_order_error: tuple[float, ...] | None = None


def per_order_error(estimate: CgptMatrix, truth: CgptMatrix) -> tuple[float, ...]:
    """``|M - M_rec|_F / |M|_F`` over the leading ``k x k`` blocks, k = 1..K."""
    K = min(estimate.order, truth.order)
    out = []
    for k in range(1, K + 1):
        t = truth.truncated(k)
        out.append((estimate.truncated(k) - t).norm() / t.norm())
    return tuple(out)


def reconstruct_cgpt(msr: MsrMatrix | np.ndarray, op: AcquisitionOperator, truth: CgptMatrix | None = None):
    """Least-squares CGPT (about the origin) and diagnostics."""
    B = msr.values if isinstance(msr, MsrMatrix) else np.asarray(msr, dtype=float)
    if B.shape != op.shape:
        raise ValueError(f"MSR shape {B.shape} does not match operator {op.shape}")
    big = op.solve(B)
    res = float(np.linalg.norm(B - op.apply(big)) / max(np.linalg.norm(B), 1e-300))
    M = CgptMatrix.from_stacked(big)
    if op.center != (0.0, 0.0):
        M = translate_cgpt(M, op.center)
    diag = ReconstructionDiagnostics(
        rank=op.rank,
        n_unknowns=big.size,
        cond=op.cond,
        residual=res,
        truncated=op.rank < big.size,
        per_order_error=None if truth is None else per_order_error(M, truth),
    )
    return M, diag


def write_diagnostics_csv(path, rows) -> Path:
    """``rows``: iterable of ``(order, relative_error, sigma0, trials)``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["order", "relative_error", "sigma0", "trials"])
        for order, err, sigma, trials in rows:
            w.writerow([int(order), repr(float(err)), repr(float(sigma)), int(trials)])
    return path
