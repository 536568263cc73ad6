"""Hot numeric kernels.

Every kernel exists twice: a vectorised numpy version (``*_np``) and a
loop version compiled with numba (``*_nb``).  The public name is bound to
the numba version unless JIT is disabled (see :mod:`cgpt_sense._jit`).
Both versions must agree to rounding; ``benchmarks/bench_kernels.py``
times them side by side.
"""

import numpy as np

from ._jit import HAVE_NUMBA, njit

__all__ = [
    "log_distance",
    "normal_dipole",
    "msr_forward",
    "msr_adjoint",
    "BACKEND",
]


# log|x_i - y_j|; entries with coincident points are set to 0.
def log_distance_np(tgt, src):
    dx = tgt[:, 0, None] - src[None, :, 0]
    dy = tgt[:, 1, None] - src[None, :, 1]
    r2 = dx * dx + dy * dy
    out = np.zeros_like(r2)
    np.log(r2, out=out, where=r2 > 0.0)
    out *= 0.5
    return out


@njit(fastmath=False)
def log_distance_nb(tgt, src):
    nt = tgt.shape[0]
    ns = src.shape[0]
    out = np.empty((nt, ns))
    for i in range(nt):
        xi = tgt[i, 0]
        yi = tgt[i, 1]
        for j in range(ns):
            dx = xi - src[j, 0]
            dy = yi - src[j, 1]
            r2 = dx * dx + dy * dy
            out[i, j] = 0.5 * np.log(r2) if r2 > 0.0 else 0.0
    return out


# <x_i - y_j, n_i> / |x_i - y_j|^2; coincident entries set to 0.
def normal_dipole_np(tgt, tgt_normals, src):
    dx = tgt[:, 0, None] - src[None, :, 0]
    dy = tgt[:, 1, None] - src[None, :, 1]
    r2 = dx * dx + dy * dy
    num = dx * tgt_normals[:, 0, None] + dy * tgt_normals[:, 1, None]
    out = np.zeros_like(r2)
    np.divide(num, r2, out=out, where=r2 > 0.0)
    return out


@njit(fastmath=False)
def normal_dipole_nb(tgt, tgt_normals, src):
    nt = tgt.shape[0]
    ns = src.shape[0]
    out = np.empty((nt, ns))
    for i in range(nt):
        xi = tgt[i, 0]
        yi = tgt[i, 1]
        nx = tgt_normals[i, 0]
        ny = tgt_normals[i, 1]
        for j in range(ns):
            dx = xi - src[j, 0]
            dy = yi - src[j, 1]
            r2 = dx * dx + dy * dy
            out[i, j] = (dx * nx + dy * ny) / r2 if r2 > 0.0 else 0.0
    return out


# out[p, r] = sum_k G[p, r, k] * V[p, k]
def msr_forward_np(G, V):
    return np.einsum("prk,pk->pr", G, V, optimize=True)


@njit(fastmath=False)
def msr_forward_nb(G, V):
    npos, nrec, nk = G.shape
    out = np.zeros((npos, nrec))
    for p in range(npos):
        for r in range(nrec):
            acc = 0.0
            for k in range(nk):
                acc += G[p, r, k] * V[p, k]
            out[p, r] = acc
    return out


# out[p, k] = sum_r G[p, r, k] * B[p, r]
def msr_adjoint_np(G, B):
    return np.einsum("prk,pr->pk", G, B, optimize=True)


@njit(fastmath=False)
def msr_adjoint_nb(G, B):
    npos, nrec, nk = G.shape
    out = np.zeros((npos, nk))
    for p in range(npos):
        for r in range(nrec):
            b = B[p, r]
            for k in range(nk):
                out[p, k] += G[p, r, k] * b
    return out


if HAVE_NUMBA:
    BACKEND = "numba"
    log_distance = log_distance_nb
    normal_dipole = normal_dipole_nb
    msr_forward = msr_forward_nb
    msr_adjoint = msr_adjoint_nb
else:
    BACKEND = "numpy"
    log_distance = log_distance_np
    normal_dipole = normal_dipole_np
    msr_forward = msr_forward_np
    msr_adjoint = msr_adjoint_np
