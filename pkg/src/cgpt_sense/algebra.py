"""Exact transformation laws of CGPTs under translation, rotation and scaling.

With ``w = s e^{i theta}`` and the complex CGPTs ``N1, N2`` the motion
``x -> z + s R(theta) x`` acts by

    N1 -> C^z G^w N1 G^w (C^z)^T
    N2 -> conj(C^z G^w) N2 G^w (C^z)^T

where ``C^z[m, n] = binom(m, n) z^(m - n)`` (lower triangular) and
``G^w = diag(w^m)``.  Because ``C^z`` is triangular and ``G^w`` diagonal
the laws are exact for truncated matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .cgpt import K_MAX, CgptMatrix, ComplexCgpt, from_complex, to_complex
from .geometry import RigidMotion

__all__ = [
    "TransferMatrices",
    "binomial_table",
    "translation_matrix",
    "dilation_matrix",
    "translate_cgpt",
    "translate_cgpt_blockwise",
    "rotate_cgpt",
    "scale_cgpt",
    "transform_complex",
    "transform_cgpt",
]


def binomial_table(K: int) -> np.ndarray:
    """``B[m-1, n-1] = binom(m, n)`` for 1 <= m, n <= K, exact integers."""
    if not 1 <= K <= K_MAX:
        raise ValueError(f"order must be in 1..{K_MAX}")
    return np.array([[comb(m, n) for n in range(1, K + 1)] for m in range(1, K + 1)], dtype=np.int64)


def _as_complex(z) -> complex:
    if np.isscalar(z):
        return complex(z)
    x, y = z
    return complex(x, y)


def translation_matrix(z, K: int) -> np.ndarray:
    z = _as_complex(z)
    B = binomial_table(K).astype(complex)
    m = np.arange(1, K + 1)
    expo = m[:, None] - m[None, :]
    # z**0 must be 1 even for z == 0; 0**negative never used (masked by B == 0)
    powers = np.where(expo >= 0, z ** np.maximum(expo, 0), 0.0)
    return B * powers


def dilation_matrix(s: float, theta: float, K: int) -> np.ndarray:
    m = np.arange(1, K + 1)
    return np.diag((s * np.exp(1j * theta)) ** m)


@dataclass(frozen=True)
class TransferMatrices:
    Cz: np.ndarray
    Gw: np.ndarray

    @classmethod
    def for_motion(cls, motion: RigidMotion, K: int) -> "TransferMatrices":
        return cls(translation_matrix(motion.z_complex, K), dilation_matrix(motion.s, motion.theta, K))


def transform_complex(N: ComplexCgpt, motion: RigidMotion) -> ComplexCgpt:
    """Complex CGPTs of the target moved by ``motion``."""
    if motion.is_identity():
        return N
    T = TransferMatrices.for_motion(motion, N.order)
    A = T.Cz @ T.Gw
    right = T.Gw @ T.Cz.T
    return ComplexCgpt(A @ N.N1 @ right, np.conj(A) @ N.N2 @ right)


def transform_cgpt(M: CgptMatrix, motion: RigidMotion) -> CgptMatrix:
    if motion.is_identity():
        return M
    return from_complex(transform_complex(to_complex(M), motion))


def translate_cgpt(M: CgptMatrix, z) -> CgptMatrix:
    z = _as_complex(z)
    if z == 0:
        return M
    return transform_cgpt(M, RigidMotion(z=(z.real, z.imag)))


def scale_cgpt(M: CgptMatrix, s: float) -> CgptMatrix:
    if not s > 0:
        raise ValueError("scale must be positive")
    m = np.arange(1, M.order + 1)
    f = float(s) ** (m[:, None] + m[None, :])
    return CgptMatrix(f * M.cc, f * M.cs, f * M.sc, f * M.ss)


def _rot(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def _block(M: CgptMatrix, m: int, n: int) -> np.ndarray:
    # rows follow the harmonic index n, columns the moment index m
    i, j = m - 1, n - 1
    return np.array([[M.cc[i, j], M.sc[i, j]], [M.cs[i, j], M.ss[i, j]]])


def _from_blocks(blocks: dict, K: int) -> CgptMatrix:
    cc, cs, sc, ss = (np.zeros((K, K)) for _ in range(4))
    for (m, n), b in blocks.items():
        i, j = m - 1, n - 1
        cc[i, j], sc[i, j] = b[0]
        cs[i, j], ss[i, j] = b[1]
    return CgptMatrix(cc, cs, sc, ss)


def rotate_cgpt(M: CgptMatrix, theta: float) -> CgptMatrix:
    K = M.order
    out = {}
    for m in range(1, K + 1):
        for n in range(1, K + 1):
            out[m, n] = _rot(n * theta) @ _block(M, m, n) @ _rot(m * theta).T
    return _from_blocks(out, K)


def translate_cgpt_blockwise(M: CgptMatrix, z) -> CgptMatrix:
    """Direct double-sum translation law on 2x2 blocks (reference implementation)."""
    z = _as_complex(z)
    rz, tz = abs(z), float(np.angle(z))
    K = M.order
    out = {}
    for m in range(1, K + 1):
        for n in range(1, K + 1):
            acc = np.zeros((2, 2))
            for k in range(1, m + 1):
                for r in range(1, n + 1):
                    coef = rz ** (m - k) * rz ** (n - r) * comb(m, k) * comb(n, r)
                    if coef == 0.0:
                        continue
                    acc += coef * _rot((n - r) * tz) @ _block(M, k, r) @ _rot((m - k) * tz).T
            out[m, n] = acc
    return _from_blocks(out, K)
