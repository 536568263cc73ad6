"""Descriptors invariant under translation, rotation and scaling.

The target is first re-centred at ``u = N2[0, 1] / (2 N2[0, 0])``, which moves
like a point under rigid motions, so the re-centred complex CGPTs ``J1, J2``
only see rotation and scaling.  Dividing by ``sqrt(J2[m, m] J2[n, n])``
removes the scale and the moduli remove the rotation phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import translation_matrix
from .cgpt import CgptMatrix, ComplexCgpt, to_complex

__all__ = [
    "DegenerateTargetError",
    "DescriptorPair",
    "reduction_point",
    "translation_reduce",
    "shape_descriptors",
    "descriptors_from_cgpt",
    "descriptor_distance",
]

DEFAULT_ORDER = 2


class DegenerateTargetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DescriptorPair:
    I1: np.ndarray
    I2: np.ndarray
    u: complex = 0j

    def __post_init__(self):
        I1 = np.array(self.I1, dtype=float)
        I2 = np.array(self.I2, dtype=float)
        if I1.shape != I2.shape or I1.ndim != 2 or I1.shape[0] != I1.shape[1]:
            raise ValueError("descriptor matrices must be equal square matrices")
        if not (np.all(np.isfinite(I1)) and np.all(np.isfinite(I2))):
            raise FloatingPointError("non-finite descriptors")
        if (I1 < 0).any() or (I2 < 0).any():
            raise ValueError("descriptors are moduli and cannot be negative")
        I1.setflags(write=False)
        I2.setflags(write=False)
        object.__setattr__(self, "I1", I1)
        object.__setattr__(self, "I2", I2)
        object.__setattr__(self, "u", complex(self.u))

    @property
    def order(self) -> int:
        return self.I1.shape[0]

    def truncated(self, order: int) -> "DescriptorPair":
        if order > self.order:
            raise ValueError(f"cannot truncate order {self.order} descriptors to {order}")
        return DescriptorPair(self.I1[:order, :order], self.I2[:order, :order], self.u)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "I1": self.I1.tolist(),
            "I2": self.I2.tolist(),
            "u": [self.u.real, self.u.imag],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DescriptorPair":
        u = data.get("u", [0.0, 0.0])
        out = cls(data["I1"], data["I2"], complex(u[0], u[1]))
        if "order" in data and int(data["order"]) != out.order:
            raise ValueError("descriptor order field does not match matrix size")
        return out


def reduction_point(N: ComplexCgpt) -> complex:
    if N.order < 2:
        raise ValueError("reduction point needs CGPTs of order >= 2")
    n11 = N.N2[0, 0]
    if abs(n11) <= 1e-12 * max(np.linalg.norm(N.N2), 1e-300):
        raise DegenerateTargetError("degenerate target (no first-order response)")
    return complex(N.N2[0, 1] / (2.0 * n11))


def translation_reduce(N: ComplexCgpt, u: complex):
    """``(J1, J2)``: complex CGPTs of the target translated by ``-u``."""
    if u == 0:
        return N.N1.copy(), N.N2.copy()
    C = translation_matrix(-complex(u), N.order)
    return C @ N.N1 @ C.T, np.conj(C) @ N.N2 @ C.T


def shape_descriptors(J1: np.ndarray, J2: np.ndarray, u: complex = 0j) -> DescriptorPair:
    d = np.diag(J2)
    bad = np.flatnonzero(np.abs(d) <= 1e-14 * max(np.abs(J2).max(), 1e-300))
    if bad.size:
        raise DegenerateTargetError(f"descriptor undefined at order {bad[0] + 1}")
    # principal branch; only the modulus survives
    root = np.sqrt(d.astype(complex))
    norm = root[:, None] * root[None, :]
    return DescriptorPair(np.abs(J1 / norm), np.abs(J2 / norm), u)


def descriptors_from_cgpt(M: CgptMatrix, order: int = DEFAULT_ORDER) -> DescriptorPair:
    """Full pipeline CGPT -> (u, J1, J2) -> (I1, I2) truncated at ``order``.

    The reduction uses order-``max(order, 2)`` CGPTs; the translation law is
    exact under truncation so extra orders would not change the result.
    """
    if order > M.order:
        raise ValueError(f"descriptor order {order} exceeds CGPT order {M.order}")
    N = to_complex(M.truncated(max(order, 2)))
    u = reduction_point(N)
    J1, J2 = translation_reduce(N, u)
    return shape_descriptors(J1[:order, :order], J2[:order, :order], u)


def descriptor_distance(a: DescriptorPair, b: DescriptorPair) -> float:
    """``sqrt(|I1a - I1b|_F^2 + |I2a - I2b|_F^2)``."""
    if a.order != b.order:
        raise ValueError(f"descriptor orders differ ({a.order} vs {b.order})")
    return float(np.sqrt(np.sum((a.I1 - b.I1) ** 2) + np.sum((a.I2 - b.I2) ** 2)))
