"""Contracted generalized polarization tensors of piecewise-constant targets.

For a harmonic background ``h`` (``Re`` or ``Im`` of ``(x - c)^n``) the
transmission problem ``div(gamma grad u) = 0``, ``u - h = O(1/|x|)`` is
solved with the ansatz ``u = h + sum_j S_j[phi_j]`` over the interfaces
``j`` (one for a homogeneous target, two for a coated one).  Flux
continuity ``k_out du/dn|+ = k_in du/dn|-`` on interface ``a`` gives

    ((k_in + k_out)/2 I - (k_in - k_out) K*_a) phi_a
        - (k_in - k_out) sum_{b != a} dS_b/dn_a phi_b = (k_in - k_out) dh/dn

and the CGPT block entries are the harmonic moments of all densities,
e.g. ``M^cs_mn = sum_j int Re((x - c)^m) phi_j[Im (x - c)^n] ds``.

For a single interface this reduces to ``(lambda I - K*)^{-1}[dh/dn]`` with
``lambda = (k + 1) / (2 (k - 1))``; that route is implemented separately in
:func:`compute_cgpt_homogeneous` and used as a cross-check.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .boundary_ops import normal_derivative_coupling, np_adjoint, single_layer
from .geometry import ConductivityTarget, Curve

__all__ = [
    "CgptMatrix",
    "ComplexCgpt",
    "ContrastError",
    "TransmissionSolution",
    "solve_transmission",
    "compute_cgpt",
    "compute_cgpt_homogeneous",
    "cgpt_operator_route",
    "to_complex",
    "from_complex",
    "contrast_lambda",
]

log = logging.getLogger(__name__)

K_MAX = 16
COND_WARN = 1e10


class ContrastError(ValueError):
    """Conductivity equal (or numerically equal) to the background."""


@dataclass(frozen=True, eq=False)
class CgptMatrix:
    """Real CGPT blocks ``cc, cs, sc, ss``; entry ``[m-1, n-1]`` holds order ``(m, n)``."""

    cc: np.ndarray
    cs: np.ndarray
    sc: np.ndarray
    ss: np.ndarray

    def __post_init__(self):
        blocks = [np.array(b, dtype=float) for b in (self.cc, self.cs, self.sc, self.ss)]
        shape = blocks[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(b.shape != shape for b in blocks):
            raise ValueError("CGPT blocks must be equal square matrices")
        if not all(np.all(np.isfinite(b)) for b in blocks):
            raise FloatingPointError("non-finite CGPT entries")
        for name, b in zip(("cc", "cs", "sc", "ss"), blocks):
            b.setflags(write=False)
            object.__setattr__(self, name, b)

    @property
    def order(self) -> int:
        return self.cc.shape[0]

    @classmethod
    def zeros(cls, order: int) -> "CgptMatrix":
        z = np.zeros((order, order))
        return cls(z, z, z, z)

    def truncated(self, order: int) -> "CgptMatrix":
        if order > self.order:
            raise ValueError(f"cannot truncate order {self.order} CGPT to {order}")
        k = slice(0, order)
        return CgptMatrix(self.cc[k, k], self.cs[k, k], self.sc[k, k], self.ss[k, k])

    def stacked(self) -> np.ndarray:
        """``[[cc, cs], [sc, ss]]``: rows = moment (cos..., sin...), cols = harmonic."""
        return np.block([[self.cc, self.cs], [self.sc, self.ss]])

    @classmethod
    def from_stacked(cls, big) -> "CgptMatrix":
        big = np.asarray(big, dtype=float)
        K = big.shape[0] // 2
        return cls(big[:K, :K], big[:K, K:], big[K:, :K], big[K:, K:])

    def __add__(self, other: "CgptMatrix") -> "CgptMatrix":
        return CgptMatrix.from_stacked(self.stacked() + other.stacked())

    def __sub__(self, other: "CgptMatrix") -> "CgptMatrix":
        return CgptMatrix.from_stacked(self.stacked() - other.stacked())

    def __mul__(self, alpha: float) -> "CgptMatrix":
        return CgptMatrix.from_stacked(alpha * self.stacked())

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.stacked()))

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "cc": self.cc.tolist(),
            "cs": self.cs.tolist(),
            "sc": self.sc.tolist(),
            "ss": self.ss.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CgptMatrix":
        out = cls(data["cc"], data["cs"], data["sc"], data["ss"])
        if "order" in data and int(data["order"]) != out.order:
            raise ValueError("CGPT order field does not match block size")
        return out


@dataclass(frozen=True, eq=False)
class ComplexCgpt:
    N1: np.ndarray
    N2: np.ndarray

    @property
    def order(self) -> int:
        return self.N1.shape[0]

    def truncated(self, order: int) -> "ComplexCgpt":
        return ComplexCgpt(self.N1[:order, :order], self.N2[:order, :order])


def to_complex(M: CgptMatrix) -> ComplexCgpt:
    return ComplexCgpt(
        N1=(M.cc - M.ss) + 1j * (M.cs + M.sc),
        N2=(M.cc + M.ss) + 1j * (M.cs - M.sc),
    )


def from_complex(N: ComplexCgpt) -> CgptMatrix:
    return CgptMatrix(
        cc=0.5 * (N.N1.real + N.N2.real),
        cs=0.5 * (N.N1.imag + N.N2.imag),
        sc=0.5 * (N.N1.imag - N.N2.imag),
        ss=0.5 * (N.N2.real - N.N1.real),
    )


def contrast_lambda(k: float) -> float:
    """``(k + 1) / (2 (k - 1))``."""
    if abs(k - 1.0) < 1e-12:
        raise ContrastError("conductivity 1 has no contrast (lambda is infinite)")
    return (k + 1.0) / (2.0 * (k - 1.0))


def _check_order(K):
    if not 1 <= K <= K_MAX:
        raise ValueError(f"CGPT order must be in 1..{K_MAX}, got {K}")


def _harmonic_normal_derivatives(curve: Curve, center: complex, K: int) -> np.ndarray:
    """Columns ``dn Re(xi^n), dn Im(xi^n)`` for n = 1..K, ordered (c1..cK, s1..sK)."""
    xi = curve.z - center
    nu = curve.normals[:, 0] + 1j * curve.normals[:, 1]
    n = np.arange(1, K + 1)
    deriv = n[None, :] * xi[:, None] ** (n[None, :] - 1) * nu[:, None]
    return np.hstack([deriv.real, deriv.imag])


def _moments(curve: Curve, density: np.ndarray, center: complex, K: int) -> np.ndarray:
    """Complex moments ``int (x - c)^m density ds``: shape (K, n_rhs)."""
    xi = curve.z - center
    powers = xi[:, None] ** np.arange(1, K + 1)[None, :]
    return powers.T @ (density * curve.weights[:, None])


def _interfaces(target: ConductivityTarget):
    """``(curve, k_in, k_out)`` per interface, outermost first."""
    out = [(target.outer, target.k1, 1.0)]
    if target.inner is not None:
        out.append((target.inner, target.k2, target.k1))
    return out


@dataclass(frozen=True, eq=False)
class TransmissionSolution:
    """Interface densities for a batch of right-hand sides."""

    densities: tuple[np.ndarray, ...]
    center: complex
    residual: float
    rcond: float


def _assemble_system(target: ConductivityTarget):
    faces = _interfaces(target)
    sizes = [c.n for c, _, _ in faces]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    A = np.zeros((offsets[-1], offsets[-1]))
    scale = []
    for a, (ca, kin, kout) in enumerate(faces):
        diff = kin - kout
        mean = 0.5 * (kin + kout)
        ra = slice(offsets[a], offsets[a + 1])
        A[ra, ra] = np.eye(ca.n) - (diff / mean) * np_adjoint(ca).matrix
        for b, (cb, _, _) in enumerate(faces):
            if b == a:
                continue
            rb = slice(offsets[b], offsets[b + 1])
            A[ra, rb] = -(diff / mean) * normal_derivative_coupling(cb, ca).matrix
        scale.append(diff / mean)
    return faces, offsets, A, scale


def _solve_all(target: ConductivityTarget, K: int, center: complex) -> TransmissionSolution:
    faces, offsets, A, scale = _assemble_system(target)
    rhs = np.vstack(
        [sc * _harmonic_normal_derivatives(c, center, K) for (c, _, _), sc in zip(faces, scale)]
    )
    lu, piv = sla.lu_factor(A, check_finite=False)
    anorm = np.linalg.norm(A, 1)
    rcond, _ = sla.lapack.dgecon(lu, anorm, norm="1")
    X = sla.lu_solve((lu, piv), rhs, check_finite=False)
    residual = float(np.linalg.norm(A @ X - rhs) / max(np.linalg.norm(rhs), 1e-300))
    cond = 1.0 / rcond if rcond > 0 else np.inf
    log.debug("transmission system n=%d cond1~%.3e residual=%.2e", A.shape[0], cond, residual)
    if cond > COND_WARN:
        warnings.warn(f"ill-conditioned transmission system (cond ~ {cond:.2e})", RuntimeWarning)
    dens = tuple(X[offsets[i] : offsets[i + 1]] for i in range(len(faces)))
    return TransmissionSolution(dens, center, residual, float(rcond))


def solve_transmission(target: ConductivityTarget, harmonic, center=None):
    """Densities for a single background ``harmonic = (n, "cos" | "sin")``.

    Returns ``(psi, phi)`` with ``phi = None`` for homogeneous targets.
    ``center`` defaults to the origin, matching the CGPT definition.
    """
    n, kind = harmonic
    if n < 1:
        raise ValueError("harmonic order must be >= 1")
    if kind not in ("cos", "sin"):
        raise ValueError("harmonic kind must be 'cos' or 'sin'")
    c = 0j if center is None else complex(*np.atleast_1d(center)) if np.ndim(center) else complex(center)
    sol = _solve_all(target, n, c)
    col = (n - 1) + (n if kind == "sin" else 0)
    dens = [d[:, col] for d in sol.densities]
    return dens[0], (dens[1] if len(dens) > 1 else None)


def _complex_center(center) -> complex:
    if center is None:
        return 0j
    if np.iscomplexobj(center) or np.isscalar(center):
        return complex(center)
    x, y = center
    return complex(x, y)


def _cgpt_from_densities(curves, densities, center, K) -> CgptMatrix:
    mom = sum(_moments(c, d, center, K) for c, d in zip(curves, densities))
    mc, ms = mom[:, :K], mom[:, K:]
    return CgptMatrix(cc=mc.real, sc=mc.imag, cs=ms.real, ss=ms.imag)


def compute_cgpt(target: ConductivityTarget, K: int = 5, *, about_centroid: bool = True) -> CgptMatrix:
    """CGPT of ``target`` up to order ``K`` (harmonics about the origin).

    With ``about_centroid`` the boundary problems are posed in coordinates
    centred at the target centroid and the result is moved back with the
    exact translation law, which keeps ``|x - c|^n`` moderate at high order.
    """
    _check_order(K)
    center = complex(*target.centroid()) if about_centroid else 0j
    sol = _solve_all(target, K, center)
    M = _cgpt_from_densities(target.curves, sol.densities, center, K)
    if center != 0:
        from .algebra import translate_cgpt

        M = translate_cgpt(M, (center.real, center.imag))
    return M


def compute_cgpt_homogeneous(target: ConductivityTarget, K: int = 5) -> CgptMatrix:
    """``int y^a (lambda I - K*)^{-1}[dn x^b] ds`` for a single-phase target."""
    _check_order(K)
    if target.is_coated:
        raise ValueError("homogeneous route needs a single-phase target")
    lam = contrast_lambda(target.k1)
    curve = target.outer
    A = lam * np.eye(curve.n) - np_adjoint(curve).matrix
    rhs = _harmonic_normal_derivatives(curve, 0j, K)
    psi = np.linalg.solve(A, rhs)
    return _cgpt_from_densities([curve], [psi], 0j, K)


def _interior_ntd(target: ConductivityTarget, unit: bool) -> np.ndarray:
    """Dense Neumann-to-Dirichlet map of the interior problem, on mean-zero data.

    ``unit=True`` gives ``Lambda_1`` (conductivity 1 in the whole target),
    otherwise ``Lambda_gamma`` with the flux data ``gamma du/dn|-`` on the
    outer boundary.  Both map weighted-mean-zero fluxes to mean-zero traces.
    """
    outer = target.outer
    n = outer.n
    w = outer.weights
    P = np.eye(n) - np.outer(np.ones(n), w) / w.sum()
    KD = np_adjoint(outer).matrix
    SD = single_layer(outer).matrix
    if unit or target.inner is None:
        k1 = 1.0 if unit else target.k1
        A = k1 * (-0.5 * np.eye(n) + KD)
        dens = np.linalg.lstsq(A, P, rcond=None)[0]
        return P @ (SD @ dens)
    inner = target.inner
    m = inner.n
    k1, k2 = target.k1, target.k2
    A = np.zeros((n + m, n + m))
    A[:n, :n] = k1 * (-0.5 * np.eye(n) + KD)
    A[:n, n:] = k1 * normal_derivative_coupling(inner, outer).matrix
    A[n:, n:] = 0.5 * (k1 + k2) * np.eye(m) - (k2 - k1) * np_adjoint(inner).matrix
    A[n:, :n] = -(k2 - k1) * normal_derivative_coupling(outer, inner).matrix
    rhs = np.vstack([P, np.zeros((m, n))])
    dens = np.linalg.lstsq(A, rhs, rcond=None)[0]
    trace = SD @ dens[:n] + single_layer(inner, outer).matrix @ dens[n:]
    return P @ trace


def cgpt_operator_route(target: ConductivityTarget, K: int) -> CgptMatrix:
    """CGPT from the operator definition with ``T = Lambda_1^{-1}(Lambda_1 - Lambda_gamma)``.

    Materialises both Neumann-to-Dirichlet maps densely (O(N^3)); meant for
    small discretisations as a check on :func:`compute_cgpt`.
    """
    _check_order(K)
    outer = target.outer
    n = outer.n
    w = outer.weights
    P = np.eye(n) - np.outer(np.ones(n), w) / w.sum()
    L1 = _interior_ntd(target, unit=True)
    Lg = _interior_ntd(target, unit=False)
    T = P @ np.linalg.pinv(L1, rcond=1e-12) @ (L1 - Lg)
    jump = 0.5 * np.eye(n) + np_adjoint(outer).matrix
    rhs = _harmonic_normal_derivatives(outer, 0j, K)
    dens = T @ np.linalg.solve(np.eye(n) - jump @ T, rhs)
    return _cgpt_from_densities([outer], [dens], 0j, K)
