"""Multistatic response of a target probed by a dipole swimming on a circle.

Free space, unit background conductivity.  A dipole ``d`` (complex, unit
modulus) at ``s`` creates ``U(x) = Re(d / (x - s)) / (2 pi)``.  Around the
target centre ``z`` this is ``Re sum_m a_m (x - z)^m`` plus a constant, with
``a_m = -d / (2 pi (s - z)^(m+1))``.  In the real harmonic basis
``Re (x-z)^m, Im (x-z)^m`` the coefficients are ``(Re a_m, -Im a_m)``.

Far from the target the response to harmonic ``n`` is the single layer of
its density, whose multipole expansion pairs the moments with
``g_m(x) = -(Re xi^-m, -Im xi^-m) / (2 pi m)``, ``xi = x - z``.  The
measured perturbation is therefore the bilinear form ``g^T M alpha`` with
``M = [[cc, cs], [sc, ss]]`` (see :meth:`CgptMatrix.stacked`).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .algebra import translate_cgpt
from .cgpt import K_MAX, CgptMatrix
from .geometry import ConductivityTarget, curve_diameter

__all__ = [
    "AcquisitionConfig",
    "FishPoses",
    "MsrMatrix",
    "FishCollisionError",
    "fish_poses",
    "source_coefficients",
    "source_harmonics",
    "receiver_coefficients",
    "synthesize_msr",
    "add_noise",
    "trial_rng",
    "dipole_potential",
]

log = logging.getLogger(__name__)


class FishCollisionError(ValueError):
    pass


@dataclass(frozen=True)
class AcquisitionConfig:
    """Circular full-view acquisition around a target of known centre.

    The orbit radius is ``orbit_radius_factor * target_diameter``.  The
    receptors sit on an arc of half-angle ``receptor_half_angle`` centred on
    the dipole, ``receptor_offset`` outside the orbit circle.
    ``target_extent`` is the target's circumradius about ``target_center``
    (defaults to the diameter, an upper bound when the centre lies inside).
    """

    target_diameter: float
    n_positions: int = 500
    n_receptors: int = 512
    orbit_radius_factor: float = 1.5
    orbit_center: tuple[float, float] = (0.0, 0.0)
    target_center: tuple[float, float] = (0.0, 0.0)
    target_extent: float | None = None
    receptor_half_angle: float = 0.99 * math.pi
    receptor_offset: float = 0.0
    sim_order: int = 8
    seed: int = 0

    def __post_init__(self):
        for name in ("orbit_center", "target_center"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.n_positions < 1 or self.n_receptors < 1:
            raise ValueError("n_positions and n_receptors must be >= 1")
        if not self.target_diameter > 0:
            raise ValueError("target diameter must be positive")
        if not 1 <= self.sim_order <= K_MAX:
            raise ValueError(f"sim_order must be in 1..{K_MAX}")
        if not 0 <= self.receptor_half_angle < math.pi:
            raise ValueError("receptor half-angle must lie in [0, pi)")
        if self.orbit_radius <= 0.5 * self.target_diameter:
            raise ValueError("orbit radius must exceed half the target diameter")

    @classmethod
    def for_target(cls, target: ConductivityTarget, center=None, **kwargs) -> "AcquisitionConfig":
        c = np.asarray(target.centroid() if center is None else center, dtype=float)
        extent = float(np.max(np.hypot(*(target.outer.nodes - c).T)))
        return cls(
            target_diameter=curve_diameter(target.outer),
            target_center=tuple(c),
            target_extent=extent,
            **kwargs,
        )

    @property
    def orbit_radius(self) -> float:
        return self.orbit_radius_factor * self.target_diameter

    @property
    def extent(self) -> float:
        return self.target_diameter if self.target_extent is None else self.target_extent

    def with_(self, **changes) -> "AcquisitionConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["orbit_center"] = list(self.orbit_center)
        d["target_center"] = list(self.target_center)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AcquisitionConfig":
        return cls(**data)


@dataclass(frozen=True, eq=False)
class FishPoses:
    """Complex coordinates: ``sources (P,)``, ``dipoles (P,)``, ``receptors (P, R)``."""

    sources: np.ndarray
    dipoles: np.ndarray
    receptors: np.ndarray
    angles: np.ndarray

    def __len__(self):
        return len(self.sources)

    def __iter__(self):
        for s, d, r in zip(self.sources, self.dipoles, self.receptors):
            yield (
                np.array([s.real, s.imag]),
                np.array([d.real, d.imag]),
                np.column_stack([r.real, r.imag]),
            )


def fish_poses(config: AcquisitionConfig) -> FishPoses:
    P, R = config.n_positions, config.n_receptors
    c = complex(*config.orbit_center)
    z = complex(*config.target_center)
    rad = config.orbit_radius
    phi = 2.0 * np.pi * np.arange(P) / P
    heading = np.exp(1j * phi)
    sources = c + rad * heading
    dipoles = 1j * heading  # counter-clockwise swimming direction
    if R == 1:
        delta = np.zeros(1)
    else:
        delta = np.linspace(-config.receptor_half_angle, config.receptor_half_angle, R)
    receptors = c + (rad + config.receptor_offset) * np.exp(1j * (phi[:, None] + delta[None, :]))
    closest = min(np.abs(receptors - z).min(), np.abs(sources - z).min())
    if closest <= config.extent:
        raise FishCollisionError("fish collides with target")
    return FishPoses(sources, dipoles, receptors, phi)


def _as_complex(p) -> complex:
    if np.iscomplexobj(p) or np.isscalar(p):
        return complex(p)
    x, y = p
    return complex(x, y)


def source_coefficients(source, dipole, center, K: int) -> np.ndarray:
    """``a_m``, m = 1..K, of the dipole potential expanded about ``center``."""
    sigma = _as_complex(source) - _as_complex(center)
    if sigma == 0:
        raise ValueError("source coincides with the expansion centre")
    m = np.arange(1, K + 1)
    return -_as_complex(dipole) / (2.0 * np.pi * sigma ** (m + 1))


def source_harmonics(a: np.ndarray) -> np.ndarray:
    """Real coefficients ``[Re a_1..K, -Im a_1..K]`` along the last axis."""
    return np.concatenate([a.real, -a.imag], axis=-1)


def receiver_coefficients(points, center, K: int) -> np.ndarray:
    """``(..., 2K)`` real weights pairing CGPT moments with the potential at ``points``."""
    xi = np.asarray(points) - _as_complex(center)
    if np.any(xi == 0):
        raise ValueError("receptor coincides with the expansion centre")
    m = np.arange(1, K + 1)
    inv = xi[..., None] ** (-m)
    scale = -1.0 / (2.0 * np.pi * m)
    return np.concatenate([scale * inv.real, -scale * inv.imag], axis=-1)


def dipole_potential(source, dipole, points) -> np.ndarray:
    x = np.asarray(points)
    return np.real(_as_complex(dipole) / (x - _as_complex(source))) / (2.0 * np.pi)


def pose_factors(config: AcquisitionConfig, K: int, poses: FishPoses | None = None):
    """Per-pose source harmonics ``(P, 2K)`` and receiver weights ``(P, R, 2K)``."""
    poses = fish_poses(config) if poses is None else poses
    z = complex(*config.target_center)
    sigma = poses.sources - z
    m = np.arange(1, K + 1)
    a = -poses.dipoles[:, None] / (2.0 * np.pi * sigma[:, None] ** (m + 1))
    S = source_harmonics(a)
    G = receiver_coefficients(poses.receptors, z, K)
    ratio = config.extent / np.abs(poses.receptors - z).min()
    if ratio > 0.9:
        log.warning("receptors close to the target (extent/distance = %.2f); multipole series converges slowly", ratio)
    return S, np.ascontiguousarray(G)


@dataclass(frozen=True, eq=False)
class MsrMatrix:
    values: np.ndarray
    config: AcquisitionConfig
    noise_level: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.config.n_positions, self.config.n_receptors):
            raise ValueError(
                f"MSR shape {v.shape} does not match config "
                f"({self.config.n_positions}, {self.config.n_receptors})"
            )
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("non-finite MSR entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def save(self, path) -> tuple[Path, Path]:
        """CSV of values (row = position) plus a JSON sidecar with the config."""
        path = Path(path)
        np.savetxt(path, self.values, delimiter=",", fmt="%.17g")
        sidecar = path.with_suffix(".json")
        sidecar.write_text(
            json.dumps({"noise_level": self.noise_level, "config": self.config.to_dict()}, indent=2) + "\n"
        )
        return path, sidecar

    @classmethod
    def load(cls, path) -> "MsrMatrix":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        values = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(values, AcquisitionConfig.from_dict(meta["config"]), float(meta["noise_level"]))


def synthesize_msr(M: CgptMatrix, config: AcquisitionConfig, order: int | None = None) -> MsrMatrix:
    """Noiseless MSR of the target whose CGPT (about the origin) is ``M``.

    ``order`` defaults to ``config.sim_order``; ``M`` must reach it.
    """
    K = config.sim_order if order is None else order
    if M.order < K:
        raise ValueError(f"CGPT order {M.order} is below the synthesis order {K}")
    z = config.target_center
    Mz = translate_cgpt(M, (-z[0], -z[1])) if z != (0.0, 0.0) else M
    big = Mz.truncated(K).stacked()
    S, G = pose_factors(config, K)
    values = kernels.msr_forward(G, S @ big.T)
    return MsrMatrix(values, config, 0.0)


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for ``(seed, key...)``; identical across processes."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def add_noise(msr: MsrMatrix, sigma0: float, seed=None) -> MsrMatrix:
    """White Gaussian noise with std ``sigma0 * RMS(msr)``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``; ``None``
    uses ``msr.config.seed``.
    """
    if sigma0 < 0:
        raise ValueError("noise level must be >= 0")
    if sigma0 == 0:
        return msr
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(
        msr.config.seed if seed is None else seed
    )
    v = msr.values
    std = sigma0 * np.linalg.norm(v) / math.sqrt(v.size)
    return MsrMatrix(v + std * rng.standard_normal(v.shape), msr.config, float(sigma0))
