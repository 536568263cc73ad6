"""Reference dictionary, descriptor matching and identification experiments."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._jit import thread_count
from .cgpt import CgptMatrix, compute_cgpt
from .geometry import RigidMotion, ShapeKind, ShapeSpec, build_target
from .invariants import DescriptorPair, descriptor_distance, descriptors_from_cgpt
from .reconstruction import build_acquisition, reconstruct_cgpt
from .sensing import AcquisitionConfig, add_noise, synthesize_msr, trial_rng

__all__ = [
    "DictionaryEntry",
    "Dictionary",
    "MatchResult",
    "default_specs",
    "build_dictionary",
    "match",
    "ExperimentSettings",
    "FrequencyTable",
    "run_identification_experiment",
    "RobustnessResult",
    "run_robustness_experiment",
    "TEST_MOTION",
]

log = logging.getLogger(__name__)

# scale 1/2 and rotation pi/3, target left at the origin
TEST_MOTION = RigidMotion((0.0, 0.0), math.pi / 3, 0.5)
TIE_TOL = 1e-8

_SHAPES = {
    "1": ShapeKind.TRIANGLE,
    "2": ShapeKind.ELLIPSE,
    "3": ShapeKind.BEAN,
    "4": ShapeKind.SHIELD,
    "5": ShapeKind.TRIANGULAR_SHIELD,
}


def default_specs() -> dict[str, ShapeSpec]:
    """Row a: homogeneous, k = 2.  Row b: k1 = 2 coating around a k2 = 4 core of half size."""
    out = {}
    for num, kind in _SHAPES.items():
        out[num + "a"] = ShapeSpec(kind, k1=2.0)
        out[num + "b"] = ShapeSpec(kind, k1=2.0, k2=4.0, coated={"ratio": 0.5})
    return out


@dataclass(frozen=True, eq=False)
class DictionaryEntry:
    id: str
    spec: ShapeSpec
    cgpt: CgptMatrix
    descriptors: DescriptorPair

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "spec": self.spec.to_dict(),
            "cgpt": self.cgpt.to_dict(),
            "descriptors": self.descriptors.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DictionaryEntry":
        return cls(
            d["id"],
            ShapeSpec.from_dict(d["spec"]),
            CgptMatrix.from_dict(d["cgpt"]),
            DescriptorPair.from_dict(d["descriptors"]),
        )


@dataclass(frozen=True, eq=False)
class Dictionary:
    entries: tuple[DictionaryEntry, ...]
    n_nodes: int
    descriptor_order: int

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("dictionary ids must be unique")
        if any(e.descriptors.order != self.descriptor_order for e in self.entries):
            raise ValueError("all entries must share the descriptor order")

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, key: str) -> DictionaryEntry:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(f"unknown dictionary id {key!r}")

    def to_json(self) -> str:
        payload = {
            "n_nodes": self.n_nodes,
            "descriptor_order": self.descriptor_order,
            "entries": [e.to_dict() for e in self.entries],
        }
        return json.dumps(payload, indent=1) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "Dictionary":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"dictionary file {path} not found; run build-dict first")
        d = json.loads(path.read_text())
        return cls(
            tuple(DictionaryEntry.from_dict(e) for e in d["entries"]),
            int(d["n_nodes"]),
            int(d["descriptor_order"]),
        )


def build_dictionary(
    specs: dict[str, ShapeSpec] | None = None,
    K: int = 5,
    *,
    n_nodes: int = 512,
    descriptor_order: int = 2,
) -> Dictionary:
    if K < 2:
        raise ValueError("dictionary CGPT order must be >= 2")
    if descriptor_order > K:
        raise ValueError("descriptor order cannot exceed the CGPT order")
    specs = default_specs() if specs is None else specs
    entries = []
    for key, spec in specs.items():
        M = compute_cgpt(build_target(spec, n_nodes, label=key), K)
        entries.append(DictionaryEntry(key, spec, M, descriptors_from_cgpt(M, descriptor_order)))
        log.info("dictionary entry %s built (N=%d, K=%d)", key, n_nodes, K)
    return Dictionary(tuple(entries), n_nodes, descriptor_order)


@dataclass(frozen=True)
class MatchResult:
    ids: tuple[str, ...]
    errors: np.ndarray
    best: int
    margin: float
    tie: bool

    @property
    def best_id(self) -> str:
        return self.ids[self.best]

    @property
    def best_error(self) -> float:
        return float(self.errors[self.best])


def _select(ids, errors) -> MatchResult:
    errors = np.asarray(errors, dtype=float)
    # lowest id wins among (near) ties
    order = sorted(range(len(ids)), key=lambda i: (errors[i], ids[i]))
    best = order[0]
    close = [i for i in range(len(ids)) if errors[i] - errors[best] <= TIE_TOL]
    best = min(close, key=lambda i: ids[i])
    others = np.delete(errors, best)
    margin = float(others.min() - errors[best]) if others.size else math.inf
    return MatchResult(tuple(ids), errors, best, margin, len(close) > 1)


def match(query: DescriptorPair, dictionary: Dictionary) -> MatchResult:
    if query.order != dictionary.descriptor_order:
        raise ValueError(
            f"descriptor order {query.order} does not match dictionary order {dictionary.descriptor_order}"
        )
    errs = [descriptor_distance(e.descriptors, query) for e in dictionary.entries]
    return _select(dictionary.ids, errs)


@dataclass(frozen=True)
class ExperimentSettings:
    sigmas: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    trials: int = 500
    seed: int = 0
    recon_order: int = 5
    sim_order: int = 8
    n_positions: int = 500
    n_receptors: int = 512
    n_nodes: int = 512
    motion: RigidMotion = TEST_MOTION
    selection: str = "per-trial"
    acquisition: dict = field(default_factory=dict)
    workers: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.selection not in ("per-trial", "mean-error"):
            raise ValueError("selection must be 'per-trial' or 'mean-error'")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("noise levels must be >= 0")


@dataclass
class FrequencyTable:
    ids: tuple[str, ...]
    sigmas: tuple[float, ...]
    # counts[true_id][sigma_index] -> array over ids
    counts: dict[str, list[np.ndarray]]
    mean_errors: dict[str, list[np.ndarray]]
    trials: int
    selection: str

    def frequency(self, true_id: str, sigma: float, selected: str) -> float:
        i = self.sigmas.index(sigma)
        c = self.counts[true_id][i]
        return float(c[self.ids.index(selected)] / c.sum())

    def identification(self, true_id: str) -> list[float]:
        return [self.frequency(true_id, s, true_id) for s in self.sigmas]

    def rows(self):
        for tid, per_sigma in self.counts.items():
            for sigma, c in zip(self.sigmas, per_sigma):
                tot = c.sum()
                for sid, n in zip(self.ids, c):
                    yield tid, sigma, sid, n / tot

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true_id", "sigma0", "selected_id", "frequency"])
            for tid, sigma, sid, f in self.rows():
                w.writerow([tid, repr(float(sigma)), sid, repr(float(f))])
        return path


def _target_response(spec: ShapeSpec, st: ExperimentSettings, label: str):
    target = build_target(spec, st.n_nodes, motion=st.motion, label=label)
    M = compute_cgpt(target, max(st.sim_order, st.recon_order))
    cfg = AcquisitionConfig.for_target(
        target,
        n_positions=st.n_positions,
        n_receptors=st.n_receptors,
        sim_order=st.sim_order,
        seed=st.seed,
        **st.acquisition,
    )
    op = build_acquisition(cfg, K=st.recon_order)
    return synthesize_msr(M, cfg), op


def run_identification_experiment(
    dictionary: Dictionary,
    targets: list[str] | None = None,
    settings: ExperimentSettings | None = None,
    specs: dict[str, ShapeSpec] | None = None,
) -> FrequencyTable:
    """Monte Carlo identification: synthesize -> noise -> reconstruct -> descriptors -> match.

    Trial ``t`` at noise index ``j`` for target index ``i`` draws from
    ``trial_rng(seed, i, j, t)``, so results do not depend on scheduling.
    """
    st = ExperimentSettings() if settings is None else settings
    specs = {e.id: e.spec for e in dictionary.entries} if specs is None else specs
    targets = list(specs) if targets is None else list(targets)
    ids = tuple(dictionary.ids)
    order = dictionary.descriptor_order
    workers = st.workers or thread_count()
    counts, means = {}, {}
    for ti, tid in enumerate(targets):
        if tid not in specs:
            raise KeyError(f"unknown target id {tid!r}")
        msr, op = _target_response(specs[tid], st, tid)
        counts[tid], means[tid] = [], []
        for si, sigma in enumerate(st.sigmas):

            def one(trial, _si=si, _sigma=sigma):
                noisy = add_noise(msr, _sigma, trial_rng(st.seed, ti, _si, trial))
                M, _ = reconstruct_cgpt(noisy, op)
                return match(descriptors_from_cgpt(M, order), dictionary).errors

            n_runs = 1 if sigma == 0 else st.trials
            if workers > 1 and n_runs > 1:
                with ThreadPoolExecutor(workers) as ex:
                    errs = np.array(list(ex.map(one, range(n_runs))))
            else:
                errs = np.array([one(t) for t in range(n_runs)])
            c = np.zeros(len(ids))
            if st.selection == "per-trial":
                for e in errs:
                    c[_select(ids, e).best] += 1
            else:
                c[_select(ids, errs.mean(axis=0)).best] = 1
            counts[tid].append(c)
            means[tid].append(errs.mean(axis=0))
            log.info("target %s sigma %.3g: P(correct) = %.4f", tid, sigma, c[ids.index(tid)] / c.sum())
    return FrequencyTable(ids, tuple(st.sigmas), counts, means, st.trials, st.selection)


@dataclass(frozen=True)
class RobustnessResult:
    sigmas: tuple[float, ...]
    trials: int
    # errors[j][k-1]: per-order error of the trial-averaged CGPT at sigmas[j]
    errors: tuple[tuple[float, ...], ...]

    def rows(self):
        for sigma, errs in zip(self.sigmas, self.errors):
            n = 1 if sigma == 0 else self.trials
            for k, e in enumerate(errs, start=1):
                yield k, e, sigma, n


def run_robustness_experiment(
    spec: ShapeSpec,
    sigmas=(0.0, 0.2),
    *,
    trials: int = 100,
    seed: int = 0,
    recon_order: int = 5,
    sim_order: int = 8,
    n_positions: int = 500,
    n_receptors: int = 512,
    n_nodes: int = 512,
    motion: RigidMotion = TEST_MOTION,
    acquisition: dict | None = None,
) -> RobustnessResult:
    """Per-order error of CGPTs reconstructed from noisy data, averaged over trials.

    The reconstructed CGPTs of the ``trials`` draws are averaged before the
    error is taken.
    """
    from .reconstruction import per_order_error

    st = ExperimentSettings(
        sigmas=tuple(sigmas),
        trials=trials,
        seed=seed,
        recon_order=recon_order,
        sim_order=sim_order,
        n_positions=n_positions,
        n_receptors=n_receptors,
        n_nodes=n_nodes,
        motion=motion,
        acquisition=acquisition or {},
    )
    target = build_target(spec, n_nodes, motion=motion)
    truth = compute_cgpt(target, max(sim_order, recon_order))
    msr, op = _target_response(spec, st, "robustness")
    out = []
    for j, sigma in enumerate(st.sigmas):
        n = 1 if sigma == 0 else trials
        acc = None
        for t in range(n):
            M, _ = reconstruct_cgpt(add_noise(msr, sigma, trial_rng(seed, 0, j, t)), op)
            acc = M if acc is None else acc + M
        out.append(per_order_error(acc * (1.0 / n), truth.truncated(recon_order)))
    return RobustnessResult(st.sigmas, trials, tuple(out))
