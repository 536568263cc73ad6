"""Command-line entry point: ``cgpt-sense <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cgpt import K_MAX, CgptMatrix, compute_cgpt
from .dictionary import (
    TEST_MOTION,
    Dictionary,
    ExperimentSettings,
    build_dictionary,
    default_specs,
    match,
    run_identification_experiment,
    run_robustness_experiment,
)
from .geometry import GeometryError, RigidMotion, ShapeSpec, build_target
from .invariants import descriptors_from_cgpt
from .reconstruction import build_acquisition, reconstruct_cgpt, write_diagnostics_csv
from .sensing import AcquisitionConfig, MsrMatrix, add_noise, synthesize_msr

log = logging.getLogger("cgpt_sense")

DEFAULT_DICT = "dictionary.json"


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _id_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _resolve_specs(shapes: list[str] | None, spec_file: str | None = None) -> dict[str, ShapeSpec]:
    if spec_file:
        data = json.loads(Path(spec_file).read_text())
        items = data if isinstance(data, list) else [data]
        return {str(d.get("id", f"spec{i}")): ShapeSpec.from_dict(d) for i, d in enumerate(items)}
    specs = default_specs()
    if not shapes:
        return specs
    unknown = [s for s in shapes if s not in specs]
    if unknown:
        raise UsageError(f"unknown shape ids {unknown}; choose from {sorted(specs)}")
    return {s: specs[s] for s in shapes}


def _single_spec(args) -> tuple[str, ShapeSpec]:
    specs = _resolve_specs(args.shapes, getattr(args, "spec", None))
    if len(specs) != 1:
        raise UsageError("this command takes exactly one shape (--shapes ID or --spec FILE)")
    return next(iter(specs.items()))


def _motion(args) -> RigidMotion:
    if args.test_motion:
        return TEST_MOTION
    return RigidMotion(tuple(args.shift), args.theta, args.scale)


def _check_order(name, K):
    if not 1 <= K <= K_MAX:
        raise UsageError(f"{name} must be in 1..{K_MAX}, got {K}")


def _out_path(args, default: str) -> Path:
    p = Path(args.out or default)
    if p.parent and not p.parent.exists():
        raise UsageError(f"output directory {p.parent} does not exist")
    return p


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1) + "\n")


def _acq_kwargs(args) -> dict:
    return {"n_positions": args.positions, "n_receptors": args.receptors}


def cmd_build_dict(args) -> int:
    _check_order("--order", args.order)
    if args.desc_order > args.order:
        raise UsageError("--desc-order cannot exceed --order")
    specs = _resolve_specs(args.shapes)
    d = build_dictionary(specs, args.order, n_nodes=args.nq, descriptor_order=args.desc_order)
    out = d.save(_out_path(args, DEFAULT_DICT))
    print(f"wrote {len(d)} entries to {out}")
    return 0


def cmd_cgpt(args) -> int:
    _check_order("--order", args.order)
    key, spec = _single_spec(args)
    target = build_target(spec, args.nq, motion=_motion(args), label=key)
    M = compute_cgpt(target, args.order)
    payload = M.to_dict()
    if args.order >= 2:
        payload["descriptors"] = descriptors_from_cgpt(M, min(args.desc_order, args.order)).to_dict()
    _write_json(_out_path(args, f"cgpt_{key}.json"), payload)
    print(f"{key}: M_cc[1,1] = {M.cc[0, 0]:.10g}, M_ss[1,1] = {M.ss[0, 0]:.10g}")
    return 0


def cmd_simulate(args) -> int:
    _check_order("--sim-order", args.sim_order)
    key, spec = _single_spec(args)
    if len(args.sigma) != 1:
        raise UsageError("simulate takes a single --sigma value")
    target = build_target(spec, args.nq, motion=_motion(args), label=key)
    cfg = AcquisitionConfig.for_target(target, sim_order=args.sim_order, seed=args.seed, **_acq_kwargs(args))
    msr = synthesize_msr(compute_cgpt(target, args.sim_order), cfg)
    msr = add_noise(msr, args.sigma[0], args.seed)
    csv_path, sidecar = msr.save(_out_path(args, f"msr_{key}.csv"))
    print(f"wrote {msr.shape[0]}x{msr.shape[1]} MSR to {csv_path} (+ {sidecar.name})")
    return 0


def cmd_reconstruct(args) -> int:
    _check_order("--order", args.order)
    if not args.msr or not Path(args.msr).exists():
        raise UsageError("reconstruct needs an existing --msr CSV (with its JSON sidecar)")
    msr = MsrMatrix.load(args.msr)
    op = build_acquisition(msr.config, K=args.order)
    truth = None
    if args.shapes or args.spec:
        key, spec = _single_spec(args)
        target = build_target(spec, args.nq, motion=_motion(args), label=key)
        truth = compute_cgpt(target, args.order)
    M, diag = reconstruct_cgpt(msr, op, truth)
    out = _out_path(args, "cgpt_reconstructed.json")
    _write_json(out, M.to_dict())
    print(f"rank {diag.rank}/{diag.n_unknowns}, cond {diag.cond:.3e}, relative residual {diag.residual:.3e}")
    if diag.per_order_error is not None:
        rows = [(k, e, msr.noise_level, 1) for k, e in enumerate(diag.per_order_error, start=1)]
        write_diagnostics_csv(out.with_suffix(".csv"), rows)
        for k, e, _, _ in rows:
            print(f"order {k}: relative error {e:.3e}")
    return 0


def _load_dict(args) -> Dictionary:
    path = Path(args.dict or DEFAULT_DICT)
    if not path.exists():
        raise UsageError(f"dictionary {path} not found; run `cgpt-sense build-dict --out {path}` first")
    return Dictionary.load(path)


def cmd_match(args) -> int:
    d = _load_dict(args)
    if not args.cgpt or not Path(args.cgpt).exists():
        raise UsageError("match needs an existing --cgpt JSON file")
    M = CgptMatrix.from_dict(json.loads(Path(args.cgpt).read_text()))
    res = match(descriptors_from_cgpt(M, d.descriptor_order), d)
    payload = {
        "best_id": res.best_id,
        "best_error": res.best_error,
        "margin": res.margin,
        "tie": res.tie,
        "errors": dict(zip(res.ids, map(float, res.errors))),
    }
    if args.out:
        _write_json(_out_path(args, ""), payload)
    print(f"best match {res.best_id} (error {res.best_error:.3e}, margin {res.margin:.3e}{', tie' if res.tie else ''})")
    return 0


def _settings(args, sigmas) -> ExperimentSettings:
    _check_order("--order", args.order)
    _check_order("--sim-order", args.sim_order)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    return ExperimentSettings(
        sigmas=tuple(sigmas),
        trials=args.trials,
        seed=args.seed,
        recon_order=args.order,
        sim_order=args.sim_order,
        n_positions=args.positions,
        n_receptors=args.receptors,
        n_nodes=args.nq,
        motion=_motion(args),
        selection=args.selection,
    )


def cmd_experiment(args) -> int:
    d = _load_dict(args)
    st = _settings(args, args.sigma)
    targets = args.shapes or d.ids
    table = run_identification_experiment(d, targets, st)
    out = table.write_csv(_out_path(args, "frequencies.csv"))
    print(f"wrote {out}")
    print("true_id  sigma0  P(identified)")
    for tid in targets:
        for s, p in zip(table.sigmas, table.identification(tid)):
            print(f"{tid:7s}  {s:6.3g}  {p:.4f}")
    return 0


def cmd_robustness(args) -> int:
    key, spec = _single_spec(args)
    st = _settings(args, args.sigma)
    res = run_robustness_experiment(
        spec,
        st.sigmas,
        trials=st.trials,
        seed=st.seed,
        recon_order=st.recon_order,
        sim_order=st.sim_order,
        n_positions=st.n_positions,
        n_receptors=st.n_receptors,
        n_nodes=st.n_nodes,
        motion=st.motion,
    )
    out = write_diagnostics_csv(_out_path(args, f"robustness_{key}.csv"), res.rows())
    print(f"wrote {out}")
    for k, e, s, n in res.rows():
        print(f"sigma0 {s:g}  order {k}: relative error {e:.3e} ({n} draws)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cgpt-sense", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--shapes", type=_id_list, help="comma-separated dictionary ids, e.g. 1a,2b")
    common.add_argument("--nq", type=int, default=512, help="boundary nodes per curve (even, >= 16)")
    common.add_argument("--order", type=int, default=5, help="CGPT order K")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file")

    motion = argparse.ArgumentParser(add_help=False)
    motion.add_argument("--scale", type=float, default=1.0)
    motion.add_argument("--theta", type=float, default=0.0)
    motion.add_argument("--shift", type=float, nargs=2, default=(0.0, 0.0), metavar=("X", "Y"))
    motion.add_argument(
        "--test-motion",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="scale 0.5, rotation pi/3 (overrides the above; default on for experiment and robustness)",
    )

    acq = argparse.ArgumentParser(add_help=False)
    acq.add_argument("--sim-order", type=int, default=8)
    acq.add_argument("--positions", type=int, default=500)
    acq.add_argument("--receptors", type=int, default=512)

    sp = sub.add_parser("build-dict", parents=[common], help="precompute the reference dictionary")
    sp.add_argument("--desc-order", "--orders", dest="desc_order", type=int, default=2)
    sp.set_defaults(func=cmd_build_dict)

    sp = sub.add_parser("cgpt", parents=[common, motion], help="CGPT and descriptors of one target")
    sp.add_argument("--spec", help="JSON shape spec file instead of --shapes")
    sp.add_argument("--desc-order", dest="desc_order", type=int, default=2)
    sp.set_defaults(func=cmd_cgpt)

    sp = sub.add_parser("simulate", parents=[common, motion, acq], help="synthesize a (noisy) MSR matrix")
    sp.add_argument("--spec")
    sp.add_argument("--sigma", type=_float_list, default=[0.0])
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reconstruct", parents=[common, motion], help="least-squares CGPT from an MSR file")
    sp.add_argument("--msr", help="MSR CSV written by simulate")
    sp.add_argument("--spec")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("match", parents=[common], help="classify a CGPT file against the dictionary")
    sp.add_argument("--dict")
    sp.add_argument("--cgpt", help="CGPT JSON file")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("experiment", parents=[common, motion, acq], help="Monte Carlo identification table")
    sp.add_argument("--dict")
    sp.add_argument("--sigma", type=_float_list, default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    sp.add_argument("--trials", type=int, default=500)
    sp.add_argument("--selection", choices=("per-trial", "mean-error"), default="per-trial")
    sp.set_defaults(func=cmd_experiment, test_motion=True)

    sp = sub.add_parser("robustness", parents=[common, motion, acq], help="per-order reconstruction error")
    sp.add_argument("--spec")
    sp.add_argument("--sigma", type=_float_list, default=[0.0, 0.2])
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--selection", default="per-trial", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_robustness, test_motion=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.info("command %s seed=%s nq=%s", args.command, args.seed, args.nq)
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, json.JSONDecodeError) as exc:
        # bad input files: report without a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
