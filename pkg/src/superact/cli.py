"""Command-line front end.

Exit codes: 0 success, 1 a condition failed, 2 bad input, 3 undecided.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .pipeline import (
    ExampleData,
    _sha,
    certify_example,
    random_upb,
    strongly_unextendible_in_fd,
    theorem1_instance,
)
from .productdetect import decide_product_states, numeric_product_search
from .qmat import DimensionError, orthogonal_complement
from .subspaces import (
    PsdBasis,
    SymmetryPair,
    apply_local_unitaries,
    find_psd_basis,
    sample_fd,
    sample_positive_seeded,
    subspace_from_json,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_UNDECIDED = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    groebner_steps: int = 10**7
    restarts: int = 64
    iters: int = 500
    tol_rank: float = 1e-9
    tol_witness: float = 1e-9
    out: str | None = None
    format: str = "json"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d


class InputError(Exception):
    pass


def _emit(cfg: RunConfig, payload: dict, text: str, default_name: str) -> None:
    """Write ``payload`` as JSON to ``--out`` (file or directory) and print a report."""
    payload = dict(payload, tool_version=__version__, run_config=cfg.to_json())
    body = json.dumps(payload, indent=2, sort_keys=False, ensure_ascii=False) + "\n"
    if cfg.out:
        path = Path(cfg.out)
        if path.suffix != ".json":
            path.mkdir(parents=True, exist_ok=True)
            path = path / default_name
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(body, encoding="utf-8")
    if cfg.format == "text":
        print(text)
    elif not cfg.out:
        print(body, end="")


def _condition_table(cert_json: dict) -> str:
    lines = [f"{'id':<3} {'status':<10} {'method':<15} {'certified':<9} description"]
    for c in cert_json["conditions"]:
        lines.append(f"{c['id']:<3} {c['status']:<10} {c['method']:<15} {str(c['certified']):<9} "
                     f"{c['description']}")
    for ch in cert_json.get("checks", []):
        val = ch.get("value")
        extra = f" value={val:.3g}" if isinstance(val, float) else ""
        lines.append(f"check {ch['id']}: {'ok' if ch.get('passed') else 'FAILED'}{extra}")
    w = cert_json.get("witness")
    if w:
        lines.append(f"witness: overlap={w['overlap']:.3g} method={w['method']} "
                     f"schmidt_ranks={w['schmidt_ranks']} verified={w['verified']}")
    return "\n".join(lines)


def cmd_verify_example(cfg: RunConfig, example: ExampleData | None = None) -> int:
    cert, inst = certify_example(example, cfg.groebner_steps, cfg.restarts, cfg.tol_witness)
    cert.seeds = {"seed": cfg.seed}
    out = cert.to_json()
    _emit(cfg, {"certificate": out}, _condition_table(out), "certificate.json")
    exact_ab = all(cert.condition(c).method == "exact" for c in "ab")
    ok = (cert.all_pass and exact_ab and cert.no_failures and inst is not None
          and inst.witness is not None and inst.witness.verified)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_theorem1(cfg: RunConfig) -> int:
    d_a = cfg.extra.get("dA", 16)
    if d_a < 16 or d_a % 2:
        raise InputError("--dA must be an even integer of at least 16")
    t0 = time.perf_counter()
    inst = theorem1_instance(d_a, cfg.seed, restarts=min(cfg.restarts, 16), tol_witness=cfg.tol_witness)
    elapsed = time.perf_counter() - t0
    cert = inst.certificate
    out = cert.to_json()
    text = _condition_table(out) + f"\ndims: {out['instance']['dims']}"
    _emit(cfg, {"certificate": out}, text, "certificate.json")
    if cfg.out and Path(cfg.out).suffix != ".json":
        d = Path(cfg.out)
        arrays = {
            "S_basis": inst.S.basis,
            "S2_basis": inst.S2.basis,
            "witness_f": inst.witness.f,
            "witness_g": inst.witness.g,
            "psd_S": np.array(inst.psd1.elements),
            "psd_S2": np.array(inst.psd2.elements),
        }
        if cfg.extra.get("save_kraus"):
            arrays.update(kraus_E1=inst.E1.kraus, kraus_E2=inst.E2.kraus)
        np.savez(d / "instance.npz", **arrays)
        hashes = {k: _sha(v) for k, v in arrays.items()}
        timings = dict(cert.timings(), total=round(elapsed, 3),
                       **{k: round(v, 3) for k, v in getattr(cert, "extra_timings", {}).items()})
        (d / "timings.json").write_text(json.dumps({"timings_s": timings, "array_sha256": hashes},
                                                   indent=2) + "\n")
    ok = (cert.no_failures and inst.witness.verified
          and all(c.status == "pass" for c in cert.conditions if c.id in "cdef"))
    return EXIT_OK if ok else EXIT_FAIL


def _load_subspace(path: str):
    try:
        obj = json.loads(Path(path).read_text())
        return subspace_from_json(obj)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, DimensionError) as err:
        raise InputError(f"cannot read subspace from {path}: {err}") from err


def _fmt_vec(v: np.ndarray) -> str:
    return "[" + ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in np.asarray(v)) + "]"


def cmd_detect(cfg: RunConfig) -> int:
    s = _load_subspace(cfg.extra["file"])
    target = cfg.extra.get("target", "complement")
    res = decide_product_states(s, target, budget=cfg.groebner_steps,
                                formulation=cfg.extra.get("formulation", "bilinear"),
                                restarts=cfg.restarts, rng=cfg.seed,
                                exact_max_ambient=cfg.extra.get("exact_max_ambient"))
    tgt = orthogonal_complement(s) if target == "complement" else s
    num = numeric_product_search(tgt, restarts=cfg.restarts, iters=cfg.iters, rng=cfg.seed)
    payload = {"detection": res.to_json(),
               "numeric": {"best_overlap": num.best_overlap, "residual": num.residual}}
    lines = [f"verdict: {res.verdict} ({res.method}, {res.formulation}, target={target})",
             f"charts: {len(res.cases)}  unit: {sum(c.status == 'unit' for c in res.cases)}",
             f"numeric best overlap: {num.best_overlap:.6f}"]
    if res.psi is not None:
        lines.append(f"witness psi: {_fmt_vec(res.psi)}")
        lines.append(f"witness phi: {_fmt_vec(res.phi)}")
        lines.append(f"witness residual: {res.residual:.3g}")
    if res.note:
        lines.append(f"note: {res.note}")
    _emit(cfg, payload, "\n".join(lines), "detection.json")
    return EXIT_UNDECIDED if res.verdict == "unknown" else EXIT_OK


def cmd_build_channels(cfg: RunConfig) -> int:
    from .pipeline import build_superactivation_pair, find_joint_witness

    s = _load_subspace(cfg.extra["file"])
    if s.dims[0] != s.dims[1]:
        raise InputError("channel pairs need a subspace of C^d ⊗ C^d")
    sym = SymmetryPair.default(s.dims[0])
    psd1 = find_psd_basis(s, rng=cfg.seed)
    psd2 = find_psd_basis(apply_local_unitaries(orthogonal_complement(s), sym), rng=cfg.seed)
    if not isinstance(psd1, PsdBasis) or not isinstance(psd2, PsdBasis):
        _emit(cfg, {"error": "no PSD spanning set found"}, "no PSD spanning set found", "channels.json")
        return EXIT_FAIL
    inst = build_superactivation_pair(s, sym, psd1, psd2)
    w = find_joint_witness(inst, tol=cfg.tol_witness, rng=cfg.seed)
    payload = {
        "dims": [list(x) for x in inst.dims()],
        "cpt_error": [inst.E1.cpt_error(), inst.E2.cpt_error()],
        "witness": w.to_json(),
    }
    if inst.E1.d_B * inst.E1.d_E <= 4096:
        payload["E1"] = inst.E1.to_json()
        payload["E2"] = inst.E2.to_json()
    else:
        payload["kraus_sha256"] = [_sha(inst.E1.kraus), _sha(inst.E2.kraus)]
    text = f"dims (d_A, d_E, d_B): {payload['dims']}\nwitness overlap: {w.overlap:.3g}"
    _emit(cfg, payload, text, "channels.json")
    return EXIT_OK if w.verified else EXIT_FAIL


def cmd_sample_subspace(cfg: RunConfig) -> int:
    d_a, dim = cfg.extra["dA"], cfg.extra["dim"]
    try:
        if cfg.extra.get("positive"):
            sample = sample_positive_seeded(d_a, dim, cfg.seed)
        else:
            sample = sample_fd(d_a, dim, cfg.extra.get("k"), cfg.seed)
    except ValueError as err:
        raise InputError(str(err)) from err
    obj = sample.to_json()
    _emit(cfg, {"subspace": obj},
          f"sampled F_d subspace: d_A={d_a} dim={sample.dim} k={sample.k} "
          f"contains_omega={sample.contains_omega}", "subspace.json")
    return EXIT_OK


def cmd_upb(cfg: RunConfig) -> int:
    d_a = cfg.extra["dA"]
    if cfg.extra.get("in_fd"):
        try:
            sample = strongly_unextendible_in_fd(d_a, cfg.extra["in_fd"], cfg.seed)
        except ValueError as err:
            raise InputError(str(err)) from err
        obj = sample.to_json()
        obj["upb_verified"] = sample.upb.verified
        obj["symmetrized_dim"] = sample.symmetrized_dim
        _emit(cfg, {"subspace": obj}, f"F_d extension of a UPB span: dim={sample.dim} "
              f"symmetrized={sample.symmetrized_dim} upb={sample.upb.verified}", "upb.json")
        return EXIT_OK
    d_b, m = cfg.extra["dB"], cfg.extra["m"]
    try:
        upb = random_upb(d_a, d_b, m, cfg.seed, budget=cfg.groebner_steps)
    except ValueError as err:
        raise InputError(str(err)) from err
    except RuntimeError as err:
        _emit(cfg, {"error": str(err)}, str(err), "upb.json")
        return EXIT_FAIL
    obj = {
        "dims": list(upb.dims),
        "m": upb.m,
        "verified": upb.verified,
        "attempts": upb.attempts,
        "alphas": [[[float(z.real), float(z.imag)] for z in a] for a in upb.alphas],
        "betas": [[[float(z.real), float(z.imag)] for z in b] for b in upb.betas],
    }
    _emit(cfg, {"upb": obj}, f"UPB in {d_a}x{d_b}, m={upb.m}: {upb.verified} "
          f"after {upb.attempts} attempt(s)", "upb.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (.json) or directory")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--groebner-steps", type=int, default=10**7)
    common.add_argument("--restarts", type=int, default=64)
    common.add_argument("--iters", type=int, default=500)
    common.add_argument("--tol-rank", type=float, default=1e-9)
    common.add_argument("--tol-witness", type=float, default=1e-9)

    p = argparse.ArgumentParser(prog="superact", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-example", parents=[common], help="certify the built-in 4x4 example")
    t1 = sub.add_parser("theorem1", parents=[common], help="build and certify a d_A >= 16 instance")
    t1.add_argument("--dA", type=int, default=16)
    t1.add_argument("--save-kraus", action="store_true")
    dp = sub.add_parser("detect-product", parents=[common], help="product states in S or S^⊥")
    dp.add_argument("file")
    dp.add_argument("--target", choices=("complement", "span"), default="complement")
    dp.add_argument("--formulation", choices=("bilinear", "minor"), default="bilinear")
    dp.add_argument("--exact-max-ambient", type=int, default=None)
    bc = sub.add_parser("build-channels", parents=[common], help="channel pair from a subspace")
    bc.add_argument("file")
    ss = sub.add_parser("sample-subspace", parents=[common], help="random F_d subspace")
    ss.add_argument("--dA", type=int, required=True)
    ss.add_argument("--dim", type=int, required=True)
    ss.add_argument("--k", type=int, default=None)
    ss.add_argument("--positive", action="store_true", help="contain omega, avoid (id⊗X) omega")
    up = sub.add_parser("upb", parents=[common], help="random verified unextendible product basis")
    up.add_argument("--dA", type=int, required=True)
    up.add_argument("--dB", type=int, default=None)
    up.add_argument("--m", type=int, default=None)
    up.add_argument("--in-fd", type=int, default=None, metavar="DIM",
                    help="instead extend a minimal UPB span to a DIM-dimensional F_d subspace")
    return p


_HANDLERS = {
    "verify-example": cmd_verify_example,
    "theorem1": cmd_theorem1,
    "detect-product": cmd_detect,
    "build-channels": cmd_build_channels,
    "sample-subspace": cmd_sample_subspace,
    "upb": cmd_upb,
}


def main(argv: list[str] | None = None, example: ExampleData | None = None) -> int:
    """Entry point; ``example`` replaces the built-in example data (for testing)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    skip = {"command", "seed", "out", "format", "groebner_steps", "restarts", "iters",
            "tol_rank", "tol_witness"}
    extra = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if args.command == "upb" and "in_fd" not in extra:
        extra.setdefault("dB", args.dA)
        extra.setdefault("m", extra["dA"] + extra["dB"] - 1)
    cfg = RunConfig(args.command, args.seed, args.groebner_steps, args.restarts, args.iters,
                    args.tol_rank, args.tol_witness, args.out, args.format, extra)
    try:
        if args.command == "verify-example":
            return cmd_verify_example(cfg, example)
        return _HANDLERS[args.command](cfg)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
