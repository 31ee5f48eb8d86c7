"""Command-line front end: wires configs to the solve/verify/spectrum
pipeline and emits machine-readable JSON/CSV reports.

Exit codes: 0 success, 2 when the verdict is NoSoliton/OutOfTheory (a
distinguishable machine outcome), 1 on errors.  All numeric output is JSON
with sorted keys and floats printed to 17 significant digits, so identical
invocations with identical seeds produce byte-identical reports.
"""

from __future__ import annotations

import os

# honor the thread cap before numpy spins up its pools
_threads = os.environ.get("CHOQUARD_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import csv
import io
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import classify as classify_mod
from .grid import Field, GridSpec, write_field
from .linops import LinearizedPair, build_spectral_report, growing_mode, index_count
from .params import ModelParams, ParamError, classify_admissibility, gamma_big
from .solver import (
    GroundState,
    InadmissibleError,
    SolverError,
    SolverOptions,
    solve_classical_state,
    solve_ground_state,
    to_classical,
    verify_identities,
)

__all__ = ["main"]


# ---------------------------------------------------------------------------
# deterministic JSON


def _format_scalar(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError(f"non-finite float in report: {x}")
        return format(x, ".17g")
    raise TypeError(f"unsupported scalar {type(x)}")


def emit_json(obj) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""

    def render(o) -> str:
        if o is None:
            return "null"
        if isinstance(o, str):
            import json as _json
            return _json.dumps(o)
        if isinstance(o, dict):
            items = sorted(o.items())
            inner = ",".join(f"{render(str(k))}:{render(v)}" for k, v in items)
            return "{" + inner + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ",".join(render(v) for v in o) + "]"
        return _format_scalar(o)

    return render(obj)


def _atomic_write(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _emit(payload_text: str, out: str | None) -> None:
    if out:
        _atomic_write(out, payload_text.encode() + b"\n")
    else:
        sys.stdout.write(payload_text + "\n")


# ---------------------------------------------------------------------------
# configuration

_MODEL_KEYS = {"d", "beta", "alpha", "gamma", "p", "mass", "kg_omega"}
_GRID_KEYS = {"n", "box"}
_SOLVER_KEYS = {"tol", "max_iter", "rearrange_every", "init_sigma", "seed",
                "precondition", "boundary_tol"}
_OUTPUT_KEYS = {"out"}


class ConfigError(ValueError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    allowed = {"model": _MODEL_KEYS, "grid": _GRID_KEYS,
               "solver": _SOLVER_KEYS, "output": _OUTPUT_KEYS}
    unknown_sections = set(cfg) - set(allowed)
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
    for section, keys in allowed.items():
        extra = set(cfg.get(section, {})) - keys
        if extra:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")
    return cfg


def _effective_config(args) -> dict:
    cfg = {"model": {}, "grid": {}, "solver": {}, "output": {}}
    if getattr(args, "config", None):
        file_cfg = _load_config(args.config)
        for section in cfg:
            cfg[section].update(file_cfg.get(section, {}))
    over = {
        ("model", "d"): args.d,
        ("model", "beta"): args.beta,
        ("model", "alpha"): args.alpha,
        ("model", "gamma"): args.gamma,
        ("model", "p"): args.p,
        ("model", "mass"): args.mass,
        ("model", "kg_omega"): getattr(args, "omega", None),
        ("grid", "n"): args.grid,
        ("grid", "box"): args.box,
        ("solver", "tol"): args.tol,
        ("solver", "max_iter"): args.max_iter,
        ("solver", "seed"): args.seed,
        ("output", "out"): args.out,
    }
    for (section, key), val in over.items():
        if val is not None:
            cfg[section][key] = val
    # defaults, echoed into every report
    cfg["model"].setdefault("beta", 1.0)
    cfg["model"].setdefault("mass", 1.0)
    cfg["grid"].setdefault("n", [2048])
    cfg["grid"].setdefault("box", 32.0)
    cfg["solver"].setdefault("tol", 1e-8)
    cfg["solver"].setdefault("max_iter", 50_000)
    cfg["solver"].setdefault("rearrange_every", 25)
    cfg["solver"].setdefault("seed", 0)
    cfg["solver"].setdefault("precondition", True)
    cfg["solver"].setdefault("boundary_tol", 1e-4)
    return cfg


def _params_from_config(cfg: dict) -> ModelParams:
    m = cfg["model"]
    for key in ("d", "p"):
        if key not in m:
            raise ConfigError(f"missing model parameter {key!r}")
    if "alpha" not in m and "gamma" not in m:
        raise ConfigError("one of alpha/gamma is required")
    try:
        return ModelParams.create(
            d=int(m["d"]), beta=m["beta"], p=m["p"], mass=m["mass"],
            alpha=m.get("alpha"), gamma=m.get("gamma"),
            kg_omega=m.get("kg_omega"),
        )
    except ParamError as exc:
        raise ConfigError(str(exc)) from exc


def _grid_from_config(cfg: dict, d: int) -> GridSpec:
    n = cfg["grid"]["n"]
    if isinstance(n, (int, float)):
        dims = (int(n),) * d
    else:
        dims = tuple(int(v) for v in n)
        if len(dims) == 1 and d > 1:
            dims = dims * d
    if len(dims) != d:
        raise ConfigError(f"grid has {len(dims)} axes but d = {d}")
    try:
        return GridSpec(dims, float(cfg["grid"]["box"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _solver_options(cfg: dict) -> SolverOptions:
    s = cfg["solver"]
    return SolverOptions(
        tol=float(s["tol"]),
        max_iter=int(s["max_iter"]),
        rearrange_every=int(s["rearrange_every"]),
        init_sigma=s.get("init_sigma"),
        seed=int(s["seed"]),
        precondition=bool(s["precondition"]),
        boundary_tol=float(s["boundary_tol"]),
    )


def _gs_payload(gs: GroundState) -> dict:
    return {
        "normalization": gs.normalization,
        "omega": gs.omega,
        "energy": gs.breakdown.E,
        "kinetic": gs.breakdown.J,
        "interaction": gs.breakdown.K,
        "mass": gs.breakdown.mass,
        "residual": gs.residual,
        "iterations": gs.iterations,
        "grid": {"dims": list(gs.phi.grid.dims),
                 "half_width": gs.phi.grid.half_width},
    }


# ---------------------------------------------------------------------------
# commands


def cmd_check_params(args) -> int:
    cfg = _effective_config(args)
    params = _params_from_config(cfg)
    verdict = classify_admissibility(params)
    payload = {
        "config": cfg,
        "regime": verdict.regime,
        "gamma_big": verdict.gamma_big,
        "notes": list(verdict.notes),
    }
    _emit(emit_json(payload), cfg["output"].get("out"))
    return 2 if verdict.regime in ("NoSoliton", "OutOfTheory") else 0


def cmd_classify(args) -> int:
    cfg = _effective_config(args)
    params = _params_from_config(cfg)
    if args.model == "hartree":
        v = classify_mod.classify_hartree(params)
    else:
        if params.kg_omega is None:
            raise ConfigError("the kg model needs --omega")
        v = classify_mod.classify_kg(params)
    payload = {"config": cfg}
    payload.update(v.as_dict())
    _emit(emit_json(payload), cfg["output"].get("out"))
    return 2 if v.verdict in ("NoSoliton", "OutOfTheory") else 0


def _parse_range(spec: str) -> list[float]:
    """start:stop:step inclusive-ish range, or a single value."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ConfigError(f"range must be start:stop:step, got {spec!r}")
    start, stop, step = (float(v) for v in parts)
    if step <= 0:
        raise ConfigError("range step must be positive")
    count = int(round((stop - start) / step)) + 1
    vals = [start + i * step for i in range(count)]
    return [v for v in vals if v <= stop + 1e-12 * max(1.0, abs(stop))]


def cmd_sweep(args) -> int:
    if args.d is None:
        raise ConfigError("sweep needs --d")
    alphas = _parse_range(args.alpha_range)
    ps = _parse_range(args.p_range)
    rows = classify_mod.sweep(args.model, int(args.d), alphas, ps,
                              kg_omega=args.omega)
    text = classify_mod.sweep_to_csv(rows)
    if args.out:
        _atomic_write(args.out, text.encode())
    else:
        sys.stdout.write(text)
    return 0


def _run_solve(cfg: dict):
    params = _params_from_config(cfg)
    grid = _grid_from_config(cfg, params.d)
    opts = _solver_options(cfg)
    verdict = classify_admissibility(params)
    if verdict.regime in ("NoSoliton", "OutOfTheory"):
        return None, verdict, None
    if verdict.regime in ("FractionalNormalized", "Both"):
        gs = solve_ground_state(params, grid, opts)
    else:  # ClassicalExistence only
        gs = solve_classical_state(params, grid, opts)
    return gs, verdict, opts


def cmd_solve(args) -> int:
    cfg = _effective_config(args)
    gs, verdict, _ = _run_solve(cfg)
    out = cfg["output"].get("out")
    if gs is None:
        payload = {"config": cfg, "regime": verdict.regime,
                   "gamma_big": verdict.gamma_big, "notes": list(verdict.notes)}
        _emit(emit_json(payload), out)
        return 2
    payload = {"config": cfg, "regime": verdict.regime,
               "gamma_big": gamma_big(gs.params)}
    payload["ground_state"] = _gs_payload(gs)
    if out:
        write_field(gs.phi, out + ".fld")
        payload["field_file"] = out + ".fld"
        _atomic_write(out + ".profile.csv", _profile_csv(gs).encode())
        payload["profile_file"] = out + ".profile.csv"
    _emit(emit_json(payload), out)
    return 0


def _profile_csv(gs: GroundState) -> str:
    """Plot-ready (radius, phi) rows, sorted by radius."""
    r = np.sqrt(gs.phi.grid.radius_sq).ravel()
    v = gs.phi.values.ravel()
    order = np.argsort(r, kind="stable")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["radius", "phi"])
    for i in order:
        writer.writerow([format(r[i], ".17g"), format(v[i], ".17g")])
    return buf.getvalue()


def cmd_verify(args) -> int:
    cfg = _effective_config(args)
    gs, verdict, opts = _run_solve(cfg)
    out = cfg["output"].get("out")
    if gs is None:
        payload = {"config": cfg, "regime": verdict.regime,
                   "gamma_big": verdict.gamma_big}
        _emit(emit_json(payload), out)
        return 2
    companion = None
    if args.companion_mass and gs.normalization == "mass":
        params2 = ModelParams.create(
            d=gs.params.d, beta=gs.params.beta, p=gs.params.p,
            mass=float(args.companion_mass), alpha=gs.params.alpha,
            kg_omega=gs.params.kg_omega)
        companion = solve_ground_state(params2, gs.phi.grid, opts)
    report = verify_identities(gs, companion=companion)
    payload = {"config": cfg, "regime": verdict.regime,
               "ground_state": _gs_payload(gs),
               "identities": report.as_dict(),
               "all_passed": report.all_passed}
    _emit(emit_json(payload), out)
    return 0


def _spectral_state(gs: GroundState) -> GroundState:
    """Spectral analysis runs on the unit-frequency normalization at beta = 1
    (where the closed forms live); fractional states are analyzed as solved."""
    if gs.params.beta == 1.0 and gs.normalization == "mass":
        return to_classical(gs)
    return gs


def cmd_spectrum(args) -> int:
    cfg = _effective_config(args)
    gs, verdict, _ = _run_solve(cfg)
    out = cfg["output"].get("out")
    if gs is None:
        payload = {"config": cfg, "regime": verdict.regime,
                   "gamma_big": verdict.gamma_big}
        _emit(emit_json(payload), out)
        return 2
    state = _spectral_state(gs)
    pair = LinearizedPair(state)
    report = build_spectral_report(
        pair, kg_omega=gs.params.kg_omega,
        seed=int(cfg["solver"]["seed"]))
    payload = {"config": cfg, "regime": verdict.regime,
               "ground_state": _gs_payload(state),
               "spectral": report.as_dict(),
               "index_count": index_count(report)}
    if getattr(args, "dump_modes", None) and report.growing_mode is not None:
        gm = growing_mode(pair, seed=int(cfg["solver"]["seed"]))
        write_field(gm.v1, args.dump_modes + ".v1.fld")
        write_field(gm.v2, args.dump_modes + ".v2.fld")
        payload["mode_files"] = [args.dump_modes + ".v1.fld",
                                 args.dump_modes + ".v2.fld"]
    _emit(emit_json(payload), out)
    return 0


def cmd_stability(args) -> int:
    cfg = _effective_config(args)
    gs, verdict, _ = _run_solve(cfg)
    out = cfg["output"].get("out")
    if gs is None:
        payload = {"config": cfg, "regime": verdict.regime,
                   "gamma_big": verdict.gamma_big, "verdict": verdict.regime}
        _emit(emit_json(payload), out)
        return 2
    identities = verify_identities(gs)
    state = _spectral_state(gs)
    pair = LinearizedPair(state)
    report = build_spectral_report(
        pair, kg_omega=gs.params.kg_omega,
        seed=int(cfg["solver"]["seed"]))
    idx = index_count(report)
    numeric = "Unstable" if report.growing_mode is not None else "Stable"
    payload = {
        "config": cfg,
        "regime": verdict.regime,
        "gamma_big": gamma_big(gs.params),
        "ground_state": _gs_payload(state),
        "identities": identities.as_dict(),
        "spectral": report.as_dict(),
        "index_count": idx,
        "verdict": numeric,
    }
    if gs.params.beta == 1.0:
        closed = classify_mod.classify_hartree(gs.params)
        payload["closed_form_verdict"] = closed.verdict
        payload["closed_form_rule"] = closed.rule
        payload["verdicts_agree"] = closed.verdict == numeric
    _emit(emit_json(payload), out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--d", type=int)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--p", type=float)
    sub.add_argument("--mass", type=float)
    sub.add_argument("--omega", type=float)
    sub.add_argument("--grid", type=lambda s: [int(v) for v in s.split(",")])
    sub.add_argument("--box", type=float)
    sub.add_argument("--tol", type=float)
    sub.add_argument("--max-iter", dest="max_iter", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")
    sub.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="choquard",
        description="Ground states and spectral stability of Hartree-type "
                    "standing waves")
    sp = ap.add_subparsers(dest="command", required=True)

    s = sp.add_parser("check-params", help="admissibility/regime verdict")
    _add_common(s)
    s.set_defaults(fn=cmd_check_params)

    s = sp.add_parser("classify", help="closed-form stability verdict")
    s.add_argument("--model", choices=("hartree", "kg"), required=True)
    _add_common(s)
    s.set_defaults(fn=cmd_classify)

    s = sp.add_parser("sweep", help="closed-form verdict table as CSV")
    s.add_argument("--model", choices=("hartree", "kg"), required=True)
    s.add_argument("--alpha-range", dest="alpha_range", required=True,
                   help="alpha or start:stop:step")
    s.add_argument("--p-range", dest="p_range", required=True,
                   help="p or start:stop:step")
    s.add_argument("--d", type=int)
    s.add_argument("--omega", type=float)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_sweep)

    s = sp.add_parser("solve", help="compute a ground state")
    _add_common(s)
    s.set_defaults(fn=cmd_solve)

    s = sp.add_parser("verify", help="solve and check the identities")
    _add_common(s)
    s.add_argument("--companion-mass", dest="companion_mass", type=float,
                   help="second solve at this mass for the power-law checks")
    s.set_defaults(fn=cmd_verify)

    s = sp.add_parser("spectrum", help="solve and analyze the linearization")
    _add_common(s)
    s.add_argument("--dump-modes", dest="dump_modes",
                   help="write the growing-mode pair as FLD1 files at this prefix")
    s.set_defaults(fn=cmd_spectrum)

    s = sp.add_parser("stability", help="full pipeline: solve, verify, spectra, verdict")
    _add_common(s)
    s.set_defaults(fn=cmd_stability)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParamError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except InadmissibleError as exc:
        sys.stderr.write(f"inadmissible parameters: {exc}\n")
        return 2
    except SolverError as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
