"""Command-line front end.

    multibubble {robin,predict,profiles,validate,peaks} --config CFG.json [--out DIR]
                [--eps-grid a:b:n] [--tol-overrides JSON]

Every run prints a JSON envelope (command, config hash, timestamp, tool
version, payload) and, with ``--out``, writes it to ``DIR/<command>.json``
next to any CSV tables.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 acceptance failure (``validate`` only).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .errors import ConfigurationError, MultibubbleError, NotDefinedError, ParameterError
from .greens import BallDomain, domain_from_spec
from .interaction import Configuration, assemble_M, lowest_eig
from .profiles import closed_form_W, constants, solve_W, solve_W2
from .rates import ConstantPotential, ReducedEnergyInput, mu_law, potential_from_spec, predict_rate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

CONFIG_CODES = {"CONFIG", "PARAMETER", "DOMAIN", "SINGULAR", "INSUFFICIENT_DATA", "NOT_DEFINED"}

DEFAULT_TOLERANCES = {
    "rate_rel": 0.10,
    "n4_band": 0.25,
    "prop31_rel": 0.10,
    "pohozaev": 1e-6,
    "pohozaev_order": 2.0,
    "slope": 0.3,
    "oracle_rel": 1e-6,
    "ode_residual": 1e-7,
}
DEFAULT_EPS_GRID = {4: "1e-4:1e-14:6", 5: "1e-3:1e-8:6", 6: "1e-2:1e-6:6"}
PROFILE_RMAX = 1e4


class ExitRequest(Exception):
    def __init__(self, code, envelope):
        super().__init__(code)
        self.code = code
        self.envelope = envelope


# -- serialization -------------------------------------------------------------


def _plain(obj):
    """Convert numpy values to JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(obj) -> str:
    # Python's float repr is the shortest string that round-trips binary64
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def config_hash(config: dict) -> str:
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def envelope(command, config, payload, status="ok"):
    return {
        "command": command,
        "config_hash": config_hash(config),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "tool_version": __version__,
        "backend": _accel.backend_name(),
        "status": status,
        "payload": payload,
    }


def write_csv(path, header, rows):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


# -- configuration ---------------------------------------------------------------


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return cfg


def _dim(cfg):
    n = cfg.get("N")
    if not isinstance(n, int) or isinstance(n, bool) or n < 4:
        raise ConfigurationError("N: must be an integer >= 4")
    return n


def _domain(cfg, dim):
    return domain_from_spec(cfg.get("domain", {"type": "ball"}), dim)


def _points(cfg, dim, required=True):
    pts = cfg.get("points")
    if pts is None:
        if required:
            raise ConfigurationError("points: required for this command")
        return np.empty((0, dim))
    try:
        arr = np.array(pts, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError("points: must be a list of numeric coordinate lists") from exc
    if arr.size == 0:
        return np.empty((0, dim))
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ConfigurationError(f"points: expected a list of {dim}-component coordinates")
    return arr


def _eps_grid(cfg, dim):
    from .pde.sweep import log_grid

    grid = cfg.get("eps_grid", DEFAULT_EPS_GRID.get(dim))
    if grid is None:
        raise ConfigurationError(f"eps_grid: required for N = {dim}")
    if isinstance(grid, str):
        return log_grid(grid)
    try:
        return np.asarray(grid, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError("eps_grid: must be 'a:b:n' or a list of numbers") from exc


def _tolerances(cfg):
    tol = dict(DEFAULT_TOLERANCES)
    extra = cfg.get("tolerances", {})
    if not isinstance(extra, dict):
        raise ConfigurationError("tolerances: must be an object")
    for k, v in extra.items():
        if k not in tol:
            raise ConfigurationError(f"tolerances.{k}: unknown key (known: {', '.join(sorted(tol))})")
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigurationError(f"tolerances.{k}: must be a positive number")
        tol[k] = float(v)
    return tol


def apply_overrides(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if args.eps_grid is not None:
        cfg["eps_grid"] = args.eps_grid
    if args.tol_overrides is not None:
        try:
            extra = json.loads(args.tol_overrides)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--tol-overrides: column {exc.colno}: {exc.msg}") from exc
        if not isinstance(extra, dict):
            raise ConfigurationError("--tol-overrides: must be a JSON object")
        cfg["tolerances"] = {**cfg.get("tolerances", {}), **extra}
    return cfg


# -- commands ----------------------------------------------------------------------


def cmd_robin(cfg, out_dir=None):
    dim = _dim(cfg)
    dom = _domain(cfg, dim)
    rows = []
    for k, p in enumerate(_points(cfg, dim, required=False)):
        try:
            rows.append({"index": k, "point": p, "phi": dom.robin(p), "grad_phi": dom.grad_robin(p), "code": None})
        except MultibubbleError as exc:
            rows.append({"index": k, "point": p, "phi": None, "grad_phi": None, "code": exc.code, "message": str(exc)})
    if out_dir is not None:
        header = ["index"] + [f"x{i}" for i in range(dim)] + ["phi"] + [f"dphi{i}" for i in range(dim)] + ["code"]
        table = []
        for r in rows:
            grad = list(r["grad_phi"]) if r["grad_phi"] is not None else [None] * dim
            table.append([r["index"], *map(float, r["point"]), r["phi"], *grad, r["code"] or ""])
        write_csv(Path(out_dir) / "robin.csv", header, table)
    return {"N": dim, "rows": rows}, EXIT_OK


def cmd_predict(cfg, out_dir=None):
    dim = _dim(cfg)
    dom = _domain(cfg, dim)
    pot = potential_from_spec(cfg.get("V", {"type": "const", "value": -1.0}), dim)
    config = Configuration(_points(cfg, dim))
    inp = ReducedEnergyInput(config, dom, pot)
    m = assemble_M(config, dom)
    try:
        spec = lowest_eig(m)
        spectrum = {"rho": spec.rho, "Lambda": spec.lambda_vec, "gap": spec.gap, "eigenvalues": spec.eigenvalues}
    except MultibubbleError as exc:
        spectrum = {"code": exc.code, "message": str(exc)}
    pred = predict_rate(inp)
    payload = {"N": dim, "M": m, "spectrum": spectrum, "prediction": pred.to_dict(), "V_values": inp.v_values}
    samples = []
    if "eps_grid" in cfg:
        for eps in _eps_grid(cfg, dim):
            try:
                law = mu_law(pred, float(eps))
                samples.append({"eps": float(eps), "mu": law.mu, "rate_qty": law.rate_quantity()})
            except NotDefinedError as exc:
                samples.append({"eps": float(eps), "code": exc.code, "message": str(exc)})
    payload["mu_law"] = samples
    return payload, EXIT_OK


def _profile_self_test(dim, table, tol):
    r = np.linspace(0.0, 50.0, 501)
    r = r[(r > 0) & ((r <= 0.9) | (r >= 1.1))]
    ref = closed_form_W(dim, r)
    rel = float(np.max(np.abs(table(r) - ref) / np.maximum(np.abs(ref), 1e-300)))
    return {"max_rel_diff": rel, "tolerance": tol, "passed": rel <= tol}


def cmd_profiles(cfg, out_dir=None):
    dim = _dim(cfg)
    tol = _tolerances(cfg)
    r_max = float(cfg.get("r_max", PROFILE_RMAX))
    const = constants(dim)
    w = solve_W(dim, r_max)
    payload = {"N": dim, "r_max": r_max, "d_n": const.d_n, "c_n": const.c_n, "a_n": const.a_n}
    try:
        payload["w_limit"] = const.w_limit
    except NotDefinedError as exc:
        payload["w_limit"] = {"code": exc.code, "message": str(exc)}
    payload["W_at_r_max"] = float(w.w[-1])
    payload["W_rows"] = int(w.r_grid.size)
    payload["self_test"] = _profile_self_test(dim, w, tol["oracle_rel"])
    if dim >= 5:
        w2 = solve_W2(dim, r_max)
        payload["w2_slope"] = const.w2_slope
        payload["W2_over_R"] = float(w2.w[-1] / r_max)
        payload["W2_prime_at_r_max"] = float(w2.w_prime[-1])
        if out_dir is not None:
            w2.to_csv(Path(out_dir) / "W2.csv")
    else:
        payload["w2_slope"] = {"code": NotDefinedError.code, "message": "W2 is used for N >= 5"}
    if out_dir is not None:
        w.to_csv(Path(out_dir) / "W.csv")
    return payload, EXIT_OK


def _validate_potential(cfg, dim):
    pot = potential_from_spec(cfg.get("V", {"type": "const", "value": -1.0}), dim)
    if not isinstance(pot, ConstantPotential):
        raise ConfigurationError("V: validate needs a constant potential (the shooting path is radial)")
    if not pot.level < 0:
        raise ConfigurationError(f"V.value: must be negative, got {pot.level}")
    return pot.level


def cmd_validate(cfg, out_dir=None):
    from .pde import diagnostics as diag
    from .pde.sweep import sweep_epsilon

    dim = _dim(cfg)
    dom = _domain(cfg, dim)
    if not isinstance(dom, BallDomain) or np.any(dom.center != 0.0) or dom.radius != 1.0:
        raise ConfigurationError("domain: validate runs on the unit ball centered at the origin")
    v0 = _validate_potential(cfg, dim)
    tol = _tolerances(cfg)
    grid = _eps_grid(cfg, dim)
    sweep = sweep_epsilon(dim, v0, grid, workers=int(cfg.get("workers", 1)), skip_failures=True)
    sols = sweep.solutions
    checks = {}

    pred = predict_rate(ReducedEnergyInput(Configuration(np.zeros((1, dim))), dom, ConstantPotential(v0)))
    target = float(pred.rate_limits()[0])
    if dim == 4:
        rates = sweep.rate_qty
        mono = bool(np.all(np.diff(rates) < 0) or np.all(np.diff(rates) > 0))
        band = abs(rates[-1] - target) / target
        checks["rate"] = {
            "target": target,
            "smallest_eps_value": float(rates[-1]),
            "monotone": mono,
            "rel_diff": band,
            "passed": mono and band <= tol["n4_band"],
        }
    else:
        rel = abs(sweep.fit.limit - target) / target
        checks["rate"] = {"target": target, "fit": sweep.fit.__dict__, "rel_diff": rel, "passed": rel <= tol["rate_rel"]}

    bal = diag.check_prop31(sols[-1], dom)
    neg = diag.check_prop31(sols[-1], dom, d_scale=2.0)
    checks["balance"] = {"ratio": bal.ratio, "negative_control_ratio": neg.ratio}
    if dim >= 5:
        checks["balance"]["passed"] = abs(bal.ratio - 1.0) <= tol["prop31_rel"] and abs(neg.ratio - 0.5) <= 0.05
    else:
        ratios = [diag.check_prop31(s, dom).ratio for s in sols]
        checks["balance"]["ratios"] = ratios
        checks["balance"]["passed"] = bool(abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0))

    poh = []
    for s in sols:
        rep = diag.pohozaev_check(s)
        poh.append({"eps": s.eps, "max_residual": rep.max_residual, "boundary_term": rep.boundary_term})
    conv = diag.pohozaev_convergence(sols[-1])
    checks["pohozaev"] = {
        "runs": poh,
        "orders": conv.orders,
        "passed": all(p["max_residual"] <= tol["pohozaev"] and p["boundary_term"] > 0 for p in poh)
        and min(conv.orders.values()) >= tol["pohozaev_order"],
    }

    a_r, a_q = diag.remainder_theory(dim)
    if a_q is not None:
        w_table = solve_W(dim, max(10.0, 1.01 * diag.RESIDUAL_WINDOW / float(sweep.mu.min())))
        reliable = [s for s in sols if s.mu <= diag.UNRELIABLE_MU]
        if len(reliable) >= 3:
            slopes = diag.remainder_slopes([diag.expansion_residuals(s, w_table) for s in reliable], dim, tol["slope"])
            checks["remainders"] = {**slopes.__dict__, "passed": slopes.passed}
        else:
            checks["remainders"] = {"code": "INSUFFICIENT_DATA", "passed": False}
    else:
        checks["remainders"] = {"code": NotDefinedError.code, "message": f"no remainder theory for N = {dim}"}

    checks["ode_residual"] = {"max": float(sweep.residual.max()), "passed": bool(sweep.residual.max() <= tol["ode_residual"])}
    checks["bubble_domination"] = {"C": [diag.bubble_domination(s) for s in sols]}

    if out_dir is not None:
        sweep.to_csv(Path(out_dir) / "sweep.csv")
    passed = all(c.get("passed", True) for c in checks.values())
    payload = {
        "N": dim,
        "V0": v0,
        "rows": sweep.rows(),
        "failures": [{"eps_tilde": e, "code": c, "message": m} for e, c, m in sweep.failures],
        "eps_bound": sweep.eps_bound,
        "monotone": sweep.monotone,
        "checks": checks,
        "passed": passed,
        "tolerances": tol,
    }
    return payload, EXIT_OK if passed else EXIT_ACCEPTANCE


def _array_field(spec, key):
    value = spec.get(key)
    if isinstance(value, str):
        try:
            return np.load(value)
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"peaks.{key}: cannot load {value!r}") from exc
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"peaks.{key}: must be a nested numeric list or a .npy path") from exc


def cmd_peaks(cfg, out_dir=None):
    from .pde.peaks import local_maxima, select_peaks_grid, synthetic_field, verify_peaks

    dim = _dim(cfg)
    spec = cfg.get("peaks")
    if not isinstance(spec, dict):
        raise ConfigurationError("peaks: required object")
    if "synthetic" in spec:
        syn = spec["synthetic"]
        rng = np.random.default_rng(int(syn.get("seed", 0)))
        field, spacing, dist, origin = synthetic_field(rng, dim, int(syn.get("n_bumps", 3)), int(syn.get("grid", 41)))
    else:
        field = _array_field(spec, "field")
        dist = _array_field(spec, "boundary_distance")
        spacing = spec.get("spacing", 1.0)
        origin = spec.get("origin")
    peaks = select_peaks_grid(field, spacing, dist, dim, origin)
    idx = local_maxima(field)
    origin = np.zeros(field.ndim) if origin is None else np.asarray(origin, dtype=float)
    flat = tuple(idx.T)
    check = verify_peaks(peaks, origin + idx * np.asarray(spacing, dtype=float), field[flat], dist[flat])
    payload = {
        "N": dim,
        "points": peaks.points,
        "heights": peaks.heights,
        "separation": check.separation,
        "covering": check.covering,
        "verified": check.passed,
    }
    if out_dir is not None:
        header = [f"x{i}" for i in range(field.ndim)] + ["height"]
        write_csv(Path(out_dir) / "peaks.csv", header, [[*map(float, p), float(h)] for p, h in zip(peaks.points, peaks.heights)])
    return payload, EXIT_OK if check.passed else EXIT_NUMERICAL


COMMANDS = {
    "robin": cmd_robin,
    "predict": cmd_predict,
    "profiles": cmd_profiles,
    "validate": cmd_validate,
    "peaks": cmd_peaks,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="multibubble", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", help="directory for the envelope and CSV tables")
    parser.add_argument("--eps-grid", help="log-spaced grid a:b:n, overrides the config")
    parser.add_argument("--tol-overrides", help="JSON object merged into the config's tolerances")
    return parser


def run(argv=None):
    """Execute one command; returns ``(exit_code, envelope)``."""
    args = build_parser().parse_args(argv)
    cfg = {}
    try:
        cfg = apply_overrides(load_config(args.config), args)
        out_dir = None
        if args.out:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
        payload, code = COMMANDS[args.command](cfg, out_dir)
        status = {EXIT_OK: "ok", EXIT_ACCEPTANCE: "acceptance_failed", EXIT_NUMERICAL: "numerical_failure"}[code]
    except MultibubbleError as exc:
        code = EXIT_CONFIG if exc.code in CONFIG_CODES else EXIT_NUMERICAL
        payload = {"code": exc.code, "message": str(exc)}
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            payload["diagnostics"] = diagnostics
        status = "error"
        out_dir = Path(args.out) if args.out else None
    env = envelope(args.command, cfg, payload, status)
    if out_dir is not None and out_dir.is_dir():
        (out_dir / f"{args.command}.json").write_text(dumps(env), encoding="utf-8", newline="")
    return code, env


def main(argv=None):
    code, env = run(argv)
    sys.stdout.write(dumps(env))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
