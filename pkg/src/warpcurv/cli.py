"""Command-line front end: ``warpcurv <subcommand> [flags]``.

Every subcommand prints a JSON document to stdout.  Exit status is 0 on
success, 1 when a certification or consistency check fails and 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .audit import (
    AuditReport,
    audit_grid,
    audit_profile,
    aregularity_probe,
    dumps_json,
    inequality_margins,
    profile_components,
    region6_alpha_star,
    region6_components,
    region6_parabola_min,
)
from .frame import COMPONENT_NAMES, curvature_components
from .model import MODEL_CONSTANTS, model_state, solve_alpha
from .schedule import ScheduleError, WarpProfile, build_profile, write_profile_csv

log = logging.getLogger("warpcurv")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class AuditConfig:
    epsilon: float = 0.01
    k: float = 40.0
    r_max: float | None = None
    scan_min: float | None = None
    smoothing_delta: float = 1e-3
    grid_points: int = 2000
    plane_samples: int = 10_000
    refine_steps: int = 50
    rng_seed: int = 0
    with_tail: bool = False
    out_dir: str | None = None

    def validate(self) -> "AuditConfig":
        if not (0 < self.epsilon < 0.05):
            raise ConfigError("epsilon must lie in (0, 0.05)")
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if self.grid_points < 100:
            raise ConfigError("grid_points must be at least 100")
        if self.plane_samples < 1000:
            raise ConfigError("plane_samples must be at least 1000")
        if self.smoothing_delta <= 0:
            raise ConfigError("smoothing_delta must be positive")
        return self

    @classmethod
    def from_sources(cls, file_path: str | None, overrides: dict) -> "AuditConfig":
        """JSON file first, then explicit flags on top."""
        data = {}
        if file_path:
            try:
                data = json.loads(Path(file_path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config file: {exc}") from exc
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data).validate()


def _build(cfg: AuditConfig) -> WarpProfile:
    return build_profile(cfg.epsilon, cfg.k, cfg.r_max, cfg.smoothing_delta, cfg.with_tail)


def _out_dir(cfg: AuditConfig) -> Path | None:
    if cfg.out_dir is None:
        return None
    p = Path(cfg.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def emit_plot_data(profile, report: AuditReport, path) -> tuple[Path, Path]:
    """Write ``warp_functions.csv`` and ``curvature.csv`` into the directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    r = report.r
    d = profile.log_eval(r)
    rid = profile.region_id(r)
    warp_path = path / "warp_functions.csv"
    with open(warp_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "region_id", "v", "h_theta", "h_r", "log_v", "log_h_theta", "log_h_r"])
        for i in range(r.size):
            logs = [d["log_v"][i], d["log_h_theta"][i], d["log_h_r"][i]]
            w.writerow([_fmt(r[i]), int(rid[i]), *(_fmt(math.exp(x)) if x < 709 else "inf" for x in logs),
                        *(_fmt(x) for x in logs)])
    curv_path = path / "curvature.csv"
    with open(curv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", *COMPONENT_NAMES, "K_min", "K_max"])
        for i in range(r.size):
            w.writerow([_fmt(r[i]), *(_fmt(x) for x in report.components[i]), _fmt(report.k_min[i]),
                        _fmt(report.k_max_effective[i])])
    return warp_path, curv_path


def _schedule_dict(profile: WarpProfile) -> dict:
    s = profile.schedule
    out = {k: v for k, v in asdict(s).items()}
    out["o_eps"], out["p_eps"] = s.o_eps, s.p_eps
    out["tau_eps"] = s.tau_eps
    return out


# ---------------------------------------------------------------- subcommands

def cmd_check_model(args, cfg) -> tuple[dict, int]:
    r = np.geomspace(0.05, 6.0, 64)
    comp = curvature_components(model_state(r)).as_array()
    dev = float(np.max(np.abs(comp - MODEL_CONSTANTS)))
    doc = {"constants": dict(zip(COMPONENT_NAMES, MODEL_CONSTANTS.tolist())),
           "radii": 64, "max_deviation": dev}
    return doc, EXIT_OK if dev < 1e-10 else EXIT_FAIL


def cmd_solve_alpha(args, cfg) -> tuple[dict, int]:
    out = {}
    ok = True
    for r in args.r:
        alpha, cond = solve_alpha(r)
        out[_fmt(r)] = {"alpha": list(alpha), "condition_number": cond}
        ok &= bool(np.allclose(alpha, (0.5, 0.5, -0.5), atol=1e-10, rtol=0))
    return {"solutions": out}, EXIT_OK if ok else EXIT_FAIL


def cmd_build_profile(args, cfg) -> tuple[dict, int]:
    prof = _build(cfg)
    doc = {"schedule": _schedule_dict(prof),
           "windows": [{"name": n, "lo": lo, "hi": hi} for n, lo, hi in prof.windows()]}
    out = _out_dir(cfg)
    if out is not None:
        s = prof.schedule
        lo = cfg.scan_min if cfg.scan_min is not None else (s.p_eps - 10 if cfg.with_tail else s.a_eps - 10)
        r = np.union1d(np.linspace(lo, s.r_max, cfg.grid_points), audit_grid(prof, cfg.grid_points, lo))
        write_profile_csv(prof, r, out / "profile.csv")
        doc["profile_csv"] = str(out / "profile.csv")
    return doc, EXIT_OK


def cmd_export_csv(args, cfg) -> tuple[dict, int]:
    if cfg.out_dir is None:
        raise ConfigError("export-csv needs --out-dir")
    prof = _build(cfg)
    s = prof.schedule
    lo = cfg.scan_min if cfg.scan_min is not None else (s.p_eps - 10 if cfg.with_tail else s.a_eps - 10)
    r = audit_grid(prof, cfg.grid_points, lo)
    out = _out_dir(cfg)
    write_profile_csv(prof, r, out / "profile.csv")
    comps = profile_components(prof, r)
    margins = inequality_margins(comps).as_array()
    # plot data without plane extremes would be incomplete, so run the audit on this grid
    report = audit_profile(prof, grid=r, n_samples=cfg.plane_samples, refine_steps=cfg.refine_steps,
                           seed=cfg.rng_seed)
    w, c = emit_plot_data(prof, report, out)
    return {"profile_csv": str(out / "profile.csv"), "warp_functions_csv": str(w), "curvature_csv": str(c),
            "rows": int(r.size), "min_margin": float(margins.min())}, EXIT_OK


def cmd_audit(args, cfg) -> tuple[dict, int]:
    prof = _build(cfg)
    s = prof.schedule
    lo = cfg.scan_min if cfg.scan_min is not None else (s.p_eps - 10 if cfg.with_tail else s.a_eps - 10)
    report = audit_profile(prof, n_points=cfg.grid_points, scan_min=lo, n_samples=cfg.plane_samples,
                           refine_steps=cfg.refine_steps, seed=cfg.rng_seed)
    report.config.update({k: v for k, v in asdict(cfg).items() if k != "out_dir"})
    doc = report.summary()
    out = _out_dir(cfg)
    if out is not None:
        report.write_json(out / "audit.json")
        report.write_csv(out / "audit.csv")
        emit_plot_data(prof, report, out)
    return doc, EXIT_FAIL if report.failed else EXIT_OK


def cmd_region6_check(args, cfg) -> tuple[dict, int]:
    from .schedule import phi_cubic
    from .frame import WarpState

    prof = _build(cfg)
    s = prof.schedule
    r = np.linspace(s.e_eps, s.f_eps, 500)
    phi = phi_cubic(s)
    p, dp, ddp = phi(r)
    st = WarpState(r=r, v=np.sinh(r / 2), h_theta=np.cosh(r / 2), h_r=p,
                   dv=np.cosh(r / 2) / 2, dh_theta=np.sinh(r / 2) / 2, dh_r=dp,
                   ddv=np.sinh(r / 2) / 4, ddh_theta=np.cosh(r / 2) / 4, ddh_r=ddp)
    dev = float(np.max(np.abs(region6_components(s, r).as_array() - curvature_components(st).as_array())))
    a_star = region6_alpha_star(s)
    r_star = s.e_eps * (1 + a_star)
    m = inequality_margins(region6_components(s, np.array([r_star])))
    doc = {"max_deviation": dev, "alpha_star": a_star, "p_alpha_star": region6_parabola_min(s),
           "margins_at_alpha_star": dict(zip(("m_1a", "m_1b", "m_2a", "m_2b", "m_3a", "m_3b"),
                                             m.as_array()[0].tolist()))}
    return doc, EXIT_OK if dev < 1e-9 else EXIT_FAIL


def cmd_tail_probe(args, cfg) -> tuple[dict, int]:
    cfg.with_tail = True
    prof = _build(cfg)
    s = prof.schedule
    scan = np.linspace(s.p_eps - 10, s.o_eps, max(100, cfg.grid_points // 10))
    report = audit_profile(prof, grid=scan, n_samples=cfg.plane_samples, refine_steps=cfg.refine_steps,
                           seed=cfg.rng_seed)
    probe = aregularity_probe(prof, max_order=args.max_order,
                              windows={"p-10..p-5": (s.p_eps - 10, s.p_eps - 5),
                                       "p-5..p": (s.p_eps - 5, s.p_eps)})
    doc = {"scan_sup_k": report.global_sup_k, "scan_points": int(scan.size),
           "probe": probe.to_dict(), "finite": probe.finite()}
    return doc, EXIT_FAIL if report.failed or not probe.finite() else EXIT_OK


COMMANDS = {
    "check-model": cmd_check_model,
    "solve-alpha": cmd_solve_alpha,
    "build-profile": cmd_build_profile,
    "audit": cmd_audit,
    "region6-check": cmd_region6_check,
    "tail-probe": cmd_tail_probe,
    "export-csv": cmd_export_csv,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with AuditConfig fields; flags override it")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--k", type=float)
    common.add_argument("--r-max", dest="r_max", type=float)
    common.add_argument("--scan-min", dest="scan_min", type=float)
    common.add_argument("--grid-points", dest="grid_points", type=int)
    common.add_argument("--plane-samples", dest="plane_samples", type=int)
    common.add_argument("--refine-steps", dest="refine_steps", type=int)
    common.add_argument("--seed", dest="rng_seed", type=int)
    common.add_argument("--smoothing-delta", dest="smoothing_delta", type=float)
    common.add_argument("--with-tail", dest="with_tail", action="store_const", const=True)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="warpcurv", description="Warped-metric curvature toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "solve-alpha":
            p.add_argument("--r", type=float, nargs="+", default=[0.5, 1.0, 2.0])
        if name == "tail-probe":
            p.add_argument("--max-order", type=int, default=3)
    return parser


_CONFIG_KEYS = {f.name for f in fields(AuditConfig)}


def run_command(argv) -> int:
    try:
        args = make_parser().parse_args(list(argv))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS}
        cfg = AuditConfig.from_sources(args.config, overrides)
        doc, code = COMMANDS[args.command](args, cfg)
    except (ConfigError, ScheduleError) as exc:
        print(f"warpcurv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(dumps_json(doc))
    return code


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
