"""Command-line front end.

    lfvm pv-loop        [--config FILE]            film P-E loop
    lfvm idvg           [--config FILE]            I_D-V_GS sweeps per AR + summary
    lfvm cell-demo      SCRIPT                     2T1AF op-by-op log
    lfvm fit            {retention,endurance} CSV  extrapolation fit
    lfvm array-compare  [--config FILE]            retention power table

Config files are ``key = value`` with ``[section]`` headers.  Exit status is
0 on success, 1 on a model/solver/data error and 2 on a usage or config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import array as arr_mod
from . import calibrated
from . import cell as cell_mod
from . import device as dev_mod
from . import lgd
from . import reliability as rel


class UsageError(Exception):
    pass


class ModelError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return dev_mod.parse_sections(p.read_text(), str(p))
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None


def _get(cfg: dict, section: str, key: str, default, conv=float):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        return default
    try:
        return conv(raw)
    except ValueError:
        raise UsageError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _floats(raw: str) -> List[float]:
    return [float(x) for x in raw.replace(",", " ").split()]


def _device(cfg: dict) -> dev_mod.Device:
    path = cfg.get("device", {}).get("file")
    try:
        if path:
            if not Path(path).is_file():
                raise UsageError(f"device file not found: {path}")
            return dev_mod.load_device(path)
        return dev_mod.device_from_sections(cfg)
    except (KeyError, ValueError, configparser.Error) as exc:
        raise UsageError(f"bad device parameters: {exc}") from None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_pv_loop(args) -> int:
    cfg = load_config(args.config)
    if args.params:
        if not Path(args.params).is_file():
            raise UsageError(f"params file not found: {args.params}")
        cfg = {**cfg, **load_config(args.params)}
    base = calibrated.calibrated_lgd()
    vals = {k: _get(cfg, "lgd", k, getattr(base, k)) for k in ("alpha", "beta", "xi", "p_scale", "e_scale")}
    try:
        params = lgd.LgdParams(**vals)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    t_afe = _get(cfg, "sweep", "t_afe", calibrated.T_AFE)
    amp_v = _get(cfg, "sweep", "amplitude_v", 4.0)
    step_v = _get(cfg, "sweep", "step_v", 0.005)
    cycles = _get(cfg, "sweep", "cycles", 1, int)
    if step_v <= 0 or amp_v == 0 or cycles < 1:
        raise UsageError("[sweep] needs step_v > 0, amplitude_v != 0, cycles >= 1")
    scale = 1.0 / (t_afe * params.e_scale)
    wave = lgd.triangle(amp_v * scale, step_v * scale, cycles=cycles)
    e, p, sw = lgd.trace_pe_loop(params, wave)
    v = e / scale
    if args.format == "json":
        text = render_json({"v_afe_V": v.tolist(), "e_V_per_m": (e * params.e_scale).tolist(),
                            "p_C_per_m2": (p * params.p_scale).tolist(), "switching": sw.tolist()})
    else:
        text = render_csv(("v_afe_V", "e_V_per_m", "p_C_per_m2", "switching"),
                          zip(v, e * params.e_scale, p * params.p_scale, sw))
    emit(text, args.out)
    return 0


def _idvg_job(job):
    device, ar, v_low, v_high, step, v_m, v_ds, c_v = job
    d = device.with_ar(ar)
    tr = dev_mod.measure(d, v_low, v_high, step, v_ds, c_v=c_v)
    try:
        m = dev_mod.extract_window_metrics(tr, v_m)
        summ = {"ar": ar, "mw_V": m.mw, "on_off": m.on_off, "v_th_p_V": m.v_th_p, "v_th_e_V": m.v_th_e,
                "i_on_A": m.i_on, "i_off_A": m.i_off}
    except dev_mod.ExtractionError as exc:
        summ = {"ar": ar, "mw_V": None, "on_off": None, "v_th_p_V": None, "v_th_e_V": None,
                "i_on_A": None, "i_off_A": None, "error": str(exc)}
    return ar, tr, summ


def _pmap(fn, jobs, parallel: int):
    if parallel and parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_idvg(args) -> int:
    cfg = load_config(args.config)
    device = _device(cfg)
    ars = _floats(cfg.get("sweep", {}).get("ar", "8, 16, 24"))
    v_low = _get(cfg, "sweep", "v_low", -2.0)
    v_high = _get(cfg, "sweep", "v_high", 4.0)
    step = _get(cfg, "sweep", "step", 0.005)
    v_m = _get(cfg, "sweep", "v_m", 1.5)
    v_ds = _get(cfg, "sweep", "v_ds", 0.1)
    c_v = _get(cfg, "sweep", "c_v", 0, int) != 0
    if step <= 0 or v_high <= v_low:
        raise UsageError("[sweep] needs step > 0 and v_high > v_low")
    if step > dev_mod.MAX_STEP:
        raise UsageError(f"[sweep] step must be <= {dev_mod.MAX_STEP} V (quasi-static)")
    jobs = [(device, ar, v_low, v_high, step, v_m, v_ds, c_v) for ar in ars]
    results = _pmap(_idvg_job, jobs, args.parallel)
    summary = [s for _, _, s in results]
    if args.format == "json":
        traces = []
        for ar, tr, _ in results:
            traces.append({"ar": ar, "v_gs_V": tr.v_gs.tolist(), "i_d_A": tr.i_d.tolist(),
                           "c_gg_F": tr.c_gg.tolist(), "p_C_per_m2": tr.p.tolist(),
                           "v_int_V": tr.v_int.tolist(),
                           "branch": ["up" if d > 0 else "down" if d < 0 else "flat" for d in tr.direction]})
        text = render_json({"summary": summary, "traces": traces})
    else:
        rows = []
        for ar, tr, _ in results:
            rows.extend((ar,) + r for r in tr.to_rows())
        text = render_csv(("ar",) + dev_mod.SweepTrace.CSV_HEADER, rows)
    emit(text, args.out)
    keys = ("ar", "mw_V", "on_off", "v_th_p_V", "v_th_e_V")
    sys.stderr.write(render_csv(keys, ([s[k] for k in keys] for s in summary)))
    return 0


def cmd_cell_demo(args) -> int:
    cfg = load_config(args.config)
    path = args.script or cfg.get("cell", {}).get("script")
    if not path:
        raise UsageError("cell-demo needs a script path")
    if not Path(path).is_file():
        raise UsageError(f"script not found: {path}")
    try:
        ops = cell_mod.parse_script(Path(path).read_text())
    except cell_mod.ScriptError as exc:
        raise UsageError(f"{path}: {exc}") from None
    volts = cell_mod.OperatingVoltages(**{k: _get(cfg, "volts", k, getattr(cell_mod.OperatingVoltages(), k))
                                          for k in ("v_w", "v_e", "v_h", "v_m", "vdd_read", "access_vth")})
    try:
        cell_mod.validate(volts)
    except cell_mod.ConfigError as exc:
        raise UsageError(str(exc)) from None
    rows = _get(cfg, "cell", "rows", 1, int)
    cols = _get(cfg, "cell", "cols", 1, int)
    model = cell_mod.CellModel(_device(cfg)) if cfg else cell_mod.default_model()
    log = [] if not ops else cell_mod.run_script(ops, cell_mod.CellArray(rows, cols, model, volts))
    if args.format == "csv":
        text = render_csv(("op", "args", "node_v_V", "p_C_per_m2", "bit_read", "hold_power_W"),
                          ((r["op"], " ".join(_fmt(a) for a in r["args"]), r["node_v"], r["p"], r["bit_read"],
                            r["hold_power"]) for r in log))
    else:
        text = render_json([{"op": r["op"], "args": r["args"], "node_v_V": r["node_v"], "p_C_per_m2": r["p"],
                             "bit_read": r["bit_read"], "hold_power_W": r["hold_power"]} for r in log])
    emit(text, args.out)
    return 0


def cmd_fit(args) -> int:
    if not Path(args.csv).is_file():
        raise UsageError(f"csv file not found: {args.csv}")
    try:
        if args.kind == "retention":
            on, off = rel.read_retention_csv(args.csv)
            res = rel.fit_retention(on, off, args.ratio_min)
        else:
            pts = rel.read_endurance_csv(args.csv)
            res = rel.fit_endurance(pts, args.mw0)
    except KeyError as exc:
        raise UsageError(f"{args.csv}: missing column {exc}") from None
    except (rel.FitError, ValueError) as exc:
        raise ModelError(f"{args.csv}: {exc}") from None
    d = {"kind": args.kind, **res.as_dict()}
    if args.format == "csv":
        text = render_csv(tuple(d), [tuple(d.values())])
    else:
        text = render_json(d)
    emit(text, args.out)
    return 0


def _tech_from_cfg(cfg, name, tech: arr_mod.TechParams) -> arr_mod.TechParams:
    sec = cfg.get(name.lower(), {})
    if not sec:
        return tech
    try:
        return replace(tech, **{k: float(v) for k, v in sec.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"[{name.lower()}]: {exc}") from None


def cmd_array_compare(args) -> int:
    cfg = load_config(args.config)
    techs = arr_mod.calibrated_techs()
    names = cfg.get("array", {}).get("techs", " ".join(arr_mod.TECHS)).replace(",", " ").split()
    for n in names:
        if n not in techs:
            raise UsageError(f"unknown technology {n!r}")
    chosen = [_tech_from_cfg(cfg, n, techs[n]) for n in names]
    lo = _get(cfg, "array", "min_bits", 1024, int)
    hi = _get(cfg, "array", "max_bits", 262144, int)
    try:
        sizes = arr_mod.standard_sizes(lo, hi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = arr_mod.compare(sizes, chosen)
    header = ("n_bits", "rows", "tech", "power_W", "inaccessible_fraction", "savings_vs_2t1af")
    rows = [(r.n_bits, r.rows, r.tech, r.power_w, r.inaccessible_fraction, r.savings_vs_af) for r in rep.rows]
    if args.format == "json":
        text = render_json({"rows": [dict(zip(header, r)) for r in rows],
                            "claimed_savings": rep.claimed_savings,
                            "max_savings": {t: rep.max_savings(t) for t in names if t != arr_mod.AF2T1}})
    else:
        text = render_csv(header, rows)
    emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def common(fmt="csv"):
        # a fresh parent per subcommand: parents share action objects, so a
        # shared one would leak per-command defaults
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--config", help="key = value config file with [sections]")
        c.add_argument("--out", help="output path (default stdout)")
        c.add_argument("--format", choices=("csv", "json"), default=fmt)
        c.add_argument("--parallel", type=int, default=1, metavar="N")
        return c

    ap = argparse.ArgumentParser(prog="lfvm", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("pv-loop", parents=[common()], help="film P-E loop")
    p.add_argument("--params", help="LGD parameter file ([lgd] section)")
    p.set_defaults(func=cmd_pv_loop)
    p = sub.add_parser("idvg", parents=[common()], help="I_D-V_GS sweeps")
    p.set_defaults(func=cmd_idvg)
    p = sub.add_parser("cell-demo", parents=[common("json")], help="run a 2T1AF op script")
    p.add_argument("script", nargs="?")
    p.set_defaults(func=cmd_cell_demo)
    p = sub.add_parser("fit", parents=[common("json")], help="retention/endurance fit")
    p.add_argument("kind", choices=("retention", "endurance"))
    p.add_argument("csv")
    p.add_argument("--ratio-min", type=float, default=10.0)
    p.add_argument("--mw0", type=float, default=None)
    p.set_defaults(func=cmd_fit)
    p = sub.add_parser("array-compare", parents=[common()], help="array retention power table")
    p.set_defaults(func=cmd_array_compare)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.parallel < 1:
        sys.stderr.write("lfvm: --parallel must be >= 1\n")
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"lfvm: {exc}\n")
        return 2
    except (ModelError, dev_mod.SolverError, dev_mod.ExtractionError, lgd.LgdError) as exc:
        sys.stderr.write(f"lfvm: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
