"""Command-line driver.

    mhdbkm run --config run.cfg [--nu 1 --dt 1e-3 --t-end 1 --grid 64 --ic orszag-tang --seed 0 --out dir]
    mhdbkm ic --config run.cfg
    mhdbkm resume --config run.cfg --snapshot dir/snap_00000100.bin
    mhdbkm check-inequalities [--count 200 --seed 0 --ids 2d-linf,gn-i1-s2 --out dir]

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(suspected blow-up, non-finite state, CFL violation). Every run-type command
ends ``diag.ndjson`` with a status line.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import inequalities as ineq
from .config import ParseError, RunConfig, ValidationError, load_config
from .diagnostics import Monitor, bkm_accumulate, ndjson_line
from .dynamics import CflViolation, StepperConfig, run
from .scenarios import make_ic
from .snapshot import SnapshotError, read_snapshot, write_snapshot
from .spectral import Grid

log = logging.getLogger("mhdbkm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def snapshot_name(step: int) -> str:
    return f"snap_{step:08d}.bin"


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def save_snapshot(state, out: Path, step: int, monitor: Monitor | None) -> Path:
    """Snapshot plus a JSON sidecar holding the step index and monitor accumulators."""
    path = out / snapshot_name(step)
    write_snapshot(state, path)
    meta = {"step": step, "t": state.t, "monitor": monitor.state_dict() if monitor else {}}
    tmp = _sidecar(path).with_suffix(".json.tmp")
    tmp.write_text(json.dumps(meta))
    os.replace(tmp, _sidecar(path))
    return path


def _config(args, resume: bool = False) -> RunConfig:
    flags = {
        "nu": args.nu,
        "dt": args.dt,
        "t_end": args.t_end,
        "n_per_axis": args.grid,
        "ic": args.ic,
        "seed": args.seed,
        "dim": args.dim,
    }
    if args.config:
        cfg = load_config(args.config, resume=resume, **flags)
    else:
        cfg = RunConfig.from_mapping({k: v for k, v in flags.items() if v is not None}, resume=resume)
    out = args.out or os.environ.get("MHD_OUT_DIR")
    return cfg.with_overrides(resume=resume, out_dir=out) if out else cfg


def _simulate(cfg: RunConfig, state, out: Path, step0: int, monitor: Monitor, mode: str) -> int:
    stepper = StepperConfig(cfg.nu, cfg.dt, cfg.scheme, cfg.cfl_limit)
    out.mkdir(parents=True, exist_ok=True)
    last_good = {"state": state, "step": step0}

    with open(out / "diag.ndjson", mode) as fh:

        def on_record(rec):
            fh.write(ndjson_line(rec))
            fh.flush()

        def on_step(s, n):
            last_good.update(state=s, step=n)
            if n % cfg.snapshot_cadence == 0:
                save_snapshot(s, out, n, monitor)

        status = {"status": "ok"}
        code = EXIT_OK
        try:
            result = run(
                state, stepper, cfg.t_end, cadence=cfg.diagnostics_cadence, monitor=monitor,
                on_record=on_record, on_step=on_step, step0=step0,
            )
        except CflViolation as exc:
            status, code = {"status": "cfl-violation", "t": exc.t, "message": str(exc)}, EXIT_NUMERICAL
        else:
            if not result.ok:
                status = {"status": result.status, "t": result.state.t, "message": result.reason}
                code = EXIT_NUMERICAL
            else:
                bkm = bkm_accumulate(result.records, cfg.epsilon_threshold) if result.records else None
                status.update(
                    t=result.state.t,
                    steps=result.steps,
                    bkm_tail_start=bkm.tail_start if bkm else None,
                )
        # the last finite state, also when the run stopped early
        save_snapshot(last_good["state"], out, last_good["step"], monitor)
        fh.write(ndjson_line(status))
    return code


def cmd_run(args) -> int:
    cfg = _config(args)
    grid = Grid(cfg.dim, cfg.n_per_axis)
    state = make_ic(cfg.ic, grid, cfg.ic_params, cfg.seed)
    monitor = Monitor(cfg.nu, bkm_ceiling=cfg.bkm_ceiling)
    return _simulate(cfg, state, Path(cfg.out_dir), 0, monitor, "w")


def cmd_ic(args) -> int:
    cfg = _config(args)
    grid = Grid(cfg.dim, cfg.n_per_axis)
    state = make_ic(cfg.ic, grid, cfg.ic_params, cfg.seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = save_snapshot(state, out, 0, None)
    print(path)
    return EXIT_OK


def cmd_resume(args) -> int:
    cfg = _config(args, resume=True)
    snap = Path(args.snapshot)
    state = read_snapshot(snap)
    if state.grid.dim != cfg.dim or state.grid.n != cfg.n_per_axis:
        raise ValidationError("n_per_axis", f"snapshot grid is {state.grid.dim}D n={state.grid.n}")
    step0, acc = 0, {}
    if _sidecar(snap).exists():
        meta = json.loads(_sidecar(snap).read_text())
        step0, acc = int(meta["step"]), meta.get("monitor", {})
    monitor = Monitor(cfg.nu, bkm_ceiling=cfg.bkm_ceiling)
    monitor.load_state_dict(acc)
    if cfg.t_end < state.t:
        raise ValidationError("t_end", f">= snapshot time {state.t:.17g}")
    out = Path(cfg.out_dir)
    if cfg.t_end == state.t:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "diag.ndjson", "a") as fh:
            fh.write(ndjson_line({"status": "ok", "t": state.t, "steps": 0}))
        return EXIT_OK
    return _simulate(cfg, state, out, step0, monitor, "a")


def cmd_check_inequalities(args) -> int:
    ids = args.ids.split(",") if args.ids else list(ineq.DEFAULT_SUITE) + ["log-sobolev"]
    out = Path(args.out or os.environ.get("MHD_OUT_DIR") or "out") / "inequalities"
    out.mkdir(parents=True, exist_ok=True)
    for iid in ids:
        try:
            fam = ineq.default_family(iid, args.count, args.seed)
        except KeyError as exc:
            raise ValidationError("ids", str(exc)) from None
        if iid.startswith("log-sobolev"):
            fam = ineq.FieldFamily("amplitude-sweep", count=4, seed=args.seed, band=4, n=64)
        report = ineq.fit_constants(fam, iid)
        (out / f"{iid}.ndjson").write_text("".join(report.ndjson_lines()))
        print(f"{iid:16s} fitted={report.fitted_constant:.6g} failed={len(report.errors)} scaling={report.scaling_check}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhdbkm", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--nu", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--grid", type=int, help="points per axis")
        sp.add_argument("--dim", type=int)
        sp.add_argument("--ic", help="scenario id, optionally with name=value parameters")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory (overrides MHD_OUT_DIR)")

    for name, fn in (("run", cmd_run), ("ic", cmd_ic), ("resume", cmd_resume)):
        sp = sub.add_parser(name)
        run_flags(sp)
        if name == "resume":
            sp.add_argument("--snapshot", required=True)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("check-inequalities")
    sp.add_argument("--count", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--ids", help="comma-separated inequality ids")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_check_inequalities)
    return p


def _status_line(args, payload: dict) -> None:
    out = getattr(args, "out", None) or os.environ.get("MHD_OUT_DIR")
    if out is None and getattr(args, "config", None):
        try:
            from .config import parse_config_text

            out = parse_config_text(Path(args.config).read_text()).get("out_dir")
        except (OSError, ParseError):
            out = None
    if out is None or args.command == "check-inequalities":
        return
    Path(out).mkdir(parents=True, exist_ok=True)
    with open(Path(out) / "diag.ndjson", "a") as fh:
        fh.write(ndjson_line(payload))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _status_line(args, {"status": "config-error", "message": str(exc)})
        return EXIT_CONFIG
    except (SnapshotError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        _status_line(args, {"status": "io-error", "message": str(exc)})
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
