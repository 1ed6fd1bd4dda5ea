"""File-based experiment pipelines used by the command line front end.

Every pipeline writes into its own output directory and echoes the resolved
config as ``config.json`` next to its results.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import snapshot
from .config import ExperimentConfig
from .coupling import CouplingPlan, rate_sweep
from .data import label_with_teacher, load_batch, sample_batch, save_batch
from .diagnostics import report_ladder, write_reports
from .errors import ConfigError, MFRNNError
from .svg import line_chart
from .trainer import TrainingAborted, TrajectoryLog, init_weights, train

log = logging.getLogger(__name__)

BATCH_FILE = "batch.csv"
TEACHER_FILE = "teacher.mfw"


def write_config(cfg: ExperimentConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps())


def build_teacher(cfg: ExperimentConfig):
    if cfg.teacher_snapshot:
        return snapshot.load(cfg.teacher_snapshot)
    tcfg = cfg.net.with_width(cfg.teacher_n)
    return init_weights(tcfg, cfg.teacher_law, cfg.teacher_seed)


def generate_data(cfg: ExperimentConfig, out) -> Path:
    """Sample, label and save a batch plus the teacher snapshot into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    teacher = build_teacher(cfg)
    batch = label_with_teacher(sample_batch(cfg.map_spec, cfg.m, cfg.net.L, cfg.data_seed), teacher)
    save_batch(batch, out / BATCH_FILE, extra_meta={"teacher_n": teacher.n, "teacher_seed": cfg.teacher_seed})
    snapshot.save(teacher, out / TEACHER_FILE)
    write_config(cfg, out)
    return out / BATCH_FILE


def find_batch(data_dir) -> Path:
    path = Path(data_dir) / BATCH_FILE
    if not path.exists():
        raise ConfigError(f"no {BATCH_FILE} in {data_dir}; run gen-data first")
    return path


def ensure_data(cfg: ExperimentConfig, data_dir) -> Path:
    data_dir = Path(data_dir)
    if not (data_dir / BATCH_FILE).exists():
        generate_data(cfg, data_dir)
    return data_dir / BATCH_FILE


def run_training(cfg: ExperimentConfig, data_dir, out, resume=None) -> TrajectoryLog:
    """Train one student.  With ``resume`` (an MFW1 snapshot of this run) the
    earlier metrics rows are kept and training continues from that step."""
    out = Path(out)
    batch = load_batch(find_batch(data_dir))
    write_config(cfg, out)
    tc = cfg.train
    if resume is None:
        w0 = init_weights(cfg.net, cfg.student_law(), tc.seed)
        traj = train(w0, batch, tc, out)
    else:
        w0 = snapshot.load(resume, activation=cfg.net.activation)
        if w0.config != cfg.net:
            raise ConfigError("resume snapshot does not match the configured network")
        start = int(round(w0.t / tc.beta))
        prior = TrajectoryLog.from_csv(out / "metrics.csv")
        prior.records = [r for r in prior.records if r[0] < start]
        if len(prior.records) != start:
            raise ConfigError(f"metrics.csv lacks rows before step {start}; cannot resume")
        # clamp counter carried by the first row being recomputed
        clamp = _clamp_at(out / "metrics.csv", start)
        for s in tc.snapshot_steps():
            p = out / "snapshots" / f"step_{s:08d}.mfw"
            if s < start and p.exists():
                prior.snapshots[s] = p
        traj = train(w0, batch, tc, out, start_step=start, clamp_count=clamp, prior=prior)
    snapshot.save(traj.final, out / "final.mfw")
    return traj


def _clamp_at(metrics_path, step):
    full = TrajectoryLog.from_csv(metrics_path)
    for r in full.records:
        if r[0] == step:
            return int(r[8])
    return full.clamp_count


def _sweep_task(args):
    cfg_raw, width, seed, data_dir, out = args
    from .config import parse
    cfg = parse(cfg_raw, seed=seed, width=width)
    try:
        run_training(cfg, data_dir, out)
        return out, None
    except MFRNNError as exc:
        return out, str(exc)


def run_sweep(cfg: ExperimentConfig, out, jobs: int = 1) -> dict:
    """Train every (width, seed) combination on one shared dataset."""
    out = Path(out)
    write_config(cfg, out)
    data_dir = out / "data"
    ensure_data(cfg, data_dir)
    widths = cfg.sweep.get("widths") or [cfg.net.n]
    seeds = cfg.sweep.get("seeds") or [cfg.train.seed]
    raw = cfg.resolved()
    raw["init"]["student"] = cfg.student_block
    tasks = [(raw, n, s, data_dir, out / f"n{n:04d}_seed{s}") for n in widths for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    failed = {str(p.name): err for p, err in results if err}
    status = {"runs": [p.name for p, _ in results], "failed": failed, "partial": bool(failed)}
    (out / "sweep.json").write_text(json.dumps(status, indent=2, sort_keys=True) + "\n")
    return status


def run_coupling(cfg: ExperimentConfig, out, jobs: int = 1, data_dir=None):
    out = Path(out)
    write_config(cfg, out)
    data_dir = Path(data_dir) if data_dir else out / "data"
    batch = load_batch(ensure_data(cfg, data_dir))
    cp = cfg.coupling
    n_ref = int(cp.get("N_ref", cfg.net.n))
    ref_net = cfg.net.with_width(n_ref)
    reference = init_weights(ref_net, cfg.student_law(n_ref), cfg.train.seed)
    plan = CouplingPlan.build(reference, cp["widths"], int(cp.get("seed", cfg.train.seed)),
                              replace=bool(cp.get("replace", False)))
    run = rate_sweep(plan, batch, cfg.train, jobs=jobs, out_dir=out)
    with open(out / "dtau.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "tau", "D_tau", "slope_fit"])
        for n, tau, d in run.dtau_table:
            wr.writerow([n, repr(float(tau)), repr(float(d)), repr(float(run.slope))])
    (out / "dtau_summary.json").write_text(json.dumps(run.summary(), indent=2, sort_keys=True) + "\n")
    return run


def load_snapshots(run_dir) -> list:
    snaps = sorted((Path(run_dir) / "snapshots").glob("step_*.mfw"))
    return [snapshot.load(p) for p in snaps]


def run_diagnose(run_dir, data_dir=None) -> Path:
    run_dir = Path(run_dir)
    snaps = load_snapshots(run_dir)
    if len(snaps) < 1:
        raise ConfigError(f"no snapshots in {run_dir / 'snapshots'}")
    if data_dir is None:
        data_dir = run_dir if (run_dir / BATCH_FILE).exists() else run_dir.parent / "data"
    batch = load_batch(find_batch(data_dir))
    reports = report_ladder(snaps, batch)
    return write_reports(reports, snaps[0].config.L, run_dir / "stationarity.csv")


EXPECTED = ("metrics.csv", "*/metrics.csv", "dtau.csv", "stationarity.csv")


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {h: np.array([float(r[j]) for r in body]) for j, h in enumerate(header)}
    return cols


def _loss_svg(metrics_path, title):
    cols = _read_csv(metrics_path)
    return line_chart([("MSE", cols["step"], cols["loss_x2"])], title=title,
                      xlabel="training step", ylabel="MSE", logx=True, logy=True)


def run_report(run_dir) -> list[Path]:
    """Write SVG charts and ``summary.txt`` for whatever results ``run_dir`` holds."""
    run_dir = Path(run_dir)
    written, lines = [], []
    if (run_dir / "metrics.csv").exists():
        p = run_dir / "loss.svg"
        p.write_text(_loss_svg(run_dir / "metrics.csv", f"loss: {run_dir.name}"))
        written.append(p)
        cols = _read_csv(run_dir / "metrics.csv")
        lines.append(f"{run_dir.name}: steps={int(cols['step'][-1])} initial MSE={cols['loss_x2'][0]:.6g} "
                     f"final MSE={cols['loss_x2'][-1]:.6g} clamps={int(cols['clamp_count'][-1])}")
    for sub in sorted(d for d in run_dir.iterdir() if d.is_dir() and (d / "metrics.csv").exists()):
        p = run_dir / f"loss_{sub.name}.svg"
        p.write_text(_loss_svg(sub / "metrics.csv", f"loss: {sub.name}"))
        written.append(p)
        cols = _read_csv(sub / "metrics.csv")
        lines.append(f"{sub.name}: initial MSE={cols['loss_x2'][0]:.6g} final MSE={cols['loss_x2'][-1]:.6g}")
    if (run_dir / "dtau.csv").exists():
        cols = _read_csv(run_dir / "dtau.csv")
        series = [("D_tau", cols["n"], cols["D_tau"])]
        summary_path = run_dir / "dtau_summary.json"
        if summary_path.exists():
            s = json.loads(summary_path.read_text())
            if np.isfinite(s["slope"]):
                ns = cols["n"]
                series.append((f"fit slope {s['slope']:.3f}", ns, np.exp(s["intercept"]) * ns ** s["slope"], "dashed"))
                lines.append(f"coupling: N_ref={s['N_ref']} slope={s['slope']:.6g} r2={s['r2']:.4f}")
        p = run_dir / "dtau.svg"
        p.write_text(line_chart(series, title="D_tau vs width", xlabel="n", ylabel="D_tau",
                                logx=True, logy=True, markers=True))
        written.append(p)
    if (run_dir / "stationarity.csv").exists():
        cols = _read_csv(run_dir / "stationarity.csv")
        names = [h for h in cols if h != "t"]
        series = [(h, cols["t"], cols[h]) for h in names]
        p = run_dir / "stationarity.svg"
        p.write_text(line_chart(series, title="stationarity functionals", xlabel="t",
                                ylabel="value", logy=True))
        written.append(p)
        lines.append(f"stationarity: q1 {cols['q1'][0]:.6g} -> {cols['q1'][-1]:.6g}")
    if not written:
        raise ConfigError(f"nothing to report in {run_dir}; expected one of: {', '.join(EXPECTED)}")
    (run_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    return written
