"""Command-line driver.

    hiddenqj steady  [--config PATH] [--out DIR]
    hiddenqj sample  [--config PATH] [--seed N] [--threads N] [--all-visible] [--out DIR] [--check]
    hiddenqj sweep   [--config PATH] [--seed N] [--threads N] [--out DIR] [--check]
    hiddenqj observe --trajectory SPEC [--config PATH] [--out DIR] [--svg]
    hiddenqj ift     [--config PATH] [--seed N] [--threads N] [--all-visible] [--check]

Exit status: 0 success, 1 configuration or input error, 2 numerical
failure, 3 a ``--check`` statistical test failed.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, with_overrides
from .ensemble import run_ensemble, run_sweep
from .entropy import LedgerTable, ift_estimate, second_law_check
from .errors import ConfigError, ImpossibleTrajectoryError, NumericalError
from .model import build_demon_model
from .unravel import SERIES_COLUMNS, conditioned_state_series, parse_trajectory_spec, steady_state_density

__all__ = ["main", "histogram", "render_svg", "HISTOGRAM_COLUMNS", "STEADY_COLUMNS"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

STEADY_COLUMNS = ("state", "label", "probability")
HISTOGRAM_COLUMNS = ("bin_lo", "bin_hi", "ds_env", "dsigma_y", "dsigma")
HIST_QUANTITIES = (("ds_env", "ds_env_visible"), ("dsigma_y", "dsigma_y"), ("dsigma", "dsigma"))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hiddenqj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, ensemble=True):
        p.add_argument("--config", metavar="PATH", help="INI run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides run.output_dir)")
        if ensemble:
            p.add_argument("--seed", type=int, help="run seed (overrides run.seed)")
            p.add_argument("--threads", type=int, help="worker processes (overrides run.threads)")
            p.add_argument("--check", action="store_true",
                           help="exit with status 3 if the statistical check fails")

    common(sub.add_parser("steady", help="steady-state populations"), ensemble=False)
    p = sub.add_parser("sample", help="sample trajectories and write entropy ledgers")
    common(p)
    p.add_argument("--all-visible", action="store_true", help="treat every jump as visible")
    p = sub.add_parser("sweep", help="ensemble statistics over a (gamma_x, gamma_y) grid")
    common(p)
    p.add_argument("--all-visible", action="store_true", help="treat every jump as visible")
    p = sub.add_parser("observe", help="conditioned state along a visible record")
    common(p, ensemble=False)
    p.add_argument("--trajectory", required=True, metavar="SPEC",
                   help='visible record, e.g. "g0; 4@0.9; 1@1.5; 4@2.4; e1; T=3"')
    p.add_argument("--svg", action="store_true", help="also write a minimal SVG plot")
    p = sub.add_parser("ift", help="integral fluctuation theorem estimates")
    common(p)
    p.add_argument("--all-visible", action="store_true", help="treat every jump as visible")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return with_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        threads=getattr(args, "threads", None),
        output_dir=args.out,
        all_visible=True if getattr(args, "all_visible", False) else None,
    )


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def histogram(values, lo: float = -12.0, hi: float = 12.0, width: float = 0.25):
    """Fixed-width bin edges and counts plus the number of values outside ``[lo, hi]``.

    Values are rounded to 1e-9 first so that entropies sitting on a bin edge
    are not split by rounding noise.
    """
    n_bins = int(round((hi - lo) / width))
    edges = lo + width * np.arange(n_bins + 1)
    x = np.round(np.asarray(values, dtype=float), 9) + 0.0
    inside = (x >= lo) & (x < hi)
    idx = np.floor((x[inside] - lo) / width + 1e-9).astype(int).clip(0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return edges, counts, int((~inside).sum())


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(mean: float, err: float) -> str:
    return f"{mean:+.6f} +- {err:.6f}"


# -- subcommands ----------------------------------------------------------------

def cmd_steady(cfg: RunConfig, args) -> int:
    m = build_demon_model(cfg.model)
    ss = steady_state_density(m)
    rows = [(i, lab, repr(float(p))) for i, (lab, p) in enumerate(zip(m.basis_labels, ss.probabilities))]
    _write_csv(_out_dir(cfg) / "steady.csv", STEADY_COLUMNS, rows)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(STEADY_COLUMNS)
    writer.writerows(rows)
    print(f"# gap = {ss.gap:.3e}  max_offdiag = {ss.max_offdiag:.3e}", file=sys.stderr)
    return EXIT_OK


def _ensemble(cfg: RunConfig) -> LedgerTable:
    return run_ensemble(cfg.model, cfg.horizon, cfg.n_trajectories, cfg.seed,
                        workers=cfg.workers, all_visible=cfg.all_visible)


def _ift_lines(table: LedgerTable, all_visible: bool):
    out = [("ift_dsigma", *ift_estimate(table, "dsigma"))]
    if all_visible:
        out.append(("ift_ds_tot", *ift_estimate(table, "ds_tot")))
    return out


def _ift_ok(lines) -> bool:
    return all(abs(mean - 1.0) < 3.0 * err for _, mean, err in lines)


def cmd_sample(cfg: RunConfig, args) -> int:
    table = _ensemble(cfg)
    out = _out_dir(cfg)
    with open(out / "ledger.csv", "w", newline="", encoding="utf-8") as fh:
        table.to_csv(fh)
    hists = {}
    outside = {}
    for name, col in HIST_QUANTITIES:
        edges, counts, n_out = histogram(table[col], cfg.hist_min, cfg.hist_max, cfg.hist_width)
        hists[name], outside[name] = counts, n_out
    rows = [(repr(float(edges[i])), repr(float(edges[i + 1])), *(int(hists[n][i]) for n, _ in HIST_QUANTITIES))
            for i in range(len(edges) - 1)]
    _write_csv(out / "histogram.csv", HISTOGRAM_COLUMNS, rows)

    print(f"n = {len(table)}")
    if len(table) >= 2:
        rep = second_law_check(table)
        print(f"<ds_env>          = {_fmt(rep.mean_ds_env, rep.stderr_ds_env)}")
        print(f"<dsigma_y>        = {_fmt(rep.mean_dsigma_y, rep.stderr_dsigma_y)}")
        print(f"<dsigma>          = {_fmt(rep.mean_dsigma, rep.stderr_dsigma)}")
        lines = _ift_lines(table, cfg.all_visible)
        for name, mean, err in lines:
            print(f"<exp(-{name[4:]})> = {_fmt(mean, err)}")
    for name, n_out in outside.items():
        if n_out:
            print(f"# {n_out} {name} values outside the histogram range", file=sys.stderr)
    if args.check:
        return EXIT_OK if len(table) >= 2 and _ift_ok(lines) else EXIT_CHECK
    return EXIT_OK


def cmd_ift(cfg: RunConfig, args) -> int:
    table = _ensemble(cfg)
    if len(table) < 2:
        raise ConfigError("IFT estimates need at least two trajectories", key="run.n_trajectories")
    lines = _ift_lines(table, cfg.all_visible)
    print(f"n = {len(table)}")
    for name, mean, err in lines:
        print(f"{name} = {_fmt(mean, err)}  (|mean - 1| / stderr = {abs(mean - 1) / err if err else 0:.2f})")
    if args.check:
        return EXIT_OK if _ift_ok(lines) else EXIT_CHECK
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if cfg.sweep is None:
        raise ConfigError("the sweep command needs a [sweep] section", key="sweep")
    if cfg.n_trajectories < 2:
        raise ConfigError("sweeps need at least two trajectories per point", key="run.n_trajectories")
    res = run_sweep(cfg.model, cfg.sweep.gamma_x, cfg.sweep.gamma_y, cfg.horizon,
                    cfg.n_trajectories, cfg.seed, workers=cfg.workers,
                    diagonal=cfg.sweep.diagonal, all_visible=cfg.all_visible)
    text = res.to_csv()
    with open(_out_dir(cfg) / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    if args.check:
        ok = all(pt.mean_env_plus_hidden >= -3.0 * pt.stderr_env_plus_hidden for pt in res)
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


def render_svg(t, series: dict, title: str = "", width: int = 640, height: int = 360) -> str:
    """Polylines of each named series against ``t`` on a [0, 1]-style box."""
    pad = 40
    t = np.asarray(t, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    lo = min(0.0, *(v.min() for v in ys.values()))
    hi = max(1.0, *(v.max() for v in ys.values()))
    t0, t1 = t[0], t[-1] if t[-1] > t[0] else t[0] + 1.0

    def px(tt, yy):
        x = pad + (tt - t0) / (t1 - t0) * (width - 2 * pad)
        y = height - pad - (yy - lo) / (hi - lo) * (height - 2 * pad)
        return f"{x:.2f},{y:.2f}"

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{t0:g}</text>',
             f'<text x="{width - pad}" y="{height - pad + 16}" font-size="11" text-anchor="end">{t1:g}</text>',
             f'<text x="{pad - 4}" y="{height - pad}" font-size="11" text-anchor="end">{lo:g}</text>',
             f'<text x="{pad - 4}" y="{pad + 4}" font-size="11" text-anchor="end">{hi:g}</text>']
    if title:
        parts.append(f'<text x="{width / 2}" y="{pad / 2}" font-size="13" text-anchor="middle">{title}</text>')
    for i, (name, y) in enumerate(ys.items()):
        c = colors[i % len(colors)]
        pts = " ".join(px(a, b) for a, b in zip(t, y))
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" font-size="11" fill="{c}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_observe(cfg: RunConfig, args) -> int:
    m = build_demon_model(cfg.model)
    try:
        v = parse_trajectory_spec(args.trajectory, m)
    except ValueError as exc:
        raise ConfigError(f"bad trajectory spec: {exc}", key="--trajectory") from None
    try:
        series = conditioned_state_series(m, v, cfg.grid_dt)
    except ImpossibleTrajectoryError as exc:
        raise ConfigError(f"trajectory spec impossible under this model: {exc}", key="--trajectory") from None
    out = _out_dir(cfg)
    rows = series.rows()
    header = list(SERIES_COLUMNS)
    if cfg.model.drive:
        header += ["bloch_x", "bloch_y", "bloch_z"]
        rows = [(*r, *b) for r, b in zip(rows, series.bloch())]
    _write_csv(out / "series.csv", header, [[repr(float(x)) for x in r] for r in rows])
    if args.svg:
        pops = np.einsum("nii->ni", series.rho).real
        lines = {lab: pops[:, i] for i, lab in enumerate(m.basis_labels)}
        lines["demon excited"] = series.rho_y[:, 1, 1].real
        (out / "series.svg").write_text(render_svg(series.t, lines, title=args.trajectory),
                                        encoding="utf-8")
    print(f"rows = {len(rows)}  final lognorm = {series.lognorm[-1]:.10f}")
    return EXIT_OK


COMMANDS = {"steady": cmd_steady, "sample": cmd_sample, "sweep": cmd_sweep,
            "observe": cmd_observe, "ift": cmd_ift}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"hiddenqj: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"hiddenqj: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"hiddenqj: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
