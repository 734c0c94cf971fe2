"""Command-line experiment runner.

`msmprec run` executes a named preset or a free-form sweep and writes a
versioned CSV plus a standalone plot script; `msmprec selftest` runs the
invariant suite.  Exit codes: 0 success, 1 selftest failure, 2 configuration
error, 3 solver failure.
"""

import argparse
import dataclasses
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .exceptions import ConfigError, SolverFailure
from .precoder import mutation
from .selftest import CHECKS, run_selftests
from .sim import (BER_FIELDS, SimConfig, alpha_range_stats, distortion_stats,
                  iteration_stats, run_ber, write_csv)

FIG_MODULATIONS = ("qpsk", "8psk", "16psk", "16qam", "64qam")


def _grid(lo, hi, step):
    if step <= 0 or hi < lo:
        raise ConfigError("need ptx step > 0 and max >= min")
    n = int(round((hi - lo) / step))
    values = [lo + k * step for k in range(n + 1)]
    if values[-1] > hi + 1e-9:
        values.pop()
    return tuple(float(v) for v in values)


# Each preset is (kind, base overrides, sweep axis).  The sweep axis expands
# into one sub-config per value; desk scales are documented config, chosen to
# finish in minutes rather than to match the originals' sample counts.
PRESETS = {
    "fig5": ("ber",
             dict(modulation="qpsk", phase_count=4,
                  precoders=("msm", "qwf", "wf-ce", "wf"),
                  n_channels=20, vectors_per_channel=128),
             None),
    "fig6": ("ber",
             dict(phase_count=4, precoders=("msm", "wf"),
                  n_channels=10, vectors_per_channel=128),
             ("modulation", FIG_MODULATIONS)),
    "fig7": ("ber",
             dict(phase_count=8, precoders=("msm", "wf"),
                  n_channels=4, vectors_per_channel=32),
             ("modulation", FIG_MODULATIONS)),
    "fig8": ("ber",
             dict(modulation="16qam", phase_count=4,
                  precoders=("msm", "wf-ce"), ptx_db=(10.0,),
                  n_channels=8, vectors_per_channel=128),
             ("nu", tuple(round(0.05 * k, 2) for k in range(11)))),
    "table1": ("distortion",
               dict(modulation="16qam", phase_count=4,
                    n_channels=4, vectors_per_channel=256),
               ("block_size", (1, 4))),
    "table2": ("alpha-range-joint",
               dict(modulation="16qam", phase_count=4,
                    n_channels=10, vectors_per_channel=100),
               ("n_users", (2, 8, 14))),
    "table3": ("alpha-range-per-user",
               dict(modulation="16qam", phase_count=4,
                    n_channels=10, vectors_per_channel=100),
               ("n_users", (2, 8, 14))),
    "table4": ("iterations",
               dict(n_channels=3, vectors_per_channel=10),
               ("cell", tuple((m, q) for q in (4, 8) for m in FIG_MODULATIONS))),
}

_CONFIG_KEYS = {f.name for f in dataclasses.fields(SimConfig)}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="msmprec",
        description="margin-maximizing constant-envelope precoding experiments")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run a preset or free-form BER sweep")
    run.add_argument("preset", nargs="?", choices=sorted(PRESETS),
                     help="named experiment; omit for a free-form sweep")
    run.add_argument("--config", help="TOML file with SimConfig field overrides")
    run.add_argument("--seed", type=int)
    run.add_argument("--channels", type=int, dest="n_channels")
    run.add_argument("--vectors", type=int, dest="vectors_per_channel")
    run.add_argument("--workers", type=int)
    run.add_argument("--out-dir", default=None,
                     help="output directory (default: $MSMPREC_OUT_DIR or .)")
    run.add_argument("--ptx-min-db", type=float)
    run.add_argument("--ptx-max-db", type=float)
    run.add_argument("--ptx-step-db", type=float, default=1.0)
    run.add_argument("--nu", type=float)
    run.add_argument("--q", type=int, dest="phase_count")
    run.add_argument("--mod", dest="modulation")
    run.add_argument("--precoder", action="append",
                     help="repeatable; msm, wf, wf-ce, or qwf")

    st = sub.add_parser("selftest", help="run the invariant suite")
    st.add_argument("--only", action="append",
                    help=f"restrict to named checks ({', '.join(n for n, _ in CHECKS)})")
    st.add_argument("--mutate", default=None,
                    help="inject a named build mutation (e.g. sr-sign) and rerun")
    return parser


def _load_config_file(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config file: {exc}") from exc
    bad = set(data) - _CONFIG_KEYS
    if bad:
        raise ConfigError(f"unknown config keys {sorted(bad)}")
    for key in ("precoders", "ptx_db"):
        if key in data:
            data[key] = tuple(data[key])
    return data


def _flag_overrides(args):
    over = {}
    for key in ("seed", "n_channels", "vectors_per_channel", "workers",
                "nu", "phase_count", "modulation"):
        value = getattr(args, key)
        if value is not None:
            over[key] = value
    if args.precoder:
        over["precoders"] = tuple(args.precoder)
    if args.ptx_min_db is not None or args.ptx_max_db is not None:
        if args.ptx_min_db is None or args.ptx_max_db is None:
            raise ConfigError("give both --ptx-min-db and --ptx-max-db")
        over["ptx_db"] = _grid(args.ptx_min_db, args.ptx_max_db,
                               args.ptx_step_db)
    return over


def _make_config(base, overrides):
    merged = dict(base)
    merged.update(overrides)
    try:
        return SimConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _expand_preset(name, overrides):
    """One (kind, label, sub-run list) description for a preset run."""
    kind, base, sweep = PRESETS[name]
    base = dict(base)
    subs = []
    if sweep is None:
        subs.append((None, _make_config(base, overrides)))
    elif sweep[0] == "block_size":
        for b in sweep[1]:
            subs.append((b, _make_config(base, overrides)))
    elif sweep[0] == "cell":
        for mod, q in sweep[1]:
            cfg = _make_config({**base, "modulation": mod, "phase_count": q},
                               overrides)
            subs.append(((mod, q), cfg))
    else:
        axis, values = sweep
        for v in values:
            subs.append((v, _make_config({**base, axis: v}, overrides)))
    return kind, subs


def _run_kind(kind, subs):
    """Execute sub-runs; returns (fieldnames, rows, config lines)."""
    rows, lines = [], []
    if kind == "ber":
        for _, cfg in subs:
            lines.append(cfg.describe())
            for rec in run_ber(cfg):
                rows.append({f: getattr(rec, f) for f in BER_FIELDS})
        return BER_FIELDS, rows, lines
    if kind == "distortion":
        fields = ("block_size", "distorted_fraction", "mse", "n_vectors")
        for b, cfg in subs:
            lines.append(f"block_size={b} {cfg.describe()}")
            st = distortion_stats(cfg, b)
            rows.append({f: getattr(st, f) for f in fields})
        return fields, rows, lines
    if kind in ("alpha-range-joint", "alpha-range-per-user"):
        column = "joint" if kind.endswith("joint") else "per_user"
        fields = ("n_users", f"{column}_rel_range", "n_vectors")
        for _, cfg in subs:
            lines.append(cfg.describe())
            st = alpha_range_stats(cfg)
            rows.append({"n_users": st.n_users,
                         f"{column}_rel_range": getattr(st, column),
                         "n_vectors": st.n_vectors})
        return fields, rows, lines
    if kind == "iterations":
        fields = ("modulation", "phase_count", "mean_iterations",
                  "mean_op_count", "n_solves")
        for _, cfg in subs:
            lines.append(cfg.describe())
            st = iteration_stats(cfg)
            rows.append({f: getattr(st, f) for f in fields})
        return fields, rows, lines
    raise ConfigError(f"unknown experiment kind {kind!r}")


def _print_summary(kind, fields, rows):
    if kind == "ber":
        curves = {}
        for row in rows:
            key = (row["precoder"], row["modulation"], row["nu"])
            curves.setdefault(key, []).append(row)
        for (prec, mod, nu), pts in curves.items():
            lo, hi = pts[0], pts[-1]
            print(f"  {prec:>6} {mod:>6} nu={nu:g}: "
                  f"BER {lo['ber']:.3e} @ {lo['ptx_db']:g} dB -> "
                  f"{hi['ber']:.3e} @ {hi['ptx_db']:g} dB "
                  f"({hi['bits_total']} bits/point)")
        return
    print("  " + " | ".join(fields))
    for row in rows:
        print("  " + " | ".join(
            format(row[f], ".6g") if isinstance(row[f], float) else str(row[f])
            for f in fields))


_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Render @CSV@ (auto-generated companion script; edit freely)."""
import argparse


def load(path):
    kind, rows = "ber", []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                if line.startswith("# kind:"):
                    kind = line.split(":", 1)[1].strip()
                continue
            if line:
                rows.append(line.split(","))
    header = rows[0]
    return kind, header, [dict(zip(header, r)) for r in rows[1:]]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", default="@CSV@")
    ap.add_argument("--out", default="@PNG@")
    args = ap.parse_args()
    kind, header, rows = load(args.csv)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    if kind == "ber":
        over_nu = len({r["nu"] for r in rows}) > 1
        xfield = "nu" if over_nu else "ptx_db"
        curves = {}
        for r in rows:
            key = (r["precoder"], r["modulation"],
                   "" if over_nu else "nu=" + r["nu"])
            curves.setdefault(key, []).append(
                (float(r[xfield]), float(r["ber"])))
        for key in sorted(curves):
            pts = sorted(curves[key])
            ax.semilogy([x for x, _ in pts],
                        [max(y, 1e-7) for _, y in pts],
                        marker="o", label=" ".join(k for k in key if k))
        ax.set_xlabel("CSI error fraction nu" if over_nu
                      else "transmit power [dB]")
        ax.set_ylabel("uncoded BER")
        ax.grid(True, which="both", alpha=0.3)
    else:
        labels = [str(r[header[0]]) for r in rows]
        xs = range(len(rows))
        for field in header[1:]:
            try:
                ys = [float(r[field]) for r in rows]
            except ValueError:
                continue
            ax.plot(xs, ys, marker="s", label=field)
        ax.set_xticks(list(xs), labels, rotation=30)
        ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print("wrote", args.out)


if __name__ == "__main__":
    main()
'''


def _write_plot_script(out_dir, stem, csv_name):
    path = os.path.join(out_dir, f"plot_{stem}.py")
    body = (_PLOT_TEMPLATE.replace("@CSV@", csv_name)
            .replace("@PNG@", f"{stem}.png"))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(body)
    return path


def _cmd_run(args):
    overrides = _flag_overrides(args)
    if args.config:
        file_over = _load_config_file(args.config)
        file_over.update(overrides)
        overrides = file_over
    if args.preset:
        kind, subs = _expand_preset(args.preset, overrides)
        stem = args.preset
    else:
        kind, subs = "ber", [(None, _make_config({}, overrides))]
        stem = "run"
    out_dir = args.out_dir or os.environ.get("MSMPREC_OUT_DIR", ".")
    os.makedirs(out_dir, exist_ok=True)

    fields, rows, lines = _run_kind(kind, subs)
    csv_name = f"{stem}.csv"
    csv_path = os.path.join(out_dir, csv_name)
    write_csv(csv_path, kind, fields, rows, lines)
    plot_path = _write_plot_script(out_dir, stem, csv_name)
    print(f"{stem}: {len(rows)} rows -> {csv_path} (plot: {plot_path})")
    _print_summary(kind, fields, rows)
    return 0


def _cmd_selftest(args):
    names = set(args.only) if args.only else None
    if names:
        known = {n for n, _ in CHECKS}
        if names - known:
            raise ConfigError(f"unknown checks {sorted(names - known)}")
    if args.mutate:
        with mutation(args.mutate):
            results = run_selftests(names)
    else:
        results = run_selftests(names)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        failed += not ok
        print(f"{name:<32} {status}  {detail}")
    if args.mutate:
        print(f"(mutation {args.mutate!r} active; failures above are expected "
              "to include the targeted invariant)")
    return 1 if failed else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_selftest(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
