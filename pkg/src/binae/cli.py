"""Command-line entry point: ``binae train | eval | analyze | report``.

Exit codes: 0 success, 2 configuration error, 3 artifact/format error,
4 training diverged.
"""

import argparse
import datetime as _dt
import glob
import json
import logging
import os
import sys
from dataclasses import asdict, fields

from . import __version__
from .analysis import analyze
from .autoencoder import TrainConfig, decode_decisions, restarts_to_csv, train_with_restarts
from .classic import Codebook
from .errors import CheckpointError, ConfigError, DimensionError, FormatError, TrainingDiverged
from .evaluation import (
    DEFAULT_GRID,
    PAIRINGS,
    BlerCurve,
    EvalConfig,
    compare_curves,
    pairing_sources,
    parse_grid,
    run_bler,
)
from .nn import BINARIZED, load_checkpoint, save_checkpoint

EXIT_OK, EXIT_CONFIG, EXIT_ARTIFACT, EXIT_DIVERGED = 0, 2, 3, 4
OUT_ENV = "BINAE_OUT"

log = logging.getLogger("binae")


def default_out():
    return os.environ.get(OUT_ENV, "runs")


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _coerce(kind, value):
    if isinstance(value, str):
        if kind is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"not a boolean: {value!r}")
        try:
            return kind(float(value)) if kind is int and "e" in value.lower() else kind(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {value!r} as {kind.__name__}") from exc
    return kind(value)


def build_train_config(args):
    """Defaults < config file < flags."""
    types = TrainConfig.field_types()
    values = {}
    if args.config:
        for key, val in read_config_file(args.config).items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(types[key], val)
    for name in types:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = _coerce(types[name], flag)
    return TrainConfig(**values).validate()


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def cmd_train(args):
    if args.manifest:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        cfg = TrainConfig.from_dict(manifest["config"]).validate()
    else:
        cfg = build_train_config(args)

    out = args.out or default_out()
    os.makedirs(out, exist_ok=True)
    artifacts = {
        "checkpoint": "model.ckpt",
        "codebook": "codebook.txt",
        "history": "history.csv",
        "restarts": "restarts.csv",
    }
    manifest = {
        "tool": "binae",
        "version": __version__,
        "command": "train",
        "config": asdict(cfg),
        "seeds": [cfg.seed + i for i in range(cfg.restarts)],
        "artifacts": artifacts,
        "started": _now(),
    }
    manifest_path = os.path.join(out, "manifest.json")
    _write(manifest_path, json.dumps(manifest, indent=2) + "\n")

    model = train_with_restarts(cfg, workers=args.workers)

    save_checkpoint(model.params, os.path.join(out, artifacts["checkpoint"]), phase=BINARIZED)
    model.codebook.save(os.path.join(out, artifacts["codebook"]))
    _write(os.path.join(out, artifacts["history"]), model.history_csv())
    _write(os.path.join(out, artifacts["restarts"]), restarts_to_csv(model.restarts))

    manifest["finished"] = _now()
    manifest["selected_seed"] = model.config.seed
    manifest["restart_d_min"] = {str(r.seed): r.d_min for r in model.restarts}
    _write(manifest_path, json.dumps(manifest, indent=2) + "\n")

    for r in model.restarts:
        mark = "*" if r.selected else " "
        print(f"{mark} seed={r.seed} d_min={r.d_min} distinct={r.distinct_words} val_bler={r.val_bler:.5f}")
    print(f"wrote {out}/{{{', '.join(artifacts.values())}, manifest.json}}")
    return EXIT_OK


def _load_model(args):
    params = learned = None
    if args.model:
        params, _ = load_checkpoint(args.model)
    if args.codebook:
        learned = Codebook.load(args.codebook)
    return params, learned


def cmd_eval(args):
    pairings = list(PAIRINGS) if args.all else (args.pairing or ["hamming-ml"])
    grid = parse_grid(args.p_grid) if args.p_grid else DEFAULT_GRID
    extra = read_config_file(args.config) if args.config else {}
    trials = args.trials if args.trials is not None else _coerce(int, extra.get("trials_per_p", 1_000_000))
    seed = args.seed if args.seed is not None else _coerce(int, extra.get("seed", 0))
    if args.p_grid is None and "p_grid" in extra:
        grid = parse_grid(extra["p_grid"])

    needs_model = any(p != "hamming-ml" for p in pairings)
    if needs_model and not args.model:
        print("error: AE pairings need --model", file=sys.stderr)
        return EXIT_ARTIFACT
    params, learned = _load_model(args)

    out = args.out or default_out()
    os.makedirs(out, exist_ok=True)
    curves, status = {}, EXIT_OK
    for pairing in pairings:
        cfg = EvalConfig(p_grid=grid, trials_per_p=trials, seed=seed, pairing=pairing).validate()
        try:
            cb, dec = pairing_sources(pairing, params=params, learned=learned)
        except ValueError as exc:
            if isinstance(exc, (ConfigError, DimensionError)):
                raise
            print(f"error: skipping {pairing}: {exc}", file=sys.stderr)
            status = EXIT_ARTIFACT
            continue
        curve = run_bler(cfg, cb, dec)
        curves[pairing] = curve
        path = os.path.join(out, f"bler_{pairing}_seed{seed}.csv")
        _write(path, curve.to_csv())
        print(f"wrote {path}")

    if curves:
        text = comparison_table(curves)
        _write(os.path.join(out, f"comparison_seed{seed}.txt"), text)
        print(text, end="")
    return status


def comparison_table(curves, reference="hamming-ml"):
    """Plain-text BLER table with z-scores against ``reference`` when present."""
    names = list(curves)
    grid = curves[names[0]].p_grid
    header = ["p"] + [f"bler[{n}]" for n in names]
    others = [n for n in names if n != reference] if reference in curves else []
    comps = {n: compare_curves(curves[n], curves[reference]) for n in others}
    header += [f"z[{n}]" for n in others]
    lines = [",".join(header)]
    for i, p in enumerate(grid):
        row = [f"{p:g}"] + [f"{curves[n].points[i].bler:.6g}" for n in names]
        row += [f"{comps[n].z[i]:.3f}" for n in others]
        lines.append(",".join(row))
    for n in others:
        c = comps[n]
        verdict = "equivalent" if c.equivalent else f"differs at p={c.flagged}"
        lines.append(f"# {n} vs {reference}: max|z|={c.max_abs_z:.3f} ({verdict})")
    return "\n".join(lines) + "\n"


def cmd_analyze(args):
    cb = Codebook.load(args.codebook)
    decoder = None
    if args.decoder:
        params, _ = load_checkpoint(args.decoder, k=cb.k, n=cb.n)
        decoder = lambda y: decode_decisions(params, y)  # noqa: E731
    report = analyze(cb, decoder=decoder)
    out = args.out or default_out()
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "spectrum.csv"), report.spectrum.csv())
    _write(os.path.join(out, "structure.txt"), report.to_text())
    _write(os.path.join(out, "structure.json"), report.to_json())
    print(report.to_text(), end="")
    if report.failure_mode:
        print(f"warning: {report.failure_mode}")
    if report.agreement is not None and report.agreement.fraction < 1.0:
        print(f"warning: neural decoder disagrees with ML on {len(report.agreement.disagreements)} words")
    return EXIT_OK


def cmd_report(args):
    paths = list(args.files or [])
    if args.dir:
        paths += sorted(glob.glob(os.path.join(args.dir, "bler_*.csv")))
    if not paths:
        print("error: no BLER CSV files given", file=sys.stderr)
        return EXIT_ARTIFACT
    curves = {}
    for path in paths:
        name = os.path.basename(path)
        if name.startswith("bler_") and "_seed" in name:
            name = name[len("bler_"):name.rindex("_seed")]
        with open(path) as fh:
            curves[name] = BlerCurve.from_csv(fh.read(), name)
    text = comparison_table(curves)
    if args.out:
        _write(args.out, text)
    print(text, end="")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="binae", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="two-phase training with restarts")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--manifest", help="replay the configuration recorded in a manifest.json")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runs)")
    p.add_argument("--workers", type=int, default=1, help="parallel restarts")
    for f in fields(TrainConfig):
        kind = str if f.type is bool else f.type
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Monte Carlo BLER curves")
    p.add_argument("--pairing", action="append", choices=PAIRINGS)
    p.add_argument("--all", action="store_true", help="all four pairings")
    p.add_argument("--model", help="trained checkpoint (needed for AE pairings)")
    p.add_argument("--codebook", help="learned codebook file (default: extracted from --model)")
    p.add_argument("--p-grid", help="lo:hi:step or comma list (default 0.01:0.1:0.01)")
    p.add_argument("--trials", type=int, help="trials per grid point (default 1000000)")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="key = value file with p_grid, trials_per_p, seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="distance spectrum, linearity, Hamming equivalence")
    p.add_argument("--codebook", required=True)
    p.add_argument("--decoder", help="checkpoint whose decoder is compared with ML on every received word")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="merge BLER CSVs into one comparison table")
    p.add_argument("files", nargs="*")
    p.add_argument("--dir", help="directory holding bler_*.csv files")
    p.add_argument("--out", help="write the table here as well")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, CheckpointError, DimensionError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
