"""Command line harness.

Subcommands: generate, localize, case-study, ingest, report. Every command
takes ``--config`` (a JSON document, or a manifest written by an earlier run)
and explicit flags override config fields. Each run writes ``manifest.json``
next to its outputs; passing that manifest back as ``--config`` reproduces
the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import Case, ChannelParams, RssDataset, generate_1d_dataset, generate_2d_dataset, split_indices
from .errors import SchemaError
from .io import (
    aps_to_csv,
    dataset_to_csv,
    fmt,
    load_dataset,
    load_scene,
    read_table,
    write_text,
)
from .localization import ErrorReport
from .pipeline import METHODS, SIDE_INFO_METHODS, LocalizeOptions, case_study, quantile_table, run_methods

log = logging.getLogger("crowdloc")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, code=2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    if "config" in doc and "command" in doc:  # a manifest
        return dict(doc["config"])
    return doc


def _abspath(p):
    return None if p is None else os.path.abspath(p)


def _channel(doc: dict | None) -> ChannelParams:
    return ChannelParams(**(doc or {}))


def _write_outputs(out: Path, files: dict[str, str], command: str, config: dict, notes=()) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in sorted(files.items()):
        write_text(out / name, text)
        digests[name] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "command": command,
        "version": f"crowdloc {__version__}",
        "config": {k: v for k, v in config.items() if k != "out"},  # location-independent
        "outputs": digests,
        "notes": list(notes),
    }
    write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def cmd_generate(cfg: dict) -> dict:
    """Synthetic datasets: ``mode`` "2d" (scene file) or "1d" (single AP on a line)."""
    out = Path(cfg.get("out", "out/generate"))
    seed = int(cfg.get("seed", 0))
    params = _channel(cfg.get("channel"))
    files = {}
    if cfg.get("mode", "2d") == "1d":
        ds, _ = generate_1d_dataset(
            params,
            Case(int(cfg.get("case", 2))),
            int(cfg.get("m", 200)),
            cfg.get("d0"),
            float(cfg.get("d_max", 25.0)),
            tuple(cfg.get("beta", (2.0, 2.0))),
            seed,
        )
        files["dataset.csv"] = dataset_to_csv(ds)
        files["aps.csv"] = "id,x,y\nap0,0.0,0.0\n"
    else:
        if not cfg.get("scene"):
            raise CliError("generate (2d) needs a scene file")
        scene = load_scene(cfg["scene"])
        m = int(cfg.get("m", 4000))
        labeled = bool(cfg.get("labeled", True))
        variants = cfg.get("variants") or {"": {}}
        for name, overrides in sorted(variants.items()):
            ds = generate_2d_dataset(scene, params.replace(**overrides), m, seed, int(cfg.get("field_cap", 4096)))
            files[f"dataset_{name}.csv" if name else "dataset.csv"] = dataset_to_csv(ds, labeled)
        files["aps.csv"] = aps_to_csv(scene.layout)
    return _write_outputs(out, files, "generate", cfg)


def _split_data(cfg: dict) -> tuple[RssDataset, RssDataset]:
    seed = int(cfg.get("seed", 0))
    frac = float(cfg.get("split", 0.5))
    train_path, test_path = cfg.get("train"), cfg.get("test")
    if train_path and test_path:
        train, test = load_dataset(train_path), load_dataset(test_path)
        if train.ap_ids != test.ap_ids:
            raise CliError(f"train and test AP columns differ: {train.ap_ids} vs {test.ap_ids}")
        if cfg.get("paired_split"):
            # same receiver locations in both files: train on one half, test on the other
            if train.m != test.m:
                raise CliError("paired split needs equally long train and test files")
            itr, ite = split_indices(train.m, frac, seed)
            return train.subset(itr), test.subset(ite)
        return train, test
    path = cfg.get("data") or train_path
    if not path:
        raise CliError("localize needs --data, or --train and --test")
    ds = load_dataset(path)
    return ds.split(frac, seed)


def cmd_localize(cfg: dict) -> dict:
    if not cfg.get("scene"):
        raise CliError("localize needs a scene file (AP positions, region and prior)")
    scene = load_scene(cfg["scene"])
    train, test = _split_data(cfg)
    if train.ap_ids != scene.layout.ids:
        raise CliError(f"dataset AP columns {train.ap_ids} do not match scene APs {scene.layout.ids}")
    methods = cfg.get("methods") or ["cdf-vc", "ldpl", "knn"]
    for m in methods:
        if m not in METHODS and m not in SIDE_INFO_METHODS:
            raise CliError(f"unknown method {m!r}")
    if "knn" in methods and train.truth is None:
        raise CliError("knn needs ground-truth positions in the training data")
    opts = LocalizeOptions.from_dict(cfg.get("options", {}))
    results = run_methods(methods, train, test, scene, opts, int(cfg.get("seed", 0)))
    files = {}
    notes = []
    for name, res in results.items():
        files[f"positions_{name}.csv"] = "x,y\n" + "".join(f"{fmt(x)},{fmt(y)}\n" for x, y in res.positions)
        if res.report is not None:
            files[f"errors_{name}.csv"] = res.report.to_csv()
            files[f"summary_{name}.json"] = res.report.summary_json()
        notes.extend(f"{name}: {n}" for n in res.notes)
    if any(r.report is not None for r in results.values()):
        files["quantiles.csv"] = quantile_table(results)
    return _write_outputs(Path(cfg.get("out", "out/localize")), files, "localize", cfg, notes)


def cmd_case_study(cfg: dict) -> dict:
    params = _channel(cfg.get("channel"))
    tables = case_study(
        int(cfg.get("case", 1)),
        params,
        cfg.get("m"),
        float(cfg.get("d_max", 25.0)),
        tuple(cfg.get("beta", (2.0, 2.0))),
        int(cfg.get("seed", 0)),
    )
    files = {f"{name}.csv": text for name, text in tables.items()}
    return _write_outputs(Path(cfg.get("out", "out/case-study")), files, "case-study", cfg)


def _parse_mapping(mapping) -> dict[str, str]:
    if mapping is None:
        return {}
    if isinstance(mapping, dict):
        return dict(mapping)
    text = str(mapping)
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    pairs = [p for p in text.split(",") if p]
    out = {}
    for p in pairs:
        if "=" not in p:
            raise CliError(f"bad mapping entry {p!r}; expected target=source")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def ingest_table(header: list[str], rows: list[list[str]], mapping: dict[str, str], floor: float = -100.0):
    """Normalize a raw table to the dataset schema.

    ``mapping`` maps output columns (``x``, ``y``, ``rss_<id>``) to source
    column names; with no mapping, the source columns are taken as already
    normalized. Unparseable or missing RSS cells become the floor value.
    Returns ``(csv_text, dropped_columns)``.
    """
    if not mapping:
        mapping = {h: h for h in header if h in ("x", "y") or h.startswith("rss_")}
    targets = list(mapping)
    bad = [t for t in targets if t not in ("x", "y") and not t.startswith("rss_")]
    if bad:
        raise SchemaError(f"mapping targets must be x, y or rss_<id>: {bad}")
    if ("x" in mapping) != ("y" in mapping):
        raise SchemaError("map both x and y, or neither")
    missing = [src for src in mapping.values() if src not in header]
    if missing:
        raise SchemaError(f"missing column(s) in input: {', '.join(missing)}")
    rss_targets = [t for t in targets if t.startswith("rss_")]
    if not rss_targets:
        raise SchemaError("no rss_<id> columns mapped")
    order = (["x", "y"] if "x" in mapping else []) + rss_targets
    idx = [header.index(mapping[t]) for t in order]
    used = set(mapping.values())
    dropped = [h for h in header if h not in used]
    lines = [",".join(order)]
    for r, row in enumerate(rows, start=2):
        vals = []
        for t, i in zip(order, idx):
            cell = row[i].strip() if i < len(row) else ""
            try:
                v = float(cell)
            except ValueError:
                if t in ("x", "y"):
                    raise SchemaError(f"line {r}: non-numeric {t} value {cell!r}") from None
                v = floor
            if t.startswith("rss_") and not v >= floor:
                v = floor
            vals.append(fmt(v))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n", dropped


def cmd_ingest(cfg: dict) -> dict:
    if not cfg.get("input"):
        raise CliError("ingest needs --input")
    header, rows = read_table(cfg["input"])
    text, dropped = ingest_table(header, rows, _parse_mapping(cfg.get("mapping")), float(cfg.get("floor", -100.0)))
    for col in dropped:
        log.warning("dropped unmapped column %r", col)
    notes = [f"dropped unmapped column {c!r}" for c in dropped]
    return _write_outputs(Path(cfg.get("out", "out/ingest")), {"dataset.csv": text}, "ingest", cfg, notes)


def cmd_report(cfg: dict) -> dict:
    """Quantile table and plot-ready error CDFs from ``errors_<method>.csv`` files."""
    inputs = cfg.get("inputs") or []
    paths: list[Path] = []
    for p in inputs:
        p = Path(p)
        paths.extend(sorted(p.glob("errors_*.csv")) if p.is_dir() else [p])
    if not paths:
        raise CliError("report found no errors_<method>.csv inputs")
    files = {}
    lines = ["method,median,p67,p90,p95,mean"]
    for path in paths:
        name = path.stem.removeprefix("errors_")
        rep = ErrorReport.from_csv(path.read_text())
        s = rep.summary()
        lines.append(",".join([name] + [repr(s[k]) for k in ("median", "p67", "p90", "p95", "mean")]))
        cdf = np.arange(1, rep.errors.size + 1) / rep.errors.size
        files[f"error_cdf_{name}.csv"] = "error_m,cdf\n" + "".join(f"{fmt(e)},{fmt(c)}\n" for e, c in zip(rep.errors, cdf))
    files["quantiles.csv"] = "\n".join(lines) + "\n"
    manifest = _write_outputs(Path(cfg.get("out", "out/report")), files, "report", cfg)
    print(files["quantiles.csv"], end="")
    return manifest


COMMANDS = {
    "generate": cmd_generate,
    "localize": cmd_localize,
    "case-study": cmd_case_study,
    "ingest": cmd_ingest,
    "report": cmd_report,
}


def _split_methods(values) -> list[str]:
    out = []
    for v in values:
        out.extend(x for x in v.split(",") if x)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crowdloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"crowdloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON config or a manifest.json from an earlier run")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    g = common(sub.add_parser("generate", help="write a synthetic dataset"))
    g.add_argument("--scene")
    g.add_argument("--m", type=int)
    g.add_argument("--mode", choices=["1d", "2d"])
    g.add_argument("--case", type=int, choices=[1, 2, 3])

    loc = common(sub.add_parser("localize", help="run the CDF method and baselines"))
    loc.add_argument("--scene")
    loc.add_argument("--data", help="single dataset, split into train/test")
    loc.add_argument("--train")
    loc.add_argument("--test")
    loc.add_argument("--split", type=float)
    loc.add_argument("--paired-split", action="store_true", default=None,
                     help="with --train/--test over the same locations: train on one half, test on the other")
    loc.add_argument("--method", action="append", help=f"one of {', '.join(METHODS + SIDE_INFO_METHODS)}; repeatable")
    loc.add_argument("--k", type=int, help="neighbours for the kNN baseline")
    loc.add_argument("--kvc-k", type=int)
    loc.add_argument("--kmeans-k", type=int)

    cs = common(sub.add_parser("case-study", help="single-AP reconstruction tables"))
    cs.add_argument("--case", type=int, choices=[1, 2, 3])
    cs.add_argument("--m", type=int)

    ing = common(sub.add_parser("ingest", help="normalize an external table to the dataset schema"))
    ing.add_argument("--input")
    ing.add_argument("--map", dest="mapping", help="target=source pairs, comma separated, or a JSON file")

    rep = common(sub.add_parser("report", help="summarize error files"))
    rep.add_argument("inputs", nargs="*", help="errors_<method>.csv files or localize output directories")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = _load_config(args.config)
    plain = ("seed", "out", "scene", "m", "mode", "case", "data", "train", "test", "split", "paired_split", "input", "mapping")
    for key in plain:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "method", None):
        cfg["methods"] = _split_methods(args.method)
    opts = dict(cfg.get("options", {}))
    for flag, key in (("k", "knn_k"), ("kvc_k", "kvc_k"), ("kmeans_k", "kmeans_k")):
        val = getattr(args, flag, None)
        if val is not None:
            opts[key] = val
    if opts:
        cfg["options"] = opts
    if getattr(args, "inputs", None):
        cfg["inputs"] = args.inputs
    for key in ("scene", "data", "train", "test", "input"):
        if cfg.get(key):
            cfg[key] = _abspath(cfg[key])
    if cfg.get("inputs"):
        cfg["inputs"] = [_abspath(p) for p in cfg["inputs"]]
    cfg.setdefault("seed", 0)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except (CliError, SchemaError) as exc:
        _fail("config", str(exc))
    except FileNotFoundError as exc:
        _fail("io", str(exc))
    except (ValueError, ArithmeticError) as exc:
        _fail(type(exc).__name__, str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
