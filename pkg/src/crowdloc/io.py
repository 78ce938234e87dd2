"""File formats: scene JSON, dataset / AP / assignment CSVs.

Floats are written with ``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .channel import RSS_FLOOR, RssDataset, Scene
from .errors import SchemaError
from .geometry import ApLayout, LocationPrior, Region


def fmt(x) -> str:
    return repr(float(x))


def scene_from_dict(doc: dict) -> Scene:
    region = Region(doc["boundary"], doc.get("holes", []))
    aps = doc["aps"]
    layout = ApLayout(np.array([[a["x"], a["y"]] for a in aps], dtype=float), tuple(str(a["id"]) for a in aps))
    p = doc.get("prior", {"kind": "uniform"})
    if p.get("kind", "uniform") == "uniform":
        prior = LocationPrior.uniform()
    elif p["kind"] == "grid":
        prior = LocationPrior.grid(p["weights"], p["cell"])
    else:
        raise SchemaError(f"unknown prior kind {p['kind']!r}")
    rooms = tuple((str(r["id"]), np.asarray(r["polygon"], dtype=float)) for r in doc.get("rooms", []))
    return Scene(region, layout, prior, rooms)


def scene_to_dict(scene: Scene) -> dict:
    doc = {
        "boundary": scene.region.boundary.tolist(),
        "holes": [h.tolist() for h in scene.region.holes],
        "aps": [{"id": i, "x": float(x), "y": float(y)} for i, (x, y) in zip(scene.layout.ids, scene.layout.positions)],
    }
    if scene.prior.kind == "uniform":
        doc["prior"] = {"kind": "uniform"}
    else:
        doc["prior"] = {"kind": "grid", "cell": scene.prior.cell, "weights": scene.prior.weights.tolist()}
    if scene.rooms:
        doc["rooms"] = [{"id": rid, "polygon": np.asarray(poly).tolist()} for rid, poly in scene.rooms]
    return doc


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def dataset_to_csv(ds: RssDataset, include_truth: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    with_truth = include_truth and ds.truth is not None
    header = (["x", "y"] if with_truth else []) + [f"rss_{a}" for a in ds.ap_ids]
    w.writerow(header)
    for i in range(ds.m):
        row = [fmt(v) for v in ds.truth[i]] if with_truth else []
        row += [fmt(v) for v in ds.rss[i]]
        w.writerow(row)
    return buf.getvalue()


def dataset_from_csv(text: str, floor: float = RSS_FLOOR) -> RssDataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SchemaError("empty dataset file")
    header = [h.strip() for h in rows[0]]
    rss_cols = [i for i, h in enumerate(header) if h.startswith("rss_")]
    if not rss_cols:
        raise SchemaError("dataset has no rss_<id> columns")
    has_truth = "x" in header and "y" in header
    body = [r for r in rows[1:] if r]
    if not body:
        raise SchemaError("dataset has a header but no rows")
    data = np.array([[float(v) for v in r] for r in body])
    truth = data[:, [header.index("x"), header.index("y")]] if has_truth else None
    ap_ids = tuple(header[i][4:] for i in rss_cols)
    return RssDataset(data[:, rss_cols], ap_ids, truth, floor)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def save_dataset(ds: RssDataset, path, include_truth: bool = True) -> Path:
    return write_text(path, dataset_to_csv(ds, include_truth))


def load_dataset(path, floor: float = RSS_FLOOR) -> RssDataset:
    with open(path, newline="") as fh:
        return dataset_from_csv(fh.read(), floor)


def aps_to_csv(layout: ApLayout) -> str:
    lines = ["id,x,y"] + [f"{i},{fmt(x)},{fmt(y)}" for i, (x, y) in zip(layout.ids, layout.positions)]
    return "\n".join(lines) + "\n"


def aps_from_csv(text: str) -> ApLayout:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"id", "x", "y"} <= set(rows[0]):
        raise SchemaError("AP CSV needs columns id,x,y")
    return ApLayout(np.array([[float(r["x"]), float(r["y"])] for r in rows]), tuple(r["id"] for r in rows))


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise SchemaError(f"{path} is empty")
    return [h.strip() for h in rows[0]], rows[1:]
