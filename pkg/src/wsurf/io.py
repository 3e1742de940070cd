"""Readers and writers: CSV fields, JSON bundles, OBJ and binary PLY meshes."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import NaturalChart


def _float17(x):
    return float(f"{x:.17g}")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if hasattr(x, "to_dict"):
        return x.to_dict()
    if isinstance(x, Path):
        return str(x)
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def dumps(obj, indent=2) -> str:
    """JSON with floats at 17 significant digits (Python's repr round-trips)."""
    return json.dumps(obj, indent=indent, default=_jsonable, allow_nan=True)


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# grids


def write_field_csv(path, chart: NaturalChart, values):
    values = np.asarray(values, dtype=float)
    if values.shape != (chart.n_u, chart.n_v):
        raise ValueError(f"field shape {values.shape} does not match chart {(chart.n_u, chart.n_v)}")
    U, V = chart.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "value"])
        for u, v, x in zip(U.ravel(), V.ravel(), values.ravel()):
            w.writerow([repr(float(u)), repr(float(v)), repr(float(x))])


def read_field_csv(path):
    """Returns (u, v, field) with field shaped (n_u, n_v)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    u = np.unique(data[:, 0])
    v = np.unique(data[:, 1])
    iu = np.searchsorted(u, data[:, 0])
    iv = np.searchsorted(v, data[:, 1])
    out = np.full((u.size, v.size), np.nan)
    out[iu, iv] = data[:, 2]
    return u, v, out


def write_bundle(path, chart: NaturalChart, fields: dict, extra=None):
    obj = {"chart": chart.to_dict(), "fields": {k: np.asarray(v, float).tolist() for k, v in fields.items()}}
    if extra:
        obj.update(extra)
    write_json(path, obj)


def read_bundle(path):
    obj = read_json(path)
    chart = NaturalChart.from_dict(obj["chart"])
    fields = {k: np.asarray(v, dtype=float) for k, v in obj["fields"].items()}
    return chart, fields


# ---------------------------------------------------------------------------
# meshes


def grid_faces(n_u, n_v):
    """Two triangles per cell, zero-based vertex indices into a row-major (n_u, n_v) grid."""
    i, j = np.meshgrid(np.arange(n_u - 1), np.arange(n_v - 1), indexing="ij")
    a = (i * n_v + j).ravel()
    b = a + n_v
    return np.concatenate([np.stack([a, b, a + 1], 1), np.stack([a + 1, b, b + 1], 1)])


def write_obj(path, surface):
    z = surface.z.reshape(-1, 3)
    n = surface.l.reshape(-1, 3)
    faces = grid_faces(*surface.shape) + 1
    with open(path, "w") as fh:
        fh.write(f"# wsurf mesh {surface.shape[0]}x{surface.shape[1]}\n")
        np.savetxt(fh, z, fmt="v %.17g %.17g %.17g")
        np.savetxt(fh, n, fmt="vn %.17g %.17g %.17g")
        np.savetxt(fh, np.repeat(faces, 2, axis=1), fmt="f %d//%d %d//%d %d//%d")


def read_obj(path):
    """(vertices, normals, faces) with zero-based faces."""
    vs, ns, fs = [], [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vs.append([float(x) for x in parts[1:4]])
        elif parts[0] == "vn":
            ns.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            fs.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return np.array(vs), np.array(ns), np.array(fs, dtype=int)


_PLY_VERTEX = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                        ("nx", "<f4"), ("ny", "<f4"), ("nz", "<f4")])
_PLY_FACE = np.dtype([("n", "u1"), ("i", "<i4", (3,))])


def write_ply(path, surface):
    """Binary little-endian PLY: x y z nx ny nz as float32, triangle faces."""
    z = surface.z.reshape(-1, 3)
    n = surface.l.reshape(-1, 3)
    faces = grid_faces(*surface.shape)
    vert = np.empty(len(z), dtype=_PLY_VERTEX)
    for k, name in enumerate(("x", "y", "z")):
        vert[name] = z[:, k]
        vert["n" + name] = n[:, k]
    face = np.empty(len(faces), dtype=_PLY_FACE)
    face["n"] = 3
    face["i"] = faces
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {len(vert)}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float nx\nproperty float ny\nproperty float nz\n"
        f"element face {len(face)}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(vert.tobytes())
        fh.write(face.tobytes())


def read_ply(path):
    """(vertices, normals, faces) from a file written by write_ply."""
    raw = Path(path).read_bytes()
    end = raw.index(b"end_header\n") + len(b"end_header\n")
    header = raw[:end].decode("ascii").splitlines()
    nv = nf = 0
    for line in header:
        if line.startswith("element vertex"):
            nv = int(line.split()[-1])
        elif line.startswith("element face"):
            nf = int(line.split()[-1])
    vert = np.frombuffer(raw, dtype=_PLY_VERTEX, count=nv, offset=end)
    face = np.frombuffer(raw, dtype=_PLY_FACE, count=nf, offset=end + nv * _PLY_VERTEX.itemsize)
    xyz = np.stack([vert["x"], vert["y"], vert["z"]], 1).astype(float)
    nrm = np.stack([vert["nx"], vert["ny"], vert["nz"]], 1).astype(float)
    return xyz, nrm, face["i"].astype(int)


def write_mesh(path, surface):
    path = Path(path)
    if path.suffix.lower() == ".obj":
        write_obj(path, surface)
    elif path.suffix.lower() == ".ply":
        write_ply(path, surface)
    else:
        raise ValueError(f"unknown mesh format {path.suffix!r} (use .obj or .ply)")


def write_frames(path, surface):
    """Full frame dump (z, X, Y, l) as JSON, for debugging."""
    write_json(path, {"h_u": surface.h_u, "h_v": surface.h_v, "origin": list(surface.origin),
                      "z": surface.z, "X": surface.X, "Y": surface.Y, "l": surface.l})
