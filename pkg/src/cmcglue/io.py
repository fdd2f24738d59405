"""Writers for tables, structured results, profiles and meshes.

Every float is written with 17 significant digits so outputs round-trip exactly.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .delaunay import DelaunayProfile


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json_text(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become strings."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json_text(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in seq):
            return "[" + ", ".join(_num(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json_text(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _num(obj)
    return json.dumps(str(obj))


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return json.dumps(fmt(v))
    return format(v, ".17g")


def _ensure_parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and not os.access(path, os.W_OK):
        raise PermissionError(f"cannot write {path}")
    return path


def write_csv(path, header, rows, config: dict | None = None) -> Path:
    path = _ensure_parent(path)
    with open(path, "w") as fh:
        if config is not None:
            fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n")
    return path


def read_csv(path):
    """Return (config or None, header, rows as lists of floats)."""
    config = None
    with open(path) as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("# config: "):
        config = json.loads(lines[0][len("# config: "):])
        lines = lines[1:]
    header = lines[0].split(",")
    rows = [[_parse(v) for v in line.split(",")] for line in lines[1:] if line]
    return config, header, rows


def _parse(v):
    if v in ("true", "false"):
        return v == "true"
    return float(v)


def write_json(path, payload: dict, config: dict | None = None) -> Path:
    path = _ensure_parent(path)
    data = {"config": config} if config is not None else {}
    data.update(payload)
    with open(path, "w") as fh:
        fh.write(to_json_text(data) + "\n")
    return path


def profile_to_dict(profile: DelaunayProfile) -> dict:
    return {"tau": profile.tau, "sigma_star": profile.sigma_star, "s_half": profile.s_half,
            "T_phys": profile.T_phys, "n_periods": profile.n_periods,
            "degenerate": profile.degenerate, "s_grid": profile.s_grid, "sigma": profile.sigma,
            "dsigma": profile.dsigma, "kappa": profile.kappa}


def profile_from_dict(data: dict) -> DelaunayProfile:
    arr = lambda k: np.array(data[k], dtype=float)
    return DelaunayProfile(float(data["tau"]), arr("s_grid"), arr("sigma"), arr("dsigma"),
                           arr("kappa"), float(data["sigma_star"]), float(data["s_half"]),
                           float(data["T_phys"]), int(data["n_periods"]), bool(data["degenerate"]))


def load_profile(path) -> DelaunayProfile:
    with open(path) as fh:
        data = json.load(fh)
    return profile_from_dict(data.get("profile", data))


def grid_mesh(X: np.ndarray):
    """Triangles of an (n_s, n_theta, 3) grid, periodic in theta."""
    ns, nt, _ = X.shape
    verts = X.reshape(-1, 3)
    faces = []
    for i in range(ns - 1):
        for j in range(nt):
            a, b = i * nt + j, i * nt + (j + 1) % nt
            c, d = a + nt, b + nt
            faces.append((a, b, d))
            faces.append((a, d, c))
    return verts, np.array(faces, dtype=int)


def write_obj(path, X: np.ndarray, comment: str | None = None) -> Path:
    path = _ensure_parent(path)
    verts, faces = grid_mesh(X)
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for v in verts:
            fh.write("v " + " ".join(fmt(c) for c in v) + "\n")
        for f in faces:
            fh.write("f " + " ".join(str(i + 1) for i in f) + "\n")
    return path


def write_ply(path, X: np.ndarray, comment: str | None = None) -> Path:
    path = _ensure_parent(path)
    verts, faces = grid_mesh(X)
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        if comment:
            fh.write(f"comment {comment}\n")
        fh.write(f"element vertex {len(verts)}\nproperty double x\nproperty double y\nproperty double z\n")
        fh.write(f"element face {len(faces)}\nproperty list uchar int vertex_indices\nend_header\n")
        for v in verts:
            fh.write(" ".join(fmt(c) for c in v) + "\n")
        for f in faces:
            fh.write("3 " + " ".join(str(i) for i in f) + "\n")
    return path
