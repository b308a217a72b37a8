"""Text tables, the forms file format and mesh writers.

Every writer is deterministic: no timestamps, fixed float formatting
('.17g', which round-trips IEEE doubles), and a header carrying the
artifact version and the config hash.
"""
from __future__ import annotations

import json
import math
import struct

import numpy as np

from . import __version__
from .errors import DomainError, FormatError, UnsupportedModel
from .forms import FormsField, FormsGrid, ThetaPairing

FORMS_MAGIC = "# hcmu-forms"
FORMS_VERSION = 1
FORMS_COLUMNS = ("x", "K", "e_u", "H", "theta", "h11", "h12", "h22", "kp1", "kp2")


def fmt(v):
    return format(float(v), ".17g")


def provenance(config_hash=None):
    return f"artifact=hcmu-surfaces {__version__} config_hash={config_hash or 'none'}"


def write_table(path, columns, rows, comments=(), config_hash=None):
    """Comma-separated table with '#' comment lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {provenance(config_hash)}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_h_table(path, sol, config_hash=None):
    events = ";".join(f"{kind.value}@{K:.17g}" for K, kind in sol.events) or "none"
    rows = zip(sol.K, sol.H, sol.dH, sol.branch)
    write_table(path, ("K", "H", "dH_dK", "branch"), rows,
                comments=(f"events={events}",), config_hash=config_hash)


def write_forms(path, grid: FormsGrid, config_hash=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{FORMS_MAGIC} v{FORMS_VERSION}\n")
        fh.write(f"# {provenance(config_hash)} c={fmt(grid.c)} A={fmt(grid.A)} "
                 f"pairing={ThetaPairing(grid.pairing).name.lower()}\n")
        fh.write(" ".join(FORMS_COLUMNS) + "\n")
        for i in range(len(grid.x)):
            fh.write(" ".join(fmt(getattr(grid, col)[i]) for col in FORMS_COLUMNS) + "\n")


def _read_forms_table(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except UnicodeDecodeError:
        raise FormatError("forms file is not text", path=str(path), line=1) from None
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(FORMS_MAGIC):
        raise FormatError("missing forms header", path=str(path), line=1)
    version = lines[0][len(FORMS_MAGIC):].strip()
    if version != f"v{FORMS_VERSION}":
        raise FormatError(f"unsupported forms version {version!r}", path=str(path), line=1,
                          version=version)
    if len(lines) < 3 or not lines[1].startswith("#"):
        raise FormatError("missing metadata line", path=str(path), line=2)
    meta = dict(tok.split("=", 1) for tok in lines[1][1:].split() if "=" in tok)
    columns = lines[2].split()
    base = [c for c in columns if c != "y"]
    if tuple(base) != FORMS_COLUMNS or (len(columns) - len(base)) > 1:
        raise FormatError("unexpected column header", path=str(path), line=3,
                          columns=" ".join(columns))
    rows = []
    for lineno, line in enumerate(lines[3:], start=4):
        parts = line.split()
        if len(parts) != len(columns):
            raise FormatError(f"expected {len(columns)} fields, found {len(parts)}",
                              path=str(path), line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise FormatError("unparseable number", path=str(path), line=lineno) from None
    if not rows:
        raise FormatError("forms file has no data rows", path=str(path), line=len(lines) + 1)
    try:
        c, A = float(meta["c"]), float(meta["A"])
        pairing = ThetaPairing[meta.get("pairing", "standard").upper()]
    except (KeyError, ValueError):
        raise FormatError("metadata needs c, A and pairing", path=str(path), line=2) from None
    data = {name: np.array(col) for name, col in zip(columns, zip(*rows))}
    return data, c, A, pairing


def read_forms(path) -> FormsGrid:
    """Read a y-free forms file written by :func:`write_forms`."""
    data, c, A, pairing = _read_forms_table(path)
    if "y" in data:
        raise FormatError("file has a y column; use read_forms_field", path=str(path), line=3)
    return FormsGrid(x=data["x"], K=data["K"], e_u=data["e_u"], H=data["H"],
                     theta=data["theta"], sin_theta=np.sin(data["theta"]),
                     cos_theta=np.cos(data["theta"]), h11=data["h11"], h12=data["h12"],
                     h22=data["h22"], kp1=data["kp1"], kp2=data["kp2"], c=c, A=A,
                     pairing=pairing)


def read_forms_field(path):
    """Read a forms file into a FormsField and its space-form curvature c.

    Files without a y column become a single-column field. With a y column
    the rows must cover a rectangular grid in x-major order.
    """
    data, c, _, _ = _read_forms_table(path)
    if "y" not in data:
        g = {k: data[k][:, None] for k in ("K", "e_u", "h11", "h12", "h22")}
        return FormsField(x=data["x"], y=np.zeros(1), **g), c
    xs = np.unique(data["x"])
    ys = np.unique(data["y"])
    n = len(data["x"])
    if n != len(xs) * len(ys):
        raise FormatError("x/y samples do not form a rectangular grid", path=str(path),
                          line=3 + n)
    order = np.lexsort((data["y"], data["x"]))
    g = {k: data[k][order].reshape(len(xs), len(ys)) for k in ("K", "e_u", "h11", "h12", "h22")}
    return FormsField(x=xs, y=ys, **g), c


def write_forms_field(path, field: FormsField, c, config_hash=None):
    """Forms file with a y column (theta/H/principal curvatures derived)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{FORMS_MAGIC} v{FORMS_VERSION}\n")
        fh.write(f"# {provenance(config_hash)} c={fmt(c)} A=nan pairing=standard\n")
        fh.write(" ".join(FORMS_COLUMNS + ("y",)) + "\n")
        for i, xv in enumerate(field.x):
            for j, yv in enumerate(field.y):
                e, h11, h12, h22 = (field.e_u[i, j], field.h11[i, j], field.h12[i, j],
                                    field.h22[i, j])
                H = (h11 + h22) / (2 * e)
                X = max(H * H - field.K[i, j] + c, 0.0)
                theta = math.atan2(-2 * h12, h11 - h22)
                row = (xv, field.K[i, j], e, H, theta, h11, h12, h22,
                       H + math.sqrt(X), H - math.sqrt(X), yv)
                fh.write(" ".join(fmt(v) for v in row) + "\n")


def stereographic(points, c):
    """Projection of the sphere or hyperboloid model to 3-space from r = (0,0,0,-R).

    For c < 0 this is the Poincare ball model of the upper sheet.
    """
    if c == 0:
        raise UnsupportedModel("stereographic projection needs c != 0")
    R = 1.0 / math.sqrt(abs(c))
    P = np.asarray(points, dtype=float)
    den = R + P[..., 3]
    if np.any(np.abs(den) < 1e-12 * R):
        raise DomainError("patch touches the projection pole")
    return R * P[..., :3] / den[..., None]


def _mesh_vertices(patch, project):
    if patch.ambient.dim == 3:
        return patch.positions, patch.normals
    if project != "stereographic":
        raise UnsupportedModel("OBJ/PLY need a 3-space patch; pass project='stereographic'",
                               c=patch.ambient.c)
    return stereographic(patch.positions, patch.ambient.c), None


def _triangles(nx, ny):
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b = i * ny + j, i * ny + j + 1
            cc, d = (i + 1) * ny + j, (i + 1) * ny + j + 1
            tris.append((a, cc, d))
            tris.append((a, d, b))
    return tris


def write_obj(path, patch, project="none", config_hash=None):
    V, N = _mesh_vertices(patch, project)
    nx, ny = patch.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {provenance(config_hash)} c={fmt(patch.ambient.c)} projection={project}\n")
        for v in V.reshape(-1, 3):
            fh.write("v " + " ".join(fmt(t) for t in v) + "\n")
        if N is not None:
            for v in N.reshape(-1, 3):
                fh.write("vn " + " ".join(fmt(t) for t in v) + "\n")
        for t in _triangles(nx, ny):
            a, b, cc = (k + 1 for k in t)
            if N is not None:
                fh.write(f"f {a}//{a} {b}//{b} {cc}//{cc}\n")
            else:
                fh.write(f"f {a} {b} {cc}\n")


def write_ply(path, patch, project="none", config_hash=None):
    """Binary little-endian PLY with float64 vertices (and normals for Flat3)."""
    V, N = _mesh_vertices(patch, project)
    nx, ny = patch.shape
    tris = _triangles(nx, ny)
    props = ["property double x", "property double y", "property double z"]
    if N is not None:
        props += ["property double nx", "property double ny", "property double nz"]
    header = "\n".join(["ply", "format binary_little_endian 1.0",
                        f"comment {provenance(config_hash)} projection={project}",
                        f"element vertex {nx * ny}", *props,
                        f"element face {len(tris)}",
                        "property list uchar int vertex_indices", "end_header"]) + "\n"
    verts = V.reshape(-1, 3) if N is None else np.hstack([V.reshape(-1, 3), N.reshape(-1, 3)])
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(verts, dtype="<f8").tobytes())
        for t in tris:
            fh.write(struct.pack("<B3i", 3, *t))


def write_csv4d(path, patch, project="none", config_hash=None):
    """Raw ambient coordinates per grid point, optionally with the projection."""
    d = patch.ambient.dim
    cols = ["i", "j", "x", "y"] + [f"r{k}" for k in range(d)] + [f"n{k}" for k in range(d)]
    P = stereographic(patch.positions, patch.ambient.c) if project == "stereographic" else None
    if P is not None:
        cols += ["p0", "p1", "p2"]
    rows = []
    for i, xv in enumerate(patch.x):
        for j, yv in enumerate(patch.y):
            row = [i, j, xv, yv, *patch.positions[i, j], *patch.normals[i, j]]
            if P is not None:
                row += list(P[i, j])
            rows.append(row)
    write_table(path, cols, rows, comments=(f"c={fmt(patch.ambient.c)} projection={project}",),
                config_hash=config_hash)


MESH_WRITERS = {"obj": write_obj, "ply": write_ply, "csv4d": write_csv4d}


def write_mesh(path, patch, fmt_name="obj", project="none", config_hash=None):
    try:
        writer = MESH_WRITERS[fmt_name.lower()]
    except KeyError:
        raise UnsupportedModel(f"unknown mesh format {fmt_name!r}") from None
    writer(path, patch, project=project, config_hash=config_hash)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj, config_hash=None):
    payload = {"artifact": f"hcmu-surfaces {__version__}", "config_hash": config_hash,
               **_jsonable(obj)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
