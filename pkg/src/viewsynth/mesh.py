"""Triangle meshes with optional per-vertex colors, plus PLY/OBJ file I/O.

Vertex coordinates are in millimeters throughout (the usual convention for
CT-derived surfaces); the rest of the pipeline is scale-consistent, so other
units work as long as poses and clip distances use the same unit.

Supported formats:

* PLY, ``ascii 1.0`` and ``binary_little_endian 1.0``.  Big-endian files are
  rejected.  Vertex colors are read from ``uchar red/green/blue`` properties
  (the canonical 8-bit encoding) and written the same way.  Unrecognized
  properties and elements are skipped.
* OBJ, ASCII ``v``/``f`` records.  Face indices are 1-based; negative indices
  count back from the most recently defined vertex.  Faces with more than
  three vertices are triangulated fan-wise.  OBJ has no standard vertex-color
  encoding, so colors are never written (a warning is returned instead) and
  color-like extensions on ``v`` lines are ignored on read.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = ["Mesh", "MeshFormatError", "load_mesh", "save_mesh", "demean"]


class MeshFormatError(ValueError):
    """Mesh file violates its format; carries file context for diagnostics."""

    def __init__(self, message, path=None, line=None, offset=None):
        loc = str(path) if path is not None else "<mesh>"
        if line is not None:
            loc += f":{line}"
        elif offset is not None:
            loc += f" @ byte {offset}"
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.line = line
        self.offset = offset


class Mesh:
    """Immutable triangle mesh: vertices (mm), triangle indices, optional colors.

    ``vertices`` is float64 with shape (n, 3), ``triangles`` int64 with shape
    (m, 3), ``colors`` uint8 with shape (n, 3) or None.  Construction validates
    index ranges, finiteness, and color length; degenerate triangles (repeated
    indices or zero area) are allowed here and skipped at render time, since
    scan-derived meshes routinely contain them.
    """

    __slots__ = ("vertices", "triangles", "colors")

    def __init__(self, vertices, triangles, colors=None):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError(f"vertices must have shape (n, 3), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError(f"triangles must have shape (m, 3), got {triangles.shape}")
        if not np.isfinite(vertices).all():
            bad = int(np.argwhere(~np.isfinite(vertices).all(axis=1))[0, 0])
            raise ValueError(f"vertex {bad} has a non-finite coordinate")
        n = len(vertices)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= n):
            bad = int(np.argwhere(((triangles < 0) | (triangles >= n)).any(axis=1))[0, 0])
            raise ValueError(
                f"triangle {bad} references a vertex index outside [0, {n})"
            )
        if colors is not None:
            colors = np.ascontiguousarray(colors, dtype=np.uint8)
            if colors.shape != (n, 3):
                raise ValueError(
                    f"colors must have shape ({n}, 3) to match vertices, got {colors.shape}"
                )
            colors.flags.writeable = False
        vertices.flags.writeable = False
        triangles.flags.writeable = False
        self.vertices = vertices
        self.triangles = triangles
        self.colors = colors

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def has_colors(self):
        return self.colors is not None

    def with_colors(self, colors):
        """Same geometry with new per-vertex colors."""
        return Mesh(self.vertices, self.triangles, colors)

    def is_renderable(self):
        """True when the mesh has enough geometry to cover pixels at all."""
        return self.n_vertices >= 3 and self.n_triangles >= 1

    def __repr__(self):
        c = "with colors" if self.has_colors else "no colors"
        return f"Mesh({self.n_vertices} vertices, {self.n_triangles} triangles, {c})"


def demean(mesh: Mesh):
    """Translate the mesh so its vertex mean is the origin.

    Returns ``(demeaned_mesh, centroid)``, where ``centroid`` is the subtracted
    per-axis vertex mean.  Triangles and colors are carried over unchanged.
    A camera pose (R, t) for the original mesh maps to (R, t + R @ centroid)
    for the demeaned one.
    """
    if mesh.n_vertices == 0:
        raise ValueError("cannot demean a mesh with no vertices")
    centroid = mesh.vertices.mean(axis=0)
    return Mesh(mesh.vertices - centroid, mesh.triangles, mesh.colors), centroid


# --------------------------------------------------------------------------
# PLY
# --------------------------------------------------------------------------

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_STRUCT_CODES = {"i1": "b", "u1": "B", "i2": "h", "u2": "H",
                 "i4": "i", "u4": "I", "f4": "f", "f8": "d"}


class _PlyElement:
    def __init__(self, name, count):
        self.name = name
        self.count = count
        self.properties = []  # (name, dtype) scalars or (name, count_dtype, item_dtype) lists


def _parse_ply_header(data, path):
    """Parse the PLY header, returning (format, elements, body_offset, header_lines)."""
    end = data.find(b"end_header")
    if end < 0:
        raise MeshFormatError("missing end_header", path=path)
    nl = data.find(b"\n", end)
    if nl < 0:
        raise MeshFormatError("missing newline after end_header", path=path)
    header = data[:nl].decode("ascii", errors="replace")
    body_offset = nl + 1

    fmt = None
    elements = []
    lines = header.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshFormatError("not a PLY file (missing 'ply' magic)", path=path, line=1)
    for lineno, raw in enumerate(lines[1:], start=2):
        tokens = raw.strip().split()
        if not tokens or tokens[0] == "comment" or tokens[0] == "obj_info":
            continue
        if tokens[0] == "format":
            if len(tokens) < 3:
                raise MeshFormatError("malformed format line", path=path, line=lineno)
            if tokens[1] == "ascii":
                fmt = "ascii"
            elif tokens[1] == "binary_little_endian":
                fmt = "binary_little_endian"
            elif tokens[1] == "binary_big_endian":
                raise MeshFormatError(
                    "big-endian PLY is not supported; re-export as ascii or "
                    "binary_little_endian", path=path, line=lineno)
            else:
                raise MeshFormatError(f"unknown PLY format '{tokens[1]}'",
                                      path=path, line=lineno)
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MeshFormatError("malformed element line", path=path, line=lineno)
            try:
                count = int(tokens[2])
            except ValueError:
                raise MeshFormatError(f"bad element count '{tokens[2]}'",
                                      path=path, line=lineno) from None
            elements.append(_PlyElement(tokens[1], count))
        elif tokens[0] == "property":
            if not elements:
                raise MeshFormatError("property before any element", path=path, line=lineno)
            if len(tokens) >= 2 and tokens[1] == "list":
                if len(tokens) != 5:
                    raise MeshFormatError("malformed list property", path=path, line=lineno)
                ct, it = tokens[2], tokens[3]
                if ct not in _PLY_TYPES or it not in _PLY_TYPES:
                    raise MeshFormatError(f"unknown list property types '{ct} {it}'",
                                          path=path, line=lineno)
                elements[-1].properties.append((tokens[4], _PLY_TYPES[ct], _PLY_TYPES[it]))
            else:
                if len(tokens) != 3:
                    raise MeshFormatError("malformed property line", path=path, line=lineno)
                if tokens[1] not in _PLY_TYPES:
                    raise MeshFormatError(f"unknown property type '{tokens[1]}'",
                                          path=path, line=lineno)
                elements[-1].properties.append((tokens[2], _PLY_TYPES[tokens[1]]))
        elif tokens[0] == "end_header":
            break
        else:
            raise MeshFormatError(f"unexpected header keyword '{tokens[0]}'",
                                  path=path, line=lineno)
    if fmt is None:
        raise MeshFormatError("header has no format line", path=path)
    return fmt, elements, body_offset, len(lines)


def _vertex_layout(element, path):
    """Locate x/y/z and optional uchar red/green/blue among vertex properties."""
    names = [p[0] for p in element.properties]
    for req in ("x", "y", "z"):
        if req not in names:
            raise MeshFormatError(f"vertex element lacks property '{req}'", path=path)
        if len(element.properties[names.index(req)]) != 2:
            raise MeshFormatError(f"vertex property '{req}' must be scalar", path=path)
    has_colors = all(
        c in names and len(element.properties[names.index(c)]) == 2
        and element.properties[names.index(c)][1] == "u1"
        for c in ("red", "green", "blue")
    )
    return names, has_colors


def _read_ply_ascii(lines, start_line, elements, path):
    vertices = triangles = colors = None
    lineno = start_line
    it = iter(lines)

    def next_data_line():
        nonlocal lineno
        for raw in it:
            lineno += 1
            s = raw.strip()
            if s:
                return s
        raise MeshFormatError("unexpected end of file", path=path, line=lineno)

    for elem in elements:
        if elem.name == "vertex":
            names, has_colors = _vertex_layout(elem, path)
            ix, iy, iz = names.index("x"), names.index("y"), names.index("z")
            verts = np.empty((elem.count, 3), dtype=np.float64)
            cols = np.empty((elem.count, 3), dtype=np.uint8) if has_colors else None
            if has_colors:
                ir, ig, ib = names.index("red"), names.index("green"), names.index("blue")
            for i in range(elem.count):
                tokens = next_data_line().split()
                if len(tokens) < len(elem.properties):
                    raise MeshFormatError(
                        f"vertex line has {len(tokens)} values, expected "
                        f"{len(elem.properties)}", path=path, line=lineno)
                try:
                    verts[i] = (float(tokens[ix]), float(tokens[iy]), float(tokens[iz]))
                    if has_colors:
                        cols[i] = (int(tokens[ir]), int(tokens[ig]), int(tokens[ib]))
                except ValueError:
                    raise MeshFormatError("malformed vertex value", path=path,
                                          line=lineno) from None
            vertices, colors = verts, cols
        elif elem.name == "face":
            list_props = [p for p in elem.properties if len(p) == 3]
            if not list_props:
                raise MeshFormatError("face element lacks a list property", path=path)
            tris = []
            for _ in range(elem.count):
                tokens = next_data_line().split()
                try:
                    k = int(tokens[0])
                    idx = [int(t) for t in tokens[1:1 + k]]
                except (ValueError, IndexError):
                    raise MeshFormatError("malformed face line", path=path,
                                          line=lineno) from None
                if len(idx) != k:
                    raise MeshFormatError(
                        f"face declares {k} indices but provides {len(idx)}",
                        path=path, line=lineno)
                if k < 3:
                    raise MeshFormatError(f"face with {k} vertices", path=path, line=lineno)
                for j in range(1, k - 1):  # fan triangulation
                    tris.append((idx[0], idx[j], idx[j + 1]))
            triangles = np.array(tris, dtype=np.int64).reshape(-1, 3)
        else:
            for _ in range(elem.count):  # skip unknown elements
                next_data_line()
    return vertices, triangles, colors


def _read_ply_binary(data, offset, elements, path):
    vertices = triangles = colors = None
    pos = offset
    for elem in elements:
        if elem.name == "vertex":
            if any(len(p) == 3 for p in elem.properties):
                raise MeshFormatError("list property on vertex element is not supported",
                                      path=path, offset=pos)
            names, has_colors = _vertex_layout(elem, path)
            dt = np.dtype([(p[0], "<" + p[1]) for p in elem.properties])
            nbytes = dt.itemsize * elem.count
            if pos + nbytes > len(data):
                raise MeshFormatError(
                    f"vertex data truncated (need {nbytes} bytes)", path=path, offset=pos)
            rec = np.frombuffer(data, dtype=dt, count=elem.count, offset=pos)
            pos += nbytes
            vertices = np.column_stack(
                [rec["x"], rec["y"], rec["z"]]).astype(np.float64)
            if has_colors:
                colors = np.column_stack([rec["red"], rec["green"], rec["blue"]])
        elif elem.name == "face":
            tris = []
            prop_fmt = []
            for p in elem.properties:
                if len(p) == 3:
                    prop_fmt.append(("list", struct.Struct("<" + _STRUCT_CODES[p[1]]),
                                     struct.Struct("<" + _STRUCT_CODES[p[2]])))
                else:
                    prop_fmt.append(("scalar", struct.Struct("<" + _STRUCT_CODES[p[1]]), None))
            first_list = next((i for i, p in enumerate(elem.properties) if len(p) == 3), None)
            if first_list is None:
                raise MeshFormatError("face element lacks a list property", path=path)
            for _ in range(elem.count):
                face = None
                for i, (kind, cst, ist) in enumerate(prop_fmt):
                    try:
                        if kind == "scalar":
                            pos += cst.size
                        else:
                            (k,) = cst.unpack_from(data, pos)
                            pos += cst.size
                            vals = struct.unpack_from(f"<{k}{ist.format[-1]}", data, pos)
                            pos += ist.size * k
                            if i == first_list:
                                face = vals
                    except struct.error:
                        raise MeshFormatError("face data truncated", path=path,
                                              offset=pos) from None
                if len(face) < 3:
                    raise MeshFormatError(f"face with {len(face)} vertices",
                                          path=path, offset=pos)
                for j in range(1, len(face) - 1):
                    tris.append((face[0], face[j], face[j + 1]))
            triangles = np.array(tris, dtype=np.int64).reshape(-1, 3)
        else:
            # skip unknown element; requires fixed-size scalar properties
            if any(len(p) == 3 for p in elem.properties):
                raise MeshFormatError(
                    f"cannot skip element '{elem.name}' with list properties",
                    path=path, offset=pos)
            size = sum(np.dtype(p[1]).itemsize for p in elem.properties)
            pos += size * elem.count
    return vertices, triangles, colors


def _load_ply(path):
    data = Path(path).read_bytes()
    fmt, elements, body_offset, header_lines = _parse_ply_header(data, path)
    if fmt == "ascii":
        body = data[body_offset:].decode("ascii", errors="replace").splitlines()
        vertices, triangles, colors = _read_ply_ascii(body, header_lines, elements, path)
    else:
        vertices, triangles, colors = _read_ply_binary(data, body_offset, elements, path)
    if vertices is None:
        raise MeshFormatError("file has no vertex element", path=path)
    if triangles is None:
        triangles = np.empty((0, 3), dtype=np.int64)
    return vertices, triangles, colors


def _save_ply(mesh: Mesh, path, binary=True):
    n, m = mesh.n_vertices, mesh.n_triangles
    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary else "format ascii 1.0")
    header.append(f"element vertex {n}")
    header += ["property double x", "property double y", "property double z"]
    if mesh.has_colors:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append(f"element face {m}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            if mesh.has_colors:
                dt = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"),
                               ("red", "u1"), ("green", "u1"), ("blue", "u1")])
                rec = np.empty(n, dtype=dt)
                rec["red"], rec["green"], rec["blue"] = mesh.colors.T
            else:
                dt = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8")])
                rec = np.empty(n, dtype=dt)
            rec["x"], rec["y"], rec["z"] = mesh.vertices.T
            f.write(rec.tobytes())
            fdt = np.dtype([("k", "u1"), ("idx", "<i4", (3,))])
            frec = np.empty(m, dtype=fdt)
            frec["k"] = 3
            frec["idx"] = mesh.triangles.astype(np.int32)
            f.write(frec.tobytes())
        else:
            out = []
            for i in range(n):
                # repr of Python floats is shortest-exact, so ascii files
                # round-trip coordinates bit-for-bit
                x, y, z = (float(v) for v in mesh.vertices[i])
                line = f"{x!r} {y!r} {z!r}"
                if mesh.has_colors:
                    r, g, b = mesh.colors[i]
                    line += f" {r} {g} {b}"
                out.append(line)
            for t in mesh.triangles:
                out.append(f"3 {t[0]} {t[1]} {t[2]}")
            f.write(("\n".join(out) + "\n").encode("ascii"))


# --------------------------------------------------------------------------
# OBJ
# --------------------------------------------------------------------------

def _load_obj(path):
    vertices = []
    faces = []  # (line_no, raw indices) resolved after the vertex count is known
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if tokens[0] == "v":
                vals = tokens[1:]
                # 3 coords, optional w (4) or unsupported color extension (6)
                if len(vals) not in (3, 4, 6):
                    raise MeshFormatError(
                        f"'v' record with {len(vals)} values", path=path, line=lineno)
                try:
                    vertices.append((float(vals[0]), float(vals[1]), float(vals[2])))
                except ValueError:
                    raise MeshFormatError("malformed vertex coordinate", path=path,
                                          line=lineno) from None
            elif tokens[0] == "f":
                if len(tokens) < 4:
                    raise MeshFormatError("face with fewer than 3 vertices",
                                          path=path, line=lineno)
                idx = []
                for tok in tokens[1:]:
                    head = tok.split("/")[0]
                    try:
                        raw_i = int(head)
                    except ValueError:
                        raise MeshFormatError(f"malformed face index '{tok}'",
                                              path=path, line=lineno) from None
                    if raw_i == 0:
                        raise MeshFormatError("face index 0 (OBJ indices are 1-based)",
                                              path=path, line=lineno)
                    # negative indices are relative to the vertices defined so far
                    i = raw_i - 1 if raw_i > 0 else len(vertices) + raw_i
                    if i < 0 or i >= len(vertices):
                        raise MeshFormatError(
                            f"face index {raw_i} out of range (have "
                            f"{len(vertices)} vertices)", path=path, line=lineno)
                    idx.append(i)
                for j in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[j], idx[j + 1]))
            # vn/vt/o/g/s/usemtl/mtllib and friends are ignored
    verts = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.array(faces, dtype=np.int64).reshape(-1, 3)
    return verts, tris, None


def _save_obj(mesh: Mesh, path):
    with open(path, "w", encoding="ascii") as f:
        for row in mesh.vertices:
            x, y, z = (float(v) for v in row)
            f.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in mesh.triangles:
            f.write(f"f {a + 1} {b + 1} {c + 1}\n")


# --------------------------------------------------------------------------
# Public API
# --------------------------------------------------------------------------

def _infer_format(path, format):
    if format is not None:
        if format not in ("ply", "obj"):
            raise ValueError(f"unknown mesh format '{format}' (expected 'ply' or 'obj')")
        return format
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        return "ply"
    if suffix == ".obj":
        return "obj"
    raise ValueError(f"cannot infer mesh format from '{path}'; pass format=")


def load_mesh(path, format=None) -> Mesh:
    """Load a triangle mesh from a PLY or OBJ file.

    ``format`` is inferred from the extension when omitted.  Raises
    :class:`MeshFormatError` (with line or byte context) on malformed files,
    including out-of-range indices and non-finite coordinates.
    """
    fmt = _infer_format(path, format)
    vertices, triangles, colors = _load_ply(path) if fmt == "ply" else _load_obj(path)
    try:
        return Mesh(vertices, triangles, colors)
    except ValueError as exc:
        raise MeshFormatError(str(exc), path=path) from None


def save_mesh(mesh: Mesh, path, format=None, binary=True):
    """Write a mesh to a PLY or OBJ file, returning a list of warnings.

    Binary little-endian PLY (the default) round-trips vertex positions
    bit-for-bit (stored as float64) and colors exactly.  OBJ output drops
    vertex colors, reported via the returned warnings list.
    """
    fmt = _infer_format(path, format)
    warnings = []
    if fmt == "ply":
        _save_ply(mesh, path, binary=binary)
    else:
        if mesh.has_colors:
            warnings.append("vertex colors dropped: OBJ has no standard color encoding")
        _save_obj(mesh, path)
    return warnings
