"""Minimal PLY reader/writer for point clouds.

Supports the subset this project produces and consumes: a single ``vertex``
element with float or double x/y/z and optional uchar red/green/blue
(mapped to [0, 1] by /255), in ascii or binary_little_endian form. Parse
failures raise PlyParseError carrying the byte offset of the problem.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, PlyParseError
from .geometry import ColoredPointCloud, Frame

_POSITION_TYPES = {"float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8"}
_COLOR_TYPES = {"uchar": "u1", "uint8": "u1"}
_POSITION_NAMES = ("x", "y", "z")
_COLOR_NAMES = ("red", "green", "blue")


def _parse_header(data: bytes, path):
    """Parse the header; returns (fmt, count, properties, body_offset)."""
    offset = 0
    lines = []
    while True:
        end = data.find(b"\n", offset)
        if end < 0:
            raise PlyParseError(path, offset, "header is not terminated by end_header")
        line = data[offset:end].rstrip(b"\r")
        lines.append((offset, line))
        offset = end + 1
        if line == b"end_header":
            break

    if not lines or lines[0][1] != b"ply":
        raise PlyParseError(path, 0, "missing 'ply' magic line")

    fmt = None
    count = None
    properties = []  # (name, numpy dtype string) in declared order
    in_vertex = False
    for line_offset, raw in lines[1:-1]:
        try:
            text = raw.decode("ascii")
        except UnicodeDecodeError:
            raise PlyParseError(path, line_offset, "non-ascii bytes in header")
        fields = text.split()
        if not fields or fields[0] == "comment":
            continue
        if fields[0] == "format":
            if len(fields) != 3 or fields[2] != "1.0":
                raise PlyParseError(path, line_offset, f"malformed format line: {text!r}")
            if fields[1] not in ("ascii", "binary_little_endian"):
                raise PlyParseError(path, line_offset, f"unsupported format {fields[1]!r}")
            fmt = fields[1]
        elif fields[0] == "element":
            if len(fields) != 3:
                raise PlyParseError(path, line_offset, f"malformed element line: {text!r}")
            if fields[1] == "vertex":
                try:
                    count = int(fields[2])
                except ValueError:
                    raise PlyParseError(path, line_offset, f"bad vertex count {fields[2]!r}")
                if count < 0:
                    raise PlyParseError(path, line_offset, f"negative vertex count {count}")
                in_vertex = True
            else:
                if int(fields[2]) != 0:
                    raise PlyParseError(
                        path, line_offset, f"unsupported non-empty element {fields[1]!r}"
                    )
                in_vertex = False
        elif fields[0] == "property":
            if not in_vertex:
                continue
            if len(fields) != 3:
                raise PlyParseError(path, line_offset, f"malformed property line: {text!r}")
            ptype, name = fields[1], fields[2]
            if name in _POSITION_NAMES:
                if ptype not in _POSITION_TYPES:
                    raise PlyParseError(
                        path, line_offset, f"unsupported type {ptype!r} for property {name!r}"
                    )
                properties.append((name, _POSITION_TYPES[ptype]))
            elif name in _COLOR_NAMES:
                if ptype not in _COLOR_TYPES:
                    raise PlyParseError(
                        path, line_offset, f"unsupported type {ptype!r} for property {name!r}"
                    )
                properties.append((name, _COLOR_TYPES[ptype]))
            else:
                raise PlyParseError(path, line_offset, f"unsupported property {name!r}")
        else:
            raise PlyParseError(path, line_offset, f"unknown header keyword {fields[0]!r}")

    if fmt is None:
        raise PlyParseError(path, 0, "header has no format line")
    if count is None:
        raise PlyParseError(path, 0, "header has no vertex element")
    names = [n for n, _ in properties]
    if any(n not in names for n in _POSITION_NAMES):
        raise PlyParseError(path, 0, "vertex element must declare x, y and z")
    has_color = any(n in names for n in _COLOR_NAMES)
    if has_color and any(n not in names for n in _COLOR_NAMES):
        raise PlyParseError(path, 0, "color properties must be all of red, green, blue")
    return fmt, count, properties, offset


def _read_ascii_body(data, body_offset, count, properties, path):
    names = [n for n, _ in properties]
    rows = np.empty((count, len(names)), dtype=np.float64)
    offset = body_offset
    for i in range(count):
        if offset >= len(data):
            raise PlyParseError(path, len(data), f"body truncated at row {i} of {count}")
        end = data.find(b"\n", offset)
        if end < 0:
            end = len(data)
        tokens = data[offset:end].split()
        if len(tokens) != len(names):
            raise PlyParseError(
                path, offset, f"row {i} has {len(tokens)} values, expected {len(names)}"
            )
        try:
            rows[i] = [float(t) for t in tokens]
        except ValueError:
            raise PlyParseError(path, offset, f"row {i} contains a non-numeric value")
        offset = end + 1
    return {name: rows[:, j] for j, name in enumerate(names)}


def _read_binary_body(data, body_offset, count, properties, path):
    dtype = np.dtype([(name, code) for name, code in properties])
    need = count * dtype.itemsize
    have = len(data) - body_offset
    if have < need:
        raise PlyParseError(
            path, body_offset + have, f"body truncated: expected {need} bytes, found {have}"
        )
    table = np.frombuffer(data, dtype=dtype, count=count, offset=body_offset)
    return {name: table[name] for name, _ in properties}


def ply_read(path, frame: Frame = Frame.CAMERA) -> ColoredPointCloud:
    """Read a PLY point cloud; colors are present iff the file declares them."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e

    fmt, count, properties, body_offset = _parse_header(data, path)
    if fmt == "ascii":
        columns = _read_ascii_body(data, body_offset, count, properties, path)
    else:
        columns = _read_binary_body(data, body_offset, count, properties, path)

    positions = np.column_stack(
        [np.asarray(columns[n], dtype=np.float64) for n in _POSITION_NAMES]
    )
    colors = None
    if all(n in columns for n in _COLOR_NAMES):
        colors = np.column_stack(
            [np.asarray(columns[n], dtype=np.float64) / 255.0 for n in _COLOR_NAMES]
        )
    return ColoredPointCloud(positions=positions, colors=colors, frame=frame)


def ply_write(cloud: ColoredPointCloud, path, fmt: str = "binary_le") -> None:
    """Write a cloud as PLY ('ascii' or 'binary_le').

    Positions are written as doubles, so binary round-trips bit-exactly.
    Colors (8-bit) are written only when every point carries one; partially
    colored clouds are written position-only.
    """
    if fmt not in ("ascii", "binary_le"):
        raise InvalidInputError(f"unknown PLY format {fmt!r}")
    if len(cloud) == 0:
        raise InvalidInputError("refusing to write an empty cloud")

    write_colors = cloud.is_fully_colored
    if not write_colors and cloud.color_mask.any():
        import warnings

        warnings.warn(
            f"cloud is partially colored; writing {path} without colors", stacklevel=2
        )

    header = ["ply"]
    header.append("format ascii 1.0" if fmt == "ascii" else "format binary_little_endian 1.0")
    header.append(f"element vertex {len(cloud)}")
    header += [f"property double {n}" for n in _POSITION_NAMES]
    if write_colors:
        header += [f"property uchar {n}" for n in _COLOR_NAMES]
    header.append("end_header")

    if write_colors:
        rgb = np.clip(np.rint(cloud.colors * 255.0), 0, 255).astype(np.uint8)

    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        if fmt == "ascii":
            for i in range(len(cloud)):
                x, y, z = (float(v) for v in cloud.positions[i])
                row = f"{x!r} {y!r} {z!r}"
                if write_colors:
                    row += " {} {} {}".format(*rgb[i])
                f.write((row + "\n").encode("ascii"))
        else:
            fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
            if write_colors:
                fields += [(n, "u1") for n in _COLOR_NAMES]
            table = np.empty(len(cloud), dtype=np.dtype(fields))
            table["x"], table["y"], table["z"] = cloud.positions.T
            if write_colors:
                table["red"], table["green"], table["blue"] = rgb.T
            f.write(table.tobytes())
