"""Readers and writers for CSV, PGM images, and MovieLens 100k ratings."""

from __future__ import annotations

import hashlib
import re
import warnings
from pathlib import Path

import numpy as np

from .errors import DuplicateEntryWarning, ParseError
from .observation import ObservedMatrix

MOVIELENS_SHAPE = (1682, 943)  # movies x users
_MISSING_TOKENS = {"", "nan"}


def load_csv(path) -> ObservedMatrix:
    """Rectangular numeric CSV; empty cells and ``NaN`` mark missing entries."""
    path = Path(path)
    lines = path.read_text().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("empty file", path)
    rows = []
    width = None
    for i, line in enumerate(lines, start=1):
        tokens = [t.strip() for t in line.split(",")]
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise ParseError(f"expected {width} fields, found {len(tokens)}", path, row=i)
        row = []
        for j, tok in enumerate(tokens, start=1):
            if tok.lower() in _MISSING_TOKENS:
                row.append(np.nan)
                continue
            try:
                v = float(tok)
            except ValueError:
                raise ParseError(f"non-numeric token {tok!r}", path, row=i, column=j) from None
            if not np.isfinite(v):
                raise ParseError(f"non-finite value {tok!r}", path, row=i, column=j)
            row.append(v)
        rows.append(row)
    return ObservedMatrix.from_array(np.array(rows, dtype=np.float64))


def save_csv(matrix, path) -> None:
    """Write with 17 significant digits; unobserved cells of an
    :class:`ObservedMatrix` are written as ``NaN``."""
    if isinstance(matrix, ObservedMatrix):
        matrix = matrix.to_array()
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join("NaN" if np.isnan(v) else format(v, ".17g") for v in row))
            fh.write("\n")


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*")


def _pgm_header(buf: bytes, path):
    """Return (magic, width, height, maxval, offset of the pixel data)."""
    pos = 0
    fields = []
    while len(fields) < 4:
        pos = _PGM_TOKEN.match(buf, pos).end()
        m = re.compile(rb"\S+").match(buf, pos)
        if m is None:
            raise ParseError("truncated PGM header", path)
        fields.append(m.group())
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"unsupported magic number {magic!r}; expected P2 or P5", path)
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ParseError("non-integer PGM header field", path) from None
    if width < 1 or height < 1:
        raise ParseError(f"invalid dimensions {width}x{height}", path)
    if not 0 < maxval <= 65535:
        raise ParseError(f"maxval {maxval} outside 1..65535", path)
    return magic, width, height, maxval, pos


def _read_pgm_pixels(path) -> tuple[np.ndarray, int]:
    path = Path(path)
    buf = path.read_bytes()
    magic, width, height, maxval, pos = _pgm_header(buf, path)
    count = width * height
    if magic == b"P2":
        body = re.sub(rb"#[^\n]*", b"", buf[pos:]).split()
        if len(body) != count:
            raise ParseError(f"expected {count} pixels, found {len(body)}", path)
        try:
            pixels = np.array([int(t) for t in body], dtype=np.int64)
        except ValueError:
            raise ParseError("non-integer pixel value", path) from None
    else:
        if pos >= len(buf) or not buf[pos : pos + 1].isspace():
            raise ParseError("missing whitespace after PGM header", path)
        data = buf[pos + 1 :]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(data) != count * dtype.itemsize:
            raise ParseError(
                f"expected {count * dtype.itemsize} bytes of pixel data, found {len(data)}", path
            )
        pixels = np.frombuffer(data, dtype=dtype).astype(np.int64)
    if pixels.min() < 0 or pixels.max() > maxval:
        raise ParseError(f"pixel value outside 0..{maxval}", path)
    return pixels.reshape(height, width), maxval


def _load_mask_file(path, shape) -> np.ndarray:
    """Sidecar mask: PGM or whitespace-separated text, nonzero = missing."""
    path = Path(path)
    head = path.read_bytes()[:2]
    if head in (b"P2", b"P5"):
        grid, _ = _read_pgm_pixels(path)
    else:
        try:
            grid = np.loadtxt(path, ndmin=2)
        except ValueError as exc:
            raise ParseError(f"unreadable mask file ({exc})", path) from None
    if grid.shape != shape:
        raise ParseError(f"mask shape {grid.shape} does not match image shape {shape}", path)
    return grid == 0


def load_pgm(path, mask_path=None) -> ObservedMatrix:
    """Grayscale PGM (P2 or P5) as a matrix; pixel (i, j) becomes entry (i, j).

    ``mask_path`` names an optional sidecar of the same size whose nonzero
    cells mark missing pixels.
    """
    pixels, _ = _read_pgm_pixels(path)
    mask = np.ones(pixels.shape, dtype=bool)
    if mask_path is not None:
        mask = _load_mask_file(mask_path, pixels.shape)
    return ObservedMatrix(pixels.astype(np.float64), mask)


def pgm_maxval(path) -> int:
    return _read_pgm_pixels(path)[1]


def save_pgm(matrix, path, maxval: int = 255, binary: bool = True) -> None:
    """Clamp to ``[0, maxval]``, round to integers, and write P5 (or P2)."""
    if not 0 < maxval <= 65535:
        raise ValueError(f"maxval {maxval} outside 1..65535")
    if isinstance(matrix, ObservedMatrix):
        matrix = matrix.values
    matrix = np.asarray(matrix, dtype=np.float64)
    pixels = np.rint(np.clip(np.nan_to_num(matrix, nan=0.0), 0, maxval)).astype(np.int64)
    height, width = pixels.shape
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n{maxval}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
            fh.write(pixels.astype(dtype).tobytes())
        else:
            for row in pixels:
                fh.write((" ".join(str(v) for v in row) + "\n").encode())


def load_movielens(path, shape=MOVIELENS_SHAPE) -> ObservedMatrix:
    """MovieLens 100k ``u.data`` as a movies x users rating matrix.

    Lines are ``user<TAB>item<TAB>rating<TAB>timestamp`` with 1-based ids.
    A repeated (user, item) pair keeps its last rating and triggers a
    :class:`DuplicateEntryWarning`.
    """
    path = Path(path)
    n_items, n_users = shape
    values = np.zeros(shape)
    mask = np.zeros(shape, dtype=bool)
    duplicates = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(f"expected 4 tab-separated fields, found {len(parts)}", path, row=lineno)
            try:
                user, item = int(parts[0]), int(parts[1])
                rating = float(parts[2])
                int(parts[3])
            except ValueError:
                raise ParseError(f"malformed record {line.strip()!r}", path, row=lineno) from None
            if not 1 <= user <= n_users:
                raise ParseError(f"user id {user} outside 1..{n_users}", path, row=lineno, column=1)
            if not 1 <= item <= n_items:
                raise ParseError(f"item id {item} outside 1..{n_items}", path, row=lineno, column=2)
            if not np.isfinite(rating):
                raise ParseError(f"non-finite rating {parts[2]!r}", path, row=lineno, column=3)
            if mask[item - 1, user - 1]:
                duplicates += 1
            values[item - 1, user - 1] = rating
            mask[item - 1, user - 1] = True
    if duplicates:
        warnings.warn(
            f"{path}: {duplicates} duplicate (user, item) pairs; kept the last rating",
            DuplicateEntryWarning,
            stacklevel=2,
        )
    return ObservedMatrix(values, mask)


def fingerprint(x: ObservedMatrix) -> dict:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(x.mask).tobytes())
    h.update(np.ascontiguousarray(x.values).tobytes())
    return {"rows": x.m, "cols": x.n, "observed": x.n_observed, "sha256": h.hexdigest()}
