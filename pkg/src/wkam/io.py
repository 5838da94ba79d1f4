"""Binary grid files, the on-disk kernel cache and CSV exports.

Grid file layout (little-endian)::

    b"WKAM" | u16 version | u16 ndim | u32 size per axis | float64 values

Values are stored in row-major node order.  A text sidecar ``<path>.meta``
holds ``key=value`` lines including the SHA-256 of the value bytes.  All
writes go to a temporary file in the target directory and are renamed into
place.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .kernel import ActionKernel
from .model import TorusGrid, symmetric_nodes
from .transform import LagrangianTable

__all__ = [
    "GridFormatError",
    "write_grid",
    "read_grid",
    "read_meta",
    "atomic_write",
    "write_csv",
    "write_mask",
    "save_lagrangian",
    "load_lagrangian",
    "KernelCache",
    "FORMAT_VERSION",
]

MAGIC = b"WKAM"
FORMAT_VERSION = 1
CACHE_VERSION = 1


class GridFormatError(ValueError):
    pass


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta_text(meta: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in meta.items())


def _parse_meta(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, _, v = line.partition("=")
        out[k.strip()] = v.strip()
    return out


def write_grid(u, path, spacing=None, label: str = "", alpha: float = float("nan"),
               anchor: int = 0, extra: dict = None) -> None:
    """Write an array in the binary grid format plus its ``.meta`` sidecar."""
    u = np.asarray(u, dtype="<f8")
    if not 1 <= u.ndim <= 8:
        raise ValueError("arrays of 1 to 8 axes only")
    u = np.ascontiguousarray(u)
    if spacing is None:
        spacing = tuple(1.0 / s for s in u.shape)
    payload = u.tobytes(order="C")
    head = MAGIC + struct.pack("<HH", FORMAT_VERSION, u.ndim)
    head += struct.pack(f"<{u.ndim}I", *u.shape)
    meta = {
        "format_version": FORMAT_VERSION,
        "shape": ",".join(str(s) for s in u.shape),
        "spacing": ",".join(repr(float(s)) for s in np.atleast_1d(spacing)),
        "label": label,
        "alpha": repr(float(alpha)),
        "anchor": int(anchor),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    for k, v in (extra or {}).items():
        if k in meta:
            raise ValueError(f"reserved meta key {k}")
        meta[k] = v
    atomic_write(path, head + payload)
    atomic_write(f"{path}.meta", _meta_text(meta).encode())


def read_meta(path) -> dict:
    p = Path(f"{path}.meta")
    return _parse_meta(p.read_text()) if p.exists() else {}


def read_grid(path, with_meta: bool = False):
    """Read a grid file written by :func:`write_grid`.

    Raises
    ------
    GridFormatError
        On a wrong magic, an unknown version or a truncated payload.

    A sidecar hash that does not match the payload only warns.
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise GridFormatError(f"{path}: bad magic")
    version, ndim = struct.unpack_from("<HH", data, 4)
    if version != FORMAT_VERSION:
        raise GridFormatError(f"{path}: unsupported format version {version}")
    if not 1 <= ndim <= 8 or len(data) < 8 + 4 * ndim:
        raise GridFormatError(f"{path}: bad header")
    shape = struct.unpack_from(f"<{ndim}I", data, 8)
    off = 8 + 4 * ndim
    count = int(np.prod(shape))
    if len(data) != off + 8 * count:
        raise GridFormatError(f"{path}: payload size does not match header")
    payload = data[off:]
    u = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(float)
    meta = read_meta(path)
    h = meta.get("sha256")
    if h is not None and h != hashlib.sha256(payload).hexdigest():
        warnings.warn(f"{path}: content hash does not match the sidecar", stacklevel=2)
    return (u, meta) if with_meta else u


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_mask(path, mask) -> None:
    """Node-index list of a boolean mask, one flat index per line."""
    idx = np.flatnonzero(np.asarray(mask).reshape(-1))
    atomic_write(path, "".join(f"{i}\n" for i in idx).encode())


def save_lagrangian(L: LagrangianTable, path) -> None:
    """Values in one grid file, maximising momenta in ``<path>.argmax``."""
    extra = {
        "kind": "lagrangian",
        "base_shape": ",".join(str(s) for s in L.grid.shape),
        "x_refine": L.x_refine,
        "v_window": repr(L.v_window),
        "n_v": len(L.v_nodes[0]),
    }
    write_grid(L.values, path, label=L.label, extra=extra)
    write_grid(L.argmax_p, f"{path}.argmax", label=L.label)


def load_lagrangian(path) -> LagrangianTable:
    values, meta = read_grid(path, with_meta=True)
    if meta.get("kind") != "lagrangian":
        raise GridFormatError(f"{path}: not a Lagrangian table")
    argmax = read_grid(f"{path}.argmax")
    grid = TorusGrid(tuple(int(s) for s in meta["base_shape"].split(",")))
    nodes = symmetric_nodes(float(meta["v_window"]), int(meta["n_v"]))
    return LagrangianTable(grid, [nodes.copy() for _ in range(grid.dim)], values, argmax,
                           meta.get("label", ""), int(meta["x_refine"]))


class KernelCache:
    """Directory of kernels keyed by a hash of their defining data.

    The location is ``root``, else ``$WKAM_CACHE_DIR``, else
    ``~/.cache/wkam``.  Each entry is ``<key>.npy`` (costs) and
    ``<key>.meta``.
    """

    def __init__(self, root=None):
        if root is None:
            root = os.environ.get("WKAM_CACHE_DIR") or Path.home() / ".cache" / "wkam"
        self.root = Path(root)

    @staticmethod
    def key(label: str, grid: TorusGrid, tau: float, p_window: float, v_window: float,
            direction: str = "negative", **extra) -> str:
        ident = {"label": label, "shape": list(grid.shape), "tau": repr(float(tau)),
                 "p_window": repr(float(p_window)), "v_window": repr(float(v_window)),
                 "direction": direction, "version": CACHE_VERSION}
        ident.update({k: repr(v) for k, v in sorted(extra.items())})
        blob = json.dumps(ident, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def _paths(self, key: str):
        return self.root / f"{key}.npy", self.root / f"{key}.meta"

    def store(self, key: str, K: ActionKernel) -> None:
        import io as _io

        buf = _io.BytesIO()
        np.save(buf, np.ascontiguousarray(K.costs), allow_pickle=False)
        npy, meta = self._paths(key)
        band = "dense" if K.band is None else ",".join(str(b) for b in K.band)
        info = {"format_version": CACHE_VERSION,
                "grid": ",".join(str(s) for s in K.grid.shape),
                "tau": repr(float(K.step)), "band": band, "direction": K.direction,
                "label": K.label,
                "v_window": repr(float(K.meta.get("v_window", float("nan"))))}
        atomic_write(npy, buf.getvalue())
        atomic_write(meta, _meta_text(info).encode())

    def load(self, key: str):
        """Cached kernel or ``None`` (missing, unreadable or stale entry)."""
        npy, meta = self._paths(key)
        if not (npy.exists() and meta.exists()):
            return None
        try:
            info = _parse_meta(meta.read_text())
            if int(info["format_version"]) != CACHE_VERSION:
                return None
            costs = np.load(npy, allow_pickle=False)
            grid = TorusGrid(tuple(int(s) for s in info["grid"].split(",")))
            band = None if info["band"] == "dense" else tuple(int(b) for b in info["band"].split(","))
            meta_d = {}
            if info.get("v_window") not in (None, "nan"):
                meta_d["v_window"] = float(info["v_window"])
            return ActionKernel(grid, float(info["tau"]), costs, band, info["direction"],
                                info.get("label", ""), meta_d)
        except (KeyError, ValueError, OSError):
            return None

    def entries(self) -> list:
        if not self.root.exists():
            return []
        out = []
        for meta in sorted(self.root.glob("*.meta")):
            info = _parse_meta(meta.read_text())
            npy = meta.with_suffix(".npy")
            info["key"] = meta.stem
            info["bytes"] = npy.stat().st_size if npy.exists() else 0
            out.append(info)
        return out

    def clear(self) -> int:
        n = len(self.entries())
        if self.root.exists():
            for p in list(self.root.glob("*.npy")) + list(self.root.glob("*.meta")):
                p.unlink()
        return n
