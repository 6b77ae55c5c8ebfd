"""On-disk run archives.

Layout of an archive directory::

    manifest.json   resolved manifest with embedded definitions
    schedule.json   integer schedule
    stream.bin      packed symbol prefix
    index.bin       sorted checkpoint table (M_j, band, kind, q)
    status.json     complete / resumable at band b
    audits/         CSV and JSON audit reports

Every write goes to a temporary file in the same directory and is then
renamed over the target.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

STREAM_MAGIC = b"SATS"
INDEX_MAGIC = b"SATI"
FORMAT_VERSION = 1
_STREAM_HEADER = struct.Struct("<4sHBBHQ")  # magic, version, bits, pad, alphabet, length
_INDEX_HEADER = struct.Struct("<4sHHQ")  # magic, version, pad, count
INDEX_DTYPE = np.dtype([("M", "<u8"), ("band", "<u4"), ("kind", "<u1"), ("q", "<u4")])


class ArchiveError(IOError):
    pass


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, data):
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ArchiveError(f"missing artifact {path}") from None


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    atomic_write_text(path, buf.getvalue())


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


# ---------------------------------------------------------------------------
# packed streams


def bits_per_symbol(alphabet_size: int) -> int:
    for bits in (1, 2, 4, 8):
        if alphabet_size <= 1 << bits:
            return bits
    raise ArchiveError(f"alphabet of size {alphabet_size} does not fit one byte")


def pack_symbols(symbols: np.ndarray, alphabet_size: int) -> bytes:
    """Header plus ``8 / bits`` symbols per byte, first symbol in the high bits."""
    sym = np.asarray(symbols, dtype=np.uint8)
    if sym.size and int(sym.max()) >= alphabet_size:
        raise ArchiveError("symbol outside the alphabet")
    bits = max(2, bits_per_symbol(alphabet_size))
    per = 8 // bits
    pad = (-sym.size) % per
    s = np.concatenate([sym, np.zeros(pad, dtype=np.uint8)]).reshape(-1, per)
    shifts = np.array([bits * (per - 1 - i) for i in range(per)], dtype=np.uint8)
    packed = np.bitwise_or.reduce(s << shifts, axis=1).astype(np.uint8)
    head = _STREAM_HEADER.pack(STREAM_MAGIC, FORMAT_VERSION, bits, 0, alphabet_size, sym.size)
    return head + packed.tobytes()


def unpack_symbols(data: bytes) -> tuple:
    """``(symbols, alphabet_size)``."""
    if len(data) < _STREAM_HEADER.size:
        raise ArchiveError("stream file truncated")
    magic, version, bits, _, a, n = _STREAM_HEADER.unpack_from(data)
    if magic != STREAM_MAGIC:
        raise ArchiveError("not a packed stream file")
    if version != FORMAT_VERSION:
        raise ArchiveError(f"unsupported stream version {version}")
    per = 8 // bits
    raw = np.frombuffer(data, dtype=np.uint8, offset=_STREAM_HEADER.size)
    if raw.size * per < n:
        raise ArchiveError("stream file truncated")
    shifts = np.array([bits * (per - 1 - i) for i in range(per)], dtype=np.uint8)
    mask = np.uint8((1 << bits) - 1)
    sym = ((raw[:, None] >> shifts) & mask).reshape(-1)[:n]
    return sym.astype(np.uint8), a


def write_stream(path, symbols, alphabet_size):
    atomic_write_bytes(path, pack_symbols(symbols, alphabet_size))


def read_stream(path) -> tuple:
    try:
        return unpack_symbols(Path(path).read_bytes())
    except FileNotFoundError:
        raise ArchiveError(f"missing artifact {path}") from None


def overwrite_symbols(path, offset: int, symbols):
    """Replace symbols in place (used to build fault-injected archives)."""
    sym, a = read_stream(path)
    sym = sym.copy()
    new = np.asarray(symbols, dtype=np.uint8)
    sym[offset:offset + len(new)] = new
    write_stream(path, sym, a)


# ---------------------------------------------------------------------------
# checkpoint index


def pack_index(M, bands, kinds, qs) -> bytes:
    rec = np.zeros(len(M), dtype=INDEX_DTYPE)
    rec["M"], rec["band"], rec["kind"], rec["q"] = M, bands, kinds, qs
    if len(rec) > 1 and np.any(np.diff(rec["M"].astype(np.int64)) <= 0):
        raise ArchiveError("checkpoint index must be strictly increasing")
    return _INDEX_HEADER.pack(INDEX_MAGIC, FORMAT_VERSION, 0, len(rec)) + rec.tobytes()


def unpack_index(data: bytes) -> np.ndarray:
    magic, version, _, n = _INDEX_HEADER.unpack_from(data)
    if magic != INDEX_MAGIC:
        raise ArchiveError("not a checkpoint index file")
    if version != FORMAT_VERSION:
        raise ArchiveError(f"unsupported index version {version}")
    return np.frombuffer(data, dtype=INDEX_DTYPE, count=n, offset=_INDEX_HEADER.size)


def schedule_index(schedule) -> tuple:
    """``(M, band, kind, q)`` arrays for every checkpoint of a schedule."""
    M = schedule.checkpoints()
    band = schedule.band_of_segment()
    S = schedule.band_bounds()
    kinds = np.zeros(len(M), dtype=np.uint8)
    qs = np.zeros(len(M), dtype=np.uint32)
    for j in range(1, len(M)):
        k = int(band[j])
        q = j - S[k - 1]
        N = schedule.band(k).N
        kinds[j], qs[j] = (1, q) if q <= N else (2, q - N)
    return M, band, kinds, qs


# ---------------------------------------------------------------------------
# archive


class RunArchive:
    def __init__(self, root):
        self.root = Path(root)

    def path(self, name) -> Path:
        return self.root / name

    @property
    def audit_dir(self) -> Path:
        return self.root / "audits"

    def exists(self) -> bool:
        return self.path("manifest.json").exists()

    # manifest / schedule / status
    def manifest(self) -> dict:
        return read_json(self.path("manifest.json"))

    def schedule_json(self) -> dict:
        return read_json(self.path("schedule.json"))

    def status(self) -> dict:
        return read_json(self.path("status.json"))

    def write_manifest(self, data):
        write_json(self.path("manifest.json"), data)

    def write_schedule(self, data):
        write_json(self.path("schedule.json"), data)

    def write_status(self, data):
        write_json(self.path("status.json"), data)

    # stream and index
    def write_stream(self, symbols, alphabet_size):
        write_stream(self.path("stream.bin"), symbols, alphabet_size)

    def read_stream(self) -> tuple:
        return read_stream(self.path("stream.bin"))

    def write_index(self, schedule):
        atomic_write_bytes(self.path("index.bin"), pack_index(*schedule_index(schedule)))

    def read_index(self) -> np.ndarray:
        try:
            return unpack_index(self.path("index.bin").read_bytes())
        except FileNotFoundError:
            raise ArchiveError(f"missing artifact {self.path('index.bin')}") from None

    def stream_digest(self) -> str:
        return hashlib.sha256(self.path("stream.bin").read_bytes()).hexdigest()

    # audits
    def write_audit_csv(self, name, header, rows) -> Path:
        p = self.audit_dir / f"{name}.csv"
        write_csv(p, header, rows)
        return p

    def write_audit_json(self, name, data) -> Path:
        p = self.audit_dir / f"{name}.json"
        write_json(p, data)
        return p
