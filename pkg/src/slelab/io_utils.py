"""Deterministic artifact persistence: CSV, JSON, manifests.

Every writer is byte-deterministic given the same data — floats are
formatted with 17 significant digits (exact binary round-trip), JSON keys
are sorted, and files land via write-temp-then-rename so readers never
observe a partial file.  Manifests record enough to replay a run and
verify its outputs hash-for-hash.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterError
from .loewner import DrivingPath, Trace

__all__ = [
    "format_float",
    "write_text_atomic",
    "write_csv",
    "read_csv_columns",
    "write_driver_csv",
    "read_driver_csv",
    "write_trace_csv",
    "read_trace_csv",
    "write_samples_csv",
    "read_samples_csv",
    "write_grid_csv",
    "write_json",
    "read_json",
    "file_sha256",
    "RunManifest",
    "read_manifest",
]


def format_float(x: float) -> str:
    """Decimal form carrying the full 17 significant digits of a double.

    ``float(format_float(x)) == x`` exactly, which makes parse -> format a
    fixed point and CSV replays byte-identical.
    """
    return f"{float(x):.16e}"


def write_text_atomic(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temp file and atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def write_csv(path, header: list[str], rows) -> Path:
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        cells = [_cell(v) for v in row]
        if len(cells) != width:
            raise ParameterError(
                f"row width {len(cells)} does not match header width {width}"
            )
        lines.append(",".join(cells))
    return write_text_atomic(path, "\n".join(lines) + "\n")


def read_csv_columns(path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise ParameterError(f"empty CSV file: {path}")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    for row in rows:
        if len(row) != len(header):
            raise ParameterError(f"ragged CSV row in {path}")
    return header, rows


# ---------------------------------------------------------------------------
# drivers and traces


def write_driver_csv(path, driver: DrivingPath) -> Path:
    names = list(driver.forces)
    header = ["t", "xi", *names]
    cols = [driver.times, driver.xi, *(driver.forces[n] for n in names)]
    rows = zip(*cols)
    return write_csv(path, header, rows)


def read_driver_csv(path) -> DrivingPath:
    header, rows = read_csv_columns(path)
    if header[:2] != ["t", "xi"]:
        raise ParameterError(f"driver CSV must start with 't,xi': {path}")
    data = np.array([[float(v) for v in row] for row in rows])
    forces = {name: data[:, 2 + i] for i, name in enumerate(header[2:])}
    return DrivingPath(times=data[:, 0], xi=data[:, 1], forces=forces)


def write_trace_csv(path, trace: Trace) -> Path:
    rows = zip(trace.times, trace.points.real, trace.points.imag)
    return write_csv(path, ["t", "re", "im"], rows)


def read_trace_csv(path) -> Trace:
    header, rows = read_csv_columns(path)
    if header != ["t", "re", "im"]:
        raise ParameterError(f"trace CSV must have header 't,re,im': {path}")
    data = np.array([[float(v) for v in row] for row in rows])
    return Trace(times=data[:, 0], points=data[:, 1] + 1j * data[:, 2])


# ---------------------------------------------------------------------------
# crossing samples and grids


def write_samples_csv(path, samples) -> Path:
    rows = ((s.path_id, s.radius, s.kind, s.angle) for s in samples)
    return write_csv(path, ["path_id", "radius", "kind", "angle"], rows)


def read_samples_csv(path):
    from .reversibility import CrossingSample

    header, rows = read_csv_columns(path)
    if header != ["path_id", "radius", "kind", "angle"]:
        raise ParameterError(f"unexpected samples CSV header in {path}")
    return [
        CrossingSample(
            path_id=int(r[0]), radius=float(r[1]), kind=r[2], angle=float(r[3])
        )
        for r in rows
    ]


def write_grid_csv(path, grid) -> Path:
    from .coupling import GRID_COLUMNS, grid_table

    table = grid_table(grid)
    return write_csv(path, list(GRID_COLUMNS), table)


# ---------------------------------------------------------------------------
# JSON and manifests


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def write_json(path, obj) -> Path:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    return write_text_atomic(path, text)


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance record for one CLI run.

    ``params`` holds the full resolved parameter map (config file merged
    with flags), sufficient to repeat the run; ``files`` maps each output
    file name to its SHA-256, so a replay can be verified byte-for-byte.
    """

    command: str
    params: dict
    master_seed: int
    version: str = __version__
    started: str = ""
    finished: str = ""
    files: dict = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.files is None:
            self.files = {}
        if not self.started:
            self.started = self.now()

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")

    def record(self, path) -> None:
        path = Path(path)
        self.files[path.name] = file_sha256(path)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "master_seed": self.master_seed,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "files": self.files,
        }

    def write(self, path) -> Path:
        self.finished = self.now()
        return write_json(path, self.to_dict())


def read_manifest(path) -> dict:
    doc = read_json(path)
    missing = {"command", "params", "files"} - set(doc)
    if missing:
        raise ParameterError(
            f"manifest {path} is missing keys: {sorted(missing)}"
        )
    return doc
