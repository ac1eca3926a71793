"""Session recordings: the per-frame table and its on-disk forms.

A recording is one CSV (one row per 10 Hz frame) plus a raw-EMG binary
sidecar.  The sidecar holds the full-rate synthetic EMG as little-endian
float32, 6 channels interleaved, behind a 12-byte header: magic "EMG0",
uint32 channel count, uint32 sample rate.  Each CSV row points into the
sidecar via ``emg_sample0``, the index of the first raw sample of the
frame's averaging block.

Floats are written with ``%.17g`` so a round-trip through text is exact.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .emgproc import MUSCLES, N_MUSCLES

MAGIC = b"EMG0"
_HEADER = struct.Struct("<4sII")


@dataclass
class SessionRecording:
    """Frame-rate view of one session, plus the raw EMG it came from.

    All per-frame arrays share the leading dimension.  ``label_k`` and
    ``label_theta`` are NaN on calibration frames, which carry no
    tracking condition.  ``impedance_tau`` equals ``subject_tau`` row for
    row: the plant has no other torque source, so the impedance reaction
    balances the subject's command at every sampled instant.
    """

    t: np.ndarray              # (n,) session clock, seconds
    trial: np.ndarray          # (n,) int trial index
    neutral: np.ndarray        # (n, 2)
    target: np.ndarray         # (n, 2)
    actual: np.ndarray         # (n, 2)
    deviation: np.ndarray      # (n, 2) actual - neutral
    subject_tau: np.ndarray    # (n, 2)
    impedance_tau: np.ndarray  # (n, 2)
    emg_sample0: np.ndarray    # (n,) int index into emg
    activations: np.ndarray    # (n, 6)
    distribution: np.ndarray   # (n, 6) simplex rows
    degenerate: np.ndarray     # (n,) bool, distribution fell back to uniform
    fatigue: np.ndarray        # (n, 6) multipliers
    label_k: np.ndarray        # (n,) stiffness, NaN on calibration frames
    label_theta: np.ndarray    # (n,) orientation deg, NaN likewise
    emg: np.ndarray            # (m, 6) float32 raw samples
    emg_rate: float = 2000.0

    def __len__(self) -> int:
        return len(self.t)


def _columns() -> list[str]:
    cols = ["t_session", "trial",
            "neutral_x", "neutral_y", "target_x", "target_y",
            "actual_x", "actual_y", "dev_x", "dev_y",
            "subject_tau1", "subject_tau2",
            "impedance_tau1", "impedance_tau2", "emg_sample0"]
    cols += [f"act_{m}" for m in MUSCLES]
    cols += [f"m_{m}" for m in MUSCLES]
    cols.append("degenerate")
    cols += [f"fatigue_{m}" for m in MUSCLES]
    cols += ["label_k", "label_theta"]
    return cols


CSV_COLUMNS = _columns()


def recording_table(rec: SessionRecording) -> np.ndarray:
    """The CSV body as one float matrix, columns per CSV_COLUMNS."""
    return np.column_stack([
        rec.t, rec.trial.astype(float),
        rec.neutral, rec.target, rec.actual, rec.deviation,
        rec.subject_tau, rec.impedance_tau,
        rec.emg_sample0.astype(float),
        rec.activations, rec.distribution,
        rec.degenerate.astype(float), rec.fatigue,
        rec.label_k, rec.label_theta,
    ])


def write_csv(rec: SessionRecording, path: str) -> None:
    table = recording_table(rec)
    int_cols = {CSV_COLUMNS.index("trial"),
                CSV_COLUMNS.index("emg_sample0"),
                CSV_COLUMNS.index("degenerate")}
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        buf = io.StringIO()
        for row in table:
            cells = [("%d" % row[i]) if i in int_cols else ("%.17g" % row[i])
                     for i in range(len(CSV_COLUMNS))]
            buf.write(",".join(cells))
            buf.write("\n")
        fh.write(buf.getvalue())


def write_sidecar(rec: SessionRecording, path: str) -> None:
    emg = np.ascontiguousarray(rec.emg, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, emg.shape[1], int(round(rec.emg_rate))))
        fh.write(emg.tobytes())


def read_sidecar(path: str) -> tuple[np.ndarray, float]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError(f"{path}: truncated EMG sidecar header")
        magic, channels, rate = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        body = fh.read()
    data = np.frombuffer(body, dtype="<f4")
    if channels == 0 or len(data) % channels:
        raise ValueError(f"{path}: sample count not divisible by "
                         f"{channels} channels")
    return data.reshape(-1, channels).astype(np.float32), float(rate)


def read_csv(path: str) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV columns")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape[0] and table.shape[1] != len(CSV_COLUMNS):
        raise ValueError(f"{path}: expected {len(CSV_COLUMNS)} columns, "
                         f"got {table.shape[1]}")
    return {name: table[:, i] for i, name in enumerate(CSV_COLUMNS)}


def _gather(cols: dict[str, np.ndarray], names: list[str]) -> np.ndarray:
    return np.column_stack([cols[n] for n in names])


def load_recording(csv_path: str, sidecar_path: str) -> SessionRecording:
    cols = read_csv(csv_path)
    emg, rate = read_sidecar(sidecar_path)
    acts = _gather(cols, [f"act_{m}" for m in MUSCLES])
    dist = _gather(cols, [f"m_{m}" for m in MUSCLES])
    fat = _gather(cols, [f"fatigue_{m}" for m in MUSCLES])
    return SessionRecording(
        t=cols["t_session"],
        trial=cols["trial"].astype(np.int64),
        neutral=_gather(cols, ["neutral_x", "neutral_y"]),
        target=_gather(cols, ["target_x", "target_y"]),
        actual=_gather(cols, ["actual_x", "actual_y"]),
        deviation=_gather(cols, ["dev_x", "dev_y"]),
        subject_tau=_gather(cols, ["subject_tau1", "subject_tau2"]),
        impedance_tau=_gather(cols, ["impedance_tau1", "impedance_tau2"]),
        emg_sample0=cols["emg_sample0"].astype(np.int64),
        activations=acts,
        distribution=dist,
        degenerate=cols["degenerate"] != 0,
        fatigue=fat,
        label_k=cols["label_k"],
        label_theta=cols["label_theta"],
        emg=emg,
        emg_rate=rate,
    )


def save_recording(rec: SessionRecording, csv_path: str,
                   sidecar_path: str) -> None:
    write_csv(rec, csv_path)
    write_sidecar(rec, sidecar_path)
