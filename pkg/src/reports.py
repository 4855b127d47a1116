"""
Report writers for wavguard - CSV and JSON outputs of the CLI.

Machine-readable output only; diagnostics belong on stderr.
"""

import csv
import json
import sys
from contextlib import nullcontext
from pathlib import Path
from typing import Any, Optional, TextIO, Union

import numpy as np

from .envelope import Envelope
from .lpc import LpcAnalysis
from .verification import DetCurve

SCHEMA = 1


def _fmt(x: float) -> str:
    return f"{x:.10g}"


class ReportWriter:
    """Writes one report to a text stream (stdout by default)."""

    def __init__(self, stream: Optional[TextIO] = None):
        self.stream = stream if stream is not None else sys.stdout

    def _csv(self):
        return csv.writer(self.stream, lineterminator="\n")

    def write_json(self, payload: dict[str, Any]):
        payload = {"schema": SCHEMA, **payload}
        self.stream.write(json.dumps(payload, indent=2, sort_keys=False) + "\n")

    def write_envelope(self, env: Envelope, start: int = 0):
        writer = self._csv()
        writer.writerow(["sample_index", "envelope_value"])
        for i, value in enumerate(env.values):
            writer.writerow([start + i, _fmt(value)])

    def write_lpc(self, analysis: LpcAnalysis):
        writer = self._csv()
        order = analysis.config.order
        writer.writerow(["frame_index", "start"] + [f"a_{i}" for i in range(1, order + 1)]
                        + ["residual_variance"])
        for k, frame in enumerate(analysis.frames):
            writer.writerow([k, frame.start] + [_fmt(a) for a in frame.coeffs]
                            + [_fmt(frame.residual_variance)])

    def write_mulaw(self, codes: np.ndarray, decoded: np.ndarray):
        writer = self._csv()
        writer.writerow(["sample_index", "code", "decoded"])
        for i, (code, value) in enumerate(zip(codes, decoded)):
            writer.writerow([i, int(code), _fmt(value)])

    def write_det(self, curve: DetCurve):
        writer = self._csv()
        writer.writerow(["threshold", "fa_rate", "fr_rate"])
        for p in curve.points:
            writer.writerow([_fmt(p.threshold), _fmt(p.fa_rate), _fmt(p.fr_rate)])
        self.stream.write(
            f"# eer={_fmt(curve.eer)} threshold={_fmt(curve.eer_threshold)} "
            f"fa_rate={_fmt(curve.eer_fa_rate)} fr_rate={_fmt(curve.eer_fr_rate)} "
            f"flagged_rate={_fmt(curve.flagged_rate)}\n"
        )


def open_output(path: Optional[Union[str, Path]]):
    """Context manager yielding a writable text stream: the file, or stdout."""
    if path is None or str(path) == "-":
        return nullcontext(sys.stdout)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")

