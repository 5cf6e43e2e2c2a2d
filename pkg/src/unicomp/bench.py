"""Benchmark harness: per-file bits/byte over a corpus manifest.

A manifest has one ``<group>,<path>`` line per file, where the group is
``ascii``, ``utf8`` or ``binary`` and relative paths resolve against the
manifest's directory.  Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .container import CompressorId, compress, decompress
from .models import ModelError
from .ppm import PPMParams

log = logging.getLogger(__name__)

GROUPS = ("ascii", "utf8", "binary")


class ManifestError(ValueError):
    pass


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    group: str
    path: str

    @property
    def name(self) -> str:
        return os.path.basename(self.path)


@dataclass
class CorpusManifest:
    entries: List[CorpusEntry]
    source: Optional[str] = None

    @classmethod
    def parse(cls, text: str, root: str = ".", source: Optional[str] = None) -> "CorpusManifest":
        entries = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "," not in line:
                raise ManifestError(f"line {lineno}: expected '<group>,<path>'")
            group, path = (part.strip() for part in line.split(",", 1))
            if group not in GROUPS:
                raise ManifestError(f"line {lineno}: unknown group {group!r}")
            if not path:
                raise ManifestError(f"line {lineno}: empty path")
            if not os.path.isabs(path):
                path = os.path.normpath(os.path.join(root, path))
            entries.append(CorpusEntry(group, path))
        return cls(entries, source)

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        with open(path, encoding="utf-8") as f:
            text = f.read()
        return cls.parse(text, os.path.dirname(os.path.abspath(path)), str(path))

    def check(self) -> None:
        """Raise if any listed file is missing or unreadable."""
        for e in self.entries:
            if not os.access(e.path, os.R_OK):
                raise ManifestError(f"cannot read {e.path}")


@dataclass
class Measurement:
    input_bytes: int
    output_bytes: int
    seconds: float

    @property
    def bits_per_byte(self) -> float:
        if self.input_bytes == 0:
            return float("nan")
        return 8.0 * self.output_bytes / self.input_bytes


def measure(data: bytes, cid: CompressorId) -> Measurement:
    """Compress, verify the round trip, and report the container size."""
    t0 = time.perf_counter()
    blob = compress(data, cid)
    elapsed = time.perf_counter() - t0
    if decompress(blob) != data:
        raise RuntimeError(f"round trip mismatch under {cid.name}")
    return Measurement(len(data), len(blob), elapsed)


def _measure_file(path: str, cid: CompressorId) -> Measurement:
    with open(path, "rb") as f:
        return measure(f.read(), cid)


@dataclass
class EffectivenessReport:
    compressors: List[CompressorId]
    entries: List[CorpusEntry]
    results: Dict[Tuple[int, int], Measurement] = field(default_factory=dict)
    failures: Dict[Tuple[int, int], str] = field(default_factory=dict)

    def bpb(self, row: int, col: int) -> Optional[float]:
        m = self.results.get((row, col))
        return None if m is None else m.bits_per_byte

    def group_means(self) -> Dict[str, List[Optional[float]]]:
        """Unweighted mean bits/byte per group and compressor, failures excluded."""
        out = {}
        for group in GROUPS:
            rows = [i for i, e in enumerate(self.entries) if e.group == group]
            if not rows:
                continue
            means = []
            for col in range(len(self.compressors)):
                vals = [self.bpb(r, col) for r in rows]
                vals = [v for v in vals if v is not None and not math.isnan(v)]
                means.append(sum(vals) / len(vals) if vals else None)
            out[group] = means
        return out

    def best(self, values: Sequence[Optional[float]]) -> Optional[int]:
        live = [(round(v, 3), i) for i, v in enumerate(values) if v is not None and not math.isnan(v)]
        return min(live)[1] if live else None

    def _rows(self, mark_best: bool):
        labels = [c.label for c in self.compressors]
        yield ["group", "file", "bytes"] + labels
        for i, e in enumerate(self.entries):
            vals = [self.bpb(i, j) for j in range(len(self.compressors))]
            size = next((m.input_bytes for (r, _), m in self.results.items() if r == i), "")
            yield [e.group, e.name, str(size)] + _cells(vals, self.best(vals) if mark_best else None)
        for group, means in self.group_means().items():
            yield [group, "mean", ""] + _cells(means, self.best(means) if mark_best else None)

    def to_csv(self, mark_best: bool = False) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self._rows(mark_best):
            writer.writerow(row)
        return buf.getvalue()

    def to_table(self, mark_best: bool = True) -> str:
        rows = list(self._rows(mark_best))
        widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
        lines = []
        for n, r in enumerate(rows):
            cells = [r[0].ljust(widths[0]), r[1].ljust(widths[1])]
            cells += [c.rjust(w) for c, w in zip(r[2:], widths[2:])]
            lines.append("  ".join(cells).rstrip())
            if n == 0:
                lines.append("-" * len(lines[0]))
        return "\n".join(lines) + "\n"


def _cells(values, best: Optional[int]) -> List[str]:
    out = []
    for i, v in enumerate(values):
        if v is None:
            out.append("FAIL")
        elif math.isnan(v):
            out.append("-")
        else:
            out.append(f"{v:.3f}" + ("*" if i == best else ""))
    return out


def bench(manifest: CorpusManifest, ids: Sequence[CompressorId], jobs: int = 1) -> EffectivenessReport:
    """Run every compressor on every file, keeping verified results only."""
    report = EffectivenessReport(list(ids), list(manifest.entries))
    tasks = [(i, j) for i in range(len(manifest.entries)) for j in range(len(ids))]

    def record(key, fn):
        i, j = key
        try:
            report.results[key] = fn()
        except Exception as exc:  # report and move on
            msg = f"{type(exc).__name__}: {exc}"
            report.failures[key] = msg
            log.warning("%s under %s failed, excluded from means: %s",
                        manifest.entries[i].path, ids[j].name, msg)

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {key: pool.submit(_measure_file, manifest.entries[key[0]].path, ids[key[1]])
                       for key in tasks}
            for key, fut in futures.items():
                record(key, fut.result)
    else:
        for key in tasks:
            record(key, lambda key=key: _measure_file(manifest.entries[key[0]].path, ids[key[1]]))
    return report


@dataclass(frozen=True)
class GridPoint:
    depth: int
    alpha: float
    beta: float
    mean_bpb: float


def grid_search(manifest: CorpusManifest, algorithm: str, base: str,
                depths: Sequence[int], alphas: Sequence[float], betas: Sequence[float],
                concentration: Optional[float] = None) -> Tuple[GridPoint, List[GridPoint]]:
    """Exhaustive search for the PPM parameters with the lowest mean bits/byte.

    Pairs with ``alpha <= -beta`` are skipped.  Ties go to the smaller depth,
    then alpha, then beta.  Returns the winner and every evaluated point.
    """
    if algorithm != "ppm":
        raise UsageError("grid search only applies to ppm compressors")
    if not manifest.entries:
        raise UsageError("manifest lists no files")
    points = sorted(itertools.product(sorted(set(depths)), sorted(set(alphas)), sorted(set(betas))))
    points = [p for p in points if p[1] > -p[2]]
    if not points:
        raise UsageError("parameter grid is empty")
    data = []
    for e in manifest.entries:
        with open(e.path, "rb") as f:
            data.append(f.read())
    evaluated = []
    for d, a, b in points:
        try:
            cid = CompressorId(algorithm, base, PPMParams(d, a, b), concentration)
        except ModelError as exc:
            raise UsageError(str(exc)) from None
        vals = [measure(x, cid).bits_per_byte for x in data if x]
        mean = sum(vals) / len(vals) if vals else float("nan")
        evaluated.append(GridPoint(d, a, b, mean))
    best = min(evaluated, key=lambda g: (g.mean_bpb, g.depth, g.alpha, g.beta))
    return best, evaluated
