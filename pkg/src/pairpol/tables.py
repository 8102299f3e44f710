"""File formats: count tables, density matrices, specs, spectroscopy data.

All writers are deterministic (floats rendered with repr, JSON keys sorted)
and all path-based writes are atomic (write to a sibling temp file, then
rename), so a failed run never leaves a partial output behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from .coincidence import CountRecord, FilterSpec
from .errors import InputError
from .jones import ProjectionSetting, WaveplateSetting
from .linalg import DensityMatrix
from .metrics import MetricsReport
from .source import SourceSpec
from .spectroscopy import CalibrationCurve, Spectrum, TimeHistogram

RECORD_COLUMNS = (
    "label",
    "hwp1_deg",
    "qwp1_deg",
    "hwp2_deg",
    "qwp2_deg",
    "integration_s",
    "coincidences",
    "singles_arm1",
    "singles_arm2",
)


def atomic_write_text(path, text: str) -> None:
    """Write-then-rename so partial files never persist."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def format_records(records: Sequence[CountRecord]) -> str:
    """Render the count-record table (CSV, empty cells for unconfigured arms)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for r in records:
        a1, a2 = r.setting.arm1, r.setting.arm2
        writer.writerow(
            [
                r.label,
                _fmt(a1.hwp_deg if a1 else None),
                _fmt(a1.qwp_deg if a1 else None),
                _fmt(a2.hwp_deg if a2 else None),
                _fmt(a2.qwp_deg if a2 else None),
                repr(float(r.integration_s)),
                str(r.coincidences),
                "" if r.singles_arm1 is None else str(r.singles_arm1),
                "" if r.singles_arm2 is None else str(r.singles_arm2),
            ]
        )
    return buf.getvalue()


def parse_records(text: str) -> list[CountRecord]:
    """Parse a count-record table; errors name the offending line."""
    reader = csv.reader(io.StringIO(text))
    rows = [(i + 1, row) for i, row in enumerate(reader) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise InputError("empty count table")
    header_line, header = rows[0]
    if [h.strip() for h in header] != list(RECORD_COLUMNS):
        raise InputError(
            f"line {header_line}: expected header {','.join(RECORD_COLUMNS)}"
        )
    records = []
    for lineno, row in rows[1:]:
        if len(row) != len(RECORD_COLUMNS):
            raise InputError(f"line {lineno}: expected {len(RECORD_COLUMNS)} fields, got {len(row)}")
        label, h1, q1, h2, q2, integ, coinc, s1, s2 = (cell.strip() for cell in row)
        try:
            arm1 = WaveplateSetting(float(h1), float(q1)) if h1 or q1 else None
            arm2 = WaveplateSetting(float(h2), float(q2)) if h2 or q2 else None
            setting = ProjectionSetting(label=label, arm1=arm1, arm2=arm2)
            record = CountRecord(
                label=label,
                setting=setting,
                integration_s=float(integ),
                coincidences=int(coinc),
                singles_arm1=int(s1) if s1 else None,
                singles_arm2=int(s2) if s2 else None,
            )
        except (InputError, ValueError) as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
        records.append(record)
    if not records:
        raise InputError("count table has a header but no data rows")
    return records


def write_records(path, records: Sequence[CountRecord]) -> None:
    atomic_write_text(path, format_records(records))


def read_records(path) -> list[CountRecord]:
    return parse_records(_read(path))


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _load_json(text: str, what: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed {what}: {exc}") from exc


def write_density_matrix(path, rho: DensityMatrix) -> None:
    atomic_write_text(path, _dump_json(rho.to_dict()))


def read_density_matrix(path) -> DensityMatrix:
    return DensityMatrix.from_dict(_load_json(_read(path), "density matrix"))


def write_source_spec(path, spec: SourceSpec) -> None:
    atomic_write_text(path, _dump_json(spec.to_dict()))


def read_source_spec(path) -> SourceSpec:
    return SourceSpec.from_dict(_load_json(_read(path), "source spec"))


def write_metrics_report(path, report: MetricsReport, extra: Optional[dict] = None) -> None:
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    atomic_write_text(path, _dump_json(payload))


def write_calibration_curve(path, curve: CalibrationCurve) -> None:
    atomic_write_text(path, _dump_json(curve.to_dict()))


def read_calibration_curve(path) -> CalibrationCurve:
    return CalibrationCurve.from_dict(_load_json(_read(path), "calibration curve"))


def parse_calibration_points(text: str) -> list[tuple[float, float]]:
    """Two-column (delay_ns, wavelength_nm) text; comma or whitespace separated."""
    points = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.replace(",", " ").split()
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected two columns, got {len(parts)}")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
    if not points:
        raise InputError("no calibration points found")
    return points


def read_calibration_points(path) -> list[tuple[float, float]]:
    return parse_calibration_points(_read(path))


def _format_binned(edges: Sequence[float], counts: Sequence[int], header: str) -> str:
    lines = [header]
    for e, c in zip(edges, counts):
        lines.append(f"{repr(float(e))}\t{c}")
    if edges:
        lines.append(f"{repr(float(edges[-1]))}\t")
    return "\n".join(lines) + "\n"


def _parse_binned(text: str, what: str) -> tuple[list[float], list[int]]:
    edges: list[float] = []
    counts: list[int] = []
    closed = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or lineno == 1 and not _is_number(stripped.split("\t")[0]):
            continue
        parts = stripped.split("\t")
        if closed:
            raise InputError(f"line {lineno}: data after the closing edge in {what}")
        try:
            edge = float(parts[0])
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
        if len(parts) == 1 or not parts[1].strip():
            edges.append(edge)
            closed = True
            continue
        try:
            count = int(parts[1])
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
        edges.append(edge)
        counts.append(count)
    if edges and not closed:
        raise InputError(f"{what} is missing its closing bin edge")
    return edges, counts


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def format_histogram(hist: TimeHistogram) -> str:
    text = _format_binned(hist.bin_edges_ns, hist.counts, "bin_edge_ns\tcount")
    return f"# dropped_events\t{hist.n_dropped}\n" + text


def parse_histogram(text: str) -> TimeHistogram:
    n_dropped = 0
    for line in text.splitlines():
        if line.startswith("# dropped_events"):
            n_dropped = int(line.split("\t")[1])
            break
    edges, counts = _parse_binned(
        "\n".join(l for l in text.splitlines() if not l.startswith("#")), "histogram"
    )
    return TimeHistogram(bin_edges_ns=tuple(edges), counts=tuple(counts), n_dropped=n_dropped)


def write_histogram(path, hist: TimeHistogram) -> None:
    atomic_write_text(path, format_histogram(hist))


def read_histogram(path) -> TimeHistogram:
    return parse_histogram(_read(path))


def format_spectrum(spectrum: Spectrum) -> str:
    return _format_binned(spectrum.bin_edges_nm, spectrum.counts, "wavelength_nm\tcount")


def parse_spectrum(text: str) -> Spectrum:
    edges, counts = _parse_binned(text, "spectrum")
    return Spectrum(bin_edges_nm=tuple(edges), counts=tuple(counts))


def write_spectrum(path, spectrum: Spectrum) -> None:
    atomic_write_text(path, format_spectrum(spectrum))


def read_spectrum(path) -> Spectrum:
    return parse_spectrum(_read(path))


# compact filter notation for command lines: lp1550:arm1, bp1475/50:before_splitter
def parse_filter_token(token: str) -> FilterSpec:
    spec = token.strip().lower()
    if ":" in spec:
        head, placement = spec.split(":", 1)
    else:
        head, placement = spec, "before_splitter"
    placement = {"before": "before_splitter"}.get(placement, placement)
    try:
        if head.startswith("lp"):
            return FilterSpec.longpass(float(head[2:]), placement)
        if head.startswith("bp"):
            center, fwhm = head[2:].split("/")
            return FilterSpec.bandpass(float(center), float(fwhm), placement)
    except (ValueError, IndexError) as exc:
        raise InputError(f"malformed filter token {token!r}: {exc}") from exc
    raise InputError(
        f"malformed filter token {token!r}; use lpCUTON[:place] or bpCENTER/FWHM[:place]"
    )


def parse_filters(tokens: str) -> list[FilterSpec]:
    if not tokens.strip():
        return []
    return [parse_filter_token(t) for t in tokens.split(",") if t.strip()]
