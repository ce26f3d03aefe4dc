"""File formats: JSON documents, JSON-lines fingerprint datasets and CSV tables."""

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError

from ..exceptions import DataError
from ..rays.geometry import MProjection
from ..schema import DiagramDocument, DiagramMeta, FingerprintRecord, ProjectionDocument, RayConfig
from ..sim.render import DiagramStack, StabilityDiagram
from ..utils import atomic_write_text

T = TypeVar("T", bound=BaseModel)

_STACK_ADAPTER = TypeAdapter(List[DiagramDocument])


def save_document(doc: BaseModel, path: Path, indent: int | None = None) -> Path:
    return atomic_write_text(path, doc.model_dump_json(indent=indent))


def load_document(model: Type[T], path: Path) -> T:
    try:
        return model.model_validate_json(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"File not found: {path}") from e
    except (ValidationError, ValueError) as e:
        raise DataError(f"{path} is not a valid {model.__name__}: {e}") from e


# diagrams


def diagram_to_document(d: StabilityDiagram) -> DiagramDocument:
    w = d.window
    return DiagramDocument(
        meta=DiagramMeta(
            v1_min=w.v1_min,
            v1_max=w.v1_max,
            v2_min=w.v2_min,
            v2_max=w.v2_max,
            resolution_mv=d.resolution,
            vb_mv=d.vb,
            device_seed=d.device_seed,
            noise_seed=d.noise_seed,
        ),
        signal=d.signal.tolist(),
        labels=d.labels.astype(int).tolist(),
    )


def diagram_from_document(doc: DiagramDocument) -> StabilityDiagram:
    signal = np.asarray(doc.signal, dtype=float)
    labels = np.asarray(doc.labels, dtype=np.int8)
    if signal.ndim != 2 or labels.shape != signal.shape:
        raise DataError(f"Diagram grids have shapes {signal.shape} and {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 4):
        raise DataError("Diagram labels must be state values 0-4")
    res = doc.meta.resolution_mv
    n_rows, n_cols = signal.shape
    return StabilityDiagram(
        v1_axis=doc.meta.v1_min + res * np.arange(n_cols),
        v2_axis=doc.meta.v2_min + res * np.arange(n_rows),
        resolution=res,
        vb=doc.meta.vb_mv,
        signal=signal,
        labels=labels,
        device_seed=doc.meta.device_seed,
        noise_seed=doc.meta.noise_seed,
    )


def save_diagram(d: StabilityDiagram, path: Path) -> Path:
    return save_document(diagram_to_document(d), path)


def save_stack(stack: DiagramStack, path: Path) -> Path:
    docs = [diagram_to_document(s) for s in stack.slices]
    return atomic_write_text(path, _STACK_ADAPTER.dump_json(docs).decode())


def load_diagrams(path: Path) -> Union[StabilityDiagram, DiagramStack]:
    """A single diagram document, or a stack when the file holds a JSON array."""
    try:
        text = Path(path).read_text()
        if text.lstrip().startswith("["):
            docs = _STACK_ADAPTER.validate_json(text)
            return DiagramStack(tuple(diagram_from_document(d) for d in docs))
        return diagram_from_document(DiagramDocument.model_validate_json(text))
    except FileNotFoundError as e:
        raise DataError(f"File not found: {path}") from e
    except (ValidationError, ValueError) as e:
        raise DataError(f"{path} is not a valid diagram file: {e}") from e


def load_diagram(path: Path) -> StabilityDiagram:
    loaded = load_diagrams(path)
    if isinstance(loaded, DiagramStack):
        raise DataError(f"{path} holds a stack of {len(loaded)} diagrams, expected one")
    return loaded


def load_stack(path: Path) -> DiagramStack:
    loaded = load_diagrams(path)
    return loaded if isinstance(loaded, DiagramStack) else DiagramStack((loaded,))


def export_signal_csv(d: StabilityDiagram, path: Path) -> Path:
    """Signal grid as CSV; rows follow V_P2, columns V_P1."""
    buf = io.StringIO()
    np.savetxt(buf, d.signal, delimiter=",", fmt="%.17g")
    return atomic_write_text(path, buf.getvalue())


# projections


def projection_to_document(proj: MProjection) -> ProjectionDocument:
    return ProjectionDocument(
        origin_mv=(proj.origin[0], proj.origin[1]),
        vb_mv=proj.origin[2],
        m=proj.config.m,
        l_px=proj.config.l_px,
        px_mv=proj.config.px_mv,
        samples=proj.samples.tolist(),
    )


def projection_from_document(doc: ProjectionDocument) -> MProjection:
    cfg = RayConfig(m=doc.m, l_px=doc.l_px, px_mv=doc.px_mv)
    samples = np.asarray(doc.samples, dtype=float)
    if samples.shape != (cfg.m, cfg.l_px):
        raise DataError(f"Projection samples have shape {samples.shape}, expected {(cfg.m, cfg.l_px)}")
    return MProjection(origin=(doc.origin_mv[0], doc.origin_mv[1], doc.vb_mv), config=cfg, samples=samples)


def save_projection(proj: MProjection, path: Path) -> Path:
    return save_document(projection_to_document(proj), path)


def load_projection(path: Path) -> MProjection:
    return projection_from_document(load_document(ProjectionDocument, path))


# fingerprint datasets


def save_records(records: Iterable[FingerprintRecord], path: Path) -> Path:
    lines = [r.model_dump_json() for r in records]
    return atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_records(path: Path) -> List[FingerprintRecord]:
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError as e:
        raise DataError(f"File not found: {path}") from e
    records = []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(FingerprintRecord.model_validate_json(line))
        except (ValidationError, ValueError) as e:
            raise DataError(f"{path}:{n}: invalid fingerprint record: {e}") from e
    return records


# tables


def format_cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(x) for x in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path: Path) -> List[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_json(data: Any, path: Path) -> Path:
    return atomic_write_text(path, json.dumps(data, indent=2))
