"""Model files and the default model directory."""

import os
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from ..schema import ModelDocument
from ..utils import atomic_write_text
from .exceptions import ModelNotFoundError
from .mlp import MLPModel

MODEL_FILE_VERSION = 1

# Default location for trained models
DEFAULT_MODEL_DIR = Path.home() / ".cache" / "raytuner" / "models"


def get_model_dir() -> Path:
    """Model directory, respecting RAYTUNER_OUTPUT_DIR and then XDG_CACHE_HOME."""
    out_dir = os.environ.get("RAYTUNER_OUTPUT_DIR")
    if out_dir:
        return Path(out_dir) / "models"
    xdg_cache = os.environ.get("XDG_CACHE_HOME")
    if xdg_cache:
        return Path(xdg_cache) / "raytuner" / "models"
    return DEFAULT_MODEL_DIR


def to_document(model: MLPModel) -> ModelDocument:
    return ModelDocument(
        version=MODEL_FILE_VERSION,
        m=model.m,
        layer_dims=model.layer_dims,
        weights=[w.tolist() for w in model.weights],
        biases=[b.tolist() for b in model.biases],
        l_px=model.l_px,
        weight_id=model.weight_id,
    )


def from_document(doc: ModelDocument) -> MLPModel:
    if doc.version != MODEL_FILE_VERSION:
        raise ModelNotFoundError(f"Unsupported model file version {doc.version}")
    model = MLPModel(
        weights=[np.asarray(w, dtype=float) for w in doc.weights],
        biases=[np.asarray(b, dtype=float) for b in doc.biases],
        l_px=doc.l_px,
        weight_id=doc.weight_id,
    )
    if model.layer_dims != doc.layer_dims or model.m != doc.m:
        raise ModelNotFoundError(f"Model file layer_dims {doc.layer_dims} disagree with its weights")
    return model


def save_model(model: MLPModel, path: Path) -> Path:
    return atomic_write_text(path, to_document(model).model_dump_json())


def resolve_model_path(name: str | Path, model_dir: Optional[Path] = None) -> Path:
    """An existing path as given, else ``name`` inside the model directory."""
    path = Path(name)
    if path.exists():
        return path
    candidate = (model_dir or get_model_dir()) / path.name
    if candidate.exists():
        return candidate
    raise ModelNotFoundError(f"Model {name} not found (also looked in {candidate.parent})")


def load_model(name: str | Path, model_dir: Optional[Path] = None) -> MLPModel:
    path = resolve_model_path(name, model_dir)
    try:
        doc = ModelDocument.model_validate_json(path.read_text())
    except (ValidationError, ValueError) as e:
        raise ModelNotFoundError(f"Failed to parse model file {path}: {e}") from e
    return from_document(doc)
