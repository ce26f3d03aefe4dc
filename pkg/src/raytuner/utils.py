import hashlib
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Optional


def file_digest(file_path: Path) -> str:
    """SHA256 of a file, used to report and compare generated artifacts."""
    sha256_hash = hashlib.sha256()
    with open(file_path, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return f"sha256:{sha256_hash.hexdigest()}"


def atomic_write_text(path: Path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def finite_or_none(x: Any) -> Optional[float]:
    """JSON has no infinity; rejected evaluations are stored as null."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def none_to_inf(x: Optional[float]) -> float:
    return math.inf if x is None else float(x)
