"""Step timing for experiment runs."""

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

from ..utils import atomic_write_text


@dataclass
class TraceStep:
    """A single step of a run."""

    name: str
    count: int
    elapsed_ms: float


@dataclass
class RunTrace:
    """Records named steps with item counts and timing.

    Usage:
        trace = RunTrace(enabled=True, label="sweep")
        trace.add_step("Generate dataset", len(records))
        ...
        trace.save_json(Path("results.trace.json"))

    A disabled trace ignores every call, so callers never need to check.
    """

    enabled: bool = False
    label: str = "run"
    steps: List[TraceStep] = field(default_factory=list)
    _start_time: float = field(default_factory=time.perf_counter)
    _last_step_time: float = field(default_factory=time.perf_counter)

    def add_step(self, name: str, count: int = 0) -> None:
        """Record a step with its item count and the time since the previous step."""
        if not self.enabled:
            return
        now = time.perf_counter()
        elapsed_ms = (now - self._last_step_time) * 1000
        self._last_step_time = now
        self.steps.append(TraceStep(name=name, count=count, elapsed_ms=elapsed_ms))

    def total_time_ms(self) -> float:
        """Get total run time in milliseconds."""
        return (time.perf_counter() - self._start_time) * 1000

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "total_ms": self.total_time_ms(),
            "steps": [asdict(s) for s in self.steps],
        }

    def save_json(self, path: Path) -> Optional[Path]:
        if not self.enabled:
            return None
        text = json.dumps(self.to_dict(), indent=2)
        return atomic_write_text(path, text)
