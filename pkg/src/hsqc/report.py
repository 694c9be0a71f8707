"""Per-stage result record shared by all solvers."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class StageReport:
    """Outcome of one solver stage.

    ``model_time_s`` follows the fixed-constant runtime model used by every
    comparison; ``wall_time_s`` is what this machine actually measured and is
    reported separately.  ``counters`` holds the work quantities the model is
    computed from.  ``series`` carries optional per-step diagnostics and
    ``artifacts`` optional stage outputs consumed by later stages.
    """

    stage: str
    best_bitstring: str
    best_energy: float
    model_time_s: float
    wall_time_s: float
    seed: int
    counters: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def summary_dict(self) -> dict:
        """JSON-friendly view; wall time is isolated under "measured"."""
        return {
            "stage": self.stage,
            "best_bitstring": self.best_bitstring,
            "best_energy": self.best_energy,
            "model_time_s": self.model_time_s,
            "counters": dict(self.counters),
            "seed": self.seed,
            "measured": {"wall_time_s": self.wall_time_s},
        }
