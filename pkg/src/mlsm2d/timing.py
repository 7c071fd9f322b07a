"""Wall-clock phase accounting for solver runs."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

PHASES = (
    "domain",
    "relaxation",
    "refinement",
    "supports",
    "shapes",
    "assembly",
    "preconditioner",
    "solve",
    "postprocess",
)


@dataclass
class TimingReport:
    """Seconds per phase plus the total wall time of the run."""

    phases: dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def validate(self) -> None:
        if any(t < 0 for t in self.phases.values()):
            raise ValueError("negative phase time")
        if self.phases and self.total < max(self.phases.values()):
            raise ValueError("total below the largest phase")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("phase,seconds\n")
            for name in PHASES:
                if name in self.phases:
                    fh.write(f"{name},{self.phases[name]:.6f}\n")
            for name in self.phases:
                if name not in PHASES:
                    fh.write(f"{name},{self.phases[name]:.6f}\n")
            fh.write(f"total,{self.total:.6f}\n")


class PhaseTimer:
    """Accumulates named phase durations; create one per run."""

    def __init__(self) -> None:
        self._start = time.perf_counter()
        self._phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self._phases[name] = self._phases.get(name, 0.0) + time.perf_counter() - t0

    def add(self, name: str, seconds: float) -> None:
        self._phases[name] = self._phases.get(name, 0.0) + seconds

    def report(self) -> TimingReport:
        report = TimingReport(phases=dict(self._phases), total=time.perf_counter() - self._start)
        report.validate()
        return report
