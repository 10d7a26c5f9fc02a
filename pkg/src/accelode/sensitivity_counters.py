"""Instrumentation for counting variational solves (used by tests to
verify the one-step update performs exactly one)."""

from dataclasses import dataclass


@dataclass
class SolveCounter:
    count: int = 0

    def reset(self):
        self.count = 0
