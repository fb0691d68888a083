"""Search budgets, counted in nodes rather than seconds.

Exceeding a budget raises BudgetExceeded, which is always distinct from a
negative search result: a refutation means the space was exhausted, a
budget error means it was not.
"""

from __future__ import annotations

import os
from typing import Optional

DEFAULT_BUDGET = 5_000_000


class BudgetExceeded(Exception):
    def __init__(self, nodes: int, label: str = ""):
        self.nodes = nodes
        self.label = label
        super().__init__(f"search budget exceeded after {nodes} nodes {label}".rstrip())


def default_budget() -> int:
    raw = os.environ.get("CARTCUBE_BUDGET")
    if raw:
        return int(raw)
    return DEFAULT_BUDGET


class BudgetCounter:
    """Mutable node counter shared by nested searches."""

    __slots__ = ("limit", "nodes", "label")

    def __init__(self, limit: Optional[int] = None, label: str = ""):
        self.limit = default_budget() if limit is None else limit
        self.nodes = 0
        self.label = label

    def tick(self, n: int = 1) -> None:
        self.nodes += n
        if self.nodes > self.limit:
            raise BudgetExceeded(self.nodes, self.label)
