"""
Sensor-placement and Monte Carlo result types
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

from ..utils.errors import ConfigError
from .graph import Graph


class EdgePolicy(Enum):
    MAX_ST = 'max-st'
    MIN_ST = 'min-st'
    RAND_ST = 'rand-st'


class NodePolicy(Enum):
    GREEDY = 'greedy'
    A_DESIGN = 'a-design'
    E_DESIGN = 'e-design'
    RANDOM = 'random'


def parse_policy(name: str):
    """Map a policy name such as 'max-st' or 'greedy' to its enum member"""
    key = name.strip().lower()
    for enum in (EdgePolicy, NodePolicy):
        for member in enum:
            if member.value == key:
                return member
    raise ConfigError(f"unknown policy '{name}'", key='policies')


@dataclass(frozen=True)
class EdgePolicyResult:
    """Spanning tree of measurement edges chosen by a placement policy"""

    tree: Graph
    policy: EdgePolicy
    crb_trace: float
    seconds: float = field(default=0.0, compare=False)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return self.tree.edge_pairs

    def selection_tokens(self) -> str:
        """1-based `i-j` tokens joined by semicolons"""
        return ";".join(f"{i + 1}-{j + 1}" for i, j in self.edges)

    def to_dict(self):
        return {
            'policy': self.policy.value,
            'edges': [[i + 1, j + 1] for i, j in self.edges],
            'crb_trace': self.crb_trace,
            'seconds': self.seconds,
        }


@dataclass(frozen=True)
class NodePolicyResult:
    """Sampled node subset chosen by a placement policy

    objective is the policy's own objective at the subset; crb_trace is
    the bandlimited graph CRB trace there, comparable across policies.
    history lists (removed node, objective after removal) in order.
    """

    subset: Tuple[int, ...]
    policy: NodePolicy
    objective: float
    crb_trace: float
    history: Tuple[Tuple[int, float], ...] = ()
    seconds: float = field(default=0.0, compare=False)

    @property
    def size(self) -> int:
        return len(self.subset)

    def selection_tokens(self) -> str:
        return ";".join(str(n + 1) for n in self.subset)

    def to_dict(self):
        return {
            'policy': self.policy.value,
            'subset': [n + 1 for n in self.subset],
            'objective': self.objective,
            'crb_trace': self.crb_trace,
            'removed': [n + 1 for n, _ in self.history],
            'seconds': self.seconds,
        }


@dataclass(frozen=True)
class MonteCarloRecord:
    """Empirical risk against the bound at one sweep point for one policy"""

    sweep_value: float
    policy: str
    empirical_wmse: float
    wmse_se: float
    crb_trace: float
    trials: int
    seconds: float = field(default=0.0, compare=False)
    placement_seconds: float = field(default=0.0, compare=False)

    @property
    def empirical_root_wmse(self) -> float:
        return self.empirical_wmse ** 0.5

    @property
    def crb_root(self) -> float:
        return self.crb_trace ** 0.5

    @property
    def relative_gap(self) -> float:
        """|empirical - bound| / bound (infinite when the bound is 0 and the risk is not)"""
        if self.crb_trace == 0:
            return 0.0 if self.empirical_wmse == 0 else float('inf')
        return abs(self.empirical_wmse - self.crb_trace) / self.crb_trace

    def to_dict(self):
        return {
            'sweep_value': self.sweep_value,
            'policy': self.policy,
            'empirical_root_wmse': self.empirical_root_wmse,
            'se': self.wmse_se,
            'crb_root': self.crb_root,
            'trials': self.trials,
        }


@dataclass(frozen=True)
class MonteCarloResult:
    """All records of one experiment, in sweep then policy order"""

    records: Tuple[MonteCarloRecord, ...]
    seed: int
    prng: str

    def for_policy(self, policy: str) -> List[MonteCarloRecord]:
        return [r for r in self.records if r.policy == policy]
