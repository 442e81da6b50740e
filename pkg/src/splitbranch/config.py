"""Solver settings with environment-variable defaults.

Precedence: CLI flags > ``SPLITBRANCH_*`` environment variables > the
dataclass defaults below.
"""

from __future__ import annotations

import dataclasses
import os

ENV_PREFIX = "SPLITBRANCH_"


def _env(name: str, cast, default):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    return cast(raw)


@dataclasses.dataclass
class Settings:
    """Knobs for one solve; every tolerance used anywhere lives here."""

    seed: int = 1
    time_limit: float = 60.0
    node_limit: int | None = None

    # feasibility / integrality
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    prune_tol: float = 1e-9

    # LP core
    lp_iter_limit: int = 20000
    refactor_every: int = 50
    bland_after: int = 1000
    row_equilibrate: bool = False

    # cut generation
    f0_min: float = 1e-4
    eff_min: float = 1e-4
    coef_drop: float = 1e-12
    max_dynamism: float = 1e10
    eff_space: str = "standard"  # or "nonbasic"
    root_cut_rounds: int = 5
    cuts_per_round: int = 10

    # branching
    reliability: int = 8
    score_eps: float = 1e-6
    infeasible_gain: float = 1e10
    gmi_weight: float = 1e-5
    record_eps: float = 1e-4
    use_avg_gmi: bool = False
    node_order: str = "bestbound"  # or "dfs"

    # experiment mode
    provided_solution: float | None = None

    # observation hook: called with every structural-space cut derived
    # anywhere in a solve (root separation and cut-scoring rules)
    cut_sink: object = None

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        """Settings from environment variables, then keyword overrides."""
        s = cls(
            seed=_env("SEED", int, cls.seed),
            time_limit=_env("TIME_LIMIT", float, cls.time_limit),
            node_limit=_env("NODE_LIMIT", int, cls.node_limit),
            root_cut_rounds=_env("ROOT_CUT_ROUNDS", int, cls.root_cut_rounds),
            cuts_per_round=_env("CUTS_PER_ROUND", int, cls.cuts_per_round),
            gmi_weight=_env("GMI_WEIGHT", float, cls.gmi_weight),
            eff_min=_env("EFF_MIN", float, cls.eff_min),
            eff_space=_env("EFF_SPACE", str, cls.eff_space),
            reliability=_env("RELIABILITY", int, cls.reliability),
            node_order=_env("NODE_ORDER", str, cls.node_order),
        )
        for key, val in overrides.items():
            if val is not None:
                setattr(s, key, val)
        return s
