"""Shortest-path application: graphs, incidence, generators, fixtures.

Arcs are (tail, head) pairs over 0-based node indices; parallel arcs are
allowed and distinguished by position in the arc list.  The node-arc
incidence matrix has -1 at the tail and +1 at the head of each arc, and the
demand vector ships one unit from the source to the sink.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .problem import CertainRow, EndogenousProblem
from .uncertainty import Correlated, Gamma, GeneralBox, Interval, Regime


class GenerationError(RuntimeError):
    """Instance generation exhausted its retry budget."""


@dataclass(frozen=True)
class SppInstance:
    node_count: int
    arcs: tuple            # ((tail, head), ...) 0-based, parallel arcs allowed
    source: int
    sink: int
    regimes: tuple
    label: str = ""

    def __post_init__(self):
        arcs = tuple((int(t), int(h)) for t, h in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "regimes", tuple(self.regimes))
        for t, h in arcs:
            if t == h:
                raise ValueError("self-loops are not allowed")
            if not (0 <= t < self.node_count and 0 <= h < self.node_count):
                raise ValueError("arc endpoint outside node range")
        if not (0 <= self.source < self.node_count
                and 0 <= self.sink < self.node_count):
            raise ValueError("source/sink outside node range")
        for r in self.regimes:
            if r.cost_map.dim != len(arcs):
                raise ValueError(f"regime {r.id} cost map must cover all arcs")

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)


@dataclass(frozen=True)
class GeneratorParams:
    kind: str              # epsilon_study | bilevel_interval | bilevel_box
    node_count: int
    regime_count: int
    seed: int
    box_dim: int = 0

    def __post_init__(self):
        if self.kind not in ("epsilon_study", "bilevel_interval", "bilevel_box"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.node_count <= 1 or self.regime_count < 1:
            raise ValueError("node and regime counts must be positive")
        if self.kind == "bilevel_box" and self.box_dim < 1:
            raise ValueError("box generation needs a positive box_dim")
        if self.seed is None:
            raise ValueError("a seed is mandatory")


def build_incidence(instance: SppInstance):
    """Node-arc incidence E and unit source-to-sink demand d."""
    E = np.zeros((instance.node_count, instance.num_arcs))
    for k, (t, h) in enumerate(instance.arcs):
        E[t, k] = -1.0
        E[h, k] = 1.0
    d = np.zeros(instance.node_count)
    d[instance.source] = -1.0
    d[instance.sink] = 1.0
    return E, d


def enumerate_paths(instance: SppInstance, cap: int = 100_000):
    """All simple source->sink paths as arc-indicator vectors.

    Returns (paths, truncated); ``truncated`` is set when the cap stopped
    the enumeration early.
    """
    out_arcs: list = [[] for _ in range(instance.node_count)]
    for k, (t, h) in enumerate(instance.arcs):
        out_arcs[t].append((k, h))
    paths = []
    truncated = False
    stack = [(instance.source, [], {instance.source})]
    while stack:
        node, used, seen = stack.pop()
        if node == instance.sink:
            vec = np.zeros(instance.num_arcs)
            vec[used] = 1.0
            paths.append(vec)
            if len(paths) >= cap:
                truncated = True
                break
            continue
        # reversed for deterministic low-index-first exploration on the stack
        for k, h in reversed(out_arcs[node]):
            if h in seen:
                continue
            stack.append((h, used + [k], seen | {h}))
    return paths, truncated


def _reachable(instance: SppInstance) -> bool:
    adj = [[] for _ in range(instance.node_count)]
    for t, h in instance.arcs:
        adj[t].append(h)
    seen = {instance.source}
    todo = [instance.source]
    while todo:
        v = todo.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return instance.sink in seen


_FLAVOR_KINDS = {"interval": Interval, "correlated": Correlated, "box": GeneralBox}


def build_problem(instance: SppInstance, flavor: str) -> EndogenousProblem:
    """Assemble the endogenous problem for one of the box-type flavors.

    Interval and correlated maps keep a continuous unit-box domain (the
    incidence system is totally unimodular, so its vertices are integral);
    general box maps need a binary domain because the robust objective is
    only piecewise linear.
    """
    want = _FLAVOR_KINDS.get(flavor)
    if want is None:
        raise ValueError(f"unknown flavor {flavor!r}")
    for r in instance.regimes:
        if not isinstance(r.cost_map, want):
            raise ValueError(f"regime {r.id} carries {type(r.cost_map).__name__}, "
                             f"flavor {flavor!r} expects {want.__name__}")
    E, d = build_incidence(instance)
    rows = [CertainRow(tuple(E[i]), "==", float(d[i]))
            for i in range(instance.node_count)]
    domain = "binary" if flavor == "box" else "continuous"
    return EndogenousProblem(
        sense="min", num_vars=instance.num_arcs, domain=domain, rows=rows,
        regimes=instance.regimes, label=instance.label or f"spp-{flavor}",
        vertex_enumerator=lambda cap=100_000: enumerate_paths(instance, cap),
        source=instance)


def generate_instance(params: GeneratorParams) -> SppInstance:
    """Seeded random instance; identical parameters give identical instances.

    Draw order is fixed: arcs in lexicographic (i, j) order, then per-regime
    cost data arc-major.  If the sink is unreachable the instance is redrawn
    from a derived seed, up to a bounded number of retries.
    """
    for attempt in range(64):
        rng = np.random.default_rng([int(params.seed), attempt])
        inst = _draw_instance(params, rng, attempt)
        if inst is not None and _reachable(inst):
            return inst
    raise GenerationError(f"no connected instance after 64 retries (seed {params.seed})")


def _draw_instance(params: GeneratorParams, rng, attempt: int) -> Optional[SppInstance]:
    n = params.node_count
    arcs = []
    if params.kind == "epsilon_study":
        for i in range(n):
            for j in range(i + 1, min(i + 11, n)):
                if rng.uniform() < 0.5:
                    arcs.append((i, j))
    else:
        for i in range(n):
            for j in range(i + 1, n):
                if rng.uniform() < 0.3 / (j - i):
                    arcs.append((i, j))
    if not arcs:
        return None
    regimes = []
    for sid in range(1, params.regime_count + 1):
        if params.kind in ("epsilon_study", "bilevel_interval"):
            lo = np.empty(len(arcs))
            hi = np.empty(len(arcs))
            for k in range(len(arcs)):
                lo[k] = rng.uniform(8.0, 10.0)
                hi[k] = rng.uniform(10.0, 12.0)
            cm = Interval(tuple(lo), tuple(hi))
        else:
            q = params.box_dim
            c0 = np.empty(len(arcs))
            C = np.empty((len(arcs), q))
            for k in range(len(arcs)):
                c0[k] = rng.uniform(9.0, 11.0)
                C[k, :] = rng.uniform(-2.0 / q, 2.0 / q, size=q)
            cm = GeneralBox(tuple(c0), tuple(map(tuple, C)))
        regimes.append(Regime(id=sid, activation_cost=0.0, cost_map=cm))
    label = f"{params.kind}-n{n}-S{params.regime_count}-seed{params.seed}"
    if attempt:
        label += f".{attempt}"
    return SppInstance(node_count=n, arcs=tuple(arcs), source=0, sink=n - 1,
                       regimes=tuple(regimes), label=label)


# -- fixtures ----------------------------------------------------------------


def three_paths_instance(activation_costs: Sequence[float] = (0.0, 0.0, 0.0)
                         ) -> SppInstance:
    """Two parallel arcs to one terminal, one arc to another, three regimes.

    Both terminals connect to a super-sink through certain zero-cost arcs so
    the instance keeps the single-sink flow form; optimal values are
    unchanged.  Regime 1 leaves all travel times in [4, 5]; regime 2
    tightens the arcs toward the first terminal; regime 3 tightens the arc
    toward the second.
    """
    arcs = ((0, 1), (0, 1), (0, 2), (1, 3), (2, 3))
    tables = [
        ([4, 4, 4, 0, 0], [5, 5, 5, 0, 0]),
        ([3, 2, 3, 0, 0], [4, 4, 5, 0, 0]),
        ([2, 2, 1, 0, 0], [5, 5, 4, 0, 0]),
    ]
    g = list(activation_costs)
    regimes = tuple(
        Regime(id=k + 1, activation_cost=float(g[k]),
               cost_map=Interval(tuple(map(float, lo)), tuple(map(float, hi))))
        for k, (lo, hi) in enumerate(tables))
    return SppInstance(node_count=4, arcs=arcs, source=0, sink=3,
                       regimes=regimes, label="three-paths")


def diamond_instance(flavor: str = "interval") -> SppInstance:
    """Four nodes, two disjoint two-arc paths, travel times in [1, 2].

    The correlated variant drives all four arcs with one shared parameter
    (c0 = 1.5, half-width 0.5), so both paths always realize the same cost.
    """
    arcs = ((0, 1), (0, 2), (1, 3), (2, 3))
    if flavor == "interval":
        cm = Interval((1.0,) * 4, (2.0,) * 4)
    elif flavor == "correlated":
        cm = Correlated((1.5,) * 4, ((0.5,), (0.5,), (0.5,), (0.5,)))
    else:
        raise ValueError(f"unknown diamond flavor {flavor!r}")
    regimes = (Regime(id=1, activation_cost=0.0, cost_map=cm),)
    return SppInstance(node_count=4, arcs=arcs, source=0, sink=3,
                       regimes=regimes, label=f"diamond-{flavor}")
