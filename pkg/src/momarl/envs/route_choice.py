"""MO-RouteChoice: one-shot congestion game on a road network.

Each edge has a linear travel-time cost ``a * x + b`` in its flow ``x``.
A driver's reward is ``(-time, -money)`` summed over the edges of the
chosen route (rewards are negated costs so every objective is maximised).

Money comes from either marginal-cost tolling, where every edge charges
``x * c'(x) = a * x``, or from a fixed toll on a random subset of edges.

Network description files are plain text, one directive per line::

    # comment
    edge <from> <to> <a> <b>
    od <origin> <destination> <demand>
    route <od_index> <from>-<to> <from>-<to> ...

Node names must not contain whitespace or ``-``. ``od`` lines are indexed
from 0 in file order; ``demand`` is the number of drivers for that pair
(it may be overridden when building the environment).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from momarl.core import Discrete, ParallelEnv, StepOutput
from momarl.errors import FileInvalid, InvalidRoute


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.a < 0 or self.b < 0:
            raise ValueError(f"edge {self.src}-{self.dst}: coefficients must be finite and >= 0")

    def time(self, flow):
        return self.a * flow + self.b


def marginal_toll(edge: Edge, flow):
    """Marginal-cost toll ``x * c'(x)``; ``a * x`` for a linear cost."""
    if np.any(np.asarray(flow) < 0):
        raise ValueError("flow must be non-negative")
    return edge.a * flow


@dataclass
class RoadNetwork:
    edges: List[Edge]
    od_pairs: List[Tuple[str, str]]
    routes: List[List[List[int]]]  # per OD pair: list of routes (edge indices)
    demand: List[int] = field(default_factory=list)
    name: str = "network"

    def __post_init__(self):
        if len(self.routes) != len(self.od_pairs):
            raise ValueError("one route list per OD pair required")
        for k, ((o, d), rs) in enumerate(zip(self.od_pairs, self.routes)):
            if not rs:
                raise ValueError(f"OD pair {k} has no routes")
            for r in rs:
                node = o
                for e in r:
                    if self.edges[e].src != node:
                        raise ValueError(f"route {r} of OD {k} is not a connected path")
                    node = self.edges[e].dst
                if node != d:
                    raise ValueError(f"route {r} of OD {k} does not end at {d}")
        self._offsets = np.cumsum([0] + [len(rs) for rs in self.routes])
        n_routes = int(self._offsets[-1])
        self.incidence = np.zeros((n_routes, len(self.edges)))
        for k, rs in enumerate(self.routes):
            for j, r in enumerate(rs):
                for e in r:
                    self.incidence[self._offsets[k] + j, e] += 1
        self.a = np.array([e.a for e in self.edges])
        self.b = np.array([e.b for e in self.edges])

    @property
    def nodes(self) -> List[str]:
        seen: Dict[str, None] = {}
        for e in self.edges:
            seen.setdefault(e.src)
            seen.setdefault(e.dst)
        return list(seen)

    def n_routes(self, od: int) -> int:
        return len(self.routes[od])

    def global_route(self, od, local):
        return self._offsets[od] + local

    def edge_index(self, src: str, dst: str) -> int:
        for i, e in enumerate(self.edges):
            if e.src == src and e.dst == dst:
                return i
        raise KeyError(f"no edge {src}-{dst}")


def braess_instance(n_agents: int = 4200) -> RoadNetwork:
    """Braess network s, v, w, t with routes s-v-t, s-w-t and s-v-w-t.

    The variable edges s-v and w-t cost ``a * x`` with ``a = 9 / n_agents``
    (``3/1400`` for 4200 drivers), the constant edges v-t and s-w cost 10.5
    and the shortcut v-w costs 0. All drivers on the shortcut route gives a
    mean time of 18; an even split over the two outer routes gives 15.
    """
    if n_agents < 2:
        raise ValueError("the Braess instance needs at least 2 drivers")
    a = 9.0 / n_agents
    edges = [
        Edge("s", "v", a, 0.0),
        Edge("v", "t", 0.0, 10.5),
        Edge("s", "w", 0.0, 10.5),
        Edge("w", "t", a, 0.0),
        Edge("v", "w", 0.0, 0.0),
    ]
    routes = [[[0, 1], [2, 3], [0, 4, 3]]]
    return RoadNetwork(edges, [("s", "t")], routes, [n_agents], name="braess")


def parse_network(text: str, name: str = "network") -> RoadNetwork:
    edges: List[Edge] = []
    index: Dict[Tuple[str, str], int] = {}
    ods: List[Tuple[str, str]] = []
    demand: List[int] = []
    routes: Dict[int, List[List[int]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            kind = parts[0]
            if kind == "edge":
                src, dst, a, b = parts[1], parts[2], float(parts[3]), float(parts[4])
                if len(parts) != 5 or (src, dst) in index:
                    raise ValueError("bad or duplicate edge")
                index[(src, dst)] = len(edges)
                edges.append(Edge(src, dst, a, b))
            elif kind == "od":
                if len(parts) != 4:
                    raise ValueError("od needs origin destination demand")
                ods.append((parts[1], parts[2]))
                demand.append(int(parts[3]))
            elif kind == "route":
                od = int(parts[1])
                path = [index[tuple(tok.split("-"))] for tok in parts[2:]]
                if not path:
                    raise ValueError("empty route")
                routes.setdefault(od, []).append(path)
            else:
                raise ValueError(f"unknown directive {kind!r}")
        except (IndexError, ValueError, KeyError) as exc:
            raise FileInvalid(f"line {lineno}: {raw.strip()!r}: {exc}") from None
    if set(routes) != set(range(len(ods))):
        raise FileInvalid("every od pair needs at least one route and route od indices must exist")
    try:
        return RoadNetwork(edges, ods, [routes[k] for k in range(len(ods))], demand, name=name)
    except ValueError as exc:
        raise FileInvalid(str(exc)) from None


def load_network(path: Union[str, Path]) -> RoadNetwork:
    path = Path(path)
    return parse_network(path.read_text(), name=path.stem)


def network_to_text(net: RoadNetwork) -> str:
    lines = [f"# {net.name}"]
    lines += [f"edge {e.src} {e.dst} {e.a!r} {e.b!r}" for e in net.edges]
    lines += [f"od {o} {d} {q}" for (o, d), q in zip(net.od_pairs, net.demand)]
    for k, rs in enumerate(net.routes):
        for r in rs:
            lines.append(f"route {k} " + " ".join(f"{net.edges[e].src}-{net.edges[e].dst}" for e in r))
    return "\n".join(lines) + "\n"


def route_step(
    net: RoadNetwork,
    od_of_agent: np.ndarray,
    choices: np.ndarray,
    toll_mode: str = "marginal",
    tolled_edges: Optional[np.ndarray] = None,
    fixed_toll: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-driver ``(time, money)`` for local route choices.

    Returns two arrays of length ``n_agents``. Rewards are their negation.
    """
    od_of_agent = np.asarray(od_of_agent, dtype=np.int64)
    choices = np.asarray(choices, dtype=np.int64)
    n_local = np.asarray([len(rs) for rs in net.routes])[od_of_agent]
    if np.any(choices < 0) or np.any(choices >= n_local):
        bad = int(np.flatnonzero((choices < 0) | (choices >= n_local))[0])
        raise InvalidRoute(f"driver {bad} chose route {choices[bad]} of {n_local[bad]}")
    g = net._offsets[od_of_agent] + choices
    counts = np.bincount(g, minlength=net.incidence.shape[0]).astype(np.float64)
    flows = counts @ net.incidence
    edge_time = net.a * flows + net.b
    if toll_mode == "marginal":
        edge_money = net.a * flows
    elif toll_mode == "fixed":
        mask = np.zeros(len(net.edges), dtype=bool) if tolled_edges is None else np.asarray(tolled_edges, bool)
        edge_money = np.where(mask & (flows > 0), fixed_toll, 0.0)
    elif toll_mode == "none":
        edge_money = np.zeros(len(net.edges))
    else:
        raise ValueError(f"unknown toll mode {toll_mode!r}")
    route_time = net.incidence @ edge_time
    route_money = net.incidence @ edge_money
    return route_time[g], route_money[g]


class RouteChoiceEnv(ParallelEnv):
    """Parallel MO-RouteChoice; each driver picks one route of its OD pair.

    ``toll_mode`` is ``"marginal"`` (default), ``"random"`` (a seeded
    fraction ``toll_fraction`` of edges charges ``fixed_toll``) or ``"none"``.
    """

    metadata = {"name": "mo_route_choice"}

    def __init__(
        self,
        network: Union[str, RoadNetwork] = "braess",
        n_agents: Optional[int] = None,
        toll_mode: str = "marginal",
        toll_fraction: float = 0.5,
        fixed_toll: float = 1.0,
        layout_seed: int = 0,
    ):
        if isinstance(network, RoadNetwork):
            net = network
        elif network == "braess":
            net = braess_instance(n_agents or 4200)
        else:
            net = load_network(network)
        if n_agents is not None and sum(net.demand) != n_agents:
            if len(net.od_pairs) != 1:
                raise ValueError("n_agents override only applies to single-OD networks")
            net.demand = [int(n_agents)]
        self.network = net
        self.toll_mode = toll_mode
        self.fixed_toll = float(fixed_toll)
        self.tolled_edges = None
        if toll_mode == "random":
            rng = np.random.default_rng(layout_seed)
            self.tolled_edges = rng.random(len(net.edges)) < toll_fraction
        elif toll_mode not in ("marginal", "none"):
            raise ValueError(f"unknown toll mode {toll_mode!r}")
        self._od_of_agent = np.repeat(np.arange(len(net.od_pairs)), net.demand)
        self.possible_agents = [f"driver_{i}" for i in range(len(self._od_of_agent))]
        self.num_objectives = 2
        spaces = [Discrete(net.n_routes(int(k))) for k in range(len(net.od_pairs))]
        self._spaces = {a: spaces[k] for a, k in zip(self.possible_agents, self._od_of_agent)}
        self._obs_space = Discrete(1)
        self.last_travel_times: Optional[np.ndarray] = None
        self.last_route_counts: Optional[np.ndarray] = None

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._spaces[agent]

    def reward_bounds(self, agent):
        # worst case: every driver on every edge of the longest route
        n = float(len(self.possible_agents))
        t = self.network.incidence @ (self.network.a * n + self.network.b)
        m = self.network.incidence @ (self.network.a * n if self.toll_mode == "marginal" else np.full(len(self.network.edges), self.fixed_toll))
        return np.array([-t.max(), -m.max()]), np.zeros(2)

    @property
    def mean_travel_time(self) -> float:
        return float(self.last_travel_times.mean())

    def _reset(self, options):
        return {a: 0 for a in self.agents}, {a: {} for a in self.agents}

    def _step(self, actions):
        agents = self.agents
        choices = np.fromiter((actions[a] for a in agents), dtype=np.int64, count=len(agents))
        time, money = route_step(
            self.network, self._od_of_agent, choices, "fixed" if self.toll_mode == "random" else self.toll_mode,
            self.tolled_edges, self.fixed_toll,
        )
        self.last_travel_times = time
        self.last_route_counts = np.bincount(self.network._offsets[self._od_of_agent] + choices,
                                             minlength=self.network.incidence.shape[0])
        rewards = -np.stack([time, money], axis=1)
        return StepOutput(
            {a: 0 for a in agents},
            dict(zip(agents, rewards)),
            {a: True for a in agents},
            {a: False for a in agents},
            {a: {"travel_time": float(t)} for a, t in zip(agents, time)},
        )

    def joint_actions(self):
        for combo in product(*(range(self.action_space(a).n) for a in self.possible_agents)):
            yield dict(zip(self.possible_agents, combo))

    def state(self):
        return (self.last_route_counts, list(self.agents))


class RouteChoiceGame:
    """Lazily evaluated one-shot game for any driver count.

    Exposes the parts of the ``Monfg`` interface used by ``check_nash``;
    ``value(joint)`` runs :func:`route_step` instead of indexing a tensor.
    """

    def __init__(self, net: RoadNetwork, toll_mode: str = "marginal"):
        self.net = net
        self.toll_mode = toll_mode
        self.od = np.repeat(np.arange(len(net.od_pairs)), net.demand)
        self.action_counts = tuple(net.n_routes(int(k)) for k in self.od)
        self.n_agents = len(self.od)
        self.num_objectives = 2

    def value(self, joint: Sequence[int]) -> np.ndarray:
        time, money = route_step(self.net, self.od, np.asarray(joint), self.toll_mode)
        return -np.stack([time, money], axis=1)


def route_choice_monfg(net: RoadNetwork, toll_mode: str = "marginal"):
    """Payoff tensor of the one-shot game for small driver counts."""
    from momarl.concepts import Monfg

    od = np.repeat(np.arange(len(net.od_pairs)), net.demand)
    counts = [net.n_routes(int(k)) for k in od]
    payoffs = np.zeros(tuple(counts) + (len(od), 2))
    for joint in product(*(range(c) for c in counts)):
        time, money = route_step(net, od, np.asarray(joint), toll_mode)
        payoffs[joint] = -np.stack([time, money], axis=1)
    return Monfg(payoffs)
