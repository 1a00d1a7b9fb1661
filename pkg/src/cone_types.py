"""
Cone types and the geodesic automaton.

The cone of an element g is the set of h with |hg| = |h| + |g|.
The automaton has an edge C(g) -a-> C(ag) for every generator a in C(g),
so the walk with labels l0, l1, ..., l(n-1) from the start vertex
spells the geodesic word l(n-1) ... l1 l0.
"""
import dataclasses
from typing import Optional, Tuple, List, Dict, FrozenSet, Iterator, Sequence, Any

import igraph
import numpy as np

from .ball_walker import Ball, ball
from .config import CONE_RADIUS, BALL_CAP
from .errors import (
    InvalidInput, AutomatonMismatch, NotStabilized, EmptyRecurrentPart,
)
from .graph_util import mark_recurrent_edges, filter_graph, distances_to_set
from .group import GroupPresentation, Word, syllables, syllable_length


@dataclasses.dataclass(frozen=True)
class ConeType:
    id: int
    # a shortest element of this type
    witness: Word
    # indices of the cone ball elements inside the cone of `witness`
    profile: FrozenSet[int]


@dataclasses.dataclass(frozen=True, eq=False)
class GeodesicAutomaton:
    vertices: Tuple[int, ...]
    # (tail, generator, head)
    edges: Tuple[Tuple[int, int, int], ...]
    start: Optional[int]
    names: Tuple[str, ...]
    certified: bool = False
    stabilized: bool = True
    witnesses: Dict[int, Word] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        vertex_set = set(self.vertices)
        if len(vertex_set) != len(self.vertices):
            raise AutomatonMismatch("Duplicate vertices")
        if self.start is not None and self.start not in vertex_set:
            raise AutomatonMismatch(f"Start vertex {self.start} is not a vertex")
        transitions = dict()
        for tail, label, head in self.edges:
            if tail not in vertex_set or head not in vertex_set:
                raise AutomatonMismatch(f"Edge {tail} -> {head} between unknown vertices")
            if not 0 <= label < len(self.names):
                raise AutomatonMismatch(f"Edge label {label} is not a generator")
            if (tail, label) in transitions:
                raise AutomatonMismatch(
                    f"Two edges labeled '{self.names[label]}' leave vertex {tail}"
                )
            transitions[(tail, label)] = head
        object.__setattr__(self, "_transitions", transitions)

        if self.start is not None:
            reached = {self.start}
            todo = [self.start]
            while todo:
                v = todo.pop()
                for _, head in self.successors(v):
                    if head not in reached:
                        reached.add(head)
                        todo.append(head)
            if reached != vertex_set:
                missing = sorted(vertex_set - reached)
                raise AutomatonMismatch(f"Vertices {missing} are not reachable from the start")

    @property
    def labels(self) -> List[int]:
        return sorted({e[1] for e in self.edges})

    def step(self, vertex: int, label: int) -> Optional[int]:
        return self._transitions.get((vertex, label))

    def successors(self, vertex: int) -> List[Tuple[int, int]]:
        return [(label, head) for tail, label, head in self.edges if tail == vertex]

    def run(self, labels: Sequence[int], vertex: Optional[int] = None) -> Optional[int]:
        """
        End vertex of the walk with `labels`, None if it leaves the automaton
        """
        v = self.start if vertex is None else vertex
        for label in labels:
            if v is None:
                return None
            v = self.step(v, label)
        return v

    def accepts(self, word: Sequence[int]) -> bool:
        if self.start is None:
            return False
        return self.run(tuple(reversed(tuple(word)))) is not None

    def walk_counts(self, n: int, vertex: Optional[int] = None) -> List[int]:
        """
        Number of walks of length 0..n from `vertex` (default start)
        """
        v = self.start if vertex is None else vertex
        if v is None:
            raise AutomatonMismatch("Automaton has no start vertex")
        current = {v: 1}
        counts = [1]
        for _ in range(n):
            following = dict()
            for tail, label, head in self.edges:
                if tail in current:
                    following[head] = following.get(head, 0) + current[tail]
            current = following
            counts.append(sum(current.values()))
        return counts

    def walks(self, length: int, vertex: int) -> Iterator[Tuple[Tuple[int, ...], int]]:
        """
        Yield (labels, end vertex) of all walks of `length` from `vertex`.
        """
        stack = [((), vertex)]
        while stack:
            labels, v = stack.pop()
            if len(labels) == length:
                yield labels, v
                continue
            for label, head in reversed(self.successors(v)):
                stack.append((labels + (label,), head))

    def random_walk(self, rng: np.random.Generator, length: int, vertex: Optional[int] = None) -> Tuple[Tuple[int, ...], int]:
        v = rng.choice(self.vertices) if vertex is None else vertex
        v = int(v)
        labels = []
        for _ in range(length):
            succ = self.successors(v)
            if not succ:
                raise EmptyRecurrentPart(f"Walk got stuck at vertex {v}")
            label, v = succ[rng.integers(len(succ))]
            labels.append(label)
        return tuple(labels), v

    def to_igraph(self) -> igraph.Graph:
        return AutomatonBuilder.from_automaton(self).to_igraph()

    def to_json(self) -> dict:
        return {
            "generators": list(self.names),
            "vertices": list(self.vertices),
            "start": self.start,
            "edges": [[t, self.names[l], h] for t, l, h in self.edges],
            "certified": self.certified,
            "stabilized": self.stabilized,
            "witnesses": {
                str(v): [self.names[x] for x in w]
                for v, w in self.witnesses.items()
            },
        }

    @classmethod
    def from_json(cls, data: dict, names: Optional[Sequence[str]] = None) -> "GeodesicAutomaton":
        """
        {"vertices": [ids], "start": id, "edges": [[tail, label, head], ...]}

        Labels are generator names or indices.
        """
        if not isinstance(data, dict):
            raise InvalidInput("Automaton must be an object")
        names = tuple(names or data.get("generators") or ())
        if not names:
            raise InvalidInput("Automaton needs the list of generator names")
        builder = AutomatonBuilder(names)
        try:
            for v in data["vertices"]:
                builder.vertex(int(v))
            for tail, label, head in data["edges"]:
                if isinstance(label, str):
                    if label not in names:
                        raise AutomatonMismatch(f"Unknown edge label '{label}'")
                    label = names.index(label)
                builder.edge(int(tail), int(head), int(label))
            for v, witness in (data.get("witnesses") or {}).items():
                builder.set_witness(int(v), tuple(names.index(x) for x in witness))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InvalidInput):
                raise
            raise InvalidInput(f"Malformed automaton: {e}")
        start = data.get("start")
        return builder.to_automaton(
            start=None if start is None else int(start),
            certified=bool(data.get("certified", True)),
            stabilized=bool(data.get("stabilized", True)),
        )


class AutomatonBuilder:
    """
    Collects vertices and edges with their attributes
    and converts them to a `GeodesicAutomaton` or an `igraph.Graph`.
    """
    DEFAULT_VERTEX = {
        "id": None,
        "name": None,
        "witness": "",
        "is_start": False,
    }

    DEFAULT_EDGE = {
        "generator": -1,
        "label": None,
    }

    def __init__(self, names: Sequence[str]):
        self.names = tuple(names)
        self.vertex_map: Dict[int, dict] = dict()
        self.edge_map: Dict[Tuple[int, int], dict] = dict()
        self.witnesses: Dict[int, Word] = dict()

    @classmethod
    def from_automaton(cls, auto: GeodesicAutomaton) -> "AutomatonBuilder":
        builder = cls(auto.names)
        for v in auto.vertices:
            builder.vertex(v)
            if v in auto.witnesses:
                builder.set_witness(v, auto.witnesses[v])
        if auto.start is not None:
            builder.vertex(auto.start)["is_start"] = True
        for tail, label, head in auto.edges:
            builder.edge(tail, head, label)
        return builder

    def vertex(self, id: int) -> dict:
        if id not in self.vertex_map:
            self.vertex_map[id] = {
                **self.DEFAULT_VERTEX,
                "id": id,
                # "name" is the alternative to the vertex index in igraph
                "name": str(id),
            }
        return self.vertex_map[id]

    def set_witness(self, id: int, word: Word):
        self.witnesses[id] = tuple(word)
        self.vertex(id)["witness"] = "".join(self.names[x] for x in word) or "id"

    def edge(self, tail: int, head: int, label: int) -> dict:
        self.vertex(tail)
        self.vertex(head)
        key = (tail, label)
        if key in self.edge_map:
            if self.edge_map[key]["head"] != head:
                raise AutomatonMismatch(
                    f"Two edges labeled '{self.names[label]}' leave vertex {tail}"
                )
        else:
            self.edge_map[key] = {
                **self.DEFAULT_EDGE,
                "head": head,
                "generator": label,
                "label": self.names[label],
            }
        return self.edge_map[key]

    def to_automaton(self, start: Optional[int], certified: bool = False, stabilized: bool = True) -> GeodesicAutomaton:
        return GeodesicAutomaton(
            vertices=tuple(self.vertex_map.keys()),
            edges=tuple((tail, label, e["head"]) for (tail, label), e in self.edge_map.items()),
            start=start,
            names=self.names,
            certified=certified,
            stabilized=stabilized,
            witnesses=dict(self.witnesses),
        )

    def to_igraph(self) -> igraph.Graph:
        graph = igraph.Graph(directed=True)

        if self.vertex_map:
            graph.add_vertices(
                len(self.vertex_map),
                {
                    key: [v[key] for v in self.vertex_map.values()]
                    for key in self.DEFAULT_VERTEX.keys()
                }
            )

        if self.edge_map:
            graph.add_edges(
                [(str(tail), str(e["head"])) for (tail, _), e in self.edge_map.items()],
                {
                    key: [e[key] for e in self.edge_map.values()]
                    for key in self.DEFAULT_EDGE.keys()
                }
            )

        return graph


# --- cones ---

def positive_cone(b: Ball, word: Sequence[int], r: int) -> FrozenSet[int]:
    """
    Ball indices of the elements h with |h| <= r and |h word| = |h| + |word|.
    """
    word = tuple(word)
    if r + len(word) > b.radius:
        raise InvalidInput(f"Cone of radius {r} around a word of length {len(word)} needs a ball of radius {r + len(word)}")
    result = set()
    for i, h in b.iter_elements(r):
        if b.length_of(h + word) == len(h) + len(word):
            result.add(i)
    return frozenset(result)


def negative_cone(b: Ball, word: Sequence[int], r: int) -> FrozenSet[int]:
    """
    Ball indices of the elements h with |h| <= r and |word h| = |word| + |h|.
    """
    word = tuple(word)
    if r + len(word) > b.radius:
        raise InvalidInput(f"Cone of radius {r} around a word of length {len(word)} needs a ball of radius {r + len(word)}")
    result = set()
    for i, h in b.iter_elements(r):
        if b.length_of(word + h) == len(h) + len(word):
            result.add(i)
    return frozenset(result)


def _closed_form_key(pres: GroupPresentation, word: Word) -> Any:
    """
    The cone type as known in closed form, None if unknown for the family.
    """
    if pres.family == "free":
        return word[0] if word else -1
    if pres.family == "free_product":
        syl = syllables(pres, word)
        if not syl:
            return -1
        factor, e = syl[0]
        order = pres.param("orders")[factor]
        admissible = frozenset(
            f for f in range(1, order)
            if syllable_length(order, f + e) == syllable_length(order, f) + syllable_length(order, e)
        )
        return factor, admissible
    return None


def _partition(keys: Dict[int, Any]) -> set:
    groups = dict()
    for i, key in keys.items():
        groups.setdefault(key, set()).add(i)
    return {frozenset(g) for g in groups.values()}


@dataclasses.dataclass
class ConeTypes:
    types: List[ConeType]
    # same partition for cone_radius and cone_radius + 1
    stabilized: bool
    # additionally matches the closed form of a built-in family
    certified: bool
    cone_radius: int
    # ball index -> cone type id, for every classified element
    element_types: Dict[int, int]
    ball: Ball

    def __len__(self):
        return len(self.types)

    def type_of(self, word: Sequence[int]) -> Optional[int]:
        index = self.ball.find(tuple(word))
        return None if index is None else self.element_types.get(index)


def cone_types(
        pres: GroupPresentation,
        radius: int,
        cone_radius: int = CONE_RADIUS,
        cap: int = BALL_CAP,
        verbose: bool = False,
) -> ConeTypes:
    """
    Partition the elements of length <= radius - cone_radius - 1 by their cone,
    as seen through the ball of radius cone_radius + 1.
    """
    if cone_radius < 1:
        raise InvalidInput(f"cone_radius must be at least 1, got {cone_radius}")
    if radius < cone_radius + 1:
        raise InvalidInput(f"Radius {radius} is too small for cone radius {cone_radius}")

    b = ball(pres, radius, cap=cap, verbose=verbose)
    max_length = radius - cone_radius - 1

    fine, coarse, closed = dict(), dict(), dict()
    for i, word in b.iter_elements(max_length):
        profile = positive_cone(b, word, cone_radius + 1)
        fine[i] = profile
        coarse[i] = frozenset(j for j in profile if b.lengths[j] <= cone_radius)
        closed[i] = _closed_form_key(pres, word)

    partition = _partition(fine)
    stabilized = partition == _partition(coarse)
    certified = (
        stabilized
        and pres.family in ("free", "free_product")
        and partition == _partition(closed)
    )

    types = []
    element_types = dict()
    for type_id, elements in enumerate(sorted(partition, key=min)):
        witness = min(elements)
        types.append(ConeType(id=type_id, witness=b.words[witness], profile=fine[witness]))
        for i in elements:
            element_types[i] = type_id

    return ConeTypes(
        types=types,
        stabilized=stabilized,
        certified=certified,
        cone_radius=cone_radius,
        element_types=element_types,
        ball=b,
    )


def geodesic_automaton(
        pres: GroupPresentation,
        radius: int,
        cone_radius: int = CONE_RADIUS,
        strict: bool = True,
        cap: int = BALL_CAP,
        verbose: bool = False,
) -> GeodesicAutomaton:
    """
    The automaton on the cone types found in the ball of `radius`.

    With `strict` a failed stabilization raises `NotStabilized`,
    otherwise the automaton is returned with `stabilized=False`.
    """
    if pres.family == "automaton":
        return pres.automaton

    ct = cone_types(pres, radius, cone_radius=cone_radius, cap=cap, verbose=verbose)
    b = ct.ball
    problems = []
    if not ct.stabilized:
        problems.append(f"cone types differ between cone radius {cone_radius} and {cone_radius + 1}")

    builder = AutomatonBuilder(pres.names)
    for t in ct.types:
        builder.vertex(t.id)
        builder.set_witness(t.id, t.witness)
    start = ct.element_types[0]
    builder.vertex(start)["is_start"] = True

    for t in ct.types:
        for a in range(pres.num_generators):
            target = b.find((a,) + t.witness)
            if target is None or b.lengths[target] != len(t.witness) + 1:
                continue
            if target not in ct.element_types:
                problems.append(f"witness '{pres.format(t.witness)}' is too long for radius {radius}")
                continue
            builder.edge(t.id, ct.element_types[target], a)

    auto = builder.to_automaton(start=start)

    for i, type_id in ct.element_types.items():
        word = b.words[i]
        for a in range(pres.num_generators):
            target = b.find((a,) + word)
            if target is None or b.lengths[target] != len(word) + 1 or target not in ct.element_types:
                continue
            if auto.step(type_id, a) != ct.element_types[target]:
                problems.append(f"'{pres.format((a,) + word)}' does not follow the edge rule")
                break

    walk_counts = auto.walk_counts(radius)
    word_counts = b.geodesic_word_counts()
    if walk_counts != word_counts:
        problems.append(f"walk counts {walk_counts} differ from geodesic word counts {word_counts}")

    if problems and strict:
        raise NotStabilized("Cone types did not stabilize: " + "; ".join(problems[:3]))

    stabilized = not problems
    return dataclasses.replace(
        auto,
        certified=stabilized and ct.certified,
        stabilized=stabilized,
    )


def recurrent_subgraph(auto: GeodesicAutomaton) -> GeodesicAutomaton:
    """
    The edges lying on directed cycles, with their vertices.
    """
    graph = auto.to_igraph()
    if graph.ecount():
        mark_recurrent_edges(graph)
        filter_graph(graph, edge_filters={"recurrent": True}, vertex_filters={"degree__gt": 0})
    if not graph.ecount():
        raise EmptyRecurrentPart("The automaton has no directed cycles, the group is finite")

    vertices = tuple(int(v["id"]) for v in graph.vs)
    edges = tuple(
        (int(graph.vs[e.source]["id"]), int(e["generator"]), int(graph.vs[e.target]["id"]))
        for e in graph.es
    )
    return GeodesicAutomaton(
        vertices=vertices,
        edges=edges,
        start=auto.start if auto.start in vertices else None,
        names=auto.names,
        certified=auto.certified,
        stabilized=auto.stabilized,
        witnesses={v: w for v, w in auto.witnesses.items() if v in vertices},
    )


# --- two-sided geodesics ---

def cayley_graph(b: Ball) -> igraph.Graph:
    graph = igraph.Graph(n=len(b), directed=False)
    edges = set()
    for i, word in b.iter_elements():
        for a in range(b.pres.num_generators):
            j = b.find(word + (a,))
            if j is not None and j != i:
                edges.add((min(i, j), max(i, j)))
    graph.add_edges(sorted(edges))
    return graph


@dataclasses.dataclass(frozen=True)
class GeodesicDensity:
    # max distance of a checked element to the two-sided extendable ones
    c: float
    num_checked: int
    num_extendable: int


def geodesic_density(
        pres: GroupPresentation,
        radius: int,
        margin: int = 2,
        cap: int = BALL_CAP,
) -> GeodesicDensity:
    """
    An element g counts as lying on a two-sided geodesic through the
    identity if u g v is geodesic for some u, v of length `margin`.
    """
    if radius < 2 * margin:
        raise InvalidInput(f"Radius {radius} is too small for margin {margin}")
    b = ball(pres, radius, cap=cap)
    sphere = [b.words[i] for i in b.sphere(margin)]
    max_length = radius - 2 * margin

    checked = [i for i, _ in b.iter_elements(max_length)]
    extendable = []
    for i in checked:
        word = b.words[i]
        left = [u for u in sphere if b.length_of(u + word) == len(u) + len(word)]
        found = any(
            b.length_of(u + word + v) == len(u) + len(word) + len(v)
            for u in left
            for v in sphere
            if b.length_of(word + v) == len(word) + len(v)
        )
        if found:
            extendable.append(i)

    if not extendable:
        return GeodesicDensity(c=float("inf"), num_checked=len(checked), num_extendable=0)

    dist = distances_to_set(cayley_graph(b), extendable)
    return GeodesicDensity(
        c=float(max(dist[i] for i in checked)),
        num_checked=len(checked),
        num_extendable=len(extendable),
    )
