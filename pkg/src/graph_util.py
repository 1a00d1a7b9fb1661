from typing import Optional, List, Set, Sequence

import igraph


def mark_recurrent_edges(graph: igraph.Graph, attribute: str = "recurrent") -> None:
    """
    An edge lies on a directed cycle exactly when both ends
    are in the same strongly connected component.
    """
    membership = graph.connected_components(mode="strong").membership
    graph.es[attribute] = [
        membership[e.source] == membership[e.target]
        for e in graph.es
    ]


def distances_to_set(graph: igraph.Graph, targets: Sequence[int]) -> List[float]:
    """
    Graph distance of every vertex to the nearest vertex in `targets`,
    `inf` for unreachable vertices.
    """
    if not targets:
        return [float("inf")] * graph.vcount()
    g = graph.copy()
    hub = g.vcount()
    g.add_vertices(1)
    g.add_edges([(hub, t) for t in targets])
    row = g.distances(source=[hub], mode="all")[0]
    return [d - 1 for d in row[:hub]]


def filter_graph(
        graph: igraph.Graph,
        edge_filters: Optional[dict] = None,
        vertex_filters: Optional[dict] = None,
) -> None:
    """
    Delete, in place, all edges and then all vertices that do not pass the filters.

    Keys are attribute names, optionally with an operator suffix,
    e.g. `{"recurrent": True}` or `{"degree__gt": 0}`.
    """
    def _ids_to_delete(seq, attributes: dict) -> Set[int]:
        ids_to_delete = set()
        for key, value in attributes.items():
            key_split = key.split("__")
            if len(key_split) == 1:
                name = key_split[0]
                operator = "equal"
            elif len(key_split) == 2:
                name, operator = key_split
            else:
                raise ValueError(f"Invalid filter '{key}'")

            if name == "degree":
                values = seq.degree()
            else:
                try:
                    values = seq[name]
                except KeyError:
                    raise ValueError(f"Unknown attribute '{name}'")

            func = getattr(_FilterFuncs, operator, None)
            if not func or not callable(func):
                raise ValueError(f"Invalid operator in '{key}'")

            ids_to_delete |= func(values, value)

        return ids_to_delete

    if edge_filters and graph.ecount():
        ids = _ids_to_delete(graph.es, edge_filters)
        if ids:
            graph.delete_edges(sorted(ids))

    if vertex_filters and graph.vcount():
        ids = _ids_to_delete(graph.vs, vertex_filters)
        if ids:
            graph.delete_vertices(sorted(ids))


class _FilterFuncs:
    """
    Operators on attribute values of
    `igraph.VertexSeq` or `igraph.EdgeSeq`, returning the IDs to delete.
    """
    @staticmethod
    def equal(seq, value) -> Set[int]:
        return {
            i for i, v in enumerate(seq)
            if not v == value
        }

    @staticmethod
    def gt(seq, value) -> Set[int]:
        return {
            i for i, v in enumerate(seq)
            if not v > value
        }

    @staticmethod
    def gte(seq, value) -> Set[int]:
        return {
            i for i, v in enumerate(seq)
            if not v >= value
        }
