"""Family-level dispatchers: build_graph, lazy_action, region."""

from . import bubble as bub
from . import nsgraphs as ns
from .dihedral import DihedralRay, build_dihedral_line
from .graphs import FiniteSchreierGraph, Region, ball


def build_graph(family, params, depth=None):
    """Materialize a finite Schreier graph.

    family 'dihedral-line': params {'n': vertices}.
    family 'bubble': params {'a': ..., 'b': ...}, depth = level k.
    family 'ns': params {'l': ...}, depth = level k.
    """
    if family == "dihedral-line":
        return build_dihedral_line(params["n"])
    if family == "bubble":
        if depth is None or depth < 1:
            raise ValueError("invalid-parameter: bubble build needs depth k >= 1")
        return bub.build_bubble(params["a"], params["b"], depth)
    if family == "ns":
        if depth is None or depth < 1:
            raise ValueError("invalid-parameter: ns build needs depth k >= 1")
        return ns.build_ns(params["l"], depth)
    raise ValueError("invalid-parameter: unknown family %r" % family)


def lazy_action(family, params):
    if family == "dihedral-ray":
        return DihedralRay()
    if family == "bubble":
        return bub.BubbleAction(params["a"], params["b"],
                                truncate=params.get("truncate"))
    if family == "ns":
        return ns.NSAction(params["l"], params["k"])
    raise ValueError("invalid-parameter: unknown family %r" % family)


def region(host, kind, params):
    """Resolve a named vertex region on a host action or finite graph."""
    if kind == "ball":
        verts, _ = ball(host, params["center"], params["r"])
        return Region(kind, params, verts)
    if kind == "branch-cycle":
        return Region(kind, params, bub.branch_cycle(host, params["w"]))
    if kind == "neighborhood":
        return Region(kind, params,
                      bub.neighborhood(host, params["w"], params["r"]))
    if kind == "midpoint-ball":
        return Region(kind, params,
                      bub.midpoint_ball(host, params["k"], params["l"]))
    if kind == "W":
        return Region(kind, params, bub.w_region(host, params["k"], params["t"]))
    if kind == "level-set":
        return Region(kind, params, bub.level_set(host, params["k"],
                                                  params["level"]))
    if kind == "ns-inside":
        return Region(kind, params,
                      ns.ns_inside_region(params["l"], params["k"], params["n"]))
    raise ValueError("invalid-parameter: unknown region kind %r" % kind)


def diameter(graph):
    if not isinstance(graph, FiniteSchreierGraph):
        raise ValueError("diameter needs a finite graph")
    return graph.diameter()
