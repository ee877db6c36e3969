"""Dihedral Schreier graphs: the finite line on n vertices and the infinite ray.

Both carry the two involutions s and t:

  * line on {0..n-1}:  s pairs (0,1),(2,3),... ; t fixes 0 and pairs
    (1,2),(3,4),...  (for even n, t also fixes n-1);
  * ray on {0,1,2,...}: same pattern, with t's self-loop at the origin.

The ray is the orbit of 0 for the infinite dihedral group generated by the
two reflections; the line is the quotient defining the finite dihedral
group of the matching order.
"""

from .graphs import FiniteSchreierGraph, GeneratorSet, LazyAction

DIHEDRAL_GENS = GeneratorSet(["s", "t"], [True, True])


def build_dihedral_line(n):
    if n < 2:
        raise ValueError("invalid-parameter: dihedral line needs n >= 2")
    s = list(range(n))
    t = list(range(n))
    for k in range(0, n - 1, 2):
        s[k], s[k + 1] = k + 1, k
    for k in range(1, n - 1, 2):
        t[k], t[k + 1] = k + 1, k
    return FiniteSchreierGraph(DIHEDRAL_GENS, {"s": s, "t": t}, root=0,
                               labels=list(range(n)))


class DihedralRay(LazyAction):
    """Lazy s/t action on the nonnegative integers."""

    family = "dihedral-ray"

    def __init__(self):
        self.gens = DIHEDRAL_GENS
        self.root = 0

    def _apply(self, sym, x):
        if x < 0:
            raise ValueError("invalid-label: ray vertices are >= 0")
        if sym == "s":
            return x + 1 if x % 2 == 0 else x - 1
        if sym == "t":
            if x == 0:
                return 0
            return x + 1 if x % 2 == 1 else x - 1
        raise KeyError(sym)

    _apply_inv = _apply
