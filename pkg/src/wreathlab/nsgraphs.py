"""Neumann-Segal style Schreier graphs S_n (cyclic case).

Vertices of the level-n graph are digit strings z_1...z_n with z_i in
{0,...,l_i - 1} (all l_i even).  Generators:

  * a ("alpha") rotates the first digit: z_1 -> z_1 + 1 mod l_1;
  * b ("beta") scans past leading zeros; at the first nonzero digit z_i it
    rotates the NEXT digit by one step if z_i = l_i/2, and does nothing
    otherwise.  (So b's nontrivial sections sit at 0^i and 0^{i-1}(l_i/2).)

Equivalently: S_i is an l_i-cycle on the strings 0^{i-2} (l_{i-1}/2) z,
traversed by b, with a copy of S_{i-1} glued at each cycle vertex z (the
substitution view, built independently by build_ns_substitution and used to
cross-check build_ns).

Closed forms: |S_i| = prod l_m and Diam(S_i) = sum_m 2^{i-m-1} l_m, i.e.
Diam(S_i) = 2 Diam(S_{i-1}) + l_i/2 with Diam(S_1) = l_1/2.
"""

import itertools
from fractions import Fraction

from .graphs import FiniteSchreierGraph, GeneratorSet, LazyAction

NS_GENS = GeneratorSet(["a", "b"], [False, False])


def _check_l(l):
    if not l:
        raise ValueError("invalid-parameter: empty l sequence")
    if any(x < 2 or x % 2 != 0 for x in l):
        raise ValueError("invalid-parameter: all l_i must be even and >= 2")


def extend_l(l, k):
    """Extend l to length k by repeating the last entry (recorded policy for
    operations that need levels beyond the supplied data)."""
    l = tuple(l)
    if len(l) >= k:
        return l[:k]
    return l + (l[-1],) * (k - len(l))


class NSAction(LazyAction):
    family = "ns"

    def __init__(self, l, k):
        _check_l(l)
        if k < 1:
            raise ValueError("invalid-parameter: k >= 1")
        if len(l) < k:
            raise ValueError("invalid-parameter: need l_1..l_k")
        self.l = tuple(l)
        self.k = k
        self.gens = NS_GENS
        self.root = (0,) * k

    def check_label(self, z):
        if len(z) != self.k:
            raise ValueError("invalid-label: wrong length")
        for i, d in enumerate(z):
            if not (0 <= d < self.l[i]):
                raise ValueError("invalid-label: digit out of range")
        return z

    def _beta(self, z, step):
        i = 0
        while i < self.k and z[i] == 0:
            i += 1
        if i >= self.k or z[i] != self.l[i] // 2 or i + 1 >= self.k:
            return z
        nxt = (z[i + 1] + step) % self.l[i + 1]
        return z[:i + 1] + (nxt,) + z[i + 2:]

    def _apply(self, sym, z):
        z = self.check_label(tuple(z))
        if sym == "a":
            return ((z[0] + 1) % self.l[0],) + z[1:]
        return self._beta(z, +1)

    def _apply_inv(self, sym, z):
        z = self.check_label(tuple(z))
        if sym == "a":
            return ((z[0] - 1) % self.l[0],) + z[1:]
        return self._beta(z, -1)


def ns_labels(l, k):
    return list(itertools.product(*[range(l[i]) for i in range(k)]))


def build_ns(l, k):
    act = NSAction(l, k)
    labels = ns_labels(l, k)
    index = {lab: i for i, lab in enumerate(labels)}
    perms = {sym: [index[act._apply(sym, lab)] for lab in labels]
             for sym in ("a", "b")}
    return FiniteSchreierGraph(NS_GENS, perms, index[(0,) * k], labels)


def build_ns_substitution(l, k):
    """Independent construction of S_k by the substitution rule, used to
    cross-check the action-built graph."""
    _check_l(l)
    a = {(z,): ((z + 1) % l[0],) for z in range(l[0])}
    b = {(z,): (z,) for z in range(l[0])}
    for i in range(2, k + 1):
        cyc = (0,) * (i - 2) + (l[i - 2] // 2,)
        new_a, new_b = {}, {}
        for om in a:
            for z in range(l[i - 1]):
                new_a[om + (z,)] = a[om] + (z,)
                if om == cyc:
                    new_b[om + (z,)] = om + ((z + 1) % l[i - 1],)
                else:
                    new_b[om + (z,)] = b[om] + (z,)
        a, b = new_a, new_b
    labels = ns_labels(l, k)
    index = {lab: i for i, lab in enumerate(labels)}
    perms = {"a": [index[a[lab]] for lab in labels],
             "b": [index[b[lab]] for lab in labels]}
    return FiniteSchreierGraph(NS_GENS, perms, index[(0,) * k], labels)


def ns_volume(l, i):
    v = 1
    for m in range(i):
        v *= l[m]
    return v


def ns_diameter_formula(l, i):
    """Diam(S_i) = sum_{m=1..i} 2^{i-m-1} l_m (an integer since l_i is even)."""
    total = l[i - 1] // 2
    for m in range(1, i):
        total += (1 << (i - m - 1)) * l[m - 1]
    return total


def ns_inside_region(l, k, n):
    """Labels of the distinguished S_n copy inside the level-k truncation."""
    if n > k:
        raise ValueError("invalid-parameter: n <= k")
    return [lab + (0,) * (k - n) for lab in ns_labels(l, n)]


def ns_cut_vertex(l, n):
    """The vertex 0^{n-1}(l_n/2) through which S_n attaches to the rest."""
    return (0,) * (n - 1) + (l[n - 1] // 2,)


def ns_near_far_regions(l, n):
    """(B_n, Bbar_n): labels of S_n strictly closer to 0^n than to the cut
    vertex, and vice versa.  Distances inside S_n equal distances in any
    deeper truncation because the cut vertex is the only attachment."""
    g = build_ns(l, n)
    d0 = g.distances_from([g.index_of((0,) * n)])
    du = g.distances_from([g.index_of(ns_cut_vertex(l, n))])
    near = [g.labels[v] for v in range(g.n) if d0[v] < du[v]]
    far = [g.labels[v] for v in range(g.n) if du[v] < d0[v]]
    return sorted(near), sorted(far)


def ns_resistance_formula(l, n):
    """R_n = sum_{j<=n} 2^{n-j-2} l_j, the scale of R(0^inf <-> S_n^c);
    satisfies R_n = 2 R_{n-1} + l_n/4."""
    return sum(Fraction(l[j - 1], 1) * Fraction(2) ** (n - j - 2)
               for j in range(1, n + 1))
