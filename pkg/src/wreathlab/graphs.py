"""Core Schreier-graph machinery: finite graphs, lazy actions, BFS, regions,
and the text serialization format.

Conventions used throughout the package:

  * A generator alphabet is a list of named symbols; a symbol marked as an
    involution is its own inverse, otherwise the formal inverse is written
    with a trailing apostrophe (``a'``).
  * A "letter" is a pair (symbol, sign) with sign +1 or -1.
  * Graph distances are in the Schreier-graph metric where every signed
    letter is a unit move (self-loops contribute nothing).
  * Vertices of finite builds are ordered lexicographically by their
    structured labels, so builds are reproducible bit for bit.
"""

import json
from collections import deque


class GeneratorSet:
    """Ordered alphabet of generator names with per-symbol involution flags."""

    def __init__(self, symbols, involutions):
        symbols = list(symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError("generator names must be unique")
        self.symbols = symbols
        self.involution = dict(zip(symbols, involutions))

    def signed_letters(self):
        """All distinct signed letters: (sym, +1), and (sym, -1) unless involutive."""
        out = []
        for s in self.symbols:
            out.append((s, +1))
            if not self.involution[s]:
                out.append((s, -1))
        return out

    def inverse_letter(self, letter):
        sym, sign = letter
        if self.involution[sym]:
            return (sym, +1)
        return (sym, -sign)

    def __eq__(self, other):
        return (isinstance(other, GeneratorSet)
                and self.symbols == other.symbols
                and self.involution == other.involution)

    def __repr__(self):
        return "GeneratorSet(%r)" % (self.symbols,)


def render_label(label):
    """Canonical one-line string for a structured label (int, str, or nested tuple)."""
    if isinstance(label, str):
        return label

    def conv(x):
        if isinstance(x, tuple):
            return [conv(y) for y in x]
        return x

    return json.dumps(conv(label), separators=(",", ":"))


class FiniteSchreierGraph:
    """A finite Schreier graph: one permutation of {0..n-1} per generator.

    perms maps symbol -> list of images.  Self-loops (fixed points) are
    allowed and kept.  labels, if given, is a list of structured labels in
    vertex order.
    """

    def __init__(self, gens, perms, root, labels=None):
        self.gens = gens
        self.perms = {s: list(p) for s, p in perms.items()}
        if set(self.perms) != set(gens.symbols):
            raise ValueError("perms must cover exactly the generator symbols")
        sizes = {len(p) for p in self.perms.values()}
        if len(sizes) != 1:
            raise ValueError("all permutations must have the same length")
        self.n = sizes.pop()
        ident = list(range(self.n))
        self.inv_perms = {}
        for s, p in self.perms.items():
            if sorted(p) != ident:
                raise ValueError("generator %r is not a bijection" % s)
            inv = [0] * self.n
            for i, j in enumerate(p):
                inv[j] = i
            self.inv_perms[s] = inv
            if gens.involution[s] and inv != p:
                raise ValueError("generator %r flagged involutive but is not" % s)
        if not (0 <= root < self.n):
            raise ValueError("root out of range")
        self.root = root
        self.labels = list(labels) if labels is not None else None
        self._index = None

    def act_letter(self, letter, v):
        sym, sign = letter
        return self.perms[sym][v] if sign > 0 else self.inv_perms[sym][v]

    def index_of(self, label):
        if self.labels is None:
            raise ValueError("graph carries no labels")
        if self._index is None:
            self._index = {render_label(l): i for i, l in enumerate(self.labels)}
        return self._index[render_label(label)]

    def neighbors(self, v):
        out = []
        for letter in self.gens.signed_letters():
            w = self.act_letter(letter, v)
            if w != v:
                out.append(w)
        return out

    def distances_from(self, sources):
        """BFS distance list from a set of source vertices (-1 if unreachable)."""
        dist = [-1] * self.n
        q = deque()
        for s in sources:
            if dist[s] < 0:
                dist[s] = 0
                q.append(s)
        while q:
            v = q.popleft()
            for w in self.neighbors(v):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
        return dist

    def ball(self, center, r):
        dist = self.distances_from([center])
        return sorted(v for v in range(self.n) if 0 <= dist[v] <= r)

    def is_connected(self):
        return self.component_count() == 1

    def component_count(self):
        seen = [False] * self.n
        count = 0
        for s in range(self.n):
            if seen[s]:
                continue
            count += 1
            seen[s] = True
            q = deque([s])
            while q:
                v = q.popleft()
                for w in self.neighbors(v):
                    if not seen[w]:
                        seen[w] = True
                        q.append(w)
        return count

    def diameter(self):
        """Exact diameter by all-pairs BFS (scipy-accelerated when available)."""
        comps = self.component_count()
        if comps != 1:
            raise ValueError("graph is disconnected (%d components)" % comps)
        try:
            import numpy as np
            from scipy.sparse import csr_matrix
            from scipy.sparse.csgraph import shortest_path
        except ImportError:
            return max(max(self.distances_from([v])) for v in range(self.n))
        rows, cols = [], []
        for letter in self.gens.signed_letters():
            sym, sign = letter
            p = self.perms[sym] if sign > 0 else self.inv_perms[sym]
            for i, j in enumerate(p):
                if i != j:
                    rows.append(i)
                    cols.append(j)
        data = np.ones(len(rows), dtype=np.int8)
        adj = csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        d = shortest_path(adj, method="D", unweighted=True, directed=False)
        return int(d.max())

    def serialize(self):
        """Graph text format v1 (bytes).  Bit-exact round trip with deserialize."""
        lines = ["schreier v1", "vertices %d" % self.n, "root %d" % self.root]
        gens = []
        for s in self.gens.symbols:
            gens.append(s + "*" if self.gens.involution[s] else s)
        lines.append("generators " + " ".join(gens))
        for s in self.gens.symbols:
            lines.append("perm %s: %s" % (s, " ".join(str(i) for i in self.perms[s])))
        if self.labels is not None:
            for k, lab in enumerate(self.labels):
                lines.append("label %d: %s" % (k, render_label(lab)))
        return ("\n".join(lines) + "\n").encode("utf-8")

    @staticmethod
    def deserialize(data):
        text = data.decode("utf-8")
        lines = [ln for ln in text.split("\n") if ln != ""]
        if lines[0] != "schreier v1":
            raise ValueError("not a schreier v1 stream")
        n = int(lines[1].split()[1])
        root = int(lines[2].split()[1])
        toks = lines[3].split()[1:]
        symbols = [t.rstrip("*") for t in toks]
        flags = [t.endswith("*") for t in toks]
        gens = GeneratorSet(symbols, flags)
        perms = {}
        labels = {}
        for ln in lines[4:]:
            if ln.startswith("perm "):
                head, body = ln.split(":", 1)
                sym = head[len("perm "):].strip()
                perms[sym] = [int(t) for t in body.split()]
            elif ln.startswith("label "):
                head, body = ln.split(":", 1)
                k = int(head[len("label "):])
                labels[k] = body[1:] if body.startswith(" ") else body
            else:
                raise ValueError("unrecognized line: %r" % ln)
        lab_list = None
        if labels:
            if set(labels) != set(range(n)):
                raise ValueError("label lines must cover all vertices")
            lab_list = [labels[k] for k in range(n)]
        return FiniteSchreierGraph(gens, perms, root, lab_list)

    def __eq__(self, other):
        if not isinstance(other, FiniteSchreierGraph):
            return NotImplemented
        mine = self.labels and [render_label(l) for l in self.labels]
        theirs = other.labels and [render_label(l) for l in other.labels]
        return (self.n == other.n and self.root == other.root
                and self.gens == other.gens and self.perms == other.perms
                and mine == theirs)

    def __repr__(self):
        return "FiniteSchreierGraph(n=%d, gens=%r)" % (self.n, self.gens.symbols)


class LazyAction:
    """Generator action on structured vertex labels, evaluated on demand.

    Subclasses provide .gens, .root, and _apply(sym, label) / _apply_inv.
    """

    family = None

    def act_letter(self, letter, label):
        sym, sign = letter
        if sign > 0 or self.gens.involution[sym]:
            return self._apply(sym, label)
        return self._apply_inv(sym, label)

    def neighbors(self, label):
        out = []
        for letter in self.gens.signed_letters():
            m = self.act_letter(letter, label)
            if m != label:
                out.append(m)
        return out


def bfs_distances(action, sources, radius=None):
    """Label -> distance dict from a set of labels on a lazy action.

    With radius=None this only terminates on effectively finite actions.
    """
    dist = {}
    q = deque()
    for s in sources:
        if s not in dist:
            dist[s] = 0
            q.append(s)
    while q:
        v = q.popleft()
        if radius is not None and dist[v] >= radius:
            continue
        for w in action.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def ball(action, center, r):
    """(sorted vertex list, distance map) for the radius-r ball around center.

    Works on both lazy actions (center is a label) and finite graphs
    (center is a vertex index).
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    if isinstance(action, FiniteSchreierGraph):
        dist = action.distances_from([center])
        verts = sorted(v for v in range(action.n) if 0 <= dist[v] <= r)
        return verts, {v: dist[v] for v in verts}
    dist = bfs_distances(action, [center], radius=r)
    verts = sorted(dist)
    return verts, dist


class Region:
    """A named vertex set inside a host graph/action."""

    def __init__(self, kind, params, vertices):
        self.kind = kind
        self.params = dict(params)
        self.vertices = sorted(set(vertices))

    def __contains__(self, v):
        return v in set(self.vertices)

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __repr__(self):
        return "Region(%s, %r, size=%d)" % (self.kind, self.params, len(self.vertices))
