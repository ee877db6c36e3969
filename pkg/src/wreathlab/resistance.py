"""Effective resistance, harmonic potentials, and the test functions they
induce on finite subsets of a Schreier graph.

Conventions.  A measure mu on the generating set is given per signed letter;
the conductance of the unordered edge {x, g.x} is mu(g) + mu(g^{-1}) and
self-loops carry no conductance.  The Dirichlet form is

    E(h,h) = (1/2) sum_x sum_g mu(g) (h(g.x) - h(x))^2
           = sum_edges (1/2) c(e) (dh(e))^2,

so that on the two-point swap graph with mu(s) = 1 and h = (1, 0) the energy
is 1.  Effective resistance uses the same conductances: 1/R(U <-> V) is the
minimum of sum_edges c(e) dh(e)^2 over h with h = 1 on U, h = 0 on V, i.e.
1/R = 2 E(h*, h*) at the harmonic minimiser under this normalisation.  With
mu omitted every edge gets unit conductance, which reproduces the series law
R = L on a path of length L and the parallel law R = m/2 across a 2m-cycle.

From a profile h with values in [0, 1] one builds a function F_h on finite
lamp configurations eta by F_h(eta) = prod_v xi_{h(v)}(eta(v)) where
xi_a(0) = cos(pi a/2) and xi_a(1) = sin(pi a/2).  Then ||F_h|| = 1 and

    <s.F_h, F_h> = prod_v cos((pi/2) (h(s^{-1}.v) - h(v))),

which makes the Rayleigh quotient sum_s mu(s) ||s.F_h - F_h||^2 computable in
closed form; when E(h,h) <= 1/2 it is bounded by (pi^2/2) E(h,h).  Viewing
configurations as subsets, F_h restricted to a single orbit of translates of
a set A is an admissible function for (J, B) = (h^{-1}(1), {h > 0}), and some
orbit always does at least as well as the global quotient.
"""

import heapq
import itertools
import math
from collections import deque
from fractions import Fraction

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import cg, splu

from .bubble import k_of_r, midpoint, w_region
from .graphs import FiniteSchreierGraph

DIRECT_SOLVE_LIMIT = 50_000
DEFAULT_TOL = 1e-10


def _uniform_measure(gens):
    letters = gens.signed_letters()
    p = Fraction(1, len(letters))
    return {letter: p for letter in letters}


def _check_measure(gens, mu):
    """Normalize a per-signed-letter measure; check symmetry and positivity."""
    if mu is None:
        return _uniform_measure(gens)
    out = {}
    for letter, mass in mu.items():
        sym, sign = letter
        if mass < 0:
            raise ValueError("invalid-parameter: measure masses must be >= 0")
        out[(sym, sign)] = mass
    for letter, mass in out.items():
        inv = gens.inverse_letter(letter)
        if out.get(inv, 0) != mass:
            raise ValueError("invalid-parameter: measure must be symmetric")
    return out


class PotentialProfile:
    """A potential h on a finite graph together with its Dirichlet energy.

    h is stored as a float array indexed by vertex; `energy` is
    E(h,h) = sum_edges (c/2) dh^2, `residual` the relative residual of the
    harmonicity system, `solver` the method that produced it.
    """

    def __init__(self, graph, h, energy, residual, solver):
        self.graph = graph
        self.h = h
        self.energy = energy
        self.residual = residual
        self.solver = solver

    def as_dict(self, snap=1e-9):
        """h as {vertex index: value}, with values within `snap` of 0 or 1
        rounded exactly (solver noise would otherwise create fake support)."""
        out = {}
        for v in range(len(self.h)):
            x = float(self.h[v])
            if abs(x) <= snap:
                x = 0.0
            elif abs(x - 1.0) <= snap:
                x = 1.0
            if x != 0.0:
                out[v] = x
        return out

    def rows(self):
        """(vertex, h) pairs for CSV export, labels rendered if present."""
        g = self.graph
        for v in range(len(self.h)):
            label = g.labels[v] if getattr(g, "labels", None) else v
            yield label, float(self.h[v])


class ResistanceProblem:
    """Electrical network on a finite Schreier graph between U and V.

    Conductances come from a symmetric measure on the signed letters,
    c({x, g.x}) = mu(g) + mu(g^{-1}) with self-loops dropped; mu=None means
    unit conductance on every edge.  `source` and `target` are disjoint
    nonempty sets of vertices (indices or labels).
    """

    def __init__(self, graph, source, target, mu=None):
        self.graph = graph
        self.source = self._vertex_set(source)
        self.target = self._vertex_set(target)
        if not self.source or not self.target:
            raise ValueError("invalid-parameter: U and V must be nonempty")
        if self.source & self.target:
            raise ValueError("invalid-parameter: U and V must be disjoint")
        self.edges = self._build_edges(mu)

    def _vertex_set(self, spec):
        g = self.graph
        if isinstance(spec, (int, np.integer)):
            spec = [spec]
        out = set()
        for v in spec:
            if isinstance(v, (int, np.integer)):
                if not 0 <= v < g.n:
                    raise ValueError("out-of-range: vertex %r" % (v,))
                out.add(int(v))
            else:
                out.add(g.index_of(v))
        return out

    def _build_edges(self, mu):
        g = self.graph
        # Each directed hit (x, letter) with letter.x != x contributes mu(letter)
        # to the unordered pair; summing over signed letters realises
        # c = mu(g) + mu(g^{-1}) per multigraph edge (a length-2 rotation cycle
        # is two parallel edges, an involution edge is one).  mu=None puts unit
        # conductance on every multigraph edge (1/2 per hit).
        if mu is None:
            letters = g.gens.signed_letters()
            mu = {letter: Fraction(1, 2) for letter in letters}
        else:
            mu = _check_measure(g.gens, mu)
        edges = {}
        for letter, mass in mu.items():
            if mass == 0:
                continue
            for x in range(g.n):
                y = g.act_letter(letter, x)
                if y != x:
                    key = (min(x, y), max(x, y))
                    edges[key] = edges.get(key, Fraction(0)) + mass
        return edges

    def adjacency(self):
        adj = [[] for _ in range(self.graph.n)]
        for (x, y), c in self.edges.items():
            cf = float(c)
            adj[x].append((y, cf))
            adj[y].append((x, cf))
        return adj


def effective_resistance(problem, tol=DEFAULT_TOL):
    """(R, PotentialProfile) for the network `problem`.

    Solves the grounded Laplacian system for the harmonic h with h=1 on U and
    h=0 on V (direct sparse factorization below 50k unknowns, otherwise
    Jacobi-preconditioned CG), certifies the relative residual <= tol, and
    returns R = 1/sum_edges c dh^2.  If no path joins U to V the resistance
    is math.inf and h is the indicator of the U-side component.
    """
    g = problem.graph
    n = g.n
    adj = problem.adjacency()

    comp = _component(adj, problem.source)
    h = np.zeros(n)
    for v in problem.source:
        h[v] = 1.0
    if not (comp & problem.target):
        for v in comp:
            h[v] = 1.0
        return math.inf, PotentialProfile(g, h, 0.0, 0.0, "disconnected")

    boundary = problem.source | problem.target
    interior = sorted(comp - boundary)
    solver = "trivial"
    residual = 0.0
    if interior:
        idx = {v: i for i, v in enumerate(interior)}
        rows, cols, vals = [], [], []
        rhs = np.zeros(len(interior))
        for v in interior:
            i = idx[v]
            diag = 0.0
            for w, c in adj[v]:
                diag += c
                if w in idx:
                    rows.append(i)
                    cols.append(idx[w])
                    vals.append(-c)
                elif w in problem.source:
                    rhs[i] += c
            rows.append(i)
            cols.append(i)
            vals.append(diag)
        A = csc_matrix((vals, (rows, cols)), shape=(len(interior), len(interior)))
        if len(interior) < DIRECT_SOLVE_LIMIT:
            solver = "direct"
            x = splu(A.tocsc()).solve(rhs)
        else:
            solver = "pcg"
            d = A.diagonal()
            precond = csc_matrix((1.0 / d, (range(len(d)), range(len(d)))),
                                 shape=A.shape)
            x, info = cg(A, rhs, rtol=1e-13, atol=0.0, M=precond,
                         maxiter=20 * len(interior))
            if info != 0:
                raise RuntimeError("solver-failure: CG did not converge")
        scale = np.linalg.norm(rhs)
        residual = float(np.linalg.norm(A @ x - rhs)) / (scale if scale else 1.0)
        if residual > tol:
            raise RuntimeError("solver-failure: residual %.3e > %.1e"
                               % (residual, tol))
        for v, xv in zip(interior, x):
            h[v] = min(1.0, max(0.0, float(xv)))

    cut_energy = 0.0
    for (x, y), c in problem.edges.items():
        d = h[x] - h[y]
        if d:
            cut_energy += float(c) * d * d
    energy = cut_energy / 2.0
    resistance = math.inf if cut_energy == 0.0 else 1.0 / cut_energy
    return resistance, PotentialProfile(g, h, energy, residual, solver)


def _component(adj, sources):
    seen = set(sources)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w, _ in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


# ---------------------------------------------------------------------------
# The test function F_h and its Rayleigh quotient.

def xi(a):
    """(xi_a(0), xi_a(1)) = (cos(pi a/2), sin(pi a/2))."""
    return math.cos(math.pi * a / 2.0), math.sin(math.pi * a / 2.0)


def _act(action, letter, v):
    return action.act_letter(letter, v)


def _inv(action, letter):
    return action.gens.inverse_letter(letter)


def _support_universe(action, mu, h):
    """supp(h) plus its one-step images under every letter of supp(mu)."""
    out = set(h)
    for letter in mu:
        for v in h:
            out.add(_act(action, letter, v))
    return out


def dirichlet_energy_h(action, h, mu=None):
    """E(h,h) = (1/2) sum_v sum_s mu(s) (h(s^{-1}v) - h(v))^2, h a dict."""
    mu = _check_measure(action.gens, mu)
    universe = _support_universe(action, mu, h)
    total = 0.0
    for letter, mass in mu.items():
        inv = _inv(action, letter)
        for v in universe:
            d = h.get(_act(action, inv, v), 0.0) - h.get(v, 0.0)
            if d:
                total += float(mass) * d * d
    return total / 2.0


def fh_rayleigh_closed(action, h, mu=None):
    """Closed-form Rayleigh quotient of F_h under the measure mu.

    h: dict vertex -> value in [0,1] (missing vertices read 0).  Returns a
    report with the quotient sum_s mu(s)(2 - 2 prod_v cos((pi/2)(h(s^{-1}v) -
    h(v)))), the per-letter inner products, the energy E(h,h), and the bound
    (pi^2/2) E(h,h), which applies (and is asserted) whenever E <= 1/2.
    """
    mu = _check_measure(action.gens, mu)
    for v, x in h.items():
        if not 0.0 <= x <= 1.0:
            raise ValueError("invalid-parameter: h must take values in [0,1]")
    universe = _support_universe(action, mu, h)
    inner = {}
    quotient = 0.0
    for letter, mass in mu.items():
        inv = _inv(action, letter)
        prod = 1.0
        for v in universe:
            d = h.get(_act(action, inv, v), 0.0) - h.get(v, 0.0)
            if d:
                prod *= math.cos(math.pi * d / 2.0)
        inner[letter] = prod
        quotient += float(mass) * (2.0 - 2.0 * prod)
    energy = dirichlet_energy_h(action, h, mu)
    bound = (math.pi ** 2 / 2.0) * energy
    applies = energy <= 0.5
    if applies and quotient > bound + 1e-9:
        raise AssertionError("quotient %.6g exceeds (pi^2/2)E = %.6g"
                             % (quotient, bound))
    return {"quotient": quotient, "inner_products": inner, "energy": energy,
            "bound": bound, "bound_applies": applies}


BRUTEFORCE_LIMIT = 14


def fh_bruteforce(action, h, mu=None):
    """Oracle for fh_rayleigh_closed: literal sum over all 2^m lamp
    configurations on the m vertices where 0 < h < 1 (m <= 14, else refuse).

    Enumerates eta, evaluates F_h(eta) = prod_v xi_{h(v)}(eta(v)) and the
    shifted products coordinate by coordinate, and returns the same report
    fields computed without the product formula.
    """
    mu = _check_measure(action.gens, mu)
    universe = sorted(_support_universe(action, mu, h), key=repr)
    free = [v for v in universe if 0.0 < h.get(v, 0.0) < 1.0]
    if len(free) > BRUTEFORCE_LIMIT:
        raise ValueError("resource-refusal: %d varying vertices > %d"
                         % (len(free), BRUTEFORCE_LIMIT))
    free_pos = {v: i for i, v in enumerate(free)}
    tables = {v: xi(h.get(v, 0.0)) for v in universe}

    def bit(eta, v):
        if v in free_pos:
            return eta[free_pos[v]]
        return 1 if h.get(v, 0.0) >= 0.5 else 0

    norm2 = 0.0
    configs = list(itertools.product((0, 1), repeat=len(free)))
    for eta in configs:
        f = 1.0
        for v in universe:
            f *= tables[v][bit(eta, v)]
        norm2 += f * f

    quotient = 0.0
    inner = {}
    for letter, mass in mu.items():
        dot = 0.0
        for eta in configs:
            f = 1.0
            sf = 1.0
            for v in universe:
                f *= tables[v][bit(eta, v)]
                sf *= tables[v][bit(eta, _act(action, letter, v))]
            dot += f * sf
        inner[letter] = dot
        quotient += float(mass) * (2.0 * norm2 - 2.0 * dot)
    quotient /= norm2
    return {"quotient": quotient, "inner_products": inner, "norm2": norm2}


# ---------------------------------------------------------------------------
# Admissible functions on finite subsets.

class AdmissibleFunction:
    """A function on finite subsets charging translates of one base set.

    `weights` maps frozensets of vertices to nonzero values; every weighted
    set Y satisfies J <= Y <= B and is a translate of `base_set` (witnessed
    by the letters in `translates`).  `support_sets` may additionally list
    zero-weight translates that belong to the family (their invariants are
    still checked).  `check()` re-verifies all of this against the action.
    """

    def __init__(self, action, weights, J, B, base_set, translates=None,
                 support_sets=None, mu=None, meta=None):
        self.action = action
        self.weights = {frozenset(Y): w for Y, w in weights.items() if w}
        self.J = frozenset(J)
        self.B = frozenset(B)
        self.base_set = frozenset(base_set)
        self.translates = translates or {}
        self.support_sets = ([frozenset(Y) for Y in support_sets]
                             if support_sets is not None
                             else sorted(self.weights, key=sorted))
        self.mu = _check_measure(action.gens, mu)
        self.meta = meta or {}

    def check(self):
        for Y in self.support_sets:
            if not Y <= self.B:
                raise AssertionError("support set not contained in B")
            if self.weights.get(Y) and not self.J <= Y:
                raise AssertionError("weighted set does not contain J")
        for Y, word in self.translates.items():
            img = set(self.base_set)
            for letter in word:
                img = {_act(self.action, letter, v) for v in img}
            if frozenset(img) != frozenset(Y):
                raise AssertionError("translate witness does not map A to Y")
        return True

    def quotient(self):
        return set_function_quotient(self.action, self.weights, self.mu)

    def norm2(self):
        return sum(w * w for w in self.weights.values())


def translate_set(action, letter, Y):
    return frozenset(_act(action, letter, v) for v in Y)


def set_function_quotient(action, weights, mu):
    """Q(F) = sum_s mu(s) sum_Y (F(s^{-1}Y) - F(Y))^2 / sum_Y F(Y)^2 for a
    finitely supported F on subsets, where (s.F)(Y) = F(s^{-1}.Y)."""
    den = sum(w * w for w in weights.values())
    if den == 0:
        raise ValueError("invalid-parameter: F is identically zero")
    num = 0
    for letter, mass in mu.items():
        if mass == 0:
            continue
        inv = action.gens.inverse_letter(letter)
        for Y, w in weights.items():
            num += mass * (w - weights.get(translate_set(action, letter, Y), 0)) ** 2
        for Y, w in weights.items():
            back = translate_set(action, inv, Y)
            if back not in weights:
                num += mass * w * w
    return num / den


def _fh_set_value(h, varying, Y):
    """F_h as a set function: the weight of the configuration with lamps on
    exactly Y, given that J is forced on and B^c forced off."""
    val = 1.0
    for v in varying:
        c, s = xi(h[v])
        val *= s if v in Y else c
    return val


ORBIT_CAP = 100_000


def orbit_of_set(action, base, cap=ORBIT_CAP):
    """BFS closure of a vertex set under all signed letters.  Returns
    (orbit dict frozenset -> witness word from base).  Orbits are closed
    under the group action, so restricting a set function to one orbit
    splits its Rayleigh quotient exactly."""
    base = frozenset(base)
    # parent pointers, not witness tuples: runaway orbits must hit the cap
    # before exhausting memory
    parent = {base: None}
    queue = deque([base])
    letters = action.gens.signed_letters()
    while queue:
        Y = queue.popleft()
        for letter in letters:
            Z = translate_set(action, letter, Y)
            if Z not in parent:
                if len(parent) >= cap:
                    raise ValueError("resource-refusal: orbit exceeds %d sets" % cap)
                parent[Z] = (Y, letter)
                queue.append(Z)
    seen = {}
    for Z in parent:
        trail = []
        node = Z
        while parent[node] is not None:
            node, letter = parent[node]
            trail.append(letter)
        seen[Z] = tuple(reversed(trail))
    return seen


def admissible_from_h(action, h, J=None, B=None, mu=None, candidates=None,
                      exhaustive=False, orbit_cap=ORBIT_CAP):
    """Extract an admissible function from F_h by restricting to one orbit.

    h: dict vertex -> [0,1].  J defaults to h^{-1}(1), B to {h > 0}; the sets
    between J and B are exactly where F_h lives.  Candidate base sets are the
    superlevel sets {h >= theta} by default, a caller-supplied iterable (or
    callable h -> iterable) otherwise; with exhaustive=True all 2^|B-J|
    support sets are partitioned into true orbits instead.  Each candidate's
    orbit is closed under the action, so its restricted quotient is exact,
    and the best one is guaranteed not to exceed the global quotient (the
    global numerator and norm both split as sums over orbits); the selection
    is asserted against fh_rayleigh_closed.
    """
    mu = _check_measure(action.gens, mu)
    h = {v: x for v, x in h.items() if x > 0.0}
    J = frozenset(J) if J is not None else frozenset(v for v, x in h.items() if x == 1.0)
    B = frozenset(B) if B is not None else frozenset(h)
    for v in J:
        if h.get(v) != 1.0:
            raise ValueError("invalid-parameter: h must be 1 on J")
    if not set(h) <= B:
        raise ValueError("invalid-parameter: h must vanish outside B")
    varying = sorted(B - J, key=repr)

    global_report = fh_rayleigh_closed(action, h, mu)
    global_q = global_report["quotient"]

    if exhaustive:
        if len(varying) > 16:
            raise ValueError("resource-refusal: %d varying vertices for "
                             "exhaustive orbit partition" % len(varying))
        remaining = {frozenset(J | set(T))
                     for r in range(len(varying) + 1)
                     for T in itertools.combinations(varying, r)}
        base_sets = []
        while remaining:
            Y = next(iter(remaining))
            base_sets.append(Y)
            remaining -= set(orbit_of_set(action, Y, cap=orbit_cap))
    elif candidates is None:
        thetas = sorted({h[v] for v in varying} | {1.0})
        base_sets = [frozenset(v for v, x in h.items() if x >= theta)
                     for theta in thetas]
    elif callable(candidates):
        base_sets = [frozenset(Y) for Y in candidates(h)]
    else:
        base_sets = [frozenset(Y) for Y in candidates]

    best = None
    tried = []
    for A in base_sets:
        if not (J <= A and A <= B):
            tried.append((A, None))
            continue
        orbit = orbit_of_set(action, A, cap=orbit_cap)
        weights = {}
        for Y in orbit:
            if J <= Y and Y <= B:
                w = _fh_set_value(h, varying, Y)
                if w:
                    weights[Y] = w
        if not weights:
            tried.append((A, None))
            continue
        q = set_function_quotient(action, weights, mu)
        tried.append((A, q))
        if best is None or q < best[1]:
            best = (A, q, orbit, weights)
    if best is None or best[1] > global_q + 1e-9:
        raise AssertionError("no candidate orbit meets the global quotient "
                             "%.6g (tried %r)" % (global_q, [t[1] for t in tried]))
    A, q, orbit, weights = best
    translates = {Y: orbit[Y] for Y in weights}
    out = AdmissibleFunction(action, weights, J, B, A, translates=translates,
                             mu=mu,
                             meta={"quotient": q, "global_quotient": global_q,
                                   "energy": global_report["energy"],
                                   "candidates": len(base_sets),
                                   "orbit_size": len(orbit)})
    out.check()
    return out


# ---------------------------------------------------------------------------
# The tent function on translates of W(k, r/8) in a bubble graph.

def bubble_tent_F(action, r, mu=None):
    """The tent function F_r(alpha^t A_r) = 1 - 8|t|/r on a bubble action.

    A_r = W(k, r/8) with k = k(r) the first index with a_k >= 2r; the support
    family is {alpha^t A_r : |t| <= r/8} (weight-zero ties kept as support
    sets, dropped from the weight map), each translate beta-invariant and
    sandwiched between J_r = {o, m_k} and B_r = W(k, r/4).  The action must
    be truncated at level >= k+1 and a_k must accommodate the W-regions, else
    the construction refuses.  Returns the AdmissibleFunction with the
    measured constant Q * r^2 in meta.
    """
    a = action.a
    k = k_of_r(a, r)
    if action.truncate is None or action.truncate < k + 1:
        raise ValueError("out-of-range: bubble truncation must reach level %d"
                         % (k + 1))
    if r > a[k - 1] / 2:
        raise ValueError("out-of-range: need r <= a_k/2")
    A = frozenset(w_region(action, k, r // 8))
    B = frozenset(w_region(action, k, r // 4))
    J = frozenset([action.root, midpoint(action, k)])

    tmax = r // 8
    alpha, beta = action.gens.symbols
    weights = {}
    support_sets = []
    translates = {}
    for t in range(-tmax, tmax + 1):
        letter = (alpha, 1 if t >= 0 else -1)
        Y = A
        for _ in range(abs(t)):
            Y = translate_set(action, letter, Y)
        if translate_set(action, (beta, 1), Y) != Y:
            raise AssertionError("translate alpha^%d A_r is not beta-invariant" % t)
        if not (J <= Y and Y <= B):
            raise AssertionError("translate alpha^%d A_r violates J <= Y <= B" % t)
        support_sets.append(Y)
        w = 1.0 - 8.0 * abs(t) / r
        if w:
            weights[Y] = w
            translates[Y] = (letter,) * abs(t)
    out = AdmissibleFunction(action, weights, J, B, A, translates=translates,
                             support_sets=support_sets, mu=mu)
    q = out.quotient()
    out.meta = {"quotient": q, "constant": q * r * r, "k": k,
                "tmax": tmax, "support_sets": len(support_sets)}
    out.check()
    return out


# ---------------------------------------------------------------------------
# Resistance across the cyclic Neumann-Segal graphs.

def ns_resistance_measured(l, n, tol=DEFAULT_TOL):
    """Measured R({0^{n+1}} <-> S_n^c) on the level-(n+1) truncation with unit
    conductances, alongside the formula value sum_j 2^{n-j-2} l_j.

    Returns a report with both numbers, their ratio, and the doubling ratio
    R_n / (2 R_{n-1} + l_n/4) (the n=1 entry has no predecessor and reports
    the plain ratio only)."""
    from .nsgraphs import build_ns, ns_labels, ns_resistance_formula

    graph = build_ns(l, n + 1)
    inside = {lab + (0,) for lab in ns_labels(l, n)}
    root = (0,) * (n + 1)
    outside = [graph.labels[v] for v in range(graph.n)
               if graph.labels[v] not in inside]
    problem = ResistanceProblem(graph, [root], outside)
    R, profile = effective_resistance(problem, tol=tol)
    formula = float(ns_resistance_formula(l, n))
    report = {"n": n, "measured": R, "formula": formula,
              "ratio": R / formula, "profile": profile}
    if n >= 2:
        prev = ns_resistance_measured(l, n - 1, tol=tol)
        predicted = 2.0 * prev["measured"] + l[n - 1] / 4.0
        report["doubling_ratio"] = R / predicted
    return report
