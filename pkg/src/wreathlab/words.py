"""Words over a generator alphabet, their action, and inverted orbits.

Evaluation convention (used everywhere): the word w = w_1 w_2 ... w_l acts
on a point x as w_1.(w_2.(...(w_l.x))), i.e. the rightmost letter acts
first.  The inverted orbit collects the images of x under the leading
prefixes:

    O(w; x) = { w_1...w_j . x : 0 <= j <= l }

so O(w; J) always contains J and w.J, and satisfies the single-letter
recursion O(g w'; J) = J union g.O(w'; J).
"""

import random
from collections import deque

from . import bubble as bub
from .graphs import FiniteSchreierGraph, bfs_distances


class Word:
    """Immutable word; letters is a tuple of (symbol, sign)."""

    def __init__(self, letters=()):
        self.letters = tuple((s, 1 if sg >= 0 else -1) for s, sg in letters)

    @staticmethod
    def parse(text):
        """Parse 'a b a' b' style strings (apostrophe marks the inverse)."""
        letters = []
        for tok in text.split():
            if tok.endswith("'"):
                letters.append((tok[:-1], -1))
            else:
                letters.append((tok, +1))
        return Word(letters)

    def __str__(self):
        return " ".join(s + ("'" if sg < 0 else "") for s, sg in self.letters)

    def __mul__(self, other):
        return Word(self.letters + other.letters)

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        return Word(self.letters * n)

    def inverse(self):
        return Word(tuple((s, -sg) for s, sg in reversed(self.letters)))

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def prefix(self, j):
        return Word(self.letters[:j])

    def __repr__(self):
        return "Word(%s)" % str(self)


def act_word(action, w, x):
    """Image of x under w (rightmost letter first)."""
    for letter in reversed(w.letters):
        x = action.act_letter(letter, x)
    return x


def inverted_orbit(action, w, J):
    """O(w; J) as a set, via the single-letter recursion processed from the
    rightmost letter inward."""
    J = set(J)
    orbit = set(J)
    for letter in reversed(w.letters):
        orbit = J | {action.act_letter(letter, x) for x in orbit}
    return orbit


class OmegaSpec:
    """Omega(J, B): words whose inverted orbit of J stays inside B."""

    def __init__(self, action, J, B):
        self.action = action
        self.J = sorted(set(J))
        self.B = frozenset(B)
        if not set(self.J) <= self.B:
            raise ValueError("invalid-parameter: J must be a subset of B")

    def __contains__(self, w):
        return self.in_omega(w)

    def in_omega(self, w):
        return inverted_orbit(self.action, w, self.J) <= self.B


def in_omega(spec, w):
    return spec.in_omega(w)


def _letter_perm(graph, letter):
    sym, sign = letter
    return tuple(graph.perms[sym] if sign > 0 else graph.inv_perms[sym])


def enumerate_omega(spec, truncation, maxlen=None):
    """Distinct evaluations (as permutations of the truncation's vertices) of
    the words in Omega(J, B) of length <= maxlen; maxlen=None runs the state
    BFS to closure.

    truncation is a FiniteSchreierGraph whose labels include all of B and
    enough extra collar to separate the evaluations we care about; the report
    notes that distinctness is only as fine as the truncation.

    Returns (set of permutation tuples, report dict).
    """
    if not isinstance(truncation, FiniteSchreierGraph):
        raise ValueError("truncation must be a finite graph")
    J_idx = frozenset(truncation.index_of(x) for x in spec.J)
    B_idx = frozenset(truncation.index_of(x) for x in spec.B)
    identity = tuple(range(truncation.n))
    letters = truncation.gens.signed_letters()
    perms = {letter: _letter_perm(truncation, letter) for letter in letters}

    start = (identity, J_idx)
    seen = {start}
    evals = {identity}
    q = deque([(start, 0)])
    max_seen_len = 0
    while q:
        (ev, orbit), depth = q.popleft()
        if maxlen is not None and depth >= maxlen:
            continue
        max_seen_len = max(max_seen_len, depth)
        for letter in letters:
            p = perms[letter]
            new_ev = tuple(ev[p[i]] for i in range(truncation.n))
            new_orbit = orbit | frozenset(new_ev[i] for i in J_idx)
            if not new_orbit <= B_idx:
                continue
            state = (new_ev, new_orbit)
            if state not in seen:
                seen.add(state)
                evals.add(new_ev)
                q.append((state, depth + 1))
    report = {
        "distinct": len(evals),
        "states": len(seen),
        "truncation_size": truncation.n,
        "closure": maxlen is None,
    }
    return evals, report


def _compose_letters(ev, p, n):
    return tuple(ev[p[i]] for i in range(n))


def orbit_lemma_check(action, k, l, w, n_deep_samples=8, seed=0):
    """Check the commutation/identification properties of a word acting near
    the level-k midpoint of a bubble graph.

    Preconditions: 0 <= l <= a_k/4 - 1 and w in Omega({m_k}, B_k(l)); their
    violation is reported as kind='precondition-violation', distinct from a
    property failure.

    Verifies:
      (i)   every prefix moves m_k along its own cycle: prefix_j . m_k =
            alpha^{s_j} . m_k with |s_j| <= l;
      (ii)  prefix_j . m_k equals the reversed word's prefix image;
      (iii) every subword u = gamma_i..gamma_j satisfies u.m_k =
            alpha^{s_j - s_{i-1}}.m_k and u^{-1}.m_k = alpha^{-s_j + s_{i-1}}.m_k;
      (iv)  for sampled vertices x at levels > k, the inverse-prefix orbit of
            x maps under the identification to the inverse-prefix orbit of
            the identified point.

    Returns a report dict with ok, per-clause results, and the first
    counterexample if any.
    """
    ak = action.a[k - 1]
    report = {"ok": False, "kind": None, "clauses": {}, "counterexample": None,
              "ties_at_l": 0}
    if not (0 <= l <= ak / 4 - 1):
        report["kind"] = "precondition-violation"
        report["counterexample"] = "need 0 <= l <= a_k/4 - 1"
        return report
    mk = bub.midpoint(action, k)
    ball = set(bub.midpoint_ball(action, k, l))
    if not inverted_orbit(action, w, [mk]) <= ball:
        report["kind"] = "precondition-violation"
        report["counterexample"] = "w leaves Omega(m_k, B_k(l))"
        return report

    main_cycle = 2 * ak
    half = ak // 2

    def alpha_exponent(lab):
        """Read a label on the k-th main cycle as alpha^s . m_k."""
        wpart, u = lab
        if wpart != (1,) * (k - 1):
            return None
        return bub.cyclic_rep(u - half, main_cycle)

    # clause (i): prefix positions
    s = [0]
    for j in range(1, len(w) + 1):
        x = act_word(action, w.prefix(j), mk)
        e = alpha_exponent(x)
        if e is None or abs(e) > l:
            report["kind"] = "failure"
            report["clauses"]["prefix-on-cycle"] = False
            report["counterexample"] = ("prefix", j, x)
            return report
        s.append(e)
    report["clauses"]["prefix-on-cycle"] = True

    # clause (ii): reversal
    for j in range(len(w) + 1):
        a_img = act_word(action, w.prefix(j), mk)
        b_img = act_word(action, Word(w.letters[:j][::-1]), mk)
        if a_img != b_img:
            report["kind"] = "failure"
            report["clauses"]["reversal"] = False
            report["counterexample"] = ("reversal", j, a_img, b_img)
            return report
    report["clauses"]["reversal"] = True

    # clause (iii): subwords, exhaustively
    for i in range(1, len(w) + 1):
        for j in range(i, len(w) + 1):
            sub = Word(w.letters[i - 1:j])
            want = s[j] - s[i - 1]
            got = alpha_exponent(act_word(action, sub, mk))
            got_inv = alpha_exponent(act_word(action, sub.inverse(), mk))
            if got != want or got_inv != -want:
                report["kind"] = "failure"
                report["clauses"]["subword"] = False
                report["counterexample"] = ("subword", i, j, got, got_inv, want)
                return report
    report["clauses"]["subword"] = True

    # clause (iv): identification of deep orbits
    rng = random.Random(seed)
    deep = _sample_deep_vertices(action, k, n_deep_samples, rng)
    for x in deep:
        ok, info = _identification_check(action, k, l, w, x, report)
        if not ok:
            report["kind"] = "failure"
            report["clauses"]["identification"] = False
            report["counterexample"] = ("identification", x, info)
            return report
    report["clauses"]["identification"] = True

    report["ok"] = True
    report["kind"] = "pass"
    return report


def _sample_deep_vertices(action, k, count, rng):
    """Random labels at levels > k (rejection with restart), within the depth
    the supplied sequences cover."""
    depth = action.truncate if action.truncate is not None else len(action.a)
    out = []
    tries = 0
    while len(out) < count and tries < 200 * max(1, count):
        tries += 1
        t = rng.randrange(k + 1, depth + 1)       # level
        wlen = t - 1
        if wlen > len(action.b):
            continue
        wpart = tuple(rng.randrange(1, action.b[i] - 1 + 1) for i in range(wlen))
        u = rng.randrange(2 * action.a[wlen])
        out.append((wpart, u))
    return out


def _identification_check(action, k, l, w, x, report):
    """Clause (iv): pick the identified point and segment map for x, then
    compare inverse-prefix orbits on both sides."""
    wpart, u = x
    t = len(wpart) + 1
    at = action.a[t - 1]
    mk = bub.midpoint(action, k)
    near0 = bfs_distances(action, [(wpart, 0)], radius=l)
    neara = bfs_distances(action, [(wpart, at)], radius=l)
    d0 = near0.get(x)
    da = neara.get(x)
    if d0 == l or da == l:
        report["ties_at_l"] += 1
    if d0 is not None:
        parent = wpart[:-1]
        xhat = bub.iota(action, parent, k, x)
        mapper = lambda lab: bub.iota(action, parent, k, lab)
    elif da is not None:
        xhat = bub.iota(action, wpart, k, x)
        mapper = lambda lab: bub.iota(action, wpart, k, lab)
    else:
        xhat = mk
        cyc = 2 * at

        def mapper(lab, base_w=wpart, base_u=u, cyc=cyc):
            lw, lu = lab
            if lw != base_w:
                raise ValueError("invalid-label: left the home cycle")
            delta = bub.cyclic_rep(lu - base_u, cyc)
            return ((1,) * (k - 1), action.a[k - 1] // 2 + delta)

    winv_prefixes = [w.prefix(j).inverse() for j in range(len(w) + 1)]
    for j, u_word in enumerate(winv_prefixes):
        left = act_word(action, u_word, x)
        right = act_word(action, u_word, xhat)
        try:
            mapped = mapper(left)
        except ValueError as e:
            return False, ("unmappable orbit point", j, left, str(e))
        if mapped != right:
            return False, ("mismatch", j, left, mapped, right)
    return True, None
