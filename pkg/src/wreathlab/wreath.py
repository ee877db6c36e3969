"""Permutation wreath products H wr_S Gamma and their random walks.

Elements are pairs (f, g): a finitely supported lamp configuration
f : S -> H and a base element g.  Multiplication is

    (f, g)(f', g') = (f + g.f', g g'),    (g.f')(x) = f'(g^{-1} x)

so the lamps of the right factor are pushed forward through g before
being added.  The base group acts on a Schreier graph: on a finite
quotient g is stored as a permutation (exact convolution available),
on an infinite action as a plain word (no normal form; equality is
only syntactic and exact convolution is refused).

Lamp groups are Z (64-bit, overflow checked) or Z_2, chosen at run time.
"""

from fractions import Fraction

from . import rng
from .words import Word, act_word, inverted_orbit


class ResourceRefusal(Exception):
    """Raised when a computation would exceed its agreed size budget."""


_INT64 = 2 ** 63


class LampSpec:
    """Lamp group: Z when modulus is None, Z_modulus otherwise."""

    def __init__(self, modulus=None):
        if modulus is not None and modulus < 2:
            raise ValueError("invalid-parameter: lamp modulus must be >= 2")
        self.modulus = modulus

    def add(self, u, v):
        w = u + v
        if self.modulus is not None:
            return w % self.modulus
        if not -_INT64 <= w < _INT64:
            raise OverflowError("lamp value overflowed 64 bits")
        return w

    def neg(self, u):
        return (-u) % self.modulus if self.modulus is not None else -u

    def normalize(self, u):
        u = u % self.modulus if self.modulus is not None else u
        if self.modulus is None and not -_INT64 <= u < _INT64:
            raise OverflowError("lamp value overflowed 64 bits")
        return u

    def order(self):
        return self.modulus  # None means infinite


class FiniteHost:
    """Base group = permutations of a finite Schreier graph."""

    def __init__(self, graph):
        self.graph = graph
        self.n = graph.n
        self.root = graph.root
        self.finite = True

    def identity(self):
        return tuple(range(self.n))

    def letter(self, letter):
        """Permutation of a single signed generator letter."""
        sym, sign = letter
        table = self.graph.perms[sym] if sign > 0 or self.graph.gens.involution[sym] \
            else self.graph.inv_perms[sym]
        return tuple(table)

    def of_word(self, word):
        g = self.identity()
        for letter in reversed(word.letters):
            tab = self.letter(letter)
            g = tuple(tab[g[i]] for i in range(self.n))
        return g

    def mul(self, g, h):
        return tuple(g[h[i]] for i in range(self.n))

    def inv(self, g):
        out = [0] * self.n
        for i, gi in enumerate(g):
            out[gi] = i
        return tuple(out)

    def act(self, g, x):
        return g[x]

    def key(self, g):
        return g

    def is_identity(self, g):
        return all(g[i] == i for i in range(self.n))


class WordHost:
    """Base group elements stored as words over a lazy action.

    No normal forms: equality of keys is syntactic (except that inverse
    marks on involutive generators are dropped), which is enough for
    measures whose support words are distinct.
    """

    def __init__(self, action):
        self.action = action
        self.root = action.root
        self.finite = False

    def identity(self):
        return Word()

    def of_word(self, word):
        return word

    def mul(self, g, h):
        return g * h

    def inv(self, g):
        return g.inverse()

    def act(self, g, x):
        return act_word(self.action, g, x)

    def key(self, g):
        inv = self.action.gens.involution
        return tuple((sym, 1 if inv[sym] else sign) for sym, sign in g.letters)

    def is_identity(self, g):
        return not g.letters


class WreathElement:
    """(lamps, base) with lamps a dict vertex -> nonzero lamp value."""

    __slots__ = ("host", "lamp", "lamps", "base")

    def __init__(self, host, lampspec, lamps, base):
        self.host = host
        self.lamp = lampspec
        self.lamps = {x: v for x, v in lamps.items() if v != 0}
        self.base = base

    def key(self):
        return (frozenset(self.lamps.items()), self.host.key(self.base))

    def is_identity(self):
        return not self.lamps and self.host.is_identity(self.base)

    def inverse(self):
        ginv = self.host.inv(self.base)
        lamps = {self.host.act(ginv, x): self.lamp.neg(v) for x, v in self.lamps.items()}
        return WreathElement(self.host, self.lamp, lamps, ginv)

    def __eq__(self, other):
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def wreath_identity(host, lampspec):
    return WreathElement(host, lampspec, {}, host.identity())


def wreath_mul(x, y):
    """(f,g)(f',g') = (f + g.f', gg')."""
    if x.host is not y.host:
        raise ValueError("invalid-parameter: elements live over different hosts")
    lamps = dict(x.lamps)
    for pos, val in y.lamps.items():
        p = x.host.act(x.base, pos)
        w = x.lamp.add(lamps.get(p, 0), val)
        if w == 0:
            lamps.pop(p, None)
        else:
            lamps[p] = w
    return WreathElement(x.host, x.lamp, lamps, x.host.mul(x.base, y.base))


class SymmetricMeasure:
    """Finitely supported symmetric probability measure on the wreath
    product; probabilities are exact Fractions."""

    def __init__(self, host, lampspec, pairs):
        self.host = host
        self.lamp = lampspec
        combined = {}
        for elem, p in pairs:
            p = Fraction(p)
            if p < 0:
                raise ValueError("invalid-parameter: negative probability")
            if p == 0:
                continue
            k = elem.key()
            if k in combined:
                combined[k] = (combined[k][0], combined[k][1] + p)
            else:
                combined[k] = (elem, p)
        self.support = [elem for elem, _ in combined.values()]
        self.probs = [p for _, p in combined.values()]
        if sum(self.probs) != 1:
            raise ValueError("invalid-parameter: probabilities sum to %s, not 1"
                             % (sum(self.probs),))
        by_key = {elem.key(): p for elem, p in zip(self.support, self.probs)}
        for elem, p in zip(self.support, self.probs):
            if by_key.get(elem.inverse().key()) != p:
                raise ValueError("invalid-parameter: measure is not symmetric at %r"
                                 % (elem.key(),))
        self._cum = []
        acc = 0.0
        for p in self.probs:
            acc += float(p)
            self._cum.append(acc)
        self._cum[-1] = 1.0

    def sample(self, gen):
        return self.support[rng.sample_index(gen, self._cum)]


def _lamp_element(host, lampspec, value):
    lamps = {host.root: lampspec.normalize(value)} if lampspec.normalize(value) != 0 else {}
    return WreathElement(host, lampspec, lamps, host.identity())


def _base_element(host, lampspec, word):
    return WreathElement(host, lampspec, {}, host.of_word(word))


def make_measure(host, lampspec, kind, eta=None, mu=None, pairs=None):
    """Walk measures on H wr_S Gamma.

    eta: list of (lamp value, probability) — the lamp measure, lifted to
    switches at the root; mu: list of (Word, probability) on the base.
    kind "sow" is the switch-or-walk mixture (eta + mu)/2; "sws" is the
    switch-walk-switch convolution mu_H * mu_Gamma * mu_H; "custom"
    takes explicit (element, probability) pairs.
    """
    if kind == "custom":
        return SymmetricMeasure(host, lampspec, pairs)
    if eta is None or mu is None:
        raise ValueError("invalid-parameter: eta and mu are required")
    eta = [(lampspec.normalize(h), Fraction(p)) for h, p in eta]
    eta_map = {}
    for h, p in eta:
        eta_map[h] = eta_map.get(h, Fraction(0)) + p
    if sum(eta_map.values()) != 1:
        raise ValueError("invalid-parameter: eta does not sum to 1")
    for h, p in eta_map.items():
        if eta_map.get(lampspec.neg(h), Fraction(0)) != p:
            raise ValueError("invalid-parameter: eta is not symmetric")
    mu = [(w if isinstance(w, Word) else Word.parse(w), Fraction(p)) for w, p in mu]
    if sum(p for _, p in mu) != 1:
        raise ValueError("invalid-parameter: mu does not sum to 1")
    mu_elems = [(_base_element(host, lampspec, w), p) for w, p in mu]
    mu_keys = {e.key(): p for e, p in mu_elems}
    for e, p in mu_elems:
        if mu_keys.get(e.inverse().key()) != p:
            raise ValueError("invalid-parameter: mu is not symmetric")
    eta_elems = [(_lamp_element(host, lampspec, h), p) for h, p in eta_map.items()]

    if kind == "sow":
        pairs = [(e, p / 2) for e, p in eta_elems] + [(e, p / 2) for e, p in mu_elems]
        return SymmetricMeasure(host, lampspec, pairs)
    if kind == "sws":
        pairs = []
        for e1, p1 in eta_elems:
            for e2, p2 in mu_elems:
                left = wreath_mul(e1, e2)
                for e3, p3 in eta_elems:
                    pairs.append((wreath_mul(left, e3), p1 * p2 * p3))
        return SymmetricMeasure(host, lampspec, pairs)
    raise ValueError("invalid-parameter: unknown measure kind %r" % (kind,))


def simulate_left_walk(measure, steps, seed, initial=None, side="left", stream_index=0):
    """Trajectory S_0, S_1, ..., S_steps with S_k = X_k S_{k-1} (left
    increments; side="right" multiplies on the right instead).
    Deterministic given (seed, stream_index)."""
    if steps < 0:
        raise ValueError("invalid-parameter: steps must be >= 0")
    gen = rng.stream(seed, stream_index)
    s = initial if initial is not None else wreath_identity(measure.host, measure.lamp)
    out = [s]
    for _ in range(steps):
        x = measure.sample(gen)
        s = wreath_mul(x, s) if side == "left" else wreath_mul(s, x)
        out.append(s)
    return out


def return_probability_mc(measure, n, trials, seed, workers=1):
    """Monte Carlo estimate of q^{(2n)}(e).

    Trial i draws from stream (seed, i), so the estimate is identical
    for any worker count; `workers` only partitions the trial range.
    """
    if n < 0 or trials < 1:
        raise ValueError("invalid-parameter: need n >= 0 and trials >= 1")
    if n == 0:
        return 1.0, 0.0
    bounds = [trials * w // workers for w in range(workers + 1)]
    hits = 0
    for w in range(workers):
        for i in range(bounds[w], bounds[w + 1]):
            gen = rng.stream(seed, i)
            s = wreath_identity(measure.host, measure.lamp)
            for _ in range(2 * n):
                s = wreath_mul(measure.sample(gen), s)
            if s.is_identity():
                hits += 1
    p = hits / trials
    stderr = (p * (1 - p) / trials) ** 0.5
    return p, stderr


def state_space_size(measure):
    """|H|^|S| * |base group| for a finite host, or None if infinite."""
    host, lamp = measure.host, measure.lamp
    if not host.finite or lamp.order() is None:
        return None
    seen = {host.identity()}
    frontier = [host.identity()]
    gens = [e.base for e in measure.support]
    cap = 2 * 10 ** 6
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                gh = host.mul(h, g)
                if gh not in seen:
                    seen.add(gh)
                    nxt.append(gh)
                    if len(seen) > cap:
                        return None
        frontier = nxt
    return lamp.order() ** host.n * len(seen)


def return_probability_exact(measure, nmax):
    """Exact table [q^{(2n)}(e)]_{n<=nmax} by sparse convolution.

    Only on finite quotients with finite lamp groups, and only when the
    full state space has at most ~10^6 states; otherwise refuses with a
    size report.  Probability mass is conserved exactly (Fractions).
    """
    size = state_space_size(measure)
    if size is None:
        raise ResourceRefusal("state space is infinite or beyond enumeration; "
                              "exact convolution needs at most 10^6 states")
    if size > 10 ** 6:
        raise ResourceRefusal("state space has %d states, over the 10^6 "
                              "exact-convolution budget" % size)
    ident = wreath_identity(measure.host, measure.lamp)
    dist = {ident.key(): (ident, Fraction(1))}
    table = [Fraction(1)]
    for step in range(1, 2 * nmax + 1):
        new = {}
        for elem, p in dist.values():
            for x, q in zip(measure.support, measure.probs):
                z = wreath_mul(x, elem)
                k = z.key()
                if k in new:
                    new[k] = (z, new[k][1] + p * q)
                else:
                    new[k] = (z, p * q)
        dist = new
        total = sum(p for _, p in dist.values())
        if total != 1:
            raise AssertionError("mass leak: total probability %s" % (total,))
        if step % 2 == 0:
            table.append(dist.get(ident.key(), (None, Fraction(0)))[1])
    return table


def sample_constrained_trajectory(action, family, upsilon0, steps, seed, lampspec=None,
                                  max_tries=200, stream_index=0):
    """Random trajectory of lamp/base moves whose lamp support stays in
    the family, built by per-step rejection; restarts a step when every
    try would leave the family."""
    lampspec = lampspec or LampSpec(None)
    family = {frozenset(Y) for Y in family}
    gen = rng.stream(seed, stream_index)
    o = action.root
    moves = [("lamp", 1), ("lamp", -1)] + \
        [("base", letter) for letter in action.gens.signed_letters()]
    lamps = {x: lampspec.normalize(v) for x, v in upsilon0.items() if v != 0}
    if frozenset(lamps) not in family:
        raise ValueError("invalid-parameter: initial support not in the family")
    out = []
    for _ in range(steps):
        for attempt in range(max_tries):
            kind, payload = moves[int(gen.integers(len(moves)))]
            if kind == "lamp":
                w = lampspec.add(lamps.get(o, 0), payload)
                trial = dict(lamps)
                if w == 0:
                    trial.pop(o, None)
                else:
                    trial[o] = w
            else:
                trial = {action.act_letter(payload, x): v for x, v in lamps.items()}
            if frozenset(trial) in family:
                lamps = trial
                out.append((kind, payload))
                break
        else:
            raise ValueError("could not extend the trajectory within the family")
    return out


def controls_inverted_check(action, family, letters, upsilon0, J, lampspec=None):
    """Check that lamps control inverted orbits along a trajectory.

    family: the support collection of an admissible function — sets of
    vertices, each containing J.  letters: trajectory increments, each
    ("lamp", +-1) (a switch at the root) or ("base", (sym, sign)).
    upsilon0: initial lamp configuration whose support lies in family.

    Left-multiplying step by step, verifies every lamp support stays in
    the family (else precondition-violation at that step) and then that
    the inverted orbit of the base word sits inside the final support,
    which must equal the pushforward of the initial one.
    """
    lampspec = lampspec or LampSpec(None)
    family = {frozenset(Y) for Y in family}
    J = frozenset(J)
    for Y in family:
        if not J <= Y:
            raise ValueError("invalid-parameter: family member misses J")
    lamps = {x: lampspec.normalize(v) for x, v in upsilon0.items() if v != 0}
    if frozenset(lamps) not in family:
        return {"status": "precondition-violation", "step": 0,
                "reason": "initial support not in the family"}
    o = action.root
    base_letters = []
    for k, move in enumerate(letters, start=1):
        kind, payload = move
        if kind == "lamp":
            w = lampspec.add(lamps.get(o, 0), payload)
            if w == 0:
                lamps.pop(o, None)
            else:
                lamps[o] = w
        elif kind == "base":
            lamps = {action.act_letter(payload, x): v for x, v in lamps.items()}
            base_letters.insert(0, payload)
        else:
            raise ValueError("invalid-parameter: unknown move kind %r" % (kind,))
        if frozenset(lamps) not in family:
            return {"status": "precondition-violation", "step": k,
                    "reason": "lamp support left the family"}
    gamma = Word(tuple(base_letters))
    orbit = inverted_orbit(action, gamma, J)
    support = frozenset(lamps)
    pushed = frozenset(act_word(action, gamma, x) for x in upsilon0 if upsilon0[x] != 0)
    ok = orbit <= support and support == pushed
    return {
        "status": "pass" if ok else "fail",
        "orbit": sorted(orbit),
        "support": sorted(support),
        "orbit_contained": orbit <= support,
        "support_is_pushforward": support == pushed,
        "base_word": str(gamma),
        "steps": len(letters),
    }
