"""Local embeddings into finite quotients and the composite test function.

Each graph family carries a projection theta defined (at least) on the
words whose inverted orbit of a base set J stays inside a window B, the
set Omega(J, B):

* dihedral ray: reduce the word in the finite dihedral group with
  rotation order 2^n, stored as (r, flip) with the product rule
  (r1,f1)(r2,f2) = (r1 + (-1)^f1 r2 mod 2^n, f1 xor f2);
* bubble graphs: evaluate the word on the depth-(k+1) truncation;
* cyclic substitution graphs: take the level-n wreath decomposition and
  keep, over each level-n vertex, the net exponent of the level-(n+1)
  section as an abelian lamp (a-exponent mod l_{n+1}, b-exponent mod the
  certified order of the deeper b), together with the level-n permutation.

On Omega(J, B) these satisfy the local-embedding contract: every
generator and its inverse lie in the domain, theta(w1 w2) =
theta(w1) theta(w2) whenever all three words stay in Omega, and words
with equal evaluations (decided on a recorded deeper truncation) have
equal images.  `omega_hom_check` samples the contract;
`omega_image_closure` verifies it exhaustively by BFS over (evaluation
key, inverted orbit) states, which also counts the distinct evaluations
of Omega and their theta images.

`component_pair` materializes the component of a lamp configuration over
the full group and over the finite quotient side by side, and
`theta_isomorphism_check` verifies that the two components are isomorphic
as edge-labeled graphs with matching exterior boundary labels.

`assemble_phi` evaluates the composite function
Phi(f, gamma) = psi(gamma) * F(supp f) * prod_{x in supp f} 1_{[1,M]}(f(x))
under the kernel that flips the lamp at the root with mass 1/4 and applies
a letter s with mass mu(s)/2.  Because lamp values inside [1, M] never
change Phi, the Rayleigh quotient factorizes exactly as

    E / |Phi|^2 = 1/(2M) + (1/2) sum_s mu(s) (1 - C_psi(s) S_F(s))

with normalized correlations C_psi(s) = <psi(theta(s) .), psi>/|psi|^2 and
S_F(s) = <F(s .), F>/|F|^2; this is cross-checked against brute-force
materialization on small instances and against the additive bound
1/M + Q(F) + Q(psi).
"""

import itertools
import math
from collections import deque
from fractions import Fraction

from .bubble import BubbleAction, build_bubble, k_of_r, midpoint, w_region
from .dihedral import DihedralRay
from .graphs import ball
from .nsgraphs import NSAction, build_ns, extend_l, ns_cut_vertex, ns_near_far_regions
from .resistance import AdmissibleFunction, _check_measure, set_function_quotient, translate_set
from .rng import stream
from .treeauto import level1_shift_and_sections
from .words import Word, OmegaSpec, act_word, inverted_orbit
from .wreath import (FiniteHost, LampSpec, ResourceRefusal, WordHost,
                     WreathElement, wreath_identity, wreath_mul)

CLOSURE_CAP = 200_000
COMPONENT_CAP = 200_000
MATERIALIZE_CAP = 300_000


# --------------------------------------------------------------------------
# the three local embeddings


class DihedralEmbedding:
    """theta_n: words in s, t -> dihedral group with rotation order 2^n.

    Domain window: J = {0}, B = {0..2^n-1} on the ray.  Evaluation keys
    are exact: an infinite-dihedral element is determined by the images
    of 0 and 1 on the ray.
    """

    family = "dihedral"

    def __init__(self, n):
        if n < 1:
            raise ValueError("invalid-parameter: need n >= 1")
        self.level = n
        self.modulus = 2 ** n
        self.action = DihedralRay()
        self.omega = OmegaSpec(self.action, [0], range(2 ** n))
        self.meta = {"target": "dihedral order %d" % (2 ** (n + 1),),
                     "certification": "exact (ray evaluation at 0 and 1)"}

    def letters(self):
        return self.action.gens.signed_letters()

    def identity(self):
        return (0, 0)

    def theta_letter(self, letter):
        return {"s": (0, 1), "t": (1, 1)}[letter[0]]

    def mul(self, g, h):
        r1, f1 = g
        r2, f2 = h
        return ((r1 + (r2 if f1 == 0 else -r2)) % self.modulus, f1 ^ f2)

    def inv(self, g):
        r, f = g
        return ((-r if f == 0 else r) % self.modulus, f)

    def theta(self, w):
        g = self.identity()
        for letter in w.letters:
            g = self.mul(g, self.theta_letter(letter))
        return g

    def image_key(self, g):
        return g

    def cert_key(self, w):
        return (act_word(self.action, w, 0), act_word(self.action, w, 1))

    def cert_identity(self):
        return (0, 1)

    def cert_mul_letter(self, key, letter):
        """Key of w*letter from the key of w (exact ray-affine evaluation)."""
        return (_ray_eval(key, self.action.act_letter(letter, 0)),
                _ray_eval(key, self.action.act_letter(letter, 1)))

    def cert_left_letter(self, key, letter):
        """Key of letter*w from the key of w."""
        return (self.action.act_letter(letter, key[0]),
                self.action.act_letter(letter, key[1]))

    def in_domain(self, w):
        return self.omega.in_omega(w)

    def theta_restricted(self, w):
        if not self.in_domain(w):
            raise ValueError("domain-violation: inverted orbit leaves B")
        return self.theta(w)


def _zig(x):
    """Ray vertex -> line coordinate in which s, t act as isometries:
    0,1,2,3,4,... -> 0,1,-1,2,-2,...  (s is the reflection z -> 1-z and
    t is z -> -z)."""
    return (x + 1) // 2 if x % 2 else -(x // 2)


def _unzig(z):
    return 2 * z - 1 if z > 0 else -2 * z


def _ray_eval(key, x):
    """Image of the ray point x under the dihedral element with the given
    (image of 0, image of 1) key: affine in the line coordinate."""
    z0 = _zig(key[0])
    eps = _zig(key[1]) - z0
    return _unzig(eps * _zig(x) + z0)


class BubbleEmbedding:
    """theta = evaluation on the depth-(k+1) bubble truncation.

    Domain window: J = {o, m_k}, B = W(k, l) for k >= 2 (union of balls
    around o and m_k when k = 1).  The well-definedness precondition
    l < a_k/4 - 1 is recorded as a flag, not enforced.
    """

    family = "bubble"

    def __init__(self, a, b, k, l, extra=2):
        if k < 1:
            raise ValueError("invalid-parameter: need k >= 1")
        a = tuple(a)
        b = tuple(b)
        if len(a) < k + 1 + extra or len(b) < k + 1 + extra:
            raise ValueError("invalid-parameter: need a_1..a_%d" % (k + 1 + extra,))
        self.level = k
        self.l = l
        self.action = BubbleAction(a, b, k + 1 + extra)
        self.target_graph = build_bubble(a, b, k + 1)
        self.target = FiniteHost(self.target_graph)
        self.deep_graph = build_bubble(a, b, k + 1 + extra)
        self.deep = FiniteHost(self.deep_graph)
        if k >= 2:
            B = w_region(self.action, k, l)
        else:
            B = sorted(set(ball(self.action, self.action.root, l)[0])
                       | set(ball(self.action, midpoint(self.action, 1), l)[0]))
        self.omega = OmegaSpec(self.action, [self.action.root, midpoint(self.action, k)], B)
        self.meta = {"target": "bubble group on X^%d (%d points)" % (k + 1, self.target_graph.n),
                     "certification": "truncation X^%d" % (k + 1 + extra,),
                     "precondition_l_ok": l < a[k - 1] / 4 - 1}

    def letters(self):
        return self.action.gens.signed_letters()

    def identity(self):
        return self.target.identity()

    def theta_letter(self, letter):
        return self.target.letter(letter)

    def mul(self, g, h):
        return self.target.mul(g, h)

    def inv(self, g):
        return self.target.inv(g)

    def theta(self, w):
        return self.target.of_word(w)

    def image_key(self, g):
        return g

    def cert_key(self, w):
        return self.deep.of_word(w)

    def cert_identity(self):
        return self.deep.identity()

    def cert_mul_letter(self, key, letter):
        tab = self.deep.letter(letter)
        return tuple(key[tab[i]] for i in range(len(key)))

    def cert_left_letter(self, key, letter):
        tab = self.deep.letter(letter)
        return tuple(tab[key[i]] for i in range(len(key)))

    def in_domain(self, w):
        return self.omega.in_omega(w)

    def theta_restricted(self, w):
        if not self.in_domain(w):
            raise ValueError("domain-violation: inverted orbit leaves B")
        return self.theta(w)


class NSEmbedding:
    """Level-n wreath projection for the cyclic substitution graphs.

    Images are (lamp, sigma): sigma is the permutation of the level-n
    truncation and lamp maps a level-n vertex index to the pair of net
    section exponents (a-exponent mod l_{n+1}, b-exponent mod the
    certified order of the level-(n+1) b).  The net exponents are
    invariant under free reduction of the word, so the map is defined on
    arbitrary domain words.  On most instances the section elements of
    domain words are pure powers (b-powers over the near half, a-powers
    over the far half, trivial elsewhere, see `section_purity`), but
    purity is reported rather than assumed: the lamp keeps net exponents
    at every vertex.

    Domain window: J = {root}, B = the points of the depth-(n+extra)
    truncation strictly closer to the root than to the cut vertex.
    """

    family = "ns"

    def __init__(self, l, n, extra=2):
        if n < 1:
            raise ValueError("invalid-parameter: need n >= 1")
        if extra < 2:
            raise ValueError("invalid-parameter: need extra >= 2 for a nontrivial b order")
        self.level = n
        self.l = extend_l(l, n + extra)
        self.extra = extra
        self.base_graph = build_ns(self.l, n)
        self.base = FiniteHost(self.base_graph)
        self.deep_graph = build_ns(self.l, n + extra)
        self.deep = FiniteHost(self.deep_graph)
        self.action = NSAction(self.l, n + extra)
        near, far = ns_near_far_regions(self.l, n)
        self.near = frozenset(self.base_graph.index_of(x) for x in near)
        self.far = frozenset(self.base_graph.index_of(x) for x in far)
        self.a_order = self.l[n]
        self.shifted_graph = build_ns(extend_l(self.l[n:], extra), extra)
        self.shifted = FiniteHost(self.shifted_graph)
        self.b_order = _perm_order(self.shifted_graph.perms["b"])
        d_root = self.deep_graph.distances_from([self.deep_graph.root])
        cut = ns_cut_vertex(self.l, n) + (0,) * extra
        d_cut = self.deep_graph.distances_from([self.deep_graph.index_of(cut)])
        B = [self.deep_graph.labels[v] for v in range(self.deep_graph.n)
             if d_root[v] < d_cut[v]]
        self.omega = OmegaSpec(self.action, [self.action.root], B)
        self._letter_cache = {}
        self.meta = {"target": "(Z_%d x Z_%d) lamps over %d vertices, with the level-%d quotient"
                               % (self.a_order, self.b_order, self.base_graph.n, n),
                     "certification": "truncation depth %d; b order certified at depth %d"
                                      % (n + extra, extra)}

    def letters(self):
        return self.action.gens.signed_letters()

    def identity(self):
        return (frozenset(), self.base.identity())

    def _sections(self, w):
        """Sparse map: level-n vertex label -> section Word (level n+1 letters)."""
        secs = {(): w}
        for i in range(self.level):
            nxt = {}
            for prefix, part in secs.items():
                if not part.letters:
                    continue
                _, parts = level1_shift_and_sections(part, self.l[i])
                for x, sub in enumerate(parts):
                    if sub.letters:
                        nxt[prefix + (x,)] = sub
            secs = nxt
        return secs

    def _lamp_value(self, section):
        qa = sum(sg for sym, sg in section.letters if sym == "a")
        qb = sum(sg for sym, sg in section.letters if sym == "b")
        return (qa % self.a_order, qb % self.b_order)

    def theta(self, w):
        lamp = []
        for label, section in self._sections(w).items():
            val = self._lamp_value(section)
            if val != (0, 0):
                lamp.append((self.base_graph.index_of(label), val))
        return (frozenset(lamp), self.base.of_word(w))

    def theta_letter(self, letter):
        if letter not in self._letter_cache:
            self._letter_cache[letter] = self.theta(Word([letter]))
        return self._letter_cache[letter]

    def mul(self, g, h):
        """(f_g, s_g)(f_h, s_h) = (x -> f_g(s_h x) + f_h(x), s_g s_h)."""
        fg, sg = g
        fh, sh = h
        lamp = {}
        for x, (qa, qb) in fh:
            lamp[x] = (qa, qb)
        if fg:
            inv_sh = self.base.inv(sh)
            for y, (qa, qb) in fg:
                x = inv_sh[y]
                pa, pb = lamp.get(x, (0, 0))
                lamp[x] = ((pa + qa) % self.a_order, (pb + qb) % self.b_order)
        out = frozenset((x, v) for x, v in lamp.items() if v != (0, 0))
        return (out, self.base.mul(sg, sh))

    def inv(self, g):
        fg, sg = g
        si = self.base.inv(sg)
        lamp = frozenset((sg[x], ((-qa) % self.a_order, (-qb) % self.b_order))
                         for x, (qa, qb) in fg)
        return (lamp, si)

    def image_key(self, g):
        return (g[0], g[1])

    def cert_key(self, w):
        return self.deep.of_word(w)

    def cert_identity(self):
        return self.deep.identity()

    def cert_mul_letter(self, key, letter):
        tab = self.deep.letter(letter)
        return tuple(key[tab[i]] for i in range(len(key)))

    def cert_left_letter(self, key, letter):
        tab = self.deep.letter(letter)
        return tuple(tab[key[i]] for i in range(len(key)))

    def in_domain(self, w):
        return self.omega.in_omega(w)

    def theta_restricted(self, w):
        if not self.in_domain(w):
            raise ValueError("domain-violation: inverted orbit leaves B")
        return self.theta(w)

    def _shifted_power(self, sym, q):
        g = self.shifted.letter((sym, 1 if q >= 0 else -1))
        out = self.shifted.identity()
        for _ in range(abs(q)):
            out = self.shifted.mul(out, g)
        return out

    def section_purity(self, w):
        """Check whether the level-n section elements of w (evaluated on
        the certified shifted truncation) are pure b-powers over the near
        half, pure a-powers over the far half, and trivial elsewhere.

        This holds on most instances but is not a theorem for every
        domain word: a suffix of the word can relocate a vertex of the
        window onto the cut, after which leading b-letters deposit
        a-exponents over a near or equidistant vertex.  The smallest
        observed failures need the deeper orders to exceed the
        accumulated exponent (e.g. sequences starting (2, 4, 8))."""
        violations = []
        for label, section in self._sections(w).items():
            x = self.base_graph.index_of(label)
            ev = self.shifted.of_word(section)
            qa = sum(sg for sym, sg in section.letters if sym == "a")
            qb = sum(sg for sym, sg in section.letters if sym == "b")
            if x in self.near:
                want = self._shifted_power("b", qb)
                tag = "near section != b^%d" % qb
            elif x in self.far:
                want = self._shifted_power("a", qa)
                tag = "far section != a^%d" % qa
            else:
                want = self.shifted.identity()
                tag = "equidistant section != identity"
            if ev != want:
                violations.append((label, tag, str(section)))
        return {"pure": not violations, "violations": violations}

    def projection_size(self, cap=CLOSURE_CAP):
        """Order of the level-n permutation group generated by the
        letters, or None if it exceeds the cap."""
        if not hasattr(self, "_projection_size"):
            gens = [self.base.letter(g) for g in self.letters()]
            seen = {self.base.identity()}
            queue = deque(seen)
            while queue:
                g = queue.popleft()
                for t in gens:
                    h = self.base.mul(g, t)
                    if h not in seen:
                        seen.add(h)
                        if len(seen) > cap:
                            self._projection_size = None
                            return None
                        queue.append(h)
            self._projection_size = len(seen)
        return self._projection_size


def theta_map(family, params, level, **kwargs):
    """Build the local embedding for a family: 'dihedral' (params ignored),
    'bubble' (params = dict with a, b, l), 'ns' (params = dict with l)."""
    if family == "dihedral":
        return DihedralEmbedding(level)
    if family == "bubble":
        return BubbleEmbedding(params["a"], params["b"], level, params["l"],
                               **kwargs)
    if family == "ns":
        return NSEmbedding(params["l"], level, **kwargs)
    raise ValueError("invalid-parameter: unknown family %r" % (family,))


def _perm_order(perm):
    seen = [False] * len(perm)
    order = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        n = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            n += 1
        order = order * n // math.gcd(order, n)
    return order


# --------------------------------------------------------------------------
# sampling and exhaustive verification of the embedding contract


def sample_omega_word(embedding, gen, max_len=24, stop=0.15):
    """Random word in Omega(J, B), grown letter by letter on the right;
    each extension keeps the word in Omega iff the new cursor point
    w.(g.o) stays in B."""
    action = embedding.action
    letters = embedding.letters()
    spec = embedding.omega
    word = Word()
    while len(word.letters) < max_len and gen.random() >= stop:
        g = letters[int(gen.integers(len(letters)))]
        new_pts = {act_word(action, word, action.act_letter(g, x)) for x in spec.J}
        if not new_pts <= spec.B:
            continue
        word = word * Word([g])
    return word


def omega_hom_check(embedding, samples=200, seed=0):
    """Sampled contract check: multiplicativity on pairs with w1, w2, w1w2
    all in Omega, and equal images on pairs with equal evaluation keys
    (meet-in-the-middle bucketing).  Returns a report with counts and any
    counterexamples."""
    gen = stream(seed, 71)
    words = [sample_omega_word(embedding, gen) for _ in range(samples)]
    report = {"samples": samples, "pairs_tested": 0, "mult_failures": [],
              "eval_pairs": 0, "eval_failures": [], "letters_in_domain": True}
    for letter in embedding.letters():
        if not embedding.in_domain(Word([letter])):
            report["letters_in_domain"] = False
    images = [embedding.theta(w) for w in words]
    for _ in range(samples):
        i = int(gen.integers(len(words)))
        j = int(gen.integers(len(words)))
        w = words[i] * words[j]
        if not embedding.in_domain(w):
            continue
        report["pairs_tested"] += 1
        prod = embedding.mul(images[i], images[j])
        if embedding.image_key(embedding.theta(w)) != embedding.image_key(prod):
            report["mult_failures"].append((str(words[i]), str(words[j])))
    buckets = {}
    for w, img in zip(words, images):
        buckets.setdefault(embedding.cert_key(w), []).append((w, img))
    for bucket in buckets.values():
        w0, img0 = bucket[0]
        for w, img in bucket[1:]:
            report["eval_pairs"] += 1
            if embedding.image_key(img) != embedding.image_key(img0):
                report["eval_failures"].append((str(w0), str(w)))
    report["ok"] = not report["mult_failures"] and not report["eval_failures"]
    # Generators outside Omega(J, B) mean the (J, B) pair is degenerate for
    # the local-embedding contract (e.g. when a single letter already maps a
    # base point onto the far pole); the map itself may still be consistent.
    report["hypothesis_ok"] = report["ok"] and report["letters_in_domain"]
    return report


def omega_image_closure(embedding, cap=CLOSURE_CAP):
    """Exhaustive BFS over the states (evaluation key of w, inverted orbit
    of w) reachable by words of Omega(J, B).

    Appending a letter g maps the state by key composition and adds the
    new cursor points; the extension stays in Omega iff they stay in B.
    Since the orbit only grows inside the finite window B and keys live
    in a finite quotient, the BFS terminates and counts exactly the
    distinct evaluations of Omega words and their theta images.  Also
    re-verifies that equal keys always carried equal theta images.
    """
    spec = embedding.omega
    action = embedding.action
    letters = embedding.letters()
    letter_cursor = {g: [action.act_letter(g, x) for x in spec.J] for g in letters}
    key0 = embedding.cert_identity()
    img0 = embedding.identity()
    start = (key0, frozenset(spec.J))
    images = {key0: img0}
    seen = {start}
    queue = deque([start])
    states = 1
    while queue:
        key, orbit = queue.popleft()
        img = images[key]
        for g in letters:
            pts = [_key_eval(embedding, key, x) for x in letter_cursor[g]]
            if not all(p in spec.B for p in pts):
                continue
            nkey = embedding.cert_mul_letter(key, g)
            nimg = embedding.mul(img, embedding.theta_letter(g))
            if nkey in images:
                if embedding.image_key(images[nkey]) != embedding.image_key(nimg):
                    raise AssertionError("equal evaluations with different images "
                                         "reached in closure")
            else:
                images[nkey] = nimg
            state = (nkey, orbit | frozenset(pts))
            if state not in seen:
                seen.add(state)
                states += 1
                if states > cap:
                    raise ResourceRefusal("omega closure exceeds %d states" % cap)
                queue.append(state)
    image_keys = {embedding.image_key(img) for img in images.values()}
    return {"states": states, "evaluations": len(images),
            "theta_images": len(image_keys), "images": images}


def _key_eval(embedding, key, x):
    """Image of the point x under the group element with the given
    evaluation key."""
    if embedding.family == "dihedral":
        return _ray_eval(key, x)
    # permutation keys act on vertex indices of the deep truncation
    graph = embedding.deep_graph
    return graph.labels[key[graph.index_of(x)]]


def lamp_trajectory_check(embedding, steps=60, seed=0):
    """Apply one random left-multiplication sequence (lamp flips at the
    root, letters) on both sides: over the full group via the wreath
    element machinery, and over the finite quotient where only the group
    part is replaced by its theta image while the lamp is pushed through
    the same graph action.  The lamp parts must agree step by step."""
    gen = stream(seed, 72)
    action = embedding.action
    letters = embedding.letters()
    root = action.root
    host = WordHost(action)
    spec = LampSpec(None)
    side1 = wreath_identity(host, spec)
    lamps2 = {}
    img2 = embedding.identity()
    failures = []
    moves = []
    for _ in range(steps):
        if gen.random() < 0.4:
            delta = 1 if gen.random() < 0.5 else -1
            step = WreathElement(host, spec, {root: delta}, host.identity())
            side1 = wreath_mul(step, side1)
            v = lamps2.get(root, 0) + delta
            if v:
                lamps2[root] = v
            else:
                lamps2.pop(root, None)
            moves.append(("lamp", delta))
        else:
            g = letters[int(gen.integers(len(letters)))]
            step = WreathElement(host, spec, {}, Word([g]))
            side1 = wreath_mul(step, side1)
            lamps2 = {action.act_letter(g, x): v for x, v in lamps2.items()}
            img2 = embedding.mul(embedding.theta_letter(g), img2)
            moves.append(g)
        if side1.lamps != lamps2:
            failures.append((len(moves), dict(side1.lamps), dict(lamps2)))
            break
    return {"ok": not failures, "steps": len(moves), "failures": failures,
            "final_support": sorted(map(str, lamps2))}


# ---------------------------------------------------------------------------
# finitely supported functions on the quotient side


def _measure_for(embedding, mu):
    return _check_measure(embedding.action.gens, mu)


def _is_exact(*values):
    return all(isinstance(v, (int, Fraction)) for v in values)


class ConstantPsi:
    """psi == 1 on the whole quotient.  Left translation by any image is a
    bijection of the group, so every letter correlation is exactly 1 and
    the quotient is 0.  The support is the full group; it is enumerable
    only for the dihedral quotient (2^{n+1} elements)."""

    kind = "constant"

    def __init__(self, embedding):
        self.embedding = embedding

    def value(self, element):
        return 1

    def correlation(self, letter):
        return Fraction(1)

    def quotient(self, mu=None):
        return Fraction(0)

    def contains(self, element):
        return True

    def bound2_contains(self, element):
        return True

    def support_size(self):
        if self.embedding.family == "dihedral":
            return 2 * self.embedding.modulus
        return None

    def norm2(self):
        return self.support_size()

    def elements(self):
        if self.embedding.family != "dihedral":
            return None
        m = self.embedding.modulus
        return [(r, f) for r in range(m) for f in (0, 1)]


class DictPsi:
    """psi given by an explicit finite table of (element, value) pairs,
    keyed by the hashable image key of the quotient."""

    kind = "dict"

    def __init__(self, embedding, items):
        self.embedding = embedding
        self.table = {}
        for element, value in items:
            if value:
                self.table[embedding.image_key(element)] = (element, value)
        if not self.table:
            raise ValueError("invalid-parameter: psi is identically zero")

    @classmethod
    def delta_identity(cls, embedding):
        return cls(embedding, [(embedding.identity(), 1)])

    def value(self, element):
        entry = self.table.get(self.embedding.image_key(element))
        return entry[1] if entry else 0

    def correlation(self, letter):
        emb = self.embedding
        step = emb.theta_letter(letter)
        num = 0
        for element, value in self.table.values():
            entry = self.table.get(emb.image_key(emb.mul(step, element)))
            if entry:
                num += entry[1] * value
        den = self.norm2()
        if _is_exact(num, den):
            return Fraction(num, 1) / Fraction(den, 1)
        return num / den

    def quotient(self, mu=None):
        mu = _measure_for(self.embedding, mu)
        return sum(2 * mass * (1 - self.correlation(letter))
                   for letter, mass in mu.items() if mass)

    def contains(self, element):
        return self.embedding.image_key(element) in self.table

    def bound2_contains(self, element):
        emb = self.embedding
        for h2, _ in self.table.values():
            if emb.image_key(emb.mul(element, h2)) in self.table:
                return True
        return False

    def support_size(self):
        return len(self.table)

    def norm2(self):
        return sum(v * v for _, v in self.table.values())

    def elements(self):
        return [element for element, _ in self.table.values()]


class BoxPsi:
    """Product indicator over the level-n lamp coordinates: at every
    vertex both net exponents lie in the window [-r, r] (modulo the
    coordinate order, so the window saturates once 2r+1 reaches the
    order).  a-letters only permute the lamp, so their correlation is 1;
    b-letters additionally bump the b-exponent at the root and the
    a-exponent at the far pole, and each bump survives with the
    window-overlap fraction 2r/(2r+1) (or 1 once saturated)."""

    kind = "box"

    def __init__(self, embedding, r):
        if embedding.family != "ns":
            raise ValueError("invalid-parameter: the box indicator lives on "
                             "the substitution-family quotient")
        if r < 1:
            raise ValueError("invalid-parameter: need window radius r >= 1")
        self.embedding = embedding
        self.r = int(r)
        width = 2 * self.r + 1
        self.m_a = min(width, embedding.a_order)
        self.m_b = min(width, embedding.b_order)
        self.rho_a = (Fraction(1) if embedding.a_order <= width
                      else Fraction(2 * self.r, width))
        self.rho_b = (Fraction(1) if embedding.b_order <= width
                      else Fraction(2 * self.r, width))

    def _in_window(self, q, order, halfwidth):
        q %= order
        return q <= halfwidth or order - q <= halfwidth

    def value(self, element):
        return 1 if self.contains(element) else 0

    def contains(self, element):
        emb = self.embedding
        return all(self._in_window(qa, emb.a_order, self.r)
                   and self._in_window(qb, emb.b_order, self.r)
                   for _, (qa, qb) in element[0])

    def bound2_contains(self, element):
        """Superset test for supp(psi) supp(psi)^{-1}: every product of two
        window elements has coordinates within the doubled window."""
        emb = self.embedding
        return all(self._in_window(qa, emb.a_order, 2 * self.r)
                   and self._in_window(qb, emb.b_order, 2 * self.r)
                   for _, (qa, qb) in element[0])

    def correlation(self, letter):
        if letter[0] == "a":
            return Fraction(1)
        return self.rho_a * self.rho_b

    def quotient(self, mu=None):
        mu = _measure_for(self.embedding, mu)
        return sum(2 * mass * (1 - self.correlation(letter))
                   for letter, mass in mu.items() if mass)

    def support_size(self):
        pi = self.embedding.projection_size()
        if pi is None:
            return None
        return (self.m_a * self.m_b) ** self.embedding.base_graph.n * pi

    def norm2(self):
        return self.support_size()

    def elements(self):
        return None


# ---------------------------------------------------------------------------
# the two labeled components and their identification


LAMP_UP = ("lamp", 1)
LAMP_DOWN = ("lamp", -1)


class ComponentPair:
    """The component of a lamp configuration, materialized on both sides.

    Vertices on the group side are (lamp, evaluation key); on the
    quotient side they are (lamp, image key).  Both carry the same edge
    labels: ("lamp", +-1) for changing the lamp value at the marked point
    and a letter for translating the lamp and multiplying the group part
    on the left.  `exterior` maps a vertex to the sorted labels of moves
    that leave the component (by breaking the support family or the value
    range)."""

    def __init__(self, base, g_side, p_side, theta, meta):
        self.base = base
        self.g_vertices, self.g_edges, self.g_exterior, self.g_parent = g_side
        self.p_vertices, self.p_edges, self.p_exterior, self.p_parent = p_side
        self.theta = theta
        self.meta = meta

    def sizes(self):
        return {"g_vertices": len(self.g_vertices),
                "p_vertices": len(self.p_vertices),
                "g_edges": len(self.g_edges), "p_edges": len(self.p_edges)}


def _lamp_key(lamp):
    return frozenset(lamp.items())


def _path_to(parent, vkey):
    labels = []
    while True:
        entry = parent[vkey]
        if entry is None:
            return list(reversed(labels))
        vkey, label = entry
        labels.append(label)


def component_pair(embedding, F, upsilon0=None, value_range=(1, 2),
                   budget=COMPONENT_CAP):
    """Materialize the component of (upsilon0, identity) on both sides.

    The vertex set is restricted to lamp configurations whose support is
    a weighted set of F and whose values stay in `value_range` (the lamp
    values of the composite function; the low end must be >= 1 so the
    support never changes silently).  The same moves are applied on the
    group side (evaluation keys) and on the quotient side (theta images);
    the map `theta` from group-side vertices to quotient-side vertices is
    recorded edge by edge, and any path-dependence is reported in
    meta["conflicts"]."""
    lo, hi = value_range
    if lo < 1 or hi < lo:
        raise ValueError("invalid-parameter: need 1 <= lo <= hi")
    supports = set(F.weights)
    if not supports:
        raise ValueError("invalid-parameter: F has empty support")
    if upsilon0 is None:
        upsilon0 = {x: lo for x in F.base_set}
    lamp0 = dict(upsilon0)
    if frozenset(lamp0) not in supports:
        raise ValueError("invalid-parameter: the support of the base "
                         "configuration is not a weighted set of F")
    if any(not lo <= v <= hi for v in lamp0.values()):
        raise ValueError("invalid-parameter: base configuration outside the value range")
    action = embedding.action
    letters = embedding.letters()
    o = embedding.omega.J[0]
    conflicts = []

    def moves(lamp):
        """Yield (label, new lamp or None-for-exterior)."""
        for eps in (1, -1):
            v = lamp[o] + eps
            if lo <= v <= hi:
                out = dict(lamp)
                out[o] = v
                yield ("lamp", eps), out
            else:
                yield ("lamp", eps), None
        for g in letters:
            out = {action.act_letter(g, x): v for x, v in lamp.items()}
            yield g, (out if frozenset(out) in supports else None)

    # Group side: vertices keyed by (lamp, evaluation key), carrying theta
    # images along the BFS tree and checking consistency on every closing
    # edge (which covers all cycles of the component).
    g_vertices = {}
    g_lamps = {}
    g_edges = set()
    g_exterior = {}
    g_parent = {}
    start = (_lamp_key(lamp0), embedding.cert_key(Word([])))
    g_vertices[start] = embedding.identity()
    g_lamps[start] = lamp0
    g_parent[start] = None
    queue = deque([start])
    while queue:
        vkey = queue.popleft()
        lamp = g_lamps[vkey]
        cert = vkey[1]
        img = g_vertices[vkey]
        ext = []
        for label, new_lamp in moves(lamp):
            if new_lamp is None:
                ext.append(label)
                continue
            if label[0] == "lamp":
                new_cert, new_img = cert, img
            else:
                new_cert = embedding.cert_left_letter(cert, label)
                new_img = embedding.mul(embedding.theta_letter(label), img)
            wkey = (_lamp_key(new_lamp), new_cert)
            g_edges.add((vkey, label, wkey))
            if wkey in g_vertices:
                if (embedding.image_key(g_vertices[wkey])
                        != embedding.image_key(new_img)):
                    conflicts.append(
                        {"vertex": wkey, "label": str(label),
                         "path_a": _path_to(g_parent, vkey) + [str(label)],
                         "path_b": _path_to(g_parent, wkey)})
            else:
                g_vertices[wkey] = new_img
                g_lamps[wkey] = new_lamp
                g_parent[wkey] = (vkey, label)
                if len(g_vertices) > budget:
                    raise ResourceRefusal("component exceeds %d vertices" % budget)
                queue.append(wkey)
        if ext:
            g_exterior[vkey] = sorted(map(str, ext))

    p_vertices = {}
    p_lamps = {}
    p_edges = set()
    p_exterior = {}
    p_parent = {}
    start_p = (_lamp_key(lamp0), embedding.image_key(embedding.identity()))
    p_vertices[start_p] = embedding.identity()
    p_lamps[start_p] = lamp0
    p_parent[start_p] = None
    queue = deque([start_p])
    while queue:
        vkey = queue.popleft()
        lamp = p_lamps[vkey]
        img = p_vertices[vkey]
        ext = []
        for label, new_lamp in moves(lamp):
            if new_lamp is None:
                ext.append(label)
                continue
            if label[0] == "lamp":
                new_img = img
            else:
                new_img = embedding.mul(embedding.theta_letter(label), img)
            wkey = (_lamp_key(new_lamp), embedding.image_key(new_img))
            p_edges.add((vkey, label, wkey))
            if wkey not in p_vertices:
                p_vertices[wkey] = new_img
                p_lamps[wkey] = new_lamp
                p_parent[wkey] = (vkey, label)
                if len(p_vertices) > budget:
                    raise ResourceRefusal("component exceeds %d vertices" % budget)
                queue.append(wkey)
        if ext:
            p_exterior[vkey] = sorted(map(str, ext))

    theta = {vkey: (vkey[0], embedding.image_key(img))
             for vkey, img in g_vertices.items()}
    meta = {"value_range": (lo, hi), "budget": budget, "conflicts": conflicts,
            "base_lamp": dict(lamp0)}
    return ComponentPair(start, (g_vertices, g_edges, g_exterior, g_parent),
                         (p_vertices, p_edges, p_exterior, p_parent),
                         theta, meta)


def theta_isomorphism_check(pair):
    """Verify that the recorded vertex map is a label-preserving graph
    isomorphism between the two components with matching exterior labels.
    Failures carry a witness path of labels from the base vertex."""
    failures = []
    for conflict in pair.meta["conflicts"]:
        failures.append(("path-dependent image", conflict))
    image = {}
    for vkey, wkey in pair.theta.items():
        if wkey in image and image[wkey] != vkey:
            failures.append(("not injective",
                             {"image": wkey,
                              "path_a": _path_to(pair.g_parent, image[wkey]),
                              "path_b": _path_to(pair.g_parent, vkey)}))
        image[wkey] = vkey
    missing = set(pair.p_vertices) - set(image)
    for wkey in sorted(map(str, missing))[:3]:
        failures.append(("not surjective", {"unreached": wkey}))
    if len(pair.g_vertices) != len(pair.p_vertices):
        failures.append(("size mismatch", pair.sizes()))
    mapped_edges = {(pair.theta[v], label, pair.theta[w])
                    for v, label, w in pair.g_edges}
    if mapped_edges != pair.p_edges:
        sample = sorted(map(str, mapped_edges ^ pair.p_edges))[:3]
        failures.append(("edge mismatch", {"count": len(mapped_edges ^ pair.p_edges),
                                           "sample": sample}))
    exterior_mismatch = 0
    for vkey in pair.g_vertices:
        if pair.g_exterior.get(vkey, []) != pair.p_exterior.get(pair.theta[vkey], []):
            exterior_mismatch += 1
            if exterior_mismatch <= 3:
                failures.append(("exterior label mismatch",
                                 {"vertex": str(vkey),
                                  "g": pair.g_exterior.get(vkey, []),
                                  "p": pair.p_exterior.get(pair.theta[vkey], [])}))
    return {"ok": not failures, "isomorphic": not failures,
            "vertices": len(pair.g_vertices), "edges": len(pair.g_edges),
            "exterior_vertices": len(pair.g_exterior),
            "failures": failures}


# ---------------------------------------------------------------------------
# the composite test function


def _default_h0(embedding, psi):
    e = embedding.identity()
    if psi.contains(e):
        return e
    return psi.elements()[0]


def assemble_phi(F, psi, M, embedding, mu=None, budget=MATERIALIZE_CAP,
                 closure_cap=CLOSURE_CAP):
    """Rayleigh data of Phi(f, h) = psi(h) F(supp f) prod 1_{[1,M]}(f(x)).

    The quotient with respect to the switch-or-walk kernel (lamp flip at
    the marked point with mass 1/4 per direction, letter s with mass
    mu(s)/2) factorizes exactly through the letter correlations of psi
    and F; the closed form is asserted against the additive bound
    1/M + Q(F) + Q(psi), against a brute-force materialization whenever
    psi enumerates and the support fits the budget, and against the
    component volume bound via the image closure when that is feasible.

    Returns (quotient, support volume or None, report).
    """
    if M < 2:
        raise ValueError("invalid-parameter: need lamp range M >= 2")
    mu = _measure_for(embedding, mu)
    weights = F.weights
    norm_f = F.norm2()
    letter_stats = []
    cross = 0
    for letter, mass in mu.items():
        if not mass:
            continue
        s_num = sum(w * weights.get(translate_set(F.action, letter, Y), 0)
                    for Y, w in weights.items())
        if _is_exact(s_num, norm_f):
            s_corr = Fraction(s_num, 1) / Fraction(norm_f, 1)
        else:
            s_corr = s_num / norm_f
        c_corr = psi.correlation(letter)
        cross += mass * (1 - c_corr * s_corr)
        letter_stats.append({"letter": letter, "mu": mass,
                             "psi_correlation": c_corr,
                             "set_correlation": s_corr})
    quotient = Fraction(1, 2 * M) + cross / 2
    q_f = set_function_quotient(F.action, weights, mu)
    q_psi = psi.quotient(mu)
    bound = Fraction(1, M) + q_f + q_psi
    tol = 0 if _is_exact(quotient, bound) else 1e-9
    if quotient > bound + tol:
        raise AssertionError("composite quotient %r exceeds 1/M + Q(F) + Q(psi) = %r"
                             % (quotient, bound))
    report = {"family": embedding.family, "M": M, "quotient": quotient,
              "bound": bound, "q_F": q_f, "q_psi": q_psi,
              "lamp_term": Fraction(1, 2 * M), "letters": letter_stats,
              "flags": []}
    base_size = len(F.base_set)
    psi_size = psi.support_size()
    supp_f_count = len(weights) * M ** base_size
    report["norm2_closed_form"] = (psi.norm2() * norm_f * M ** base_size
                                   if psi.norm2() is not None else None)
    support_volume = supp_f_count * psi_size if psi_size is not None else None
    report["support_volume"] = support_volume

    elements = psi.elements()
    materialized = (elements is not None
                    and supp_f_count * len(elements) <= budget)
    if not materialized:
        report["flags"].append("closed-form-only: support not materialized")
    selected_size = None
    h0 = _default_h0(embedding, psi)
    h0_is_identity = embedding.image_key(h0) == embedding.image_key(embedding.identity())
    if materialized:
        o = embedding.omega.J[0]
        action = embedding.action
        hs = {embedding.image_key(h): h for h in elements}
        verts = {}
        for Y, w_y in weights.items():
            pos = tuple(sorted(Y))
            for values in itertools.product(range(1, M + 1), repeat=len(pos)):
                for hkey, h in hs.items():
                    val = psi.value(h) * w_y
                    if val:
                        verts[(Y, values, hkey)] = val

        def neighbors(vkey):
            Y, values, hkey = vkey
            f = dict(zip(sorted(Y), values))
            h = hs[hkey]
            for eps in (1, -1):
                v0 = f[o] + eps
                if 1 <= v0 <= M:
                    g = dict(f)
                    g[o] = v0
                    yield (Fraction(1, 4),
                           (Y, tuple(g[p] for p in sorted(Y)), hkey))
                else:
                    yield (Fraction(1, 4), None)
            for letter, mass in mu.items():
                if not mass:
                    continue
                g = {action.act_letter(letter, x): v for x, v in f.items()}
                Y2 = frozenset(g)
                h2 = embedding.mul(embedding.theta_letter(letter), h)
                wkey = (Y2, tuple(g[p] for p in sorted(Y2)),
                        embedding.image_key(h2))
                yield (mass / 2, wkey if wkey in verts else None)

        acc_a = acc_b = 0
        for vkey, val in verts.items():
            for mass, wkey in neighbors(vkey):
                val2 = verts.get(wkey, 0) if wkey is not None else 0
                d2 = mass * (val - val2) ** 2
                acc_a += d2
                if not val2:
                    acc_b += d2
        norm2 = sum(v * v for v in verts.values())
        brute = (acc_a + acc_b) / 2 / norm2
        report["brute"] = {"energy": (acc_a + acc_b) / 2, "norm2": norm2,
                           "quotient": brute, "support": len(verts)}
        if _is_exact(brute, quotient):
            if brute != quotient:
                raise AssertionError("materialized quotient %r != closed form %r"
                                     % (brute, quotient))
        elif abs(brute - quotient) > 1e-9 * max(1, abs(quotient)):
            raise AssertionError("materialized quotient %r != closed form %r"
                                 % (brute, quotient))
        report["exact_match"] = True

        unvisited = set(verts)
        components = []
        while unvisited:
            seed = next(iter(unvisited))
            comp = {seed}
            unvisited.discard(seed)
            queue = deque([seed])
            while queue:
                vkey = queue.popleft()
                for _, wkey in neighbors(vkey):
                    if wkey is not None and wkey in unvisited:
                        unvisited.discard(wkey)
                        comp.add(wkey)
                        queue.append(wkey)
            components.append(comp)
        comp_stats = []
        identity_key = embedding.image_key(embedding.identity())
        selected = None
        best = None
        for comp in components:
            a = b = 0
            for vkey in comp:
                for mass, wkey in neighbors(vkey):
                    val2 = verts.get(wkey, 0) if wkey is not None else 0
                    d2 = mass * (verts[vkey] - val2) ** 2
                    a += d2
                    if not val2:
                        b += d2
            n2 = sum(verts[vkey] ** 2 for vkey in comp)
            q_c = (a + b) / 2 / n2
            comp_stats.append({"size": len(comp), "quotient": q_c})
            if best is None or q_c < best:
                best = q_c
            if selected is None and any(vkey[2] == identity_key for vkey in comp):
                selected = comp
        if best > quotient + tol:
            raise AssertionError("every component quotient exceeds the global one")
        if selected is None:
            selected = components[0]
            vkey = next(iter(selected))
            h0 = hs[vkey[2]]
            h0_is_identity = vkey[2] == identity_key
        selected_size = len(selected)
        report["components"] = {"count": len(components), "stats": comp_stats,
                                "min_quotient": best,
                                "selected_size": selected_size}

    closure = None
    try:
        closure = omega_image_closure(embedding, cap=closure_cap)
    except ResourceRefusal as err:
        report["flags"].append("image closure refused: %s" % err)
        if psi_size is not None:
            # coarser h0-free form of the same bound: the transferred
            # support meets at most |supp psi| group elements
            threshold = psi_size * M ** len(embedding.omega.B)
            transfer = {"evaluations": None, "theta_images": None,
                        "intersection": None, "h0_is_identity": h0_is_identity,
                        "bound_min": psi_size, "bound_ssinv": None,
                        "volume_threshold": threshold}
            if selected_size is not None:
                transfer["selected_ok"] = selected_size <= threshold
                if not transfer["selected_ok"]:
                    raise AssertionError("component size %d exceeds the "
                                         "transferred volume bound" % selected_size)
            report["transfer"] = transfer
    if closure is not None:
        distinct = {}
        for img in closure["images"].values():
            distinct.setdefault(embedding.image_key(img), img)
        inter = sum(1 for u in distinct.values()
                    if psi.contains(embedding.mul(u, h0)))
        bound_min = closure["evaluations"]
        if psi_size is not None:
            bound_min = min(bound_min, psi_size)
        bound_ssinv = sum(1 for u in distinct.values() if psi.bound2_contains(u))
        if inter > bound_min or inter > bound_ssinv:
            raise AssertionError("transferred support count exceeds its bounds")
        transfer = {"evaluations": closure["evaluations"],
                    "theta_images": closure["theta_images"],
                    "intersection": inter,
                    "h0_is_identity": h0_is_identity,
                    "bound_min": bound_min, "bound_ssinv": bound_ssinv,
                    "volume_threshold": inter * M ** len(embedding.omega.B)}
        if selected_size is not None:
            transfer["selected_ok"] = selected_size <= transfer["volume_threshold"]
            if not transfer["selected_ok"]:
                raise AssertionError("component size %d exceeds the transferred "
                                     "volume bound" % selected_size)
        report["transfer"] = transfer
    return quotient, support_volume, report


# ---------------------------------------------------------------------------
# the ray worked example


def dinfty_tent_family(n, embedding=None):
    """The explicit family on the window {0..2^n - 1}: the base set
    A = {0..L-1} with L = 2^{n-1} is translated ell times by the
    alternating letters t, s, t, ... and weighted 1 - ell/L; the L-th
    translate (the only one missing the marked point) closes the family
    with weight zero."""
    if n < 2:
        raise ValueError("invalid-parameter: need n >= 2")
    emb = embedding or DihedralEmbedding(n)
    L = 2 ** (n - 1)
    base = frozenset(range(L))
    sets = [base]
    translates = {base: ()}
    cur, applied = base, ()
    for ell in range(1, L + 1):
        letter = ("t", 1) if ell % 2 == 1 else ("s", 1)
        applied = applied + (letter,)
        cur = translate_set(emb.action, letter, cur)
        sets.append(cur)
        translates[cur] = applied
    weights = {sets[ell]: Fraction(L - ell, L) for ell in range(L)}
    F = AdmissibleFunction(emb.action, weights, emb.omega.J, emb.omega.B,
                           base, translates=translates, support_sets=sets,
                           meta={"family": "ray tent", "level": n})
    F.check()
    return F


def dinfty_worked_example(n, M=None):
    """Exact Rayleigh quotient of the ray tent family and the profile
    point it induces with psi == 1 on the dihedral quotient.

    Q(F) = 6 / ((L+1)(2L+1)) with L = 2^{n-1}, of order 3/L^2; the
    default lamp range is M = max(2, floor(1/Q)).  Returns (Q, point)
    where the point records that the L^2 isoperimetric profile at any
    volume past the reported threshold is at most Q(F) + Q(psi) = Q(F).
    """
    if not 2 <= n <= 12:
        raise ValueError("invalid-parameter: need 2 <= n <= 12")
    emb = DihedralEmbedding(n)
    F = dinfty_tent_family(n, emb)
    L = 2 ** (n - 1)
    q_exact = F.quotient()
    expected = Fraction(6, (L + 1) * (2 * L + 1))
    if q_exact != expected:
        raise AssertionError("tent family quotient %r != %r" % (q_exact, expected))
    psi = ConstantPsi(emb)
    if M is None:
        M = max(2, int(1 / q_exact))
    quotient, volume, report = assemble_phi(F, psi, M, emb)
    point = {"level": n, "q_mu": q_exact, "M": M, "quotient": quotient,
             "support_volume": volume,
             "volume_threshold": report["transfer"]["volume_threshold"],
             "statement": "Lambda_2(v) <= q_mu for v >= volume_threshold"}
    return q_exact, point
