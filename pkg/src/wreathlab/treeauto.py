"""Rooted trees with lazy wreath-recursion automorphisms.

A spherically homogeneous rooted tree is given by a degree sequence
d_1, d_2, ...; vertices at depth k are words x_1...x_k with
x_j in {0..d_j-1}.  An automorphism g is stored by wreath recursion:
a root permutation sigma of the level-1 letters plus one section g_x
per letter, acting on the subtree hanging at x (whose degree sequence
is the shifted one).  Words map as

    g(x w) = sigma(x) . g_x(w)

so images are computed letter by letter, routing through the section
at the *original* letter.  Composition and inversion are lazy: they
build small wrapper nodes and only ever materialize the sections that
an evaluation actually visits.
"""

import math

from .words import Word


class TreeShape:
    """Degree sequence of a spherically homogeneous rooted tree.

    Holds a finite prefix of degrees; depths beyond the prefix repeat
    the last entry.  All degrees must be >= 2.
    """

    def __init__(self, degrees):
        degrees = tuple(int(d) for d in degrees)
        if not degrees or any(d < 2 for d in degrees):
            raise ValueError("invalid-parameter: need degrees >= 2, got %r" % (degrees,))
        self.degrees = degrees

    def degree(self, j):
        """Degree d_j at depth j (1-indexed)."""
        if j < 1:
            raise ValueError("invalid-parameter: depth index must be >= 1")
        if j <= len(self.degrees):
            return self.degrees[j - 1]
        return self.degrees[-1]

    def shift(self, k=1):
        """Shape of the subtree hanging at a depth-k vertex."""
        return TreeShape(self.degrees[k:]) if k < len(self.degrees) else TreeShape(self.degrees[-1:])

    def words(self, depth):
        """All words of length exactly `depth` (tuples of letters)."""
        out = [()]
        for j in range(1, depth + 1):
            d = self.degree(j)
            out = [w + (x,) for w in out for x in range(d)]
        return out

    def words_upto(self, depth):
        """All words of length <= depth, shortest first."""
        out = []
        layer = [()]
        out.extend(layer)
        for j in range(1, depth + 1):
            d = self.degree(j)
            layer = [w + (x,) for w in layer for x in range(d)]
            out.extend(layer)
        return out


class TreeAutomorphism:
    """Base class: subclasses provide sigma(x) and section(x)."""

    def __init__(self, shape):
        self.shape = shape

    def sigma(self, x):
        raise NotImplementedError

    def section(self, x):
        raise NotImplementedError

    def __mul__(self, other):
        return Compose(self, other)

    def inverse(self):
        return Inverse(self)

    def __pow__(self, m):
        return tree_power(self, m)


class Identity(TreeAutomorphism):
    def sigma(self, x):
        return x

    def section(self, x):
        return Identity(self.shape.shift())


class Explicit(TreeAutomorphism):
    """Automorphism given by an explicit root permutation and sections.

    `perm` is a tuple with perm[x] the image letter; `sections` is a
    list of automorphisms (defaults to identities).
    """

    def __init__(self, shape, perm, sections=None):
        TreeAutomorphism.__init__(self, shape)
        d = shape.degree(1)
        perm = tuple(perm)
        if sorted(perm) != list(range(d)):
            raise ValueError("invalid-parameter: perm %r is not a permutation of 0..%d" % (perm, d - 1))
        self.perm = perm
        self._sections = list(sections) if sections is not None else [None] * d

    def sigma(self, x):
        return self.perm[x]

    def section(self, x):
        s = self._sections[x]
        return s if s is not None else Identity(self.shape.shift())


class Compose(TreeAutomorphism):
    """Product g*h acting by (g*h)(v) = g(h(v))."""

    def __init__(self, g, h):
        TreeAutomorphism.__init__(self, g.shape)
        self.g = g
        self.h = h

    def sigma(self, x):
        return self.g.sigma(self.h.sigma(x))

    def section(self, x):
        # (gh)_x = g_{sigma_h(x)} h_x
        return Compose(self.g.section(self.h.sigma(x)), self.h.section(x))


class Inverse(TreeAutomorphism):
    def __init__(self, g):
        TreeAutomorphism.__init__(self, g.shape)
        self.g = g
        self._inv_perm = None

    def sigma(self, x):
        if self._inv_perm is None:
            d = self.shape.degree(1)
            inv = [0] * d
            for y in range(d):
                inv[self.g.sigma(y)] = y
            self._inv_perm = inv
        return self._inv_perm[x]

    def section(self, x):
        # (g^-1)_x = (g_{sigma_g^-1(x)})^-1
        return Inverse(self.g.section(self.sigma(x)))


def tree_power(g, m):
    """g**m by repeated squaring (keeps the lazy tree balanced)."""
    if m < 0:
        return tree_power(Inverse(g), -m)
    result = Identity(g.shape)
    base = g
    while m:
        if m & 1:
            result = Compose(result, base) if not isinstance(result, Identity) else base
        base = Compose(base, base)
        m >>= 1
    return result


def evaluate(auto, v):
    """Image of the tree word v under auto.

    v may be a tuple/list of letters or a string of digits; the image
    comes back in the same form.
    """
    as_str = isinstance(v, str)
    letters = [int(c) for c in v] if as_str else list(v)
    out = []
    g = auto
    for j, x in enumerate(letters, start=1):
        d = g.shape.degree(1)
        if not 0 <= x < d:
            raise ValueError("invalid-label: letter %r out of alphabet 0..%d at depth %d" % (x, d - 1, j))
        out.append(g.sigma(x))
        g = g.section(x)
    if as_str:
        return "".join(str(x) for x in out)
    return tuple(out)


def equal_at_depth(g, h, depth):
    """Do g and h agree on every word of length <= depth?"""
    for w in g.shape.words_upto(depth):
        if evaluate(g, w) != evaluate(h, w):
            return False
    return True


def trivial_at_depth(g, depth):
    """Does g fix every word of length <= depth?"""
    for w in g.shape.words_upto(depth):
        if evaluate(g, w) != w:
            return False
    return True


def section_at(auto, v):
    """Section of auto at the vertex v (a word), reached by recursion."""
    g = auto
    for x in (int(c) for c in v) if isinstance(v, str) else v:
        g = g.section(x)
    return g


def activity(auto, k, depth=1):
    """Number of depth-k vertices whose section is nontrivial.

    Triviality of a section is certified only up to `depth`: a section
    counts as nontrivial if it moves some word of length <= depth.  With
    the default depth=1 this counts exactly the vertices whose section
    has a nontrivial root permutation, which is the convention under
    which the directed generators below have activity bounded by 1 on
    every level.  Larger depths can only grow the count.
    """
    if k < 0:
        raise ValueError("invalid-parameter: level must be >= 0")
    count = 0
    for v in auto.shape.words(k):
        if not trivial_at_depth(section_at(auto, v), depth):
            count += 1
    return count


# --- D_infinity acting on the binary rooted tree ---------------------------

class _DinftyS(TreeAutomorphism):
    """s = (e,e) swap: flips the first letter."""

    def sigma(self, x):
        return 1 - x

    def section(self, x):
        return Identity(self.shape.shift())


class _DinftyT(TreeAutomorphism):
    """t = (t, s) id: fixes the first letter, recurses with t under 0
    and s under 1, so it flips the letter right after the first 1."""

    def sigma(self, x):
        return x

    def section(self, x):
        sub = self.shape.shift()
        return _DinftyT(sub) if x == 0 else _DinftyS(sub)


def dinfty_generators():
    """(s, t) acting on the binary tree; <s,t> is infinite dihedral."""
    shape = TreeShape((2,))
    return _DinftyS(shape), _DinftyT(shape)


# --- generators of the cyclic Neumann-Segal groups -------------------------

def _ns_shape(l, i=1):
    """Shape of the subtree at depth i-1 of the tree with degrees l."""
    l = tuple(int(v) for v in l)
    if any(v < 2 or v % 2 for v in l):
        raise ValueError("invalid-parameter: need even degrees >= 2, got %r" % (l,))
    tail = l[i - 1:] if i <= len(l) else l[-1:]
    return TreeShape(tail)


class _NSAlpha(TreeAutomorphism):
    """alpha_i rotates the level-i letter by +1; all sections trivial."""

    def sigma(self, x):
        return (x + 1) % self.shape.degree(1)

    def section(self, x):
        return Identity(self.shape.shift())


class _NSBeta(TreeAutomorphism):
    """beta_i fixes level i; section beta_{i+1} under 0, alpha_{i+1}
    under y_i = l_i/2, identity elsewhere."""

    def sigma(self, x):
        return x

    def section(self, x):
        sub = self.shape.shift()
        if x == 0:
            return _NSBeta(sub)
        if x == self.shape.degree(1) // 2:
            return _NSAlpha(sub)
        return Identity(sub)


def ns_generators(l, i=1):
    """(alpha_i, beta_i) acting on the subtree with degrees l_i, l_{i+1}, ..."""
    shape = _ns_shape(l, i)
    return _NSAlpha(shape), _NSBeta(shape)


def word_automorphism(word, gens, shape):
    """Automorphism of the group word `word` with letters realized by
    the dict `gens` (symbol -> automorphism)."""
    g = Identity(shape)
    for sym, sign in word.letters:
        a = gens[sym]
        g = Compose(g, a if sign > 0 else Inverse(a))
    return g


# --- rigid stabilizer witnesses --------------------------------------------

def rigid_stabilizer_witness(l, n, depth):
    """Witness that the rigid stabilizer of u_n = 0^n is nontrivial.

    Returns (rho, report) with rho = beta^M, M = lcm(l_2,...,l_{n+1})
    (M = 1 when n = 0).  Taking the power M kills the rotation sections
    hanging off the spine above depth n+1, so rho fixes everything
    outside the subtree at u_n; we certify this, and nontriviality
    inside, by evaluating on all words of length <= depth.  When every
    l_j in range divides M deeper down as well (e.g. the constant
    sequence (2,2,...)), rho may be trivial at the tested depth and the
    report says so instead of claiming a witness.
    """
    l = tuple(int(v) for v in l)
    need = max(n + 1, 1)
    if len(l) < need:
        l = l + (l[-1],) * (need - len(l))
    M = 1
    for lj in l[1:n + 1]:
        M = math.lcm(M, lj)
    _, beta = ns_generators(l)
    rho = tree_power(beta, M)
    u = (0,) * n
    fixed_outside = True
    moved_inside = None
    for w in rho.shape.words_upto(depth):
        image = evaluate(rho, w)
        if image == w:
            continue
        if w[:n] == u:
            if moved_inside is None:
                moved_inside = w
        else:
            fixed_outside = False
    report = {
        "M": M,
        "depth": depth,
        "fixed_outside": fixed_outside,
        "moved_inside": moved_inside,
        "inconclusive": moved_inside is None,
    }
    if moved_inside is None:
        report["suggested_depth"] = depth + 2
    return rho, report


# --- prescribed sections over half a cycle (ball witness) -------------------

def level1_shift_and_sections(word, l_head):
    """Formal level-1 wreath decomposition of a word in alpha_1, beta_1.

    Returns (shift, sections): the root permutation is rotation by
    `shift` and sections[x] is a Word in the level-2 generators.  Works
    right-to-left: multiplying gamma on the left of the current product
    w prepends gamma's section at position sigma_w(x) = x + s.
    """
    y = l_head // 2
    secs = [[] for _ in range(l_head)]
    s = 0
    for sym, sign in reversed(word.letters):
        if sym == "a":
            s = (s + sign) % l_head
        elif sym == "b":
            secs[(-s) % l_head].insert(0, ("b", sign))
            secs[(y - s) % l_head].insert(0, ("a", sign))
        else:
            raise ValueError("invalid-label: unknown symbol %r" % (sym,))
    return s, [Word(tuple(sec)) for sec in secs]


def ns_ball_witness(l, i, targets, r):
    """Word in alpha_i, beta_i realizing prescribed sections over half
    the level-i cycle.

    `targets` lists l_i/2 Words in alpha_{i+1}, beta_{i+1} (positions
    0..l_i/2-1), each of length <= r.  A single beta_i^e multiplied on
    the left writes b^e at cursor position c = -s and a^e at c + l_i/2,
    where s is the current rotation; so sweeping the cursor forward in
    half-laps of length l_i/2, alternating which letter type is being
    written, deposits every target letter into the prescribed half while
    all the companion letters land in the free half.  Runs of equal type
    cost no movement, so a target with at most r letters needs at most
    r+1 half-laps: total length <= (r+1) l_i/2 + sum of target lengths
    <= (1 + 1/(2r)) r l_i.

    Returns (word, report); the report carries the length bound and the
    verification outcomes.
    """
    if r < 1:
        raise ValueError("invalid-parameter: need r >= 1")
    l = tuple(int(v) for v in l)
    shape = _ns_shape(l, i)
    l_i = shape.degree(1)
    y = l_i // 2
    if len(targets) != y:
        raise ValueError("invalid-parameter: expected %d targets for l_i = %d, got %d"
                         % (y, l_i, len(targets)))
    for x, t in enumerate(targets):
        if len(t.letters) > r:
            raise ValueError("invalid-parameter: target at %d has length %d > r = %d"
                             % (x, len(t.letters), r))
        for sym, _ in t.letters:
            if sym not in ("a", "b"):
                raise ValueError("invalid-label: unknown symbol %r in target" % (sym,))

    # Split each reversed target into maximal runs of one letter type.
    # Blocks are written leftmost-last, so consecutive same-type letters
    # share a cursor stop and alternating blocks take consecutive
    # half-laps.  Half-lap h writes type "b" when h is even (cursor in
    # 0..y-1) and type "a" when odd (cursor in y..l_i-1).
    schedule = {}  # absolute cursor coordinate -> signed letters to write there
    max_stop = -1
    for x, t in enumerate(targets):
        rev = list(reversed(t.letters))
        j = 0
        h = None
        while j < len(rev):
            sym = rev[j][0]
            run = []
            while j < len(rev) and rev[j][0] == sym:
                run.append(rev[j][1])
                j += 1
            want = 0 if sym == "b" else 1
            h = want if h is None else h + 1  # types alternate with half-laps
            assert h % 2 == want
            stop = h * y + x
            schedule[stop] = run
            max_stop = max(max_stop, stop)

    # Walk the cursor forward one step at a time.  Cursor coordinate C
    # corresponds to rotation s = -C; advancing it by one is a single
    # alpha_i^{-1}.  At each scheduled stop, each letter of the run is
    # one beta_i^{sign}.
    out = []
    for C in range(max_stop + 1):
        if C > 0:
            out.insert(0, ("a", -1))
        for sign in schedule.get(C, ()):
            out.insert(0, ("b", sign))
    word = Word(tuple(out))

    bound = (r + 1) * y + sum(len(t.letters) for t in targets)
    limit = r * l_i + y  # = (1 + 1/(2r)) * r * l_i
    shift, secs = level1_shift_and_sections(word, l_i)
    sections_ok = all(secs[x] == targets[x] for x in range(y))

    # Independent check: the word's tree action agrees with the explicit
    # automorphism assembled from the computed decomposition.
    alpha, beta = _NSAlpha(shape), _NSBeta(shape)
    actual = word_automorphism(word, {"a": alpha, "b": beta}, shape)
    sub = shape.shift()
    sub_gens = {"a": _NSAlpha(sub), "b": _NSBeta(sub)}
    expected = Explicit(shape,
                        tuple((x + shift) % l_i for x in range(l_i)),
                        [word_automorphism(secs[x], sub_gens, sub) for x in range(l_i)])
    evaluation_ok = equal_at_depth(actual, expected, 2)

    report = {
        "length": len(word.letters),
        "bound": limit,
        "within_bound": len(word.letters) <= limit,
        "halflap_bound": bound,
        "shift": shift,
        "sections_ok": sections_ok,
        "evaluation_ok": evaluation_ok,
    }
    return word, report


# --- distinct words on truncated bubble graphs ------------------------------

def bubble_expansion_word(signs, template=None):
    """The word alpha^(n-1) b^(e_1) a^(-1) b^(e_2) a^(-1) ... b^(e_n)
    for a sign vector of length n.  A different template (a callable
    signs -> Word) may be substituted."""
    if template is not None:
        return template(signs)
    n = len(signs)
    letters = [("a", 1)] * (n - 1)
    for j, e in enumerate(signs):
        letters.append(("b", 1 if e > 0 else -1))
        if j < n - 1:
            letters.append(("a", -1))
    return Word(tuple(letters))


def bubble_distinct_words(a, b, n, K, template=None):
    """Count distinct actions of the 2^n sign-words on the truncated
    bubble graph X^K.

    Returns (count, report).  The count is always a lower bound for the
    number of distinct group elements; the report flags when K looks too
    shallow to separate them all (no a_i >= n+2 within reach and some
    b_i < 3).
    """
    from .bubble import BubbleAction, bubble_labels

    if n < 1:
        raise ValueError("invalid-parameter: need n >= 1")
    a = list(a) + [a[-1]] * max(0, K - len(a))
    b = list(b) + [b[-1]] * max(0, K - len(b))
    action = BubbleAction(a, b, truncate=K)
    labels = bubble_labels(a, b, K)
    index = {lab: idx for idx, lab in enumerate(labels)}
    m = len(labels)

    gen = {}
    for sym in ("a", "b"):
        gen[(sym, 1)] = [index[action.act_letter((sym, 1), lab)] for lab in labels]
        gen[(sym, -1)] = [index[action.act_letter((sym, -1), lab)] for lab in labels]

    seen = set()
    for bits in range(2 ** n):
        signs = [1 if (bits >> j) & 1 else -1 for j in range(n)]
        word = bubble_expansion_word(signs, template)
        perm = list(range(m))
        for letter in word.letters:
            table = gen[letter]
            perm = [table[v] for v in perm]
        seen.add(tuple(perm))
    count = len(seen)

    deep_enough = any(a[j] >= n + 2 for j in range(K))
    all_branching = all(v >= 3 for v in b[:K])
    report = {
        "count": count,
        "expected": 2 ** n,
        "lower_bound_only": count < 2 ** n,
        "precondition_met": deep_enough or all_branching,
        "vertices": m,
    }
    return count, report
