"""Bubble Schreier graphs X_{a,b} and their named regions.

Vertices are labeled (w, u) where w is a word of branch digits (digit i in
{1,...,b_i - 1}) and u lies on the cycle {0,...,2*a_{|w|+1} - 1}.  The root
is ((), 0).  Level k consists of the labels with |w| = k-1.

Generators:

  * a ("alpha") rotates the vertex's own cycle: (w,u) -> (w, u+1 mod 2a).
  * b ("beta") rotates each branching cycle

        (w', a_k) -> (w'1, 0) -> (w'2, 0) -> ... -> (w'(b_k - 1), 0) -> (w', a_k)

    where |w'| = k-1, and fixes every other vertex (self-loops, including
    the root).

The level-k truncation keeps |w| <= k-1 and lets beta fix the far endpoints
(w, a_k) of the level-k bubbles, which is the finite bubble group action.
"""

import itertools

from .graphs import FiniteSchreierGraph, GeneratorSet, LazyAction, bfs_distances

BUBBLE_GENS = GeneratorSet(["a", "b"], [False, False])


def _check_params(a, b):
    if not a or any(x < 1 for x in a):
        raise ValueError("invalid-parameter: a must be positive")
    if any(a[i] > a[i + 1] for i in range(len(a) - 1)):
        raise ValueError("invalid-parameter: a must be monotone nondecreasing")
    if any(x < 2 for x in b):
        raise ValueError("invalid-parameter: b entries must be >= 2")


class BubbleAction(LazyAction):
    """Generator action on bubble labels; truncate=k gives the finite level-k
    action (far endpoints fixed), truncate=None the infinite graph up to the
    depth covered by the supplied sequences."""

    family = "bubble"

    def __init__(self, a, b, truncate=None):
        _check_params(a, b)
        self.a = tuple(a)
        self.b = tuple(b)
        self.truncate = truncate
        if truncate is not None:
            if truncate < 1:
                raise ValueError("invalid-parameter: truncation depth k >= 1")
            if truncate > len(self.a) or truncate - 1 > len(self.b):
                raise ValueError("invalid-parameter: sequences shorter than depth")
        self.gens = BUBBLE_GENS
        self.root = ((), 0)

    def cycle_len(self, w):
        if len(w) >= len(self.a):
            raise ValueError("invalid-label: depth beyond supplied a sequence")
        return 2 * self.a[len(w)]

    def check_label(self, label):
        w, u = label
        if self.truncate is not None and len(w) > self.truncate - 1:
            raise ValueError("invalid-label: beyond truncation depth")
        for i, z in enumerate(w):
            if not (1 <= z <= self.b[i] - 1):
                raise ValueError("invalid-label: branch digit out of range")
        if not (0 <= u < self.cycle_len(w)):
            raise ValueError("invalid-label: cycle position out of range")
        return label

    def _apply(self, sym, label):
        w, u = self.check_label(label)
        if sym == "a":
            return (w, (u + 1) % self.cycle_len(w))
        # beta
        j = len(w) + 1           # x's own level
        if u == self.a[j - 1]:
            if self.truncate is not None and j == self.truncate:
                return label     # far endpoint of a level-k bubble
            if j > len(self.b):
                raise ValueError("invalid-label: depth beyond supplied b sequence")
            return (w + (1,), 0)
        if u == 0 and w:
            z = w[-1]
            if z < self.b[len(w) - 1] - 1:
                return (w[:-1] + (z + 1,), 0)
            return (w[:-1], self.a[len(w) - 1])
        return label

    def _apply_inv(self, sym, label):
        w, u = self.check_label(label)
        if sym == "a":
            return (w, (u - 1) % self.cycle_len(w))
        j = len(w) + 1
        if u == self.a[j - 1]:
            if self.truncate is not None and j == self.truncate:
                return label
            if j > len(self.b):
                raise ValueError("invalid-label: depth beyond supplied b sequence")
            return (w + (self.b[j - 1] - 1,), 0)
        if u == 0 and w:
            z = w[-1]
            if z > 1:
                return (w[:-1] + (z - 1,), 0)
            return (w[:-1], self.a[len(w) - 1])
        return label


def bubble_labels(a, b, k):
    """All labels of the level-k truncation, lexicographically sorted."""
    _check_params(a, b)
    labels = []
    for j in range(k):           # j = |w|
        digit_ranges = [range(1, b[i] - 1 + 1) for i in range(j)]
        for w in itertools.product(*digit_ranges):
            for u in range(2 * a[j]):
                labels.append((w, u))
    labels.sort()
    return labels


def bubble_vertex_count(a, b, k):
    """Closed-form vertex count of the level-k truncation."""
    total = 0
    copies = 1
    for j in range(k):
        total += copies * 2 * a[j]
        if j < k - 1:
            copies *= b[j] - 1
    return total


def build_bubble(a, b, k):
    if k < 1:
        raise ValueError("invalid-parameter: k >= 1")
    act = BubbleAction(a, b, truncate=k)
    labels = bubble_labels(a, b, k)
    index = {lab: i for i, lab in enumerate(labels)}
    perms = {}
    for sym in ("a", "b"):
        perms[sym] = [index[act._apply(sym, lab)] for lab in labels]
    return FiniteSchreierGraph(BUBBLE_GENS, perms, index[((), 0)], labels)


def branch_cycle(action, w):
    """The branching cycle b(w): {(w, a_{|w|+1})} followed by the (w z, 0)."""
    w = tuple(w)
    j = len(w) + 1
    out = [(w, action.a[j - 1])]
    for z in range(1, action.b[j - 1] - 1 + 1):
        out.append((w + (z,), 0))
    for lab in out:
        action.check_label(lab)
    return out


def midpoint(action, k):
    """m_k = (1^{k-1}, a_k/2)."""
    if action.a[k - 1] % 2 != 0:
        raise ValueError("invalid-parameter: a_k must be even for midpoint regions")
    lab = ((1,) * (k - 1), action.a[k - 1] // 2)
    return action.check_label(lab)


def neighborhood(action, w, r):
    """N(w, r): all labels within distance r of the branching cycle b(w)."""
    dist = bfs_distances(action, branch_cycle(action, w), radius=r)
    return sorted(dist)


def midpoint_ball(action, k, l):
    """B_k(l): ball of radius l around m_k on the k-th main cycle."""
    if l >= action.a[k - 1] / 2:
        raise ValueError("out-of-range: need l < a_k/2")
    dist = bfs_distances(action, [midpoint(action, k)], radius=l)
    return sorted(dist)


def w_region(action, k, t):
    """W(k, t): all of levels 1..k-1, plus the t-neighborhoods of the
    branching cycles b(v) with |v| = k-2, plus B_k(t)."""
    if k < 2:
        raise ValueError("invalid-parameter: W(k,t) needs k >= 2")
    out = set()
    for j in range(k - 1):       # |w| = j <= k-2
        digit_ranges = [range(1, action.b[i] - 1 + 1) for i in range(j)]
        for w in itertools.product(*digit_ranges):
            for u in range(2 * action.a[j]):
                out.add((w, u))
    digit_ranges = [range(1, action.b[i] - 1 + 1) for i in range(k - 2)]
    for v in itertools.product(*digit_ranges):
        out.update(neighborhood(action, v, t))
    out.update(midpoint_ball(action, k, t))
    return sorted(out)


def level_set(action, k, level):
    """All labels at the given level (|w| = level-1) of the depth-k truncation."""
    digit_ranges = [range(1, action.b[i] - 1 + 1) for i in range(level - 1)]
    out = []
    for w in itertools.product(*digit_ranges):
        for u in range(2 * action.a[level - 1]):
            out.append((w, u))
    return sorted(out)


def cyclic_rep(u, modulus):
    """Representative of u mod modulus in [-modulus/2, modulus/2)."""
    r = u % modulus
    return r - modulus if r >= (modulus + 1) // 2 else r


def iota(action, w, k, label):
    """The identification map of N(w, r) with N(1^{k-1}, r): segments around
    the branching cycle b(w) are carried to the matching segments around
    b(1^{k-1}).  Raises if the label is not representable (wrapped too far)."""
    w = tuple(w)
    if len(w) < k - 1:
        raise ValueError("invalid-parameter: need |w| >= k-1")
    target = (1,) * (k - 1)
    lw, u = label
    if lw == w:
        delta = cyclic_rep(u - action.a[len(w)], 2 * action.a[len(w)])
        image_u = action.a[k - 1] + delta
        if not (0 < image_u < 2 * action.a[k - 1]):
            raise ValueError("invalid-label: segment wraps at target level")
        return (target, image_u)
    if len(lw) == len(w) + 1 and lw[:-1] == w:
        z = lw[-1]
        if z > action.b[k - 1] - 1:
            raise ValueError("invalid-label: branch digit exceeds target arity")
        delta = cyclic_rep(u, 2 * action.a[len(lw)])
        return (target + (z,), delta % (2 * action.a[k]))
    raise ValueError("invalid-label: not in the neighborhood of b(w)")


def k_of_r(a, r):
    """Smallest k with a_k >= 2r."""
    for k in range(1, len(a) + 1):
        if a[k - 1] >= 2 * r:
            return k
    raise ValueError("invalid-parameter: no a_k >= 2r within supplied sequence")
