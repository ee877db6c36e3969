"""Dirichlet forms, Dirichlet eigenvalues and isoperimetric profiles.

Everything here runs on a MarkovState: a (possibly lazy) state set
together with a symmetric step distribution given as moves x -> m(x)
with exact rational probabilities.  The Dirichlet form is

    E(f,f) = 1/2 sum_{x, moves} p_m |f(m(x)) - f(x)|^2

and the two profiles are

    Lambda_1(v) = inf { mass escaping Omega per vertex : |Omega| <= v }
    Lambda_2(v) = inf { lowest Dirichlet eigenvalue on Omega : |Omega| <= v }

computed exhaustively on small spaces.  For a vertex-transitive kernel
the infimum over all Omega equals the infimum over connected sets
containing a fixed root (components can only improve the ratio, and
translation moves any connected set onto the root), which is what makes
exhaustive tables on a 128-state group tractable at small v.
"""

from fractions import Fraction
import itertools

import numpy as np

from .wreath import ResourceRefusal


class MarkovState:
    """State set plus symmetric move distribution.

    moves: list of (apply, p) where apply maps a state to a state and
    the p are positive Fractions summing to 1.  states is a list for
    finite spaces, or None for lazy/infinite ones (profiles then refuse;
    energies of finitely supported functions still work).  transitive
    marks kernels invariant under a transitive symmetry group (e.g. any
    group space under left-multiplication moves).
    """

    def __init__(self, moves, states=None, transitive=False):
        total = sum(p for _, p in moves)
        if total != 1:
            raise ValueError("invalid-parameter: move probabilities sum to %s" % (total,))
        if any(p <= 0 for _, p in moves):
            raise ValueError("invalid-parameter: probabilities must be positive")
        self.moves = list(moves)
        self.states = list(states) if states is not None else None
        self.transitive = transitive

    def neighbors(self, x):
        """(m(x), p) over all moves, fixed points included."""
        return [(mv(x), p) for mv, p in self.moves]


def dirichlet_energy(state, f):
    """E(f,f) = 1/2 sum_{x,m} p_m |f(m(x)) - f(x)|^2 for finitely
    supported f (a dict state -> value); exact when values are exact."""
    support = {x for x, v in f.items() if v != 0}
    region = set(support)
    for mv, _ in state.moves:
        region.update(mv(x) for x in support)
    total = 0
    for x in region:
        fx = f.get(x, 0)
        for y, p in state.neighbors(x):
            d = f.get(y, 0) - fx
            total += p * d * d
    return total / 2


def kernel_matrix(state, omega):
    """Dense I - P restricted to omega (Dirichlet boundary condition)."""
    idx = {x: i for i, x in enumerate(omega)}
    n = len(omega)
    A = np.eye(n)
    for i, x in enumerate(omega):
        for y, p in state.neighbors(x):
            j = idx.get(y)
            if j is not None:
                A[i, j] -= float(p)
    return A


def lambda_dirichlet(state, omega, tol=1e-10):
    """Smallest Dirichlet eigenvalue on omega: inf E(f,f) over f
    supported in omega with unit l2 norm.  Dense solve below 2000
    states, shifted inverse iteration above; either way the result is
    certified by ||A f - lambda f|| <= tol."""
    omega = list(omega)
    if not omega:
        raise ValueError("invalid-parameter: omega is empty")
    if len(omega) < 2000:
        A = kernel_matrix(state, omega)
        vals, vecs = np.linalg.eigh(A)
        lam, vec = vals[0], vecs[:, 0]
        residual = float(np.linalg.norm(A @ vec - lam * vec))
        if residual > tol:
            raise AssertionError("eigenvalue residual %g exceeds tolerance" % residual)
        return float(lam)
    lam, _ = _inverse_iteration(state, omega, tol)
    return float(lam)


def _sparse_matrix(state, omega):
    from scipy import sparse
    idx = {x: i for i, x in enumerate(omega)}
    n = len(omega)
    rows, cols, vals = [], [], []
    for i in range(n):
        rows.append(i); cols.append(i); vals.append(1.0)
    for i, x in enumerate(omega):
        for y, p in state.neighbors(x):
            j = idx.get(y)
            if j is not None:
                rows.append(i); cols.append(j); vals.append(-float(p))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _inverse_iteration(state, omega, tol, max_iter=500):
    from scipy.sparse.linalg import splu
    A = _sparse_matrix(state, omega).tocsc()
    n = A.shape[0]
    # tiny positive shift keeps the factorization nonsingular even when
    # 0 is an eigenvalue (omega = whole space)
    lu = splu(A + 1e-9 * _speye(n))
    v = np.full(n, 1.0 / n ** 0.5)
    lam = None
    for _ in range(max_iter):
        w = lu.solve(v)
        w /= np.linalg.norm(w)
        lam_new = float(w @ (A @ w))
        if lam is not None and abs(lam_new - lam) < tol * 0.01:
            lam = lam_new
            v = w
            break
        lam, v = lam_new, w
    res = np.linalg.norm(A @ v - lam * v)
    if res > tol:
        raise AssertionError("inverse iteration residual %g exceeds %g" % (res, tol))
    return lam, v


def _speye(n):
    from scipy import sparse
    return sparse.identity(n, format="csc")


def boundary_mass(state, omega):
    """Exact escaping mass: sum over x in omega of the probability of
    stepping outside omega."""
    om = set(omega)
    counts = [0] * len(state.moves)
    for x in om:
        for k, (mv, _) in enumerate(state.moves):
            if mv(x) not in om:
                counts[k] += 1
    total = Fraction(0)
    for k, (_, p) in enumerate(state.moves):
        total += p * counts[k]
    return total


class ProfileTable:
    """Sorted (v, value) pairs with provenance 'exhaustive' or
    'candidate-family' (the latter only upper-bounds the profile)."""

    def __init__(self, p, entries, provenance):
        self.p = p
        self.entries = sorted(entries)
        self.provenance = provenance
        values = [val for _, val in self.entries]
        if any(values[i + 1] > values[i] for i in range(len(values) - 1)):
            raise AssertionError("profile must be nonincreasing in v")

    def value(self, v):
        best = None
        for vol, val in self.entries:
            if vol <= v:
                best = val
        return best

    def volumes(self):
        return [vol for vol, _ in self.entries]


def _rooted_connected_subsets(neigh, root, kmax):
    """Connected subsets containing root, each exactly once, sizes <= kmax."""
    out = []

    def rec(current, extension, excluded):
        out.append(frozenset(current))
        if len(current) == kmax:
            return
        ext = list(extension)
        excl = set(excluded)
        while ext:
            v = ext.pop()
            grown = current | {v}
            new_ext = ext + [u for u in neigh[v]
                             if u not in grown and u not in excl and u not in ext]
            rec(grown, new_ext, excl)
            excl.add(v)

    rec(frozenset([root]), list(neigh[root]), set())
    return out


def _subset_stream(state, vmax):
    """All subsets to scan for the exhaustive profile: the powerset when
    small enough, else rooted connected subsets on transitive kernels."""
    n = len(state.states)
    total = sum(_binom(n, k) for k in range(1, min(vmax, n) + 1))
    if total <= 2 * 10 ** 6:
        for k in range(1, min(vmax, n) + 1):
            for omega in itertools.combinations(state.states, k):
                yield omega
        return
    if not state.transitive:
        raise ResourceRefusal(
            "exhaustive profile needs %d subsets and the kernel is not "
            "flagged transitive" % total)
    neigh = {x: sorted({y for y, _ in state.neighbors(x) if y != x})
             for x in state.states}
    for omega in _rooted_connected_subsets(neigh, state.states[0], vmax):
        yield tuple(omega)


def _binom(n, k):
    import math
    return math.comb(n, k)


def profile_exact(state, vmax, p):
    """Exhaustive profile table Lambda_p(v) for v = 1..vmax.

    Scans the powerset when feasible.  On larger transitive kernels it
    scans connected subsets containing a fixed root, which is exact:
    the optimum of either profile is attained on a connected set (for
    Lambda_2 restrict the eigenfunction to a component; for Lambda_1 the
    boundary is additive over components so some component does at least
    as well), and transitivity translates it onto the root.
    """
    if state.states is None:
        raise ResourceRefusal("profile_exact needs a finite state list")
    if p not in (1, 2):
        raise ValueError("invalid-parameter: p must be 1 or 2")
    best = {}
    for omega in _subset_stream(state, vmax):
        v = len(omega)
        if p == 1:
            val = boundary_mass(state, omega) / v
        else:
            val = lambda_dirichlet(state, omega)
        if v not in best or val < best[v]:
            best[v] = val
    # Lambda_p(v) is an inf over |Omega| <= v: cumulative minimum.
    entries = []
    running = None
    for v in range(1, vmax + 1):
        if v in best:
            running = best[v] if running is None else min(running, best[v])
        if running is not None:
            entries.append((v, running))
    return ProfileTable(p, entries, "exhaustive")


def profile_candidate(state, candidates, p):
    """Upper-bound profile from a caller-supplied family of subsets."""
    best = {}
    for omega in candidates:
        omega = tuple(omega)
        v = len(omega)
        val = boundary_mass(state, omega) / v if p == 1 else lambda_dirichlet(state, omega)
        if v not in best or val < best[v]:
            best[v] = val
    entries = []
    running = None
    for v in sorted(best):
        running = best[v] if running is None else min(running, best[v])
        entries.append((v, running))
    return ProfileTable(p, entries, "candidate-family")


def cheeger_check(table1, table2, tol=1e-10):
    """(1/2) Lambda_1(v)^2 <= Lambda_2(v) <= Lambda_1(v) at every common
    volume; only meaningful between exhaustive tables."""
    if table1.provenance != "exhaustive" or table2.provenance != "exhaustive":
        raise ValueError("invalid-parameter: cheeger_check needs exhaustive tables")
    if table1.p != 1 or table2.p != 2:
        raise ValueError("invalid-parameter: pass (Lambda_1, Lambda_2) tables")
    common = sorted(set(table1.volumes()) & set(table2.volumes()))
    rows = []
    ok = True
    for v in common:
        l1 = float(table1.value(v))
        l2 = float(table2.value(v))
        holds = (0.5 * l1 * l1 <= l2 + tol) and (l2 <= l1 + tol)
        ok = ok and holds
        rows.append({"v": v, "lambda1": l1, "lambda2": l2, "holds": holds})
    return {"ok": ok, "rows": rows}


def folner(table, t):
    """Fol(t) = inf { v : Lambda_1(v) <= 1/t } from an exhaustive table;
    None when 1/t is below everything in the table."""
    if table.provenance != "exhaustive" or table.p != 1:
        raise ValueError("invalid-parameter: folner needs an exhaustive Lambda_1 table")
    level = Fraction(1, 1) / Fraction(t) if not isinstance(t, float) else 1.0 / t
    for v, val in table.entries:
        if val <= level:
            return v
    return None


# --- product chains ---------------------------------------------------------

def product_chain_zeta(eta, size, modulus=None):
    """The measure zeta = |I|^{-1} sum_i eta_i on H^I: pick a uniform
    coordinate, apply an eta-increment there.  Returns a MarkovState
    over all of H^I for finite H (modulus m), or a lazy one for H = Z.
    """
    if size < 1:
        raise ValueError("invalid-parameter: need at least one coordinate")
    eta = [(h % modulus if modulus else h, Fraction(p)) for h, p in eta]
    agg = {}
    for h, p in eta:
        agg[h] = agg.get(h, Fraction(0)) + p
    if sum(agg.values()) != 1:
        raise ValueError("invalid-parameter: eta does not sum to 1")
    for h, p in agg.items():
        neg = (-h) % modulus if modulus else -h
        if agg.get(neg) != p:
            raise ValueError("invalid-parameter: eta is not symmetric")

    def shift(i, h):
        if modulus:
            return lambda x: x[:i] + ((x[i] + h) % modulus,) + x[i + 1:]
        return lambda x: x[:i] + (x[i] + h,) + x[i + 1:]

    moves = [(shift(i, h), p / size) for i in range(size) for h, p in agg.items()]
    states = None
    if modulus:
        states = list(itertools.product(range(modulus), repeat=size))
    return MarkovState(moves, states=states, transitive=states is not None)


def hypercube_state(d):
    """Z_2^d with the uniform coordinate-flip measure."""
    return product_chain_zeta([(1, Fraction(1))], d, modulus=2)


def cycle_state(n):
    """n-cycle with uniform +-1 steps."""
    moves = [(lambda x: (x + 1) % n, Fraction(1, 2)),
             (lambda x: (x - 1) % n, Fraction(1, 2))]
    return MarkovState(moves, states=list(range(n)), transitive=True)


def integer_line_state():
    """Z with uniform +-1 steps (lazy; energies and eigenvalues only)."""
    moves = [(lambda x: x + 1, Fraction(1, 2)),
             (lambda x: x - 1, Fraction(1, 2))]
    return MarkovState(moves, states=None)


def group_markov_state(measure, cap=2 * 10 ** 5):
    """MarkovState on the group generated by a wreath SymmetricMeasure's
    support under left multiplication (finite hosts only)."""
    from .wreath import wreath_mul, wreath_identity

    ident = wreath_identity(measure.host, measure.lamp)
    seen = {ident.key(): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for x in measure.support:
                h = wreath_mul(x, g)
                k = h.key()
                if k not in seen:
                    seen[k] = h
                    nxt.append(h)
                    if len(seen) > cap:
                        raise ResourceRefusal("group has more than %d elements" % cap)
        frontier = nxt
    states = list(seen.values())
    index = {g.key(): i for i, g in enumerate(states)}
    tables = []
    for x, p in zip(measure.support, measure.probs):
        table = [index[wreath_mul(x, g).key()] for g in states]
        tables.append((table, p))
    moves = [((lambda t: (lambda i: t[i]))(table), p) for table, p in tables]
    st = MarkovState(moves, states=list(range(len(states))), transitive=True)
    st.elements = states
    return st


def harper_bound(d, v):
    """Edge-isoperimetric lower bound 1 - log2(v)/d on Z_2^d, exact at
    subcube volumes."""
    import math
    return 1 - math.log2(v) / d


def harper_check(d, vmax=None):
    """Exhaustive Lambda_1 on Z_2^d against 1 - log2(v)/d: >= everywhere,
    equality at v = 2^j (checked in exact arithmetic)."""
    vmax = vmax or 2 ** d
    table = profile_exact(hypercube_state(d), vmax, p=1)
    rows = []
    ok = True
    for v, val in table.entries:
        j = v.bit_length() - 1
        dyadic = (v == 1 << j)
        if dyadic:
            holds = val == Fraction(d - j, d)
        else:
            holds = float(val) >= harper_bound(d, v) - 1e-12
        ok = ok and holds
        rows.append({"v": v, "lambda1": val, "dyadic": dyadic, "holds": holds})
    return {"ok": ok, "rows": rows, "table": table}


def lattice_box_check(sides):
    """2 |∂_zeta A| >= |A|^{(d-1)/d} for the box with the given sides in
    Z^d, zeta the uniform-coordinate +-1 measure; exact comparison via
    (2 |∂A|)^d >= |A|^{d-1} in integers."""
    d = len(sides)
    if any(s < 1 for s in sides):
        raise ValueError("invalid-parameter: sides must be >= 1")
    box = set(itertools.product(*[range(s) for s in sides]))
    state = product_chain_zeta([(1, Fraction(1, 2)), (-1, Fraction(1, 2))], d)
    boundary = Fraction(0)
    for x in box:
        for y, p in state.neighbors(x):
            if y not in box:
                boundary += p
    vol = len(box)
    lhs = 2 * boundary
    holds = lhs ** d >= Fraction(vol) ** (d - 1)
    return {"sides": tuple(sides), "volume": vol, "boundary": boundary,
            "lhs": lhs, "holds": holds}


# --- mirrored-parameter candidate family on the substitution tower ----------

def ns_mirror_candidate(l, n, r, verify=False, cap=2 * 10 ** 5):
    """Closed-form Rayleigh data for the level-n candidate family with
    mirrored section parameters on the cyclic substitution tower.

    In the enveloping wreath product (level-(n+1) sections over the
    l_n-cycle, top rotation exponent t) the family is: tent weight
    (1 - |t|/r)_+ in t; sections b^{k_x} on the two arcs x in {0..r} and
    {l_n-r-1..l_n-1}; a^{k} on the antipodal arcs with the SAME parameter
    k as the mirrored b-slot; identity elsewhere; each parameter ranging
    over {-r^2..r^2}.  A b-step at cursor t bumps the shared parameter at
    both of its writing sites (t and t + l_n/2), so the family is closed
    under the walk until a parameter leaves its box, and a top-rotation
    step only moves the tent.

    Exact closed forms with m = 2r^2 + 1 values per parameter:

        ||psi||^2    = m / (3r)
        Q(phi_r)     = 2/m        (tent steps 3/(2m) + box escapes 1/(2m))
        |supp phi_r| = m^(2r+2) (2r-1)

    support_coarse = (2r^2)^(2r) (2r-1) is the rounded count that drops
    the +1 per box and two of the 2r+2 slots; both land in the same
    exp(C V_{n-1} r log r) volume envelope.  Lifting the product function
    over the level-(n-1) orbit multiplies the quotient by at most 4 and
    exponentiates the volume:

        log|supp Phi| = V_{n-1} log|supp phi_r| + sum_j V_{j-1} log l_j.

    verify=True re-derives Q(phi_r) by enumerating the support and every
    escape transition (refused above cap states).
    """
    l = tuple(int(x) for x in l)
    if not 1 <= n <= len(l):
        raise ValueError("invalid-parameter: need 1 <= n <= len(l)")
    if any(x < 2 or x % 2 for x in l):
        raise ValueError("invalid-parameter: l must be even and >= 2")
    if r != int(r) or r < 1:
        raise ValueError("invalid-parameter: r must be a positive integer")
    r = int(r)
    ln = l[n - 1]
    if 4 * r >= ln:
        raise ValueError("invalid-parameter: need r < l_n/4 = %s" % (Fraction(ln, 4),))
    m = 2 * r * r + 1
    slots = 2 * r + 2
    psi = [Fraction(max(r - abs(t), 0), r) for t in range(-r, r + 1)]
    psi_norm2 = sum(w * w for w in psi)
    assert psi_norm2 == Fraction(m, 3 * r)
    assert sum((psi[i + 1] - psi[i]) ** 2 for i in range(len(psi) - 1)) == Fraction(2, r)
    quotient = Fraction(2, m)
    support = m ** slots * (2 * r - 1)
    support_coarse = (2 * r * r) ** (2 * r) * (2 * r - 1)
    import math
    log_support = slots * math.log(m) + math.log(2 * r - 1)
    orbit = 1
    projection_log = 0.0
    for j in range(1, n):
        projection_log += orbit * math.log(l[j - 1])
        orbit *= l[j - 1]
    log_volume = orbit * log_support + projection_log
    envelope = log_volume / (orbit * r * math.log(r)) if r >= 2 else None
    out = {
        "level": n, "r": r, "m": m, "slots": slots,
        "psi_norm2": psi_norm2, "quotient": quotient,
        "lifted_quotient_bound": 4 * quotient,
        "support": support, "support_coarse": support_coarse,
        "log_support": log_support, "orbit_size": orbit,
        "projection_log_size": projection_log, "log_volume": log_volume,
        "envelope_constant": envelope,
        "r2_times_lifted_bound": float(4 * quotient * r * r),
        "flags": ["support and support_coarse differ by the bounded factor "
                  "m^2 (m/(m-1))^(2r)"],
        "verified": False,
    }
    if not verify:
        return out
    states = support
    if states > cap:
        raise ResourceRefusal("mirror family support has %d states" % states)
    box = range(-r * r, r * r + 1)

    def value(kvec, t):
        if abs(t) >= r or any(abs(k) > r * r for k in kvec):
            return Fraction(0)
        return Fraction(r - abs(t), r)

    def slot_of(t):
        # cursor position t mod l_n lands on the arc around 0: slots 0..r
        # hold positions 0..r, slots r+1..2r+1 hold l_n-r-1..l_n-1.
        return t if t >= 0 else t + 2 * r + 2

    energy = Fraction(0)
    norm2 = Fraction(0)
    quarter = Fraction(1, 4)
    for kvec in itertools.product(box, repeat=slots):
        for t in range(-r + 1, r):
            v = value(kvec, t)
            norm2 += v * v
            for dt in (1, -1):  # top-rotation steps move the tent
                w = value(kvec, t + dt)
                energy += quarter * (w - v) ** 2 / 2
                # pairs entering the support from beyond the tent edge
                if value(kvec, t - dt) == 0:
                    energy += quarter * v * v / 2
            s = slot_of(t)
            for dk in (1, -1):  # b-steps bump the mirrored parameter
                bumped = kvec[:s] + (kvec[s] + dk,) + kvec[s + 1:]
                w = value(bumped, t)
                energy += quarter * (w - v) ** 2 / 2
                # pairs entering the support from outside the box
                if abs(kvec[s] - dk) > r * r:
                    energy += quarter * v * v / 2
    assert norm2 == m ** slots * psi_norm2
    brute = energy / norm2
    assert brute == quotient, (brute, quotient)
    out["verified"] = True
    return out


def ns_mirror_profile(l, n, rs, verify_first=False):
    """Candidate-family profile points (log-volume, quotient bound) for a
    nondecreasing list of tent radii at one level; bounds are
    nonincreasing in the volume as a profile requires."""
    rs = sorted(set(int(r) for r in rs))
    points = []
    for i, r in enumerate(rs):
        data = ns_mirror_candidate(l, n, r, verify=verify_first and i == 0)
        points.append({"r": r, "log_volume": data["log_volume"],
                       "bound": data["lifted_quotient_bound"]})
    for a, b in zip(points, points[1:]):
        if not (a["log_volume"] < b["log_volume"] and a["bound"] >= b["bound"]):
            raise AssertionError("candidate points must improve with volume")
    return points
