"""Closed-form envelope evaluators and ratio-stability comparisons.

closed_forms() gives the exact volume/diameter/resistance closed forms of
the substitution tower (and the window-index evaluator k(r) of the bubble
family); EnvelopeSpec/predicted() evaluate every predicted profile or
return-probability envelope.  All envelopes use unit constants: the
statements they come from suppress constants, so a prediction is only
meaningful through the ratio band reported by compare(), never through
pointwise equality.

Exponents are computed in exact rational arithmetic (so e.g. the
kappa = 2 time-exponent pair is exactly (1/2, 3/5)); envelope values are
floats.
"""

import math
from fractions import Fraction

from .graphs import ball
from . import bubble as bub


def closed_forms(params, n):
    """Exact closed forms at level n.

    For a flat even sequence l: volume V_n = l_1 ... l_n, diameter by the
    doubling recursion D_i = 2 D_{i-1} + l_i/2 with D_1 = l_1/2, and the
    resistance sum R_n = sum_j 2^(n-j-2) l_j (a Fraction; R_1 = l_1/4).

    For a bubble pair (a, b): the window index evaluator
    k(r) = min{k : a_k >= 2r} plus exact truncation sizes and diameters
    via the builder (levels 1..n).
    """
    if isinstance(params, tuple) and len(params) == 2 \
            and not isinstance(params[0], int):
        a, b = tuple(params[0]), tuple(params[1])
        if n > len(a):
            raise ValueError("invalid-parameter: need a_1..a_%d" % n)

        def k_of(r):
            for k, ak in enumerate(a, start=1):
                if ak >= 2 * r:
                    return k
            raise ValueError("invalid-parameter: a_k < 2r for every known k")

        graph = bub.build_bubble(a, b, n)
        return {"family": "bubble", "k_of": k_of, "V": graph.n,
                "diam": graph.diameter()}
    l = tuple(int(x) for x in params)
    if n < 1 or n > len(l):
        raise ValueError("invalid-parameter: need 1 <= n <= len(l)")
    if any(x < 2 or x % 2 for x in l):
        raise ValueError("invalid-parameter: l must be even and >= 2")
    vol = 1
    diam = Fraction(0)
    for i in range(1, n + 1):
        vol *= l[i - 1]
        diam = 2 * diam + Fraction(l[i - 1], 2)
    res = sum(Fraction(2, 1) ** (n - j - 2) * l[j - 1] for j in range(1, n + 1))
    return {"family": "ns", "V": vol, "diam": diam, "R": res}


FAMILIES = ("dinfty", "bubble-thm", "exa-bubb1", "exa-bubb2", "ns-thm",
            "ns-gamma", "exa-01", "exa-O2", "exa-O3", "exa-O4")

_DEFAULT_KIND = {
    "dinfty": "lambda2", "bubble-thm": "lambda2", "exa-bubb1": "neglog-phi",
    "exa-bubb2": "neglog-phi", "ns-thm": "lambda2", "ns-gamma": "lambda2-upper",
    "exa-01": "neglog-phi-lower", "exa-O2": "neglog-phi-lower",
    "exa-O3": "neglog-phi-lower", "exa-O4": "neglog-phi-lower",
}


class EnvelopeSpec:
    """Family tag, evaluation kind, and parameters for one envelope.

    kind selects which displayed function predicted() evaluates:
    'lambda1'/'lambda2' take a volume, 'neglog-phi' takes a time; the
    two-sided families append '-lower'/'-upper'.
    """

    def __init__(self, family, kind=None, **params):
        if family not in FAMILIES:
            raise ValueError("invalid-parameter: unknown family %r" % family)
        self.family = family
        self.kind = kind or _DEFAULT_KIND[family]
        self.params = params

    def __repr__(self):
        extra = "".join(", %s=%r" % kv for kv in sorted(self.params.items()))
        return "EnvelopeSpec(%r, kind=%r%s)" % (self.family, self.kind, extra)


def exponents(spec):
    """Exact rational (time-exponent, log-exponent) pairs of the -log Phi
    envelopes, where defined for the family."""
    if spec.family == "dinfty":
        return {"lower": (Fraction(1, 3), Fraction(2, 3)),
                "upper": (Fraction(1, 3), Fraction(2, 3))}
    if spec.family == "exa-bubb1":
        beta = Fraction(spec.params["beta"])
        e = Fraction(beta + 1, 3 * beta + 1)
        return {"lower": (e, 2 * beta * e / (beta + 1)),
                "upper": (e, 2 * beta * e / (beta + 1))}
    if spec.family == "exa-bubb2":
        kappa = Fraction(spec.params["kappa"])
        return {"lower": (Fraction(1, 3), 2 * (1 + kappa) / 3),
                "upper": (Fraction(1, 3), 2 * (1 + kappa) / 3)}
    if spec.family in ("exa-01", "exa-O4"):
        k = Fraction(spec.params["varkappa"])
        lower = (k / (3 * k - 2), (2 * k - 2) / (3 * k - 2))
        if spec.family == "exa-O4":
            return {"lower": lower, "upper": None}
        return {"lower": lower,
                "upper": ((2 * k - 1) / (4 * k - 3), (2 * k - 2) / (4 * k - 3))}
    if spec.family == "exa-O2":
        return {"lower": (Fraction(1, 3), Fraction(4, 3)),
                "upper": (Fraction(1, 2), Fraction(1, 1))}
    if spec.family == "exa-O3":
        return {"lower": (Fraction(1, 3), Fraction(4, 3)), "upper": None}
    raise ValueError("invalid-parameter: no exponent pairs for %r" % spec.family)


def _loglog(v):
    return math.log(math.log(v))


def _ns_breaks(l):
    """Per-level break data of the piecewise tower envelope: at level n the
    rotation-radius piece covers r in [l_{n-1}, l_n] and the flat piece
    covers log v in [V_{n-1} l_n log l_n, V_n l_n log l_n]."""
    l = tuple(int(x) for x in l)
    if any(x < 2 or x % 2 for x in l):
        raise ValueError("invalid-parameter: l must be even and >= 2")
    out = []
    vol = 1
    for n, ln in enumerate(l, start=1):
        prev = l[n - 2] if n >= 2 else 2
        out.append({"n": n, "V_prev": vol, "r_lo": prev, "r_hi": ln,
                    "flat_hi_logv": vol * ln * ln * math.log(ln)})
        vol *= ln
    return out

def _rotation_radius(piece, logv):
    """Invert V_{n-1} r log r = log v for r within one piece by bisection."""
    lo, hi = piece["r_lo"], piece["r_hi"]
    f = lambda r: piece["V_prev"] * r * math.log(r) - logv
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _ns_lambda2(l, v):
    logv = math.log(v)
    for piece in _ns_breaks(l):
        start = piece["V_prev"] * piece["r_lo"] * math.log(piece["r_lo"])
        knee = piece["V_prev"] * piece["r_hi"] * math.log(piece["r_hi"])
        if logv <= start:
            return {"lambda2": 1.0 / piece["r_lo"] ** 2, "piece": (piece["n"], 1),
                    "r": float(piece["r_lo"])}
        if logv <= knee:
            r = _rotation_radius(piece, logv)
            return {"lambda2": 1.0 / r ** 2, "piece": (piece["n"], 1), "r": r}
        if logv <= piece["flat_hi_logv"]:
            return {"lambda2": 1.0 / piece["r_hi"] ** 2, "piece": (piece["n"], 2),
                    "r": float(piece["r_hi"])}
    raise ValueError("invalid-parameter: volume beyond the declared levels")


def _ns_neglog_phi(l, t):
    """Return-probability envelope of the tower: the cube-root piece
    V_{n-1}^{2/3} t^{1/3} log(t/V_{n-1})^{2/3} then the flat piece t/l_n^2,
    per level."""
    vol = 1
    for n, ln in enumerate(tuple(int(x) for x in l), start=1):
        prev = l[n - 2] if n >= 2 else 2
        lo = vol * prev ** 3 * math.log(prev)
        knee = vol * ln ** 3 * math.log(ln)
        hi = vol * ln * ln ** 3 * math.log(ln)
        if t <= knee or (lo <= t and n == len(l)):
            return {"value": vol ** (2 / 3) * t ** (1 / 3)
                    * math.log(max(t / vol, math.e)) ** (2 / 3),
                    "piece": (n, 1)}
        if t <= hi:
            return {"value": t / ln ** 2, "piece": (n, 2)}
        vol *= ln
    raise ValueError("invalid-parameter: time beyond the declared levels")


def predicted(spec, argument):
    """Evaluate the envelope at a volume (lambda kinds) or time
    (neglog-phi kinds); unit constants throughout."""
    x = float(argument)
    if x < 3:
        raise ValueError("invalid-parameter: argument must be >= 3")
    fam, kind, p = spec.family, spec.kind, spec.params
    if fam == "dinfty":
        if kind == "lambda1":
            return _loglog(x) / math.log(x)
        if kind == "lambda2":
            return (_loglog(x) / math.log(x)) ** 2
        if kind == "neglog-phi":
            return x ** (1 / 3) * math.log(x) ** (2 / 3)
    if fam == "bubble-thm":
        # argument is the radius r; both displayed (level, volume-break)
        # pairs, with exact truncation/ball sizes
        a, b = tuple(p["a"]), tuple(p["b"])
        if len(set(b)) != 1:
            raise ValueError("invalid-parameter: this envelope needs constant b")
        r = int(x)
        forms = closed_forms((a, b), 1)
        k = forms["k_of"](r)
        action = bub.BubbleAction(a, b, truncate=min(len(a), k + 2))
        ball_size = len(ball(action, action.root, r)[0])
        trunc = bub.build_bubble(a, b, k - 1).n if k >= 2 else 1
        lamps = trunc + (b[0] - 1) ** k * r // 2
        return {"k": k, "ball": ball_size,
                "lambda1_level": 1.0 / r, "log_volume_cap": ball_size * math.log(r),
                "lambda2_level": 1.0 / r ** 2, "log_volume_floor": math.lgamma(lamps + 1)}
    if fam == "exa-bubb1":
        beta = float(p["beta"])
        if kind == "lambda1":
            return (_loglog(x) / math.log(x)) ** (beta / (beta + 1))
        if kind == "lambda2":
            return (_loglog(x) / math.log(x)) ** (2 * beta / (beta + 1))
        if kind == "neglog-phi":
            e, le = exponents(spec)["lower"]
            return x ** float(e) * math.log(x) ** float(le)
    if fam == "exa-bubb2":
        kappa = float(p["kappa"])
        regime = p.get("regime", "power")
        if regime == "power":
            if kind == "lambda2":
                return (_loglog(x) ** (kappa + 1) / math.log(x)) ** 2
            if kind == "neglog-phi":
                return x ** (1 / 3) * math.log(x) ** (2 * (1 + kappa) / 3)
        elif regime == "exp":
            if kappa <= 1:
                raise ValueError("invalid-parameter: exp regime needs kappa > 1")
            if kind == "lambda2":
                return (2 ** (_loglog(x) ** (1 / kappa)) * _loglog(x)
                        / math.log(x)) ** 2
            if kind == "neglog-phi":
                return (x ** (1 / 3) * math.log(x) ** (2 / 3)
                        * 2 ** ((2 / 3) * math.log(x) ** (1 / kappa)))
        else:
            raise ValueError("invalid-parameter: regime must be power or exp")
    if fam == "ns-thm":
        point = _ns_lambda2(p["l"], x) if kind in ("lambda1", "lambda2") else None
        if kind == "lambda2":
            return point["lambda2"]
        if kind == "lambda1":
            return math.sqrt(point["lambda2"])
        if kind == "neglog-phi":
            return _ns_neglog_phi(p["l"], x)["value"]
    if fam == "ns-gamma":
        gamma = float(p["gamma"])
        eps = float(p.get("epsilon", 0.1))
        if gamma < 1:
            raise ValueError("invalid-parameter: this envelope needs gamma >= 1")
        e = gamma / (1 + gamma)
        if kind.startswith("lambda"):
            X = ((1 + gamma) * math.log2(math.log(x))) ** e
            double = 2 if kind.startswith("lambda2") else 1
            sign = (1 + eps) if kind.endswith("-lower") else (1 - eps)
            return 2.0 ** (-double * sign * X)
        if kind.startswith("neglog-phi"):
            Y = ((1 + gamma) * math.log2(x)) ** e
            sign = (1 + eps) if kind.endswith("-lower") else (1 - eps)
            return x * 2.0 ** (-2 * sign * Y)
    if fam in ("exa-01", "exa-O2", "exa-O3", "exa-O4"):
        pair = exponents(spec)
        if kind == "neglog-phi-lower":
            e, le = pair["lower"]
            return x ** float(e) * math.log(x) ** float(le)
        if kind == "neglog-phi-upper":
            if fam == "exa-O3":
                return x / 2.0 ** (4 * math.sqrt((2 / 3) * math.log2(x)))
            if fam == "exa-O4":
                return x / 2.0 ** (4 * math.sqrt((2 / 3) * math.log(x)))
            e, le = pair["upper"]
            return x ** float(e) * math.log(x) ** float(le)
    raise ValueError("invalid-parameter: kind %r undefined for family %r"
                     % (kind, fam))


def compare(measured, spec, band=10.0):
    """Ratio-stability report of measured (x, y) points against an
    envelope (or any callable x -> value): per-point ratios, the spread
    max/min, and whether drift stays inside the band."""
    if not measured:
        raise ValueError("invalid-parameter: measured table is empty")
    predict = spec if callable(spec) else (lambda x: predicted(spec, x))
    rows = []
    for x, y in measured:
        pred = predict(x)
        rows.append({"x": x, "measured": float(y), "predicted": float(pred),
                     "ratio": float(y) / float(pred)})
    ratios = [row["ratio"] for row in rows]
    spread = max(ratios) / min(ratios)
    diffs = [b - a for a, b in zip(ratios, ratios[1:])]
    if all(d >= 0 for d in diffs):
        trend = "nondecreasing"
    elif all(d <= 0 for d in diffs):
        trend = "nonincreasing"
    else:
        trend = "mixed"
    return {"rows": rows, "min_ratio": min(ratios), "max_ratio": max(ratios),
            "spread": spread, "stable": spread <= band, "trend": trend}


def envelope_order_check(spec, ts):
    """lower <= upper at every probed time for the two-sided families."""
    lo = EnvelopeSpec(spec.family, kind="neglog-phi-lower", **spec.params)
    hi = EnvelopeSpec(spec.family, kind="neglog-phi-upper", **spec.params)
    rows = []
    ok = True
    for t in ts:
        a, b = predicted(lo, t), predicted(hi, t)
        rows.append({"t": t, "lower": a, "upper": b, "holds": a <= b})
        ok = ok and a <= b
    return {"ok": ok, "rows": rows}
