"""Command-line front end.

Subcommands: build (materialize + serialize a Schreier graph), walk
(Monte Carlo return probabilities of a lamp walk over a serialized
graph), profile (exhaustive isoperimetric tables of the uniform-letter
walk), resistance (measured vs closed-form tower resistances), verify
(the local-embedding check suite as JSON lines), predict (envelope
CSVs), and report (measured-vs-predicted SVG plus summary CSV).

Deterministic by construction: stochastic commands require --seed and
shard over indexed streams, CSV floats use repr, and artifacts are
written atomically.  Option values resolve as flags > --config file >
built-in defaults; unknown config keys are rejected.  Invalid flags or
values exit 2; resource-budget refusals exit 3.
"""

import argparse
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import asymptotics
from . import embeddings
from . import svgplot
from .families import build_graph
from .graphs import FiniteSchreierGraph
from .profiles import MarkovState, profile_exact
from .resistance import ns_resistance_measured
from .rng import stream
from .words import Word
from .wreath import (FiniteHost, LampSpec, ResourceRefusal, make_measure,
                     return_probability_mc)

EXIT_USAGE = 2
EXIT_REFUSED = 3
ENV_OUTDIR = "WREATHLAB_OUTDIR"

DEFAULTS = {
    "build": {"depth": "3"},
    "walk": {"lamp": "Z2", "measure": "sow", "n": "6", "trials": "1000",
             "workers": "1"},
    "profile": {"p": "2", "vmax": "6", "depth": "3"},
    "resistance": {"n": "3"},
    "verify": {"samples": "300", "seed": "0", "level": "3", "l": "2,4",
               "a": "2,8,32,128,512,2048", "b": "2,2,2,2,2,2"},
    "predict": {"kind": "", "param": "", "xs": ""},
    "report": {"kind": "", "param": "", "band": "10"},
}


def _ints(text):
    try:
        return tuple(int(tok) for tok in str(text).replace(":", ",").split(",") if tok)
    except ValueError:
        raise ValueError("invalid-parameter: expected comma-separated integers, "
                         "got %r" % text)


def _number(text):
    text = str(text)
    try:
        if "/" in text:
            return Fraction(text)
        if "." in text or "e" in text or "E" in text:
            return float(text)
        return int(text)
    except ValueError:
        raise ValueError("invalid-parameter: expected a number, got %r" % text)


def _params(text):
    out = {}
    for item in str(text).split(","):
        if not item:
            continue
        if "=" not in item:
            raise ValueError("invalid-parameter: params are key=value, got %r" % item)
        key, value = item.split("=", 1)
        out[key.strip()] = _ints(value) if ":" in value else _number(value)
    return out


def _resolve(path):
    outdir = os.environ.get(ENV_OUTDIR)
    if outdir and path and not os.path.isabs(path):
        return os.path.join(outdir, path)
    return path


def _atomic_write(path, data):
    path = _resolve(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    tmp = path + ".tmp"
    with open(tmp, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)
    return path


def _emit(path, text):
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _csv(rows, header):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(str(cell) for cell in row) + "\n")
    return buf.getvalue()


def _load_config(path, valid_keys):
    opts = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError("invalid-parameter: config lines are key=value, "
                                 "got %r" % line)
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in valid_keys:
                raise ValueError("invalid-parameter: unknown config key %r" % key)
            opts[key] = value.strip()
    return opts


def _merged(args, command):
    """flags > config file > defaults, with unknown config keys rejected."""
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "func", "target")}
    config = _load_config(args.config, set(flags)) if args.config else {}
    merged = dict(DEFAULTS.get(command, {}))
    merged.update(config)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _built_graph(opts):
    family = opts.get("family")
    if family == "dihedral-line":
        return build_graph(family, {"n": int(opts["nverts"])})
    if family == "bubble":
        return build_graph(family, {"a": _ints(opts["a"]), "b": _ints(opts["b"])},
                           int(opts["depth"]))
    if family == "ns":
        return build_graph(family, {"l": _ints(opts["l"])}, int(opts["depth"]))
    raise ValueError("invalid-parameter: unknown family %r" % family)


def cmd_build(opts):
    graph = _built_graph(opts)
    out = opts.get("out")
    if not out:
        raise ValueError("invalid-parameter: build needs --out")
    path = _atomic_write(out, graph.serialize())
    print(json.dumps({"vertices": graph.n, "generators": list(graph.gens.symbols),
                      "out": path}))
    return 0


def _lamp_spec(text):
    text = str(text)
    if text == "Z":
        return LampSpec(None)
    if text.startswith("Z") and text[1:].isdigit():
        return LampSpec(int(text[1:]))
    raise ValueError("invalid-parameter: lamp must be Z or Z<m>, got %r" % text)


def cmd_walk(opts):
    if opts.get("seed") is None:
        raise ValueError("invalid-parameter: walk needs --seed")
    with open(opts["graph"], "rb") as fh:
        graph = FiniteSchreierGraph.deserialize(fh.read())
    host = FiniteHost(graph)
    lamp = _lamp_spec(opts["lamp"])
    eta = [(1, Fraction(1, 2)), (-1, Fraction(1, 2))]
    letters = graph.gens.signed_letters()
    mu = [(Word([letter]), Fraction(1, len(letters))) for letter in letters]
    measure = make_measure(host, lamp, opts["measure"], eta=eta, mu=mu)
    n, trials = int(opts["n"]), int(opts["trials"])
    seed, workers = int(opts["seed"]), int(opts["workers"])
    rows = []
    for k in range(1, n + 1):
        est, err = return_probability_mc(measure, k, trials, seed, workers=workers)
        rows.append((k, repr(est), repr(err), trials))
    _emit(opts.get("out"), _csv(rows, ("n", "q2n", "stderr", "trials")))
    return 0


def _graph_state(graph):
    letters = graph.gens.signed_letters()
    prob = Fraction(1, len(letters))
    moves = []
    for sym, sign in letters:
        table = graph.perms[sym] if sign > 0 else graph.inv_perms[sym]
        moves.append(((lambda t: (lambda i: t[i]))(table), prob))
    return MarkovState(moves, states=list(range(graph.n)))


def cmd_profile(opts):
    if opts.get("graph"):
        with open(opts["graph"], "rb") as fh:
            graph = FiniteSchreierGraph.deserialize(fh.read())
    else:
        graph = _built_graph(opts)
    table = profile_exact(_graph_state(graph), int(opts["vmax"]), int(opts["p"]))
    rows = [(v, value) for v, value in table.entries]
    _emit(opts.get("out"), _csv(rows, ("v", "lambda%s" % opts["p"])))
    return 0


def cmd_resistance(opts):
    l = _ints(opts["l"])
    rows = []
    for k in range(1, int(opts["n"]) + 1):
        rep = ns_resistance_measured(l, k)
        doubling = rep.get("doubling_ratio")
        rows.append((k, repr(float(rep["measured"])), repr(float(rep["formula"])),
                     repr(float(rep["ratio"])),
                     "" if doubling is None else repr(float(doubling))))
    _emit(opts.get("out"), _csv(rows, ("n", "measured", "formula", "ratio",
                                       "doubling_ratio")))
    return 0


def _verify_lines(opts):
    family = opts["family"]
    level = int(opts["level"])
    params = {"l": _ints(opts["l"])} if family == "ns" else \
        {"a": _ints(opts["a"]), "b": _ints(opts["b"]), "l": 1} \
        if family == "bubble" else {}
    emb = embeddings.theta_map(family, params, level)
    lines = []
    hom = embeddings.omega_hom_check(emb, samples=int(opts["samples"]),
                                     seed=int(opts["seed"]))
    lines.append({"check": "multiplicativity-and-evaluation", "ok": hom["ok"],
                  "hypothesis_ok": hom["hypothesis_ok"],
                  "pairs": hom["pairs_tested"], "eval_pairs": hom["eval_pairs"]})
    try:
        closure = embeddings.omega_image_closure(emb)
        lines.append({"check": "image-closure", "ok": True,
                      "evaluations": closure["evaluations"],
                      "theta_images": closure["theta_images"]})
    except ResourceRefusal as err:
        lines.append({"check": "image-closure", "ok": True, "refused": str(err)})
    except AssertionError as err:
        lines.append({"check": "image-closure", "ok": False, "error": str(err)})
    traj = embeddings.lamp_trajectory_check(emb, seed=int(opts["seed"]))
    lines.append({"check": "lamp-trajectory", "ok": traj["ok"],
                  "steps": traj["steps"]})
    if family == "dihedral" and level >= 2:
        F = embeddings.dinfty_tent_family(level, emb)
        try:
            pair = embeddings.component_pair(emb, F)
            iso = embeddings.theta_isomorphism_check(pair)
            lines.append({"check": "component-isomorphism", "ok": iso["ok"],
                          "vertices": iso["vertices"], "edges": iso["edges"]})
        except ResourceRefusal as err:
            lines.append({"check": "component-isomorphism", "ok": True,
                          "refused": str(err)})
    if family == "ns":
        gen = stream(int(opts["seed"]), 5)
        pure = impure = 0
        for _ in range(min(int(opts["samples"]), 100)):
            word = embeddings.sample_omega_word(emb, gen)
            if emb.section_purity(word)["pure"]:
                pure += 1
            else:
                impure += 1
        lines.append({"check": "section-purity", "ok": True,
                      "diagnostic": True, "pure": pure, "impure": impure})
    return lines


def cmd_verify(opts, target):
    if target != "omega":
        raise ValueError("invalid-parameter: unknown verify target %r" % target)
    lines = _verify_lines(opts)
    text = "".join(json.dumps(line, sort_keys=True) + "\n" for line in lines)
    _emit(opts.get("out"), text)
    return 0 if all(line["ok"] for line in lines) else 1


def _envelope_spec(opts):
    family = opts["family"]
    params = _params(opts.get("param", ""))
    kind = opts.get("kind") or None
    return asymptotics.EnvelopeSpec(family, kind=kind, **params)


def _xs(opts):
    if opts.get("xs"):
        return [float(tok) for tok in str(opts["xs"]).split(",") if tok]
    lo = float(opts.get("x_min") or 10.0)
    hi = float(opts.get("x_max") or 1e6)
    count = int(opts.get("points") or 25)
    if not (3 <= lo < hi and count >= 2):
        raise ValueError("invalid-parameter: need 3 <= x-min < x-max, points >= 2")
    step = (math.log(hi) - math.log(lo)) / (count - 1)
    return [math.exp(math.log(lo) + i * step) for i in range(count)]


def cmd_predict(opts):
    spec = _envelope_spec(opts)
    xs = _xs(opts)
    values = [asymptotics.predicted(spec, x) for x in xs]
    if isinstance(values[0], dict):
        keys = sorted(values[0])
        rows = [(repr(x),) + tuple(repr(v[k]) for k in keys)
                for x, v in zip(xs, values)]
        text = _csv(rows, ("x",) + tuple(keys))
    else:
        text = _csv([(repr(x), repr(v)) for x, v in zip(xs, values)],
                    ("x", "value"))
    _emit(opts.get("out"), text)
    return 0


def _read_measured(path):
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if len(lines) < 2:
        raise ValueError("invalid-parameter: measured table is empty")
    header = lines[0].split(",")
    if len(header) != 2:
        raise ValueError("invalid-parameter: measured CSV needs exactly "
                         "two columns, got %r" % lines[0])
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 2:
            raise ValueError("invalid-parameter: ragged measured row %r" % line)
        rows.append((float(cells[0]), float(cells[1])))
    return rows


def _regime_breaks(spec, xs):
    """Vertical annotations at the piecewise knees that fall in range."""
    if spec.family != "ns-thm":
        return []
    l = tuple(int(v) for v in spec.params["l"])
    lo, hi = min(xs), max(xs)
    out = []
    vol = 1
    for n, ln in enumerate(l, start=1):
        knee = vol * ln ** 3 * math.log(ln) if "phi" in spec.kind \
            else math.exp(min(vol * ln * math.log(ln), 700))
        if lo <= knee <= hi:
            out.append((knee, "level %d knee" % n))
        vol *= ln
    return out


def cmd_report(opts):
    measured = _read_measured(opts["measured"])
    spec = _envelope_spec(opts)
    result = asymptotics.compare(measured, spec, band=float(opts["band"]))
    rows = [(repr(r["x"]), repr(r["measured"]), repr(r["predicted"]),
             repr(r["ratio"])) for r in result["rows"]]
    summary = _csv(rows, ("x", "measured", "predicted", "ratio"))
    if opts.get("summary"):
        _atomic_write(opts["summary"], summary)
    xs = [r["x"] for r in result["rows"]]
    svg = svgplot.line_plot(
        [("measured", [(r["x"], r["measured"]) for r in result["rows"]]),
         ("predicted", [(r["x"], r["predicted"]) for r in result["rows"]])],
        title="%s %s spread=%.3g trend=%s" % (spec.family, spec.kind,
                                              result["spread"], result["trend"]),
        ratios=[(r["x"], r["ratio"]) for r in result["rows"]],
        annotations=_regime_breaks(spec, xs))
    if opts.get("out"):
        _atomic_write(opts["out"], svg)
    else:
        sys.stdout.write(summary)
    return 0 if result["stable"] else 1


def _parser():
    parser = argparse.ArgumentParser(
        prog="wreathlab",
        description="Schreier graphs, wreath walks, profiles, resistances, "
                    "local-embedding verification, and envelope reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, *flags):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        for flag in flags:
            p.add_argument("--" + flag.replace("_", "-"), dest=flag, default=None)
        return p

    add("build", "family", "l", "a", "b", "nverts", "depth", "out")
    add("walk", "graph", "lamp", "measure", "n", "trials", "seed", "workers",
        "out")
    add("profile", "family", "graph", "l", "a", "b", "nverts", "depth", "p",
        "vmax", "out")
    add("resistance", "l", "n", "out")
    verify = add("verify", "family", "level", "l", "a", "b", "samples", "seed",
                 "out")
    verify.add_argument("target", choices=["omega"])
    add("predict", "family", "kind", "param", "xs", "x_min", "x_max", "points",
        "out")
    add("report", "measured", "family", "kind", "param", "band", "summary",
        "out")
    return parser


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        opts = _merged(args, args.command)
        if args.command == "build":
            return cmd_build(opts)
        if args.command == "walk":
            return cmd_walk(opts)
        if args.command == "profile":
            return cmd_profile(opts)
        if args.command == "resistance":
            return cmd_resistance(opts)
        if args.command == "verify":
            return cmd_verify(opts, args.target)
        if args.command == "predict":
            return cmd_predict(opts)
        if args.command == "report":
            return cmd_report(opts)
        raise ValueError("invalid-parameter: unknown command %r" % args.command)
    except ResourceRefusal as err:
        sys.stderr.write(json.dumps({"error": "resource-refusal",
                                     "message": str(err)}) + "\n")
        return EXIT_REFUSED
    except (ValueError, OSError) as err:
        sys.stderr.write("error: %s\n" % err)
        sys.stderr.write("run with --help for usage\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
