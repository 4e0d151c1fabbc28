"""Command-line front end.

    mixlab analyze --model dumbbell --n 10
    mixlab couple --model bounded_subsets --n 4 --k 2 --eps 0.25
    mixlab congest --chain walk.chain --paths gamma.txt
    mixlab flow-knapsack --model knapsack --a 1,1,1 --b 2 --h 29
    mixlab kr --model js --graph K3x3 --coupling independent
    mixlab compare --model linear_extensions --n 4

Every report is CSV preceded by ``#`` lines that record the configuration
(path and flow dumps use the ``path x y w v0 ... vk`` text format instead).
The summary goes to stdout; with ``--out DIR`` it and the detail tables are
also written there.  Exit codes: 0 success, 1 usage error, 2 a mathematical
invariant failed (details in ``error.csv``).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .chain import Chain, _label_token, check_reversibility, distance_from_stationarity, mixing_times, read_chain_file
from .coupling import (
    PathCouplingSpec,
    builtin_coupling,
    contraction_factor,
    expected_one_step_distance,
    independent_coupling,
    js_shared_coupling,
    kr_layer_drift,
    path_coupling_tau,
    simulate_coalescence,
    submartingale_bound,
    verify_faithful,
)
from .coupling.builtin import symmetric_difference_size
from .errors import MixlabError, ModelSpecError, NoContraction, StateSpaceTooLarge
from .geometry import (
    cheeger_check,
    congestion_csv,
    congestion_gap_bounds,
    dump_flow,
    parse_flow,
    parse_paths,
    path_congestion,
    flow_congestion,
    resistance_min,
    shortest_path_set,
)
from .geometry.conductance import MAX_SUBSET_STATES
from .knapsack_flow import DEFAULT_H, audit_encoding, build_flow, flow_metrics_and_bound, metrics_csv
from .spectral import eigen_spectrum, gap_mixing_bounds, spectrum_csv
from .zoo import (
    Bipartite,
    ModelSpec,
    bipartite_from_graph,
    build_model,
    complete_graph,
    cycle_graph,
    parse_graph_text,
    parse_poset_text,
    theoretical_bounds,
)

DEFAULT_MAX_STATES = 5000
ENV_MAX_STATES = "MIXLAB_MAX_STATES"
MODEL_ALIASES = {
    "bl": "bernoulli_laplace",
    "glauber": "glauber_coloring",
    "subsets": "bounded_subsets",
    "le": "linear_extensions",
    "js": "js_matchings",
}
COMMANDS = ("analyze", "congest", "flow-knapsack", "couple", "kr", "compare")


class UsageError(Exception):
    pass


def parse_chain_file(path) -> Chain:
    """Read a chain in the text format; parse and validation errors propagate."""
    return read_chain_file(path)


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    params: dict = field(default_factory=dict)
    chain_path: str | None = None
    eps: float = 0.25
    seed: int = 0
    trials: int = 10_000
    max_states: int = DEFAULT_MAX_STATES
    subset_cap: int = MAX_SUBSET_STATES
    t_cap: int = 10**6
    t_max: int | None = None
    out: str | None = None
    extra: dict = field(default_factory=dict)  # command-specific options
    shown: dict = field(default_factory=dict)  # params as typed, for the header

    def validate(self):
        if not (0 < self.eps < 1):
            raise UsageError("eps must lie in (0, 1)")
        if self.trials < 1:
            raise UsageError("trials must be at least 1")
        if min(self.max_states, self.subset_cap, self.t_cap) < 1:
            raise UsageError("caps must be positive")
        if self.t_max is not None and self.t_max < 0:
            raise UsageError("t-max must be non-negative")
        if (self.model is None) == (self.chain_path is None):
            raise UsageError("give exactly one of --model or --chain")

    def header(self) -> str:
        """Reproducibility header; the output directory is left out so copies compare equal."""
        items = [("command", self.command)]
        if self.model:
            items.append(("model", self.model))
            shown = self.shown or self.params
            items += [(k, shown[k]) for k in sorted(shown)]
        else:
            items.append(("chain", self.chain_path))
        items += [("eps", self.eps), ("seed", self.seed), ("trials", self.trials),
                  ("max_states", self.max_states), ("subset_cap", self.subset_cap), ("t_cap", self.t_cap)]
        if self.t_max is not None:
            items.append(("t_max", self.t_max))
        items += [(k, self.extra[k]) for k in sorted(self.extra)]
        lines = [f"# mixlab {__version__}"] + [f"# {k}={v}" for k, v in items]
        return "\n".join(lines) + "\n"


def _rational_list(text: str) -> tuple:
    try:
        return tuple(Fraction(v.strip()) for v in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read {text!r} as comma-separated rationals") from None


def _graph_arg(text: str, bipartite: bool):
    """A graph file, or one of the shorthands K<n>, C<n>, K<a>x<b>."""
    m = re.fullmatch(r"K(\d+)[x,](\d+)", text)
    if m:
        return Bipartite.complete(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"([KC])(\d+)", text)
    if m and not bipartite:
        return (complete_graph if m.group(1) == "K" else cycle_graph)(int(m.group(2)))
    path = Path(text)
    if not path.is_file():
        raise UsageError(f"graph {text!r} is neither a file nor a shorthand (K<n>, C<n>, K<a>x<b>)")
    g = parse_graph_text(path.read_text(encoding="utf-8"))
    return bipartite_from_graph(g) if bipartite else g


def model_params(model_id: str, ns: argparse.Namespace) -> tuple[dict, dict]:
    """(constructor parameters, printable parameters) for the chosen model."""
    params, shown = {}, {}
    for name in ("n", "k"):
        v = getattr(ns, name)
        if v is not None:
            params[name] = shown[name] = v
    if ns.a is not None:
        params["a"] = _rational_list(ns.a)
        shown["a"] = ns.a
    if ns.b is not None:
        params["b"] = _rational_list(ns.b)[0]
        shown["b"] = ns.b
    if ns.graph is not None:
        params["graph"] = _graph_arg(ns.graph, bipartite=model_id == "js_matchings")
        shown["graph"] = ns.graph
    if ns.poset is not None:
        try:
            text = Path(ns.poset).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read poset file: {exc}") from None
        params["relations"] = parse_poset_text(text)
        shown["poset"] = ns.poset
    if ns.J is not None:
        params["J"] = shown["J"] = ns.J
    return params, shown


def _max_states_default() -> int:
    raw = os.environ.get(ENV_MAX_STATES)
    if raw is None:
        return DEFAULT_MAX_STATES
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{ENV_MAX_STATES}={raw!r} is not an integer") from None


# --------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if v is None:
        return ""
    if isinstance(v, (frozenset, tuple)):
        return _label_token(v)
    return str(v)


def table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


class Report:
    """Named CSV tables; ``summary`` is the one printed to stdout."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.summary: list[tuple[str, object]] = []
        self.tables: dict[str, str] = {}

    def add(self, key: str, value):
        self.summary.append((key, value))

    def text(self, name: str = "summary") -> str:
        body = table(("quantity", "value"), self.summary) if name == "summary" else self.tables[name]
        return self.config.header() + body

    def write(self, stdout):
        stdout.write(self.text())
        if self.config.out:
            d = Path(self.config.out)
            d.mkdir(parents=True, exist_ok=True)
            (d / "summary.csv").write_text(self.text(), encoding="utf-8")
            for name in self.tables:
                fname = name if "." in name else f"{name}.csv"
                (d / fname).write_text(self.text(name), encoding="utf-8")


def write_error(config: RunConfig | None, exc: Exception, code: int, out_dir) -> Path:
    rows = [("kind", getattr(exc, "kind", type(exc).__name__)), ("exit_code", code), ("message", str(exc))]
    for k, v in sorted(getattr(exc, "detail", {}).items()):
        rows.append((f"detail.{k}", v))
    head = config.header() if config else f"# mixlab {__version__}\n"
    path = Path(out_dir or ".") / "error.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(head + table(("field", "value"), rows), encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# shared analysis steps


def load(config: RunConfig):
    """(model or None, chain) for the configured source."""
    if config.model:
        m = build_model(ModelSpec(config.model, config.params), max_states=config.max_states)
        return m, m.chain
    ch = parse_chain_file(config.chain_path)
    if ch.n_states > config.max_states:
        raise StateSpaceTooLarge(f"{ch.n_states} states exceed the cap {config.max_states}",
                                 n=ch.n_states, cap=config.max_states)
    return None, ch


def stated_bounds(m, eps, flow_metrics=None) -> dict:
    if m is None:
        return {}
    tb = theoretical_bounds(m.spec, eps, flow_metrics)
    return dict(tb.values)


@dataclass
class CouplingResult:
    strategy: object  # CouplingStrategy used for simulation
    beta: Fraction
    witness: tuple | None
    D: int
    bound: int | None
    metric: object  # (x, y) -> int
    scope: str  # "adjacent pairs" or "all pairs"


def analyze_coupling(m, eps) -> CouplingResult:
    """Faithfulness check plus the exact contraction factor and the bound it gives."""
    cs = builtin_coupling(m)
    if isinstance(cs, PathCouplingSpec):
        verify_faithful(cs.coupling, sorted(cs.adjacency))
        beta, witness = contraction_factor(cs)
        D = cs.diameter
        metric = cs.delta
        strategy = cs.as_strategy()
        scope = "adjacent pairs"
    else:
        verify_faithful(cs)
        metric = symmetric_difference_size(m)
        n = cs.chain.n_states
        beta, witness = Fraction(0), None
        for x in range(n):
            for y in range(n):
                if x == y:
                    continue
                r = expected_one_step_distance(cs, x, y, metric) / metric(x, y)
                if witness is None or r > beta:
                    beta, witness = r, (x, y)
        D = max((metric(x, y) for x in range(n) for y in range(n)), default=0)
        strategy = cs
        scope = "all pairs"
    try:
        bound = 0 if D == 0 else path_coupling_tau(beta, D, eps)
    except NoContraction:
        bound = None
    return CouplingResult(strategy, beta, witness, D, bound, metric, scope)


def worst_pair(ch: Chain, metric) -> tuple[int, int]:
    best, pair = -1, (0, 0)
    for x in ch.support:
        for y in ch.support:
            d = metric(x, y)
            if d > best:
                best, pair = d, (x, y)
    return pair


# --------------------------------------------------------------------------
# commands


def cmd_analyze(config: RunConfig, rep: Report):
    m, chain = load(config)
    ch = chain.restricted()
    check_reversibility(ch)
    spec = eigen_spectrum(ch, max_states=config.max_states)
    rep.add("N", ch.n_states)
    rep.add("lazy", ch.lazy)
    rep.add("lambda1", spec.lambda1)
    rep.add("lambda_max", spec.lambda_max)
    rep.add("gap", spec.gap)
    if ch.n_states <= config.subset_cap and ch.n_states >= 2:
        cr = cheeger_check(ch, max_states=config.subset_cap)
        rep.add("phi", cr.phi)
        rep.add("cheeger_lower", cr.lower)
        rep.add("cheeger_upper", cr.upper)
        rep.add("cheeger_holds", True)
    else:
        rep.add("phi", "skipped: N above subset cap")
    for k, v in sorted(stated_bounds(m, config.eps).items()):
        rep.add(f"stated_{k}", v)

    taus = mixing_times(ch, config.eps, cap=config.t_cap)
    rows, inside = [], True
    for x in range(ch.n_states):
        upper, lower = gap_mixing_bounds(spec, ch.pi_float[x], config.eps) if spec.lambda_max < 1 - 1e-12 else (None, None)
        rows.append((x, ch.states[x], ch.pi[x], int(taus[x]), upper, lower))
        if upper is not None:
            inside &= lower <= taus.max() and taus[x] <= upper
    rep.add("tau_max", int(taus.max()))
    rep.add("spectral_sandwich_holds", inside)
    rep.tables["mixing"] = table(("index", "label", "pi", "tau_exact", "spectral_upper", "spectral_lower"), rows)
    rep.tables["spectrum"] = spectrum_csv(spec)


def cmd_congest(config: RunConfig, rep: Report):
    _, chain = load(config)
    ch = chain.restricted()
    paths, flow_file, mode = (config.extra.get(k) for k in ("paths", "flow", "resistance"))
    if paths:
        gamma = parse_paths(Path(paths).read_text(encoding="utf-8"))
        cr = path_congestion(ch, gamma)
        rep.add("source", "paths")
    elif flow_file:
        cr = flow_congestion(ch, parse_flow(Path(flow_file).read_text(encoding="utf-8")))
        rep.add("source", "flow")
    elif mode == "shortest":
        gamma = shortest_path_set(ch)
        cr = path_congestion(ch, gamma)
        rep.add("source", "shortest paths")
        rep.tables["flow.txt"] = dump_flow(gamma)
    else:
        flow, R = resistance_min(ch, mode or "exact_lp")
        cr = flow_congestion(ch, flow)
        rep.add("source", f"resistance ({mode or 'exact_lp'})")
        rep.add("R", R)
        rep.tables["flow.txt"] = dump_flow(flow)
    for k, v in cr.as_row().items():
        rep.add(k, v)
    phi_lo, lam_rho2, lam_rhobar, lam_rho_ell = congestion_gap_bounds(cr)
    rep.add("phi_lower", phi_lo)
    rep.add("lambda1_upper_rho_sq", lam_rho2)
    rep.add("lambda1_upper_rho_bar", lam_rhobar)
    rep.add("lambda1_upper_rho_ell", lam_rho_ell)
    rep.add("lambda1", eigen_spectrum(ch, max_states=config.max_states).lambda1)
    rep.tables["congestion"] = congestion_csv(cr)


def cmd_flow_knapsack(config: RunConfig, rep: Report):
    if config.model != "knapsack":
        raise UsageError("flow-knapsack needs --model knapsack")
    m, ch = load(config)
    h = config.extra.get("h", DEFAULT_H)
    flow = build_flow(m, h)
    mt = flow_metrics_and_bound(flow, config.eps)
    audit = audit_encoding(flow)
    rep.add("N", ch.n_states)
    rep.add("C_f", mt.C)
    rep.add("L_f", mt.L)
    rep.add("tau_bound", mt.tau_bound)
    rep.add("max_slack", max(flow.slack.values(), default=0))
    rep.add("encodings", audit.checked)
    rep.add("collisions", audit.collisions)
    rep.add("infeasible_encodings", audit.infeasible_encodings)
    rep.add("tau_exact_max", int(mixing_times(ch, config.eps, cap=config.t_cap).max()))
    rep.tables["flow_metrics"] = metrics_csv(mt, audit)
    rep.tables["flow.txt"] = dump_flow(flow.as_fractional(ch))


def cmd_couple(config: RunConfig, rep: Report):
    if not config.model:
        raise UsageError("couple needs a --model with a built-in coupling")
    m, ch = load(config)
    res = analyze_coupling(m, config.eps)
    rep.add("faithful", True)
    rep.add("contraction_scope", res.scope)
    rep.add("beta", res.beta)
    rep.add("beta_witness", None if res.witness is None else f"{res.witness[0]}-{res.witness[1]}")
    rep.add("diameter", res.D)
    rep.add("tau_bound", "not applicable: beta >= 1" if res.bound is None else res.bound)
    for k, v in sorted(stated_bounds(m, config.eps).items()):
        rep.add(f"stated_{k}", v)

    x0, y1 = worst_pair(ch, res.metric)
    y0 = y1 if config.extra.get("start") == "pair" else "pi"
    t_max = config.t_max if config.t_max is not None else min(res.bound if res.bound else 50, 200)
    curve = simulate_coalescence(res.strategy, x0, y0, t_max, config.trials, config.seed)
    rows, lemma = [], True
    for t, f, hw in zip(curve.t, curve.frac_uncoupled, curve.halfwidth):
        d = distance_from_stationarity(ch, x0, int(t))
        sigma = math.sqrt(f * (1 - f) / config.trials)
        rows.append((int(t), float(f), float(hw), d))
        if y0 == "pi":
            lemma &= f + 3 * sigma >= d - 1e-12
    rep.add("start", f"{x0}" + (f",{y0}" if y0 != "pi" else ",pi"))
    rep.add("t_max", t_max)
    if y0 == "pi":
        rep.add("coupling_lemma_holds", lemma)
    rep.tables["coalescence"] = table(("t", "frac_uncoupled", "halfwidth", "delta_exact"), rows)


def cmd_kr(config: RunConfig, rep: Report):
    if config.model != "js_matchings":
        raise UsageError("kr needs --model js_matchings")
    m, _ = load(config)
    which = config.extra.get("coupling", "shared")
    cs = independent_coupling(m.chain) if which == "independent" else js_shared_coupling(m)
    lr = kr_layer_drift(cs, m.spec.params["graph"], alpha=config.extra.get("alpha", 1.0))
    rep.add("coupling", which)
    rep.add("pairs", len(lr.pair_class))
    rep.add("max_jump", lr.max_jump)
    rep.add("edges", lr.m)
    sub = config.extra.get("submart")
    if sub:
        rep.add("submartingale_bound", submartingale_bound(*sub))
    rep.tables["layers"] = lr.to_csv()


def cmd_compare(config: RunConfig, rep: Report):
    m, chain = load(config)
    ch = chain.restricted()
    eps = config.eps
    spec = eigen_spectrum(ch, max_states=config.max_states)
    taus = mixing_times(ch, eps, cap=config.t_cap)

    cp = None
    if ch.lazy and ch.n_states >= 2:
        cr = path_congestion(ch, shortest_path_set(ch))
        cp = float(cr.rho) * cr.ell
    coupling = stated = None
    if m is not None:
        try:
            coupling = analyze_coupling(m, eps).bound
        except MixlabError as exc:
            if exc.invariant:
                raise
        flow_metrics = None
        if m.spec.model_id == "knapsack":
            mt = flow_metrics_and_bound(build_flow(m, config.extra.get("h", DEFAULT_H)), eps)
            flow_metrics = {"C": mt.C, "L": mt.L, "size": mt.size}
        stated = stated_bounds(m, eps, flow_metrics).get("tau_bound")

    rows, holds = [], True
    for x in range(ch.n_states):
        log_term = math.log(1 / ch.pi_float[x]) + math.log(1 / eps)
        upper = lower = None
        if spec.lambda_max < 1 - 1e-12:
            upper, lower = gap_mixing_bounds(spec, ch.pi_float[x], eps)
        paths = log_term * cp if cp is not None else None
        uppers = [u for u in (upper, paths, coupling, stated) if u is not None]
        ok = all(taus[x] <= u for u in uppers)
        holds &= ok
        rows.append((x, ch.states[x], int(taus[x]), upper, lower, paths, coupling, stated, ok))
    rep.add("N", ch.n_states)
    rep.add("tau_max", int(taus.max()))
    rep.add("spectral_upper_max", max((r[3] for r in rows if r[3] is not None), default=None))
    rep.add("canonical_paths_upper_max", max((r[5] for r in rows if r[5] is not None), default=None))
    rep.add("coupling_upper", coupling)
    rep.add("stated_upper", stated)
    rep.add("all_upper_bounds_hold", holds)
    rep.tables["compare"] = table(
        ("index", "label", "tau_exact", "spectral_upper", "spectral_lower", "canonical_paths_upper",
         "coupling_upper", "stated_upper", "upper_bounds_hold"),
        rows,
    )


HANDLERS = {
    "analyze": cmd_analyze,
    "congest": cmd_congest,
    "flow-knapsack": cmd_flow_knapsack,
    "couple": cmd_couple,
    "kr": cmd_kr,
    "compare": cmd_compare,
}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixlab", description="Exact mixing-time analysis of finite reversible chains.")
    parser.add_argument("--version", action="version", version=f"mixlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        src = p.add_argument_group("chain source")
        src.add_argument("--model", help="zoo model id (aliases: " + ", ".join(MODEL_ALIASES) + ")")
        src.add_argument("--chain", dest="chain_path", help="chain file in the text format")
        src.add_argument("--n", type=int)
        src.add_argument("--k", type=int)
        src.add_argument("--a", help="knapsack item sizes, comma-separated rationals")
        src.add_argument("--b", help="knapsack capacity")
        src.add_argument("--graph", help="edge file (lines 'e u v') or K<n>, C<n>, K<a>x<b>")
        src.add_argument("--poset", help="poset file (lines 'lt a b')")
        src.add_argument("--J", choices=("degree", "uniform"), help="Glauber vertex law")
        p.add_argument("--eps", type=float, default=0.25)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--max-states", type=int, default=None, help=f"state cap (env {ENV_MAX_STATES})")
        p.add_argument("--subset-cap", type=int, default=MAX_SUBSET_STATES)
        p.add_argument("--t-cap", type=int, default=10**6)
        p.add_argument("--t-max", type=int, default=None)
        p.add_argument("--out", help="directory for the CSV reports")
        return p

    common(sub.add_parser("analyze", help="stationary law, spectrum, conductance, spectral mixing bounds"))
    p = common(sub.add_parser("congest", help="congestion of canonical paths or of a minimum-congestion flow"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--paths", help="canonical path file")
    g.add_argument("--flow", help="fractional flow file")
    g.add_argument("--resistance", choices=("exact_lp", "approx", "shortest"),
                   help="compute a flow instead (shortest: BFS canonical paths)")
    p = common(sub.add_parser("flow-knapsack", help="knapsack flow, encoding audit and mixing bound"))
    p.add_argument("--h", type=int, default=DEFAULT_H, help="number of heavy items")
    p = common(sub.add_parser("couple", help="faithfulness, contraction, bound and coalescence curve"))
    p.add_argument("--start", choices=("pi", "pair"), default="pi",
                   help="second copy starts from pi (default) or from the far end of the worst pair")
    p = common(sub.add_parser("kr", help="layer drift of a matching coupling"))
    p.add_argument("--coupling", choices=("shared", "independent"), default="shared")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--submart", help="Z0,Delta,M,R,t for the submartingale bound")
    p = common(sub.add_parser("compare", help="every available upper bound against exact tau per state"))
    p.add_argument("--h", type=int, default=DEFAULT_H)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    model = MODEL_ALIASES.get(ns.model, ns.model) if ns.model else None
    params, shown = {}, {}
    if model is not None:
        try:
            ModelSpec(model)
        except ModelSpecError as exc:
            raise UsageError(str(exc)) from None
        params, shown = model_params(model, ns)
    extra = {}
    for name in ("paths", "flow", "resistance", "h", "start", "coupling", "alpha"):
        v = getattr(ns, name, None)
        if v is not None:
            extra[name] = v
    if getattr(ns, "submart", None):
        try:
            extra["submart"] = tuple(float(v) for v in ns.submart.split(","))
        except ValueError:
            raise UsageError("--submart needs five numbers") from None
        if len(extra["submart"]) != 5:
            raise UsageError("--submart needs five numbers: Z0,Delta,M,R,t")
    cfg = RunConfig(
        command=ns.command,
        model=model,
        params=params,
        chain_path=ns.chain_path,
        eps=ns.eps,
        seed=ns.seed,
        trials=ns.trials,
        max_states=ns.max_states if ns.max_states is not None else _max_states_default(),
        subset_cap=ns.subset_cap,
        t_cap=ns.t_cap,
        t_max=ns.t_max,
        out=ns.out,
        extra=extra,
        shown=shown,
    )
    cfg.validate()
    return cfg


def run(config: RunConfig, stdout=None) -> int:
    """Execute one command; returns the exit code."""
    stdout = stdout or sys.stdout
    rep = Report(config)
    try:
        HANDLERS[config.command](config, rep)
    except UsageError as exc:
        print(f"mixlab: {exc}", file=sys.stderr)
        return 1
    except MixlabError as exc:
        code = 2 if exc.invariant else 1
        path = write_error(config, exc, code, config.out)
        print(f"mixlab: {exc.kind}: {exc} (see {path})", file=sys.stderr)
        return code
    except (OSError, ValueError) as exc:
        print(f"mixlab: {exc}", file=sys.stderr)
        return 1
    rep.write(stdout)
    return 0


def main(argv=None) -> int:
    ns = None
    try:
        ns = build_parser().parse_args(argv)
        config = config_from_args(ns)
    except UsageError as exc:
        print(f"mixlab: {exc}", file=sys.stderr)
        return 1
    except MixlabError as exc:  # malformed graph or poset files
        code = 2 if exc.invariant else 1
        path = write_error(None, exc, code, getattr(ns, "out", None))
        print(f"mixlab: {exc.kind}: {exc} (see {path})", file=sys.stderr)
        return code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
