"""``treesurgeon`` command-line front end.

Exit status: 0 on success, 1 when an identity that should hold does not,
2 on usage or input errors.  Diagnostics go to stderr as one JSON object
per line.  Options can also come from a JSON ``--config`` file, either at
top level or under a key named after the subcommand; flags given on the
command line win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .coplanarity import (
    check_coplanarity,
    check_second_order,
    conjecture_test,
    plane_points,
    two_edge_analysis,
)
from .errors import (
    BackendDisagreement,
    IdentityViolation,
    RankDeficient,
    TreeSurgeonError,
    UnknownEdge,
)
from .fixtures import FIXTURES, fixture_text
from .graph import (
    WeightedDigraph,
    format_rate,
    parse_graph,
    parse_graph_json,
    random_graph,
    stays_connected_without,
)
from .markov import (
    currents,
    lambda_coefficients,
    mu_coefficients,
    stationary,
    verify_linearity,
    verify_mu_linearity,
    vertex_balance,
)
from .polynomials import BACKENDS, decompose, decompose_all, edge_constraint, rescaled_poly, tree_poly
from .report import digest, make_report, plane_csv, write_report
from .selftest import run_selftest
from .simulate import (
    compare_currents,
    default_workers,
    estimate_currents,
    horizon_for_jumps,
    simulate_replicas,
)
from .trees import enumerate_rooted_trees

SEED_ENV = "TREESURGEON_SEED"

DEFAULTS = {
    "backend": "auto",
    "arithmetic": None,
    "seed": 0,
    "workers": None,
    "out": None,
    "root": None,
    "pin": [],
    "avoid": [],
    "require": [],
    "limit": None,
    "count_only": False,
    "format": "lines",
    "rescaled": False,
    "mode": None,
    "plane_csv": None,
    "pins": 3,
    "trials": 10,
    "vertices": 13,
    "density": 0.5,
    "rate_law": "rational:50",
    "samples": 5,
    "jumps": 1e5,
    "horizon": None,
    "burn_in": None,
    "replicas": 10,
    "batches": 20,
    "kernels": None,
    "sigmas": 3.0,
    "inject_fault": False,
    "no_sigma": False,
}


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    pass


# -- argument handling ---------------------------------------------------------------


def _common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    if graph:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--graph", type=Path, help="edge-list (.txt) or JSON graph file")
        src.add_argument("--fixture", choices=FIXTURES, help="bundled graph")
    p.add_argument("--config", type=Path, help="JSON file with option values")
    p.add_argument("--seed", type=int, help=f"random seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--arithmetic", choices=("exact", "float"),
                   help="float converts an exact graph; default follows the graph's rates")
    p.add_argument("--backend", choices=BACKENDS, help="tree polynomial backend")
    p.add_argument("--out", type=Path, help="report path (default stdout)")


def _constraint_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--avoid", action="append", metavar="U>V", help="oriented edge to avoid (repeatable)")
    p.add_argument("--require", action="append", metavar="U>V", help="oriented edge to require (repeatable)")


def _pin_arg(p: argparse.ArgumentParser, *aliases: str) -> None:
    p.add_argument("--pin", *aliases, dest="pin", action="append", metavar="PAIR",
                   help="pinned pair, as a 1-based index or 'U-V' (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treesurgeon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enum", help="list the rooted spanning trees of one root")
    _common(p)
    p.add_argument("--root", required=True)
    _constraint_args(p)
    p.add_argument("--limit", type=int, help="list at most this many trees (all are counted)")
    p.add_argument("--count-only", action="store_true", default=None, help="count trees without listing them")
    p.add_argument("--format", choices=("lines", "json"), default=None,
                   help="one line of u>v edges per tree (default), or the JSON report")

    p = sub.add_parser("poly", help="conditioned tree polynomial")
    _common(p)
    p.add_argument("--root", help="root label (default: every vertex)")
    _constraint_args(p)
    p.add_argument("--rescaled", action="store_true", default=None,
                   help="divide by the rates of required edges")

    p = sub.add_parser("decompose", help="tree vectors over pinned pairs")
    _common(p)
    _pin_arg(p)
    p.add_argument("--root", help="root label (default: every vertex)")
    _constraint_args(p)

    p = sub.add_parser("coplanarity", help="rank certificate and sigma orthogonality")
    _common(p)
    _pin_arg(p)
    p.add_argument("--mode", choices=("exact", "float"), help="rank arithmetic")
    _constraint_args(p)
    p.add_argument("--plane-csv", type=Path, help="write per-root vectors and the normal as CSV")

    p = sub.add_parser("conjecture", help="rank of 3**n tree vectors; JSON lines")
    _common(p)
    _pin_arg(p)
    p.add_argument("--mode", choices=("exact", "float"))
    p.add_argument("--pins", "--n", dest="pins", type=int, help="pinned pairs per random trial")
    p.add_argument("--trials", type=int, help="random graphs when no graph is given")
    p.add_argument("--vertices", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--rate-law", help="unit | uniform:LO:HI | rational:MAX | integer:LO:HI")
    p.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    p.add_argument("--no-sigma", action="store_true", default=None, help="skip the sigma candidates")

    p = sub.add_parser("stationary", help="stationary distribution, cross-checked")
    _common(p)

    p = sub.add_parser("currents", help="stationary currents and vertex balance")
    _common(p)

    p = sub.add_parser("linearity", help="affine law between currents and one or two input currents")
    _common(p)
    _pin_arg(p, "--input")
    p.add_argument("--samples", type=int, help="random input-rate settings to verify")

    p = sub.add_parser("simulate", help="jump-process replicas against analytic currents")
    _common(p)
    p.add_argument("--jumps", type=float, help="horizon as expected number of jumps")
    p.add_argument("--horizon", type=float, help="horizon in time units (overrides --jumps)")
    p.add_argument("--burn-in", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--batches", type=int)
    p.add_argument("--kernels", choices=("auto", "cython", "python"))
    p.add_argument("--sigmas", type=float, help="z-score threshold")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("selftest", help="identity suite on the bundled fixtures")
    _common(p, graph=False)
    p.add_argument("--inject-fault", action="store_true", default=None,
                   help="corrupt one rate to exercise the failure path")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file, the seed variable and CLI flags."""
    file_cfg = {}
    if getattr(args, "config", None) is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        section = raw.get(args.command, {})
        file_cfg = {k.replace("-", "_"): v for k, v in raw.items() if not isinstance(v, dict)}
        file_cfg.update({k.replace("-", "_"): v for k, v in section.items()})
    cfg = {}
    for key, default in DEFAULTS.items():
        if not hasattr(args, key):
            continue
        value = getattr(args, key)
        if value is None:
            value = file_cfg.get(key)
        if value is None and key == "seed" and os.environ.get(SEED_ENV):
            try:
                value = int(os.environ[SEED_ENV])
            except ValueError:
                raise UsageError(f"${SEED_ENV} must be an integer") from None
        cfg[key] = default if value is None else value
    for key in ("graph", "fixture"):
        value = getattr(args, key, None) or file_cfg.get(key)
        if value is not None:
            cfg[key] = str(value)
    unknown = set(file_cfg) - set(DEFAULTS) - {"graph", "fixture"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg["command"] = args.command
    return cfg


def load_input(cfg: dict) -> tuple[WeightedDigraph | None, dict | None]:
    if cfg.get("graph"):
        path = Path(cfg["graph"])
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read graph {path}: {exc}") from None
        text = data.decode()
        if path.suffix == ".json":
            try:
                g = parse_graph_json(json.loads(text))
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        else:
            g = parse_graph(text)
        return g, {"name": str(path), "sha256": digest(data)}
    if cfg.get("fixture"):
        text = fixture_text(cfg["fixture"])
        return parse_graph(text), {"name": f"fixture:{cfg['fixture']}", "sha256": digest(text)}
    return None, None


def _require_graph(g):
    if g is None:
        raise UsageError("a graph is required: pass --graph FILE or --fixture NAME")
    return g


def _apply_arithmetic(g: WeightedDigraph, cfg: dict) -> tuple[WeightedDigraph, str]:
    want = cfg.get("arithmetic")
    if want == "float":
        return g.to_float(), "float"
    if want == "exact" and not g.exact:
        raise UsageError("graph has float rates; exact arithmetic is not possible")
    return g, "exact" if g.exact else "float"


def parse_pin(g: WeightedDigraph, text: str) -> int:
    """``"3"`` is the third pair in file order; ``"a-b"`` names the pair by its ends."""
    text = str(text).strip()
    if text.isdigit():
        k = int(text) - 1
        if not 0 <= k < g.pair_count:
            raise UsageError(f"pin {text} out of range 1..{g.pair_count}")
        return k
    if "-" not in text:
        raise UsageError(f"cannot parse pin {text!r}; use an index or 'U-V'")
    u, v = text.split("-", 1)
    try:
        return g.pair_between(g.vertex(u), g.vertex(v))
    except (KeyError, UnknownEdge):
        raise UsageError(f"no pair joins {u!r} and {v!r}") from None


def parse_edge(g: WeightedDigraph, text: str):
    if ">" not in text:
        raise UsageError(f"cannot parse edge {text!r}; use 'U>V'")
    u, v = text.split(">", 1)
    try:
        return g.find_edge(g.vertex(u.strip()), g.vertex(v.strip()))
    except (KeyError, UnknownEdge):
        raise UsageError(f"no edge {text!r} in the graph") from None


def _constraint(g, cfg):
    return edge_constraint(g, [parse_edge(g, t) for t in cfg["avoid"]], [parse_edge(g, t) for t in cfg["require"]])


def _root(g, label):
    try:
        return g.vertex(str(label))
    except KeyError:
        raise UsageError(f"unknown vertex {label!r}") from None


def _edge_text(g, e) -> str:
    return f"{g.labels[e.source]}>{g.labels[e.target]}"


def _check(ok: bool, message: str) -> None:
    if not ok:
        raise VerificationFailed(message)


# -- commands ---------------------------------------------------------------------------


def cmd_enum(g, cfg):
    root = _root(g, cfg["root"])
    c = _constraint(g, cfg)
    trees, count, total = [], 0, g.zero()
    for t in enumerate_rooted_trees(g, root, c):
        w = t.weight(g)
        total += w
        if not cfg["count_only"] and (cfg["limit"] is None or count < cfg["limit"]):
            trees.append({"edges": [_edge_text(g, e) for e in t.sorted_edges()], "weight": format_rate(w)})
        count += 1
    return {"root": g.labels[root], "count": count, "weight_sum": format_rate(total), "trees": trees,
            "listed": not cfg["count_only"]}


def write_tree_lines(result, out, stream) -> None:
    """Plain listing: one tree per line, or just the count with ``--count-only``."""
    if result["listed"] is False:
        lines = [str(result["count"])]
    else:
        lines = [" ".join(t["edges"]) for t in result["trees"]]
    text = "".join(line + "\n" for line in lines)
    if out is None:
        stream.write(text)
    else:
        Path(out).write_text(text)


def cmd_poly(g, cfg):
    c = _constraint(g, cfg)
    roots = [_root(g, cfg["root"])] if cfg["root"] is not None else range(g.n)
    fn = rescaled_poly if cfg["rescaled"] else tree_poly
    values, backend = {}, None
    for r in roots:
        v = fn(g, r, c, cfg["backend"])
        values[g.labels[r]] = format_rate(v.value)
        backend = v.backend
    value = values[g.labels[roots[0]]] if cfg["root"] is not None else values
    return {"root": cfg["root"] if cfg["root"] is not None else "all", "value": value, "backend": backend,
            "rescaled": bool(cfg["rescaled"])}


def _pins(g, cfg, need=None):
    pins = [parse_pin(g, p) for p in cfg["pin"]]
    if not pins:
        raise UsageError("at least one --pin is required")
    if len(set(pins)) != len(pins):
        raise UsageError("pinned pairs must be distinct")
    if need is not None and len(pins) not in need:
        raise UsageError(f"this command takes {' or '.join(map(str, need))} pinned pair(s)")
    return pins


def cmd_decompose(g, cfg):
    pins = _pins(g, cfg)
    c = _constraint(g, cfg)
    if cfg["root"] is not None:
        vecs = [decompose(g, _root(g, cfg["root"]), pins, c, cfg["backend"])]
    else:
        vecs = decompose_all(g, pins, c, cfg["backend"])
    exact = g.exact
    sums = [v.total == tree_poly(g, v.root, c, cfg["backend"]).value for v in vecs] if exact else None
    if sums is not None:
        _check(all(sums), "tree vector entries do not add up to the tree polynomial")
    return {"pinned": [g.pair_label(k) for k in pins], "vectors": [v.to_dict(g) for v in vecs]}


def cmd_coplanarity(g, cfg):
    pins = _pins(g, cfg, need=(1, 2))
    if len(pins) == 2:
        if cfg["avoid"] or cfg["require"]:
            raise UsageError("extra constraints are supported with one pinned pair only")
        cert, sig, report = two_edge_analysis(g, pins[0], pins[1], cfg["mode"], cfg["backend"])
        if cfg["plane_csv"]:
            plane_csv(g, cert.pinned, [], None)
        result = {"certificate": cert.to_dict(g), "two_edge": report,
                  "sigma_columns": {lab: col for lab, col in zip(sig.labels, sig.columns)},
                  "omega": sig.omega}
    else:
        c = _constraint(g, cfg)
        cert = check_coplanarity(g, pins[0], cfg["mode"], c, cfg["backend"])
        res = check_second_order(g, pins[0], c, cfg["backend"])
        worst = max(abs(x) for x in res)
        if cfg["plane_csv"]:
            points, sigma = plane_points(g, pins[0], c, cfg["backend"])
            Path(cfg["plane_csv"]).write_text(plane_csv(g, cert.pinned, points, sigma))
        result = {"certificate": cert.to_dict(g), "second_order_max_residual": worst}
        if g.exact:
            _check(worst == 0, f"second-order identity residual {worst}")
    _check(cert.orthogonal, "sigma-vectors are not orthogonal to every tree vector")
    _check(cert.rank <= cert.expected_rank, f"rank {cert.rank} exceeds {cert.expected_rank}")
    return result


def _conjecture_job(job):
    g, pins, mode, backend, with_sigma, meta = job
    cert = conjecture_test(g, pins, mode, backend, with_sigma)
    return meta, cert.to_dict(g)


def _random_trial(cfg, seed):
    rng = np.random.default_rng(seed)
    n_pins = cfg["pins"]
    for _ in range(100):
        g = random_graph(cfg["vertices"], cfg["density"], cfg["rate_law"], seed=int(rng.integers(2 ** 62)))
        if g.pair_count < n_pins:
            continue
        pins = sorted(int(x) for x in rng.choice(g.pair_count, n_pins, replace=False))
        if stays_connected_without(g, pins):
            return g, pins
    raise UsageError("could not draw a graph that stays connected without the pinned pairs")


def cmd_conjecture(g, cfg, emit):
    jobs = []
    if g is not None:
        jobs.append((g, _pins(g, cfg), cfg["mode"], cfg["backend"], not cfg["no_sigma"], {"trial": 0}))
    else:
        if cfg["pins"] < 1 or cfg["trials"] < 1 or cfg["vertices"] < 2:
            raise UsageError("pins, trials and vertices must be positive")
        children = np.random.SeedSequence(cfg["seed"]).spawn(cfg["trials"])
        for i, child in enumerate(children):
            h, pins = _random_trial(cfg, child)
            meta = {"trial": i, "seed": {"root": cfg["seed"], "trial": i}}
            jobs.append((h, pins, cfg["mode"], cfg["backend"], not cfg["no_sigma"], meta))
    workers = cfg["workers"] or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = pool.map(_conjecture_job, jobs)
            outputs = list(results)
    else:
        outputs = [_conjecture_job(j) for j in jobs]
    bad = []
    for (meta, cert), job in zip(outputs, jobs):
        arithmetic = cert["arithmetic"]
        emit({**meta, "rank": cert["rank"], "dim": cert["vector_dim"], "elapsed_ms": cert["elapsed_ms"],
              "vertices": job[0].n, "certificate": cert}, arithmetic)
        if cert["orthogonal"] is False:
            bad.append(meta["trial"])
    _check(not bad, f"sigma candidates fail orthogonality in trials {bad}")


def cmd_stationary(g, cfg):
    p = stationary(g, cfg["backend"], cross_check=True)
    return {"probabilities": {g.labels[v]: format_rate(x) for v, x in enumerate(p)},
            "backend": p.backend, "cross_checked": p.cross_checked}


def cmd_currents(g, cfg):
    p = stationary(g, cfg["backend"], cross_check=True)
    j = currents(g, p)
    bal = vertex_balance(g, j.values)
    ok = all(b == 0 for b in bal) if g.exact else max(abs(float(b)) for b in bal) < 1e-12
    _check(ok, "currents do not balance at every vertex")
    return {"currents": {g.pair_label(k): format_rate(x) for k, x in enumerate(j)},
            "balance": {g.labels[v]: format_rate(b) for v, b in enumerate(bal)}, "balance_ok": ok}


def _sample_rates(g, rng):
    if g.exact:
        return Fraction(int(rng.integers(1, 51)), int(rng.integers(1, 51)))
    return float(rng.uniform(0.1, 5.0))


def cmd_linearity(g, cfg):
    pins = _pins(g, cfg, need=(1, 2))
    rng = np.random.default_rng(cfg["seed"])
    if len(pins) == 1:
        coefs = lambda_coefficients(g, pins[0], cfg["backend"])
        samples = [(_sample_rates(g, rng), _sample_rates(g, rng)) for _ in range(cfg["samples"])]
        rep = verify_linearity(g, pins[0], samples, coefs)
    else:
        coefs = mu_coefficients(g, pins[0], pins[1], cfg["backend"])
        samples = [tuple(_sample_rates(g, rng) for _ in range(4)) for _ in range(cfg["samples"])]
        rep = verify_mu_linearity(g, pins[0], pins[1], samples, coefs)
    _check(rep["ok"], f"affine law fails, max residual {rep['max_residual']}")
    out = coefs.to_dict(g)
    out["residuals"] = rep
    out["rank_certificates"] = [coefs.certificate.to_dict(g)] if coefs.certificate is not None else []
    return out


def cmd_simulate(g, cfg):
    horizon = cfg["horizon"] or horizon_for_jumps(g, cfg["jumps"])
    runs = simulate_replicas(g, horizon, cfg["replicas"], cfg["seed"], cfg["burn_in"], cfg["batches"],
                             cfg["workers"], cfg["kernels"])
    analytic = currents(g.to_float(), stationary(g.to_float(), cross_check=False))
    per_pair = []
    comparisons = [compare_currents(s, analytic.values, cfg["sigmas"]) for s in runs]
    for k in range(g.pair_count):
        rows = [c[k] for c in comparisons]
        per_pair.append({
            "pair": g.pair_label(k),
            "analytic": float(analytic[k]),
            "estimates": [r["estimate"] for r in rows],
            "stderr": [r["stderr"] for r in rows],
            "z": [r["z"] for r in rows],
            "within": sum(r["ok"] for r in rows),
        })
    return {"horizon": horizon, "replicas": [s.to_dict(g) for s in runs], "currents": per_pair,
            "mean_estimate": [float(np.mean([estimate_currents(s).values[k] for s in runs]))
                              for k in range(g.pair_count)]}


def cmd_selftest(cfg):
    checks = run_selftest(fault=bool(cfg["inject_fault"]))
    failed = [f"{c['graph']}:{c['name']}" for c in checks if not c["ok"]]
    return {"checks": checks, "passed": not failed, "failed": failed}


# -- entry point -----------------------------------------------------------------------


def _diagnostic(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"level": "error", "kind": kind, "message": message, **extra}) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        g, input_info = load_input(cfg)
        arithmetic = "exact"
        if g is not None:
            g, arithmetic = _apply_arithmetic(g, cfg)
        cfg_report = {k: v for k, v in cfg.items() if k != "command"}

        def report(result, arith=arithmetic):
            return make_report(cfg["command"], result, version=__version__, seed=cfg["seed"],
                               arithmetic=arith, input_info=input_info, config=cfg_report)

        out = cfg["out"]
        if out is not None and cfg["command"] == "conjecture":
            Path(out).write_text("")
        status = 0
        try:
            if cfg["command"] == "selftest":
                result = cmd_selftest(cfg)
                write_report(report(result), out, sys.stdout)
                return 0 if result["passed"] else 1
            if cfg["command"] == "conjecture":
                cmd_conjecture(g, cfg, lambda res, arith: write_report(report(res, arith), out, sys.stdout,
                                                                       lines=True))
                return 0
            g = _require_graph(g)
            handler = {
                "enum": cmd_enum, "poly": cmd_poly, "decompose": cmd_decompose,
                "coplanarity": cmd_coplanarity, "stationary": cmd_stationary, "currents": cmd_currents,
                "linearity": cmd_linearity, "simulate": cmd_simulate,
            }[cfg["command"]]
            result = handler(g, cfg)
            if cfg["command"] == "enum" and cfg["format"] == "lines":
                write_tree_lines(result, out, sys.stdout)
                return 0
        except VerificationFailed as exc:
            _diagnostic("verification", str(exc))
            return 1
        write_report(report(result), out, sys.stdout)
        return status
    except (IdentityViolation, BackendDisagreement) as exc:
        _diagnostic("verification", str(exc), error=type(exc).__name__)
        return 1
    except RankDeficient as exc:
        cert = exc.certificate.to_dict() if exc.certificate is not None else None
        _diagnostic("usage", str(exc), error="RankDeficient", certificate=cert)
        return 2
    except UsageError as exc:
        _diagnostic("usage", str(exc))
        return 2
    except (TreeSurgeonError, ValueError, KeyError) as exc:
        _diagnostic("input", str(exc), error=type(exc).__name__)
        return 2


def main(argv=None) -> None:
    sys.exit(run(argv))
