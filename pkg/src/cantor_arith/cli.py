"""Command-line front end.

Every subcommand reads a JSON config (``--config``) and writes its artifacts
into ``--out``.  Exit codes: 0 success (an unknown verdict is a result),
2 config or precondition, 3 budget, 4 internal verification, 5 unsupported.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import click

from . import __version__
from .classify import StructureClass, classify_pair, sample_space
from .coverings import difference_covering, sum_covering
from .dimension import (
    box_dimension_estimate,
    content_trend,
    hd_sum,
    moran_dimension,
    require_decomposition,
    scaling_witness,
)
from .errors import CantorArithError, ConfigError, VerificationError
from .intervals import IntervalSet, gaps
from .rational import Q, rat_str
from .renormalization import (
    PlaneBox,
    PlanePoint,
    Verdict,
    box_search_no,
    difference_pair_search,
    make_context,
    verify_certificate,
)
from .sets import CantorPair, as_two_map, set_from_json

CSV_SCHEMA_VERSION = 1

_COMMON_KEYS = {"K", "Kp"}
_KEYS = {
    "dim": {"lam", "depths", "s"},
    "cover": {"lam", "depth", "op"},
    "certify": {"s", "t", "box", "depth_cap", "node_budget"},
    "classify": {"lam", "depth", "theta", "n_gaps", "svg"},
    "sweep": {"lams", "depth", "theta", "n_gaps"},
    "sample": {"count", "bounds", "lam", "depth", "seed"},
    "witness": {"t", "R", "max_k"},
}
_NO_PAIR = {"sample"}


# ---------------------------------------------------------------------------
# config and output helpers


def load_config(path: str | None, command: str) -> dict[str, Any]:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    allowed = _KEYS[command] | (set() if command in _NO_PAIR else _COMMON_KEYS)
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    return cfg


def _sets(cfg: dict[str, Any]):
    if "K" not in cfg or "Kp" not in cfg:
        raise ConfigError("config needs both 'K' and 'Kp'")
    return set_from_json(cfg["K"]), set_from_json(cfg["Kp"])


def _pair(cfg: dict[str, Any]) -> CantorPair:
    K, Kp = _sets(cfg)
    return CantorPair(as_two_map(K), as_two_map(Kp))


def _rat(cfg: dict[str, Any], key: str, default: Any = None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return Q(default)
    try:
        return Q(cfg[key])
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational for {key!r}: {cfg[key]!r}") from exc


def _fmt(x: Any) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, float):
        return "%.15g" % x
    if isinstance(x, bool) or x is None:
        return str(x).lower() if x is not None else ""
    if isinstance(x, int):
        return str(x)
    try:
        return rat_str(x)
    except (TypeError, AttributeError):
        return str(x)


def csv_text(table: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# cantor-arith {table} schema v{CSV_SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _pmap(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def interval_svg(S: IntervalSet, title: str = "", n_labels: int = 8, width: int = 800) -> str:
    """Static bar diagram: components as bars, largest gaps labelled."""
    if not S:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="40"></svg>\n'
    hull = S.hull
    span = float(hull.hi - hull.lo) or 1.0
    pad = 20

    def X(v) -> float:
        return pad + (width - 2 * pad) * float(v - hull.lo) / span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="120" font-family="monospace" font-size="10">',
        f'<text x="{pad}" y="14">{title}</text>',
    ]
    for iv in S:
        w = max(X(iv.hi) - X(iv.lo), 0.5)
        parts.append(f'<rect x="{X(iv.lo):.3f}" y="40" width="{w:.3f}" height="20" fill="#335"/>')
    gs = sorted(gaps(S), key=lambda g: (-(g.hi - g.lo), g.lo))[:n_labels]
    for k, g in enumerate(sorted(gs, key=lambda g: g.lo)):
        mid = (X(g.lo) + X(g.hi)) / 2
        y = 78 + 12 * (k % 3)
        parts.append(f'<line x1="{mid:.3f}" y1="60" x2="{mid:.3f}" y2="{y - 8}" stroke="#a33"/>')
        parts.append(f'<text x="{mid:.3f}" y="{y}" text-anchor="middle">{rat_str(g.hi - g.lo)}</text>')
    parts.append(f'<text x="{pad}" y="34">{rat_str(hull.lo)}</text>')
    parts.append(f'<text x="{width - pad}" y="34" text-anchor="end">{rat_str(hull.hi)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


CLASS_HEADER = ["lambda", "class", "certainty", "hd_sum", "tauRL", "tauLR", "n_gaps", "largest_gap", "depth"]


def _class_row(lam, res: StructureClass) -> list[Any]:
    d = res.diagnostics
    return [
        lam,
        res.label.value,
        res.certainty.value,
        d["hd_sum"],
        d["tau_rl"],
        d["tau_lr"],
        d.get("n_gaps"),
        d.get("largest_gap"),
        d["depth"],
    ]


def _class_json(lam, res: StructureClass) -> dict[str, Any]:
    return {
        "lambda": rat_str(lam),
        "class": res.label.value,
        "certainty": res.certainty.value,
        "diagnostics": res.diagnostics,
    }


# ---------------------------------------------------------------------------
# click wiring


def _run(fn: Callable[[], None]) -> None:
    try:
        fn()
    except CantorArithError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Exact arithmetic on affine Cantor sets."""


def _common(f):
    f = click.option("--config", "config", type=click.Path(), required=True, help="JSON experiment config")(f)
    f = click.option("--out", "out", type=click.Path(file_okay=False), default=".", help="output directory")(f)
    f = click.option("--depth", type=int, default=None)(f)
    f = click.option("--budget", type=int, default=None, help="covering size limit")(f)
    f = click.option("--jobs", type=int, default=1, show_default=True)(f)
    f = click.option("--seed", type=int, default=None)(f)
    return f


@main.command()
@_common
def dim(config, out, depth, budget, jobs, seed):
    """Moran dimensions, box-counting estimate and content table."""

    def go():
        cfg = load_config(config, "dim")
        K, Kp = _sets(cfg)
        lam = _rat(cfg, "lam", 1)
        depths = cfg.get("depths")
        if depths is None:
            top = depth if depth is not None else 8
            depths = list(range(max(top - 3, 1), top + 1))
        if not isinstance(depths, list):
            raise ConfigError("'depths' must be a list")
        if len(set(depths)) < 3:
            raise ConfigError(">=3 depths required")
        d1 = moran_dimension(K.to_ifs().ratios)
        d2 = moran_dimension(Kp.to_ifs().ratios)
        est = box_dimension_estimate(K, Kp, lam, depths, budget)
        rows = [(r.depth, r.delta, r.count, r.n_intervals, r.n_pairs, r.residual) for r in est.rows]
        o = Path(out)
        _write(o, "dim.csv", csv_text("dim", ["depth", "delta", "count", "n_intervals", "n_pairs", "residual"], rows))
        s = float(_rat(cfg, "s")) if "s" in cfg else min(d1 + d2, 1.0)
        trend = content_trend(K, Kp, lam, s, depths, budget=budget)
        _write(o, "content.csv", csv_text("content", ["depth", "delta", "content"], trend.rows))
        summary = {
            "d": d1,
            "d_prime": d2,
            "hd_sum": hd_sum(K, Kp),
            "box_estimate": est.slope,
            "intercept": est.intercept,
            "content_s": s,
            "content_k0": trend.k0,
            "content_trend": trend.flag,
        }
        _write(o, "dim.json", _dump(summary))
        click.echo(f"d={d1:.15g} d'={d2:.15g} estimate={est.slope:.15g}")

    _run(go)


@main.command()
@_common
def cover(config, out, depth, budget, jobs, seed):
    """Depth-d outer covering of K - lam*K' (or the sum) as CSV and SVG."""

    def go():
        cfg = load_config(config, "cover")
        K, Kp = _sets(cfg)
        lam = _rat(cfg, "lam", 1)
        d = depth if depth is not None else int(cfg.get("depth", 6))
        op = cfg.get("op", "diff")
        if op == "diff":
            S = difference_covering(K, Kp, lam, d, budget)
        elif op == "sum":
            S = sum_covering(K, Kp, lam, d, budget)
        else:
            raise ConfigError(f"op must be 'diff' or 'sum', got {op!r}")
        o = Path(out)
        _write(o, "cover.csv", csv_text("cover", ["lo", "hi"], ((iv.lo, iv.hi) for iv in S)))
        _write(o, "cover.svg", interval_svg(S, f"{op} depth {d}"))
        click.echo(f"{len(S)} intervals, {len(S) - 1 if S else 0} gaps")

    _run(go)


@main.command()
@_common
def certify(config, out, depth, budget, jobs, seed):
    """Difference-pair certificate for a point (s, t) or a NO certificate for a box."""

    def go():
        cfg = load_config(config, "certify")
        pair = _pair(cfg)
        cap = depth if depth is not None else int(cfg.get("depth_cap", 64))
        nodes = budget if budget is not None else int(cfg.get("node_budget", 200_000))
        ctx = make_context(pair, cap, nodes)
        if "box" in cfg:
            if "s" in cfg or "t" in cfg:
                raise ConfigError("give either 'box' or ('s', 't'), not both")
            box = cfg["box"]
            if not isinstance(box, dict) or set(box) != {"s", "t"}:
                raise ConfigError("'box' needs exactly the keys 's' and 't'")
            cert = box_search_no(ctx, PlaneBox.of(box["s"], box["t"]))
        else:
            cert = difference_pair_search(ctx, PlanePoint.of(_rat(cfg, "s"), _rat(cfg, "t")))
        if not verify_certificate(pair, cert):
            raise VerificationError("certificate replay failed")
        _write(Path(out), "certificate.json", _dump(cert.to_json()))
        click.echo(cert.verdict.value if cert.verdict is not Verdict.UNKNOWN else "unknown")

    _run(go)


def _classify_job(args):
    pair, lam, depth, theta, n_gaps, budget = args
    return classify_pair(pair, lam, depth, theta=theta, n_gaps=n_gaps, budget=budget)


@main.command("classify")
@_common
def classify_cmd(config, out, depth, budget, jobs, seed):
    """Structural class of K - lam*K'."""

    def go():
        cfg = load_config(config, "classify")
        pair = _pair(cfg)
        lam = _rat(cfg, "lam", 1)
        d = depth if depth is not None else int(cfg.get("depth", 7))
        theta = _rat(cfg, "theta") if "theta" in cfg else None
        res = classify_pair(pair, lam, d, theta=theta, n_gaps=int(cfg.get("n_gaps", 32)), budget=budget)
        o = Path(out)
        _write(o, "classify.csv", csv_text("classify", CLASS_HEADER, [_class_row(lam, res)]))
        _write(o, "classify.json", _dump({"pair": pair.to_json(), **_class_json(lam, res)}))
        if cfg.get("svg", True):
            S = difference_covering(pair.K, pair.Kp, lam, d, budget)
            _write(o, "classify.svg", interval_svg(S, f"{pair} lambda={rat_str(lam)} depth {d}"))
        click.echo(f"{res.label.value} {res.certainty.value}")

    _run(go)


@main.command()
@_common
def sweep(config, out, depth, budget, jobs, seed):
    """Classify K - lam*K' over a grid of lam."""

    def go():
        cfg = load_config(config, "sweep")
        pair = _pair(cfg)
        lams = [Q(x) for x in cfg.get("lams", [])]
        d = depth if depth is not None else int(cfg.get("depth", 7))
        theta = _rat(cfg, "theta") if "theta" in cfg else None
        n_gaps = int(cfg.get("n_gaps", 32))
        results = _pmap(_classify_job, [(pair, lam, d, theta, n_gaps, budget) for lam in lams], jobs)
        o = Path(out)
        _write(o, "sweep.csv", csv_text("sweep", CLASS_HEADER, [_class_row(l, r) for l, r in zip(lams, results)]))
        _write(o, "sweep.json", _dump({"pair": pair.to_json(), "rows": [_class_json(l, r) for l, r in zip(lams, results)]}))
        click.echo(f"{len(results)} rows")

    _run(go)


@main.command()
@_common
def sample(config, out, depth, budget, jobs, seed):
    """Seeded random pairs, each classified."""

    def go():
        cfg = load_config(config, "sample")
        count = int(cfg.get("count", 10))
        sd = seed if seed is not None else int(cfg.get("seed", 0))
        lam = _rat(cfg, "lam", 1)
        d = depth if depth is not None else int(cfg.get("depth", 6))
        bounds = cfg.get("bounds")
        if bounds is not None and not isinstance(bounds, dict):
            raise ConfigError("'bounds' must be an object")
        pairs = sample_space(count, bounds, sd)
        results = _pmap(_classify_job, [(p, lam, d, None, 32, budget) for p in pairs], jobs)
        header = ["p0", "p1", "a", "q0", "q1", "b"] + CLASS_HEADER
        rows = [[p.K.p0, p.K.p1, p.K.a, p.Kp.p0, p.Kp.p1, p.Kp.a] + _class_row(lam, r) for p, r in zip(pairs, results)]
        _write(Path(out), "sample.csv", csv_text("sample", header, rows))
        click.echo(f"{len(rows)} pairs")

    _run(go)


@main.command()
@_common
def witness(config, out, depth, budget, jobs, seed):
    """Scaling witness F around t with radius R."""

    def go():
        cfg = load_config(config, "witness")
        K, Kp = _sets(cfg)
        t, R = _rat(cfg, "t"), _rat(cfg, "R")
        dec = require_decomposition(K, Kp)
        w = scaling_witness(K, Kp, dec, t, R, int(cfg.get("max_k", 8)), budget)
        data = w.to_json()
        data["checks"]["l_lt_mstar_nstar"] = w.l < dec.m_star + dec.n_star
        P = w.entry.projection
        data["checks"]["t_in_projection"] = P.lo <= t <= P.hi and t - R < P.lo and P.hi < t + R
        if not all(data["checks"].values()):
            raise VerificationError(f"witness checks failed: {data['checks']}")
        _write(Path(out), "witness.json", _dump(data))
        click.echo(f"scale={rat_str(w.scale)} shift={rat_str(w.shift)}")

    _run(go)


if __name__ == "__main__":
    main()
