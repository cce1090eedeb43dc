"""Command-line front end.

Every command is a thin client of the HTTP service (mounted in-process by
default, pointed at a remote server with --url).  Results are emitted as
JSON records or CSV tables that embed the fully resolved options, and
--save-config writes those options back out as a flat key=value file whose
replay through --config reproduces the output byte for byte.

Exit codes: 0 success, 1 bad usage or bad parameter values, 2 for requests
that are well formed but outside a result's domain (outside tolerance,
infeasible budget, exhausted search).
"""

from __future__ import annotations

import configparser
import json
from pathlib import Path
from typing import NamedTuple

import click

from .client import ServiceClient
from .errors import DomainError, ParameterError


class RationalType(click.ParamType):
    """Plain numbers plus exact fraction literals like 1/600."""

    name = "number"

    def convert(self, value, param, ctx):
        if isinstance(value, (int, float)):
            return float(value)
        text = str(value).strip()
        try:
            if "/" in text:
                num, den = text.split("/", 1)
                return float(num) / float(den)
            return float(text)
        except (ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is not a number or fraction", param, ctx)


class RationalListType(click.ParamType):
    name = "numbers"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        out = []
        for piece in str(value).split(","):
            piece = piece.strip()
            if piece:
                out.append(RATIONAL.convert(piece, param, ctx))
        if not out:
            self.fail("empty list", param, ctx)
        return out


class RangeValues(NamedTuple):
    text: str
    values: list


class IntRangeType(click.ParamType):
    """A single integer or an inclusive start:stop[:step] range."""

    name = "range"

    def convert(self, value, param, ctx):
        if isinstance(value, RangeValues):
            return value
        text = str(value).strip()
        parts = text.split(":")
        try:
            if len(parts) == 1:
                vals = [int(parts[0])]
            elif len(parts) in (2, 3):
                start, stop = int(parts[0]), int(parts[1])
                step = int(parts[2]) if len(parts) == 3 else 1
                if step <= 0 or stop < start:
                    raise ValueError
                vals = list(range(start, stop + 1, step))
            else:
                raise ValueError
        except ValueError:
            self.fail(f"{value!r} is not an integer or start:stop[:step]", param, ctx)
        return RangeValues(text=text, values=vals)


class FloatRangeType(click.ParamType):
    """A single number or an inclusive start:stop:step grid."""

    name = "range"

    def convert(self, value, param, ctx):
        if isinstance(value, RangeValues):
            return value
        text = str(value).strip()
        parts = text.split(":")
        try:
            if len(parts) == 1:
                vals = [RATIONAL.convert(parts[0], param, ctx)]
            elif len(parts) == 3:
                start = RATIONAL.convert(parts[0], param, ctx)
                stop = RATIONAL.convert(parts[1], param, ctx)
                step = RATIONAL.convert(parts[2], param, ctx)
                if step <= 0 or stop < start:
                    raise ValueError
                vals = []
                i = 0
                while start + i * step <= stop * (1 + 1e-12):
                    vals.append(start + i * step)
                    i += 1
            else:
                raise ValueError
        except ValueError:
            self.fail(f"{value!r} is not a number or start:stop:step", param, ctx)
        return RangeValues(text=text, values=vals)


RATIONAL = RationalType()
RATIONAL_LIST = RationalListType()
INT_RANGE = IntRangeType()
FLOAT_RANGE = FloatRangeType()


def _load_config(path: str) -> dict:
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    tree: dict = {}
    for section in parser.sections():
        node = tree
        parts = section.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = dict(parser.items(section))
    return tree


def _config_str(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, (list, tuple)):
        return ",".join(_config_str(v) for v in value)
    return str(value)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _csv_text(command: str, cfg: dict, columns, rows, meta: dict | None = None) -> str:
    lines = [f"# command={command}"]
    for key in sorted(cfg):
        if cfg[key] is None:
            continue
        lines.append(f"# {key}={_config_str(cfg[key])}")
    for key in sorted(meta or {}):
        lines.append(f"# {key}={_cell(meta[key])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _write_config(path: str, command: str, cfg: dict):
    lines = [f"[{command}]"]
    for key in sorted(cfg):
        if cfg[key] is None:
            continue
        lines.append(f"{key}={_config_str(cfg[key])}")
    Path(path).write_text("\n".join(lines) + "\n")


def _emit(ctx, command: str, cfg: dict, *, record=None, rows=None, columns=None,
          fmt: str = "json", output: str | None = None, meta: dict | None = None):
    if fmt == "csv":
        if rows is None:
            rows = [record]
        text = _csv_text(command, cfg, columns, rows, meta)
    else:
        body = {"command": command, "config": {k: v for k, v in cfg.items() if v is not None}}
        if meta:
            body.update(meta)
        body["result"] = record if record is not None else rows
        text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)
    save = ctx.obj.get("save_config")
    if save:
        _write_config(save, command, cfg)


def _client(ctx) -> ServiceClient:
    return ServiceClient(base_url=ctx.obj.get("url"))


def params_options(f):
    decorators = [
        click.option("--a", "adv_rate", type=RATIONAL, default=None,
                     help="attack mining rate, blocks/s"),
        click.option("--h", "hon_rate", type=RATIONAL, default=None,
                     help="honest mining rate, blocks/s"),
        click.option("--lambda", "total_rate", type=RATIONAL, default=None,
                     help="total mining rate, blocks/s"),
        click.option("--beta", "adv_fraction", type=RATIONAL, default=None,
                     help="attack share of the total rate"),
        click.option("--delta", "delay", type=RATIONAL, required=True,
                     help="propagation delay bound, s"),
    ]
    for deco in reversed(decorators):
        f = deco(f)
    return f


def build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay, default_beta=None):
    """Payload plus the config entries for whichever rate style was used."""
    if adv_rate is not None or hon_rate is not None:
        if adv_rate is None or hon_rate is None:
            raise click.UsageError("--a and --h must be given together")
        if total_rate is not None or adv_fraction is not None:
            raise click.UsageError("--a/--h and --lambda/--beta are mutually exclusive")
        payload = {"adv_rate": adv_rate, "hon_rate": hon_rate, "delay": delay}
        return payload, {"adv_rate": adv_rate, "hon_rate": hon_rate, "delay": delay}
    if total_rate is None:
        raise click.UsageError("give mining rates as --a/--h or --lambda (with --beta)")
    if adv_fraction is None:
        if default_beta is None:
            raise click.UsageError("--lambda needs --beta")
        adv_fraction = default_beta
    payload = {"total_rate": total_rate, "adv_fraction": adv_fraction, "delay": delay}
    return payload, {"total_rate": total_rate, "adv_fraction": adv_fraction, "delay": delay}


def output_options(default_fmt="json"):
    def wrap(f):
        f = click.option("--format", "format", type=click.Choice(["json", "csv"]),
                         default=default_fmt, show_default=True)(f)
        f = click.option("--output", "-o", "output", type=click.Path(dir_okay=False),
                         default=None, help="write to a file instead of stdout")(f)
        return f
    return wrap


@click.group(name="naklab")
@click.option("--url", default=None, envvar="NAKLAB_URL",
              help="base URL of a running service; default mounts it in-process")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="key=value file with one [section] per subcommand")
@click.option("--save-config", "save_config", default=None,
              type=click.Path(dir_okay=False),
              help="write the fully resolved options of the invoked command")
@click.pass_context
def cli(ctx, url, config_path, save_config):
    """Latency-security trade-off calculator and mining-race simulator."""
    ctx.obj = {"url": url, "save_config": save_config}
    if config_path:
        ctx.default_map = _load_config(config_path)


@cli.command()
@params_options
@output_options()
@click.pass_context
def tolerance(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay, format, output):
    """Fault-tolerance check and the critical attack share."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay,
                                default_beta=0.0)
    cfg["format"] = format
    with _client(ctx) as sc:
        res = sc.post("/v1/tolerance", {"params": payload})
    _emit(ctx, "tolerance", cfg, record=res, rows=[res],
          columns=["within", "slack", "beta_star"], fmt=format, output=output)


@cli.command("balanced-cdf")
@params_options
@click.option("--n", "n_max", type=int, default=10, show_default=True,
              help="largest count to tabulate")
@click.option("--depth", type=int, default=None,
              help="restrict to a depth-k confirmation window")
@click.option("--empirical", is_flag=True, default=False,
              help="append a chain-simulation tail column")
@click.option("--trials", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options(default_fmt="csv")
@click.pass_context
def balanced_cdf(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                 n_max, depth, empirical, trials, seed, format, output):
    """Tail of the balanced-height count, analytic and optionally simulated."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"n": n_max, "depth": depth, "empirical": empirical,
                "trials": trials, "seed": seed, "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/balance/cdf",
                      {"params": payload, "n_max": n_max, "depth": depth})
        emp_tail = None
        if empirical:
            chain = sc.post("/v1/balance/chain-sim",
                            {"params": payload, "trials": trials, "seed": seed})
            counts = chain["counts"]
            acc, cum = [], 0
            for n in range(n_max + 1):
                cum += counts[n] if n < len(counts) else 0
                acc.append(1.0 - cum / chain["trials"])
            emp_tail = acc
    rows = []
    for i, n in enumerate(res["n"]):
        row = {"n": n, "cdf": res["cdf"][i], "tail": res["tail"][i]}
        if emp_tail is not None:
            row["empirical"] = emp_tail[i]
        rows.append(row)
    columns = ["n", "cdf", "tail"] + (["empirical"] if emp_tail is not None else [])
    meta = {"eps": res["eps"], "absorb": res["absorb"], "ratio": res["ratio"]}
    _emit(ctx, "balanced-cdf", cfg, record={"table": rows, **meta}, rows=rows,
          columns=columns, fmt=format, output=output, meta=meta if format == "csv" else None)


@cli.command("pmf-m")
@params_options
@click.option("--n-max", "n_max", type=int, default=None,
              help="series order; default extends until the residual target")
@click.option("--residual-target", type=RATIONAL, default=1e-10, show_default=True)
@output_options(default_fmt="csv")
@click.pass_context
def pmf_m(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
          n_max, residual_target, format, output):
    """Probability mass of the peak excess of the attack stream."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"n_max": n_max, "residual_target": residual_target, "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/peak-lead/pmf",
                      {"params": payload, "n_max": n_max,
                       "residual_target": residual_target})
    rows = [{"i": i, "e_i": v} for i, v in enumerate(res["pmf"])]
    meta = {"residual": res["residual"], "pole": res["pole"]}
    _emit(ctx, "pmf-m", cfg, record=res, rows=rows, columns=["i", "e_i"],
          fmt=format, output=output, meta=meta if format == "csv" else None)


@cli.group()
def bound():
    """Evaluate one safety-bound family at a given latency."""


def _run_bound(ctx, command, path, payload, cfg, latency, format, output):
    with _client(ctx) as sc:
        res = sc.post(path, payload)
    row = {"latency": latency, **{k: res[k] for k in
           ("value", "raw", "n_star", "truncation", "clamped")}}
    _emit(ctx, command, cfg, record=res, rows=[row],
          columns=["latency", "value", "raw", "n_star", "truncation", "clamped"],
          fmt=format, output=output)


@bound.command("depth-upper")
@params_options
@click.option("-k", "k", type=int, required=True, help="confirmation depth, blocks")
@click.option("--variant", is_flag=True, default=False,
              help="revised-constant variant (untested against the anchor tables)")
@output_options()
@click.pass_context
def bound_depth_upper(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                      k, variant, format, output):
    """Safety-violation upper bound at confirmation depth k."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"k": k, "variant": variant, "format": format})
    _run_bound(ctx, "bound.depth-upper", "/v1/bound/depth-upper",
               {"params": payload, "k": k, "variant": variant}, cfg, k, format, output)


@bound.command("depth-lower")
@params_options
@click.option("-k", "k", type=int, required=True, help="confirmation depth, blocks")
@output_options()
@click.pass_context
def bound_depth_lower(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                      k, format, output):
    """Withholding-attack success rate at depth k (risk is at least this)."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"k": k, "format": format})
    _run_bound(ctx, "bound.depth-lower", "/v1/bound/depth-lower",
               {"params": payload, "k": k}, cfg, k, format, output)


@bound.command("depth-chernoff")
@params_options
@click.option("-k", "k", type=int, required=True, help="confirmation depth, blocks")
@click.option("--variant", is_flag=True, default=False)
@output_options()
@click.pass_context
def bound_depth_chernoff(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                         k, variant, format, output):
    """Closed-form exponential upper bound at depth k."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"k": k, "variant": variant, "format": format})
    _run_bound(ctx, "bound.depth-chernoff", "/v1/bound/depth-chernoff",
               {"params": payload, "k": k, "variant": variant}, cfg, k, format, output)


@bound.command("time-upper")
@params_options
@click.option("-t", "t", type=RATIONAL, required=True, help="confirmation wait, s")
@output_options()
@click.pass_context
def bound_time_upper(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                     t, format, output):
    """Safety-violation upper bound for a time-t confirmation rule."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"t": t, "format": format})
    _run_bound(ctx, "bound.time-upper", "/v1/bound/time-upper",
               {"params": payload, "t": t}, cfg, t, format, output)


@bound.command("time-lower")
@params_options
@click.option("-t", "t", type=RATIONAL, required=True, help="confirmation wait, s")
@output_options()
@click.pass_context
def bound_time_lower(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                     t, format, output):
    """Withholding-attack success rate against a time-t confirmation rule."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"t": t, "format": format})
    _run_bound(ctx, "bound.time-lower", "/v1/bound/time-lower",
               {"params": payload, "t": t}, cfg, t, format, output)


@cli.command("min-depth")
@params_options
@click.option("--q", type=RATIONAL, required=True, help="violation probability budget")
@click.option("--method", type=click.Choice(["finer", "chernoff", "lower"]),
              default="finer", show_default=True)
@click.option("--variant", is_flag=True, default=False)
@click.option("--k-cap", type=int, default=5000, show_default=True)
@output_options()
@click.pass_context
def min_depth_cmd(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                  q, method, variant, k_cap, format, output):
    """Smallest confirmation depth meeting the risk budget."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"q": q, "method": method, "variant": variant, "k_cap": k_cap,
                "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/min-depth", {"params": payload, "q": q, "method": method,
                                        "variant": variant, "k_cap": k_cap})
    row = {"q": q, "method": method, "k": res["k"], "value": res["report"]["value"]}
    _emit(ctx, "min-depth", cfg, record=res, rows=[row],
          columns=["q", "method", "k", "value"], fmt=format, output=output)


@cli.command("min-time")
@params_options
@click.option("--q", type=RATIONAL, required=True, help="violation probability budget")
@click.option("--method", type=click.Choice(["upper", "lower"]),
              default="upper", show_default=True)
@click.option("--rel-tol", type=RATIONAL, default=1e-3, show_default=True)
@output_options()
@click.pass_context
def min_time_cmd(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                 q, method, rel_tol, format, output):
    """Shortest confirmation wait meeting the risk budget."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"q": q, "method": method, "rel_tol": rel_tol, "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/min-time", {"params": payload, "q": q, "method": method,
                                       "rel_tol": rel_tol})
    row = {"q": q, "method": method, "t": res["t"], "value": res["report"]["value"]}
    _emit(ctx, "min-time", cfg, record=res, rows=[row],
          columns=["q", "method", "t", "value"], fmt=format, output=output)


@cli.command("table-depth")
@click.option("--lambda", "total_rate", type=RATIONAL, default=1.0 / 600.0,
              help="total mining rate, blocks/s  [default: 1/600]")
@click.option("--delta", "delay", type=RATIONAL, default=10.0, show_default=True,
              help="propagation delay bound, s")
@click.option("--betas", type=RATIONAL_LIST, default="0.1,0.2,0.3,0.4",
              show_default=True, help="comma-separated attack shares")
@click.option("--target", "q", type=RATIONAL, default=1e-3, show_default=True,
              help="violation probability budget")
@click.option("--variant", is_flag=True, default=False)
@output_options(default_fmt="csv")
@click.pass_context
def table_depth(ctx, total_rate, delay, betas, q, variant, format, output):
    """Minimal confirmation depths per attack share, all bound families."""
    cfg = {"total_rate": total_rate, "delay": delay, "betas": betas, "target": q,
           "variant": variant, "format": format}
    with _client(ctx) as sc:
        rows = sc.post("/v1/table/depth",
                       {"total_rate": total_rate, "delay": delay, "betas": betas,
                        "q": q, "variant": variant})
    _emit(ctx, "table-depth", cfg, record=rows, rows=rows,
          columns=["beta", "q", "k_upper", "k_lower", "k_chernoff"],
          fmt=format, output=output)


@cli.group()
def throughput():
    """Throughput-latency planning under a safety budget."""


@throughput.command("opt")
@click.option("--beta", type=RATIONAL, required=True, help="attack share to tolerate")
@click.option("--r", "link_rate", type=RATIONAL, required=True, help="link rate, KB/s")
@click.option("--nu", "overhead", type=RATIONAL, required=True,
              help="size-independent propagation overhead, s")
@click.option("--q", type=RATIONAL, required=True, help="violation probability budget")
@click.option("--d", "horizon", type=RATIONAL, default=None,
              help="expected-confirmation budget, s (omit for unbounded)")
@click.option("--size-min", type=RATIONAL, default=1.0, show_default=True)
@click.option("--size-max", type=RATIONAL, default=16_000.0, show_default=True)
@click.option("--grid", type=int, default=64, show_default=True)
@click.option("--lam-delta", "lam_delta_fixed", type=RATIONAL, default=None,
              help="pin the fork number instead of searching")
@click.option("--method", type=click.Choice(["chernoff", "finer"]),
              default="chernoff", show_default=True)
@click.option("--variant", is_flag=True, default=False)
@click.option("--frontier", "frontier_path", type=click.Path(dir_okay=False),
              default=None, help="also write the full search grid as CSV")
@output_options()
@click.pass_context
def throughput_opt(ctx, beta, link_rate, overhead, q, horizon, size_min, size_max,
                   grid, lam_delta_fixed, method, variant, frontier_path,
                   format, output):
    """Best sustainable throughput and its confirmation depth."""
    cfg = {"beta": beta, "r": link_rate, "nu": overhead, "q": q, "d": horizon,
           "size_min": size_min, "size_max": size_max, "grid": grid,
           "lam_delta": lam_delta_fixed, "method": method, "variant": variant,
           "format": format}
    payload = {"beta": beta, "link_rate": link_rate, "overhead": overhead, "q": q,
               "horizon": horizon, "size_min": size_min, "size_max": size_max,
               "grid": grid, "lam_delta_fixed": lam_delta_fixed, "method": method,
               "variant": variant, "include_frontier": frontier_path is not None}
    with _client(ctx) as sc:
        res = sc.post("/v1/throughput/optimize", payload)
    frontier_rows = res.pop("frontier", None)
    if frontier_path and frontier_rows is not None:
        rows = [{"lambda": r["mining_rate"], "B": r["size"], "delta_B": r["delay"],
                 "k": r["k"], "p": r["bound"], "throughput": r["throughput"],
                 "feasible": r["feasible"]} for r in frontier_rows]
        Path(frontier_path).write_text(_csv_text(
            "throughput.opt.frontier", cfg,
            ["lambda", "B", "delta_B", "k", "p", "throughput", "feasible"], rows))
    row = {k: res[k] for k in ("throughput", "mining_rate", "size", "delay",
                               "lam_delta", "k", "rate_cap")}
    _emit(ctx, "throughput.opt", cfg, record=res, rows=[row],
          columns=list(row), fmt=format, output=output)


@cli.group()
def simulate():
    """Monte-Carlo runs of the mining model."""


def sim_options(f):
    decorators = [
        click.option("--trials", type=int, default=10_000, show_default=True),
        click.option("--horizon", type=RATIONAL, default=1e6, show_default=True,
                     help="simulated seconds per trial"),
        click.option("--warmup", type=RATIONAL, default=None,
                     help="pre-attack walk length, s; default derives from the rates"),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--stop-margin", type=int, default=60, show_default=True),
    ]
    for deco in reversed(decorators):
        f = deco(f)
    return f


def _sim_payload(payload_params, trials, horizon, warmup, seed, stop_margin):
    return {"params": payload_params, "trials": trials, "horizon": horizon,
            "warmup": warmup, "seed": seed, "stop_margin": stop_margin}


def _hist_rows(res):
    total = res["trials"]
    rows = []
    for key in sorted(res["counts"], key=int):
        n = res["counts"][key]
        rows.append({"value": int(key), "count": n, "p_hat": n / total})
    return rows


@simulate.command("max-diff")
@params_options
@sim_options
@output_options(default_fmt="csv")
@click.pass_context
def simulate_max_diff(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                      trials, horizon, warmup, seed, stop_margin, format, output):
    """Histogram of the peak excess of the attack stream over pacers."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"trials": trials, "horizon": horizon, "warmup": warmup, "seed": seed,
                "stop_margin": stop_margin, "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/simulate/max-diff",
                      _sim_payload(payload, trials, horizon, warmup, seed, stop_margin))
    meta = {"trials": res["trials"], "truncated_trials": res["truncated_trials"]}
    _emit(ctx, "simulate.max-diff", cfg, record=res, rows=_hist_rows(res),
          columns=["value", "count", "p_hat"], fmt=format, output=output,
          meta=meta if format == "csv" else None)


@simulate.command("lead")
@params_options
@sim_options
@output_options(default_fmt="csv")
@click.pass_context
def simulate_lead(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                  trials, horizon, warmup, seed, stop_margin, format, output):
    """Histogram of the withholding lead after the warmup walk."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"trials": trials, "horizon": horizon, "warmup": warmup, "seed": seed,
                "stop_margin": stop_margin, "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/simulate/lead",
                      _sim_payload(payload, trials, horizon, warmup, seed, stop_margin))
    meta = {"trials": res["trials"], "truncated_trials": res["truncated_trials"]}
    _emit(ctx, "simulate.lead", cfg, record=res, rows=_hist_rows(res),
          columns=["value", "count", "p_hat"], fmt=format, output=output,
          meta=meta if format == "csv" else None)


def _lead_arg(lead_dist, lead):
    if lead_dist == "fixed":
        if lead is None:
            raise click.UsageError("--lead-dist fixed needs --lead")
        return lead
    return lead_dist


@simulate.command("attack-depth")
@params_options
@click.option("-k", "k", type=int, required=True, help="confirmation depth, blocks")
@click.option("--lead-dist", type=click.Choice(["warmup", "geometric", "fixed"]),
              default="warmup", show_default=True,
              help="how the pre-attack lead is initialized")
@click.option("--lead", type=int, default=None, help="lead value for --lead-dist fixed")
@sim_options
@output_options()
@click.pass_context
def simulate_attack_depth(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                          k, lead_dist, lead, trials, horizon, warmup, seed,
                          stop_margin, format, output):
    """Monte-Carlo success rate of the withholding attack at depth k."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"k": k, "lead_dist": lead_dist, "lead": lead, "trials": trials,
                "horizon": horizon, "warmup": warmup, "seed": seed,
                "stop_margin": stop_margin, "format": format})
    body = _sim_payload(payload, trials, horizon, warmup, seed, stop_margin)
    body.update({"k": k, "lead": _lead_arg(lead_dist, lead)})
    with _client(ctx) as sc:
        res = sc.post("/v1/simulate/attack-depth", body)
    row = {"k": k, "p_hat": res["p_hat"], "ci_lo": res["ci95"][0],
           "ci_hi": res["ci95"][1], "successes": res["successes"],
           "trials": res["trials"], "truncated_trials": res["truncated_trials"]}
    _emit(ctx, "simulate.attack-depth", cfg, record=res, rows=[row],
          columns=list(row), fmt=format, output=output)


@simulate.command("attack-time")
@params_options
@click.option("-t", "t", type=RATIONAL, required=True, help="confirmation wait, s")
@click.option("--lead-dist", type=click.Choice(["warmup", "geometric", "fixed"]),
              default="warmup", show_default=True)
@click.option("--lead", type=int, default=None, help="lead value for --lead-dist fixed")
@sim_options
@output_options()
@click.pass_context
def simulate_attack_time(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                         t, lead_dist, lead, trials, horizon, warmup, seed,
                         stop_margin, format, output):
    """Monte-Carlo success rate of the withholding attack at wait t."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay)
    cfg.update({"t": t, "lead_dist": lead_dist, "lead": lead, "trials": trials,
                "horizon": horizon, "warmup": warmup, "seed": seed,
                "stop_margin": stop_margin, "format": format})
    body = _sim_payload(payload, trials, horizon, warmup, seed, stop_margin)
    body.update({"t": t, "lead": _lead_arg(lead_dist, lead)})
    with _client(ctx) as sc:
        res = sc.post("/v1/simulate/attack-time", body)
    row = {"t": t, "p_hat": res["p_hat"], "ci_lo": res["ci95"][0],
           "ci_hi": res["ci95"][1], "successes": res["successes"],
           "trials": res["trials"], "truncated_trials": res["truncated_trials"]}
    _emit(ctx, "simulate.attack-time", cfg, record=res, rows=[row],
          columns=list(row), fmt=format, output=output)


@simulate.command("invariants")
@params_options
@click.option("--events", type=int, default=1_000_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options()
@click.pass_context
def simulate_invariants(ctx, adv_rate, hon_rate, total_rate, adv_fraction, delay,
                        events, seed, format, output):
    """Jumper/pacer height invariant over a simulated honest stream."""
    payload, cfg = build_params(adv_rate, hon_rate, total_rate, adv_fraction, delay,
                                default_beta=0.0)
    cfg.update({"events": events, "seed": seed, "format": format})
    with _client(ctx) as sc:
        res = sc.post("/v1/simulate/invariants",
                      {"params": payload, "events": events, "seed": seed})
    _emit(ctx, "simulate.invariants", cfg, record=res, rows=[res],
          columns=["events", "jumpers", "pacers", "violations", "exact_match"],
          fmt=format, output=output)


@cli.group()
def sweep():
    """Grid sweeps emitting one CSV row per point."""


def _parse_bounds(text, allowed):
    names = [p.strip() for p in str(text).split(",") if p.strip()]
    bad = [n for n in names if n not in allowed]
    if bad:
        raise click.UsageError(f"unknown bound(s) {bad}; pick from {sorted(allowed)}")
    if not names:
        raise click.UsageError("empty --bounds")
    return names


@sweep.command("depth")
@click.option("--lambda", "total_rate", type=RATIONAL, default=1.0 / 600.0,
              help="total mining rate, blocks/s  [default: 1/600]")
@click.option("--delta", "delay", type=RATIONAL, default=10.0, show_default=True)
@click.option("--betas", type=RATIONAL_LIST, default="0.1,0.2,0.3",
              show_default=True)
@click.option("--k", "k_spec", type=INT_RANGE, default="1:60", show_default=True,
              help="depth grid, start:stop[:step]")
@click.option("--bounds", default="upper,lower,chernoff", show_default=True,
              help="which bound families to evaluate")
@click.option("--variant", is_flag=True, default=False)
@output_options(default_fmt="csv")
@click.pass_context
def sweep_depth(ctx, total_rate, delay, betas, k_spec, bounds, variant, format, output):
    """Bound values across a (attack share, depth) grid."""
    names = _parse_bounds(bounds, {"upper", "lower", "chernoff"})
    cfg = {"total_rate": total_rate, "delay": delay, "betas": betas,
           "k": k_spec.text, "bounds": ",".join(names), "variant": variant,
           "format": format}
    paths = {"upper": "/v1/bound/depth-upper", "lower": "/v1/bound/depth-lower",
             "chernoff": "/v1/bound/depth-chernoff"}
    rows = []
    with _client(ctx) as sc:
        for beta in betas:
            params = {"total_rate": total_rate, "adv_fraction": beta, "delay": delay}
            for k in k_spec.values:
                row = {"beta": beta, "k": k}
                for name in names:
                    body = {"params": params, "k": k}
                    if name in ("upper", "chernoff"):
                        body["variant"] = variant
                    row[name] = sc.post(paths[name], body)["value"]
                rows.append(row)
    _emit(ctx, "sweep.depth", cfg, record=rows, rows=rows,
          columns=["beta", "k"] + names, fmt=format, output=output)


@sweep.command("time")
@click.option("--lambda", "total_rate", type=RATIONAL, default=1.0 / 600.0,
              help="total mining rate, blocks/s  [default: 1/600]")
@click.option("--delta", "delay", type=RATIONAL, default=10.0, show_default=True)
@click.option("--beta", type=RATIONAL, default=0.25, show_default=True)
@click.option("--t", "t_spec", type=FLOAT_RANGE, required=True,
              help="confirmation waits, start:stop:step seconds")
@click.option("--bounds", default="upper,lower", show_default=True)
@output_options(default_fmt="csv")
@click.pass_context
def sweep_time(ctx, total_rate, delay, beta, t_spec, bounds, format, output):
    """Bound values across a confirmation-wait grid."""
    names = _parse_bounds(bounds, {"upper", "lower"})
    cfg = {"total_rate": total_rate, "delay": delay, "beta": beta,
           "t": t_spec.text, "bounds": ",".join(names), "format": format}
    paths = {"upper": "/v1/bound/time-upper", "lower": "/v1/bound/time-lower"}
    params = {"total_rate": total_rate, "adv_fraction": beta, "delay": delay}
    rows = []
    with _client(ctx) as sc:
        for t in t_spec.values:
            row = {"t": t}
            for name in names:
                row[name] = sc.post(paths[name], {"params": params, "t": t})["value"]
            rows.append(row)
    _emit(ctx, "sweep.time", cfg, record=rows, rows=rows,
          columns=["t"] + names, fmt=format, output=output)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, prog_name="naklab")
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code or 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except ParameterError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except DomainError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
