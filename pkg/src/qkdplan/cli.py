"""Command-line front end.

Exit codes: 0 success, 1 domain problem (insecure link, infeasible switch
count, no secure working point), 2 unreadable input or bad arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from typing import Sequence

from . import __version__
from .backbone import CostModel, NetworkSpec, plan
from .blockqber import block_qber_files
from .devices import load_candidates, optimize, sweep_mu
from .netfile import NetworkFile, NetworkFileError, load
from .secrecy import evaluate_link

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2


class DomainError(Exception):
    pass


class InputError(Exception):
    pass


def _fmt(x: float, digits: int) -> str:
    return f"{x:.{digits}f}"


def _csv_num(x: float) -> str:
    return f"{x:.6g}"


def render(header: Sequence[str], rows: Sequence[Sequence[str]], fmt: str, comments: Sequence[str] = ()) -> str:
    """Aligned text table or CSV; ``comments`` become leading ``#`` lines."""
    out = io.StringIO()
    for c in comments:
        out.write(f"# {c}\n")
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return out.getvalue()
    columns = list(zip(header, *rows))
    widths = [max(len(str(v)) for v in col) for col in columns]
    numeric = [bool(rows) and all(_is_number(v) for v in col[1:]) for col in columns]
    for line in [header, *rows]:
        cells = [str(v).rjust(w) if num else str(v).ljust(w)
                 for v, w, num in zip(line, widths, numeric)]
        out.write("  ".join(cells).rstrip() + "\n")
    return out.getvalue()


def _is_number(v) -> bool:
    if v == "":
        return True
    try:
        float(v)
    except ValueError:
        return False
    return True


def _model_options(args) -> dict:
    return {"dark_half_credit": args.dark_half_credit}


def _link_results(net: NetworkFile, options: dict):
    """(entry, rates or None, secrecy or None) for every link."""
    for entry in net.links:
        if entry.is_physical:
            rates, sec = evaluate_link(net.detector_for(entry), entry.budget, net.protocol, **options)
            yield entry, rates, sec
        else:
            yield entry, None, None


def secret_rates_kbit(net: NetworkFile, options: dict) -> list[float]:
    return [
        entry.rate_kbit_s if sec is None else sec.r_sec / 1e3
        for entry, _, sec in _link_results(net, options)
    ]


def cmd_link_rate(args) -> tuple[str, int]:
    net = load(args.input)
    entries = list(_link_results(net, _model_options(args)))
    if args.link:
        i, _ = net.link(args.link)
        entries = [entries[i]]
    digits = 2 if args.format == "table" else None
    num = (lambda x: _fmt(x, digits)) if digits else _csv_num

    header = ["link", "length_km", "loss_db", "sifted_kbit_s", "qber_pct", "secret_kbit_s", "flag"]
    rows, warnings = [], []
    for entry, rates, sec in entries:
        if sec is None:
            rows.append([entry.name, "", "", "", "", num(entry.rate_kbit_s), ""])
            continue
        flag = sec.flag or ""
        if flag:
            warnings.append(f"warning: link {entry.name}: {flag}, secret rate is 0")
        rows.append([
            entry.name,
            num(entry.length_km), num(entry.loss_db),
            num(rates.r_sift / 1e3), num(rates.qber * 100), num(sec.r_sec / 1e3),
            flag,
        ])
    comments = [f"network: {net.name}"] if net.name else []
    for w in warnings:
        print(w, file=sys.stderr)
    return render(header, rows, args.format, comments), EXIT_DOMAIN if warnings else EXIT_OK


def _parse_k(text: str) -> list[int]:
    values: list[int] = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    return values


def _parse_costs(text: str) -> CostModel:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError("expected ALICE,BOB,SWITCH")
    return CostModel(*parts)


def cmd_plan(args) -> tuple[str, int]:
    net = load(args.input)
    rates = secret_rates_kbit(net, _model_options(args))
    insecure = [e.name for e, r in zip(net.links, rates) if r <= 0]
    if insecure:
        raise DomainError(f"no secret key on link(s) {', '.join(insecure)}; cannot plan")
    network = NetworkSpec(net.nodes, rates)
    k_values = args.k if args.k is not None else list(net.k_values) or list(range(len(net.nodes) - 1))
    costs = args.costs if args.costs is not None else net.costs
    locked = list(net.locked_full) + list(args.lock)
    try:
        report = plan(network, costs, k_values, locked,
                      switch_overhead=args.switch_overhead, cycle_period=args.switch_cycle)
    except ValueError as exc:
        raise DomainError(str(exc)) from None

    table = args.format == "table"
    num = (lambda x: _fmt(x, 2)) if table else _csv_num
    header = ["k", "rate_kbit_s", "n_alice", "n_bob", "n_total", "cost",
              "rate_ratio", "cost_ratio", "n_optimal", "switch_nodes", "implementation"]
    rows = [
        [str(r.k), num(r.rate), str(r.n_alice), str(r.n_bob), str(r.n_total), num(r.cost),
         num(r.rate_ratio), num(r.cost_ratio), str(len(r.configurations)),
         ";".join(r.switch_nodes(network)) or "-", r.implementation.render()]
        for r in report.rows
    ]
    comments = []
    if net.name:
        comments.append(f"network: {net.name}")
    comments.append("link rates kbit/s: " + " ".join(_fmt(r, 2) for r in rates))
    comments.append(f"costs: alice={costs.alice:g} bob={costs.bob:g} switch={costs.switch:g}")
    comments.append("single-switch pair rates kbit/s: "
                    + " ".join(f"{name}={_fmt(v, 2)}" for name, v in report.pair_rates))
    return render(header, rows, args.format, comments), EXIT_OK


def _mu_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or hi < lo or lo <= 0:
        raise InputError("mu grid needs 0 < mu-min <= mu-max and a positive step")
    n = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def cmd_sweep(args) -> tuple[str, int]:
    net = load(args.input)
    _, entry = net.link(args.link or "1")
    if not entry.is_physical:
        raise DomainError(f"link {entry.name} has no physical parameters to sweep")
    grid = _mu_grid(args.mu_min, args.mu_max, args.mu_step)
    det = net.detector_for(entry)
    options = _model_options(args)
    num = (lambda x: _fmt(x, 4)) if args.format == "table" else _csv_num

    comments = [f"link: {entry.name}"]
    if args.candidates:
        try:
            candidates = load_candidates(args.candidates)
        except OSError as exc:
            raise InputError(f"{args.candidates}: {exc.strerror}") from None
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if not candidates:
            raise InputError(f"{args.candidates}: candidate file is empty")
        res = optimize(candidates, det, entry.budget, net.protocol, grid, **options)
        header = ["mu", "r_sec_fixed_kbit_s", "r_sec_opt_kbit_s", "best_candidate"]
        rows = [[num(p.mu), num(p.r_sec_fixed / 1e3), num(p.r_sec_optimized / 1e3), p.best_label]
                for p in res.sweep]
        fixed = [(p.r_sec_fixed, p.mu) for p in res.sweep]
        comments.append(
            f"optimum: {res.best_candidate.label or 'candidate'} mu={res.best_mu:g} "
            f"r_sec={_fmt(res.r_sec / 1e3, 4)} kbit/s"
        )
        status = EXIT_DOMAIN if res.no_secure_point else EXIT_OK
    else:
        fixed = [(r, mu) for mu, r in sweep_mu(det, entry.budget, net.protocol, grid, **options)]
        header = ["mu", "r_sec_fixed_kbit_s"]
        rows = [[num(mu), num(r / 1e3)] for r, mu in fixed]
        status = EXIT_OK
    best_r, best_mu = max(fixed, key=lambda t: (t[0], -t[1]))
    comments.insert(1, f"fixed detector maximum: mu={best_mu:g} r_sec={_fmt(best_r / 1e3, 4)} kbit/s")
    return render(header, rows, args.format, comments), status


def cmd_block_qber(args) -> tuple[str, int]:
    try:
        series = block_qber_files(args.alice, args.bob, args.block_size)
    except OSError as exc:
        raise InputError(f"{exc.filename}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    num = (lambda x: _fmt(x, 5)) if args.format == "table" else _csv_num
    header = ["block", "errors", "bits", "qber"]
    rows = [[str(i + 1), str(e), str(b), num(e / b)]
            for i, (e, b) in enumerate(zip(series.errors, series.bits))]
    comments = [
        f"block_size_bytes: {series.block_size_bytes}",
        f"blocks: {len(rows)} mean_qber: {num(series.mean)} max_qber: {num(series.max)}",
    ]
    return render(header, rows, args.format, comments), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default="-", help="output file, '-' for stdout")
    common.add_argument("--format", choices=("table", "csv"), default="table")
    common.add_argument("--dark-half-credit", action="store_true",
                        help="count only half of the dark clicks as errors")

    parser = argparse.ArgumentParser(prog="qkdplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("link-rate", parents=[common], help="sifted/secret rate and QBER per link")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--link", help="1-based index, 'From-To' name or start node")
    p.set_defaults(func=cmd_link_rate)

    p = sub.add_parser("plan", parents=[common], help="switch placement and cheapest assignment")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--k", type=_parse_k, help="switch counts, e.g. '3', '0,3-6'")
    p.add_argument("--costs", type=_parse_costs, help="ALICE,BOB,SWITCH unit costs")
    p.add_argument("--lock", action="append", default=[], metavar="NODE",
                   help="keep NODE a full node (repeatable)")
    p.add_argument("--switch-overhead", type=float, default=0.0, metavar="S",
                   help="seconds lost per switch toggle")
    p.add_argument("--switch-cycle", type=float, default=1.0, metavar="S",
                   help="seconds per odd/even cycle (two toggles)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", parents=[common], help="secret rate versus mean photon number")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--link")
    p.add_argument("--mu-min", type=float, default=0.01)
    p.add_argument("--mu-max", type=float, default=1.5)
    p.add_argument("--mu-step", type=float, default=0.01)
    p.add_argument("--candidates", help="detector candidate CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("block-qber", parents=[common], help="QBER per block of a sifted key pair")
    p.add_argument("--alice", required=True, help="Alice's sifted key, packed bits")
    p.add_argument("--bob", required=True, help="Bob's sifted key, packed bits")
    p.add_argument("--block-size", type=int, default=5000, help="block length in bytes")
    p.set_defaults(func=cmd_block_qber)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, status = args.func(args)
    except (NetworkFileError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        # argument-level problems surfacing from the model (bad grid, sizes)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.output == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: {args.output}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    return status


if __name__ == "__main__":
    sys.exit(main())
