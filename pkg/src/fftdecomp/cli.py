"""Command-line entry point: ``fftdecomp plan|analyze|compare|simulate``.

Exit codes: 0 success, 1 simulated traffic or accuracy mismatch, 2 invalid
configuration, 3 infeasible parallelism (a rank would split a 1-D FFT line).

Random inputs and sequence samples use numpy's PCG64 generator seeded with
``--seed``, so every output is byte-identical for identical flags.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from fractions import Fraction

import click
import numpy as np

from .commcost import (
    RANK_MATCHINGS,
    SEARCH_RANK_MATCHING,
    analyze_patterns,
    baseline_methods_for,
    compare_report,
    divisor_np_grid,
    hop_costs,
)
from .exceptions import (
    CapacityError,
    DecompositionError,
    InfeasibleParallelismError,
    MethodInapplicableError,
    NoCatalogError,
)
from .fftcore import dft_md, max_relative_error
from .layout import DecompContext, Shape, bracket, rank_corner_coords, rank_ranges
from .orders import parse_sequence
from .simulator import run_parallel_fft

EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

TOLERANCE = 1e-9
POINT_BYTES = 16  # one double-precision complex value


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


def parse_np_list(text: str) -> list[int]:
    """Parse ``"2,4,8"``; ``"2,4,...,64"`` expands a geometric or arithmetic run."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty process-count list")
    out: list[int] = []
    i = 0
    while i < len(parts):
        if parts[i] == "...":
            if len(out) < 2 or i + 1 >= len(parts):
                raise ValueError("'...' needs two values before it and one after")
            a, b, end = out[-2], out[-1], int(parts[i + 1])
            if b % a == 0 and b // a > 1:
                step = b // a
                v = b * step
                while v < end:
                    out.append(v)
                    v *= step
            else:
                d = b - a
                if d <= 0:
                    raise ValueError("'...' needs an increasing run")
                out.extend(range(b + d, end, d))
            i += 1
            continue
        out.append(int(parts[i]))
        i += 1
    if any(p < 1 for p in out):
        raise ValueError("process counts must be positive")
    return out


def _shape_from(shape: str | None, m: int | None, n: int | None) -> Shape:
    if shape:
        s = Shape.parse(shape)
        if m is not None and m != s.m:
            raise ValueError(f"--m {m} does not match --shape {shape}")
        return s
    if m is None or n is None:
        raise ValueError("give --shape, or both --m and --n")
    return Shape.cube(n, m)


def _np_values(text: str | None, shape: Shape) -> list[int]:
    if text is None:
        return [p for p in divisor_np_grid(shape) if p > 1]
    values = parse_np_list(text)
    for p in values:
        if p > shape.total:
            raise ValueError(f"np={p} exceeds the {shape.total} data points of shape {shape}")
    return values


def _run(fn):
    """Call ``fn`` and map library errors to exit codes."""
    try:
        return fn()
    except InfeasibleParallelismError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    except (DecompositionError, CapacityError, NoCatalogError,
            MethodInapplicableError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise ConfigError(str(msg)) from None


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _fmt_amount(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        v = float(v)
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _fmt_ratio(r) -> str:
    if r is None:
        return "n/a"
    return "inf" if r == float("inf") else f"{float(r):.4f}"


def _scaled(v, unit: str):
    if v is None or unit == "points":
        return v
    return v * POINT_BYTES


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Row-wise decomposition planner and communication model for parallel M-D FFTs.

    Layouts are letter strings listing axes from slowest to fastest ("cab");
    orders are comma-separated layouts starting with the identity
    ("abc,cab,cba"). Exit codes: 0 ok, 1 simulation mismatch, 2 invalid
    configuration, 3 infeasible parallelism.
    """


@main.command()
@click.option("--shape", required=True, help="Dimension sizes, e.g. 4,4,4.")
@click.option("--order", required=True, help="Transpose order, e.g. abc,cab,cba.")
@click.option("--np", "np_", required=True, type=int, help="Number of processes.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write JSON here.")
def plan(shape, order, np_, output):
    """Per-rank index ranges and corner coordinates for every layout (JSON).

    Corner coordinates are listed in layout order; empty ranks have null corners.
    """
    def build():
        s = Shape.parse(shape)
        seq = parse_sequence(order, s.m)
        layouts = []
        for lay in seq.layouts:
            ctx = DecompContext(s, lay, np_)
            ranks = []
            for r, rr in enumerate(rank_ranges(ctx)):
                corners = rank_corner_coords(ctx, r)
                ranks.append({
                    "rank": r,
                    "start": rr.start,
                    "end": rr.end,
                    "size": rr.size,
                    "first": None if corners is None else list(corners[0]),
                    "last": None if corners is None else list(corners[1]),
                })
            layouts.append({
                "layout": str(lay),
                "fft_axis": str(lay)[-1],
                "split_axes": bracket(s, lay, np_),
                "ranks": ranks,
            })
        doc = {"shape": list(s.dims), "np": np_, "order": str(seq), "layouts": layouts}
        return json.dumps(doc, indent=2) + "\n"

    _emit(_run(build), output)


@main.command()
@click.option("--m", type=int, help="Number of dimensions (with --n for cubic data).")
@click.option("--n", type=int, help="Size of every dimension.")
@click.option("--shape", help="Explicit dimension sizes instead of --m/--n.")
@click.option("--np", "np_text", help="Process counts, e.g. 2,4,8 or 2,4,...,64. "
              "Default: powers of two dividing the data size.")
@click.option("--exhaustive", is_flag=True, help="Evaluate all sequences for m=5 (slow).")
@click.option("--sample", type=int, default=10000, show_default=True,
              help="Sampled sequences for m=5 without --exhaustive.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--rank-matching", type=click.Choice(RANK_MATCHINGS),
              default=SEARCH_RANK_MATCHING, show_default=True,
              help="How destination blocks are assigned to ranks at each transpose.")
@click.option("--include-restore", is_flag=True,
              help="Count the final transpose back to natural order.")
@click.option("--output", "-o", type=click.Path(dir_okay=False))
def analyze(m, n, shape, np_text, exhaustive, sample, seed, rank_matching,
            include_restore, output):
    """Group transpose orders into patterns by communication amount (CSV).

    \b
    Columns: pattern, members, representative, then one amount column per
    process count (np_<p>, data points). Patterns are sorted by total amount.
    The last row, pattern "ratio", holds the worst/best quotient per np.
    """
    def build():
        s = _shape_from(shape, m, n)
        nps = _np_values(np_text, s)
        rep = analyze_patterns(
            s, s.m, nps, exhaustive=exhaustive, sample=sample, seed=seed,
            include_final_restore=include_restore, rank_matching=rank_matching,
            member_limit=1,
        )
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pattern", "members", "representative"] + [f"np_{p}" for p in nps])
        for i, prof in enumerate(rep.profiles, start=1):
            key = prof.amounts
            w.writerow([f"P{i}", rep.sizes[key], str(rep.groups[key][0])] + list(key))
        w.writerow(["ratio", "", ""] + [_fmt_ratio(rep.ratios[p]) for p in nps])
        return buf.getvalue()

    _emit(_run(build), output)


@main.command()
@click.option("--m", type=int, required=True, help="3, 4 or 5.")
@click.option("--n", type=int, required=True, help="Size of every dimension.")
@click.option("--np", "np_text", help="Process counts, e.g. 2,4,...,262144. "
              "Default: powers of two up to n**m.")
@click.option("--order", help="Order to score (default: a catalog best order).")
@click.option("--rank-matching", type=click.Choice(RANK_MATCHINGS),
              default=SEARCH_RANK_MATCHING, show_default=True)
@click.option("--include-restore", is_flag=True)
@click.option("--unit", type=click.Choice(["points", "bytes"]), default="points",
              show_default=True, help="bytes assumes 16-byte complex values.")
@click.option("--output", "-o", type=click.Path(dir_okay=False))
def compare(m, n, np_text, order, rank_matching, include_restore, unit, output):
    """Our order against closed-form baselines (CSV).

    \b
    Columns: np, ours, A_<method> per applicable baseline, then
    ratio_<method> = baseline / ours with 4 decimals. Cells beyond a
    method's process limit read "n/a".
    """
    def build():
        if m not in (3, 4, 5):
            raise ValueError(f"compare supports m in 3..5, got {m}")
        s = Shape.cube(n, m)
        nps = _np_values(np_text, s)
        seq = parse_sequence(order, m) if order else None
        rows = compare_report(n, m, nps, seq, include_restore, rank_matching)
        methods = baseline_methods_for(m)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["np", "ours"] + [f"A_{k}" for k in methods]
                   + [f"ratio_{k}" for k in methods])
        for r in rows:
            w.writerow(
                [r.np, _fmt_amount(_scaled(r.ours, unit))]
                + [_fmt_amount(_scaled(r.baselines[k], unit)) for k in methods]
                + [_fmt_ratio(r.ratio(k)) for k in methods]
            )
        return buf.getvalue()

    _emit(_run(build), output)


@main.command()
@click.option("--shape", required=True)
@click.option("--order", required=True)
@click.option("--np", "np_", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restore", is_flag=True, help="Transpose the output back to natural order.")
@click.option("--rank-matching", type=click.Choice(RANK_MATCHINGS),
              default="identity", show_default=True)
def simulate(shape, order, np_, seed, restore, rank_matching):
    """Run the parallel FFT on simulated ranks and check it against the model.

    Prints the maximum relative error against a direct DFT and, per
    transpose, the measured traffic next to the modeled amount (MATCH or
    MISMATCH).
    """
    def run():
        s = Shape.parse(shape)
        seq = parse_sequence(order, s.m)
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(s.total) + 1j * rng.standard_normal(s.total)
        out, ledger = run_parallel_fft(s, seq, np_, x, restore_output=restore,
                                       rank_matching=rank_matching)
        model = hop_costs(s, seq, np_, restore, rank_matching=rank_matching)
        return max_relative_error(out, dft_md(s.dims, x)), ledger, model

    err, ledger, model = _run(run)
    ok = err <= TOLERANCE
    click.echo(f"shape {shape}  order {order}  np {np_}  seed {seed}")
    click.echo(f"max relative error {err:.3e} ({'ok' if ok else 'FAIL'}, tolerance {TOLERANCE:g})")
    for k, (hop, want) in enumerate(zip(ledger.hops, model), start=1):
        verdict = "MATCH" if hop.total == want else "MISMATCH"
        ok &= hop.total == want
        click.echo(f"hop {k} {hop.src}->{hop.dst}: measured {hop.total} model {want} {verdict}")
    click.echo(f"total traffic {ledger.total} points")
    if not ok:
        sys.exit(EXIT_MISMATCH)


if __name__ == "__main__":  # pragma: no cover
    main()
