"""Command-line entry points (the `rankinfer` console script).

Exit codes: 0 success, 2 input/parse error, 3 statistical-domain error,
4 internal error.
"""
from __future__ import annotations

import os
import sys

import click
import numpy as np

from .. import __version__
from ..errors import DomainError, FormulaError, InputError, RankInferError
from ..multinomcs import MultinomialCounts, cs_ranks_multinomial
from ..rankcs import (
    BootstrapConfig,
    EstimatesWithCovariance,
    cs_ranks,
    cs_tau_best,
    cs_tau_worst,
)
from ..ranking import TieRule, frank, frank_against, irank, irank_against
from ..rankreg import (
    RankRegressionModel,
    confint,
    corrected_vcov,
    fit,
    format_formula_error,
    summarize,
)
from .envelope import OutputEnvelope, input_digest, render_csv
from .io import decode, parse_table, read_bytes, read_covariance, write_text
from .svg import interval_chart

_SEED_MAX = 2**64 - 1


def _common_io(fn):
    fn = click.option(
        "--input",
        "-i",
        "input_path",
        default="-",
        show_default=True,
        help="Input CSV path, or - for stdin.",
    )(fn)
    fn = click.option(
        "--output",
        "-o",
        "output_path",
        default=None,
        help="Write result here (atomic temp+rename) instead of stdout.",
    )(fn)
    fn = click.option(
        "--format",
        "out_format",
        type=click.Choice(["json", "csv"]),
        default="json",
        show_default=True,
        help="JSON envelope or bare CSV table.",
    )(fn)
    return fn


def _coverage_option(fn):
    return click.option(
        "--coverage",
        type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
        default=0.95,
        show_default=True,
    )(fn)


def _resolve_seed(seed: int | None) -> int:
    # no --seed: derive one from OS entropy and record it in the envelope
    if seed is None:
        return int.from_bytes(os.urandom(8), "big")
    return seed


def _parse_indices(spec: str | None, p: int) -> tuple[int, ...] | None:
    if spec is None:
        return None
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            k = int(part)
        except ValueError:
            raise click.UsageError(f"--indices must be integers, got {part!r}")
        if not 1 <= k <= p:
            raise click.UsageError(f"--indices entry {k} outside 1..{p}")
        out.append(k - 1)
    if not out:
        raise click.UsageError("--indices is empty")
    return tuple(out)


def _label_values(table, label_col: str | None, p: int) -> list[str]:
    if label_col is None:
        return [str(k + 1) for k in range(p)]
    values = [str(v) for v in table.raw(label_col)]
    if len(values) != p:
        raise InputError(
            f"label column {label_col!r} has {len(values)} rows, expected {p}"
        )
    return values


def _emit(envelope, out_format, output_path, csv_header, csv_rows):
    if out_format == "json":
        write_text(output_path, envelope.to_json())
        return
    for warning in envelope.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    write_text(output_path, render_csv(csv_header, csv_rows))


@click.group(name="rankinfer")
@click.version_option(__version__, prog_name="rankinfer")
def cli():
    """Confidence sets for ranks and regressions on ranked variables."""


@cli.command("ranks")
@_common_io
@click.option("--column", required=True, help="Numeric column to rank.")
@click.option(
    "--omega",
    type=click.FloatRange(0.0, 1.0),
    default=0.0,
    show_default=True,
    help="Tie handling: 0 counts strict predecessors only, 1 counts ties too.",
)
@click.option(
    "--increasing/--decreasing",
    "increasing",
    default=False,
    help="Rank direction; default ranks the largest value 1.",
)
@click.option(
    "--against",
    default=None,
    help="Rank --column within this reference column instead of within itself.",
)
@click.option("--label", "label_col", default=None, help="Column with row names.")
def cmd_ranks(input_path, output_path, out_format, column, omega, increasing, against, label_col):
    """Integer and fractional ranks of one column."""
    raw = read_bytes(input_path)
    table = parse_table(decode(raw))
    values = table.numeric(column)
    rule = TieRule(omega, "increasing" if increasing else "decreasing")
    if against is not None:
        reference = table.numeric(against)
        ivals = irank_against(values, reference, rule).values
        fvals = frank_against(values, reference, rule).values
    else:
        ivals = irank(values, rule).values
        fvals = frank(values, rule).values
    labels = _label_values(table, label_col, len(values))
    results = {
        "column": column,
        "omega": omega,
        "direction": "increasing" if increasing else "decreasing",
        "labels": labels,
        "values": [float(v) for v in values],
        "irank": [float(v) for v in ivals],
        "frank": [float(v) for v in fvals],
    }
    envelope = OutputEnvelope(
        procedure="ranks",
        input_digest=input_digest(raw),
        seed=None,
        coverage=None,
        results=results,
    )
    rows = [
        [k + 1, labels[k], float(values[k]), float(ivals[k]), float(fvals[k])]
        for k in range(len(values))
    ]
    _emit(envelope, out_format, output_path, ["index", "label", "value", "irank", "frank"], rows)


def _load_estimates(input_path, estimates_col, se_col, cov_path, label_col):
    """Shared loader for the Gaussian commands; returns (est, digest, labels)."""
    if (se_col is None) == (cov_path is None):
        raise click.UsageError("provide exactly one of --se or --cov")
    raw = read_bytes(input_path)
    table = parse_table(decode(raw))
    theta = table.numeric(estimates_col)
    labels = _label_values(table, label_col, len(theta))
    if se_col is not None:
        se = table.numeric(se_col)
        if np.any(se <= 0):
            raise DomainError(f"column {se_col!r} must be positive standard errors")
        sigma = np.diag(se**2)
        digest = input_digest(raw)
    else:
        cov_raw = read_bytes(cov_path)
        sigma = read_covariance(decode(cov_raw), len(theta))
        digest = input_digest(raw, cov_raw)
    est = EstimatesWithCovariance(theta, sigma, labels=tuple(labels))
    return est, digest, labels


def _gaussian_options(fn):
    fn = click.option("--estimates", "estimates_col", required=True, help="Point-estimate column.")(fn)
    fn = click.option("--se", "se_col", default=None, help="Standard-error column (diagonal covariance).")(fn)
    fn = click.option("--cov", "cov_path", default=None, help="CSV file with the full covariance matrix.")(fn)
    fn = click.option(
        "--draws",
        type=click.IntRange(min=1),
        default=1000,
        show_default=True,
        help="Parametric bootstrap draws.",
    )(fn)
    fn = click.option(
        "--seed",
        type=click.IntRange(0, _SEED_MAX),
        default=None,
        help="RNG seed; omitted, one is drawn from OS entropy and recorded.",
    )(fn)
    fn = click.option("--label", "label_col", default=None, help="Column with population names.")(fn)
    return fn


@cli.command("cs-ranks")
@_common_io
@_gaussian_options
@_coverage_option
@click.option("--simul", is_flag=True, help="Simultaneous over all populations instead of marginal.")
@click.option("--indices", default=None, help="Comma-separated 1-based populations to report.")
@click.option("--svg", "svg_path", default=None, help="Also write an SVG interval chart here.")
def cmd_csranks(
    input_path,
    output_path,
    out_format,
    estimates_col,
    se_col,
    cov_path,
    draws,
    seed,
    label_col,
    coverage,
    simul,
    indices,
    svg_path,
):
    """Confidence sets for the ranks of Gaussian estimates."""
    est, digest, labels = _load_estimates(input_path, estimates_col, se_col, cov_path, label_col)
    used_seed = _resolve_seed(seed)
    cfg = BootstrapConfig(draws=draws, coverage=coverage, seed=used_seed)
    idx = _parse_indices(indices, est.p)
    cs = cs_ranks(est, cfg, mode="simultaneous" if simul else "marginal", indices=idx)
    shown = [int(i) for i in cs.indices]
    results = {
        "mode": cs.mode,
        "indices": [i + 1 for i in shown],
        "labels": [labels[i] for i in shown],
        "L": [int(v) for v in cs.lower],
        "rank": [int(v) for v in cs.rank],
        "U": [int(v) for v in cs.upper],
    }
    envelope = OutputEnvelope(
        procedure="cs-ranks",
        input_digest=digest,
        seed=used_seed,
        coverage=coverage,
        results=results,
    )
    if svg_path is not None:
        write_text(
            svg_path,
            interval_chart(results["labels"], results["L"], results["rank"], results["U"]),
        )
    rows = [
        [i + 1, labels[i], results["L"][k], results["rank"][k], results["U"][k]]
        for k, i in enumerate(shown)
    ]
    _emit(envelope, out_format, output_path, ["index", "label", "L", "rank", "U"], rows)


def _tau_command(name, chooser, doc):
    @cli.command(name, help=doc)
    @_common_io
    @_gaussian_options
    @_coverage_option
    @click.option("--tau", type=click.IntRange(min=1), required=True)
    def _cmd(
        input_path,
        output_path,
        out_format,
        estimates_col,
        se_col,
        cov_path,
        draws,
        seed,
        label_col,
        coverage,
        tau,
    ):
        est, digest, labels = _load_estimates(
            input_path, estimates_col, se_col, cov_path, label_col
        )
        used_seed = _resolve_seed(seed)
        cfg = BootstrapConfig(draws=draws, coverage=coverage, seed=used_seed)
        result = chooser(est, cfg, tau)
        members = [int(j) for j in result.members]
        results = {
            "tau": tau,
            "members": [j + 1 for j in members],
            "labels": [labels[j] for j in members],
        }
        envelope = OutputEnvelope(
            procedure=name,
            input_digest=digest,
            seed=used_seed,
            coverage=coverage,
            results=results,
        )
        rows = [[j + 1, labels[j]] for j in members]
        _emit(envelope, out_format, output_path, ["index", "label"], rows)

    return _cmd


_tau_command(
    "cs-taubest",
    cs_tau_best,
    "Populations that cannot be ruled out of the top tau.",
)
_tau_command(
    "cs-tauworst",
    cs_tau_worst,
    "Populations that cannot be ruled out of the bottom tau.",
)


@cli.command("cs-multinom")
@_common_io
@_coverage_option
@click.option("--column", default=None, help="Count column; defaults to the only column.")
@click.option("--simul", is_flag=True, help="Simultaneous over all categories instead of marginal.")
@click.option(
    "--multcorr",
    type=click.Choice(["holm", "bonferroni"]),
    default="holm",
    show_default=True,
    help="Multiple-testing correction.",
)
@click.option("--indices", default=None, help="Comma-separated 1-based categories to report.")
@click.option("--label", "label_col", default=None, help="Column with category names.")
def cmd_csranks_multinom(
    input_path,
    output_path,
    out_format,
    coverage,
    column,
    simul,
    multcorr,
    indices,
    label_col,
):
    """Exact finite-sample confidence sets for multinomial category ranks."""
    raw = read_bytes(input_path)
    table = parse_table(decode(raw))
    if column is None:
        numeric_names = [n for n in table.names if n != label_col]
        if len(numeric_names) != 1:
            raise click.UsageError(
                "--column is required when the input has several columns"
            )
        column = numeric_names[0]
    counts = table.numeric(column)
    if np.any(counts < 0) or np.any(counts != np.floor(counts)):
        raise DomainError(f"column {column!r} must hold nonnegative integer counts")
    labels = _label_values(table, label_col, len(counts))
    data = MultinomialCounts(counts.astype(np.int64), labels=tuple(labels))
    idx = _parse_indices(indices, data.p)
    cs = cs_ranks_multinomial(
        data,
        coverage=coverage,
        mode="simultaneous" if simul else "marginal",
        method=multcorr,
        indices=idx,
    )
    shown = [int(i) for i in cs.indices]
    results = {
        "mode": cs.mode,
        "method": multcorr,
        "indices": [i + 1 for i in shown],
        "labels": [labels[i] for i in shown],
        "L": [int(v) for v in cs.lower],
        "rank": [int(v) for v in cs.rank],
        "U": [int(v) for v in cs.upper],
    }
    envelope = OutputEnvelope(
        procedure="cs-multinom",
        input_digest=input_digest(raw),
        seed=None,
        coverage=coverage,
        results=results,
    )
    rows = [
        [i + 1, labels[i], results["L"][k], results["rank"][k], results["U"][k]]
        for k, i in enumerate(shown)
    ]
    _emit(envelope, out_format, output_path, ["index", "label", "L", "rank", "U"], rows)


@cli.command("rank-reg")
@_common_io
@click.option(
    "--formula",
    required=True,
    help='Model formula, e.g. "r(Y) ~ r(X) + W" or "r(Y) ~ (r(X) + W):G".',
)
@click.option(
    "--omega",
    type=click.FloatRange(0.0, 1.0),
    default=1.0,
    show_default=True,
    help="Tie handling for the rank transforms.",
)
@_coverage_option
def cmd_rankreg(input_path, output_path, out_format, formula, omega, coverage):
    """Regression on ranked variables with corrected standard errors."""
    raw = read_bytes(input_path)
    table = parse_table(decode(raw))
    try:
        model = RankRegressionModel.from_formula(formula, omega=omega)
    except FormulaError as exc:
        raise FormulaError(format_formula_error(formula, exc), exc.position) from exc
    data = {model.response: table.numeric(model.response)}
    for name, _ranked in model.regressors:
        data.setdefault(name, table.numeric(name))
    if model.group is not None:
        data[model.group] = table.raw(model.group)
    fit_result = fit(model, data)
    summary = summarize(fit_result)
    intervals = confint(fit_result, level=coverage)
    vcov = corrected_vcov(fit_result).matrix
    names = list(summary.names)
    results = {
        "formula": formula,
        "omega": omega,
        "n": int(len(fit_result.residuals)),
        "coefficients": [
            {
                "name": names[k],
                "estimate": float(summary.estimates[k]),
                "se": float(summary.std_errors[k]),
                "z": float(summary.z_values[k]),
                "p": float(summary.p_values[k]),
            }
            for k in range(len(names))
        ],
        "vcov": [[float(v) for v in row] for row in vcov],
        "confint": [
            {
                "name": names[k],
                "lower": float(intervals[k, 0]),
                "upper": float(intervals[k, 1]),
            }
            for k in range(len(names))
        ],
    }
    envelope = OutputEnvelope(
        procedure="rank-reg",
        input_digest=input_digest(raw),
        seed=None,
        coverage=coverage,
        results=results,
        warnings=tuple(summary.warnings),
    )
    rows = [
        [
            names[k],
            float(summary.estimates[k]),
            float(summary.std_errors[k]),
            float(summary.z_values[k]),
            float(summary.p_values[k]),
            float(intervals[k, 0]),
            float(intervals[k, 1]),
        ]
        for k in range(len(names))
    ]
    _emit(
        envelope,
        out_format,
        output_path,
        ["name", "estimate", "se", "z", "p", "lower", "upper"],
        rows,
    )


def main(argv=None) -> int:
    """Run the CLI, mapping exceptions onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 130
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except RankInferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
