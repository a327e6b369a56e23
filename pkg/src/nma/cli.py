"""Command-line surface.

Every command is a thin wrapper around one library call; numbers printed or
written here are the library's numbers, formatted, never recomputed. Exit
codes are a stable contract: 0 success, 1 unreadable input (I/O, JSON, CSV,
usage), 2 domain validation failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import click
import numpy as np

from . import engine, serialize
from .errors import NmaError, ParseError, TandemRequired
from .kernels import (
    BinaryChoiceKernel,
    Tandem,
    build_tandem_representation,
    build_value_representation,
    classify_kernel,
    is_chronometric,
    is_psychometric,
    is_transitive,
)
from .models import identify_ddm

_PROPERTIES = (
    "axioms",
    "transitive",
    "unbiased",
    "positive",
    "dirac",
    "chronometric",
    "psychometric",
)


@dataclass(frozen=True)
class CommandConfig:
    command: str
    input: str
    output: str | None = None
    fmt: str = "json"
    tol: float | None = None
    seed: int | None = None
    runs: int | None = None
    stopping: str | None = None
    strategy: str = "auto"
    deadline: bool = False


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _emit(cfg: CommandConfig, payload: dict, rows) -> None:
    if cfg.output is None:
        return
    if cfg.fmt == "json":
        serialize.save_json(payload, cfg.output)
    else:
        serialize.write_rows_csv(rows, ("quantity", "label", "value"), cfg.output)


def _resolve_stopping(cfg: CommandConfig, inline):
    if cfg.stopping is not None:
        return serialize.parse_stopping_string(cfg.stopping)
    if inline is not None:
        return inline
    raise ParseError(
        "no stopping rule: pass --stopping or add one to the spec file"
    )


_input_opt = click.option(
    "--input", "input_", required=True, type=click.Path(), help="Input file."
)
_output_opt = click.option("--output", type=click.Path(), help="Write results here.")
_format_opt = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
    show_default=True, help="Output file format.",
)
_tol_opt = click.option("--tol", type=float, default=None, help="Tolerance override.")


@click.group()
def cli():
    """Neural Metropolis runs: validate models, compute outcomes, take limits."""


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@_tol_opt
@click.option(
    "--require", "required", multiple=True, type=click.Choice(_PROPERTIES),
    help="Property that must hold for exit code 0 (repeatable). "
    "Defaults to axioms and transitivity.",
)
def validate(input_, output, fmt, tol, required):
    """Check a kernel or tandem file: axioms, flags, transitivity, timing."""
    cfg = CommandConfig("validate", input_, output, fmt, tol)
    # parse leniently so axiom violations are reported, not crashed on
    obj = serialize.load_json(input_)
    if not isinstance(obj, dict):
        raise ParseError("kernel file must be a JSON object")
    menu = [str(a) for a in obj.get("menu") or ()]
    if not menu:
        raise ParseError("missing key 'menu' in kernel file", field="menu")
    rho = obj.get("rho")
    if rho is None or len(rho) != len(menu) or any(len(r) != len(menu) for r in rho):
        raise ParseError(f"rho must be {len(menu)}x{len(menu)}", field="rho")
    kernel = BinaryChoiceKernel(
        menu, np.array(rho, dtype=float), float(obj.get("epsilon", 0.5)),
        validate=False,
    )
    tandem = None
    if obj.get("tau") is not None:
        tandem = Tandem(kernel, np.array(obj["tau"], dtype=float), validate=False)

    tol_kw = {} if tol is None else {"tol": tol}
    flags = classify_kernel(kernel, **tol_kw)
    trans = is_transitive(kernel, **tol_kw)
    warnings = list(kernel.axiom_warnings)
    if tandem is not None:
        warnings += list(tandem.axiom_warnings)
    report = {
        "menu": menu,
        "axioms": {"ok": not warnings, "warnings": warnings},
        "flags": {
            "unbiased": flags.unbiased,
            "positive": flags.positive,
            "dirac": flags.dirac,
        },
        "transitive": {
            "holds": trans.holds,
            "worst_triple": list(trans.worst_triple) if trans.worst_triple else None,
            "max_violation": trans.max_violation,
        },
    }
    results = {
        "axioms": not warnings,
        "transitive": trans.holds,
        "unbiased": flags.unbiased,
        "positive": flags.positive,
        "dirac": flags.dirac,
    }
    if tandem is not None:
        chrono = psycho = None
        if trans.holds:
            chrono = is_chronometric(tandem, **tol_kw)
            psycho = is_psychometric(tandem, **tol_kw)
            report["chronometric"] = {
                "holds": chrono.holds,
                "threshold_l": chrono.threshold_l,
            }
            report["psychometric"] = psycho
            results["chronometric"] = chrono.holds
            results["psychometric"] = psycho
        else:
            results["chronometric"] = results["psychometric"] = False

    required = tuple(required) or ("axioms", "transitive")
    for prop in required:
        if prop not in results:
            raise TandemRequired(f"property {prop!r} needs response times (a tandem)")
    passed = all(results[prop] for prop in required)
    report["required"] = list(required)
    report["passed"] = passed

    click.echo(f"axioms: {'ok' if not warnings else 'FAIL'}")
    for w in warnings:
        click.echo(f"  warning: {w}")
    for name in ("unbiased", "positive", "dirac"):
        click.echo(f"{name}: {str(report['flags'][name]).lower()}")
    click.echo(f"transitive: {str(trans.holds).lower()}")
    if not trans.holds:
        click.echo(
            f"  worst triple: {trans.worst_triple} "
            f"(violation {_fmt(trans.max_violation)})"
        )
    if "chronometric" in report:
        click.echo(f"chronometric: {str(report['chronometric']['holds']).lower()}")
        if report["chronometric"]["holds"]:
            click.echo(f"  threshold l: {_fmt(report['chronometric']['threshold_l'])}")
        click.echo(f"psychometric: {str(report['psychometric']).lower()}")
    click.echo(f"required: {', '.join(required)} -> {'pass' if passed else 'FAIL'}")

    rows = [("passed", "", int(passed))] + [
        (prop, "", int(results[prop])) for prop in results
    ]
    _emit(cfg, report, rows)
    return 0 if passed else 2


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@_tol_opt
def analyze(input_, output, fmt, tol):
    """Build the value representation (w, v, s, and timing when available)."""
    cfg = CommandConfig("analyze", input_, output, fmt, tol)
    model = serialize.load_choice_model(input_)
    tol_kw = {} if tol is None else {"tol": tol}
    if isinstance(model, Tandem):
        rep = build_tandem_representation(model, **tol_kw)
    else:
        rep = build_value_representation(model)
    payload = serialize.representation_to_dict(rep)

    levels = " < ".join(
        "{" + ", ".join(level) + "}" for level in rep.level_sets()
    )
    click.echo(f"levels (ascending): {levels}")
    for a in rep.menu:
        click.echo(f"{a}: w={rep.w[a]} v={_fmt(rep.v[a])}")
    if rep.threshold_l is not None:
        click.echo(f"threshold l: {_fmt(rep.threshold_l)}")
    if rep.even_phi is not None:
        click.echo(f"even phi: {str(rep.even_phi).lower()}")

    rows = [("w", a, rep.w[a]) for a in rep.menu]
    rows += [("v", a, rep.v[a]) for a in rep.menu]
    if rep.phi_samples is not None:
        rows += [("phi", _fmt(l), t) for l, t in sorted(rep.phi_samples.items())]
    _emit(cfg, payload, rows)
    return 0


def _echo_outcome(menu, report) -> None:
    click.echo(f"method: {report.method}")
    for a, x in zip(menu, report.p):
        click.echo(f"p[{a}] = {_fmt(x)}")
    click.echo(f"tau = {_fmt(report.tau)}")
    se_p = report.diagnostics.get("se_p")
    if se_p is not None:
        for a, x in zip(menu, se_p):
            click.echo(f"se_p[{a}] = {_fmt(x)}")
    se_tau = report.diagnostics.get("se_tau")
    if se_tau is not None:
        click.echo(f"se_tau = {_fmt(se_tau)}")


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@_tol_opt
@click.option("--stopping", help="fixed:N, geometric:Z, negbin:R,Z or custom:@pmf.json")
@click.option(
    "--strategy", type=click.Choice(["auto", "closed_form", "spectral", "series"]),
    default="auto", show_default=True,
)
def exact(input_, output, fmt, tol, stopping, strategy):
    """Exact outcome distribution and mean decision time for a run spec."""
    cfg = CommandConfig(
        "exact", input_, output, fmt, tol, stopping=stopping, strategy=strategy
    )
    spec, inline = serialize.load_spec(input_)
    n = _resolve_stopping(cfg, inline)
    kwargs = {} if tol is None else {"tail_tol": tol}
    report = engine.exact_outcome(spec, n, strategy=strategy, **kwargs)
    _echo_outcome(spec.menu, report)
    _emit(
        cfg,
        serialize.outcome_to_dict(report, spec.menu),
        serialize.outcome_to_rows(report, spec.menu),
    )
    return 0


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@click.option("--stopping", help="Also accepts deadline:T here.")
@click.option("--runs", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, required=True, help="Reproducibility seed.")
def simulate(input_, output, fmt, stopping, runs, seed):
    """Monte Carlo outcome estimate; deterministic for a given seed."""
    cfg = CommandConfig(
        "simulate", input_, output, fmt, seed=seed, runs=runs, stopping=stopping
    )
    spec, inline = serialize.load_spec(input_)
    n = _resolve_stopping(cfg, inline)
    report = engine.monte_carlo_outcome(spec, n, runs=runs, seed=seed)
    _echo_outcome(spec.menu, report)
    _emit(
        cfg,
        serialize.outcome_to_dict(report, spec.menu),
        serialize.outcome_to_rows(report, spec.menu),
    )
    return 0


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@_tol_opt
@click.option("--reference", help="Alternative whose nu is normalized to zero.")
def identify(input_, output, fmt, tol, reference):
    """Recover diffusion parameters (nu, lambda, beta) from a tandem file."""
    cfg = CommandConfig("identify", input_, output, fmt, tol)
    model = serialize.load_choice_model(input_)
    if not isinstance(model, Tandem):
        raise TandemRequired("identification needs response times (a tandem)")
    kwargs = {} if tol is None else {"tol": tol}
    params = identify_ddm(model, reference=reference, **kwargs)
    click.echo(f"lambda = {_fmt(params.lam)}")
    click.echo(f"beta = {_fmt(params.beta)}")
    for a in params.menu:
        click.echo(f"nu[{a}] = {_fmt(params.nu[a])}")
    rows = [("lambda", "", params.lam), ("beta", "", params.beta)]
    rows += [("nu", a, params.nu[a]) for a in params.menu]
    _emit(cfg, serialize.ddm_params_to_dict(params), rows)
    return 0


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@click.option(
    "--deadline", is_flag=True,
    help="Long-deadline frequencies instead of the simple-stopping limit.",
)
def limit(input_, output, fmt, deadline):
    """Limit distribution of the run outcome."""
    cfg = CommandConfig("limit", input_, output, fmt, deadline=deadline)
    spec, _ = serialize.load_spec(input_)
    if deadline:
        pi = engine.deadline_limit_distribution(spec)
        kind = "deadline"
    else:
        pi = engine.limit_distribution(spec)
        kind = "simple"
    for a, x in zip(spec.menu, pi):
        click.echo(f"pi[{a}] = {_fmt(x)}")
    payload = {"kind": kind, "pi": {a: float(x) for a, x in zip(spec.menu, pi)}}
    rows = [("pi", a, float(x)) for a, x in zip(spec.menu, pi)]
    _emit(cfg, payload, rows)
    return 0


@cli.command()
@_input_opt
@_output_opt
@_format_opt
@click.argument("horizons", nargs=-1, type=int)
def convergence(input_, output, fmt, horizons):
    """L1 distance to the limit after n iterations; plot data as tidy CSV."""
    cfg = CommandConfig("convergence", input_, output, fmt)
    spec, _ = serialize.load_spec(input_)
    horizons = list(horizons) or [0, 1, 2, 5, 10, 20, 50, 100]
    values = engine.convergence_profile(spec, horizons)
    for n, x in zip(horizons, values):
        click.echo(f"n={n}: {_fmt(x)}")
    payload = {"horizons": horizons, "l1": [float(x) for x in values]}
    rows = [(n, "l1_distance", float(x)) for n, x in zip(horizons, values)]
    if cfg.output is not None and cfg.fmt == "csv":
        serialize.write_rows_csv(rows, ("x", "series", "value"), cfg.output)
    else:
        _emit(cfg, payload, rows)
    return 0


def main(argv=None) -> int:
    """Entry point mapping exceptions to the exit-code contract."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 130
    except (ParseError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (NmaError, ValueError) as exc:
        click.echo(f"error: {exc.__class__.__name__}: {exc}", err=True)
        return 2
    return int(rv) if isinstance(rv, int) else 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
