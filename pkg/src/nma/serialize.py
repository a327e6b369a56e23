"""File formats: matrices, kernels/tandems, model params, run specs, trials.

All JSON loaders come in two layers: ``parse_*`` works on already-decoded
objects (and is what tests target), ``load_*`` reads a path. Structural
problems (missing keys, wrong shapes, bad enum values) raise
:class:`ParseError`; domain violations (columns not summing to one, kernel
axiom failures) surface as the usual domain errors, so the CLI can
distinguish unreadable input (exit 1) from invalid input (exit 2).

Labels are strings in every file format. Matrix JSON is column-major to
match the column-stochastic storage: ``columns[j][i]`` is the probability
of moving into i given j.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .engine import AlgorithmSpec, tandem_sampler
from .errors import ParseError
from .kernels import BinaryChoiceKernel, Tandem, ValueRepresentation
from .models import (
    DdmParams,
    OuParams,
    TrialRecord,
    ddm_sampler,
    ddm_tandem,
    dirac_kernel,
    logit_kernel,
    ou_sampler,
)
from .matrices import StochasticMatrix, build_stochastic_matrix, probability_vector
from .stopping import CustomPmf, Deadline, Fixed, Geometric, NegativeBinomial

ORIENTATION = "rho[i][j]=P(accept i | incumbent j)"


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise ParseError(f"missing key {key!r} in {context}")
    return obj[key]


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def save_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# matrices


def parse_matrix(obj) -> StochasticMatrix:
    if not isinstance(obj, dict):
        raise ParseError("matrix must be an object with 'order' and 'columns'")
    order = _require(obj, "order", "matrix")
    columns = _require(obj, "columns", "matrix")
    if not isinstance(order, int) or order < 1:
        raise ParseError("matrix order must be a positive integer", field="order")
    if len(columns) != order or any(len(c) != order for c in columns):
        raise ParseError(
            f"expected {order} columns of length {order}", field="columns"
        )
    entries = np.array(columns, dtype=float).T  # columns[j][i] -> entries[i, j]
    return build_stochastic_matrix(entries)


def matrix_to_dict(m: StochasticMatrix) -> dict:
    return {"order": m.order, "columns": m.entries.T.tolist()}


def load_matrix(path) -> StochasticMatrix:
    return parse_matrix(load_json(path))


# --------------------------------------------------------------------------
# kernels and tandems


def parse_choice_model(obj):
    """Kernel-or-tandem JSON -> Tandem when 'tau' is present, else kernel."""
    if not isinstance(obj, dict):
        raise ParseError("kernel file must be a JSON object")
    menu = [str(a) for a in _require(obj, "menu", "kernel file")]
    rho = _require(obj, "rho", "kernel file")
    epsilon = obj.get("epsilon", 0.5)
    n = len(menu)
    if len(rho) != n or any(len(row) != n for row in rho):
        raise ParseError(f"rho must be {n}x{n}", field="rho")
    kernel = BinaryChoiceKernel(menu, np.array(rho, dtype=float), float(epsilon))
    tau = obj.get("tau")
    if tau is None:
        return kernel
    if len(tau) != n or any(len(row) != n for row in tau):
        raise ParseError(f"tau must be {n}x{n}", field="tau")
    return Tandem(kernel, np.array(tau, dtype=float))


def kernel_to_dict(k: BinaryChoiceKernel) -> dict:
    return {
        "menu": list(k.menu),
        "epsilon": k.epsilon,
        "rho": k.rho.tolist(),
        "orientation": ORIENTATION,
    }


def tandem_to_dict(t: Tandem) -> dict:
    out = kernel_to_dict(t.kernel)
    out["tau"] = t.tau.tolist()
    return out


def load_choice_model(path):
    return parse_choice_model(load_json(path))


# --------------------------------------------------------------------------
# model params


def parse_ddm_params(obj) -> DdmParams:
    nu = _require(obj, "nu", "DDM params")
    if not isinstance(nu, dict) or not nu:
        raise ParseError("nu must map labels to values", field="nu")
    return DdmParams(
        {str(a): float(x) for a, x in nu.items()},
        float(_require(obj, "lambda", "DDM params")),
        float(_require(obj, "beta", "DDM params")),
    )


def ddm_params_to_dict(p: DdmParams) -> dict:
    return {"nu": dict(p.nu), "lambda": p.lam, "beta": p.beta}


def load_ddm_params(path) -> DdmParams:
    return parse_ddm_params(load_json(path))


# --------------------------------------------------------------------------
# stopping numbers


def parse_stopping(obj):
    if not isinstance(obj, dict):
        raise ParseError("stopping rule must be a JSON object with 'kind'")
    kind = _require(obj, "kind", "stopping rule")
    try:
        if kind == "fixed":
            return Fixed(int(_require(obj, "n", "fixed stopping")))
        if kind == "geometric":
            return Geometric(float(_require(obj, "zeta", "geometric stopping")))
        if kind in ("negative_binomial", "negbin"):
            return NegativeBinomial(
                int(_require(obj, "r", "negative binomial stopping")),
                float(_require(obj, "zeta", "negative binomial stopping")),
            )
        if kind == "custom":
            pmf = _require(obj, "pmf", "custom stopping")
            if isinstance(pmf, dict):
                entries = [(int(n), float(p)) for n, p in pmf.items()]
            else:
                entries = [(int(n), float(p)) for n, p in pmf]
            return CustomPmf(tuple(entries))
        if kind == "deadline":
            return Deadline(float(_require(obj, "t", "deadline stopping")))
    except ValueError as exc:
        raise ParseError(f"invalid stopping rule: {exc}") from exc
    raise ParseError(f"unknown stopping kind {kind!r}", field="kind")


def parse_stopping_string(text: str):
    """Compact CLI form: fixed:N, geometric:Z, negbin:R,Z, deadline:T,
    custom:@file.json."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ParseError(f"stopping rule {text!r} needs the form kind:params")
    try:
        if kind == "fixed":
            return Fixed(int(rest))
        if kind == "geometric":
            return Geometric(float(rest))
        if kind in ("negbin", "negative_binomial"):
            r, zeta = rest.split(",")
            return NegativeBinomial(int(r), float(zeta))
        if kind == "deadline":
            return Deadline(float(rest))
        if kind == "custom":
            if not rest.startswith("@"):
                raise ParseError("custom stopping takes a file: custom:@pmf.json")
            return parse_stopping({"kind": "custom", "pmf": load_json(rest[1:])})
    except (ValueError, TypeError) as exc:
        raise ParseError(f"invalid stopping rule {text!r}: {exc}") from exc
    raise ParseError(f"unknown stopping kind {kind!r}")


def stopping_to_dict(n) -> dict:
    if isinstance(n, Fixed):
        return {"kind": "fixed", "n": n.n}
    if isinstance(n, Geometric):
        return {"kind": "geometric", "zeta": n.zeta}
    if isinstance(n, NegativeBinomial):
        return {"kind": "negative_binomial", "r": n.r, "zeta": n.zeta}
    if isinstance(n, CustomPmf):
        return {"kind": "custom", "pmf": [[k, p] for k, p in n.entries]}
    if isinstance(n, Deadline):
        return {"kind": "deadline", "t": n.t}
    raise ParseError(f"unknown stopping number {n!r}")


# --------------------------------------------------------------------------
# run specs


def _model_from_dict(model: dict, menu: tuple):
    """Returns (tandem, kernel, sampler_factory) for the model block.

    sampler_factory is None or a zero-argument callable producing a fresh
    vectorized trial sampler.
    """
    kind = _require(model, "kind", "model")
    epsilon = float(model.get("epsilon", 0.5))
    if kind == "tandem":
        parsed = parse_choice_model({**model, "menu": list(menu)})
        if not isinstance(parsed, Tandem):
            raise ParseError("model kind 'tandem' needs a 'tau' matrix", field="tau")
        durations = model.get("durations")
        sampler = None
        if durations is not None:
            if durations not in ("deterministic", "exponential"):
                raise ParseError(
                    f"unknown durations scheme {durations!r}", field="durations"
                )
            sampler = tandem_sampler(parsed, durations)
        return parsed, parsed.kernel, sampler
    if kind == "ddm":
        params = parse_ddm_params(model)
        tandem = ddm_tandem(params, menu=menu, epsilon=epsilon)
        sampler = None
        if "dt" in model:
            sampler = ddm_sampler(params, menu, dt=float(model["dt"]))
        return tandem, tandem.kernel, sampler
    if kind == "logit":
        v = _require(model, "v", "logit model")
        if isinstance(v, dict):
            v = {str(a): float(x) for a, x in v.items()}
        else:
            v = dict(zip(menu, map(float, v)))
        s = model.get("s")
        kernel = logit_kernel(
            v, menu=menu, s=None if s is None else np.array(s, dtype=float),
            epsilon=epsilon,
        )
        tandem = None
        if "tau" in model:
            tandem = Tandem(kernel, np.array(model["tau"], dtype=float))
        return tandem, kernel, None
    if kind == "dirac":
        order = [str(a) for a in _require(model, "order", "dirac model")]
        kernel = dirac_kernel(order, menu=menu, epsilon=epsilon)
        tandem = Tandem(kernel, np.zeros((len(menu), len(menu))))
        return tandem, kernel, None
    if kind == "ou":
        nu = _require(model, "nu", "OU model")
        params = OuParams(
            {str(a): float(x) for a, x in nu.items()},
            float(_require(model, "lambda", "OU model")),
            float(_require(model, "beta", "OU model")),
            eta=float(model.get("eta", 0.0)),
            sigma=float(model.get("sigma", math.sqrt(2.0))),
            mu_signal=float(model.get("mu_signal", 1.0)),
            max_steps=int(model.get("max_steps", 10**6)),
            time_unit=float(model.get("time_unit", 1.0)),
        )
        return None, None, ou_sampler(params, menu)
    raise ParseError(f"unknown model kind {kind!r}", field="kind")


def parse_spec(obj) -> tuple[AlgorithmSpec, object]:
    """Spec JSON -> (AlgorithmSpec, StoppingNumber or None).

    Schema: {"menu": [...], "mu": [...], "Q": matrix, "model": {...},
    "stopping": {...}?, "tau_self": x?}.
    """
    if not isinstance(obj, dict):
        raise ParseError("spec file must be a JSON object")
    menu = tuple(str(a) for a in _require(obj, "menu", "spec"))
    mu = probability_vector(np.array(_require(obj, "mu", "spec"), dtype=float))
    q = parse_matrix(_require(obj, "Q", "spec"))
    tandem, kernel, sampler = _model_from_dict(_require(obj, "model", "spec"), menu)
    spec = AlgorithmSpec(
        menu=menu,
        mu=mu,
        Q=q,
        tandem=tandem,
        kernel=kernel,
        sampler=sampler,
        tau_self=float(obj.get("tau_self", 0.0)),
    )
    stopping = parse_stopping(obj["stopping"]) if "stopping" in obj else None
    return spec, stopping


def load_spec(path) -> tuple[AlgorithmSpec, object]:
    return parse_spec(load_json(path))


# --------------------------------------------------------------------------
# trials CSV


def load_trials(path) -> list:
    """Trial CSV with header proposal,incumbent,choice,rt; an empty choice
    marks a censored trial."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"proposal", "incumbent", "choice", "rt"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ParseError(
                f"{path}: trial CSV needs header proposal,incumbent,choice,rt"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                if row["choice"] == "":
                    out.append(
                        TrialRecord(
                            row["proposal"], row["incumbent"], None, math.nan,
                            censored=True,
                        )
                    )
                else:
                    out.append(
                        TrialRecord(
                            row["proposal"], row["incumbent"], row["choice"],
                            float(row["rt"]),
                        )
                    )
            except (ValueError, KeyError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return out


def dump_trials(trials, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["proposal", "incumbent", "choice", "rt"])
        for tr in trials:
            if tr.censored:
                writer.writerow([tr.proposal, tr.incumbent, "", ""])
            else:
                writer.writerow([tr.proposal, tr.incumbent, tr.choice, repr(tr.rt)])


# --------------------------------------------------------------------------
# reports


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def outcome_to_dict(report, menu) -> dict:
    return {
        "method": report.method,
        "p": {a: float(x) for a, x in zip(menu, report.p)},
        "tau": float(report.tau),
        "diagnostics": _jsonable(report.diagnostics),
    }


def outcome_to_rows(report, menu) -> list:
    """Tidy rows (quantity, label, value) for CSV emission."""
    rows = [("p", a, float(x)) for a, x in zip(menu, report.p)]
    rows.append(("tau", "", float(report.tau)))
    se_p = report.diagnostics.get("se_p")
    if se_p is not None:
        rows += [("se_p", a, float(x)) for a, x in zip(menu, se_p)]
    se_tau = report.diagnostics.get("se_tau")
    if se_tau is not None:
        rows.append(("se_tau", "", float(se_tau)))
    return rows


def representation_to_dict(rep: ValueRepresentation) -> dict:
    out = {
        "menu": list(rep.menu),
        "w": {a: int(rep.w[a]) for a in rep.menu},
        "v": {a: float(rep.v[a]) for a in rep.menu},
        "s": rep.s.tolist(),
        "levels": [list(level) for level in rep.level_sets()],
    }
    if rep.phi_samples is not None:
        out["phi_samples"] = sorted(
            [l, t] for l, t in rep.phi_samples.items()
        )
    if rep.threshold_l is not None:
        out["threshold_l"] = (
            rep.threshold_l if math.isfinite(rep.threshold_l) else repr(rep.threshold_l)
        )
    if rep.even_phi is not None:
        out["even_phi"] = rep.even_phi
    return out


def write_rows_csv(rows, header, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
