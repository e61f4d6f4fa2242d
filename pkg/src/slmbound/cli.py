"""Batch front end: bound reports, simulations, SNR sweeps, oracle checks.

Experiments are described by a JSON config (see configs/ for samples);
the schema is strict, unknown keys anywhere are rejected.  Output is
deterministic CSV: fixed column order, floats as 17-significant-digit
scientific, LF line endings, header always present.  With an output path
the CSV goes to the file and a short human summary to stdout; without
one the CSV itself is printed.  The sweep command also renders a PNG of
the variance and bound curves next to its CSV unless told not to.

Exit codes: 0 success, 2 config error, 3 numerical diagnostics
(ill-conditioned oracle; results are still written), 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .bounds import (
    DEFAULT_BUDGET,
    _SupportWorkspace,
    bound_L_K,
    bound_L_star,
    ssnm_s1_estimator_bound,
    ssnm_unbiased_bound,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    IllConditionedGramError,
    UnsupportedConfigurationError,
)
from .estimators import (
    Estimator,
    HardThreshold,
    Identity,
    LeastSquares,
    LmvuS1,
    MlSlm,
    MlSsnm,
)
from .linalg import spark_exceeds
from .means import (
    DEFAULT_QUADRATURE,
    HTInducedMean,
    MeanFunction,
    MLInducedMean,
    UnbiasedMean,
)
from .model import (
    LinearGaussianModel,
    SparseLinearModel,
    gaussian_matrix,
    xi_and_j,
)
from .montecarlo import DEFAULT_CHUNK, SimulationSpec, simulate
from .oracle import grid_points, oracle_diagnostics

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4

ENV_OUT_DIR = "SLMBOUND_OUT_DIR"

DEFAULT_SEED = 20260821
DEFAULT_TRIALS = 10**6
DEFAULT_SNR_GRID = list(range(-30, 22, 2))
DEFAULT_THRESHOLDS = [3.0, 4.0, 5.0]


def _fmt(x: float) -> str:
    return f"{float(x):.16e}"


def _fail(msg: str) -> ConfigError:
    return ConfigError(msg)


def _reject_unknown(section: dict, where: str) -> None:
    if section:
        keys = ", ".join(sorted(section))
        raise _fail(f"unknown keys in {where}: {keys}")


def _pop(section: dict, key: str, where: str, default=..., kind=None):
    if key in section:
        value = section.pop(key)
    elif default is ...:
        raise _fail(f"missing key '{key}' in {where}")
    else:
        return default
    if kind is bool:
        if not isinstance(value, bool):
            raise _fail(f"'{key}' in {where} must be a boolean")
    elif kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise _fail(f"'{key}' in {where} must be an integer")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _fail(f"'{key}' in {where} must be a number")
        value = float(value)
    elif kind is str:
        if not isinstance(value, str):
            raise _fail(f"'{key}' in {where} must be a string")
    elif kind is list:
        if not isinstance(value, list):
            raise _fail(f"'{key}' in {where} must be a list")
    elif kind is dict:
        if not isinstance(value, dict):
            raise _fail(f"'{key}' in {where} must be an object")
    return value


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise _fail(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _fail(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise _fail("config root must be a JSON object")
    return cfg


def _parse_matrix(h_spec, where: str) -> np.ndarray:
    if isinstance(h_spec, str):
        parts = h_spec.split()
        if len(parts) == 2 and parts[0] == "identity":
            try:
                n = int(parts[1])
            except ValueError:
                raise _fail(f"bad identity size in {where}: {h_spec!r}") from None
            if n < 1:
                raise _fail(f"identity size must be positive in {where}")
            return np.eye(n)
        if len(parts) == 4 and parts[0] == "gaussian" and parts[2] == "seed":
            dims = parts[1].lower().split("x")
            try:
                m, n = (int(d) for d in dims)
                seed = int(parts[3])
            except ValueError:
                raise _fail(f"bad gaussian spec in {where}: {h_spec!r}") from None
            return gaussian_matrix(m, n, seed)
        raise _fail(f"unrecognized matrix spec in {where}: {h_spec!r}")
    if isinstance(h_spec, list):
        try:
            return np.asarray(h_spec, dtype=float)
        except (TypeError, ValueError):
            raise _fail(f"matrix rows in {where} must be numeric lists") from None
    raise _fail(f"'h' in {where} must be a string spec or row-major lists")


def _parse_model(cfg: dict, *, require_sparse: bool) -> LinearGaussianModel:
    section = _pop(cfg, "model", "config", kind=dict)
    section = dict(section)
    h = _parse_matrix(_pop(section, "h", "model"), "model")
    sigma2 = _pop(section, "sigma2", "model", kind=float)
    sparsity = _pop(section, "sparsity", "model", default=None)
    _reject_unknown(section, "model")
    try:
        if sparsity is None:
            if require_sparse:
                raise _fail("this command needs 'sparsity' in the model section")
            return LinearGaussianModel(h, sigma2)
        if not isinstance(sparsity, int) or isinstance(sparsity, bool):
            raise _fail("'sparsity' must be an integer")
        return SparseLinearModel(h, sigma2, sparsity)
    except ConfigError:
        raise
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise _fail(f"invalid model: {exc}") from exc


def _parse_x0(cfg: dict, model: LinearGaussianModel) -> np.ndarray:
    section = dict(_pop(cfg, "x0", "config", kind=dict))
    n = model.n
    if "dense" in section:
        dense = _pop(section, "dense", "x0", kind=list)
        _reject_unknown(section, "x0")
        x0 = np.asarray(dense, dtype=float)
        if x0.ndim != 1 or x0.shape[0] != n:
            raise _fail(f"'dense' in x0 must list {n} numbers")
        return x0
    values = _pop(section, "values", "x0", kind=list)
    indices = _pop(section, "indices", "x0", kind=list)
    _reject_unknown(section, "x0")
    if len(values) != len(indices):
        raise _fail("x0 'values' and 'indices' must have equal length")
    x0 = np.zeros(n)
    seen = set()
    for value, idx in zip(values, indices):
        if not isinstance(idx, int) or isinstance(idx, bool) or not 1 <= idx <= n:
            raise _fail(f"x0 index {idx!r} out of range 1..{n}")
        if idx in seen:
            raise _fail(f"x0 index {idx} repeated")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _fail(f"x0 value {value!r} is not a number")
        seen.add(idx)
        x0[idx - 1] = float(value)
    return x0


def _mean_for(mean_spec, k: int, model: LinearGaussianModel, where: str) -> MeanFunction:
    sigma = math.sqrt(model.sigma2)
    if mean_spec == "unbiased":
        return UnbiasedMean(k)
    if isinstance(mean_spec, dict):
        section = dict(mean_spec)
        kind = _pop(section, "kind", where, kind=str)
        if kind == "unbiased":
            _reject_unknown(section, where)
            return UnbiasedMean(k)
        if kind == "ht":
            t = _pop(section, "t", where, kind=float)
            _reject_unknown(section, where)
            if t < 0.0:
                raise _fail(f"threshold in {where} must be >= 0")
            return HTInducedMean(k, t, sigma)
        if kind == "ml":
            _reject_unknown(section, where)
            if not isinstance(model, SparseLinearModel) or model.sparsity != 1:
                raise _fail(f"'ml' means in {where} need a sparse model with S = 1")
            return MLInducedMean(k, 1, sigma)
        raise _fail(f"unknown mean kind {kind!r} in {where}")
    raise _fail(f"{where} must be \"unbiased\" or an object with a 'kind'")


def _parse_bound_options(cfg: dict):
    section = dict(_pop(cfg, "bound", "config", default={}, kind=dict))
    mode = _pop(section, "mode", "bound", default="exhaustive", kind=str)
    if mode not in ("exhaustive", "greedy"):
        raise _fail(f"bound mode must be 'exhaustive' or 'greedy', got {mode!r}")
    budget = _pop(section, "budget", "bound", default=DEFAULT_BUDGET, kind=int)
    if budget < 1:
        raise _fail("bound budget must be positive")
    means = _pop(section, "means", "bound", default="unbiased")
    _reject_unknown(section, "bound")
    return mode, budget, means


def _parse_simulation(cfg: dict, args) -> tuple[int, int, int]:
    section = dict(_pop(cfg, "simulation", "config", default={}, kind=dict))
    trials = _pop(section, "trials", "simulation", default=DEFAULT_TRIALS, kind=int)
    seed = _pop(section, "seed", "simulation", default=DEFAULT_SEED, kind=int)
    chunk = _pop(section, "chunk_size", "simulation", default=DEFAULT_CHUNK, kind=int)
    _reject_unknown(section, "simulation")
    if args.trials is not None:
        trials = args.trials
    if args.seed is not None:
        seed = args.seed
    return trials, seed, chunk


def _build_estimator(spec, model: LinearGaussianModel, x0: np.ndarray,
                     where: str) -> Estimator:
    if not isinstance(spec, dict):
        raise _fail(f"{where} must be an object with a 'kind'")
    section = dict(spec)
    kind = _pop(section, "kind", where, kind=str)
    try:
        if kind == "ml_ssnm":
            _reject_unknown(section, where)
            if not isinstance(model, SparseLinearModel):
                raise _fail(f"{where}: ml_ssnm needs a sparse model")
            return MlSsnm(model.sparsity)
        if kind == "ml_slm":
            budget = _pop(section, "budget", where, default=DEFAULT_BUDGET, kind=int)
            _reject_unknown(section, where)
            if not isinstance(model, SparseLinearModel):
                raise _fail(f"{where}: ml_slm needs a sparse model")
            return MlSlm(model, budget=budget)
        if kind == "ht":
            t = _pop(section, "t", where, kind=float)
            _reject_unknown(section, where)
            return HardThreshold(t)
        if kind == "lmvu_s1":
            _reject_unknown(section, where)
            return LmvuS1(x0, model.sigma2)
        if kind == "ls_lgm":
            _reject_unknown(section, where)
            return LeastSquares(model.h)
        if kind == "identity":
            _reject_unknown(section, where)
            return Identity()
    except ConfigError:
        raise
    except (ValueError, UnsupportedConfigurationError) as exc:
        raise _fail(f"{where}: {exc}") from exc
    raise _fail(f"unknown estimator kind {kind!r} in {where}")


def _resolve_out(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get(ENV_OUT_DIR)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def _out_path(cfg: dict, args) -> tuple[str | None, bool]:
    section = dict(_pop(cfg, "output", "config", default={}, kind=dict))
    path = _pop(section, "path", "output", default=None)
    figure = _pop(section, "figure", "output", default=True, kind=bool)
    _reject_unknown(section, "output")
    if path is not None and not isinstance(path, str):
        raise _fail("'path' in output must be a string")
    if args.out is not None:
        path = args.out
    return _resolve_out(path), figure


def _emit(path: str | None, header: list[str], rows: list[list[str]],
          summary: list[str]) -> None:
    text = "\n".join([",".join(header)] + [",".join(row) for row in rows]) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    for line in summary:
        print(line)
    print(f"wrote {path}")


def _support_label(k_set) -> str:
    return ";".join(str(i) for i in k_set.indices)


def cmd_bound(cfg: dict, args) -> int:
    model = _parse_model(cfg, require_sparse=True)
    x0 = _parse_x0(cfg, model)
    mode, budget, mean_spec = _parse_bound_options(cfg)
    out, _ = _out_path(cfg, args)
    _reject_unknown(cfg, "config")

    gammas = [_mean_for(mean_spec, k, model, "bound.means")
              for k in range(1, model.n + 1)]
    ws = _SupportWorkspace(model, x0)
    results = [
        bound_L_star(model, gamma, x0, mode=mode, budget=budget, _ws=ws)
        for gamma in gammas
    ]
    total = sum(res.value for res in results)

    corollary = None
    if model.is_ssnm and mean_spec == "unbiased":
        xi, _ = xi_and_j(x0, model.sparsity)
        corollary = ssnm_unbiased_bound(model.n, model.sparsity, xi, model.sigma2)

    summary = []
    for k, res in enumerate(results, start=1):
        summary.append(f"component {k}: L* = {res.value:.6f} at K = {{{_support_label(res.k_set)}}}")
    summary.append(f"total bound = {total:.6f}")
    if corollary is not None:
        summary.append(f"closed form = {corollary:.6f}")

    header = ["component", "l_star", "argmax_k", "theorem_bound", "corollary"]
    cor_cell = _fmt(corollary) if corollary is not None else ""
    rows = [
        [str(k), _fmt(res.value), _support_label(res.k_set), _fmt(total), cor_cell]
        for k, res in enumerate(results, start=1)
    ]
    _emit(out, header, rows, summary)
    return EXIT_OK


def cmd_simulate(cfg: dict, args) -> int:
    model = _parse_model(cfg, require_sparse=False)
    x0 = _parse_x0(cfg, model)
    est_specs = _pop(cfg, "estimators", "config", kind=list)
    if not est_specs:
        raise _fail("'estimators' must list at least one estimator")
    trials, seed, chunk = _parse_simulation(cfg, args)
    out, _ = _out_path(cfg, args)
    _reject_unknown(cfg, "config")

    estimators = [
        _build_estimator(spec, model, x0, f"estimators[{i}]")
        for i, spec in enumerate(est_specs)
    ]

    header = ["estimator", "n_trials", "seed", "total_variance", "se_variance",
              "mse", "se_mse", "bias_norm"]
    rows = []
    summary = []
    for est in estimators:
        try:
            spec = SimulationSpec(model, x0, est, trials, seed, chunk)
        except ValueError as exc:
            raise _fail(str(exc)) from exc
        stats = simulate(spec, threads=args.threads)
        rows.append([
            est.label, str(trials), str(seed),
            _fmt(stats.total_variance), _fmt(stats.se_total_variance),
            _fmt(stats.mse), _fmt(stats.se_mse), _fmt(stats.bias_norm),
        ])
        summary.append(
            f"{est.label}: variance = {stats.total_variance:.6f} "
            f"(se {stats.se_total_variance:.2e}), mse = {stats.mse:.6f}")
    _emit(out, header, rows, summary)
    return EXIT_OK


def _parse_sweep(cfg: dict) -> tuple[list[float], list[float], bool]:
    section = dict(_pop(cfg, "sweep", "config", default={}, kind=dict))
    if "snr_db" in section:
        grid = _pop(section, "snr_db", "sweep", kind=list)
        if not grid:
            raise _fail("'snr_db' in sweep must be nonempty")
        snrs = []
        for v in grid:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise _fail("'snr_db' entries must be numbers")
            snrs.append(float(v))
    else:
        start = _pop(section, "start_db", "sweep", default=-30.0, kind=float)
        stop = _pop(section, "stop_db", "sweep", default=20.0, kind=float)
        step = _pop(section, "step_db", "sweep", default=2.0, kind=float)
        if step <= 0.0 or stop < start:
            raise _fail("sweep needs step_db > 0 and stop_db >= start_db")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        snrs = [start + i * step for i in range(count)]
    thresholds = _pop(section, "ht_thresholds", "sweep", default=list(DEFAULT_THRESHOLDS), kind=list)
    ts = []
    for t in thresholds:
        if isinstance(t, bool) or not isinstance(t, (int, float)) or float(t) < 0.0:
            raise _fail("'ht_thresholds' entries must be numbers >= 0")
        ts.append(float(t))
    if len(set(ts)) != len(ts):
        raise _fail("'ht_thresholds' entries must be distinct")
    reference = _pop(section, "unbiased_reference", "sweep", default=False, kind=bool)
    _reject_unknown(section, "sweep")
    return snrs, ts, reference


def cmd_fig1(cfg: dict, args) -> int:
    if "model" in cfg:
        model = _parse_model(cfg, require_sparse=True)
    else:
        model = SparseLinearModel(np.eye(5), 1.0, 1)
    if not isinstance(model, SparseLinearModel) or not model.is_ssnm or model.sparsity != 1:
        raise _fail("the sweep is defined for the identity model with S = 1")
    snrs, thresholds, reference = _parse_sweep(cfg)
    trials, seed, chunk = _parse_simulation(cfg, args)
    out, figure = _out_path(cfg, args)
    _reject_unknown(cfg, "config")
    if args.no_figure:
        figure = False

    n = model.n
    sigma = math.sqrt(model.sigma2)
    quad = DEFAULT_QUADRATURE

    t_tags = [f"T{t:g}" for t in thresholds]
    header = ["snr_db", "v_ml", "b_ml"]
    for tag in t_tags:
        header += [f"v_ht_{tag}", f"b_ht_{tag}"]
    if reference:
        header.append("b_unbiased")
    header.append("se_v_ml")
    header += [f"se_v_ht_{tag}" for tag in t_tags]

    rows = []
    summary = []
    table = {"snr_db": [], "v_ml": [], "b_ml": []}
    for tag in t_tags:
        table[f"v_ht_{tag}"] = []
        table[f"b_ht_{tag}"] = []
    for idx, snr_db in enumerate(snrs):
        xi = sigma * 10.0 ** (snr_db / 20.0)
        x0 = np.zeros(n)
        x0[0] = xi

        g_ml_j = MLInducedMean(1, 1, sigma, quad)
        g_ml_i = MLInducedMean(2, 1, sigma, quad)
        b_ml = ssnm_s1_estimator_bound(model, g_ml_j, g_ml_i, x0, quad)

        spec = SimulationSpec(model, x0, MlSsnm(1), trials, seed + idx * 8, chunk)
        ml_stats = simulate(spec, threads=args.threads)

        row = [_fmt(snr_db), _fmt(ml_stats.total_variance), _fmt(b_ml)]
        se_cells = [_fmt(ml_stats.se_total_variance)]
        table["snr_db"].append(snr_db)
        table["v_ml"].append(ml_stats.total_variance)
        table["b_ml"].append(b_ml)

        for slot, (t, tag) in enumerate(zip(thresholds, t_tags), start=1):
            g_ht_j = HTInducedMean(1, t, sigma)
            g_ht_i = HTInducedMean(2, t, sigma)
            b_ht = ssnm_s1_estimator_bound(model, g_ht_j, g_ht_i, x0, quad)
            spec = SimulationSpec(model, x0, HardThreshold(t), trials,
                                  seed + idx * 8 + slot, chunk)
            ht_stats = simulate(spec, threads=args.threads)
            row += [_fmt(ht_stats.total_variance), _fmt(b_ht)]
            se_cells.append(_fmt(ht_stats.se_total_variance))
            table[f"v_ht_{tag}"].append(ht_stats.total_variance)
            table[f"b_ht_{tag}"].append(b_ht)

        if reference:
            row.append(_fmt(ssnm_unbiased_bound(n, 1, xi, model.sigma2)))
        row += se_cells
        rows.append(row)
        summary.append(
            f"snr {snr_db:+.0f} dB: v_ml = {ml_stats.total_variance:.4f}, "
            f"b_ml = {b_ml:.4f}")

    _emit(out, header, rows, summary)
    if out is not None and figure:
        png = os.path.splitext(out)[0] + ".png"
        _render_sweep_figure(png, table, t_tags)
        print(f"wrote {png}")
    return EXIT_OK


def _render_sweep_figure(png: str, table: dict, t_tags: list[str]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    snr = table["snr_db"]
    ax.semilogy(snr, table["v_ml"], "o-", color="C0", label="variance, best-1")
    ax.semilogy(snr, table["b_ml"], "--", color="C0", label="bound, best-1")
    for j, tag in enumerate(t_tags, start=1):
        color = f"C{j}"
        ax.semilogy(snr, table[f"v_ht_{tag}"], "s-", color=color,
                    label=f"variance, threshold {tag[1:]}")
        ax.semilogy(snr, table[f"b_ht_{tag}"], "--", color=color,
                    label=f"bound, threshold {tag[1:]}")
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("total variance")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png, dpi=150)
    plt.close(fig)


def cmd_oracle(cfg: dict, args) -> int:
    model = _parse_model(cfg, require_sparse=True)
    x0 = _parse_x0(cfg, model)
    section = dict(_pop(cfg, "oracle", "config", default={}, kind=dict))
    _, j_default = xi_and_j(x0, model.sparsity)
    component = _pop(section, "component", "oracle", default=j_default, kind=int)
    if not 1 <= component <= model.n:
        raise _fail(f"oracle component {component} out of range 1..{model.n}")
    mean_spec = _pop(section, "mean", "oracle", default="unbiased")
    support = _pop(section, "support", "oracle", default=None)
    half_width = _pop(section, "half_width", "oracle", default=6.0 * math.sqrt(model.sigma2), kind=float)
    per_axis = _pop(section, "per_axis", "oracle", default=41, kind=int)
    jitter = _pop(section, "jitter", "oracle", default=1e-12, kind=float)
    _reject_unknown(section, "oracle")
    mode, budget, _ = _parse_bound_options(cfg)
    out, _ = _out_path(cfg, args)
    _reject_unknown(cfg, "config")

    gamma = _mean_for(mean_spec, component, model, "oracle.mean")
    try:
        if support is None:
            k_set = bound_L_star(model, gamma, x0, mode=mode, budget=budget).k_set
        else:
            if (not isinstance(support, list) or not support
                    or not all(isinstance(i, int) and not isinstance(i, bool) for i in support)):
                raise _fail("'support' in oracle must be a list of indices")
            from .model import Support

            k_set = Support.of(support)
            k_set.check_within(model.n)
            if k_set.size != model.sparsity:
                raise _fail(f"oracle support must have {model.sparsity} indices")
        grid = grid_points(k_set, x0, half_width, per_axis, model=model, jitter=jitter)
        diag = oracle_diagnostics(model, gamma, x0, grid)
        lk = bound_L_K(model, gamma, k_set, x0)
    except ConfigError:
        raise
    except ValueError as exc:
        raise _fail(str(exc)) from exc

    gap = diag.value - lk.value
    summary = [
        f"component {component}, K = {{{_support_label(k_set)}}}: "
        f"oracle = {diag.value:.8f}, support bound = {lk.value:.8f}, gap = {gap:.2e}",
        f"grid: {diag.n_points} points, usable {diag.usable_size}, "
        f"condition {diag.condition:.3e}",
    ]
    header = ["component", "support", "n_points", "usable_size", "condition",
              "oracle_value", "bound_l_k", "oracle_minus_bound"]
    rows = [[
        str(component), _support_label(k_set), str(diag.n_points),
        str(diag.usable_size), _fmt(diag.condition), _fmt(diag.value),
        _fmt(lk.value), _fmt(gap),
    ]]
    _emit(out, header, rows, summary)
    if not diag.well_conditioned:
        print("warning: Gram matrix ill-conditioned; bound is valid but may be loose",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_spark(cfg: dict, args) -> int:
    section = dict(_pop(cfg, "model", "config", kind=dict))
    h = _parse_matrix(_pop(section, "h", "model"), "model")
    sigma2 = _pop(section, "sigma2", "model", default=1.0, kind=float)
    sparsity = _pop(section, "sparsity", "model", kind=int)
    _reject_unknown(section, "model")
    out, _ = _out_path(cfg, args)
    _reject_unknown(cfg, "config")
    if not sigma2 > 0.0:
        raise _fail("sigma2 must be positive")
    try:
        ok = spark_exceeds(h, sparsity)
    except ValueError as exc:
        raise _fail(str(exc)) from exc

    relation = ">" if ok else "<="
    summary = [f"spark(H) {relation} {sparsity} for the {h.shape[0]}x{h.shape[1]} matrix"]
    header = ["m", "n", "sparsity", "spark_exceeds"]
    rows = [[str(h.shape[0]), str(h.shape[1]), str(sparsity), str(int(ok))]]
    _emit(out, header, rows, summary)
    return EXIT_OK


_COMMANDS = {
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "fig1": cmd_fig1,
    "oracle": cmd_oracle,
    "spark": cmd_spark,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slmbound",
        description="Variance lower bounds and Monte Carlo benchmarks "
                    "for sparse linear models.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "bound": "per-component and total variance lower bounds at x0",
        "simulate": "Monte Carlo estimator statistics at x0",
        "fig1": "variance and bound curves over an SNR sweep (CSV + PNG)",
        "oracle": "finite-test-point bound cross-check on one support",
        "spark": "test whether every size-S column subset is independent",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--out", default=None, help="output CSV path (overrides the config)")
        p.add_argument("--seed", type=int, default=None, help="override the simulation seed")
        p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument("--threads", type=int, default=1, help="worker threads for simulations")
        if name == "fig1":
            p.add_argument("--no-figure", action="store_true",
                           help="skip the PNG next to the CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if not hasattr(args, "no_figure"):
        args.no_figure = False
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except IllConditionedGramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, UnsupportedConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
