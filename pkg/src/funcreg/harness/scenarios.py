"""Monte Carlo scenarios and the analytic experiments behind the CLI subcommands."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .. import fpca, regression
from ..errors import ConfigError, FuncRegError, RankDeficient, SingularCovariance, UnsupportedProcess
from ..fnspace import FunctionExpr, gram, inner_product, norm, parity_parts
from ..processes import (
    CounterexampleProcess,
    ProcessSpec,
    atom_gram,
    counterexample_delta_mp,
    counterexample_delta_norm,
    replicate_rng,
)
from ..subspace import EStructure, Subspace, build_E
from .config import ScenarioConfig, build_process, build_subspace, int_list

ORTHOGONALITY_TOL = 1e-6
SPERP_FLOOR = 1e-8


def parallel_map(fn, items, jobs: int = 1) -> list:
    """Ordered map; the worker count never changes the result."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def split_data_space(f: FunctionExpr, process: ProcessSpec, S: Subspace) -> tuple[FunctionExpr, FunctionExpr]:
    """``(f_S, f_Sperp)``.

    For processes whose curves are all even the data space is the space of even
    functions, so the split is the exact parity split; otherwise ``f`` is
    projected on the truncated S.
    """
    if process.even_support:
        return parity_parts(f)
    f_S = S.project(f)
    return f_S, f - f_S


class ErrorDecomposition(NamedTuple):
    normF2: float
    normGamma2: float
    normSperp2: float
    beta_F: FunctionExpr
    gamma: FunctionExpr
    sperp_term: FunctionExpr
    limit_error2: float
    max_cross: float


def error_decomposition(beta: FunctionExpr, E: EStructure, gamma, process: ProcessSpec) -> ErrorDecomposition:
    """Split the limiting error of the retro-projected estimator into three orthogonal parts.

    Returns ``||beta_F||^2``, ``||gamma||^2`` and
    ``||pi^{-1}(beta_E + gamma) - (beta_E + gamma) - beta_Sperp||^2`` together
    with the functions themselves, the squared limit error and the largest
    pairwise inner product between the three components.
    """
    beta_S, beta_Sperp = split_data_space(beta, process, E.S)
    e = E.e_basis.coordinates(beta)
    beta_E = E.e_basis.expand(e)
    beta_F = beta_S - beta_E
    g = np.zeros(E.dim) if gamma is None else np.asarray(gamma, dtype=float)
    h = e + g
    limit = E.D.expand(E.P_inv @ h)
    term = limit - E.e_basis.expand(h) - beta_Sperp
    gamma_fn = E.e_basis.expand(g)
    comps = (beta_F, gamma_fn, term)
    cross = max(abs(inner_product(a, b)) for i, a in enumerate(comps) for b in comps[i + 1:])
    return ErrorDecomposition(norm(beta_F) ** 2, float(g @ g), norm(term) ** 2,
                              beta_F, gamma_fn, term, norm(limit - beta) ** 2, cross)


@dataclass
class Replicate:
    beta_E: np.ndarray
    beta_D: np.ndarray
    gamma_n: np.ndarray
    condition_number: float
    sigma2_hat: float
    cov_margin: float
    cov_gap: float


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    grid: np.ndarray
    E: EStructure
    beta: FunctionExpr
    replicates: list
    beta_curve: np.ndarray
    projection_curve: np.ndarray
    mean_curve: np.ndarray | None
    variance_curve: np.ndarray | None
    replicate_curves: np.ndarray
    metrics: dict = field(default_factory=dict)
    gamma: np.ndarray | None = None

    @property
    def beta_D(self) -> np.ndarray:
        return np.array([r.beta_D for r in self.replicates]).reshape(len(self.replicates), self.E.dim)

    @property
    def beta_E(self) -> np.ndarray:
        return np.array([r.beta_E for r in self.replicates]).reshape(len(self.replicates), self.E.dim)


def _sorted_eigs(M):
    return np.sort(np.linalg.eigvalsh(0.5 * (M + M.T)))[::-1]


def prepare(cfg: ScenarioConfig):
    """Process, data space, E structure and beta for a config (NotIdentifiable propagates)."""
    process = build_process(cfg)
    S = process.data_space(cfg.k_s)
    D = build_subspace(cfg.subspace, process)
    if cfg.n < D.dim:
        raise ConfigError(f"n = {cfg.n} is smaller than dim D = {D.dim}")
    E = build_E(D, S)
    return process, S, E, cfg.beta_expr()


def analytic_gamma(process: ProcessSpec, E: EStructure, beta: FunctionExpr):
    """Population collinearity bias, or ``None`` when moments are unavailable."""
    resid = beta - E.e_basis.project(beta)
    try:
        return regression.gamma_asymptotic(process, E, resid)
    except (UnsupportedProcess, SingularCovariance):
        return None


def _replicate_runner(cfg: ScenarioConfig, process: ProcessSpec, E: EStructure, beta: FunctionExpr,
                      n: int | None = None):
    n = cfg.n if n is None else n
    funcs = list(E.e_basis.basis)
    G_E = atom_gram(process, funcs)
    resid = beta - E.e_basis.project(beta)
    G_y = atom_gram(process, [beta, resid])
    sigma = float(cfg.sigma)
    contained = E.contained_in_S

    def run(m: int) -> Replicate:
        coefs = process.sample_coefficients(n, replicate_rng(cfg.seed, m, "curves"))
        X = coefs @ G_E
        signal, v = (coefs @ G_y).T
        y = signal + sigma * replicate_rng(cfg.seed, m, "noise").standard_normal(n)
        if cfg.center:
            X = X - X.mean(axis=0, keepdims=True)
            y = y - y.mean()
            v = v - v.mean()
        design = regression.DesignMatrix(X, cfg.grid_points)
        try:
            ls = regression.least_squares(design, y)
            cov_E, cov_D = regression.covariance(design, sigma ** 2, E)
            g_n = regression.fit_E(design, v)
        except RankDeficient as exc:
            raise RankDeficient(f"replicate {m}: {exc}", replicate=m) from exc
        nu_E, nu_D = _sorted_eigs(cov_E), _sorted_eigs(cov_D)
        gap = float(np.max(np.abs(nu_D - nu_E))) if contained else float("nan")
        return Replicate(ls.coef, regression.fit_D(ls.coef, E), g_n, ls.condition_number,
                         ls.sigma2_hat, float(np.min(nu_D - nu_E)), gap)

    return run


def _se_l2(coefs: np.ndarray, G: np.ndarray) -> float:
    """Monte Carlo standard error, in L2, of the mean of ``sum_j c_j f_j`` with Gram ``G``."""
    M = coefs.shape[0]
    if M < 2:
        return float("nan")
    C = np.cov(coefs, rowvar=False, ddof=1).reshape(coefs.shape[1], coefs.shape[1])
    return float(np.sqrt(max(np.trace(G @ C), 0.0) / M))


def run_scenario(cfg: ScenarioConfig, jobs: int = 1, replicates: int | None = None) -> ScenarioResult:
    """Monte Carlo study of the retro-projected estimator for one configuration.

    Raises
    ------
    NotIdentifiable
        If ``D`` meets the complement of the data space.
    RankDeficient
        With the offending replicate index.
    """
    process, S, E, beta = prepare(cfg)
    M = cfg.replicates if replicates is None else replicates
    reps = parallel_map(_replicate_runner(cfg, process, E, beta), range(M), jobs)
    return summarize(cfg, process, E, beta, reps)


def summarize(cfg: ScenarioConfig, process: ProcessSpec, E: EStructure, beta: FunctionExpr,
              reps: list) -> ScenarioResult:
    D = E.D
    grid = np.linspace(-1.0, 1.0, cfg.grid_points)
    Phi = np.stack([f(grid) for f in D.basis])
    projection = D.project(beta)
    M = len(reps)
    bD = np.array([r.beta_D for r in reps]).reshape(M, E.dim)
    bE = np.array([r.beta_E for r in reps]).reshape(M, E.dim)
    curves = bD @ Phi
    gamma = analytic_gamma(process, E, beta)
    e_beta = E.e_basis.coordinates(beta)

    metrics: dict = {
        "n": cfg.n,
        "replicates": M,
        "dim": E.dim,
        "k_s": cfg.k_s,
        "grid_points": cfg.grid_points,
        "min_eigenvalue": E.min_eigenvalue,
        "eigenvalues": [float(v) for v in E.D_D],
        "contained_in_S": E.contained_in_S,
        "beta_E": [float(v) for v in e_beta],
        "gamma": None if gamma is None else [float(v) for v in gamma],
        "sperp_rule": "parity" if process.even_support else "projection",
        "beta_Sperp_norm": norm(split_data_space(beta, process, E.S)[1]),
    }
    dec = error_decomposition(beta, E, gamma, process)
    metrics["decomposition"] = {
        "normF2": dec.normF2, "normGamma2": dec.normGamma2, "normSperp2": dec.normSperp2,
        "limit_error2": dec.limit_error2, "max_cross_inner_product": dec.max_cross,
        "orthogonal": bool(dec.max_cross < ORTHOGONALITY_TOL),
    }
    if M == 0:
        return ScenarioResult(cfg, grid, E, beta, reps, beta(grid), projection(grid), None, None,
                              curves, metrics, gamma)

    mean_c = bD.mean(axis=0)
    mean_fn = D.expand(mean_c)
    var_curve = curves.var(axis=0, ddof=1) if M > 1 else np.zeros(len(grid))
    metrics["mean_beta_D"] = [float(v) for v in mean_c]
    metrics["l2_mean_vs_beta"] = norm(mean_fn - beta)
    metrics["l2_mean_vs_projection"] = norm(mean_fn - projection)
    metrics["mean_coefficient_variance"] = float(bD.var(axis=0, ddof=1).mean()) if M > 1 else 0.0

    # bias of the E-space estimator against the population bias
    bias_E = bE.mean(axis=0) - e_beta
    se_E = bE.std(axis=0, ddof=1) / np.sqrt(M) if M > 1 else np.full(E.dim, np.nan)
    metrics["bias_E"] = [float(v) for v in bias_E]
    metrics["bias_E_se"] = [float(v) for v in se_E]
    metrics["bias_E_norm"] = float(np.linalg.norm(bias_E))
    metrics["bias_E_se_l2"] = _se_l2(bE, np.eye(E.dim))
    if gamma is not None:
        metrics["bias_vs_gamma_z"] = [float(v) for v in (bias_E - gamma) / se_E]

    # data-space split of the mean bias curve
    parts_S, parts_P = zip(*(split_data_space(f, process, E.S) for f in D.basis))
    bias_S, bias_P = split_data_space(mean_fn - beta, process, E.S)
    metrics["bias_S_norm"] = norm(bias_S)
    metrics["bias_S_se"] = _se_l2(bD, gram(list(parts_S)))
    metrics["bias_Sperp_mismatch"] = norm(bias_P - dec.sperp_term)
    metrics["bias_Sperp_se"] = _se_l2(bD, gram(list(parts_P)))
    metrics["sperp_floor"] = SPERP_FLOOR

    metrics["condition_number_max"] = max(r.condition_number for r in reps)
    metrics["condition_number_min"] = min(r.condition_number for r in reps)
    metrics["sigma2_hat_mean"] = float(np.mean([r.sigma2_hat for r in reps]))
    metrics["cov_order_margin"] = min(r.cov_margin for r in reps)
    metrics["cov_equal_gap"] = max(r.cov_gap for r in reps) if E.contained_in_S else None
    gn = np.array([r.gamma_n for r in reps])
    metrics["gamma_n_mean"] = [float(v) for v in gn.mean(axis=0)]
    return ScenarioResult(cfg, grid, E, beta, reps, beta(grid), projection(grid), mean_fn(grid),
                          var_curve, curves, metrics, gamma)


def gamma_n_path(cfg: ScenarioConfig, ns=(100, 1000, 10000), replicate: int = 0) -> list[dict]:
    """``||gamma_n - gamma||`` along nested prefixes of one fixed-seed sample."""
    process, S, E, beta = prepare(cfg)
    gamma = analytic_gamma(process, E, beta)
    if gamma is None:
        raise UnsupportedProcess("the SLLN path needs analytic process moments")
    resid = beta - E.e_basis.project(beta)
    coefs = process.sample_coefficients(max(ns), replicate_rng(cfg.seed, replicate, "curves"))
    X_all = coefs @ atom_gram(process, list(E.e_basis.basis))
    v_all = coefs @ atom_gram(process, [resid])[:, 0]
    rows = []
    for n in ns:
        g_n = regression.fit_E(regression.DesignMatrix(X_all[:n], cfg.grid_points), v_all[:n])
        rows.append({"n": int(n), "gamma_n": [float(v) for v in g_n],
                     "error": float(np.linalg.norm(g_n - gamma))})
    return rows


def run_bias(cfg: ScenarioConfig, jobs: int = 1) -> dict:
    """Analytic bias, its PC form, the error decomposition, the SLLN path and the MC check."""
    process, S, E, beta = prepare(cfg)
    gamma = analytic_gamma(process, E, beta)
    resid = beta - E.e_basis.project(beta)
    delta = None
    if gamma is not None:
        delta = regression.delta_along_pcs(process, E, resid)
    ns = int_list(cfg.section("bias").get("slln_n", "100, 1000, 10000"))
    path = gamma_n_path(cfg, ns) if gamma is not None else []
    result = run_scenario(cfg, jobs)
    m = result.metrics
    return {
        "case": cfg.case,
        "seed": cfg.seed,
        "gamma": m["gamma"],
        "delta": None if delta is None else [float(v) for v in delta],
        "decomposition": m["decomposition"],
        "slln": path,
        "monte_carlo": {
            "bias_E": m["bias_E"],
            "bias_E_se": m["bias_E_se"],
            "bias_vs_gamma_z": m.get("bias_vs_gamma_z"),
            "bias_E_norm": m["bias_E_norm"],
            "bias_E_se_l2": m["bias_E_se_l2"],
        },
        "min_eigenvalue": E.min_eigenvalue,
    }


# ---------------------------------------------------------------------------
# analytic experiments


def counterexample_table(process: CounterexampleProcess, d_max: int | None = None) -> list[dict]:
    """Closed form against the moment route for ``d = 1 .. d_max``.

    The moment route runs in double precision while the scaled covariance is
    well conditioned and in extended precision beyond that.
    """
    d_max = process.d_cap if d_max is None else d_max
    S = process.data_space()
    beta = process.beta()
    rows = []
    for d in range(1, d_max + 1):
        closed = counterexample_delta_norm(process, d)
        try:
            E = build_E(process.chain_basis(d), S)
            moment = fpca.gamma_dk(process, E, beta, d).norm
            route = "double"
        except SingularCovariance:
            moment = counterexample_delta_mp(process, d)
            route = "extended"
        rows.append({"d": d, "delta_closed": float(closed), "delta_moment": float(moment),
                     "route": route})
    return rows


def run_counterexample(cfg: ScenarioConfig) -> list[dict]:
    process = build_process(cfg)
    if not isinstance(process, CounterexampleProcess):
        raise ConfigError("the counterexample study needs process variant 'counterexample'")
    d_max = cfg.section("counterexample").get("d_max")
    return counterexample_table(process, int(d_max) if d_max else None)


def run_truncation_study(cfg: ScenarioConfig, jobs: int = 1) -> dict:
    """``k_d`` schedule, bias norms, bounds and Monte Carlo errors of the PC-truncated estimator."""
    process = build_process(cfg)
    beta = cfg.beta_expr()
    sec = cfg.section("truncation")
    schedule = int_list(sec.get("d_schedule", "3..9"))
    target = float(sec.get("target_scale", "1"))
    mc_reps = int(sec.get("replicates", "20"))
    chain = fpca.default_chain(process, cfg.k_s)
    choice = fpca.choose_kd(schedule, process, beta, chain, target)
    lam_max = choice["lambda_max"]
    rows = []
    for d, k, bf2 in zip(schedule, choice["k"], choice["beta_F_norm2"]):
        E_d = chain(d)
        g = fpca.gamma_dk(process, E_d, beta, k)
        bound = fpca.bias_bound(k, choice["lambda_kk"], lam_max, np.sqrt(bf2))
        D = E_d.D
        kl = fpca.kl_decompose(fpca.population_covariance(process, D), D)
        Vk = kl.vectors[:, :k]
        c_beta = D.coordinates(beta)
        tail2 = max(norm(beta) ** 2 - float(c_beta @ c_beta), 0.0)
        n_d = max(20 * d, 500)
        sub = ScenarioConfig(case=cfg.case, beta=cfg.beta, n=n_d, replicates=mc_reps, sigma=cfg.sigma,
                             seed=cfg.seed, grid_points=cfg.grid_points, center=cfg.center)
        runner = _replicate_runner(sub, process, E_d, beta, n_d)
        errs = []
        for rep in parallel_map(runner, range(mc_reps), jobs):
            trunc = Vk @ (Vk.T @ rep.beta_D)
            errs.append(np.sqrt(float((trunc - c_beta) @ (trunc - c_beta)) + tail2))
        rows.append({"d": d, "k": k, "gamma_norm": g.norm, "bound": bound,
                     "beta_F_norm2": float(bf2), "n": n_d,
                     "mc_error": float(np.mean(errs)) if errs else float("nan")})
    return {"rows": rows, "k_d": choice["k"], "products": choice["products"],
            "lambda_max": lam_max, "lambda_kk": choice["lambda_kk"], "flags": choice["flags"]}


def run_interlacing(cfg: ScenarioConfig, jobs: int = 1) -> dict:
    """Random nested symmetric families checked for interlacing violations."""
    sec = cfg.section("interlacing")
    trials = int(sec.get("trials", "100"))
    size = int(sec.get("max_size", "50"))

    def one(t: int) -> dict:
        fam = fpca.random_nested_family(replicate_rng(cfg.seed, t, "curves"), size)
        rep = fpca.interlacing_verify(fam)
        return {"trial": t, "size": size, "checks": rep.checks, "violations": rep.violations,
                "worst_margin": rep.worst_margin}

    rows = parallel_map(one, range(trials), jobs)
    return {"rows": rows, "trials": trials, "max_size": size,
            "violations": int(sum(r["violations"] for r in rows)),
            "worst_margin": float(min(r["worst_margin"] for r in rows)) if rows else None}


__all__ = [
    "ErrorDecomposition",
    "FuncRegError",
    "ScenarioResult",
    "analytic_gamma",
    "counterexample_table",
    "error_decomposition",
    "gamma_n_path",
    "parallel_map",
    "prepare",
    "run_bias",
    "run_counterexample",
    "run_interlacing",
    "run_scenario",
    "run_truncation_study",
    "split_data_space",
]
