"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Thresholds come from the bundled preset configs, never from literals here,
except for the fixed numerical tolerances the criteria themselves state.
"""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from funcreg.fnspace import Constant, Cosine, FunctionExpr, Sine, default_rule, gram, legendre_even_atoms, linear_legendre
from funcreg.fpca import gamma_dk
from funcreg.harness import cli
from funcreg.harness.config import build_process, build_subspace, load_config
from funcreg.harness.scenarios import (
    counterexample_table,
    gamma_n_path,
    run_interlacing,
    run_scenario,
)
from funcreg.processes import (
    AppendixCProcess,
    CounterexampleProcess,
    ExampleProcess,
    Remark3Process,
    counterexample_delta,
    counterexample_delta_norm,
)
from funcreg.subspace import build_E, d_theta, even_data_space, legendre_even_space


@pytest.fixture
def report(capsys):
    def emit(number: int, name: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {name}" + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {number} failed: {detail}"

    return emit


def _ortho_error(funcs) -> float:
    G = gram(list(funcs), rule=default_rule())
    return float(np.max(np.abs(G - np.eye(len(funcs)))))


def _fourier_atoms(K: int = 40):
    atoms = [FunctionExpr.atom(Constant(), 1 / math.sqrt(2))]
    for k in range(1, K + 1):
        atoms += [FunctionExpr.atom(Cosine(k)), FunctionExpr.atom(Sine(k))]
    return atoms


def test_criterion_01_orthonormality(report):
    errors = {
        "legendre": _ortho_error(legendre_even_atoms() + [linear_legendre()]),
        "fourier": _ortho_error(_fourier_atoms()),
        "appendix_c_dictionary": _ortho_error(AppendixCProcess().atoms),
    }
    S_even = even_data_space(50)
    e_bases = {f"D_theta({t:.4f})": build_E(d_theta(t), S_even) for t in (0.0, math.pi / 6, math.pi / 3)}
    e_bases["legendre_even"] = build_E(legendre_even_space("D"), S_even)
    appc = AppendixCProcess()
    e_bases["first_pcs(3)"] = build_E(build_subspace("first_pcs(3)", appc), S_even)
    ce = CounterexampleProcess.default()
    for d in (1, 4, 7):
        e_bases[f"counterexample_{d}"] = build_E(ce.chain_basis(d), ce.data_space())
    r3 = Remark3Process()
    e_bases["remark3_12"] = build_E(r3.chain_basis(12), r3.data_space())
    ex = ExampleProcess()
    e_bases["example_9"] = build_E(ex.chain_basis(9), ex.data_space())
    for name, E in e_bases.items():
        errors[f"E[{name}]"] = _ortho_error(E.e_basis.basis)
    worst = max(errors, key=errors.get)
    report(1, "orthonormality at default quadrature", errors[worst] < 1e-8,
           f"worst {worst}: {errors[worst]:.2e}")


def test_criterion_02_case_a(report):
    cfg = load_config("case_a")
    big = run_scenario(cfg).metrics["l2_mean_vs_beta"]
    small_n = int(cfg.thresholds["compare_n"])
    small = run_scenario(replace(cfg, n=small_n)).metrics["l2_mean_vs_beta"]
    thr = cfg.thresholds["l2_mean_vs_beta"]
    report(2, "case (a) unbiased and consistent", big < thr and big < small,
           f"L2 = {big:.4f} < {thr} at n = {cfg.n}; {small:.4f} at n = {small_n}")


def test_criterion_03_case_b(report):
    cfg = load_config("case_b")
    m = run_scenario(cfg).metrics
    k = cfg.thresholds["se_multiple"]
    floor = cfg.thresholds["sperp_floor"]
    even_ok = m["bias_S_norm"] < k * m["bias_S_se"]
    odd_ok = m["bias_Sperp_mismatch"] < k * max(m["bias_Sperp_se"], floor)
    report(3, "case (b) bias lives in S-complement", even_ok and odd_ok,
           f"even {m['bias_S_norm']:.3e} vs {k}*{m['bias_S_se']:.3e}; "
           f"odd mismatch {m['bias_Sperp_mismatch']:.3e} vs {k}*max({m['bias_Sperp_se']:.3e}, {floor})")


def test_criterion_04_case_c(report):
    pcs_cfg = load_config("case_c_pcs")
    m = run_scenario(pcs_cfg).metrics
    k = pcs_cfg.thresholds["se_multiple"]
    pcs_ok = m["bias_E_norm"] < k * m["bias_E_se_l2"] and max(abs(g) for g in m["gamma"]) < 1e-10
    leg_cfg = load_config("case_c_legendre")
    ml = run_scenario(leg_cfg).metrics
    zmax = leg_cfg.thresholds["z_max"]
    z = np.abs(ml["bias_vs_gamma_z"])
    report(4, "case (c) K-L nulling and Legendre bias", pcs_ok and bool(np.all(z < zmax)),
           f"PCs: |bias| {m['bias_E_norm']:.3e} vs {k}*SE {m['bias_E_se_l2']:.3e}; Legendre max z {z.max():.2f}")


def test_criterion_05_counterexample(report):
    proc = build_process(load_config("counterexample"))
    S = proc.data_space()
    diffs = []
    for d in (3, 5, 7):
        moment = gamma_dk(proc, build_E(proc.chain_basis(d), S), proc.beta(), d).norm
        diffs.append(abs(moment - counterexample_delta(proc, d)))
    odd = [counterexample_delta_norm(proc, d) for d in range(1, 22, 2)]
    even = [counterexample_delta_norm(proc, d) for d in range(2, 22, 2)]
    table = counterexample_table(proc, 21)
    table_ok = all(abs(r["delta_closed"] - r["delta_moment"]) <= 1e-10 * max(1.0, r["delta_closed"])
                   for r in table)
    ok = max(diffs) < 1e-10 and all(b > a for a, b in zip(odd, odd[1:])) and all(v == 0 for v in even)
    report(5, "counterexample divergence", ok and table_ok,
           f"max |closed - moment| d=3,5,7: {max(diffs):.2e}; |delta_21^21| = {odd[-1]:.3f}")


def test_criterion_06_remark3(report):
    proc = build_process(load_config("remark3"))
    S = proc.data_space()
    worst = 0.0
    for d in range(1, 13):
        E = build_E(proc.chain_basis(d), S)
        for k in range(1, d + 1):
            worst = max(worst, abs(gamma_dk(proc, E, proc.beta(), k).norm - math.sqrt(k)))
    report(6, "bias norm sqrt(k) on the growth process", worst < 1e-10, f"max error {worst:.2e}")


def test_criterion_07_interlacing(report):
    cfg = load_config("interlacing")
    res = run_interlacing(cfg)
    ok = res["trials"] == 100 and res["max_size"] == 50 and res["violations"] == 0
    report(7, "interlacing on random nested families", ok,
           f"{res['violations']} violations, worst margin {res['worst_margin']:.2e}")


def test_criterion_08_covariance_ordering(report):
    margins, gaps = {}, {}
    for name in ("case_a", "case_b", "theta_pi6", "case_c_pcs", "case_c_legendre"):
        m = run_scenario(load_config(name)).metrics
        margins[name] = m["cov_order_margin"]
        if m["contained_in_S"]:
            gaps[name] = m["cov_equal_gap"]
    ok = min(margins.values()) >= -1e-10 and max(gaps.values()) <= 1e-10
    report(8, "covariance ordering nu_D >= nu_E", ok,
           f"min margin {min(margins.values()):.2e}; max equal-gap {max(gaps.values()):.2e} over {sorted(gaps)}")


def test_criterion_09_slln(report):
    cfg = load_config("case_c_legendre")
    ns = [int(v) for v in cfg.section("bias")["slln_n"].split(",")]
    errs = [r["error"] for r in gamma_n_path(cfg, ns)]
    ok = ns == [100, 1000, 10000] and all(b < a for a, b in zip(errs, errs[1:]))
    report(9, "SLLN convergence of gamma_n", ok, ", ".join(f"{e:.4f}" for e in errs))


def test_criterion_10_identifiability_gate(report, tmp_path, capsys):
    code = cli.main(["simulate", "theta_pi2", "--out", str(tmp_path)])
    diag = json.loads((tmp_path / "theta_pi2_0_diagnostics.json").read_text())
    err = capsys.readouterr().err
    ok2 = code == 2 and diag["min_eigenvalue"] < 1e-8 and "min eigenvalue" in err
    code3 = cli.main(["simulate", "case_a", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    summary = json.loads((tmp_path / "case_a_0_summary.json").read_text())
    lam = summary["metrics"]["min_eigenvalue"]
    ok3 = code3 == 0 and abs(lam - 0.25) < 1e-6 and "min eigenvalue" in out
    report(10, "identifiability gate", ok2 and ok3,
           f"pi/2: exit {code}, min eig {diag['min_eigenvalue']:.2e}; pi/3: exit {code3}, min eig {lam:.10f}")


DETERMINISM_RUNS = [
    ("simulate", "case_a"),
    ("bias", "case_c_legendre"),
    ("counterexample", "counterexample"),
    ("truncation", "truncation"),
    ("interlacing", "interlacing"),
]


def test_criterion_11_determinism(report, tmp_path, capsys):
    mismatched = []
    count = 0
    for command, preset in DETERMINISM_RUNS:
        outputs = []
        for run, jobs in enumerate((1, 4)):
            out = tmp_path / f"{command}_{run}"
            assert cli.main([command, preset, "--out", str(out), "--jobs", str(jobs)]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        capsys.readouterr()
        a, b = outputs
        count += len(a)
        if not a or a != b:
            mismatched.append(command)
    report(11, "byte-identical CSV across runs and --jobs", not mismatched,
           f"{count} CSV files compared" + (f"; mismatched: {mismatched}" if mismatched else ""))
