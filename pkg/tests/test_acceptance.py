"""Acceptance gate: one recorded PASS/FAIL line per criterion."""
import time

import numpy as np

from qmovers.channels import apply, apply_extended, choi, convex_combine
from qmovers.cli import main
from qmovers.movers import (
    K,
    KP,
    amplitude_grid,
    appendix_a_solve,
    appendix_b_G,
    check_gqm_constraints,
    constraint_tensor,
    cp_threshold,
    critical_p,
    is_gqm,
    kraus_cauchy_schwarz_bound,
    qubit_unot_bound_check,
    qubit_witness,
    random_amplitudes,
    universal_inverter,
    werner_lambda,
    witness_eigen_scan,
)
from qmovers.states import projector, purity, random_pure_state, raw_fidelity, werner_state


def test_criterion_1_cp_threshold(criterion):
    worst, slowest = 0.0, 0.0
    for d in range(2, 7):
        t0 = time.perf_counter()
        res = cp_threshold(d, tol=1e-9)
        slowest = max(slowest, time.perf_counter() - t0)
        # independent oracle: LAPACK Choi spectrum changes sign at the bracket ends
        lo = np.linalg.eigvalsh(choi(universal_inverter(d, res.empirical - 1e-8)).matrix)[0]
        hi = np.linalg.eigvalsh(choi(universal_inverter(d, res.empirical + 1e-8)).matrix)[0]
        assert lo < 0 <= hi
        worst = max(worst, abs(res.empirical - 1 / (d + 1)))
    qubit = abs(cp_threshold(2).empirical - 1 / 3)
    ok = worst <= 1e-9 and qubit <= 1e-9 and slowest < 1.0
    criterion(1, "CP threshold 1/(d+1), d=2..6", ok, f"max error {worst:.2e}, slowest {slowest:.3f} s")


def test_criterion_2_fidelity(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    ps = np.linspace(0, 1, 20)
    for d in range(2, 6):
        states = [random_pure_state(d, rng) for _ in range(100)]
        for p in ps:
            e = universal_inverter(d, p)
            for psi in states:
                worst = max(worst, abs(raw_fidelity(psi, apply(e, projector(psi))) - p))
    states = [random_pure_state(2, rng) for _ in range(100)]
    for _ in range(8):
        axis = rng.standard_normal(3)
        for p in np.linspace(0, 0.95, 20):
            e = qubit_witness(p, axis)
            for psi in states:
                worst = max(worst, abs(raw_fidelity(psi, apply(e, projector(psi))) - p))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5.0
    criterion(2, "fidelity equals p for N_p and M^(p)", ok, f"max deviation {worst:.2e}, {elapsed:.2f} s")


def test_criterion_3_purity_formula(criterion):
    rng = np.random.default_rng(3)
    worst_by_d = {}
    below_one = True
    for d in range(2, 6):
        worst = 0.0
        for p in np.linspace(0, 1, 20):
            e = universal_inverter(d, p)
            claimed = ((1 - p) / (d - 1)) ** 2 + p ** 2
            for _ in range(100):
                psi = random_pure_state(d, rng)
                worst = max(worst, abs(purity(apply(e, projector(psi))) - claimed))
        worst_by_d[d] = worst
        for p in np.linspace(1 / (d + 1), 1 - 1e-6, 200):
            psi = random_pure_state(d, rng)
            below_one &= purity(apply(universal_inverter(d, p), projector(psi))) < 1.0
    ok = max(worst_by_d.values()) <= 1e-12 and below_one
    detail = ", ".join(f"d={d}: {w:.2e}" for d, w in worst_by_d.items())
    criterion(3, "purity ((1-p)/(d-1))^2 + p^2", ok, f"max mismatch {detail}; strictly below 1: {below_one}")


def test_criterion_4_werner_witness(criterion):
    t0 = time.perf_counter()
    qs = np.linspace(0, 1, 21)
    ps = np.linspace(0, 0.95, 21)
    worst, region_errors, other_neg = 0.0, 0, 0.0
    for q in qs:
        for p in ps:
            res = witness_eigen_scan(q, p)
            # the formula must appear among the four eigenvalues
            worst = max(worst, np.min(np.abs(res.eigenvalues - werner_lambda(q, p))))
            other_neg = min(other_neg, res.min_other)
            crit = critical_p(q)
            if abs(p - crit) <= 1e-8 or abs(3 * q - 1) <= 1e-8:
                continue
            detected = res.lambda_numeric < -1e-10
            region_errors += detected != (q > 1 / 3 and p < (3 * q - 1) / (2 * q))
    elapsed = time.perf_counter() - t0
    singlet = np.linalg.eigvalsh(apply_extended(qubit_witness(0.0), werner_state(1.0), 2))[0]
    ok = worst <= 1e-10 and region_errors == 0 and other_neg >= -1e-10 and abs(singlet + 0.5) <= 1e-10 and elapsed < 2.0
    criterion(4, "Werner witness eigenvalue and detection region", ok,
              f"max lambda error {worst:.2e}, region errors {region_errors}, lambda(1,0) {singlet:.12g}, {elapsed:.2f} s")


def test_criterion_5_constraints(criterion):
    worst, cs_excess = 0.0, 0.0
    sums_ok = True
    for d in (2, 3, 4):
        for p in np.linspace(0, 1, 10):
            rep = check_gqm_constraints(universal_inverter(d, p), p, pairs=50, seed=d)
            worst = max(worst, rep.equo_line1, rep.equo_line2, rep.equo_line3, rep.trace_identity, rep.sum_rule)
            sums_ok &= abs(rep.sum_rule_value - d * (d * p - 1)) <= 1e-10
        rng = np.random.default_rng(d)
        for p in np.linspace(1 / (d + 1), 1, 10):
            e = universal_inverter(d, p)
            for _ in range(50):
                k = random_pure_state(d, rng)
                kp = random_pure_state(d, rng)
                kp -= np.vdot(k, kp) * k
                kp /= np.linalg.norm(kp)
                value, bound = kraus_cauchy_schwarz_bound(e, k, kp)
                cs_excess = max(cs_excess, value - bound, value - p)
    p = 1 / 3
    tight = abs(abs(constraint_tensor(universal_inverter(2, p), 0, 1)[K, K, KP, KP]) - p)
    ok = worst <= 1e-10 and sums_ok and cs_excess <= 1e-10 and tight <= 1e-12
    criterion(5, "constraint suite, sum rule and Cauchy-Schwarz bound", ok,
              f"max residual {worst:.2e}, bound excess {cs_excess:.2e}, tightness gap {tight:.2e}")


def test_criterion_6_convex_closure(criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(1000):
        d = int(rng.integers(2, 6))
        n = int(rng.integers(2, 5))
        ps = rng.uniform(0, 1, n)
        w = rng.dirichlet(np.ones(n))
        mix = convex_combine([(universal_inverter(d, p), wi) for p, wi in zip(ps, w)])
        v = is_gqm(mix, float(w @ ps), samples=10, seed=i, tol=1e-11)
        worst = max(worst, v.max_deviation)
    criterion(6, "convex mixtures of inverters are GQM", worst <= 1e-11, f"max deviation {worst:.2e}")


def test_criterion_7_nogo(criterion):
    grid = amplitude_grid(32, 32, 8)
    reports = [appendix_a_solve(p, trials=1000, seed=7, grid=grid) for p in (0.5, 0.0)]
    falsified = all(r.falsified_count == r.trials == 1000 for r in reports)
    solution = max(r.max_constancy_residual_at_solution for r in reports)
    g_dev = 0.0
    for d in (2, 3, 4):
        alpha, beta = random_amplitudes(100, d)
        for p in np.linspace(0, 1, 6):
            t = constraint_tensor(universal_inverter(d, p), 0, 1)
            g_dev = max(g_dev, float(np.max(np.abs(appendix_b_G(t, p, alpha, beta) - p))))
    ok = falsified and solution <= 1e-12 and g_dev <= 1e-10
    counts = ", ".join(f"p={r.p:g}: {r.falsified_count}/{r.trials}" for r in reports)
    criterion(7, "no-go falsifiers", ok, f"{counts}, solution residual {solution:.2e}, G deviation {g_dev:.2e}")


def test_criterion_8_unot_bound(criterion):
    worst = 0.0
    for p in np.linspace(0, 1, 41):
        worst = max(worst, abs(qubit_unot_bound_check(universal_inverter(2, p)) - (1 - p)))
    at_threshold = abs(qubit_unot_bound_check(universal_inverter(2, 1 / 3)) - 2 / 3)
    ok = worst <= 1e-12 and at_threshold <= 1e-12
    criterion(8, "orthogonal-component fidelity 1-p", ok, f"max error {worst:.2e}, at p=1/3 {at_threshold:.2e}")


CLI_RUNS = [
    ["threshold", "--d", "2"],
    ["threshold", "--d", "5", "--format", "csv"],
    ["witness"],
    ["witness", "--random-axes", "2", "--seed", "9", "--workers", "4", "--format", "json"],
    ["verify", "--map", "inverter", "--d", "3", "--p", "0.3"],
    ["verify", "--map", "witness", "--d", "2", "--p", "0.5", "--format", "csv"],
    ["verify", "--map", "mix", "--d", "4", "--p", "0.4", "--seed", "11"],
    ["constraints", "--d", "2", "--p", "0.4"],
    ["constraints", "--map", "mix", "--d", "3", "--p", "0.7", "--seed", "3", "--format", "csv"],
    ["nogo", "--p", "0.5", "--trials", "100", "--seed", "7"],
    ["nogo", "--p", "0", "--trials", "50", "--format", "csv"],
]


def test_criterion_9_determinism(criterion, tmp_path):
    mismatched = []
    for i, argv in enumerate(CLI_RUNS):
        outputs = []
        for rep in range(2):
            dest = tmp_path / f"run{i}_{rep}"
            code = main(argv + ["--out", str(dest)])
            outputs.append((code, dest.read_bytes()))
        if outputs[0] != outputs[1]:
            mismatched.append(" ".join(argv))
    criterion(9, "byte-identical CLI reruns", not mismatched,
              f"{len(CLI_RUNS)} commands" + (f", differing: {mismatched}" if mismatched else ""))
