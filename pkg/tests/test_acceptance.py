"""Acceptance criteria 1-9.

Each criterion is one test that records a ``PASS``/``FAIL`` line; the lines are
printed in the pytest terminal summary and when this file is run as a script.
"""
import itertools
import time

import numpy as np

from privmac import aep, codesim, hashlemma, optimize, regions
from privmac import entropy as ent
from privmac import qstate as q

RESULTS: dict[int, str] = {}


def report(number: int, title: str, ok: bool, detail: str, started: float) -> None:
    line = f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'} ({detail}; {time.perf_counter() - started:.1f}s)"
    RESULTS[number] = line
    print(line)
    assert ok, line


def h(x):
    x = np.clip(np.asarray(x, dtype=float), 1e-300, 1.0)
    y = np.clip(1 - x, 1e-300, 1.0)
    return -(x * np.log2(x) + y * np.log2(y))


# ---- 1-3: hashing and typical-set smoothing ------------------------------------------


def test_criterion_1_leftover_hash_soundness():
    t0 = time.perf_counter()
    recs = hashlemma.soundness_suite(200, seed=0)
    shapes_ok = all(r.L <= 3 and max(r.dims[:-1]) <= 4 and r.dims[-1] <= 4 and max(r.r) <= 2 for r in recs)
    violations = sum(not r.passed(1e-9) for r in recs)
    report(1, "leftover hash", len(recs) == 200 and shapes_ok and violations == 0,
           f"{violations} violations in {len(recs)} instances, min margin {min(r.margin for r in recs):.3g}", t0)


def test_criterion_2_product_state_bound():
    t0 = time.perf_counter()
    recs = hashlemma.product_suite(20, ns=(1, 2), epsilon=0.25, seed=0)
    violations = sum(not r.passed(1e-9) for r in recs)
    report(2, "product-state bound", len(recs) == 40 and violations == 0,
           f"{violations} violations in {len(recs)} (instance, n) pairs", t0)


def test_criterion_3_truncation_construction():
    t0 = time.perf_counter()
    out = aep.truncation_suite(100, seed=0, ns=range(1, 9), max_users=2)
    failures = [(i, r.n) for i, r in out if not r.passed]
    worst_v = max(r.variational - r.epsilon for _, r in out)
    report(3, "truncated distribution", len({i for i, _ in out}) == 100 and not failures,
           f"{len(failures)} failures in {len(out)} cases, max V - eps {worst_v:.3g}", t0)


# ---- 4-5, 7: set functions and regions -----------------------------------------------


def test_criterion_4_submodularity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    bad = 0
    worst = 0.0
    for _ in range(100):
        rho = q.random_cq_state((2, 2, 2), 4, rng, product=True, qdims=(2, 2))
        t = regions.entropy_tables(rho)
        for fn in (regions.region_set_function(rho, clip=False, tables=t),
                   regions.g_function(rho, tables=t), regions.h_function(rho, tables=t)):
            chk = regions.is_submodular(fn, 1e-9)
            bad += not chk
            worst = max(worst, chk.violation)
    report(4, "submodularity", bad == 0, f"{bad} failing functions of 300, worst violation {worst:.3g}", t0)


def random_nonmonotone_submodular(rng, L):
    """Weighted cut function plus a concave function of a modular weight (submodular, >= 0)."""
    wts = rng.uniform(0, 1, size=(L, L))
    mod = rng.uniform(0, 2, size=L)
    vals = np.zeros(1 << L)
    for s in range(1 << L):
        inside = [(s >> l) & 1 for l in range(L)]
        cut = sum(wts[a, b] for a in range(L) for b in range(L) if inside[a] and not inside[b])
        vals[s] = cut + np.sqrt(sum(mod[l] for l in range(L) if inside[l]))
    return regions.SetFunction(L, vals)


def lattice_submodular(rng, step):
    a, b = rng.integers(-12, 13, size=2)
    c = rng.integers(min(-12, a + b), a + b + 1)
    return regions.SetFunction(2, np.array([0, a, b, c]) * step)


def grid_feasible(g, f, step):
    pts = np.arange(-24, 26) * step
    x1, x2 = np.meshgrid(pts, pts, indexing="ij")
    ok = np.ones_like(x1, dtype=bool)
    for s, xs in ((1, x1), (2, x2), (3, x1 + x2)):
        ok &= (-g.values[s] - 1e-9 <= xs) & (xs <= f.values[s] + 1e-9)
    return bool(ok.any())


def test_criterion_5_polymatroid_machinery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    problems = []
    for trial in range(60):
        L = int(rng.integers(2, 5))
        f = random_nonmonotone_submodular(rng, L)
        c = regions.monotonize(f)
        if not (c.is_normalized() and c.is_nondecreasing() and regions.is_submodular(c)):
            problems.append(("not polymatroid", trial))
        if c.values[c.full] != f.values[f.full]:
            problems.append(("f*(L) != f(L)", trial))
        region = regions.RateRegion(c)
        for v in region.vertices():
            if not region.contains(v) or abs(sum(v) - c.values[c.full]) > 1e-9:
                problems.append(("vertex", trial))
    disagreements = 0
    for _ in range(50):
        f, g = lattice_submodular(rng, 0.1), lattice_submodular(rng, 0.1)
        disagreements += regions.feasible_sandwich(g, f) != grid_feasible(g, f, 0.1)
    report(5, "polymatroid machinery", not problems and disagreements == 0,
           f"{len(problems)} monotonize/vertex problems in 60 functions, "
           f"{disagreements} sandwich disagreements in 50 systems", t0)


def test_criterion_7_region_sanity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    zero_ok = True
    for _ in range(20):
        L = int(rng.integers(1, 4))
        sizes = tuple(int(k) for k in rng.integers(2, 4, size=L))
        pmfs = [rng.dirichlet(np.ones(k)) for k in sizes]
        joint = np.ones(())
        for p in pmfs:
            joint = np.multiply.outer(joint, p)
        d_b = 3
        law = rng.dirichlet(np.ones(d_b), size=sizes)  # classical channel p(b | x_L)
        states = np.zeros(sizes + (d_b, d_b), dtype=complex)
        for x in itertools.product(*(range(k) for k in sizes)):
            states[x] = np.diag(law[x])
        rho = q.CqState(joint, states, (d_b, 1))
        f = regions.region_set_function(rho)
        full = joint[..., None] * law  # p(x_L, b)
        for s in range(1, 1 << L):
            users = regions.users_of(s, L)
            rest = [l for l in range(L) if l not in users]

            def H(keep, with_b):
                axes = tuple(l for l in range(L) if l not in keep) + (() if with_b else (L,))
                return ent.shannon(full.sum(axis=axes).ravel())

            oracle = H(range(L), False) - H(rest, False) - H(range(L), True) + H(rest, True)
            worst = max(worst, abs(f.values[s] - oracle))
        eve_only = codesim.trivial_bob_mac(sizes).cq_state(pmfs)
        zero_ok &= bool(np.all(regions.region_set_function(eve_only).values == 0.0))
    report(7, "region sanity", worst <= 1e-9 and zero_ok,
           f"E-trivial max deviation {worst:.3g}, B-trivial zero region {zero_ok}", t0)


# ---- 6: private vs coherent sum rates ------------------------------------------------


def test_criterion_6_degradable_sum_rates():
    t0 = time.perf_counter()
    gamma = 0.2
    cases = {"amplitude damping 0.2": optimize.degradable_amplitude_damping(gamma),
             "dephasing 0.1": optimize.degradable_dephasing(0.1),
             "two-user damping (0.15, 0.3)": optimize.two_user_damping(0.15, 0.3)}
    gaps = {}
    p_values = {}
    for name, dc in cases.items():
        rep = optimize.theorem3_check(dc, restarts=6, budget=40000, seed=0)
        gaps[name] = rep.gap
        p_values[name] = rep.p_sum.value
    grid = float(np.max(h((1 - gamma) * np.linspace(0, 1, 10**4)) - h(gamma * np.linspace(0, 1, 10**4))))
    grid_dev = abs(p_values["amplitude damping 0.2"] - grid)
    ok = all(g <= 2e-3 for g in gaps.values()) and grid_dev <= 1e-3
    detail = ", ".join(f"{k} gap {v:.2g}" for k, v in gaps.items())
    report(6, "degradable sum rates", ok, f"{detail}; 1-user grid deviation {grid_dev:.2g}", t0)


# ---- 8: code simulation --------------------------------------------------------------


def test_criterion_8_code_simulation():
    t0 = time.perf_counter()
    uniform = [0.5, 0.5]
    alpha = 0.1
    perfect = codesim.simulate(codesim.noiseless_mac((2, 2)), [uniform, uniform], [(0.5, 0.25), (0.5, 0.0)], 4,
                               seed=0, alpha=alpha)
    perfect_ok = perfect.max_error <= 1e-10 and perfect.leakage <= 1e-10
    tr = codesim.trend(codesim.degraded_eve_mac((2,), 0.0, 0.9), [uniform], [(0.5, 0.0)], ns=(2, 6),
                       seeds=range(30), alpha=alpha)
    rng = np.random.default_rng(8)
    kept = [codesim.expurgate(rng.exponential(size=m), rng.pareto(1.5, size=m), alpha).mean()
            for m in rng.integers(1, 200, size=200)]
    expurgation_ok = min(kept + [perfect.retained_fraction, tr.min_retained]) >= 1 - 2 * alpha
    report(8, "code simulation", perfect_ok and tr.nonincreasing and expurgation_ok,
           f"noiseless n=4 error {perfect.max_error:.2g} leakage {perfect.leakage:.2g}; "
           f"mean error n=2/6 {tr.mean_error[0]:.3g}/{tr.mean_error[1]:.3g}, "
           f"mean leakage {tr.mean_leakage[0]:.3g}/{tr.mean_leakage[1]:.3g}; "
           f"min retained {min(kept + [tr.min_retained]):.3f}", t0)


# ---- 9: entropy identities -----------------------------------------------------------


def test_criterion_9_entropy_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    h2_bad = 0
    for _ in range(200):
        cq = q.random_cq_state((int(rng.integers(1, 5)),), int(rng.integers(1, 5)), rng)
        sigma = None if rng.random() < 0.5 else q.random_density(cq.qdim, rng)
        h2_bad += ent.h2_collision(cq, sigma) < ent.hmin_cq(cq, sigma) - 1e-9
    chain_dev = 0.0
    for _ in range(100):
        cq = q.random_cq_state((int(rng.integers(1, 5)),), int(rng.integers(1, 5)), rng)
        rho_e = cq.quantum_marginal()
        sigma = q.fully_mixed_on_support(rho_e)
        chain_dev = max(chain_dev, abs(ent.hmin_joint(cq) - ent.hmin_cq(cq, sigma) - ent.hmax(rho_e)))
    kets = [np.array([np.cos(2 * np.pi * k / 3), np.sin(2 * np.pi * k / 3)]) for k in range(3)]
    trine = [np.outer(v, v) for v in kets]
    success = float(np.mean(codesim.success_probabilities(codesim.pgm_decoder(trine), trine)))
    ok = h2_bad == 0 and chain_dev <= 1e-9 and abs(success - 2 / 3) <= 1e-9
    report(9, "entropy identities", ok,
           f"H2 < Hmin in {h2_bad} of 200; chain-rule deviation {chain_dev:.2g}; trine PGM {success:.12f}", t0)


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
