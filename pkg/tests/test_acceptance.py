"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Several criteria execute full desk-scale optimization campaigns and
take minutes; the whole module is budgeted to stay within its stated
runtime limits on a desktop-class machine.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import (
    cosine_similarity,
    fd_gradient_vector,
    random_feasible_reflective,
    random_sample,
    random_transmissive,
)
from rismc.channel import ScenarioConfig, crandn, gen_parametric, substream
from rismc.config import ExperimentSpec
from rismc.inner import (
    InnerConfig,
    optimal_precoder,
    optimize_inner,
    phase_gradient,
    total_mse,
)
from rismc.linalg import invert, project_unitary, two_dft, unitarity_residual
from rismc.outer import (
    OuterConfig,
    grad_s1_sample,
    grad_s2_sample,
    grad_sigma_aa_sample,
    grad_sigma_ab_sample,
    run_algorithm1,
    run_algorithm2,
)
from rismc.runner import emit_results, run_experiment
from rismc.config import load_config
from rismc.scattering import (
    PhaseConfig,
    ReflectiveScattering,
    conventional_reflective,
    effective_reflective,
    effective_transmissive,
    end_to_end,
    neumann_partial,
    project_lossless,
    random_phases,
    reflective_matrices,
    symmetrize,
)

DESK = dict(N=8, M=16, K=2)
DESK_TRAIN = dict(train_samples=4, outer_iters=50, redraw_per_iter=True,
                  keep_best=True, val_samples=16)
DESK_INNER = dict(inner_iters=150, inner_tol=1e-7)
MU_REFLECTIVE = 20.0
MU_TRANSMISSIVE = 5.0


def _report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:>2} ({name}): {status}  {detail}")
    return ok


def test_criterion_01_lossless_projection_oracle():
    t0 = time.time()
    rng = substream(101)
    n_pairs, n_grid = 1000, 1_000_000
    saa = crandn(rng, n_pairs)
    sab = crandn(rng, n_pairs)
    paa, pab = project_lossless(saa, sab)
    feas = np.abs(np.abs(paa) ** 2 + np.abs(pab) ** 2 - 1.0).max()

    # Dense oracle on 100 pairs: phases are optimal at the inputs' arguments
    # (for fixed magnitudes, -2 Re{sigma conj(target)} is minimized by phase
    # matching), leaving a one-dimensional search over the magnitude split.
    t_grid = np.linspace(0.0, np.pi / 2.0, n_grid)
    cos_t, sin_t = np.cos(t_grid), np.sin(t_grid)
    max_arg_err = 0.0
    max_obj_gap = 0.0
    for i in range(100):
        r1, r2 = abs(saa[i]), abs(sab[i])
        phase1, phase2 = saa[i] / r1, sab[i] / r2
        objective = (
            np.abs(cos_t * phase1 - saa[i]) ** 2 + np.abs(sin_t * phase2 - sab[i]) ** 2
        )
        best = int(np.argmin(objective))
        t_closed = math.atan2(abs(pab[i]), abs(paa[i]))
        obj_closed = abs(paa[i] - saa[i]) ** 2 + abs(pab[i] - sab[i]) ** 2
        max_arg_err = max(max_arg_err, abs(t_grid[best] - t_closed))
        max_obj_gap = max(max_obj_gap, abs(objective[best] - obj_closed))
        assert obj_closed <= objective[best] + 1e-12
    elapsed = time.time() - t0
    ok = feas < 1e-12 and max_arg_err < 1e-4 and max_obj_gap < 1e-8 and elapsed < 30
    assert _report(
        1, "lossless projection vs dense oracle", ok,
        f"feas={feas:.1e} arg={max_arg_err:.1e} obj={max_obj_gap:.1e} {elapsed:.1f}s",
    )


def test_criterion_02_nearest_unitary_oracle():
    t0 = time.time()
    rng = substream(102)
    worst_margin = np.inf
    worst_resid = 0.0
    for _ in range(200):
        a = crandn(rng, 3, 3)
        p = project_unitary(a)
        worst_resid = max(worst_resid, unitarity_residual(p))
        base = np.linalg.norm(a - p)
        z = crandn(rng, 10_000, 3, 3)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=1, axis2=2)
        q = q * (diag / np.abs(diag))[:, None, :]
        dists = np.linalg.norm(a[None] - q, axis=(1, 2))
        worst_margin = min(worst_margin, float(dists.min() - base))
    elapsed = time.time() - t0
    ok = worst_margin >= -1e-12 and worst_resid < 1e-10 and elapsed < 60
    assert _report(
        2, "nearest unitary vs random unitaries", ok,
        f"margin={worst_margin:.2e} resid={worst_resid:.1e} {elapsed:.1f}s",
    )


def test_criterion_03_gradient_validation():
    t0 = time.time()
    rng = substream(103)
    m, n, k, P, s2 = 9, 4, 2, 5.0, 0.01
    mins = {name: 1.0 for name in ("coupling", "pattern", "receive", "transmit", "phase")}

    for _ in range(50):
        sample = random_sample(m, n, k, rng)
        rs = random_feasible_reflective(m, rng)
        ph = random_phases(m, rng)
        h_eff = end_to_end(sample.H_ru, effective_reflective(rs, ph), sample.H_br)
        f, rho = optimal_precoder(h_eff, P, s2, k)

        def mse_rs(state):
            h = end_to_end(sample.H_ru, effective_reflective(state, ph), sample.H_br)
            return total_mse(h, f, rho, s2, k)

        fd = fd_gradient_vector(
            lambda x: mse_rs(ReflectiveScattering(x, rs.sigma_ab, rs.frame)),
            rs.sigma_aa.copy(),
        )
        g = grad_sigma_aa_sample(sample, rs, ph, f, rho)
        mins["coupling"] = min(mins["coupling"], cosine_similarity(g.conj(), fd))

        fd = fd_gradient_vector(
            lambda x: mse_rs(ReflectiveScattering(rs.sigma_aa, x, rs.frame)),
            rs.sigma_ab.copy(),
        )
        g = grad_sigma_ab_sample(sample, rs, ph, f, rho)
        mins["pattern"] = min(mins["pattern"], cosine_similarity(g.conj(), fd))

        def mse_ph(ups):
            h = end_to_end(
                sample.H_ru, effective_reflective(rs, PhaseConfig(ups)), sample.H_br
            )
            return total_mse(h, f, rho, s2, k)

        fd = fd_gradient_vector(mse_ph, ph.upsilon.copy())
        g = phase_gradient(sample.H_ru, sample.H_br, rs, ph, f, rho)
        mins["phase"] = min(mins["phase"], cosine_similarity(g, fd))

        ts = random_transmissive(m, rng)
        h_eff = end_to_end(sample.H_ru, effective_transmissive(ts, ph), sample.H_br)
        ft, rhot = optimal_precoder(h_eff, P, s2, k)

        def mse_ts(state):
            h = end_to_end(sample.H_ru, effective_transmissive(state, ph), sample.H_br)
            return total_mse(h, ft, rhot, s2, k)

        from rismc.scattering import TransmissiveScattering

        fd = fd_gradient_vector(
            lambda x: mse_ts(TransmissiveScattering(x, ts.s2)), ts.s1.copy()
        )
        g = grad_s1_sample(sample, ts, ph, ft, rhot)
        mins["receive"] = min(mins["receive"], cosine_similarity(g.conj(), fd))

        fd = fd_gradient_vector(
            lambda x: mse_ts(TransmissiveScattering(ts.s1, x)), ts.s2.copy()
        )
        g = grad_s2_sample(sample, ts, ph, ft, rhot)
        mins["transmit"] = min(mins["transmit"], cosine_similarity(g.conj(), fd))

    elapsed = time.time() - t0
    ok = all(v >= 0.999 for v in mins.values()) and elapsed < 120
    detail = " ".join(f"{k}={v:.6f}" for k, v in mins.items()) + f" {elapsed:.1f}s"
    assert _report(3, "gradients vs finite differences", ok, detail)


def test_criterion_04_neumann_series():
    rng = substream(104)
    m = 16
    sigma_aa = symmetrize(0.5 * np.exp(2j * np.pi * rng.random(m)))
    rs = ReflectiveScattering(sigma_aa, np.ones(m, dtype=complex), two_dft(m))
    ph = PhaseConfig(np.ones(m, dtype=complex))
    direct = invert(np.diag(1.0 / ph.upsilon) - reflective_matrices(rs)[0])
    errs = {
        order: np.linalg.norm(neumann_partial(rs, ph, order) - direct)
        for order in range(5, 21)
    }
    ratio = (errs[20] / errs[5]) ** (1 / 15)

    ph_rand = random_phases(m, rng)
    conv = effective_reflective(conventional_reflective(m), ph_rand)
    reduction = np.abs(conv - np.diag(ph_rand.upsilon)).max()
    ok = 0.45 <= ratio <= 0.55 and reduction < 1e-12
    assert _report(
        4, "multiple-reflection series", ok,
        f"ratio={ratio:.4f} conventional-reduction={reduction:.1e}",
    )


def test_criterion_05_constraint_suite():
    t0 = time.time()
    scenario = ScenarioConfig(P=100.0, noise_var=1e-13, **DESK)
    inner = InnerConfig(max_iters=150, tol=1e-7)
    _, trace_r = run_algorithm1(
        scenario,
        OuterConfig(Q=4, I_max=50, mu=MU_REFLECTIVE, seed=0, redraw=True, keep_best=False),
        inner,
    )
    _, trace_t = run_algorithm2(
        scenario,
        OuterConfig(Q=4, I_max=50, mu=MU_TRANSMISSIVE, seed=0, redraw=True, keep_best=False),
        inner,
    )
    worst = {
        "losslessness": max(trace_r.violations["losslessness"]),
        "symmetry": max(trace_r.violations["symmetry"]),
        "unitarity": max(
            max(trace_t.violations["unitarity_s1"]), max(trace_t.violations["unitarity_s2"])
        ),
        "phase": max(
            max(trace_r.violations["phase_unit_modulus"]),
            max(trace_t.violations["phase_unit_modulus"]),
        ),
        "power": max(
            max(trace_r.violations["precoder_power"]),
            max(trace_t.violations["precoder_power"]),
        ),
    }
    ok = (
        worst["losslessness"] < 1e-9
        and worst["symmetry"] < 1e-9
        and worst["unitarity"] < 1e-9
        and worst["phase"] < 1e-12
        and worst["power"] < 1e-9
    )
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    assert _report(5, "constraint suite over all iterations", ok,
                   f"{detail} {time.time()-t0:.0f}s")


def _trend_spec(mode, seed):
    mu = MU_REFLECTIVE if mode == "reflective" else MU_TRANSMISSIVE
    return replace(
        ExperimentSpec(),
        mode=mode,
        sweep="power",
        values=(30.0, 40.0, 50.0),
        trials=1,
        seed=seed,
        eval_samples=20,
        mu=mu,
        **DESK,
        **DESK_TRAIN,
        **DESK_INNER,
    )


def _rates_by(table):
    out = {}
    for cell in table.cells:
        out[(cell.sweep_value, cell.baseline)] = cell.mean_rate()
    return out


@pytest.fixture(scope="module")
def trend_tables():
    tables = {}
    for seed in range(10):
        tables[("reflective", seed)] = _rates_by(run_experiment(_trend_spec("reflective", seed)))
        tables[("transmissive", seed)] = _rates_by(run_experiment(_trend_spec("transmissive", seed)))
    return tables


def test_criterion_06_baseline_ordering_and_power_trend(trend_tables):
    t0 = time.time()
    chain_r = chain_t = 0
    mono_pass = 0
    for seed in range(10):
        r = trend_tables[("reflective", seed)]
        t = trend_tables[("transmissive", seed)]
        if r[(50.0, "proposed")] >= r[(50.0, "fixed_mc")] >= r[(50.0, "conventional")]:
            chain_r += 1
        if t[(50.0, "proposed")] >= t[(50.0, "conventional")]:
            chain_t += 1
        monotone = True
        for rates, baselines in ((r, ("proposed", "fixed_mc", "conventional")),
                                 (t, ("proposed", "conventional"))):
            for b in baselines:
                series = [rates[(p, b)] for p in (30.0, 40.0, 50.0)]
                monotone &= series[0] <= series[1] <= series[2]
        mono_pass += monotone
    ok = chain_r >= 8 and chain_t >= 8 and mono_pass >= 9
    assert _report(
        6, "baseline ordering and power trend", ok,
        f"reflective-chain={chain_r}/10 transmissive-chain={chain_t}/10 "
        f"monotone={mono_pass}/10 {time.time()-t0:.0f}s",
    )


def test_criterion_07_element_count_trend():
    t0 = time.time()
    wins = 0
    for seed in range(10):
        spec = replace(
            ExperimentSpec(),
            mode="reflective",
            sweep="elements",
            values=(16.0, 36.0),
            baselines=("proposed",),
            trials=1,
            seed=seed,
            eval_samples=20,
            mu=MU_REFLECTIVE,
            **DESK,
            **DESK_TRAIN,
            **DESK_INNER,
        )
        rates = _rates_by(run_experiment(spec))
        wins += rates[(36.0, "proposed")] > rates[(16.0, "proposed")]
    ok = wins >= 8
    assert _report(7, "more elements help", ok, f"wins={wins}/10 {time.time()-t0:.0f}s")


def test_criterion_08_scalar_end_to_end():
    cfg = ScenarioConfig(
        N=1, M=1, K=1, P=10.0, noise_var=0.05, d_ris=1.0,
        d_user_range=(1.0, 2.0), C0=1.0,
    )
    worst = 0.0
    for seed in range(5):
        sample = gen_parametric(cfg, substream(108, seed))
        from rismc.scattering import identity_transmissive

        _, sol = optimize_inner(
            sample, identity_transmissive(1), InnerConfig(), cfg.P, cfg.noise_var,
            substream(108, seed, 1),
        )
        gain = abs(sample.H_ru[0, 0]) ** 2 * abs(sample.H_br[0, 0]) ** 2
        expected = math.log2(1.0 + cfg.P * gain / cfg.noise_var)
        worst = max(worst, abs(sol.sum_rate - expected))
    ok = worst < 1e-6
    assert _report(8, "scalar closed-form pipeline", ok, f"max|err|={worst:.2e}")


def test_criterion_09_manifest_determinism(tmp_path):
    spec = replace(
        ExperimentSpec(),
        values=(40.0, 50.0),
        trials=2,
        M=4, N=4, K=2,
        train_samples=2,
        outer_iters=3,
        inner_iters=40,
        eval_samples=3,
        val_samples=2,
        mu=MU_REFLECTIVE,
    )
    first = emit_results(run_experiment(spec), tmp_path / "a")
    respec = load_config(first["manifest"])
    second = emit_results(run_experiment(respec), tmp_path / "b")
    identical = first["results"].read_bytes() == second["results"].read_bytes()
    assert _report(9, "byte-identical rerun from manifest", identical)


def test_criterion_10_complexity_scaling():
    def time_outer_iteration(m):
        cfg = ScenarioConfig(N=4, M=m, K=2, P=100.0, noise_var=1e-13)
        inner = InnerConfig(max_iters=25, tol=1e-300)
        outer = OuterConfig(Q=2, I_max=2, mu=10.0, seed=0, keep_best=False)
        run_algorithm1(cfg, outer, inner)  # warmup
        best = float("inf")
        for _ in range(3):
            start = time.perf_counter()
            run_algorithm1(cfg, outer, inner)
            best = min(best, (time.perf_counter() - start) / outer.I_max)
        return best

    sizes = (16, 64, 144)
    times = [time_outer_iteration(m) for m in sizes]
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ok = 2.3 <= slope <= 3.5
    detail = (
        f"exponent={slope:.3f} times(ms)="
        + "/".join(f"{t*1e3:.1f}" for t in times)
    )
    assert _report(10, "outer-iteration cost scaling", ok, detail)
