"""Exit criteria, each run at its pinned tolerance.

Run ``pytest tests/test_acceptance.py`` to see one PASS/FAIL line per
criterion in the terminal summary.
"""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from rc_lab import seeding
from rc_lab.cli import main
from rc_lab.dist import PaperDistribution
from rc_lab.order_stats import OrderStatSpec, ceil_cube_root, normality_diagnostic, sample_top_order_stats
from rc_lab.scaling import SweepPlan, fit_exponent, markov_bound, markov_check, run_sweep
from rc_lab.sim import NetworkConfig, estimate_throughput

GRID = (10**3, 10**4, 10**5, 10**6)
EPSILON = 0.3
DELTA = 0.1
TRIALS = 10_000
TARGET_EXPONENT = 1 / 3 - DELTA

EXPONENT_TOL = 0.08
EXPONENT_CEILING = 1 / 3 + 0.05
QUARTER = 0.25
QUARTER_SE_MAX = 0.01
TAIL_MIN = 0.5
FALK_KS_MAX = 0.08
# mean of the Kolmogorov distribution: typical KS size from sampling alone
KS_NOISE_COEF = 0.8687
KS_CRIT_99 = 1.628
ROUNDTRIP_TOL = 1e-12
QUADRATURE_TOL = 1e-8
VON_MISES_TOL = 1e-5


@pytest.fixture(scope="module")
def acceptance_sweep():
    plan = SweepPlan(n_grid=GRID, epsilon=EPSILON, delta=DELTA, beta=1.0, noise=1.0,
                     trials=TRIALS, seed=42, policy="TopM")
    return run_sweep(plan)


def test_c1_scaling_exponent(acceptance_sweep, record):
    fit = fit_exponent([(r.n, r.estimate.mean_M) for r in acceptance_sweep])
    ok = abs(fit.exponent - TARGET_EXPONENT) <= EXPONENT_TOL and fit.exponent < EXPONENT_CEILING
    record("C1 scaling exponent", ok,
           f"exponent={fit.exponent:.4f} target={TARGET_EXPONENT:.4f}+-{EXPONENT_TOL} "
           f"ceiling={EXPONENT_CEILING:.4f} r2={fit.r_squared:.4f}")
    assert ok


def test_c2_quarter_bound(acceptance_sweep, record):
    row = acceptance_sweep[-1]
    ratio = row.estimate.success_rate
    ratio_se = row.estimate.std_error / row.m
    ok = row.n == 10**6 and ratio >= QUARTER and ratio_se < QUARTER_SE_MAX
    record("C2 quarter bound", ok, f"n={row.n} m={row.m} E[M]/m={ratio:.4f} se={ratio_se:.2e}")
    assert ok


def test_c3_markov_bound(record):
    d = PaperDistribution(1.0)
    details = []
    ok = markov_bound(1.0, 1.0, d.mean(), 100) == pytest.approx(0.505, abs=1e-15)
    bounds = []
    for m in (10, 100, 1000):
        emp, bound = markov_check(d, m, 1.0, 1.0, TRIALS, seeding.child_stream(42, m))
        slack = 4 * math.sqrt(bound / TRIALS)
        ok &= emp <= bound + slack
        bounds.append(bound)
        details.append(f"m={m}: {emp:.4f}<={bound:.4f}+{slack:.4f}")
    ok &= bounds == sorted(bounds, reverse=True) and abs(bounds[-1] - 0.5) < abs(bounds[0] - 0.5)
    record("C3 Markov bound", ok, "; ".join(details))
    assert ok


def test_c4_tail_event(acceptance_sweep, record):
    row = acceptance_sweep[-1]
    p = row.bounds.tail_event_prob
    ok = row.n == 10**6 and p >= TAIL_MIN
    record("C4 tail event", ok, f"n={row.n} P(weakest direct > 2 beta mean m)={p:.4f}")
    assert ok


@pytest.mark.parametrize("eps", [1.0, EPSILON])
def test_c5_falk_normality(eps, record):
    d = PaperDistribution(eps)
    ks = {}
    for index, n in enumerate((10**3, 10**6)):
        spec = OrderStatSpec(n, ceil_cube_root(n))
        ks[n], _ = normality_diagnostic(d, spec, TRIALS, seeding.child_stream(42, index))
    noise = KS_NOISE_COEF / math.sqrt(TRIALS)
    ok = ks[10**6] <= FALK_KS_MAX and ks[10**3] - ks[10**6] > 2 * noise
    record(f"C5 Falk normality eps={eps}", ok,
           f"KS(1e6,i=100)={ks[10**6]:.4f} KS(1e3,i=10)={ks[10**3]:.4f} 2*noise={2 * noise:.4f}")
    assert ok


def brute_force_top(eps, n, m, replicates, rng, batch=200):
    out = np.empty((replicates, m))
    for start in range(0, replicates, batch):
        k = min(batch, replicates - start)
        u = rng.random((k, n))
        top_u = -np.sort(-np.partition(u, n - m, axis=1)[:, n - m:], axis=1)
        out[start : start + k] = (1.0 - top_u) ** (-1.0 / (2 + eps)) - 1.0
    return out


def test_c6_sampler_oracle_equivalence(record):
    n, m, reps = 10**4, 50, 20_000
    d = PaperDistribution(EPSILON)
    rng = seeding.child_stream(42, 0)
    fast = np.array([sample_top_order_stats(d, n, m, rng) for _ in range(reps)])
    slow = brute_force_top(EPSILON, n, m, reps, seeding.child_stream(42, 1))
    crit = KS_CRIT_99 * math.sqrt(2 / reps)
    ks = np.array([stats.ks_2samp(fast[:, k], slow[:, k]).statistic for k in range(m)])
    ok = bool(np.all(ks < crit))

    details = [f"max per-rank KS={ks.max():.4f} (rank {ks.argmax() + 1}) crit={crit:.4f}"]
    for n_s in (10**3, 10**4):
        rows = {}
        for mode, seed in ((False, 42), (True, 43)):
            plan = SweepPlan(n_grid=[n_s], epsilon=EPSILON, delta=DELTA, trials=TRIALS, seed=seed,
                             oracle_mode=mode)
            rows[mode] = run_sweep(plan)[0].estimate
        pooled = math.hypot(rows[False].std_error, rows[True].std_error)
        diff = abs(rows[False].mean_M - rows[True].mean_M)
        ok &= diff <= 4 * pooled
        details.append(f"n={n_s}: |dM|={diff:.4f}<=4*{pooled:.4f}")
    record("C6 sampler oracle equivalence", ok, "; ".join(details))
    assert ok


@pytest.mark.parametrize("eps", [1.0, EPSILON])
def test_c7_distribution_correctness(eps, record):
    d = PaperDistribution(eps)
    u = np.linspace(0.0, 1 - 1e-9, 1_000_001)
    roundtrip = float(np.max(np.abs(d.cumulative(d.quantile(u)) - u)))

    def raw(k):
        return sum(quad(lambda x: x**k * d.density(x), a, b, epsabs=0, epsrel=1e-13, limit=500)[0]
                   for a, b in ((0, 1), (1, np.inf)))

    q_mean = raw(1)
    q_var = raw(2) - q_mean**2
    mean, var = d.moments()
    closed_ok = mean == pytest.approx(1 / (1 + eps), abs=1e-15)
    if eps == 1.0:
        closed_ok &= mean == 0.5 and var == pytest.approx(0.75, abs=1e-15)

    x = d.sample_iid(10**6, seeding.child_stream(42, 7))
    k = x.size
    s_mean, s_var = x.mean(), x.var(ddof=1)
    se_mean = math.sqrt(var / k)
    m4 = np.mean((x - s_mean) ** 4)
    se_var = math.sqrt(max(m4 - s_var**2, 0.0) / k)
    vm = d.von_mises_ratio(1e6)

    ok = (roundtrip <= ROUNDTRIP_TOL and closed_ok
          and abs(q_mean - mean) <= QUADRATURE_TOL and abs(q_var - var) <= QUADRATURE_TOL
          and abs(s_mean - mean) <= 4 * se_mean and abs(s_var - var) <= 4 * se_var
          and abs(vm - (2 + eps)) <= VON_MISES_TOL)
    record(f"C7 distribution correctness eps={eps}", ok,
           f"roundtrip={roundtrip:.1e} quad dmean={abs(q_mean - mean):.1e} dvar={abs(q_var - var):.1e} "
           f"sample mean z={(s_mean - mean) / se_mean:.2f} var z={(s_var - var) / se_var:.2f} "
           f"vonMises(1e6)-{2 + eps}={vm - (2 + eps):.1e}")
    assert ok


def test_c8_single_pair_closed_form(record):
    cfg = NetworkConfig(n=1, m=1, beta=1.0, noise=1.0, distribution=PaperDistribution(1.0),
                        trials=10**5, seed=42)
    est = estimate_throughput(cfg)
    ok = abs(est.success_rate - 0.125) <= 3 * est.std_error
    record("C8 single-pair closed form", ok,
           f"rate={est.success_rate:.5f} expected=0.125 3se={3 * est.std_error:.5f}")
    assert ok


COMMANDS = [
    ["--command", "sweep", "--trials", "2000"],
    ["--command", "simulate", "--n", "100000", "--trials", "2000", "--dump-trials"],
    ["--command", "falk-check", "--trials", "5000"],
    ["--command", "dist-check", "--epsilon", "1"],
]


def test_c9_determinism(tmp_path, record):
    mismatches = []
    for c, args in enumerate(COMMANDS):
        dirs = []
        for run, threads in enumerate(("1", "4", "1")):
            out = tmp_path / f"cmd{c}_run{run}"
            assert main([*args, "--output-dir", str(out), "--threads", threads]) == 0
            dirs.append(out)
        names = sorted(p.name for p in dirs[0].iterdir())
        for other in dirs[1:]:
            if names != sorted(p.name for p in other.iterdir()):
                mismatches.append(f"{args[1]}: file sets differ")
            for name in names:
                if (dirs[0] / name).read_bytes() != (other / name).read_bytes():
                    mismatches.append(f"{args[1]}:{name}")
    ok = not mismatches
    record("C9 determinism", ok, "byte-identical across reruns and --threads 1/4"
           if ok else "mismatch: " + ", ".join(mismatches))
    assert ok
