"""Monte Carlo drivers for the lemma-level checks.

Each ``run_*`` returns ``(rows, summary)``: one flat dict per trial and a
summary dict whose ``band_ok`` entry is the acceptance verdict.
"""

from __future__ import annotations

import math

import numpy as np

from .harness import Role, derive_seed, parallel_map, resolve_k
from .models import control_parameter, n_slots, sample, slot_pair, zeta
from .resampling import PermutationChain, resample, sample_pair_set
from .sensitivity import (
    at_second_eigenvalue,
    delocalization_stat,
    eigenvalue_shift_stat,
    estimate_I_sequence,
    gap_statistics,
    linear_statistic,
    mean_se,
    monotonicity_check,
    perturbation_sandwich_check,
    resolvent_difference_stat,
    resolvent_eigvec_stat,
    rigidity_profile,
    second_gap,
    superconcentration_bound,
    superconcentration_check,
    top_eigenvalue_deviation,
    variance_decomposition_check,
    variance_decomposition_exact,
)
from .spectral import ComplexPoint, eigendecompose, eigenvalues, semicircle_table


def _base(spec, seed, t):
    return sample(spec, derive_seed(seed, t, Role.BASE))


def run_delocalization(spec, trials, seed=0, exponent=4.0, top_const=5.0,
                       lambda_tol=0.1, lambda_fraction=0.95, threads=1):
    """Sup-norm delocalization, ||v_1 - e||_2 <= top_const/q and the lambda_1 location."""

    def one(t):
        es = eigendecompose(_base(spec, seed, t))
        d = delocalization_stat(es, exponent)
        dev = top_eigenvalue_deviation(es, spec)
        return {
            "trial_id": t,
            "max_sup_norm": d.max_sup_norm,
            "sup_bound": d.bound,
            "top_deviation": d.top_deviation,
            "top_bound": top_const / spec.q,
            "lambda1": float(es.values[0]),
            "lambda1_deviation": dev,
        }

    rows = parallel_map(one, range(trials), threads)
    deloc = sum(r["max_sup_norm"] <= r["sup_bound"] for r in rows) / trials
    top = sum(r["top_deviation"] <= r["top_bound"] for r in rows) / trials
    lam = sum(abs(r["lambda1_deviation"]) <= lambda_tol for r in rows) / trials
    mean_dev, se_dev = mean_se([r["lambda1_deviation"] for r in rows])
    summary = {
        "trials": trials,
        "predicted_lambda1": zeta(spec) * spec.q + 1 / (zeta(spec) * spec.q),
        "fraction_delocalized": deloc,
        "fraction_top_within": top,
        "fraction_lambda1_within": lam,
        "mean_lambda1_deviation": mean_dev,
        "se_lambda1_deviation": se_dev,
        "max_top_deviation": max(r["top_deviation"] for r in rows),
        "band_ok": top == 1.0 and lam >= lambda_fraction,
    }
    return rows, summary


def run_rigidity(spec, trials, seed=0, exponent=4.0, min_fraction=0.99, threads=1):
    table = semicircle_table(spec.n)

    def one(t):
        vals = eigenvalues(_base(spec, seed, t))
        prof = rigidity_profile(vals, table, spec.q, exponent)
        return {
            "trial_id": t,
            "fraction_within": prof.fraction_within,
            "max_deviation": float(np.max(prof.deviation[:-1])) if spec.n > 2 else 0.0,
            "lambda2_deviation": float(prof.deviation[0]),
        }

    rows = parallel_map(one, range(trials), threads)
    worst = min(r["fraction_within"] for r in rows)
    summary = {"trials": trials, "min_fraction_within": worst, "band_ok": worst >= min_fraction}
    return rows, summary


def run_gaps(spec, trials, seed=0, c=1.0, rhos=(0.1, 0.25, 0.5, 1.0), threads=1):
    """Empirical P(lambda_2 - lambda_3 <= c N^{-1-rho}) per rho.

    The verdict only checks that the frequencies do not increase with rho.
    """

    def one(t):
        g = gap_statistics(eigenvalues(_base(spec, seed, t)), c, rhos)
        row = {"trial_id": t, "min_gap": g.min_gap, "gap2": float(g.gaps[1])}
        for r in rhos:
            row[f"small_gap2_rho{r}"] = g.second_gap_small[float(r)]
            row[f"tail_count_rho{r}"] = g.tail_counts[float(r)]
        return row

    rows = parallel_map(one, range(trials), threads)
    freq = {str(r): sum(row[f"small_gap2_rho{r}"] for row in rows) / trials for r in rhos}
    ordered = [freq[str(r)] for r in sorted(rhos)]
    summary = {
        "trials": trials,
        "frequency_gap2_small": freq,
        "reference_rate": {str(r): spec.n ** -r * math.log(spec.n) for r in rhos},
        "band_ok": all(a >= b for a, b in zip(ordered, ordered[1:])),
    }
    return rows, summary


def eta_for(n, c1):
    """eta = N^{-2/3} L^{-C1}."""
    return n ** (-2.0 / 3.0) * control_parameter(n) ** (-c1)


def run_resolvent_check(spec, trials, k=None, tau=None, seed=0, diff_c1=1.0, eigvec_c1=2.0,
                        min_fraction=0.95, threads=1):
    """Resolvent comparison statistics at z = lambda_2 + i eta on (A, A^[k]) pairs."""
    kk = resolve_k(spec.n, k, tau)
    big_l = control_parameter(spec.n)
    target = big_l**-2
    shift_bound = spec.n ** (-2.0 / 3.0)

    def one(t):
        x = _base(spec, seed, t)
        pairs = sample_pair_set(spec.n, kk, derive_seed(seed, t, Role.PAIRS))
        xk = resample(x, pairs, sample(spec, derive_seed(seed, t, Role.PRIME)))
        es = eigendecompose(x)
        es_k = eigendecompose(xk) if kk else es
        z_diff = at_second_eigenvalue(es, eta_for(spec.n, diff_c1))
        z_vec = at_second_eigenvalue(es, eta_for(spec.n, eigvec_c1))
        z_vec_k = at_second_eigenvalue(es_k, eta_for(spec.n, eigvec_c1))
        return {
            "trial_id": t,
            "difference_stat": resolvent_difference_stat(es, es_k, z_diff),
            "eigvec_stat": resolvent_eigvec_stat(es, z_vec),
            "eigvec_stat_k": resolvent_eigvec_stat(es_k, z_vec_k),
            "shift_stat": eigenvalue_shift_stat(es, es_k),
            "second_gap": second_gap(es),
        }

    rows = parallel_map(one, range(trials), threads)
    frac = {
        "difference": sum(r["difference_stat"] <= target for r in rows) / trials,
        "eigvec": sum(max(r["eigvec_stat"], r["eigvec_stat_k"]) <= target for r in rows) / trials,
        "shift": sum(r["shift_stat"] <= shift_bound for r in rows) / trials,
    }
    summary = {
        "trials": trials,
        "k": kk,
        "L": big_l,
        "diff_c1": diff_c1,
        "eigvec_c1": eigvec_c1,
        "target": target,
        "fractions": frac,
        "median_difference_stat": float(np.median([r["difference_stat"] for r in rows])),
        "band_ok": all(v >= min_fraction for v in frac.values()),
    }
    return rows, summary


def eta_refinement(es, factors=(10.0, 100.0, 1000.0)):
    """resolvent_eigvec_stat at eta = g/factor, g the distance from lambda_2 to its neighbours."""
    g = second_gap(es)
    return [(g / f, resolvent_eigvec_stat(es, ComplexPoint(float(es.values[1]), g / f))) for f in factors]


def run_sandwich(spec, n_pairs, seed=0, c=10.0, d=2.0, min_fraction=0.99, threads=1):
    """Bracket lambda_2 - mu_2 for random single-entry replacements of one instance."""
    a = _base(spec, seed, 0)
    es_a = eigendecompose(a)
    gen = derive_seed(seed, 0, Role.PERM).generator()
    slots = gen.integers(0, n_slots(spec.n), size=n_pairs)

    def one(t):
        src = sample(spec, derive_seed(seed, t + 1, Role.DOUBLEPRIME))
        i, j = slot_pair(spec.n, int(slots[t]))
        rep = perturbation_sandwich_check(a, i, j, src, spec.q, c, d, es_a=es_a)
        return {"trial_id": t, "i": i, "j": j, "z": rep.z, "delta": rep.delta, "lower": rep.lower,
                "upper": rep.upper, "eps0": rep.eps0, "holds": rep.holds, "degenerate": rep.degenerate}

    rows = parallel_map(one, range(n_pairs), threads)
    used = [r for r in rows if not r["degenerate"]]
    frac = sum(r["holds"] for r in used) / len(used) if used else math.nan
    summary = {
        "pairs": n_pairs,
        "used": len(used),
        "excluded_degenerate": n_pairs - len(used),
        "fraction_holds": frac,
        "top_separation": float(es_a.values[0] - es_a.values[1]),
        "lambda1_deviation": top_eigenvalue_deviation(es_a, spec),
        "band_ok": bool(used) and frac >= min_fraction,
    }
    return rows, summary


# -- resampling-chain experiments -------------------------------------------


def make_chain_builder(spec, seed=0):
    """Replicate r -> PermutationChain with independent base/prime/doubleprime/perm streams."""

    def build(r):
        gen = derive_seed(seed, r, Role.PERM).generator()
        return PermutationChain.draw(
            sample(spec, derive_seed(seed, r, Role.BASE)),
            sample(spec, derive_seed(seed, r, Role.PRIME)),
            sample(spec, derive_seed(seed, r, Role.DOUBLEPRIME)),
            gen,
        )

    return build


def second_eigenvalue(x):
    return float(eigenvalues(x)[1])


STATISTICS = {"linear": linear_statistic, "lambda2": second_eigenvalue}


def default_steps(n):
    steps = {1, 2, 3, 5, n // 4, n // 2, (3 * n) // 4, n - 1, n}
    return sorted(s for s in steps if 1 <= s <= n)


def run_superconcentration(spec, statistic, m_samples, steps=None, seed=0):
    """I_i estimates with monotonicity and superconcentration verdicts.

    For the linear statistic on unit-variance entries the closed form
    2 - (i-1)/n is also checked at 3 SE.
    """
    f = STATISTICS[statistic]
    n = n_slots(spec.n)
    steps = default_steps(n) if steps is None else steps
    iseq = estimate_I_sequence(f, make_chain_builder(spec, seed), steps, m_samples)
    mono = monotonicity_check(iseq)
    over = superconcentration_check(iseq)
    bound, _ = superconcentration_bound(iseq)
    rows = [
        {"step": int(s), "I": float(v), "se": float(e), "bound": float(b)}
        for s, v, e, b in zip(iseq.steps, iseq.values, iseq.mc_stderr, bound)
    ]
    summary = {
        "n_slots": n,
        "m_samples": m_samples,
        "statistic": statistic,
        "variance": iseq.variance_estimate,
        "variance_se": iseq.variance_se,
        "monotonicity_violations": mono.violations,
        "bound_violations": over,
    }
    ok = mono.passed and not over
    if statistic == "linear" and spec.kind.value == "wigner" and spec.sigma == 1.0:
        closed = 2.0 - (iseq.steps - 1) / n
        misses = [int(s) for s, v, e, c in zip(iseq.steps, iseq.values, iseq.mc_stderr, closed)
                  if abs(v - c) > 3.0 * e]
        for row, c in zip(rows, closed):
            row["closed_form"] = float(c)
        summary["closed_form_misses"] = misses
        ok = ok and not misses
    summary["band_ok"] = ok
    return rows, summary, iseq


def run_variance_decomposition(spec=None, statistic="lambda2", m_samples=1000, seed=0,
                               exhaustive=False, support=(-1.0, 1.0), probs=(0.5, 0.5), n=3):
    """Both sides of the variance identity, exhaustively or by Monte Carlo."""
    f = STATISTICS[statistic]
    if exhaustive:
        res = variance_decomposition_exact(f, support, probs, n_slots(n), n=n)
    else:
        res = variance_decomposition_check(f, make_chain_builder(spec, seed), m_samples)
    summary = {
        "exhaustive": exhaustive,
        "statistic": statistic,
        "variance": res.variance,
        "variance_se": res.variance_se,
        "decomposition": res.decomposition,
        "decomposition_se": res.decomposition_se,
        "difference_se": res.difference_se,
        "band_ok": res.agrees,
    }
    return [], summary, res


__all__ = [
    "eta_for",
    "eta_refinement",
    "make_chain_builder",
    "run_delocalization",
    "run_gaps",
    "run_resolvent_check",
    "run_rigidity",
    "run_sandwich",
    "run_superconcentration",
    "run_variance_decomposition",
    "second_eigenvalue",
]
