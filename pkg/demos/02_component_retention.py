"""
Choosing how many principal components to keep
==============================================

The diagnoser never feeds raw channels to the network.  It z-scores
the 38 channels, projects them onto the leading principal components
of the training corpus, and trains on those scores.  This script shows
what that projection keeps and what it throws away.
"""

import numpy as np

from pwrdiag.plantsim import ScenarioSpec, FaultKind, reference_corpus, run_scenario
from pwrdiag.preprocess import normalize_apply, normalize_fit, pca_fit, pca_residual

# 1. Fit the normalizer and the components on the reference corpus.
corpus = reference_corpus(noise_sigma=0.01)
normalizer = normalize_fit(corpus.features)
Z = normalize_apply(normalizer, corpus.features)
print(f"corpus: {corpus.n_rows} frames, "
      f"{len(normalizer.kept_columns)} informative channels")

pca = pca_fit(Z, variance_cutoff=0.0)

# 2. The variance spectrum falls off fast.  A handful of directions
# carries nearly everything; the tail is sensor noise.
print()
print("variance fraction per component")
for i, frac in enumerate(pca.variance_fractions[:16]):
    bar = "#" * max(1, int(round(120 * frac)))
    print(f"  {i + 1:>2}  {frac:8.4f}  {bar}")
cum = np.cumsum(pca.variance_fractions)
print(f"  first 5 components: {cum[4]:.1%} of total variance")
print(f"  first 13 components: {cum[12]:.1%} of total variance")

# 3. The retention rule keeps every component above a fraction of the
# total variance.  Sweep the cutoff to see the knee.
print()
print("cutoff sweep")
for cutoff in (0.05, 0.02, 0.01, 0.004, 0.001):
    kept = pca_fit(Z, variance_cutoff=cutoff).retained_count
    print(f"  keep components with >= {cutoff:>5.1%} of variance: "
          f"{kept:>2} retained")

# 4. What does the projection do to noise?  Reconstruct a noisy run
# from its scores alone and compare against the same run simulated
# without noise.  Uncorrelated per-channel noise spreads over all 37
# directions, so whatever falls in the discarded tail is gone; the
# fewer components kept, the more noise (and eventually signal) is
# stripped.
spec = ScenarioSpec(fault_kind=FaultKind.SGTR_B, severity_percent=40.0,
                    onset_time=0.0, duration_steps=600, rng_seed=88,
                    noise_sigma=0.05)
noisy = run_scenario(spec).values
clean = run_scenario(
    ScenarioSpec(**{**spec.to_json(), "noise_sigma": 0.0})).values
z_noisy = normalize_apply(normalizer, noisy)
z_clean = normalize_apply(normalizer, clean)
mse_raw = float(np.mean((z_noisy - z_clean) ** 2))

print()
print("noisy 40% rupture run, sigma=0.05, against its noiseless twin")
print(f"  raw z-scored frames:      distance {mse_raw:.4f}")
for cutoff in (0.02, 0.004, 0.001):
    sub = pca_fit(Z, variance_cutoff=cutoff)
    reconstructed, residual = pca_residual(sub, z_noisy)
    mse_rec = float(np.mean((reconstructed - z_clean) ** 2))
    print(f"  reconstructed, {sub.retained_count:>2} comps: "
          f"distance {mse_rec:.4f} "
          f"(noise energy removed {1.0 - mse_rec / mse_raw:>5.1%})")
