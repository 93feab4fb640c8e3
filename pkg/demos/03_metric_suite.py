"""The evaluation metrics and their identities.

Boundary scores (precision/recall/F1/over-segmentation/R-value) come from
greedy one-to-one matching under a tolerance window; the Area and M-score
composites are harmonic means. The identities below reproduce a published
leaderboard row from its printed precision/recall.
"""

from attnseg import WordInterval, boundary_metrics, harmonic_mean, r_value, token_f1

p, r = 35.90, 27.03  # printed precision/recall of a published system
os = 100 * (r / p - 1)
print(f"P={p} R={r}")
print(f"  F1  = {harmonic_mean(p, r):.2f}   (printed 30.84)")
print(f"  OS  = {os:.2f} (printed -24.72)")
print(f"  R-val = {r_value(r, os):.2f}  (printed 44.42)")

# boundary scoring on a toy utterance: 20 ms tolerance, edges excluded
hyp = [0.31, 0.62, 0.95]
ref = [0.30, 0.60, 1.20]
report = boundary_metrics([(hyp, ref, 1.5)], tol_ms=20)
print(f"\ntoy utterance: {report.n_match} matches of {report.n_hyp} hyp / {report.n_ref} ref")
print(f"  P={report.precision:.1f} R={report.recall:.1f} F1={report.f1:.1f} "
      f"OS={report.os:.1f} R-val={report.r_value:.1f}")

# token F1 needs both word edges matched
words = [WordInterval("this", 0.30, 0.60), WordInterval("word", 0.60, 1.20)]
tok = token_f1([([0.31, 0.62, 1.21], words)], tol_ms=20)
print(f"\ntoken F1: {tok.f1:.1f} (both edges of both words within 20 ms)")
tok = token_f1([([0.31, 0.70, 1.21], words)], tol_ms=20)
print(f"token F1 with one sloppy boundary: {tok.f1:.1f}")
