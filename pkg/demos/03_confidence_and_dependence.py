"""Margins of error, interval comparisons, and the signed chi-squared test.

    python3 demos/03_confidence_and_dependence.py
"""

from linsep import AccuracyEstimate, compare, dependence_from_table, margin_of_error

# Wald 95% margins: the +-x.x values that accompany every accuracy.
for p_hat, n in [(0.840, 500), (0.590, 500), (0.521, 800), (0.936, 500)]:
    me = margin_of_error(p_hat, n)
    print(f"accuracy {100 * p_hat:4.1f} at n={n}: ± {100 * me:.1f}")
print()

# Interval arithmetic: superior only when the intervals truly separate.
a = AccuracyEstimate(0.936, 500, "method A")
b = AccuracyEstimate(0.868, 500, "ceiling")
c = AccuracyEstimate(0.932, 500, "method C")
d = AccuracyEstimate(0.886, 500, "ceiling2")
print(f"[{a.lower:.3f}, {a.upper:.3f}] vs [{b.lower:.3f}, {b.upper:.3f}] -> {compare(a, b)}")
print(f"[{c.lower:.3f}, {c.upper:.3f}] vs [{d.lower:.3f}, {d.upper:.3f}] -> {compare(c, d)}")
print()

# Dependence between a probe and a generative method, as a 2x2 table of
# (probe prediction) x (generative prediction) counts.
tables = {
    "strong positive": ((40, 10), (10, 40)),
    "independent": ((25, 25), (25, 25)),
    "inverse": ((8, 42), (44, 6)),
    "degenerate": ((50, 0), (50, 0)),
}
for name, table in tables.items():
    dep = dependence_from_table(table)
    print(
        f"{name:>15}: chi2 {dep.chi2:7.3f}  p {dep.p_value:.2e}  "
        f"significant={dep.significant}  direction={dep.direction}"
    )
