"""Writes the 72-bin example wind rose used by the bundled configs.

Dominant westerly sector with a weaker southerly lobe and a small uniform floor.
"""
import math

centers = [5.0 * j for j in range(72)]


def bump(theta, mu, kappa):
    return math.exp(kappa * math.cos(math.radians(theta - mu)))


raw = [0.6 * bump(c, 270.0, 4.0) + 0.3 * bump(c, 180.0, 3.0) + 0.1 * bump(c, 45.0, 2.0) + 2.0 for c in centers]
total = sum(raw)
with open("windrose_example.csv", "w") as f:
    f.write("direction_deg,frequency\n")
    for c, r in zip(centers, raw):
        f.write("%.1f,%.10f\n" % (c, r / total))
