"""Independent scalar evaluations used to freeze expected values in the C++ tests.

Run with: python3 tests/oracles/scalar_oracles.py
"""
import math

from scipy import integrate


def beta(ct):
    s = math.sqrt(1.0 - ct)
    return (1.0 + s) / (2.0 * s)


def epsilon(ct):
    return 0.2 * math.sqrt(beta(ct))


def deficit(ct, k, dx_over_d, dy_over_d, dz_over_d):
    sig = k * dx_over_d + epsilon(ct)
    amp = 1.0 - math.sqrt(1.0 - ct / (8.0 * sig * sig))
    return amp * math.exp(-(dy_over_d ** 2 + dz_over_d ** 2) / (2.0 * sig * sig))


def truncated_weibull_mean(shape, scale, lo, hi):
    pdf = lambda u: (shape / scale) * (u / scale) ** (shape - 1) * math.exp(-((u / scale) ** shape))
    mass, _ = integrate.quad(pdf, lo, hi, epsabs=1e-13, epsrel=1e-12)
    first, _ = integrate.quad(lambda u: u * pdf(u), lo, hi, epsabs=1e-13, epsrel=1e-12)
    return first / mass


if __name__ == "__main__":
    print("epsilon(0.5)       = %.17g" % epsilon(0.5))
    print("epsilon(8/9)       = %.17g" % epsilon(8.0 / 9.0))
    print("deficit(0.8,.05,5) = %.17g" % deficit(0.8, 0.05, 5.0, 0.0, 0.0))
    print("deficit(0.8,.05,5,dy=.5) = %.17g" % deficit(0.8, 0.05, 5.0, 0.5, 0.0))
    print("weibull mean k=2 l=8 [3,25] = %.17g" % truncated_weibull_mean(2.0, 8.0, 3.0, 25.0))
