# Regenerates log1pexp_reference.csv: log(1 + e^eta) at 50 significant digits
# on the 10^4-point grid eta_i = -100 + 200 * i / 9999 used by the test suite.
import mpmath

mpmath.mp.dps = 60
N = 10_000
with open("log1pexp_reference.csv", "w") as f:
    f.write("eta,value\n")
    for i in range(N):
        eta = -100.0 + 200.0 * i / (N - 1)
        v = mpmath.log1p(mpmath.exp(mpmath.mpf(eta)))
        f.write(f"{eta!r},{mpmath.nstr(v, 50)}\n")
