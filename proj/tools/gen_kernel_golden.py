"""Reference values of the truncated 1D moving-wall sine-series kernel.

Evaluated with mpmath at 40 digits, independent of the C++ library.
Writes tests/data/kernel_golden.csv with columns alpha,x,t,xp,tp,n_max,re,im.
"""
import mpmath as mp

mp.mp.dps = 40


def kernel(alpha, x, t, xp, tp, n_max):
    alpha, x, t, xp, tp = map(mp.mpf, (alpha, x, t, xp, tp))
    L = 1 + 2 * alpha * t
    Lp = 1 + 2 * alpha * tp
    chirp = mp.expj(alpha * (x * x / L - xp * xp / Lp))
    total = mp.mpc(0)
    for n in range(1, n_max + 1):
        k2 = (n * mp.pi) ** 2
        if alpha == 0:
            phase = -k2 * (t - tp) / 2
        else:
            phase = k2 / (4 * alpha) * (1 / L - 1 / Lp)
        total += mp.expj(phase) * mp.sin(n * mp.pi * x / L) * mp.sin(n * mp.pi * xp / Lp)
    return 2 / mp.sqrt(L * Lp) * chirp * total


CASES = [
    (0.5, 0.5, 0.4, 0.5, 0.0, 200),
    (0.5, 0.5, 0.4, 0.5, 0.0, 2000),
    (0.5, 0.3, 0.4, 0.7, 0.0, 200),
    (-2.0, 0.2, 0.1, 0.6, 0.0, 200),
    (-2.0, 0.35, 0.15, 0.1, 0.05, 100),
    (0.0, 0.25, 0.3, 0.6, 0.1, 200),
    (3.0, 1.5, 0.5, 0.9, 0.2, 300),
]

if __name__ == "__main__":
    import pathlib

    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "kernel_golden.csv"
    with open(out, "w") as f:
        f.write("alpha,x,t,xp,tp,n_max,re,im\n")
        for c in CASES:
            v = kernel(*c)
            f.write(",".join(str(a) for a in c))
            f.write(",%s,%s\n" % (mp.nstr(v.real, 20), mp.nstr(v.imag, 20)))
    print(out.read_text())
