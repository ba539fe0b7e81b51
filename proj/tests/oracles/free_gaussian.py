"""Closed-form free Gaussian wavepacket, evaluated with mpmath.

Prints a C++ table that tests/oracles/frozen_values.hpp freezes. Run with
`python3 tests/oracles/free_gaussian.py` to regenerate.
"""

import mpmath as mp

mp.mp.dps = 40


def psi(x, t, sigma0, hbar=1, m=1):
    s = 1 + 1j * hbar * t / (2 * m * sigma0**2)
    return (2 * mp.pi * sigma0**2) ** (-0.25) / mp.sqrt(s) * mp.exp(-(x**2) / (4 * sigma0**2 * s))


def width(t, sigma0, hbar=1, m=1):
    return sigma0 * mp.sqrt(1 + (hbar * t / (2 * m * sigma0**2)) ** 2)


def velocity(x, t, sigma0, hbar=1, m=1):
    # hbar/m * d/dx arg(psi), by numerical differentiation of the phase
    phase = lambda y: mp.arg(psi(y, t, sigma0, hbar, m))
    return hbar / m * mp.diff(phase, x)


def main():
    rows = []
    for sigma0 in (mp.mpf(1), mp.mpf("0.5")):
        for t in (mp.mpf(0), mp.mpf("0.5"), mp.mpf(1)):
            for x in (mp.mpf("-1.5"), mp.mpf("0.25"), mp.mpf(2)):
                p = psi(x, t, sigma0)
                rows.append((sigma0, t, x, mp.re(p), mp.im(p), velocity(x, t, sigma0), width(t, sigma0)))
    print("// sigma0, t, x, re psi, im psi, v, sigma(t)")
    for r in rows:
        print("{" + ", ".join(mp.nstr(v, 17) for v in r) + "},")


if __name__ == "__main__":
    main()
