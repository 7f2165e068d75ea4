"""Independent high-precision reference values (mpmath) frozen into the Rust tests."""
import mpmath as mp

mp.mp.dps = 40
I = mp.mpc(0, 1)


def eis(k, tau, terms=400):
    if k % 2:
        return mp.mpf(0)
    q = mp.exp(2 * mp.pi * I * tau)
    s = 0
    for n in range(1, terms):
        s += mp.mpf(sum(d ** (k - 1) for d in range(1, n + 1) if n % d == 0)) * q ** n
    return -mp.bernoulli(k) / mp.factorial(k) + 2 / mp.factorial(k - 1) * s


def eta(tau, terms=400):
    q = mp.exp(2 * mp.pi * I * tau)
    return mp.exp(2 * mp.pi * I * tau / 24) * mp.fprod(1 - q ** n for n in range(1, terms))


def p_lattice(k, z, tau, R=60):
    """P_k for k >= 3 as a lattice sum."""
    s = 0
    for m in range(-R, R + 1):
        for n in range(-R, R + 1):
            s += (z - 2 * mp.pi * I * (m * tau + n)) ** (-k)
    return s


def p_qseries(k, z, tau, terms=200):
    """P_{k} for k >= 2 from the strip expansion; requires -2π Im τ < Re z < 0."""
    q = mp.exp(2 * mp.pi * I * tau)
    qz = mp.exp(z)
    j = k - 1
    s = 0
    for n in range(1, terms):
        s += mp.mpf(n) ** j * qz ** n / (1 - q ** n)
        s += mp.mpf(-n) ** j * qz ** (-n) / (1 - q ** (-n))
    return (-1) ** (j + 1) / mp.factorial(j) * s


def p_laurent(k, z, tau, nmax=120):
    s = z ** (-k)
    for n in range(max(k, 2), nmax):
        if n % 2:
            continue
        s += (-1) ** k * mp.binomial(n - 1, k - 1) * eis(n, tau) * z ** (n - k)
    return s


def show(name, v):
    v = mp.mpc(v)
    print(f"{name}: ({mp.nstr(v.real, 20)}, {mp.nstr(v.imag, 20)})")


if __name__ == "__main__":
    for tau in [I, 1.2 * I, mp.mpf("0.3") + I]:
        for k in [2, 4, 6, 10]:
            show(f"E{k}({tau})", eis(k, tau))
        show(f"eta({tau})", eta(tau))
    show("eta(i) closed", mp.gamma(0.25) / (2 * mp.pi ** 0.75))
    show("E2(i) closed", -1 / (4 * mp.pi))
    show("E4(i) closed", 3 * mp.gamma(0.25) ** 8 / (2 * mp.pi) ** 6 / 720)
    tau = mp.mpf("0.3") + I
    z = mp.mpc("-2.1", "0.9")
    for k in [2, 3, 5]:
        show(f"P{k} qseries z={z}", p_qseries(k, z, tau))
    z2 = mp.mpc("0.7", "0.4")
    for k in [2, 3, 5]:
        show(f"P{k} laurent z={z2}", p_laurent(k, z2, tau))
    show("P3 lattice z=0.7+0.4i", p_lattice(3, z2, tau, 80))
    show("P5 lattice z=0.7+0.4i", p_lattice(5, z2, tau, 30))
    show("P2 qseries z=-2.1+0.9i tau=i", p_qseries(2, mp.mpc("-2.1", "0.9"), I))
