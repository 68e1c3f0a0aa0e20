"""Extended-precision reference values for the special-function tests.

Brute-force double series summed with mpmath at 60 significant digits.
Run: python3 mml_oracle.py
"""
from mpmath import mp, mpf, gamma, factorial, pi, exp, erfc

mp.dps = 60


def mml(beta0, betas, zs, kmax=400):
    total = mpf(0)
    m = len(betas)

    def rec(j, remaining, coef, zprod, arg, k):
        nonlocal total
        if j == m - 1:
            kj = remaining
            c = coef / factorial(kj)
            total += factorial(k) * c * zprod * mpf(zs[j]) ** kj / gamma(arg + betas[j] * kj)
            return
        for kj in range(remaining + 1):
            rec(j + 1, remaining - kj, coef / factorial(kj),
                zprod * mpf(zs[j]) ** kj, arg + betas[j] * kj, k)

    for k in range(kmax + 1):
        rec(0, k, mpf(1), mpf(1), mpf(beta0), k)
    return total


def s1(lam, alphas, rs, t):
    aN = alphas[-1]
    betas = [aN] + [aN - a for a in alphas[:-1]]
    zs = [-lam * t ** aN] + [-r * t ** (aN - a) for a, r in zip(alphas[:-1], rs[:-1])]
    return 1 - lam * t ** aN * mml(1 + aN, betas, zs, 250)


def s2(lam, alphas, rs, t):
    aN = alphas[-1]
    betas = [aN] + [aN - a for a in alphas[:-1]]
    zs = [-lam * t ** aN] + [-r * t ** (aN - a) for a, r in zip(alphas[:-1], rs[:-1])]
    return t ** (aN - 1) * mml(aN, betas, zs, 250)


if __name__ == "__main__":
    print("e*erfc(1) =", mp.nstr(exp(1) * erfc(1), 20))
    print("mml m=2 =", mp.nstr(mml(mpf("1.8"), [mpf("0.8"), mpf("0.3")], [mpf(-1), mpf("-0.5")]), 20))
    lam = pi ** 2 + 1
    print("s1 N=2 =", mp.nstr(s1(lam, [mpf("0.2"), mpf("0.5")], [mpf("0.5"), mpf(1)], mpf("0.1")), 20))
    for x in ["0.1", "0.3", "1.7", "3.3", "10.1", "20.5", "33.3", "45.2", "49.9"]:
        print("gamma", x, "=", mp.nstr(gamma(mpf(x)), 20))
    for x in ["0.25", "0.5", "1.5", "2", "3"]:
        print("e^x^2 erfc(x)", x, "=", mp.nstr(exp(mpf(x) ** 2) * erfc(mpf(x)), 20))
    print("s2 N=2 =", mp.nstr(s2(2 * pi ** 2, [mpf("0.5"), mpf("0.8")], [mpf(1), mpf(1)], mpf("0.05")), 20))
