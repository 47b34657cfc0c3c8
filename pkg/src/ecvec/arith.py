"""Small integer helpers: primality, factorisation, modular geometric sums."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    if n % 3 == 0:
        return n == 3
    # deterministic Miller-Rabin for n < 3.3e24
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for b in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if b % n == 0:
            continue
        x = pow(b, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation by trial division (desk-scale n only)."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    for f in (2, 3):
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
    f = 5
    while f * f <= n:
        for g in (f, f + 2):
            while n % g == 0:
                out[g] = out.get(g, 0) + 1
                n //= g
        f += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    divs = [1]
    for prime, mult in factorize(n).items():
        divs = [d * prime**k for d in divs for k in range(mult + 1)]
    return sorted(divs)


def geometric_sum_mod(e: int, n: int, mod: int) -> tuple[int, int]:
    """Return ``(e**n % mod, (1 + e + ... + e**(n-1)) % mod)``.

    Uses the halving identities S(2k) = S(k) * (1 + e^k) and
    S(k+1) = 1 + e * S(k), so no big integers are formed.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    e %= mod
    power, total = 1 % mod, 0
    for bit in bin(n)[2:] if n else "":
        # (power, total) currently describe k; move to 2k
        total = total * (1 + power) % mod
        power = power * power % mod
        if bit == "1":
            total = (1 + e * total) % mod
            power = power * e % mod
    return power, total

