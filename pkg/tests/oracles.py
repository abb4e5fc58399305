"""Independent reference implementations used by the tests."""

from decimal import Decimal, getcontext

getcontext().prec = 80
GAMMA_DEC = (1 + Decimal(5).sqrt()) / 2


def fib_word(min_len: int) -> str:
    """Fibonacci word from the concatenation recurrence S_n = S_{n-1} S_{n-2}."""
    a, b = "0", "01"
    while len(b) < min_len:
        a, b = b, b + a
    return b


def fib_standard(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def golden_decimal(x) -> Decimal:
    a, b = x.a, x.b
    return Decimal(a.numerator) / Decimal(a.denominator) + Decimal(b.numerator) / Decimal(b.denominator) * GAMMA_DEC


REF_WORD = fib_word(60000)


def longest_prefix_in_ref(s: str) -> int:
    """Longest prefix of s occurring in a long Fibonacci word (linear scan)."""
    n = 0
    while n < len(s) and s[: n + 1] in REF_WORD:
        n += 1
    return n


def sturmian_coding(t: float, n: int) -> str:
    """Coding of t + k*gamma by [0, gamma-1) -> 0 using high precision decimals."""
    out = []
    x = Decimal(t)
    for _ in range(n):
        f = x - int(x) if x >= 0 else x - int(x) + 1
        out.append("0" if f < GAMMA_DEC - 1 else "1")
        x += GAMMA_DEC
    return "".join(out)
