"""Working precision and decimal (de)serialization of mpmath numbers.

The working precision is mpmath's global ``mp.prec``.  It is initialised from
the ``DIFFORTHO_PREC`` environment variable (default 256 bits) when the package
is imported.
"""
from __future__ import annotations

import math
import os
import re
from contextlib import contextmanager
from typing import Iterator

import mpmath as mp

DEFAULT_PRECISION = 256
PRECISION_ENV = "DIFFORTHO_PREC"
MIN_PRECISION = 53


def _initial_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if not raw:
        return DEFAULT_PRECISION
    bits = int(raw)
    if bits < MIN_PRECISION:
        raise ValueError(f"{PRECISION_ENV}={bits} is below {MIN_PRECISION} bits")
    return bits


def get_precision() -> int:
    return mp.mp.prec


def set_precision(bits: int) -> None:
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} bits")
    mp.mp.prec = int(bits)


@contextmanager
def working_precision(bits: int) -> Iterator[int]:
    """Temporarily run at ``bits`` of mantissa."""
    old = mp.mp.prec
    set_precision(bits)
    try:
        yield bits
    finally:
        mp.mp.prec = old


def tol(guard: int, bits: int | None = None) -> mp.mpf:
    """Return ``2**-(B - guard)`` for the working precision B."""
    b = get_precision() if bits is None else bits
    return mp.ldexp(mp.mpf(1), -(b - guard))


def decimal_digits(bits: int | None = None) -> int:
    """Digits needed so that a decimal string round-trips at ``bits``."""
    b = get_precision() if bits is None else bits
    return int(math.ceil(b * math.log10(2))) + 2


def fmt(x) -> str:
    """Format a real number as a round-trip decimal string."""
    x = mp.mpf(x)
    if x == 0:
        return "0"
    return mp.nstr(x, decimal_digits(), strip_zeros=True, min_fixed=-5, max_fixed=20)


def fmt_complex(z) -> str:
    """Format as ``a+bi`` (the form accepted by :func:`parse_complex`)."""
    z = mp.mpc(z)
    re_s = fmt(z.real)
    im = z.imag
    sign = "-" if im < 0 else "+"
    return f"{re_s}{sign}{fmt(abs(im))}i"


def parse_scalar(text) -> mp.mpf:
    if isinstance(text, str):
        text = text.strip()
    return mp.mpf(text)


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL_RE = re.compile(rf"^[+-]?{_NUM}$")
_COMPLEX_RE = re.compile(rf"^(?P<re>[+-]?{_NUM})?(?P<sign>[+-])?(?P<im>{_NUM})?[ij]$")


def parse_complex(text) -> mp.mpc:
    """Parse ``a``, ``a+bi``, ``a-bj``, ``-bi`` or ``i`` into an mpc."""
    if not isinstance(text, str):
        return mp.mpc(text)
    s = text.strip().replace(" ", "")
    if _REAL_RE.match(s):
        return mp.mpc(mp.mpf(s), 0)
    m = _COMPLEX_RE.match(s)
    if not m:
        raise ValueError(f"cannot parse complex number {text!r}")
    re_s, sign, im_s = m.group("re"), m.group("sign"), m.group("im")
    if sign is None:
        # "bi": the leading number is the imaginary part
        if im_s is not None:
            raise ValueError(f"cannot parse complex number {text!r}")
        body = re_s if re_s not in (None, "+", "-") else (re_s or "") + "1"
        return mp.mpc(0, mp.mpf(body))
    im = mp.mpf(im_s or "1") * (-1 if sign == "-" else 1)
    return mp.mpc(mp.mpf(re_s) if re_s is not None else 0, im)


mp.mp.prec = _initial_precision()
