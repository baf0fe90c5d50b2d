"""
Truncated trigonometric-exponential series in four amplitudes.

A series of order ``N`` represents

    sum  a1^i a2^j a3^k a4^m  e^{(i-j) th3} [c cos(p th1 + q th2) + s sin(p th1 + q th2)]

over exponents with ``i + j + k + m <= N``. Internally each monomial carries a
Hermitian grid of complex-exponential coefficients ``C[p, q]`` for
``-N <= p, q <= N`` with ``C[p, q] = (c - i s) / 2`` and ``C[-p, -q]`` its
conjugate. Products are exact discrete convolutions done on a grid large
enough that nothing aliases into the retained harmonics.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OrderMismatchError

PRUNE = 1e-18


@dataclass(frozen=True)
class MonomialBasis:
    order: int
    exponents: np.ndarray  # (n, 4)
    degree: np.ndarray  # (n,)
    index: dict
    sum_table: np.ndarray  # (n, n), -1 when the product exceeds the order

    def __len__(self) -> int:
        return len(self.exponents)

    def of(self, exps) -> int:
        return self.index[tuple(int(e) for e in exps)]

    def degree_slice(self, n: int) -> slice:
        lo = int(np.searchsorted(self.degree, n, side="left"))
        hi = int(np.searchsorted(self.degree, n, side="right"))
        return slice(lo, hi)


@lru_cache(maxsize=None)
def monomial_basis(order: int) -> MonomialBasis:
    if order < 0:
        raise ValueError("order must be non-negative")
    exps = [e for e in itertools.product(range(order + 1), repeat=4) if sum(e) <= order]
    exps.sort(key=lambda e: (sum(e), e))
    arr = np.array(exps, dtype=np.int64).reshape(-1, 4)
    index = {e: n for n, e in enumerate(exps)}
    n = len(exps)
    table = np.full((n, n), -1, dtype=np.int64)
    for a, ea in enumerate(exps):
        for b, eb in enumerate(exps):
            key = (ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3])
            if sum(key) <= order:
                table[a, b] = index[key]
    arr.setflags(write=False)
    table.setflags(write=False)
    return MonomialBasis(order, arr, arr.sum(axis=1), index, table)


@lru_cache(maxsize=None)
def _harmonic_grids(order: int):
    h = np.arange(-order, order + 1)
    pgrid, qgrid = np.meshgrid(h, h, indexing="ij")
    return pgrid, qgrid


def _check_same(a: "TrigSeries", b: "TrigSeries") -> None:
    if a.order != b.order:
        raise OrderMismatchError(f"series orders differ: {a.order} vs {b.order}")


def _canonical(p: int, q: int) -> bool:
    return p > 0 or (p == 0 and q >= 0)


class TrigSeries:
    """Immutable truncated series; see the module docstring for the layout."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs=None, *, _finalize: bool = True):
        self.order = int(order)
        width = 2 * self.order + 1
        shape = (len(monomial_basis(self.order)), width, width)
        if coeffs is None:
            coeffs = np.zeros(shape, dtype=complex)
        else:
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.shape != shape:
                raise ValueError(f"coefficient array shape {coeffs.shape} != {shape}")
            if _finalize:
                coeffs = _hermitian_prune(coeffs)
        coeffs.setflags(write=False)
        self.coeffs = coeffs

    # construction ---------------------------------------------------------

    @classmethod
    def zero(cls, order: int) -> "TrigSeries":
        return cls(order)

    @classmethod
    def constant(cls, order: int, value: float) -> "TrigSeries":
        return cls.from_terms(order, [((0, 0, 0, 0, 0, 0), float(value), 0.0)])

    @classmethod
    def term(cls, order: int, exps, p: int = 0, q: int = 0, c: float = 1.0, s: float = 0.0) -> "TrigSeries":
        return cls.from_terms(order, [((*exps, p, q), c, s)])

    @classmethod
    def from_terms(cls, order: int, terms) -> "TrigSeries":
        """Build from ``((i, j, k, m, p, q), c, s)`` items; repeated keys accumulate.

        Non-canonical harmonics are folded: ``(c, s)`` at ``(-p, -q)`` equals
        ``(c, -s)`` at ``(p, q)``.
        """
        basis = monomial_basis(order)
        arr = np.zeros((len(basis), 2 * order + 1, 2 * order + 1), dtype=complex)
        for key, c, s in terms:
            i, j, k, m, p, q = (int(v) for v in key)
            if min(i, j, k, m) < 0:
                raise ValueError(f"negative amplitude exponent in {key}")
            if i + j + k + m > order:
                continue
            if abs(p) > order or abs(q) > order:
                raise ValueError(f"harmonic ({p}, {q}) outside the order-{order} range")
            if not _canonical(p, q):
                p, q, s = -p, -q, -s
            mono = basis.index[(i, j, k, m)]
            if p == 0 and q == 0:
                arr[mono, order, order] += c
            else:
                arr[mono, order + p, order + q] += 0.5 * complex(c, -s)
                arr[mono, order - p, order - q] += 0.5 * complex(c, s)
        return cls(order, arr)

    # inspection -----------------------------------------------------------

    @property
    def basis(self) -> MonomialBasis:
        return monomial_basis(self.order)

    def nonzero_monomials(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.coeffs != 0, axis=(1, 2)))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def get(self, i: int, j: int, k: int, m: int, p: int = 0, q: int = 0):
        """Return ``(c, s)`` for the canonical form of the given index."""
        if i + j + k + m > self.order or abs(p) > self.order or abs(q) > self.order:
            return 0.0, 0.0
        sign = 1.0
        if not _canonical(p, q):
            p, q, sign = -p, -q, -1.0
        val = self.coeffs[self.basis.index[(i, j, k, m)], self.order + p, self.order + q]
        if p == 0 and q == 0:
            return float(val.real), 0.0
        return float(2.0 * val.real), sign * float(-2.0 * val.imag)

    def terms(self):
        """Canonical ``((i, j, k, m, p, q), c, s)`` triples in deterministic order."""
        basis = self.basis
        n = self.order
        for mono in self.nonzero_monomials():
            exps = tuple(int(e) for e in basis.exponents[mono])
            block = self.coeffs[mono]
            for p in range(0, n + 1):
                for q in range(-n if p > 0 else 0, n + 1):
                    val = block[n + p, n + q]
                    if val == 0:
                        continue
                    if p == 0 and q == 0:
                        yield (*exps, p, q), float(val.real), 0.0
                    else:
                        yield (*exps, p, q), float(2.0 * val.real), float(-2.0 * val.imag)

    def __len__(self) -> int:
        return sum(1 for _ in self.terms())

    def max_degree(self) -> int:
        monos = self.nonzero_monomials()
        return int(self.basis.degree[monos].max()) if len(monos) else -1

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, TrigSeries):
            _check_same(self, other)
            return TrigSeries(self.order, self.coeffs + other.coeffs)
        if np.isscalar(other):
            return self + TrigSeries.constant(self.order, other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return TrigSeries(self.order, -self.coeffs, _finalize=False)

    def __sub__(self, other):
        if isinstance(other, TrigSeries):
            _check_same(self, other)
            return TrigSeries(self.order, self.coeffs - other.coeffs)
        if np.isscalar(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigSeries):
            return mul(self, other)
        if np.isscalar(other):
            return TrigSeries(self.order, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / float(other))
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, TrigSeries):
            return NotImplemented
        return self.order == other.order and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def truncate(self, max_order: int) -> "TrigSeries":
        arr = self.coeffs.copy()
        arr[self.basis.degree > max_order] = 0
        return TrigSeries(self.order, arr, _finalize=False)

    def part(self, degree: int) -> "TrigSeries":
        """Only the terms whose amplitude degree equals ``degree``."""
        arr = np.zeros_like(self.coeffs)
        sl = self.basis.degree_slice(degree)
        arr[sl] = self.coeffs[sl]
        return TrigSeries(self.order, arr, _finalize=False)

    def evaluate(self, freqs: "Frequencies", amplitudes, phases=(0.0, 0.0), t=0.0):
        return evaluate(self, freqs, amplitudes, phases, t)

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "terms": [
                {"i": i, "j": j, "k": k, "m": m, "p": p, "q": q, "c": c, "s": s}
                for (i, j, k, m, p, q), c, s in self.terms()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrigSeries":
        terms = (((t["i"], t["j"], t["k"], t["m"], t["p"], t["q"]), float(t["c"]), float(t["s"])) for t in data["terms"])
        return cls.from_terms(int(data["order"]), terms)

    def __repr__(self) -> str:
        return f"TrigSeries(order={self.order}, terms={len(self)})"


def _hermitian_prune(arr: np.ndarray) -> np.ndarray:
    flipped = np.conj(arr[:, ::-1, ::-1])
    out = 0.5 * (arr + flipped)
    small_re = np.abs(out.real) < 0.5 * PRUNE
    small_im = np.abs(out.imag) < 0.5 * PRUNE
    out.real[small_re] = 0.0
    out.imag[small_im] = 0.0
    return out


def add(a: TrigSeries, b: TrigSeries) -> TrigSeries:
    return a + b


def mul(a: TrigSeries, b: TrigSeries, max_order: int | None = None) -> TrigSeries:
    """Truncated product. Terms above ``max_order`` (default: the series order) are dropped."""
    _check_same(a, b)
    order = a.order
    limit = order if max_order is None else min(order, max_order)
    basis = a.basis
    ma, mb = a.nonzero_monomials(), b.nonzero_monomials()
    out = np.zeros_like(a.coeffs)
    if len(ma) == 0 or len(mb) == 0:
        return TrigSeries(order, out, _finalize=False)
    table = basis.sum_table[np.ix_(ma, mb)]
    ia, ib = np.nonzero((table >= 0) & (basis.degree[table] <= limit))
    if len(ia) == 0:
        return TrigSeries(order, out, _finalize=False)
    target = table[ia, ib]
    perm = np.argsort(target, kind="stable")
    ia, ib, target = ia[perm], ib[perm], target[perm]

    grid = 3 * order + 1
    fa = _samples(a.coeffs[ma], order, grid)
    fb = _samples(b.coeffs[mb], order, grid)
    prod = fa[ia] * fb[ib]
    starts = np.flatnonzero(np.r_[True, target[1:] != target[:-1]])
    summed = np.add.reduceat(prod, starts, axis=0)
    coeffs = _coefficients(summed, order, grid)

    # exact support of each output block, so round-off cannot create spurious harmonics
    sa = _samples((a.coeffs[ma] != 0).astype(float), order, grid)
    sb = _samples((b.coeffs[mb] != 0).astype(float), order, grid)
    support = np.add.reduceat(sa[ia] * sb[ib], starts, axis=0)
    mask = _coefficients(support, order, grid).real > 0.5
    coeffs[~mask] = 0
    out[target[starts]] = coeffs
    return TrigSeries(order, out)


def _samples(blocks: np.ndarray, order: int, grid: int) -> np.ndarray:
    """Values of each harmonic block on a ``grid x grid`` torus mesh."""
    padded = np.zeros((blocks.shape[0], grid, grid), dtype=complex)
    n = order
    # place harmonic h at FFT slot h mod grid
    idx = np.arange(-n, n + 1) % grid
    padded[:, idx[:, None], idx[None, :]] = blocks
    return np.fft.ifft2(padded, axes=(1, 2)) * (grid * grid)


def _coefficients(samples: np.ndarray, order: int, grid: int) -> np.ndarray:
    spec = np.fft.fft2(samples, axes=(1, 2)) / (grid * grid)
    idx = np.arange(-order, order + 1) % grid
    return spec[:, idx[:, None], idx[None, :]]


def power(a: TrigSeries, exponent: int, max_order: int | None = None) -> TrigSeries:
    if exponent < 0:
        raise ValueError("exponent must be non-negative")
    result = TrigSeries.constant(a.order, 1.0)
    for _ in range(exponent):
        result = mul(result, a, max_order)
    return result


# frequencies ---------------------------------------------------------------


class FrequencySeries:
    """Amplitude power series for one frequency; index ``(i, j, k, m)`` maps to a real coefficient."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs=None):
        self.order = int(order)
        n = len(monomial_basis(self.order))
        arr = np.zeros(n) if coeffs is None else np.array(coeffs, dtype=float)
        if arr.shape != (n,):
            raise ValueError(f"frequency coefficient shape {arr.shape} != {(n,)}")
        arr.setflags(write=False)
        self.coeffs = arr

    @classmethod
    def from_terms(cls, order: int, terms) -> "FrequencySeries":
        basis = monomial_basis(order)
        arr = np.zeros(len(basis))
        for key, value in terms:
            key = tuple(int(v) for v in key)
            if sum(key) > order:
                raise ValueError(f"frequency index {key} exceeds order {order}")
            arr[basis.index[key]] += value
        return cls(order, arr)

    @classmethod
    def constant(cls, order: int, value: float) -> "FrequencySeries":
        return cls.from_terms(order, [((0, 0, 0, 0), value)])

    @property
    def zeroth(self) -> float:
        return float(self.coeffs[0])

    def get(self, i: int, j: int, k: int, m: int) -> float:
        if i + j + k + m > self.order:
            return 0.0
        return float(self.coeffs[monomial_basis(self.order).index[(i, j, k, m)]])

    def with_term(self, key, value: float) -> "FrequencySeries":
        arr = self.coeffs.copy()
        arr[monomial_basis(self.order).of(key)] = value
        return FrequencySeries(self.order, arr)

    def value(self, amplitudes) -> float:
        return float(_monomial_values(self.order, amplitudes) @ self.coeffs)

    def terms(self):
        basis = monomial_basis(self.order)
        for n in np.flatnonzero(self.coeffs):
            yield tuple(int(e) for e in basis.exponents[n]), float(self.coeffs[n])

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "terms": [{"i": i, "j": j, "k": k, "m": m, "value": v} for (i, j, k, m), v in self.terms()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FrequencySeries":
        return cls.from_terms(int(data["order"]), (((t["i"], t["j"], t["k"], t["m"]), float(t["value"])) for t in data["terms"]))

    def __eq__(self, other):
        if not isinstance(other, FrequencySeries):
            return NotImplemented
        return self.order == other.order and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __repr__(self) -> str:
        return f"FrequencySeries(order={self.order}, zeroth={self.zeroth!r})"


@dataclass(frozen=True)
class Frequencies:
    """The three angle rates: ``omega`` and ``nu`` for the oscillatory modes, ``lam`` for the hyperbolic one."""

    omega: FrequencySeries
    nu: FrequencySeries
    lam: FrequencySeries

    @property
    def order(self) -> int:
        return self.omega.order

    @classmethod
    def constant(cls, order: int, omega: float, nu: float, lam: float) -> "Frequencies":
        return cls(
            FrequencySeries.constant(order, omega),
            FrequencySeries.constant(order, nu),
            FrequencySeries.constant(order, lam),
        )

    def values(self, amplitudes):
        mv = _monomial_values(self.order, amplitudes)
        return float(mv @ self.omega.coeffs), float(mv @ self.nu.coeffs), float(mv @ self.lam.coeffs)

    def to_dict(self) -> dict:
        return {"omega": self.omega.to_dict(), "nu": self.nu.to_dict(), "lambda": self.lam.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Frequencies":
        return cls(
            FrequencySeries.from_dict(data["omega"]),
            FrequencySeries.from_dict(data["nu"]),
            FrequencySeries.from_dict(data["lambda"]),
        )


def _monomial_values(order: int, amplitudes) -> np.ndarray:
    amps = np.asarray(amplitudes, dtype=float)
    if amps.shape != (4,):
        raise ValueError("exactly four amplitudes are required")
    exps = monomial_basis(order).exponents
    powers = amps[None, :] ** exps  # 0**0 == 1
    return np.prod(powers, axis=1)


def ddt(a: TrigSeries, freqs: Frequencies, max_order: int | None = None) -> TrigSeries:
    """Time derivative with angle rates given as amplitude series.

    A term ``e^{(i-j) th3} e^{i(p th1 + q th2)}`` differentiates to itself times
    ``(i - j) lam + i (p omega + q nu)``, and the rate series multiply the
    amplitude monomial.
    """
    if freqs.order != a.order:
        raise OrderMismatchError(f"series order {a.order} vs frequency order {freqs.order}")
    order = a.order
    limit = order if max_order is None else min(order, max_order)
    basis = a.basis
    pgrid, qgrid = _harmonic_grids(order)
    monos = a.nonzero_monomials()
    out = np.zeros_like(a.coeffs)
    if len(monos) == 0:
        return TrigSeries(order, out, _finalize=False)
    hyper = (basis.exponents[monos, 0] - basis.exponents[monos, 1]).astype(float)
    block = a.coeffs[monos]
    rate_monos = np.flatnonzero((freqs.omega.coeffs != 0) | (freqs.nu.coeffs != 0) | (freqs.lam.coeffs != 0))
    for f in rate_monos:
        lam, om, nu = freqs.lam.coeffs[f], freqs.omega.coeffs[f], freqs.nu.coeffs[f]
        target = basis.sum_table[monos, f]
        keep = (target >= 0) & (basis.degree[np.maximum(target, 0)] <= limit)
        if not np.any(keep):
            continue
        factor = hyper[keep, None, None] * lam + 1j * (pgrid * om + qgrid * nu)[None]
        np.add.at(out, target[keep], factor * block[keep])
    return TrigSeries(order, out)


def evaluate(a: TrigSeries, freqs: Frequencies, amplitudes, phases=(0.0, 0.0), t=0.0):
    """Numeric value of the series; ``t`` may be a scalar or an array."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    omega, nu, lam = freqs.values(amplitudes)
    values = _evaluate_at(a, omega, nu, lam, amplitudes, phases, t_arr)
    return float(values[0]) if np.ndim(t) == 0 else values


def _evaluate_at(a: TrigSeries, omega, nu, lam, amplitudes, phases, t_arr) -> np.ndarray:
    order = a.order
    monos = a.nonzero_monomials()
    if len(monos) == 0:
        return np.zeros_like(t_arr)
    basis = a.basis
    weights = _monomial_values(order, amplitudes)[monos]
    harmonics = np.arange(-order, order + 1)
    th1 = omega * t_arr + phases[0]
    th2 = nu * t_arr + phases[1]
    e1 = np.exp(1j * np.outer(th1, harmonics))
    e2 = np.exp(1j * np.outer(th2, harmonics))
    inner = np.einsum("mpq,tp,tq->mt", a.coeffs[monos], e1, e2)
    hyper = (basis.exponents[monos, 0] - basis.exponents[monos, 1]).astype(float)
    growth = np.exp(np.outer(hyper, lam * t_arr))
    return np.real(np.einsum("m,mt,mt->t", weights, growth, inner))


def dump_json(obj, path) -> None:
    """Write a JSON document with a stable layout (sorted keys, exact floats)."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
