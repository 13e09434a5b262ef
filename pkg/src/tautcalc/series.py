"""Exact truncated power series and the hypergeometric generating functions.

A FormalSeries is a sparse map from exponent tuples to Fraction coefficients
together with a truncation rule: a tuple of (weights, bound) pairs, where a
monomial survives iff its weighted degree is <= bound for every pair.  This
covers both the single total-degree truncation used for univariate work and
the (t-degree, p-weight) double truncation used by the relation generators.

Variables listed in `involutive` square to one: their exponents are reduced
mod 2 on every product (used for the zeta bookkeeping of the strata-algebra
relation generators).

Nothing here rounds; every coefficient is a fractions.Fraction.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

ZERO = Fraction(0)
ONE = Fraction(1)


class SeriesError(ValueError):
    pass


def _fr(x):
    return x if isinstance(x, Fraction) else Fraction(x)


class FormalSeries:
    __slots__ = ("names", "trunc", "involutive", "coeffs")

    def __init__(self, names, trunc, coeffs=None, involutive=frozenset()):
        self.names = tuple(names)
        self.trunc = tuple((tuple(w), b) for w, b in trunc)
        self.involutive = frozenset(involutive)
        data = {}
        if coeffs:
            for exps, c in coeffs.items():
                e = self._reduce(tuple(exps))
                if len(e) != len(self.names):
                    raise SeriesError("exponent tuple has wrong length")
                if not self._keep(e):
                    continue
                c = _fr(c)
                if e in data:
                    c = data[e] + c
                data[e] = c
        self.coeffs = {e: c for e, c in data.items() if c}

    # -- construction helpers -------------------------------------------

    @classmethod
    def constant(cls, c, names, trunc, involutive=frozenset()):
        zero = (0,) * len(names)
        return cls(names, trunc, {zero: _fr(c)}, involutive)

    def spawn(self, coeffs):
        """A series with the same variable space and truncation."""
        return FormalSeries(self.names, self.trunc, coeffs, self.involutive)

    def zero(self):
        return self.spawn(None)

    def one(self):
        return FormalSeries.constant(1, self.names, self.trunc, self.involutive)

    # -- internals ------------------------------------------------------

    def _reduce(self, e):
        if not self.involutive:
            return e
        return tuple(x % 2 if i in self.involutive else x for i, x in enumerate(e))

    def _keep(self, e):
        for w, b in self.trunc:
            if sum(wi * xi for wi, xi in zip(w, e)) > b:
                return False
        return True

    def _compatible(self, other):
        if (self.names != other.names or self.involutive != other.involutive):
            raise SeriesError("series live in different variable spaces")

    def _merged_trunc(self, other):
        seen = list(self.trunc)
        for c in other.trunc:
            if c not in seen:
                seen.append(c)
        return tuple(seen)

    # -- queries --------------------------------------------------------

    def coefficient(self, exps):
        return self.coeffs.get(self._reduce(tuple(exps)), ZERO)

    def constant_term(self):
        return self.coeffs.get((0,) * len(self.names), ZERO)

    def is_zero(self):
        return not self.coeffs

    def total_degree(self):
        return max((sum(e) for e in self.coeffs), default=0)

    def slice_var(self, i, k):
        """Coefficient of x_i^k as a series with x_i removed from play."""
        out = {}
        for e, c in self.coeffs.items():
            if e[i] == k:
                out[e[:i] + (0,) + e[i + 1:]] = c
        return self.spawn(out)

    def __eq__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return (self.names == other.names and self.involutive == other.involutive
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.names, self.involutive, frozenset(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return "<series 0>"
        bits = []
        for e in sorted(self.coeffs, key=lambda e: (sum(e), e))[:6]:
            mono = "*".join(f"{n}^{x}" for n, x in zip(self.names, e) if x) or "1"
            bits.append(f"{self.coeffs[e]}*{mono}")
        more = "" if len(self.coeffs) <= 6 else f" + ({len(self.coeffs) - 6} more)"
        return f"<series {' + '.join(bits)}{more}>"

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = FormalSeries.constant(other, self.names, self.trunc, self.involutive)
        self._compatible(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, ZERO) + c
        return FormalSeries(self.names, self._merged_trunc(other), out, self.involutive)

    __radd__ = __add__

    def __neg__(self):
        return self.spawn({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = FormalSeries.constant(other, self.names, self.trunc, self.involutive)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _fr(other)
            if not c:
                return self.zero()
            return self.spawn({e: c * v for e, v in self.coeffs.items()})
        self._compatible(other)
        trunc = self._merged_trunc(other)
        out = {}
        small, big = self.coeffs, other.coeffs
        if len(big) < len(small):
            small, big = big, small
        for e1, c1 in small.items():
            for e2, c2 in big.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                e = self._reduce(e)
                ok = True
                for w, b in trunc:
                    if sum(wi * xi for wi, xi in zip(w, e)) > b:
                        ok = False
                        break
                if not ok:
                    continue
                prev = out.get(e)
                out[e] = c1 * c2 if prev is None else prev + c1 * c2
        result = FormalSeries.__new__(FormalSeries)
        result.names = self.names
        result.trunc = trunc
        result.involutive = self.involutive
        result.coeffs = {e: c for e, c in out.items() if c}
        return result

    __rmul__ = __mul__

    def pow_int(self, k):
        if k < 0:
            raise SeriesError("negative powers need an explicit inverse")
        result = self.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base2 = base * base if k > 1 else base
            base = base2
            k >>= 1
        return result

    def _nilpotent_powers(self):
        """Yield self^1, self^2, ... until the power vanishes under truncation."""
        cap = sum(b for _, b in self.trunc) + 2 if self.trunc else 0
        power = self
        count = 0
        while not power.is_zero():
            count += 1
            if self.trunc and count > cap:
                raise SeriesError("series is not nilpotent under its truncation")
            yield power
            power = power * self

    def exp(self):
        if self.constant_term():
            raise SeriesError(
                f"exp needs zero constant term, got {self.constant_term()}")
        out = self.one()
        k = 1
        for power in self._nilpotent_powers():
            out = out + power * Fraction(1, factorial(k))
            k += 1
        return out

    def log(self):
        if self.constant_term() != 1:
            raise SeriesError(
                f"log needs constant term 1, got {self.constant_term()}")
        u = self - 1
        out = self.zero()
        k = 1
        for power in u._nilpotent_powers():
            out = out + power * Fraction((-1) ** (k + 1), k)
            k += 1
        return out

    def inverse(self):
        c = self.constant_term()
        if not c:
            raise SeriesError("cannot invert a series with zero constant term")
        u = (self * (ONE / c)) - 1
        out = self.one()
        sign = -1
        for power in u._nilpotent_powers():
            out = out + power * Fraction(sign)
            sign = -sign
        return out * (ONE / c)

    def diff(self, i):
        out = {}
        for e, c in self.coeffs.items():
            if e[i] == 0:
                continue
            e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
            out[e2] = out.get(e2, ZERO) + c * e[i]
        return self.spawn(out)

    # -- variable plumbing ----------------------------------------------

    def scale_var(self, i, factor):
        """Substitute x_i -> factor * x_i."""
        factor = _fr(factor)
        return self.spawn({e: c * factor ** e[i] for e, c in self.coeffs.items()})

    def subst_monomial(self, i, mono_exps, scale=1):
        """Substitute x_i -> scale * (monomial given by mono_exps).

        mono_exps is a full-length exponent tuple over the same variables and
        must not involve x_i itself.
        """
        mono_exps = tuple(mono_exps)
        if mono_exps[i]:
            raise SeriesError("substitution monomial may not involve the substituted variable")
        scale = _fr(scale)
        out = {}
        for e, c in self.coeffs.items():
            k = e[i]
            e2 = tuple((x if j != i else 0) + k * mono_exps[j]
                       for j, x in enumerate(e))
            e2 = self._reduce(e2)
            if not self._keep(e2):
                continue
            c2 = c * scale ** k
            out[e2] = out.get(e2, ZERO) + c2
        return self.spawn(out)

    def divide_linear(self, i, j):
        """Exact division by (x_i + x_j); raises on nonzero remainder.

        The quotient is exact for every monomial whose weighted degrees stay
        one step inside the truncation, which is how callers arrange their
        bounds.
        """
        by_deg = {}
        for e, c in self.coeffs.items():
            by_deg.setdefault(e[i], {})[e] = c
        if not by_deg:
            return self.zero()
        quotient = {}
        top = max(by_deg)
        carry = {}   # -x_j * q_a contributions, keyed like coeffs
        for a in range(top, 0, -1):
            layer = dict(by_deg.get(a, {}))
            for e, c in carry.items():
                if e[i] == a:
                    layer[e] = layer.get(e, ZERO) + c
            carry = {e: c for e, c in carry.items() if e[i] != a}
            # q_{a-1} = f_a (with one x_i stripped) minus x_j*q_a already folded in
            new_carry = {}
            for e, c in layer.items():
                if not c:
                    continue
                eq = e[:i] + (e[i] - 1,) + e[i + 1:]
                quotient[eq] = quotient.get(eq, ZERO) + c
                # subtract x_j * (this quotient term) from the next layer down
                ec = list(eq)
                ec[j] += 1
                new_carry[tuple(ec)] = new_carry.get(tuple(ec), ZERO) - c
            for e, c in new_carry.items():
                carry[e] = carry.get(e, ZERO) + c
        # remainder: the x_i^0 layer of f minus x_j * q_0 folded via carry
        remainder = dict(by_deg.get(0, {}))
        for e, c in carry.items():
            remainder[e] = remainder.get(e, ZERO) + c
        bad = {e: c for e, c in remainder.items() if c and self._keep(e)}
        if bad:
            raise SeriesError(f"division by linear form left remainder {bad}")
        return self.spawn(quotient)


# ----------------------------------------------------------------------
# univariate helpers

def univariate(coeffs, order, name="t"):
    """Series sum(coeffs[k] * name^k) truncated at total degree `order`."""
    trunc = (((1,), order),)
    data = {(k,): _fr(c) for k, c in enumerate(coeffs) if k <= order}
    return FormalSeries((name,), trunc, data)


def univariate_coeffs(series, order):
    """Dense coefficient list [c0, ..., c_order] of a one-variable series."""
    if len(series.names) != 1:
        raise SeriesError("expected a univariate series")
    return [series.coefficient((k,)) for k in range(order + 1)]


# ----------------------------------------------------------------------
# the hypergeometric series

@lru_cache(maxsize=None)
def _a_coeff(i):
    return Fraction(factorial(6 * i), factorial(3 * i) * factorial(2 * i))


@lru_cache(maxsize=None)
def _b_coeff(i):
    return _a_coeff(i) * Fraction(6 * i + 1, 6 * i - 1)


def series_A(order):
    """1 + 60 t + 27720 t^2 + ... with coefficients (6i)!/((3i)!(2i)!)."""
    return univariate([_a_coeff(i) for i in range(order + 1)], order)


def series_B(order):
    """The companion series; its i-th coefficient carries (6i+1)/(6i-1).

    The i = 0 term evaluates literally to -1.
    """
    return univariate([_b_coeff(i) for i in range(order + 1)], order)


def h0_coeffs(order):
    """H0(T) = A(-T): alternating variant, 1 - 60 T + 27720 T^2 - ..."""
    return [(-1) ** i * _a_coeff(i) for i in range(order + 1)]


def h1_coeffs(order):
    """H1(T) = -B(-T): 1 + 84 T - 32760 T^2 + ..."""
    return [-((-1) ** i) * _b_coeff(i) for i in range(order + 1)]


def check_pixton_identity(order):
    """A(-t)B(t) + A(t)B(-t) = -2 through t^order."""
    a = series_A(order)
    b = series_B(order)
    am = a.scale_var(0, -1)
    bm = b.scale_var(0, -1)
    lhs = am * b + a * bm
    return lhs == FormalSeries.constant(-2, a.names, a.trunc)


def check_hypergeometric_odes(order):
    """Both differential equations for A and B, rewritten from z = 288 t.

    In the t variable they read
        3 t^2 A'' + (6 t - 1/144) A' + (5/12) A = 0
        864 t^2 A' + (144 t - 1) A - B = 0
    and are checked coefficientwise through t^order.
    """
    a = series_A(order + 2)
    b = series_B(order + 2)
    t = univariate([0, 1], order + 2)
    da = a.diff(0)
    dda = da.diff(0)
    res1 = 3 * t * t * dda + (6 * t - Fraction(1, 144)) * da + Fraction(5, 12) * a
    res2 = 864 * t * t * da + (144 * t - 1) * a - b
    for res in (res1, res2):
        for k in range(order + 1):
            if res.coefficient((k,)):
                return False
    return True


# ----------------------------------------------------------------------
# the two relation-generator series in t and p-variables

def fz_p_supports(sigma_bound):
    """Indices of the p-variables not congruent to 2 mod 3, up to the bound."""
    return [i for i in range(1, sigma_bound + 1) if i % 3 != 2]


def ct_p_supports(sigma_bound):
    return list(range(1, sigma_bound + 1))


def _p_series_space(t_order, sigma_bound, supports):
    names = ("t",) + tuple(f"p{i}" for i in supports)
    t_weights = (1,) + (0,) * len(supports)
    p_weights = (0,) + tuple(supports)
    trunc = ((t_weights, t_order), (p_weights, sigma_bound))
    return names, trunc


def psi_fz(t_order, sigma_bound):
    """The relation kernel in t and p1, p3, p4, ...: first summand carries A,
    second carries B.  Its p = 0 slice is A and its constant-in-t linear
    p1-part is B's constant term."""
    supports = fz_p_supports(sigma_bound)
    names, trunc = _p_series_space(t_order, sigma_bound, supports)
    nv = len(names)
    coeffs = {}

    def var_exp(pos, extra_t):
        e = [0] * nv
        e[0] = extra_t
        if pos is not None:
            e[pos] = 1
        return tuple(e)

    a = [_a_coeff(i) for i in range(t_order + 1)]
    b = [_b_coeff(i) for i in range(t_order + 1)]
    # (1 + t p3 + t^2 p6 + ...) * A(t)
    for j in range(0, t_order + 1):
        mult = 3 * j
        if mult == 0:
            pos = None
        elif mult in supports:
            pos = 1 + supports.index(mult)
        else:
            continue
        for i, ai in enumerate(a):
            if i + j > t_order:
                break
            e = var_exp(pos, i + j)
            coeffs[e] = coeffs.get(e, ZERO) + ai
    # (p1 + t p4 + t^2 p7 + ...) * B(t)
    for j in range(0, t_order + 1):
        mult = 3 * j + 1
        if mult not in supports:
            continue
        pos = 1 + supports.index(mult)
        for i, bi in enumerate(b):
            if i + j > t_order:
                break
            e = var_exp(pos, i + j)
            coeffs[e] = coeffs.get(e, ZERO) + bi
    return FormalSeries(names, trunc, coeffs)


def psi_ct(t_order, sigma_bound):
    """Compact-type analogue: even p's ride the double-factorial series, odd
    p's appear bare."""
    supports = ct_p_supports(sigma_bound)
    names, trunc = _p_series_space(t_order, sigma_bound, supports)
    nv = len(names)
    coeffs = {}
    dfac = [Fraction(factorial(2 * i), 2 ** i * factorial(i)) for i in range(t_order + 1)]

    def var_exp(pos, extra_t):
        e = [0] * nv
        e[0] = extra_t
        if pos is not None:
            e[pos] = 1
        return tuple(e)

    # (1 + t p2 + t^2 p4 + ...) * sum (2i-1)!! t^i
    for j in range(0, t_order + 1):
        mult = 2 * j
        if mult == 0:
            pos = None
        elif mult in supports:
            pos = 1 + supports.index(mult)
        else:
            continue
        for i, di in enumerate(dfac):
            if i + j > t_order:
                break
            e = var_exp(pos, i + j)
            coeffs[e] = coeffs.get(e, ZERO) + di
    # (p1 + t p3 + t^2 p5 + ...) with no series factor
    for j in range(0, t_order + 1):
        mult = 2 * j + 1
        if mult not in supports:
            continue
        e = var_exp(1 + supports.index(mult), j)
        coeffs[e] = coeffs.get(e, ZERO) + ONE
    return FormalSeries(names, trunc, coeffs)


@lru_cache(maxsize=None)
def _log_psi(family, t_order, sigma_bound):
    psi = psi_fz(t_order, sigma_bound) if family == "fz" else psi_ct(t_order, sigma_bound)
    return psi.log()


def _constants(family, r, sigma):
    sigma = tuple(sigma)
    if any(s <= 0 for s in sigma):
        raise SeriesError("partition parts must be positive")
    if family == "fz" and any(s % 3 == 2 for s in sigma):
        raise SeriesError(f"partition {sigma} uses a part congruent to 2 mod 3")
    weight = sum(sigma)
    logpsi = _log_psi(family, r, weight)
    supports = fz_p_supports(weight) if family == "fz" else ct_p_supports(weight)
    e = [0] * len(logpsi.names)
    e[0] = r
    for s in sigma:
        e[1 + supports.index(s)] += 1
    return logpsi.coefficient(tuple(e))


def fz_constants(r, sigma):
    """Coefficient of t^r p^sigma in the logarithm of the fz kernel."""
    return _constants("fz", r, sigma)


def ct_constants(r, sigma):
    """Coefficient of t^r p^sigma in the logarithm of the ct kernel."""
    return _constants("ct", r, sigma)


def constants_table(family, t_order, sigma_bound):
    """Every log-kernel coefficient at once: {(r, sigma): value}.

    sigma is weakly decreasing.  One shared logarithm serves all slices,
    which matters when a relation sweep touches many (r, sigma) pairs.
    """
    if family not in ("fz", "ct"):
        raise SeriesError(f"unknown relation family {family!r}")
    logpsi = _log_psi(family, t_order, sigma_bound)
    supports = (fz_p_supports(sigma_bound) if family == "fz"
                else ct_p_supports(sigma_bound))
    out = {}
    for e, c in logpsi.coeffs.items():
        sigma = []
        for idx, mult in zip(supports, e[1:]):
            sigma.extend([idx] * mult)
        out[(e[0], tuple(sorted(sigma, reverse=True)))] = c
    return out


# ----------------------------------------------------------------------
# serialization

def rational_str(x):
    x = _fr(x)
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def parse_rational(s):
    return Fraction(s)


def series_to_json(series):
    return {
        "variables": list(series.names),
        "terms": [
            {"exponents": list(e), "coefficient": rational_str(c)}
            for e, c in sorted(series.coeffs.items())
        ],
    }


def series_from_json(payload, trunc=None, involutive=frozenset()):
    names = tuple(payload["variables"])
    if trunc is None:
        degree = max((sum(t["exponents"]) for t in payload["terms"]), default=0)
        trunc = (((1,) * len(names), degree),)
    coeffs = {
        tuple(t["exponents"]): parse_rational(t["coefficient"])
        for t in payload["terms"]
    }
    return FormalSeries(names, trunc, coeffs, involutive)
