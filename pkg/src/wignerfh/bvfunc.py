"""Compactly supported functions of bounded variation.

A :class:`BVFunction` is a finite list of smooth pieces on consecutive
intervals ``[b_i, b_{i+1}]`` of ``[-L, L]`` and is zero elsewhere. Its
distributional derivative ``df`` is the sum of the absolutely continuous part
``f'(x) dx`` and point masses at the breakpoints, whose sizes are the jumps
``f(b+) - f(b-)``. Jumps are derived from the pieces, so they are consistent
with the piece values by construction.

Point evaluation uses the right-continuous representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import Polynomial

from ._quad import adaptive_gl
from .errors import SpecError

__all__ = [
    "Piece",
    "BVFunction",
    "integrate_df",
    "norms",
    "zero",
    "polynomial_on",
    "indicator",
    "cutoff",
    "smooth_cutoff",
    "monomial",
    "abs_shift",
    "ramp",
    "bump",
    "builtin_library",
    "from_descriptor",
]

SUPPORT = 3.0
FLAT = 2.6
_ATOM_TOL = 1e-12


@dataclass(frozen=True)
class Piece:
    """One smooth piece. ``poly`` is set when the piece is a polynomial."""

    func: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    poly: Polynomial | None = None

    @classmethod
    def from_poly(cls, p) -> "Piece":
        p = p if isinstance(p, Polynomial) else Polynomial(p)
        dp = p.deriv()
        return cls(func=p, deriv=dp, poly=p)

    @classmethod
    def constant(cls, c: float) -> "Piece":
        return cls.from_poly(Polynomial([c]))

    def __call__(self, x):
        return self.func(x)


def _zero_piece() -> Piece:
    return Piece.constant(0.0)


@dataclass(frozen=True, eq=False)
class BVFunction:
    """Piecewise smooth function supported in ``[-support, support]``.

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing, inside ``[-support, support]``.
    pieces : sequence of Piece
        ``len(breakpoints) - 1`` pieces; piece ``i`` lives on
        ``[breakpoints[i], breakpoints[i+1]]``.
    name : str
        Label used by the harness and in output files.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[Piece, ...]
    name: str = "f"
    support: float = SUPPORT
    _atoms: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(bp) >= 1 and len(self.pieces) != len(bp) - 1:
            raise SpecError("need exactly len(breakpoints) - 1 pieces")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise SpecError("breakpoints must be strictly increasing")
        if bp and (bp[0] < -self.support - 1e-12 or bp[-1] > self.support + 1e-12):
            raise SpecError(f"breakpoints must lie in [-{self.support}, {self.support}]")
        locs, sizes = [], []
        for i, b in enumerate(bp):
            right = float(self.pieces[i](np.array([b]))[0]) if i < len(self.pieces) else 0.0
            left = float(self.pieces[i - 1](np.array([b]))[0]) if i > 0 else 0.0
            jump = right - left
            if not np.isfinite(jump):
                raise SpecError(f"non-finite value at breakpoint {b}")
            if abs(jump) > _ATOM_TOL * max(1.0, abs(left), abs(right)):
                locs.append(b)
                sizes.append(jump)
        object.__setattr__(self, "_atoms", (np.array(locs), np.array(sizes)))

    # -- basic queries -------------------------------------------------

    @property
    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Jump locations and signed jump sizes ``f(x+) - f(x-)``."""
        return self._atoms

    @property
    def has_bounded_derivative(self) -> bool:
        """True when ``df`` has no atoms, i.e. ``f' in L^inf``."""
        return self._atoms[0].size == 0

    @property
    def intervals(self) -> list[tuple[float, float, Piece]]:
        bp = self.breakpoints
        return [(bp[i], bp[i + 1], p) for i, p in enumerate(self.pieces)]

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Right-continuous point values; zero outside the breakpoints."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros(x.shape)
        if self.pieces:
            idx = np.searchsorted(self.breakpoints, x, side="right") - 1
            for i, piece in enumerate(self.pieces):
                sel = idx == i
                if sel.any():
                    out[sel] = piece(x[sel])
        return float(out[0]) if scalar else out

    def deriv(self, x):
        """Derivative of the absolutely continuous part (zero at atoms)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        if self.pieces:
            idx = np.searchsorted(self.breakpoints, x, side="right") - 1
            for i, piece in enumerate(self.pieces):
                sel = idx == i
                if sel.any():
                    out[sel] = piece.deriv(x[sel])
        return out

    def renamed(self, name: str) -> "BVFunction":
        return BVFunction(self.breakpoints, self.pieces, name=name, support=self.support)

    # -- arithmetic ----------------------------------------------------

    def _combine(self, other: "BVFunction", op: str) -> "BVFunction":
        bp = np.union1d(self.breakpoints, other.breakpoints)
        pieces = []
        for a, b in zip(bp[:-1], bp[1:]):
            p, q = self._piece_at(0.5 * (a + b)), other._piece_at(0.5 * (a + b))
            pieces.append(_combine_pieces(p, q, op))
        name = f"({self.name}{'+' if op == 'add' else '*'}{other.name})"
        return BVFunction(tuple(bp), tuple(pieces), name=name, support=max(self.support, other.support))

    def _piece_at(self, x: float) -> Piece:
        bp = self.breakpoints
        if not bp or x < bp[0] or x >= bp[-1]:
            return _zero_piece()
        return self.pieces[int(np.searchsorted(bp, x, side="right")) - 1]

    def __add__(self, other):
        if not isinstance(other, BVFunction):
            return NotImplemented
        return self._combine(other, "add")

    def __mul__(self, other):
        if isinstance(other, BVFunction):
            return self._combine(other, "mul")
        c = float(other)
        pieces = [_scale_piece(p, c) for p in self.pieces]
        return BVFunction(self.breakpoints, tuple(pieces), name=f"{c:g}*{self.name}", support=self.support)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)


def _scale_piece(p: Piece, c: float) -> Piece:
    if p.poly is not None:
        return Piece.from_poly(c * p.poly)
    return Piece(func=lambda x, f=p.func: c * f(x), deriv=lambda x, d=p.deriv: c * d(x))


def _combine_pieces(p: Piece, q: Piece, op: str) -> Piece:
    if p.poly is not None and q.poly is not None:
        a, b = p.poly, q.poly
        if not (np.array_equal(a.domain, b.domain) and np.array_equal(a.window, b.window)):
            # work in the local variable of whichever piece has a non-default domain
            if np.array_equal(b.domain, Polynomial.domain):
                b = b.convert(domain=a.domain, window=a.window)
            else:
                a = a.convert(domain=b.domain, window=b.window)
        return Piece.from_poly(a + b if op == "add" else a * b)
    if op == "add":
        return Piece(func=lambda x: p.func(x) + q.func(x), deriv=lambda x: p.deriv(x) + q.deriv(x))
    return Piece(
        func=lambda x: p.func(x) * q.func(x),
        deriv=lambda x: p.deriv(x) * q.func(x) + p.func(x) * q.deriv(x),
    )


# -- Lebesgue-Stieltjes calculus ----------------------------------------


def integrate_df(g: Callable[[np.ndarray], np.ndarray], f: BVFunction, tol: float = 1e-11) -> complex:
    """Integral of ``g`` against the signed measure ``df``.

    Atoms contribute ``g(x_i) * jump_i``; each smooth piece contributes
    ``int g(x) f'(x) dx`` computed by adaptive Gauss-Legendre quadrature.
    """
    locs, sizes = f.atoms
    total = complex(np.sum(np.asarray(g(locs)) * sizes)) if locs.size else 0j
    for a, b, piece in f.intervals:
        if piece.poly is not None and piece.poly.degree() == 0 and piece.poly.coef[0] == 0.0:
            continue
        val, _ = adaptive_gl(lambda x, d=piece.deriv: g(x) * d(x), a, b, tol=tol)
        total += complex(val)
    return total


def _real_roots_inside(p: Polynomial, a: float, b: float) -> np.ndarray:
    if p.degree() < 1:
        return np.empty(0)
    r = p.roots()
    r = r[np.abs(r.imag) < 1e-12].real
    return np.sort(r[(r > a) & (r < b)])


def norms(f: BVFunction, tol: float = 1e-12) -> tuple[float, float]:
    """Total variation ``||df||`` and ``L^1`` norm ``||f||_1``.

    Exact for polynomial pieces (split at critical points and zeros),
    adaptive quadrature of ``|f'|`` and ``|f|`` otherwise.
    """
    tv = float(np.sum(np.abs(f.atoms[1])))
    l1 = 0.0
    for a, b, piece in f.intervals:
        p = piece.poly
        if p is not None:
            pts = np.concatenate([[a], _real_roots_inside(p.deriv(), a, b), [b]])
            tv += float(np.sum(np.abs(np.diff(p(pts)))))
            P = p.integ()
            pts = np.concatenate([[a], _real_roots_inside(p, a, b), [b]])
            l1 += float(np.sum(np.abs(np.diff(P(pts)))))
        else:
            tv += float(adaptive_gl(lambda x, d=piece.deriv: np.abs(d(x)), a, b, tol=tol, initial_panels=8)[0])
            l1 += float(adaptive_gl(lambda x, q=piece.func: np.abs(q(x)), a, b, tol=tol, initial_panels=8)[0])
    return tv, l1


# -- constructors --------------------------------------------------------


def zero(name: str = "zero") -> BVFunction:
    return BVFunction((), (), name=name)


def polynomial_on(coeffs, a: float, b: float, name: str = "poly") -> BVFunction:
    """Polynomial with ascending ``coeffs`` on [a, b], zero outside (jumps at the ends)."""
    return BVFunction((a, b), (Piece.from_poly(coeffs),), name=name)


def indicator(a: float, b: float, name: str | None = None) -> BVFunction:
    """Characteristic function of [a, b]."""
    if not a < b:
        raise SpecError("indicator needs a < b")
    return BVFunction((a, b), (Piece.constant(1.0),), name=name or f"1[{a:g},{b:g}]")


def _smoothstep() -> Polynomial:
    # C^2: s(0)=0, s(1)=1, s' and s'' vanish at both ends
    return Polynomial([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])


def smooth_cutoff(flat: float = FLAT, support: float = SUPPORT) -> BVFunction:
    """C^2 function equal to 1 on [-flat, flat] and 0 outside [-support, support]."""
    if not 0 < flat < support:
        raise SpecError("need 0 < flat < support")
    coef = _smoothstep().coef
    # local variable t in [0, 1] keeps the quintic well conditioned
    left = Polynomial(coef, domain=[-support, -flat], window=[0.0, 1.0])
    right = Polynomial(coef, domain=[flat, support], window=[1.0, 0.0])
    return BVFunction(
        (-support, -flat, flat, support),
        (Piece.from_poly(left), Piece.constant(1.0), Piece.from_poly(right)),
        name="cutoff",
        support=support,
    )


def cutoff(f: BVFunction, flat: float = FLAT) -> BVFunction:
    """``f`` times :func:`smooth_cutoff`; unchanged on [-flat, flat]."""
    return (f * smooth_cutoff(flat, f.support)).renamed(f.name)


def monomial(k: int, flat: float = FLAT, name: str | None = None) -> BVFunction:
    """``x**k`` smoothly cut off outside [-flat, flat]."""
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    f = polynomial_on(coeffs, -SUPPORT, SUPPORT, name=name or ("x" if k == 1 else f"x{k}"))
    return cutoff(f, flat)


def abs_shift(a: float = 0.0, flat: float = FLAT, name: str | None = None) -> BVFunction:
    """``|x - a|`` smoothly cut off outside [-flat, flat]."""
    if not -SUPPORT < a < SUPPORT:
        raise SpecError("shift must lie inside the support")
    f = BVFunction(
        (-SUPPORT, a, SUPPORT),
        (Piece.from_poly([a, -1.0]), Piece.from_poly([-a, 1.0])),
        name=name or ("abs" if a == 0 else f"abs({a:g})"),
    )
    return cutoff(f, flat)


def ramp(a: float = -1.0, b: float = 1.0, flat: float = FLAT, name: str | None = None) -> BVFunction:
    """Lipschitz ramp: 0 left of a, linear on [a, b], 1 right of b; cut off."""
    if not -SUPPORT < a < b < SUPPORT:
        raise SpecError("ramp needs -3 < a < b < 3")
    f = BVFunction(
        (a, b, SUPPORT),
        (Piece.from_poly([-a / (b - a), 1.0 / (b - a)]), Piece.constant(1.0)),
        name=name or "ramp",
    )
    return cutoff(f, flat)


def _bump_func(c: float, w: float):
    def func(x):
        t = (np.asarray(x, dtype=float) - c) / w
        out = np.zeros_like(t)
        inside = np.abs(t) < 1
        ti = t[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
        return out

    def deriv(x):
        t = (np.asarray(x, dtype=float) - c) / w
        out = np.zeros_like(t)
        inside = np.abs(t) < 1
        ti = t[inside]
        q = 1.0 - ti * ti
        out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * ti / (q * q)) / w
        return out

    return func, deriv


def bump(center: float = 0.0, width: float = 1.0, name: str | None = None) -> BVFunction:
    """C-infinity bump ``exp(1 - 1/(1 - t^2))``, ``t = (x - center)/width``; peak value 1."""
    if width <= 0 or abs(center) + width > SUPPORT:
        raise SpecError("bump must fit inside the support")
    func, deriv = _bump_func(center, width)
    piece = Piece(func=func, deriv=deriv)
    # split at the peak so each piece is monotone
    return BVFunction((center - width, center, center + width), (piece, piece), name=name or "bump")


_BUILDERS: Mapping[str, Callable[..., BVFunction]] = {
    "indicator": lambda a=-1.0, b=1.0, **kw: indicator(a, b, **kw),
    "abs": lambda a=0.0, **kw: abs_shift(a, **kw),
    "monomial": lambda k=1, **kw: monomial(int(k), **kw),
    "x": lambda **kw: monomial(1, **kw),
    "x2": lambda **kw: monomial(2, **kw),
    "x3": lambda **kw: monomial(3, **kw),
    "bump": lambda center=0.0, width=1.0, **kw: bump(center, width, **kw),
    "ramp": lambda a=-1.0, b=1.0, **kw: ramp(a, b, **kw),
}


def builtin_library() -> dict[str, BVFunction]:
    """Named default instances of every builtin family."""
    return {
        "indicator": indicator(-1.0, 1.0, name="indicator"),
        "abs": abs_shift(0.0, name="abs"),
        "x": monomial(1, name="x"),
        "x2": monomial(2, name="x2"),
        "x3": monomial(3, name="x3"),
        "bump": bump(0.0, 1.0, name="bump"),
        "ramp": ramp(-1.0, 1.0, name="ramp"),
    }


def from_descriptor(desc: Mapping) -> BVFunction:
    """Build a function from a config table such as ``{kind="indicator", a=-1, b=1}``."""
    desc = dict(desc)
    try:
        kind = desc.pop("kind")
    except KeyError:
        raise SpecError("function descriptor needs a 'kind'") from None
    if kind not in _BUILDERS:
        raise SpecError(f"unknown function kind {kind!r}; known: {sorted(_BUILDERS)}")
    name = desc.pop("name", None)
    try:
        f = _BUILDERS[kind](**desc)
    except TypeError as exc:
        raise SpecError(f"bad parameters for {kind!r}: {exc}") from None
    return f.renamed(name) if name else f
