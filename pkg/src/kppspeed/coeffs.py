"""Period-L coefficient functions sampled on a uniform grid.

A coefficient is held as N samples at x_j = j*L/N together with the source
it came from (expression text, Fourier data, raw samples, or a derived
closure), so it can be re-evaluated at cell midpoints, refined to finer
grids, rescaled to a new period, or combined into new coefficients without
losing accuracy.

Expression grammar (UTF-8 text)::

    expression := term (('+'|'-') term)*
    term       := factor (('*'|'/') factor)*
    factor     := number | 'x' | 'pi' | '(' expression ')'
                | func '(' expression ')' | '-' factor
    func       := 'sin' | 'cos' | 'exp'

Fourier records use the form ``fourier: a0, [a1,b1], [a2,b2], ...`` meaning
a0 + sum_k a_k*cos(2*pi*k*x/L) + b_k*sin(2*pi*k*x/L); the prefix
``reciprocal_fourier:`` denotes the reciprocal of that series.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CoefficientError, PreconditionError

MIN_GRID_SIZE = 16
DEFAULT_GRID_SIZE = 256

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_grid_size(grid_size: int) -> None:
    if not isinstance(grid_size, (int, np.integer)):
        raise PreconditionError(f"grid_size must be an integer, got {grid_size!r}")
    if grid_size < MIN_GRID_SIZE or not _is_power_of_two(int(grid_size)):
        raise PreconditionError(
            f"grid_size must be a power of two >= {MIN_GRID_SIZE}, got {grid_size}"
        )


def _check_period(period: float) -> None:
    if not (np.isfinite(period) and period > 0):
        raise PreconditionError(f"period must be positive and finite, got {period}")


# ---------------------------------------------------------------------------
# Expression parsing
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Tokenizer:
    """Splits expression text into (kind, text, column) tokens, 1-based columns."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        text = self.text
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            m = _NUMBER_RE.match(text, i)
            if m:
                self.tokens.append(("num", m.group(), i + 1))
                i = m.end()
                continue
            m = _NAME_RE.match(text, i)
            if m:
                self.tokens.append(("name", m.group(), i + 1))
                i = m.end()
                continue
            if ch in "+-*/()":
                self.tokens.append(("op", ch, i + 1))
                i += 1
                continue
            raise CoefficientError(f"syntax error: unexpected character {ch!r}", i + 1)
        self.tokens.append(("end", "", len(text) + 1))

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        tok = self.tokens[self.index]
        if tok[0] != "end":
            self.index += 1
        return tok


class _ExprParser:
    """Recursive-descent parser producing a tuple AST."""

    def __init__(self, text: str):
        self.toks = _Tokenizer(text)

    def parse(self):
        node = self._expression()
        kind, text, col = self.toks.peek()
        if kind != "end":
            raise CoefficientError(f"syntax error: unexpected {text!r}", col)
        return node

    def _expression(self):
        node = self._term()
        while True:
            kind, text, col = self.toks.peek()
            if kind == "op" and text in "+-":
                self.toks.advance()
                rhs = self._term()
                node = (text, node, rhs, col)
            else:
                return node

    def _term(self):
        node = self._factor()
        while True:
            kind, text, col = self.toks.peek()
            if kind == "op" and text in "*/":
                self.toks.advance()
                rhs = self._factor()
                node = (text, node, rhs, col)
            else:
                return node

    def _factor(self):
        kind, text, col = self.toks.advance()
        if kind == "num":
            return ("num", float(text), col)
        if kind == "name":
            if text == "x":
                return ("x", col)
            if text == "pi":
                return ("num", math.pi, col)
            if text in _FUNCTIONS:
                kind2, text2, col2 = self.toks.advance()
                if kind2 != "op" or text2 != "(":
                    raise CoefficientError(f"syntax error: expected '(' after {text!r}", col2)
                arg = self._expression()
                kind3, text3, col3 = self.toks.advance()
                if kind3 != "op" or text3 != ")":
                    raise CoefficientError("syntax error: expected ')'", col3)
                return ("call", text, arg, col)
            raise CoefficientError(f"syntax error: unknown name {text!r}", col)
        if kind == "op":
            if text == "-":
                return ("neg", self._factor(), col)
            if text == "(":
                node = self._expression()
                kind2, text2, col2 = self.toks.advance()
                if kind2 != "op" or text2 != ")":
                    raise CoefficientError("syntax error: expected ')'", col2)
                return node
        raise CoefficientError(
            "syntax error: expected a number, 'x', 'pi', a function, or '('", col
        )


def _eval_ast(node, x: np.ndarray) -> np.ndarray:
    op = node[0]
    if op == "num":
        return np.full_like(x, node[1])
    if op == "x":
        return x.copy()
    if op == "neg":
        return -_eval_ast(node[1], x)
    if op == "call":
        return _FUNCTIONS[node[1]](_eval_ast(node[2], x))
    a = _eval_ast(node[1], x)
    b = _eval_ast(node[2], x)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    # division: a zero denominator at any evaluation point is an error
    if np.any(b == 0.0):
        raise CoefficientError("evaluation error: division by zero at a grid node", node[3])
    return a / b


# ---------------------------------------------------------------------------
# Fourier records
# ---------------------------------------------------------------------------


def _parse_fourier_payload(payload: str, offset: int):
    """Parse ``a0, [a1,b1], [a2,b2], ...`` into (a0, [(a1,b1), ...])."""
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(payload):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise CoefficientError("syntax error: unbalanced ']'", offset + i + 1)
        elif ch == "," and depth == 0:
            parts.append((payload[start:i], start))
            start = i + 1
    if depth != 0:
        raise CoefficientError("syntax error: unbalanced '['", offset + len(payload))
    parts.append((payload[start:], start))

    def as_float(text, pos):
        try:
            return float(text)
        except ValueError:
            raise CoefficientError(
                f"syntax error: expected a number, got {text.strip()!r}", offset + pos + 1
            ) from None

    if not parts or not parts[0][0].strip():
        raise CoefficientError("syntax error: empty Fourier record", offset + 1)
    a0 = as_float(parts[0][0], parts[0][1])
    harmonics = []
    for text, pos in parts[1:]:
        text = text.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise CoefficientError("syntax error: expected '[a,b]' harmonic pair", offset + pos + 1)
        inner = text[1:-1].split(",")
        if len(inner) != 2:
            raise CoefficientError("syntax error: harmonic pair needs two entries", offset + pos + 1)
        harmonics.append((as_float(inner[0], pos), as_float(inner[1], pos)))
    return a0, harmonics


def _fourier_evaluator(a0, harmonics, period, reciprocal):
    def evaluate(x):
        total = np.full_like(np.asarray(x, dtype=float), a0)
        for k, (a, b) in enumerate(harmonics, start=1):
            arg = 2.0 * math.pi * k * np.asarray(x, dtype=float) / period
            total += a * np.cos(arg) + b * np.sin(arg)
        if not reciprocal:
            return total
        if np.any(total == 0.0):
            raise CoefficientError("evaluation error: reciprocal series vanishes at a grid node")
        return 1.0 / total

    return evaluate


def format_fourier(a0, harmonics, reciprocal=False) -> str:
    """Render Fourier data so that re-parsing reproduces identical floats."""
    prefix = "reciprocal_fourier:" if reciprocal else "fourier:"
    pieces = [repr(float(a0))]
    pieces += [f"[{float(a)!r},{float(b)!r}]" for a, b in harmonics]
    return f"{prefix} " + ", ".join(pieces)


# ---------------------------------------------------------------------------
# The coefficient type
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicCoefficient:
    """A period-L real function sampled at x_j = j*L/N, j = 0..N-1.

    ``kind`` is one of expression / fourier / reciprocal_fourier / samples /
    derived; it controls how midpoint values and derivatives are obtained.
    ``resolution_error`` records the relative change of the mean under
    re-sampling at 2N (a resolution diagnostic, not an error bound).
    """

    period: float
    source: str
    samples: np.ndarray
    grid_size: int
    kind: str
    resolution_error: float
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.samples.setflags(write=False)

    @property
    def spacing(self) -> float:
        return self.period / self.grid_size

    def grid(self) -> np.ndarray:
        return np.arange(self.grid_size) * self.spacing

    def evaluate(self, x) -> np.ndarray:
        """Value at arbitrary x (folded into [0, period))."""
        x = np.mod(np.asarray(x, dtype=float), self.period)
        if self.evaluator is not None:
            return self.evaluator(x)
        return _trig_interpolate(self.samples, self.period, x)

    def midpoint_values(self) -> np.ndarray:
        """Values at x_{j+1/2}; 2-point averages when there is no source."""
        if self.evaluator is not None:
            return self.evaluator(self.grid() + 0.5 * self.spacing)
        return 0.5 * (self.samples + np.roll(self.samples, -1))

    def derivative_samples(self) -> np.ndarray:
        """First derivative at the grid nodes.

        Spectral differentiation of the samples for sourced coefficients,
        centered differences for raw sample data.
        """
        if self.kind == "samples":
            return (np.roll(self.samples, -1) - np.roll(self.samples, 1)) / (2.0 * self.spacing)
        return _spectral_derivative(self.samples, self.period)

    def resampled(self, grid_size: int) -> "PeriodicCoefficient":
        """The same function on a finer or coarser power-of-two grid."""
        _check_grid_size(grid_size)
        if grid_size == self.grid_size:
            return self
        if self.evaluator is not None:
            x = np.arange(grid_size) * (self.period / grid_size)
            samples = np.asarray(self.evaluator(x), dtype=float)
        else:
            x = np.arange(grid_size) * (self.period / grid_size)
            samples = _trig_interpolate(self.samples, self.period, x)
        return _build(self.period, self.source, samples, grid_size, self.kind, self.evaluator)


@dataclass(frozen=True)
class MeanSummary:
    """Spatial means over one period; harmonic_mean is None when any sample <= 0."""

    arithmetic_mean: float
    harmonic_mean: Optional[float]


@dataclass(frozen=True)
class ConstraintSet:
    """Admissible growth coefficients: given period, spatial mean fixed to alpha."""

    alpha: float
    period: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise PreconditionError(f"alpha must be positive, got {self.alpha}")
        _check_period(self.period)

    def contains(self, c: PeriodicCoefficient, tol: float = 1e-10) -> bool:
        return (
            abs(c.period - self.period) <= 1e-12 * self.period
            and abs(float(np.mean(c.samples)) - self.alpha) <= tol * max(1.0, self.alpha)
        )


def _trig_interpolate(samples: np.ndarray, period: float, x: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples at x."""
    n = samples.size
    coeff = np.fft.rfft(samples) / n
    k = np.arange(coeff.size)
    phase = np.exp(2j * math.pi * np.outer(np.asarray(x, dtype=float) / period, k))
    # real series: c_0 + 2*Re sum_{k>=1} c_k e^{ikx}, Nyquist term counted once
    weights = np.full(coeff.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return (phase @ (weights * coeff)).real


def _spectral_derivative(samples: np.ndarray, period: float) -> np.ndarray:
    n = samples.size
    k = np.fft.rfftfreq(n, d=period / n) * 2.0 * math.pi
    spectrum = np.fft.rfft(samples) * 1j * k
    if n % 2 == 0:
        spectrum[-1] = 0.0  # odd-derivative Nyquist mode is not representable
    return np.fft.irfft(spectrum, n)


def _build(period, source, samples, grid_size, kind, evaluator) -> PeriodicCoefficient:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid_size,):
        raise PreconditionError(
            f"samples must have shape ({grid_size},), got {samples.shape}"
        )
    if not np.all(np.isfinite(samples)):
        raise CoefficientError("evaluation error: non-finite value at a grid node")
    mean_n = float(np.mean(samples))
    if evaluator is not None:
        x2 = np.arange(2 * grid_size) * (period / (2 * grid_size))
        mean_2n = float(np.mean(np.asarray(evaluator(x2), dtype=float)))
    else:
        mean_2n = mean_n  # trigonometric refinement preserves the mean exactly
    resolution_error = abs(mean_2n - mean_n) / max(1.0, abs(mean_n))
    return PeriodicCoefficient(
        period=float(period),
        source=source,
        samples=samples,
        grid_size=int(grid_size),
        kind=kind,
        resolution_error=resolution_error,
        evaluator=evaluator,
    )


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def parse_coefficient(source: str, period: float, grid_size: int = DEFAULT_GRID_SIZE) -> PeriodicCoefficient:
    """Build a coefficient from expression text or a Fourier record.

    The expression is evaluated exactly at the grid nodes; nothing is
    interpolated. Periodicity of the expression is asserted by the caller,
    not checked.
    """
    _check_period(period)
    _check_grid_size(grid_size)
    text = source.strip()
    if text.startswith("reciprocal_fourier:") or text.startswith("fourier:"):
        reciprocal = text.startswith("reciprocal_fourier:")
        prefix_len = len("reciprocal_fourier:") if reciprocal else len("fourier:")
        a0, harmonics = _parse_fourier_payload(text[prefix_len:], prefix_len)
        evaluator = _fourier_evaluator(a0, harmonics, period, reciprocal)
        kind = "reciprocal_fourier" if reciprocal else "fourier"
        source = format_fourier(a0, harmonics, reciprocal)
    else:
        ast = _ExprParser(text).parse()
        evaluator = lambda x: _eval_ast(ast, np.asarray(x, dtype=float))
        kind = "expression"
        source = text
    x = np.arange(grid_size) * (period / grid_size)
    samples = np.asarray(evaluator(x), dtype=float)
    return _build(period, source, samples, grid_size, kind, evaluator)


def from_samples(samples, period: float) -> PeriodicCoefficient:
    """Wrap raw sample data (power-of-two length) as a coefficient."""
    samples = np.asarray(samples, dtype=float)
    _check_period(period)
    _check_grid_size(samples.size)
    return _build(period, f"samples[{samples.size}]", samples, samples.size, "samples", None)


def derived_coefficient(
    evaluator: Callable[[np.ndarray], np.ndarray],
    period: float,
    grid_size: int,
    source: str,
) -> PeriodicCoefficient:
    """Coefficient backed by a closure (sums, scalings, optimal growth, ...)."""
    _check_period(period)
    _check_grid_size(grid_size)
    x = np.arange(grid_size) * (period / grid_size)
    samples = np.asarray(evaluator(x), dtype=float)
    return _build(period, source, samples, grid_size, "derived", evaluator)


def means(c: PeriodicCoefficient) -> MeanSummary:
    """Arithmetic and harmonic spatial means by the periodic trapezoid rule.

    On the uniform periodic grid the trapezoid rule is the plain sample
    average, spectrally accurate for smooth data. The harmonic mean is
    absent whenever a sample is nonpositive.
    """
    arithmetic = float(np.mean(c.samples))
    if np.min(c.samples) > 0.0:
        harmonic = float(1.0 / np.mean(1.0 / c.samples))
    else:
        harmonic = None
    return MeanSummary(arithmetic_mean=arithmetic, harmonic_mean=harmonic)


def rescale_period(c: PeriodicCoefficient, new_period: float) -> PeriodicCoefficient:
    """Dilate x so the coefficient x -> c(x * c.period / new_period) has the new period.

    The grid samples are unchanged (node j maps onto node j), so spatial
    means are preserved exactly.
    """
    _check_period(new_period)
    if new_period == c.period:
        return c
    ratio = c.period / new_period
    if c.evaluator is not None:
        inner = c.evaluator
        old_period = c.period
        evaluator = lambda x: inner(np.mod(np.asarray(x, dtype=float) * ratio, old_period))
    else:
        evaluator = None
    source = f"{c.source} @ period {new_period!r}"
    return _build(new_period, source, c.samples.copy(), c.grid_size, c.kind, evaluator)


def scaled(c: PeriodicCoefficient, factor: float) -> PeriodicCoefficient:
    """Pointwise multiple factor * c."""
    if c.evaluator is not None:
        inner = c.evaluator
        evaluator = lambda x: factor * inner(np.asarray(x, dtype=float))
    else:
        evaluator = None
    out = _build(c.period, f"{factor!r}*({c.source})", factor * c.samples, c.grid_size,
                 c.kind if evaluator is None else "derived", evaluator)
    return out


def linear_combination(
    a: PeriodicCoefficient, b: PeriodicCoefficient, weight_b: float, source: str | None = None
) -> PeriodicCoefficient:
    """Pointwise a + weight_b * b on a shared period and grid."""
    if abs(a.period - b.period) > 1e-12 * max(a.period, b.period) or a.grid_size != b.grid_size:
        raise PreconditionError("coefficients must share period and grid size")
    evaluator = lambda x: a.evaluate(x) + weight_b * b.evaluate(x)
    samples = a.samples + weight_b * b.samples
    label = source or f"({a.source}) + {weight_b!r}*({b.source})"
    return _build(a.period, label, samples, a.grid_size, "derived", evaluator)


def require_positive(c: PeriodicCoefficient, role: str = "diffusion") -> None:
    """Enforce min > 0 on the grid and on the 2N refinement.

    Grid sampling can miss a thin negative dip; the refined re-check bounds
    that risk for sourced coefficients.
    """
    if np.min(c.samples) <= 0.0:
        raise PreconditionError(f"{role} coefficient must be positive; min sample is {np.min(c.samples)}")
    if c.evaluator is not None:
        fine = c.resampled(2 * c.grid_size)
        if np.min(fine.samples) <= 0.0:
            raise PreconditionError(
                f"{role} coefficient dips nonpositive between grid nodes "
                f"(min at 2N is {np.min(fine.samples)})"
            )
