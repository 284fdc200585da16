"""Series/parallel/star-triangle laws and closed-form resistance recursions.

Everything here is independent of the sparse solver so it can serve as an
oracle for it.  Functions accept ``Fraction`` or ``float`` and keep the
input's arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .ifs import InvalidInput

INF = math.inf


def series(*rs):
    """Resistors in series."""
    if any(r < 0 for r in rs):
        raise InvalidInput("resistances must be nonnegative")
    return sum(rs[1:], rs[0])


def parallel(*rs):
    """Resistors in parallel; an infinite resistance is an absent branch."""
    if any(r <= 0 for r in rs):
        raise InvalidInput("parallel resistances must be positive")
    finite = [r for r in rs if r != INF]
    if not finite:
        return INF
    g = sum((1 / r for r in finite[1:]), 1 / finite[0])
    return 1 / g


def delta_to_y(r_xy, r_yz, r_zx):
    """Triangle resistances -> star resistances (R_x, R_y, R_z)."""
    if min(r_xy, r_yz, r_zx) <= 0:
        raise InvalidInput("triangle resistances must be positive")
    s = r_xy + r_yz + r_zx
    return r_xy * r_zx / s, r_xy * r_yz / s, r_yz * r_zx / s


def y_to_delta(R_x, R_y, R_z):
    """Star resistances -> triangle resistances (r_xy, r_yz, r_zx)."""
    if min(R_x, R_y, R_z) <= 0:
        raise InvalidInput("star resistances must be positive")
    p = R_x * R_y + R_y * R_z + R_z * R_x
    return p / R_z, p / R_x, p / R_y


# --- fixed-point problems ---------------------------------------------------

def _phi_sg(lam, mu):
    g = 3 * lam * (2 * mu / (mu + 3) + mu)
    return g / (1 + g)


def _phi_cantor_interval(lam, mu):
    g = 6 * lam * (2 * mu / (mu + 1) + mu)
    return g / (2 + g)


def pentagasket_rho(mu1):
    """Star resistances (rho_1, rho_2) replacing the traced K4 cone."""
    q = mu1 * mu1 + 5 * mu1 + 5
    return mu1 * (mu1 + 2) / q, mu1 * (mu1 + 2) ** 2 / ((mu1 + 1) * q)


def pentagasket_cone_completion(mu1):
    """Traced conductances on the cone (x1, x11, x13, x14).

    Unit vertical edges and 1/mu1 on the sibling pentagon; x12 and x15 are
    eliminated.  Keys are index pairs into (x1, x11, x13, x14).
    """
    c_top = (mu1 + 4) / (mu1 + 2)
    c_side = (mu1 + 3) / (mu1 + 2)
    c_cross = 1 / (mu1 * (mu1 + 2))
    return {(0, 1): c_top, (0, 2): c_side, (0, 3): c_side,
            (1, 2): c_cross, (1, 3): c_cross, (2, 3): 1 / mu1}


def _phi_pentagasket(lam, mu):
    mu1, mu2 = mu
    rho1, rho2 = pentagasket_rho(mu1)
    g1 = 5 * lam * (2 * rho1 + mu2)
    g2 = 5 * lam * (2 * rho2 + mu2)
    return g1 / (1 + g1), g2 / (1 + g2)


@dataclass(frozen=True)
class FixedPointProblem:
    """A shorting map mu -> phi(mu) whose fixed point certifies R > 0."""

    closed_form_id: str
    dim: int
    phi: Callable
    jacobian_at_zero: Callable[[float], np.ndarray]
    exact_threshold: float

    def __call__(self, lam, mu):
        return self.phi(lam, mu)


FIXED_POINT_PROBLEMS = {
    "sg3": FixedPointProblem("sg3", 1, _phi_sg, lambda lam: np.array([[5 * lam]]), 0.2),
    "cantor_x_interval": FixedPointProblem(
        "cantor_x_interval", 1, _phi_cantor_interval, lambda lam: np.array([[9 * lam]]), 1 / 9),
    "pentagasket": FixedPointProblem(
        "pentagasket", 2, _phi_pentagasket, lambda lam: lam * np.array([[4.0, 5.0], [8.0, 5.0]]),
        (math.sqrt(161) - 9) / 40),
}


def fixed_point_problem(fractal_id: str) -> FixedPointProblem:
    try:
        return FIXED_POINT_PROBLEMS[fractal_id]
    except KeyError:
        raise InvalidInput(f"no fixed-point problem for {fractal_id!r}; "
                           f"choose from {', '.join(FIXED_POINT_PROBLEMS)}") from None


@dataclass(frozen=True)
class FixedPointResult:
    exists: bool
    mu: tuple | None
    method: str


def fixed_point_exists(problem: FixedPointProblem | str, lam: float, eps: float = 1e-9,
                       max_iter: int = 2000) -> FixedPointResult:
    """Does phi(mu) = mu have a solution in (0, 1)^dim?

    1-d: sign change of phi(mu)/mu - 1 on a log grid, refined by Brent's
    method.  2-d: monotone iteration from (1-eps, 1-eps); iterates decrease
    to the largest fixed point (or to 0).  If the iteration has not settled
    after ``max_iter`` steps, which only happens near the threshold, the
    spectral radius of the Jacobian at 0 decides (the maps are monotone and
    concave, so a positive fixed point exists iff it exceeds one).
    """
    if isinstance(problem, str):
        problem = fixed_point_problem(problem)
    if not 0 < lam < 1:
        raise InvalidInput(f"lambda={lam} outside (0, 1)")
    if problem.dim == 1:
        def h(m):
            return problem.phi(lam, m) / m - 1.0

        grid = np.logspace(-13, math.log10(1 - eps), 200)
        vals = h(grid)
        sign = np.flatnonzero(np.diff(np.sign(vals)) != 0)
        if vals[0] <= 0 or not sign.size:
            return FixedPointResult(False, None, "scan")
        i = int(sign[0])
        root = brentq(h, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14)
        return FixedPointResult(True, (float(root),), "scan")

    mu = (1 - eps,) * problem.dim
    for _ in range(max_iter):
        nxt = tuple(problem.phi(lam, mu))
        if min(nxt) <= 0 or max(nxt) >= 1:
            return FixedPointResult(False, None, "iteration")
        if max(abs(a - b) for a, b in zip(nxt, mu)) < 1e-15:
            ok = min(nxt) > 1e-8
            return FixedPointResult(ok, nxt if ok else None, "iteration")
        mu = nxt
    rho = float(np.max(np.abs(np.linalg.eigvals(problem.jacobian_at_zero(lam)))))
    return FixedPointResult(rho > 1, mu if rho > 1 else None, "linearization")


def fixed_point_threshold(problem: FixedPointProblem | str, lo: float = 1e-3, hi: float = 0.999,
                          tol: float = 1e-9) -> float:
    """Bisect lambda for the onset of a positive fixed point."""
    if isinstance(problem, str):
        problem = fixed_point_problem(problem)
    if fixed_point_exists(problem, lo).exists or not fixed_point_exists(problem, hi).exists:
        raise InvalidInput("threshold not bracketed by [lo, hi]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fixed_point_exists(problem, mid).exists:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# --- closed forms and envelopes ----------------------------------------------

def cantor_resistance(lam, n: int | None = None):
    """R_n(1^n, 2^n) = 2 sum_{k<=n} (2 lam)^k on cantor3; n=None gives the limit."""
    if not 0 < lam < 1:
        raise InvalidInput(f"lambda={lam} outside (0, 1)")
    q = 2 * lam
    if n is None:
        if q >= 1:
            raise InvalidInput("the limit is finite only for lambda < 1/2")
        return 2 * q / (1 - q)
    return 2 * sum((q ** k for k in range(1, n + 1)), 0 * q)


def sg_step_bound(lam, r_prev, n: int):
    """One step of the cutting bound R_n <= 5 lam R_{n-1} + 2 3^{n-1} lam^n."""
    return 5 * lam * r_prev + 2 * 3 ** (n - 1) * lam ** n


def sg_envelope(lam, n: int) -> list:
    """Upper-bound sequence [U_1, ..., U_n] with U_1 = R_1 = 3 lam / 2."""
    u = [3 * lam / 2]
    for k in range(2, n + 1):
        u.append(sg_step_bound(lam, u[-1], k))
    return u


# exact level-1 pentagasket resistances on the unit wheel, times 5 lam
PENTA_LEVEL1 = (Fraction(8, 11), Fraction(6, 11))


def pentagasket_step_bound(lam, a_prev, b_prev, n: int):
    """Cutting bounds for (A_n, B_n) = (R_n(1^n,3^n), R_n(1^n,2^n))."""
    s = (5 * lam) ** n
    a = 10 * lam * a_prev + lam * b_prev + Fraction(6, 5) * s
    b = 10 * lam * a_prev - lam * b_prev + Fraction(4, 5) * s
    return a, b


def pentagasket_envelope(lam, n: int) -> list[tuple]:
    out = [(PENTA_LEVEL1[0] * 5 * lam, PENTA_LEVEL1[1] * 5 * lam)]
    for k in range(2, n + 1):
        out.append(pentagasket_step_bound(lam, *out[-1], k))
    return out


def closed_form_R(fractal_id: str, lam, n: int | None = None) -> dict:
    """Closed-form values or envelopes for a catalog fractal."""
    if not 0 < lam < 1:
        raise InvalidInput(f"lambda={lam} outside (0, 1)")
    out: dict = {"fractal": fractal_id, "lambda": lam}
    if fractal_id == "cantor3":
        if n is not None:
            out["R_n"] = cantor_resistance(lam, n)
        if 2 * lam < 1:
            out["limit"] = cantor_resistance(lam)
    elif fractal_id == "sg3":
        out["upper_bound"] = sg_envelope(lam, n or 10)
        out["threshold"] = 0.2
    elif fractal_id == "pentagasket":
        env = pentagasket_envelope(lam, n or 10)
        out["upper_bound_A"] = [a for a, _ in env]
        out["upper_bound_B"] = [b for _, b in env]
        out["threshold"] = (math.sqrt(161) - 9) / 40
    elif fractal_id == "cantor_x_interval":
        out["lower_bound_1_4"] = 4 * lam
        out["threshold"] = 1 / 9
    else:
        raise InvalidInput(f"no closed form for {fractal_id!r}")
    return out


# --- Rayleigh monotonicity ----------------------------------------------------

@dataclass(frozen=True)
class RayleighCertificate:
    edit: str
    before: object
    after: object
    lawful: bool


def rayleigh_bounds(net, edit: tuple, set_one, set_zero, tol: float = 1e-12) -> RayleighCertificate:
    """Compare R(E, F) before and after ``edit``.

    ``edit`` is ("cut", a, b), ("short", a, b) or ("scale", factor).
    Cutting may only raise R, shorting only lower it, scaling by t divides R by t.
    """
    from .solver import effective_resistance

    E, F = list(set_one), list(set_zero)
    before = effective_resistance(net, E, F).resistance
    kind = edit[0]
    if kind == "cut":
        after = effective_resistance(net.without_edge(edit[1], edit[2]), E, F).resistance
        lawful = _ge(after, before, tol, net.exact)
    elif kind == "short":
        a, b = edit[1], edit[2]
        E2 = [a if x == b else x for x in E]
        F2 = [a if x == b else x for x in F]
        after = effective_resistance(net.shorted(a, b), E2, F2).resistance
        lawful = _ge(before, after, tol, net.exact)
    elif kind == "scale":
        t = edit[1]
        after = effective_resistance(net.scaled(t), E, F).resistance
        expect = before / t
        lawful = after == expect if net.exact else (
            after == expect or abs(after - expect) <= tol * max(abs(expect), 1.0))
    else:
        raise InvalidInput(f"unknown edit {kind!r}")
    return RayleighCertificate(kind, before, after, bool(lawful))


def _ge(x, y, tol, exact) -> bool:
    if x == INF or exact:
        return x >= y
    return x >= y - tol * max(abs(y), 1.0)
