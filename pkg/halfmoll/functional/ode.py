__all__ = [
    'rk4_step',
    'bisect_crossing',
]
# externals
import torch
from torch import Tensor

# internals
from halfmoll.core.typing import Callable
from halfmoll.core.errors import StabilityError

VelocityFn = Callable[[Tensor, Tensor], Tensor]


def rk4_step(fn: VelocityFn, x: Tensor, s: Tensor, ds: Tensor) -> Tensor:
    """
    One classical fourth-order Runge-Kutta step of `dx/ds = fn(x, s)`.

    Parameters
    ----------
    fn : callable(x, s) -> (..., d) tensor
        Velocity.
    x : (..., d) tensor
        State at time `s`.
    s : (...) tensor
        Current time.
    ds : (...) tensor
        Signed step (negative to integrate backward).

    Returns
    -------
    x : (..., d) tensor
        State at time `s + ds`.
    """
    dsx = ds[..., None]
    k1 = fn(x, s)
    k2 = fn(x + 0.5 * dsx * k1, s + 0.5 * ds)
    k3 = fn(x + 0.5 * dsx * k2, s + 0.5 * ds)
    k4 = fn(x + dsx * k3, s + ds)
    x = x + dsx * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    if not torch.isfinite(x).all():
        raise StabilityError('Non-finite state in Runge-Kutta step')
    return x


def bisect_crossing(
    fn: VelocityFn,
    x: Tensor,
    s: Tensor,
    ds: Tensor,
    level: Callable[[Tensor], Tensor],
    tol: float = 1e-10,
    max_iter: int = 100,
) -> (Tensor, Tensor):
    """
    Locate where a Runge-Kutta step first crosses `level(x) = 0`.

    The step starting at `(x, s)` with signed length `ds` is assumed to
    start at `level < 0` and to end at `level >= 0`. The fraction
    `theta` of the step is bisected, each trial being a single
    Runge-Kutta step of length `theta * ds` from the step start.

    Returns
    -------
    x_exit : (..., d) tensor
        Point on the crossing side, with `|level| <= tol` on exit.
    s_exit : (...) tensor
        Crossing time.
    """
    lo = torch.zeros_like(s)
    hi = torch.ones_like(s)
    x_hi = rk4_step(fn, x, s, ds)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        x_mid = rk4_step(fn, x, s, mid * ds)
        crossed = level(x_mid) >= 0
        hi = torch.where(crossed, mid, hi)
        lo = torch.where(crossed, lo, mid)
        x_hi = torch.where(crossed[..., None], x_mid, x_hi)
        if (level(x_hi).abs() <= tol).all() and \
                ((hi - lo) * ds.abs() <= tol).all():
            break
    return x_hi, s + hi * ds
