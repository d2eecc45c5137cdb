"""Central finite-difference checks for the autodiff engine."""

from __future__ import annotations

import numpy as np

from .tensor import record_switches

EPS = np.finfo(float).eps


def _same_branch(a: list, b: list) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def numeric_grad(loss_fn, arr: np.ndarray, h: float, indices=None, screen: bool = False) -> np.ndarray:
    """Central differences of scalar ``loss_fn()`` w.r.t. ``arr`` (perturbed in place).

    ``indices`` restricts the check to a subset of flat positions; the others stay NaN.
    With ``screen`` an entry is left NaN when either perturbed pass flips a ReLU
    or a max-pool selection relative to the unperturbed pass: the quotient then
    spans a kink and is no oracle for the one-sided gradient.
    """
    if not arr.flags.c_contiguous:
        raise ValueError("numeric_grad perturbs in place and needs a contiguous array")
    flat = arr.reshape(-1)
    out = np.full(flat.size, np.nan)
    idx = range(flat.size) if indices is None else indices

    def run():
        if not screen:
            return loss_fn(), None
        with record_switches() as log:
            value = loss_fn()
        return value, log

    _, base = run()
    for i in idx:
        orig = flat[i]
        flat[i] = orig + h
        fp, sp = run()
        flat[i] = orig - h
        fm, sm = run()
        flat[i] = orig
        if screen and not (_same_branch(base, sp) and _same_branch(base, sm)):
            continue
        out[i] = (fp - fm) / (2 * h)
    return out.reshape(arr.shape)


def relative_error(analytic, numeric) -> float:
    """Max abs difference scaled by the largest gradient component of the group."""
    a = np.asarray(analytic, float)
    n = np.asarray(numeric, float)
    mask = ~np.isnan(n)
    if not mask.any():
        return 0.0
    a, n = a[mask], n[mask]
    scale = max(np.abs(a).max(), np.abs(n).max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - n).max() / scale)


def group_step(h: float, h_max: float | None, loss: float, grad_scale: float, resolution: float = 1e-7) -> float:
    """Step for one tensor: ``h``, grown until float64 roundoff in the quotient
    (about eps*|L|/h) falls below ``resolution`` of the group's gradient scale, capped at ``h_max``."""
    if h_max is None or grad_scale == 0.0:
        return h
    need = EPS * max(abs(loss), 1.0) / (resolution * grad_scale)
    return float(min(h_max, max(h, need)))


def check(
    build_loss,
    tensors: dict,
    h: float = 1e-5,
    max_entries: int | None = None,
    seed: int = 0,
    screen: bool = False,
    h_max: float | None = None,
    stats: dict | None = None,
) -> dict:
    """Compare analytic and numeric gradients for every tensor in ``tensors``.

    ``build_loss()`` must run the forward pass and return a scalar Tensor.
    ``screen`` drops entries whose perturbation changes a ReLU/max-pool branch;
    ``h_max`` lets groups with tiny gradients use a larger step (see ``group_step``).
    ``stats`` receives ``{name: (checked, skipped, step)}``.
    Returns ``{name: max relative error}``.
    """
    for t in tensors.values():
        t.grad = None
    loss = build_loss()
    loss.backward()
    value = float(loss.data)
    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data)) for name, t in tensors.items()}

    rng = np.random.default_rng(seed)
    errors = {}
    for name, t in tensors.items():
        indices = None
        if max_entries is not None and t.data.size > max_entries:
            indices = np.sort(rng.choice(t.data.size, size=max_entries, replace=False))
        step = group_step(h, h_max, value, float(np.abs(analytic[name]).max()))
        num = numeric_grad(lambda: float(build_loss().data), t.data, step, indices, screen)
        errors[name] = relative_error(analytic[name], num)
        if stats is not None:
            n = t.data.size if indices is None else len(indices)
            skipped = int(np.isnan(num).sum() - (t.data.size - n))
            stats[name] = (n, skipped, step)
    return errors
