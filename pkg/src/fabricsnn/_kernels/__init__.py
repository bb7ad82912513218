"""Numeric kernel selection.

The hot inner loops (dense solves of the small conductance systems, the
single-swap candidate scan used by the learner, and relaxation sweeps) have
two interchangeable implementations: a compiled Cython extension and a
numpy/pure-python fallback.  The compiled module is preferred when it built;
set FABRIC_SNN_KERNEL=python to force the fallback (e.g. for benchmarking).

Both backends expose the same functions:

    solve_multi(G, B)        -> V            dense LU solve, multiple RHS
    solve_batch(Gs, Bs)      -> (Vs, ok)     stacked solves, per-item status
    swap_volts(...)          -> volts        output voltages for every
                                             single-edge option swap
    gs_sweeps(...)           -> (iters, upd) in-place relaxation sweeps

Singular systems raise ArithmeticError (solve_multi, swap_volts) or clear
the per-item ok flag (solve_batch).
"""

import os

from . import pykernels

_forced = os.environ.get("FABRIC_SNN_KERNEL", "").strip().lower()

if _forced in ("", "auto", "compiled", "c"):
    try:
        from . import _ckernels as _impl

        BACKEND = "compiled"
    except ImportError:
        if _forced in ("compiled", "c"):
            raise
        _impl = pykernels
        BACKEND = "python"
elif _forced in ("python", "py"):
    _impl = pykernels
    BACKEND = "python"
else:
    raise ValueError(f"FABRIC_SNN_KERNEL={_forced!r} not recognized")

solve_multi = _impl.solve_multi
solve_batch = _impl.solve_batch
swap_volts = _impl.swap_volts
gs_sweeps = _impl.gs_sweeps


def get_backends():
    """All importable backends, keyed by name (for tests and benchmarks)."""
    backends = {"python": pykernels}
    try:
        from . import _ckernels

        backends["compiled"] = _ckernels
    except ImportError:
        pass
    return backends
