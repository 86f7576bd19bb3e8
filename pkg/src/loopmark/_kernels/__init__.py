"""Search-time kernels: delete-relaxation costs and successor generation.

Two interchangeable backends provide the ``RelaxationCore`` and
``SuccessorCore`` classes: a compiled extension (``_fast``, built from
Cython) and a pure-Python fallback (``pure``).  The compiled backend is
preferred when importable; setting the ``LOOPMARK_PURE`` environment
variable to anything but ``0`` forces the fallback.  The factories below
also take an explicit ``backend`` argument so tests and benchmarks can pin
either implementation regardless of the default.
"""

from __future__ import annotations

import os

from . import pure as _pure

PURE_ENV_VAR = "LOOPMARK_PURE"

try:
    from . import _fast as _compiled
except ImportError:  # extension not built on this platform
    _compiled = None

if _compiled is not None and os.environ.get(PURE_ENV_VAR, "0").strip() not in ("", "0"):
    _default = _pure
elif _compiled is not None:
    _default = _compiled
else:
    _default = _pure

BACKEND_NAME = _default.BACKEND_NAME


def available_backends() -> tuple[str, ...]:
    return ("pure",) if _compiled is None else ("pure", "compiled")


def _module(backend):
    if backend is None:
        return _default
    if backend == "pure":
        return _pure
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("the compiled kernel backend is not available")
        return _compiled
    raise ValueError(f"unknown kernel backend {backend!r}")


def flatten_actions(actions):
    """Flatten ground-action index sets into (flat, offsets) array pairs.

    Returns a dict with ``pre``/``neg``/``add`` keys mapping to
    ``(flat, offsets)`` lists, each group sorted within its action.
    """
    out = {}
    for key, attr in (("pre", "pre"), ("neg", "neg_pre"), ("add", "add")):
        flat, offsets = [], [0]
        for action in actions:
            flat.extend(sorted(getattr(action, attr)))
            offsets.append(len(flat))
        out[key] = (flat, offsets)
    return out


def make_relaxation_core(task, mode, backend=None):
    """Relaxed-cost core for a ground task (``mode`` is ``"add"``/``"max"``).

    Negative preconditions and negative goal literals are invisible to the
    relaxation (standard delete-relaxation over positive atoms).
    """
    arrays = flatten_actions(task.actions)
    module = _module(backend)
    return module.RelaxationCore(
        mode,
        len(task.atoms),
        arrays["pre"][0],
        arrays["pre"][1],
        arrays["add"][0],
        arrays["add"][1],
        sorted(task.goal),
    )


def make_successor_core(task, backend=None):
    arrays = flatten_actions(task.actions)
    module = _module(backend)
    return module.SuccessorCore(
        len(task.atoms),
        arrays["pre"][0],
        arrays["pre"][1],
        arrays["neg"][0],
        arrays["neg"][1],
    )


def state_mask(num_atoms, state) -> bytes:
    """Render a state (iterable of atom indices) as a 0/1 byte mask."""
    mask = bytearray(num_atoms)
    for atom in state:
        mask[atom] = 1
    return bytes(mask)
