"""Backend selection for the plant stepper.

The compiled extension is used when it imports; ``GRIDPV_PURE_PYTHON=1``
forces the pure-Python twin.  Both expose ``advance``, ``record`` and
``settle_pcc`` with identical semantics and bit-identical arithmetic.
"""

from __future__ import annotations

import logging
import os

from . import _kernel_py

log = logging.getLogger(__name__)

_compiled = None
if os.environ.get("GRIDPV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled  # type: ignore[attr-defined]
    except ImportError as exc:  # pragma: no cover - depends on the build
        log.debug("compiled kernel unavailable (%s); using pure Python", exc)
        _compiled = None

BACKENDS = {"python": _kernel_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
active = BACKENDS[BACKEND]


def get(name: str | None = None):
    """Kernel module by name; ``None`` gives the import-time choice."""
    if name is None:
        return active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {sorted(BACKENDS)}") from None
