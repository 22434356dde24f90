"""Benchmark: compiled kernels against the pure-Python fallback.

Times the two hot operations (one dynamics step; one full-state
finite-difference linearization of one timestep) on each built-in model
and reports the speedup. The compiled backend is skipped gracefully
when the extension is not built.
"""

from __future__ import annotations

import time
from typing import Dict, List, Optional

import numpy as np

from .. import _kernels
from .._kernels import planar_py
from ..dynamics import (make_clutter_model, make_soft_rigid_model,
                        make_softbody_model)
from ..statespace import DofSet

_MODELS = {
    "clutter": lambda: make_clutter_model(8, seed=0),
    "softbody": lambda: make_softbody_model(36),
    "soft_rigid": lambda: make_soft_rigid_model(24),
}


def _backends():
    out = {"python": planar_py}
    try:
        from .._kernels import _planar_cy
        out["compiled"] = _planar_cy
    except ImportError:
        pass
    return out


def _time(fn, repeats: int) -> float:
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def run_benchmark(models: Optional[List[str]] = None,
                  repeats: int = 200) -> List[Dict]:
    """Per-(model, backend) mean microseconds for step and linearize."""
    rows = []
    names = models or list(_MODELS)
    backends = _backends()
    for name in names:
        model = _MODELS[name]()
        params = model.params
        args = params.step_args()
        x = model.initial_state.copy()
        u = np.array([1.0, 0.5])
        out = np.empty_like(x)
        idx = DofSet.full(model.layout).state_indices
        nc2 = idx.shape[0]
        A = np.empty((nc2, nc2))
        B = np.empty((nc2, 2))
        x_next = np.empty_like(x)
        for backend_name, impl in backends.items():
            impl.planar_step(x, u, x_next, *args)
            step_s = _time(lambda: impl.planar_step(x, u, out, *args), repeats)
            lin_s = _time(lambda: impl.planar_linearize(
                x, u, x_next, idx, 1e-6, 1e-6, False, A, B, *args),
                max(1, repeats // 20))
            rows.append({"model": name, "backend": backend_name,
                         "dofs": model.layout.total,
                         "step_us": step_s * 1e6, "linearize_us": lin_s * 1e6})
    return rows


def format_table(rows: List[Dict]) -> str:
    lines = [f"active kernel backend: {_kernels.BACKEND}",
             f"{'model':<12}{'backend':<10}{'DoFs':>6}{'step (us)':>12}"
             f"{'linearize (us)':>16}{'speedup':>9}"]
    by_model: Dict[str, Dict[str, Dict]] = {}
    for r in rows:
        by_model.setdefault(r["model"], {})[r["backend"]] = r
    for model, backends in by_model.items():
        py = backends.get("python")
        for backend, r in backends.items():
            speedup = ""
            if backend == "compiled" and py is not None:
                speedup = f"{py['linearize_us'] / r['linearize_us']:.1f}x"
            lines.append(f"{model:<12}{backend:<10}{r['dofs']:>6}"
                         f"{r['step_us']:>12.2f}{r['linearize_us']:>16.1f}"
                         f"{speedup:>9}")
    return "\n".join(lines)
