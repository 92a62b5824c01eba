"""Collects per-criterion results so one PASS/FAIL line per criterion can be printed."""

from collections import OrderedDict

TITLES = {
    1: "scaling constant C(delta) = 1/(2d)",
    2: "integration by parts",
    3: "operator structure",
    4: "pointwise Laplacian rate",
    5: "pointwise biharmonic rate",
    6: "Poisson solution convergence",
    7: "hinged split = monolithic, hinged convergence",
    8: "clamped disk convergence",
    9: "coercivity",
    10: "Lipschitz probe",
}

_parts = OrderedDict()


def record(criterion, part, ok, detail):
    _parts.setdefault(criterion, OrderedDict())[part] = (bool(ok), detail)


def summary_lines():
    out = []
    for n in sorted(_parts):
        parts = _parts[n]
        ok = all(p[0] for p in parts.values())
        details = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({d})"
                            for name, (good, d) in parts.items())
        out.append(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {TITLES[n]}  [{details}]")
    return out
