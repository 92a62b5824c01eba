"""Consistency of the discrete operators as delta -> 0 with fixed m = delta/h.

The ring-corrected stencil reproduces the second and mixed fourth moments, so
the truncation error on smooth fields is O(delta^2) for both L and L o L.  The
plain midpoint rule loses the rate.
"""
from nonlocal_plate import analysis as A
from nonlocal_plate.geometry import unit_square

ladder = [0.2, 0.1, 0.05, 0.025]
sine = A.sine_square(1, 1)


def show(title, res):
    print(title)
    for r in res.rows:
        print(f"  delta={r.delta:<6} h={r.h:.5f}  linf={r.error_linf:.3e}")
    print(f"  fitted order {res.fitted_order:.3f} (target {res.target_order}), passed={res.passed}")


show("Laplacian, ring_corrected, m=8",
     A.run_pointwise_laplacian_study(unit_square(), sine, ladder, 8))
show("biharmonic, ring_corrected, m=8",
     A.run_pointwise_biharmonic_study(unit_square(), sine, ladder, 8))
show("Laplacian, midpoint_skip, m=4",
     A.run_pointwise_laplacian_study(unit_square(), sine, ladder[:3], 4, quadrature="midpoint_skip"))
show("quadratic field (exact up to round-off)",
     A.run_pointwise_laplacian_study(unit_square(), A.quadratic(), ladder, 8))
