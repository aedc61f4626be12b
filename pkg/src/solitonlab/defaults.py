"""Single table of default tolerances and numerical knobs.

Every CLI flag that overrides one of these reads its default from here, and the
acceptance suite imports the same values.  ``SOLITONLAB_TOL`` in the environment
replaces the integration tolerance.
"""
import os

DEFAULTS = {
    # integration
    "tol": 1e-9,               # embedded RK local error tolerance
    "x_start_factor": 1e-3,    # series handoff abscissa = factor * b
    "slope_switch": 10.0,      # |gamma'| above which the graph form hands over to arclength
    "max_steps": 200_000,
    "axis_tol_factor": 1e-3,   # parametric run stops once x <= factor * b
    # implicit solve for gamma''
    "root_step0": 1e-3,        # initial bracket half-width, relative to 1+|guess|
    "root_step_max": 1e8,      # largest bracket half-width, same units
    # classification thresholds
    "x2_clamp": 1e-12,         # x2 in [-clamp, 0) is rounded to 0
    "umbilic_rel": 1e-10,      # H^2-4K <= rel * max(H^2, 1/L^2) counts as umbilic
    "tol_sph": 1e-8,           # sphere-coincidence threshold on |1+2bc|
    "ladder_factor": 10.0,     # F~ ladder base = factor * x_start
    "ladder_octaves": 2,
    # sphere search
    "r_max_factor": 1e6,
    "sphere_scan_points": 4000,
    # hopf patches
    "hopf_h": 1e-3,
    "hopf_substeps": 4,
    "hopf_max_defect": 1e-5,   # acceptance bound on identity defects at h = hopf_h
    "hopf_min_ratio": 3.5,     # defect(h) / defect(h/2) for second-order convergence
    "hopf_floor": 1e-14,       # defects below this are rounding, exempt from the ratio test
}


def default_tol() -> float:
    env = os.environ.get("SOLITONLAB_TOL")
    if env:
        try:
            tol = float(env)
        except ValueError:
            raise ValueError(f"SOLITONLAB_TOL={env!r} is not a number") from None
        if not tol > 0:
            raise ValueError(f"SOLITONLAB_TOL must be positive, got {env!r}")
        return tol
    return DEFAULTS["tol"]
