#!/usr/bin/env python3
"""Generate polynomial property fits for R134a and write data/r134a.props.

Saturation data below is a standard published R134a table (IIR reference
state: h_f = 200.00 kJ/kg, s_f = 1.00 kJ/kg K at 0 deg C).  All curves are
fitted by least squares as polynomials in t = ln(p / 1 kPa), which keeps
every analytic derivative a one-liner: d/dp = poly'(t) / p.  Vapor density
is fitted in log space (ln rho_g vs t) because it spans two decades.

The fit envelope [150, 2000] kPa is the calibrated band of the simulator;
the table rows extend past it on both sides so the edges are interpolated,
never extrapolated.

Run from the repo root:  python3 tools/gen_r134a_fit.py
Writes data/r134a.props and prints a paste-ready C++ coefficient block.
"""

import sys
from pathlib import Path

import numpy as np

# T [C], p [kPa], rho_f [kg/m3], rho_g [kg/m3], h_f [kJ/kg], h_g [kJ/kg]
SATURATION_TABLE = [
    (-40.0,   51.2, 1414.8,   2.769, 148.14, 374.00),
    (-30.0,   84.4, 1385.9,   4.426, 160.79, 380.32),
    (-20.0,  132.8, 1357.7,   6.785, 173.64, 386.55),
    (-10.0,  200.6, 1327.1,  10.041, 186.70, 392.66),
    (  0.0,  292.8, 1294.8,  14.428, 200.00, 398.60),
    ( 10.0,  414.6, 1261.0,  20.226, 213.58, 404.32),
    ( 20.0,  571.7, 1225.3,  27.780, 227.47, 409.75),
    ( 30.0,  770.2, 1187.5,  37.535, 241.72, 414.82),
    ( 40.0, 1016.6, 1146.7,  50.085, 256.41, 419.43),
    ( 50.0, 1317.9, 1102.3,  66.272, 271.62, 423.44),
    ( 60.0, 1681.8, 1052.9,  87.379, 287.49, 426.63),
    ( 70.0, 2116.8,  996.2, 115.640, 304.28, 428.65),
]

# Saturated-vapor isobaric heat capacity cp [kJ/kg K] at the same rows;
# used for the superheat temperature model T = T_sat + (h - h_g) / cp(p).
CP_VAPOR = [0.749, 0.780, 0.816, 0.854, 0.883, 0.934,
            0.982, 1.044, 1.120, 1.223, 1.387, 1.608]

ENVELOPE = (150.0, 2000.0)
KELVIN = 273.15


def fit(t, y, deg):
    """Least-squares poly fit returning ascending coefficients c0..cdeg."""
    return np.polynomial.polynomial.polyfit(t, y, deg)


def peval(coeffs, t):
    return np.polynomial.polynomial.polyval(t, coeffs)


def main():
    root = Path(__file__).resolve().parent.parent
    tab = np.array(SATURATION_TABLE)
    temp, pres, rho_f, rho_g, h_f, h_g = tab.T
    cp_v = np.array(CP_VAPOR)
    t = np.log(pres)

    fits = {
        "tsat": fit(t, temp, 4),
        "rho_f": fit(t, rho_f, 4),
        "rho_g": fit(t, np.log(rho_g), 4),   # stored in log space
        "h_f": fit(t, h_f, 4),
        "h_g": fit(t, h_g, 4),
        "t_sh": fit(t, cp_v, 3),             # cp of slightly superheated vapor
        "rho_sh": np.array([KELVIN]),        # Kelvin offset of the anchored
                                             # vapor-density model (see below)
    }

    # --- fit-quality report (hard gates, not just prints) ----------------
    # (name, table values, fit values, gate, relative?)
    checks = [
        ("tsat [C]", temp, peval(fits["tsat"], t), 0.25, False),
        ("rho_f [kg/m3]", rho_f, peval(fits["rho_f"], t), 2.0, False),
        ("rho_g [rel]", rho_g, np.exp(peval(fits["rho_g"], t)), 0.005, True),
        ("h_f [kJ/kg]", h_f, peval(fits["h_f"], t), 0.5, False),
        ("h_g [kJ/kg]", h_g, peval(fits["h_g"], t), 0.3, False),
        ("cp_v [kJ/kgK]", cp_v, peval(fits["t_sh"], t), 0.05, False),
    ]
    print("fit residuals over the table rows:")
    ok = True
    for name, ref, got, gate, rel in checks:
        err = np.abs(got - ref) / (np.abs(ref) if rel else 1.0)
        worst = np.max(err)
        verdict = "ok" if worst <= gate else "FAIL"
        if worst > gate:
            ok = False
        print(f"  {name:16s} max |fit-table| = {worst:9.4f}  (gate {gate})  {verdict}")

    # --- physical sanity on a dense grid over the shipped envelope -------
    grid = np.exp(np.linspace(np.log(ENVELOPE[0]), np.log(ENVELOPE[1]), 400))
    tg = np.log(grid)
    ts = peval(fits["tsat"], tg)
    rf = peval(fits["rho_f"], tg)
    rg = np.exp(peval(fits["rho_g"], tg))
    hf = peval(fits["h_f"], tg)
    hg = peval(fits["h_g"], tg)
    cp = peval(fits["t_sh"], tg)
    problems = []
    if not np.all(np.diff(ts) > 0):
        problems.append("T_sat not strictly increasing")
    if not np.all(np.diff(hg) > 0):
        problems.append("h_g not strictly increasing")
    if not np.all(np.diff(rg) > 0):
        problems.append("rho_g not strictly increasing")
    if not np.all(rf > rg):
        problems.append("rho_f <= rho_g somewhere")
    if not np.all(rg > 0):
        problems.append("rho_g <= 0 somewhere")
    if not np.all(hg > hf):
        problems.append("h_g <= h_f somewhere")
    if not np.all(cp > 0.5):
        problems.append("cp_v fit dips below 0.5")
    for msg in problems:
        print("  SANITY FAIL:", msg)
    if problems or not ok:
        sys.exit(1)

    # --- write the coefficient file ---------------------------------------
    out = root / "data" / "r134a.props"
    out.parent.mkdir(exist_ok=True)
    lines = [
        "r134a-props v1",
        "# Polynomial property fits in t = ln(p / 1 kPa).",
        "# Saturation keys (tsat, rho_f, h_f, h_g): value = sum_k c_k t^k.",
        "# rho_g is stored in log space: rho_g = exp(sum_k c_k t^k).",
        "# t_sh: cp of slightly superheated vapor [kJ/kg K] as a poly in t;",
        "#       temperature model T(p,h) = T_sat(p) + (h - h_g(p)) / cp(p).",
        "# rho_sh: single value = Celsius->Kelvin offset of the vapor density",
        "#       model rho(p,h) = rho_g(p) * T_sat_K(p) / T_K(p,h), which is",
        "#       anchored to the saturation fits (continuous at h = h_g).",
        f"envelope_kpa {ENVELOPE[0]:.6g} {ENVELOPE[1]:.6g}",
    ]
    for key in ["tsat", "rho_f", "rho_g", "h_f", "h_g", "rho_sh", "t_sh"]:
        c = fits[key]
        lines.append(key + " " + str(len(c)) + " " +
                     " ".join(f"{v:.17g}" for v in c))
    out.write_text("\n".join(lines) + "\n")
    print(f"\nwrote {out}")

    # --- paste-ready C++ block for the builtin model ----------------------
    print("\n// builtin coefficients (paste into src/props.cpp):")
    print(f"    m.p_lo = {ENVELOPE[0]:.1f};")
    print(f"    m.p_hi = {ENVELOPE[1]:.1f};")
    cpp_names = {"tsat": "tsat", "rho_f": "rho_f", "rho_g": "ln_rho_g",
                 "h_f": "h_f", "h_g": "h_g", "t_sh": "cp_v"}
    for key, cn in cpp_names.items():
        vals = ", ".join(f"{v:.17g}" for v in fits[key])
        print(f"    m.{cn} = {{{vals}}};")
    print(f"    m.kelvin = {KELVIN};")


if __name__ == "__main__":
    main()
