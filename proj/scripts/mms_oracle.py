#!/usr/bin/env python3
"""Symbolic manufactured-solution sources, frozen as golden values for the C++ tests.

Writes tests/golden/mms_sources.inc. Run from the repository root:
    python3 scripts/mms_oracle.py
"""
import pathlib

import sympy as sp

x, y, t = sp.symbols("x y t", real=True)
pi = sp.pi


def material(name):
    base = dict(rho_s=1, rho_f=1, phi=sp.Rational(1, 2), nu=2, mu=50, lam=100, eta_k=1,
                alpha=1, beta=1, a0=1, c0=1, b0=sp.Rational(1, 2), chi=1, tau=1)
    if name == "L1":
        return base
    if name == "L3":
        return dict(rho_s=2650, rho_f=1000, phi=sp.Rational(3, 10), nu=2,
                    mu=sp.Float("1.885e9", 30), lam=sp.Float("4.433e8", 30),
                    eta_k=sp.Float("1e9", 30), alpha=sp.Float("0.7143", 30),
                    beta=sp.Float("4.8571e4", 30), a0=sp.Float("4.1695", 30),
                    c0=sp.Float("1.3684e-10", 30), b0=sp.Float("1.3684e-5", 30),
                    chi=sp.Float("1.5e4", 30), tau=sp.Float("1.5e-2", 30))
    if name == "custom":
        return dict(rho_s=3, rho_f=sp.Rational(7, 5), phi=sp.Rational(2, 5), nu=3, mu=7, lam=11,
                    eta_k=sp.Rational(13, 10), alpha=sp.Rational(4, 5), beta=sp.Rational(3, 2),
                    a0=2, c0=3, b0=sp.Rational(1, 3), chi=sp.Rational(5, 2), tau=sp.Rational(1, 4))
    raise ValueError(name)


def fields(m):
    ct, st = sp.cos(2 * pi * t), sp.sin(2 * pi * t)
    w = sp.Matrix([sp.sin(pi * x) * sp.cos(pi * y), sp.cos(pi * x) * sp.sin(pi * y)])
    u = 2 * pi * ct * w
    q = ct * w
    p = sp.sin(pi * x) * sp.sin(pi * y) * ct
    th = sp.sin(pi * y) * ct
    # r = (0, (A cos + B sin) pi cos(pi y)) with A, B chosen so the Cattaneo law holds exactly.
    A, B = sp.symbols("A B")
    r = sp.Matrix([0, (A * ct + B * st) * pi * sp.cos(pi * y)])
    catt = (m["tau"] / m["chi"]) * sp.diff(r[1], t) + r[1] / m["chi"] + sp.diff(th, y)
    catt = sp.expand(sp.simplify(catt / (pi * sp.cos(pi * y))))
    sol = sp.solve([catt.coeff(ct), catt.coeff(st)], [A, B], dict=True)[0]
    r = r.subs(sol)
    # sigma = int_0^t C eps(u) ds, so sigma(0) = 0.
    s = sp.symbols("s", real=True)
    grad = sp.Matrix(2, 2, lambda i, j: sp.diff(u[i], (x, y)[j]))
    eps = (grad + grad.T) / 2
    Ceps = 2 * m["mu"] * eps + m["lam"] * eps.trace() * sp.eye(2)
    sig = Ceps.applyfunc(lambda e: sp.integrate(e.subs(t, s), (s, 0, t)))
    return u, q, r, sig, p, th


def sources(m, f):
    u, q, r, sig, p, th = f
    rho = m["phi"] * m["rho_f"] + (1 - m["phi"]) * m["rho_s"]
    rho_w = m["nu"] / m["phi"] * m["rho_f"]
    iso = m["alpha"] * p + m["beta"] * th
    div = lambda v: sp.diff(v[0], x) + sp.diff(v[1], y)
    grad = lambda g: sp.Matrix([sp.diff(g, x), sp.diff(g, y)])
    divT = sp.Matrix([sp.diff(sig[0, 0] - iso, x) + sp.diff(sig[0, 1], y),
                      sp.diff(sig[1, 0], x) + sp.diff(sig[1, 1] - iso, y)])
    Fs = rho * sp.diff(u, t) + m["rho_f"] * sp.diff(q, t) - divT
    Ff = m["rho_f"] * sp.diff(u, t) + rho_w * sp.diff(q, t) + m["eta_k"] * q + grad(p)
    Fr = m["tau"] / m["chi"] * sp.diff(r, t) + r / m["chi"] + grad(th)
    gradu = sp.Matrix(2, 2, lambda i, j: sp.diff(u[i], (x, y)[j]))
    eps = (gradu + gradu.T) / 2
    G = sp.diff(sig, t) - (2 * m["mu"] * eps + m["lam"] * eps.trace() * sp.eye(2))
    gp = m["c0"] * sp.diff(p, t) - m["b0"] * sp.diff(th, t) + m["alpha"] * div(u) + div(q)
    g = m["a0"] * sp.diff(th, t) - m["b0"] * sp.diff(p, t) + m["beta"] * div(u) + div(r)
    return [Fs[0], Fs[1], Ff[0], Ff[1], Fr[0], Fr[1], G[0, 0], G[1, 1], G[0, 1], gp, g]


POINTS = [("0.3", "0.7", "0.2"), ("0.9", "0.1", "0.45"), ("0.5", "0.5", "0"),
          ("0.123", "0.456", "0.789"), ("1", "0.25", "0.3")]


def main():
    out = ["// Generated by scripts/mms_oracle.py; do not edit.",
           "// material, x, y, t, 11 field values, 11 source values",
           "// fields: u1 u2 q1 q2 r1 r2 sxx syy sxy p theta",
           "// sources: Fs1 Fs2 Ff1 Ff2 Fr1 Fr2 Gxx Gyy Gxy gp g"]
    for name in ("L1", "L3", "custom"):
        m = material(name)
        f = fields(m)
        u, q, r, sig, p, th = f
        flat = [u[0], u[1], q[0], q[1], r[0], r[1], sig[0, 0], sig[1, 1], sig[0, 1], p, th]
        src = sources(m, f)
        for px, py, pt in POINTS:
            sub = {x: sp.Rational(px), y: sp.Rational(py), t: sp.Rational(pt)}
            vals = [sp.N(e.subs(sub), 25) for e in flat]
            svals = [sp.N(e.subs(sub), 25) for e in src]
            nums = ", ".join(f"{float(v):.17g}" for v in vals + svals)
            out.append(f'{{"{name}", {px}, {py}, {pt}, {{{nums}}}}},')
    path = pathlib.Path(__file__).resolve().parent.parent / "tests" / "golden" / "mms_sources.inc"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    print(f"wrote {path} ({len(out) - 4} rows)")


if __name__ == "__main__":
    main()
