"""Initial vorticity presets.

gaussian_ring
    ``2 A (r/w)(s/w) exp(-(r^2 + s^2)/w^2)`` with ``s = z - z_center``.
    Defaults give ``2 r z exp(-r^2 - z^2)``, whose potential is
    ``-z exp(-r^2 - z^2)`` and whose blowup time is 1.  The minimum of
    ``d_z phi0`` sits on the axis where the vorticity vanishes.
offset_ring
    A ring whose axial centre shifts with radius, ``u = z - z_center - c r``.
    It is built from the potential ``phi0 = -A r^2 exp(-r^2) u exp(-u^2)``,
    so ``inf d_z phi0 = -A/e`` is attained at ``(1, z_center + c)`` where
    ``omega0 = A c / e`` is nonzero.
custom_sum
    Sum of terms ``amp r^a s^b exp(-r^2/wr^2 - s^2/wz^2)``, ``s = z - z_center``,
    with integer ``a >= 1`` so every term vanishes on the axis.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import ScalarField, estimate_support_radius, zero_field

PRESETS = ("zero", "gaussian_ring", "offset_ring", "custom_sum")


class PresetError(ValueError):
    pass


def gaussian_ring(amplitude=1.0, width=1.0, z_center=0.0) -> ScalarField:
    A, w, zc = float(amplitude), float(width), float(z_center)
    if w <= 0:
        raise PresetError("gaussian_ring width must be positive")

    def f(r, z):
        s = z - zc
        return 2 * A * r * s / w**2 * np.exp(-(r * r + s * s) / w**2)

    def f_r(r, z):
        s = z - zc
        return 2 * A * s / w**2 * (1 - 2 * r * r / w**2) * np.exp(-(r * r + s * s) / w**2)

    def f_z(r, z):
        s = z - zc
        return 2 * A * r / w**2 * (1 - 2 * s * s / w**2) * np.exp(-(r * r + s * s) / w**2)

    def f_zz(r, z):
        s = z - zc
        return (2 * A * r / w**2 * (4 * s**3 / w**4 - 6 * s / w**2)
                * np.exp(-(r * r + s * s) / w**2))

    return _finish(ScalarField(f, f_r, f_z, f_zz, name="gaussian_ring"), zc)


def offset_ring(amplitude=1.0, shear=1.0, z_center=0.0) -> ScalarField:
    A, c, zc = float(amplitude), float(shear), float(z_center)

    # omega0 = -A E B with E = exp(-r^2 - u^2), B = 2 r (1 - r^2) u - c r^2 (1 - 2 u^2)
    def parts(r, z):
        u = z - zc - c * r
        E = np.exp(-r * r - u * u)
        B = 2 * r * (1 - r * r) * u - c * r * r * (1 - 2 * u * u)
        Bz = 2 * r * (1 - r * r) + 4 * c * r * r * u
        return u, E, B, Bz

    def f(r, z):
        _, E, B, _ = parts(r, z)
        return -A * E * B

    def f_z(r, z):
        u, E, B, Bz = parts(r, z)
        return -A * E * (Bz - 2 * u * B)

    def f_zz(r, z):
        u, E, B, Bz = parts(r, z)
        return -A * E * (4 * c * r * r - 4 * u * Bz - 2 * B + 4 * u * u * B)

    def f_r(r, z):
        u, E, B, Bz = parts(r, z)
        # d_r u = -c, d_r E = (-2 r + 2 c u) E
        Br = (2 * (1 - 3 * r * r) * u - 2 * c * r * (1 - r * r)
              - 2 * c * r * (1 - 2 * u * u) - 4 * c * c * r * r * u)
        return -A * E * (Br + (-2 * r + 2 * c * u) * B)

    return _finish(ScalarField(f, f_r, f_z, f_zz, name="offset_ring"), zc)


def _term(amp, a, b, wr, wz, zc):
    def f(r, z):
        s = z - zc
        return amp * r**a * s**b * np.exp(-r * r / wr**2 - s * s / wz**2)

    def poly_d(s, k):
        # derivative of s^b exp(-s^2/wz^2) in s, returned as coefficient of the gaussian
        if k == 1:
            out = -2 * s ** (b + 1) / wz**2
            if b >= 1:
                out = out + b * s ** (b - 1)
            return out
        out = 4 * s ** (b + 2) / wz**4 - 2 * (2 * b + 1) * s**b / wz**2
        if b >= 2:
            out = out + b * (b - 1) * s ** (b - 2)
        return out

    def f_z(r, z):
        s = z - zc
        return amp * r**a * poly_d(s, 1) * np.exp(-r * r / wr**2 - s * s / wz**2)

    def f_zz(r, z):
        s = z - zc
        return amp * r**a * poly_d(s, 2) * np.exp(-r * r / wr**2 - s * s / wz**2)

    def f_r(r, z):
        s = z - zc
        rp = a * r ** (a - 1) - 2 * r ** (a + 1) / wr**2
        return amp * rp * s**b * np.exp(-r * r / wr**2 - s * s / wz**2)

    return ScalarField(f, f_r, f_z, f_zz, name="term")


def custom_sum(terms) -> ScalarField:
    if not terms:
        return zero_field()
    fields = []
    centers = []
    for k, t in enumerate(terms):
        t = dict(t)
        unknown = set(t) - {"amp", "a", "b", "r_width", "z_width", "z_center"}
        if unknown:
            raise PresetError(f"custom_sum term {k}: unknown keys {sorted(unknown)}")
        a, b = t.get("a", 1), t.get("b", 0)
        if int(a) != a or a < 1 or int(b) != b or b < 0:
            raise PresetError(f"custom_sum term {k}: need integer a >= 1 and b >= 0")
        wr, wz = float(t.get("r_width", 1.0)), float(t.get("z_width", 1.0))
        if wr <= 0 or wz <= 0:
            raise PresetError(f"custom_sum term {k}: widths must be positive")
        zc = float(t.get("z_center", 0.0))
        fields.append(_term(float(t.get("amp", 1.0)), int(a), int(b), wr, wz, zc))
        centers.append(zc)
    total = fields[0]
    for g in fields[1:]:
        total = total + g
    total = ScalarField(total.func, total.d_dr, total.d_dz, total.d_dz2, name="custom_sum")
    return _finish(total, max(centers, key=abs))


def _finish(f: ScalarField, z_center: float) -> ScalarField:
    radius = estimate_support_radius(f.func, f.tail_tol, r_search=60.0 + abs(z_center))
    return ScalarField(f.func, f.d_dr, f.d_dz, f.d_dz2, support_radius=radius,
                       tail_tol=f.tail_tol, name=f.name)


def make_preset(preset: str, params: dict | None = None) -> ScalarField:
    params = dict(params or {})
    if preset == "zero":
        if params:
            raise PresetError("zero preset takes no parameters")
        return zero_field()
    if preset == "gaussian_ring":
        _check(params, {"amplitude", "width", "z_center"}, preset)
        return gaussian_ring(**params)
    if preset == "offset_ring":
        _check(params, {"amplitude", "shear", "z_center"}, preset)
        return offset_ring(**params)
    if preset == "custom_sum":
        _check(params, {"terms"}, preset)
        return custom_sum(params.get("terms", []))
    raise PresetError(f"unknown preset {preset!r}; choose one of {', '.join(PRESETS)}")


def _check(params, allowed, preset):
    unknown = set(params) - allowed
    if unknown:
        raise PresetError(f"{preset}: unknown parameters {sorted(unknown)}")
    for k, v in params.items():
        if k != "terms" and not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise PresetError(f"{preset}.{k} must be a finite number")
