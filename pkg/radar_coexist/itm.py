"""Longley-Rice Irregular Terrain Model, area-prediction mode (ITM 1.2.2 semantics).

Reference attenuation is built the way the NTIA algorithm does it: a
two-ray/ground-wave fit inside the smooth-earth horizon, a straight
diffraction line fitted between two points beyond it, and a troposcatter line
fitted far out; the variability stage then turns the reference attenuation
into a quantile of transmission loss.

Distances inside this module are in metres and angles in radians unless a
name says otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from scipy.special import ndtri

from radar_coexist.errors import DomainError
from radar_coexist.models import ItmParams, Polarization

logger = logging.getLogger(__name__)

_THIRD = 1.0 / 3.0
_GMA = 157e-9  # actual earth curvature, 1/m


class ItmMode(str, Enum):
    line_of_sight = "line_of_sight"
    diffraction = "diffraction"
    troposcatter = "troposcatter"


@dataclass(frozen=True)
class ItmResult:
    loss_db: float
    free_space_db: float
    reference_attenuation_db: float
    mode: ItmMode
    warning_code: int


# ── Helper Functions ───────────────────────────────────────────────────────────

def _dim(x: float, y: float) -> float:
    return x - y if x > y else 0.0


def _aknfe(v2: float) -> float:
    """Knife-edge diffraction attenuation."""
    if v2 < 5.76:
        return 6.02 + 9.11 * math.sqrt(v2) - 1.27 * v2
    return 12.953 + 4.343 * math.log(v2)


def _fht(x: float, pk: float) -> float:
    """Height-gain over a smooth spherical earth."""
    if x < 200.0:
        w = -math.log(pk)
        if pk < 1e-5 or x * w**3 > 5495.0:
            value = -117.0
            if x > 1.0:
                value += 17.372 * math.log(x)
        else:
            value = 2.5e-5 * x * x / pk - 8.686 * w - 15.0
        return value
    value = 0.05751 * x - 4.343 * math.log(x)
    if x < 2000.0:
        w = 0.0134 * x * math.exp(-0.005 * x)
        value = (1.0 - w) * value + w * (17.372 * math.log(x) - 117.0)
    return value


_H0_A = (25.0, 80.0, 177.0, 395.0, 705.0)
_H0_B = (24.0, 45.0, 68.0, 80.0, 105.0)


def _h0f(r: float, et: float) -> float:
    """Frequency-gain function for troposcatter."""
    it = int(et)
    if it <= 0:
        it, q = 1, 0.0
    elif it >= 5:
        it, q = 5, 0.0
    else:
        q = et - it
    x = (1.0 / r) ** 2
    value = 4.343 * math.log((_H0_A[it - 1] * x + _H0_B[it - 1]) * x + 1.0)
    if q != 0.0:
        value = (1.0 - q) * value + q * 4.343 * math.log((_H0_A[it] * x + _H0_B[it]) * x + 1.0)
    return value


def _ahd(td: float) -> float:
    """Troposcatter attenuation function F(θd)."""
    if td <= 10e3:
        a, b, c = 133.4, 0.332e-3, -4.343
    elif td <= 70e3:
        a, b, c = 104.6, 0.212e-3, -1.086
    else:
        a, b, c = 71.8, 0.157e-3, 2.171
    return a + b * td + c * math.log(td)


def _curve(c1: float, c2: float, x1: float, x2: float, x3: float, de: float) -> float:
    return (c1 + c2 / (1.0 + ((de - x2) / x3) ** 2)) * (de / x1) ** 2 / (1.0 + (de / x1) ** 2)


# ── Terrain-Independent Setup ──────────────────────────────────────────────────

@dataclass
class _Path:
    wn: float
    ens: float
    gme: float
    zgnd: complex
    dh: float
    hg: tuple[float, float]
    he: tuple[float, float]
    dl: tuple[float, float]
    the: tuple[float, float]
    kwx: int = 0


def _prepare(freq_mhz: float, h_tx: float, h_rx: float, p: ItmParams) -> _Path:
    """Ground constants, effective heights and horizon geometry (qlrps + qlra)."""
    wn = freq_mhz / 47.7
    ens = p.surface_refractivity
    gme = _GMA * (1.0 - 0.04665 * math.exp(ens / 179.3))
    zq = complex(p.dielectric_constant, 376.62 * p.conductivity / wn)
    zgnd = (zq - 1.0) ** 0.5
    if p.polarization is Polarization.vertical:
        zgnd = zgnd / zq

    dh = p.terrain_roughness_m
    hg = (h_tx, h_rx)
    he: list[float] = []
    dl: list[float] = []
    the: list[float] = []
    for h, siting in zip(hg, (p.tx_siting.code, p.rx_siting.code)):
        if siting <= 0:
            h_eff = h
        else:
            q = 4.0 if siting == 1 else 9.0
            if h < 5.0:
                q *= math.sin(0.3141593 * h)
            h_eff = h + (1.0 + q) * math.exp(-min(20.0, 2.0 * h / max(1e-3, dh)))
        q = math.sqrt(2.0 * h_eff / gme)
        horizon = q * math.exp(-0.07 * math.sqrt(dh / max(h_eff, 5.0)))
        he.append(h_eff)
        dl.append(horizon)
        the.append((0.65 * dh * (q / horizon - 1.0) - 2.0 * h_eff) / q)
    return _Path(wn, ens, gme, zgnd, dh, hg, (he[0], he[1]), (dl[0], dl[1]), (the[0], the[1]))


# ── Reference Attenuation ──────────────────────────────────────────────────────

@dataclass
class _Reference:
    """Fitted reference-attenuation lines (the lrprop coefficients)."""

    path: _Path
    dlsa: float
    dla: float
    tha: float
    dmin: float
    xae: float
    emd: float = 0.0
    aed: float = 0.0
    ems: float = 0.0
    aes: float = 0.0
    dx: float = 0.0
    ak1: float = 0.0
    ak2: float = 0.0
    ael: float = 0.0


class _Diffraction:
    def __init__(self, ref: _Reference) -> None:
        p = ref.path
        self.ref = ref
        q = p.hg[0] * p.hg[1]
        qk = p.he[0] * p.he[1] - q
        q += 10.0
        self.wd1 = math.sqrt(1.0 + qk / q)
        self.xd1 = ref.dla + ref.tha / p.gme
        q = (1.0 - 0.8 * math.exp(-ref.dlsa / 50e3)) * p.dh
        q *= 0.78 * math.exp(-((q / 16.0) ** 0.25))
        self.afo = min(15.0, 2.171 * math.log(1.0 + 4.77e-4 * p.hg[0] * p.hg[1] * p.wn * q))
        self.qk = 1.0 / abs(p.zgnd)
        self.aht = 20.0
        self.xht = 0.0
        for j in range(2):
            a = 0.5 * p.dl[j] ** 2 / p.he[j]
            wa = (a * p.wn) ** _THIRD
            pk = self.qk / wa
            q = (1.607 - pk) * 151.0 * wa * p.dl[j] / a
            self.xht += q
            self.aht += _fht(q, pk)

    def __call__(self, d: float) -> float:
        ref, p = self.ref, self.ref.path
        th = ref.tha + d * p.gme
        ds = d - ref.dla
        q = 0.0795775 * p.wn * ds * th * th
        knife = _aknfe(q * p.dl[0] / (ds + p.dl[0])) + _aknfe(q * p.dl[1] / (ds + p.dl[1]))
        a = ds / th
        wa = (a * p.wn) ** _THIRD
        pk = self.qk / wa
        q = (1.607 - pk) * 151.0 * wa * th + self.xht
        ar = 0.05751 * q - 4.343 * math.log(q) - self.aht
        q = (self.wd1 + self.xd1 / d) * min(
            (1.0 - 0.8 * math.exp(-d / 50e3)) * p.dh * p.wn, 6283.2
        )
        wd = 25.1 / (25.1 + math.sqrt(q))
        return ar * wd + (1.0 - wd) * knife + self.afo


class _Scatter:
    def __init__(self, ref: _Reference) -> None:
        p = ref.path
        self.ref = ref
        self.ad = p.dl[0] - p.dl[1]
        self.rr = p.he[1] / p.he[0]
        if self.ad < 0.0:
            self.ad = -self.ad
            self.rr = 1.0 / self.rr
        self.etq = (5.67e-6 * p.ens - 2.32e-3) * p.ens + 0.031
        self.h0s = -15.0

    def __call__(self, d: float) -> float:
        ref, p = self.ref, self.ref.path
        if self.h0s > 15.0:
            h0 = self.h0s
        else:
            th = p.the[0] + p.the[1] + d * p.gme
            r2 = 2.0 * p.wn * th
            r1 = r2 * p.he[0]
            r2 *= p.he[1]
            if r1 < 0.2 and r2 < 0.2:
                return 1001.0
            ss = (d - self.ad) / (d + self.ad)
            q = self.rr / ss
            ss = max(0.1, ss)
            q = min(max(0.1, q), 10.0)
            z0 = (d - self.ad) * (d + self.ad) * th * 0.25 / d
            et = (self.etq * math.exp(-(min(1.7, z0 / 8.0e3) ** 6)) + 1.0) * z0 / 1.7556e3
            ett = max(et, 1.0)
            h0 = (_h0f(r1, ett) + _h0f(r2, ett)) * 0.5
            h0 += min(h0, (1.38 - math.log(ett)) * math.log(ss) * math.log(q) * 0.49)
            h0 = _dim(h0, 0.0)
            if et < 1.0:
                h0 = et * h0 + (1.0 - et) * 4.343 * math.log(
                    ((1.0 + 1.4142 / r1) * (1.0 + 1.4142 / r2)) ** 2
                    * (r1 + r2)
                    / (r1 + r2 + 2.8284)
                )
            if h0 > 15.0 and self.h0s >= 0.0:
                h0 = self.h0s
        self.h0s = h0
        th = ref.tha + d * p.gme
        return (
            _ahd(th * d)
            + 4.343 * math.log(47.7 * p.wn * th**4)
            - 0.1 * (p.ens - 301.0) * math.exp(-th * d / 40e3)
            + h0
        )


class _LineOfSight:
    def __init__(self, ref: _Reference) -> None:
        p = ref.path
        self.ref = ref
        self.wls = 0.021 / (0.021 + p.wn * p.dh / max(10e3, ref.dlsa))

    def __call__(self, d: float) -> float:
        ref, p = self.ref, self.ref.path
        q = (1.0 - 0.8 * math.exp(-d / 50e3)) * p.dh
        s = 0.78 * q * math.exp(-((q / 16.0) ** 0.25))
        q = p.he[0] + p.he[1]
        sps = q / math.sqrt(d * d + q * q)
        r = (sps - p.zgnd) / (sps + p.zgnd) * math.exp(-min(10.0, p.wn * s * sps))
        q = abs(r) ** 2
        if q < 0.25 or q < sps:
            r = r * math.sqrt(sps / q)
        alos = ref.emd * d + ref.aed
        q = p.wn * p.he[0] * p.he[1] * 2.0 / d
        if q > 1.57:
            q = 3.14 - 2.4649 / q
        two_ray = abs(complex(math.cos(q), -math.sin(q)) + r) ** 2
        return (-4.343 * math.log(two_ray) - alos) * self.wls + alos


def _fit_reference(path: _Path) -> _Reference:
    """Initialise the lrprop coefficients for every distance at once."""
    dls = [math.sqrt(2.0 * path.he[j] / path.gme) for j in range(2)]
    dlsa = dls[0] + dls[1]
    dla = path.dl[0] + path.dl[1]
    tha = max(path.the[0] + path.the[1], -dla * path.gme)

    kwx = 0
    if path.wn < 0.838 or path.wn > 210.0:
        kwx = max(kwx, 1)
    for j in range(2):
        if path.hg[j] < 1.0 or path.hg[j] > 1000.0:
            kwx = max(kwx, 1)
        if (
            abs(path.the[j]) > 200e-3
            or path.dl[j] < 0.1 * dls[j]
            or path.dl[j] > 3.0 * dls[j]
        ):
            kwx = max(kwx, 3)
    if (
        path.ens < 250.0
        or path.ens > 400.0
        or path.gme < 75e-9
        or path.gme > 250e-9
        or path.zgnd.real <= abs(path.zgnd.imag)
        or path.wn < 0.419
        or path.wn > 420.0
    ):
        kwx = 4
    path.kwx = kwx

    xae = (path.wn * path.gme**2) ** -_THIRD
    ref = _Reference(
        path=path,
        dlsa=dlsa,
        dla=dla,
        tha=tha,
        dmin=abs(path.he[0] - path.he[1]) / 200e-3,
        xae=xae,
    )

    diffraction = _Diffraction(ref)
    d3 = max(dlsa, 1.3787 * xae + dla)
    d4 = d3 + 2.7574 * xae
    a3 = diffraction(d3)
    a4 = diffraction(d4)
    ref.emd = (a4 - a3) / (d4 - d3)
    ref.aed = a3 - ref.emd * d3

    los = _LineOfSight(ref)
    d2 = dlsa
    a2 = ref.aed + d2 * ref.emd
    d0 = 1.908 * path.wn * path.he[0] * path.he[1]
    if ref.aed >= 0.0:
        d0 = min(d0, 0.5 * dla)
        d1 = d0 + 0.25 * (dla - d0)
    else:
        d1 = max(-ref.aed / ref.emd, 0.25 * dla)
    a1 = los(d1)
    fitted = False
    if d0 < d1:
        a0 = los(d0)
        q = math.log(d2 / d0)
        ref.ak2 = max(
            0.0,
            ((d2 - d0) * (a1 - a0) - (d1 - d0) * (a2 - a0))
            / ((d2 - d0) * math.log(d1 / d0) - (d1 - d0) * q),
        )
        fitted = ref.aed >= 0.0 or ref.ak2 > 0.0
        if fitted:
            ref.ak1 = (a2 - a0 - ref.ak2 * q) / (d2 - d0)
            if ref.ak1 < 0.0:
                ref.ak1 = 0.0
                ref.ak2 = _dim(a2, a0) / q
                if ref.ak2 == 0.0:
                    ref.ak1 = ref.emd
    if not fitted:
        ref.ak1 = _dim(a2, a1) / (d2 - d1)
        ref.ak2 = 0.0
        if ref.ak1 == 0.0:
            ref.ak1 = ref.emd
    ref.ael = a2 - ref.ak1 * d2 - ref.ak2 * math.log(d2)

    scatter = _Scatter(ref)
    d5 = dla + 200e3
    d6 = d5 + 200e3
    a6 = scatter(d6)
    a5 = scatter(d5)
    if a5 < 1000.0:
        ref.ems = (a6 - a5) / 200e3
        ref.dx = max(
            dlsa,
            dla + 0.3 * xae * math.log(47.7 * path.wn),
            (a5 - ref.aed - ref.ems * d5) / (ref.emd - ref.ems),
        )
        ref.aes = (ref.emd - ref.ems) * ref.dx + ref.aed
    else:
        ref.ems = ref.emd
        ref.aes = ref.aed
        ref.dx = 10e6
    return ref


def _reference_attenuation(ref: _Reference, dist: float) -> tuple[float, ItmMode]:
    if dist < ref.dlsa:
        aref = ref.ael + ref.ak1 * dist + ref.ak2 * math.log(dist)
        mode = ItmMode.line_of_sight
    elif dist > ref.dx:
        aref = ref.aes + ref.ems * dist
        mode = ItmMode.troposcatter
    else:
        aref = ref.aed + ref.emd * dist
        mode = ItmMode.diffraction
    return max(aref, 0.0), mode


# ── Variability ────────────────────────────────────────────────────────────────

# Climate-indexed coefficient tables (equatorial .. maritime temperate over sea)
_BV1 = (-9.67, -0.62, 1.26, -9.21, -0.62, -0.39, 3.15)
_BV2 = (12.7, 9.19, 15.5, 9.05, 9.19, 2.86, 857.9)
_XV1 = (144.9e3, 228.9e3, 262.6e3, 84.1e3, 228.9e3, 141.7e3, 2222.0e3)
_XV2 = (190.3e3, 205.2e3, 185.2e3, 101.1e3, 205.2e3, 315.9e3, 164.8e3)
_XV3 = (133.8e3, 143.6e3, 99.8e3, 98.6e3, 143.6e3, 167.4e3, 116.3e3)
_BSM1 = (2.13, 2.66, 6.11, 1.98, 2.68, 6.86, 8.51)
_BSM2 = (159.5, 7.67, 6.65, 13.11, 7.16, 10.38, 169.8)
_XSM1 = (762.2e3, 100.4e3, 138.2e3, 139.1e3, 93.7e3, 187.8e3, 609.8e3)
_XSM2 = (123.6e3, 172.5e3, 242.2e3, 132.7e3, 186.8e3, 169.6e3, 119.9e3)
_XSM3 = (94.5e3, 136.4e3, 178.6e3, 193.5e3, 133.5e3, 108.9e3, 106.6e3)
_BSP1 = (2.11, 6.87, 10.08, 3.68, 4.75, 8.58, 8.43)
_BSP2 = (102.3, 15.53, 9.60, 159.3, 8.12, 13.97, 8.19)
_XSP1 = (636.9e3, 138.7e3, 165.3e3, 464.4e3, 93.2e3, 216.0e3, 136.2e3)
_XSP2 = (134.8e3, 143.7e3, 225.7e3, 93.1e3, 135.9e3, 152.0e3, 188.5e3)
_XSP3 = (95.6e3, 98.6e3, 129.7e3, 94.2e3, 113.4e3, 122.7e3, 122.9e3)
_BSD1 = (1.224, 0.801, 1.380, 1.000, 1.224, 1.518, 1.518)
_BZD1 = (1.282, 2.161, 1.282, 20.0, 1.282, 1.282, 1.282)
_BFM1 = (1.0, 1.0, 1.0, 1.0, 0.92, 1.0, 1.0)
_BFM2 = (0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0)
_BFM3 = (0.0, 0.0, 0.0, 0.0, 1.77, 0.0, 0.0)
_BFP1 = (1.0, 0.93, 1.0, 0.93, 0.93, 1.0, 1.0)
_BFP2 = (0.0, 0.31, 0.0, 0.19, 0.31, 0.0, 0.0)
_BFP3 = (0.0, 2.00, 0.0, 1.79, 2.00, 0.0, 0.0)
_RT = 7.8
_RL = 24.0


def _variability(path: _Path, dist: float, aref: float, p: ItmParams) -> float:
    """Quantile of attenuation relative to free space (avar)."""
    k = p.climate.code - 1
    kdv = p.variability.code

    q = math.log(0.133 * path.wn)
    gm = _BFM1[k] + _BFM2[k] / ((_BFM3[k] * q) ** 2 + 1.0)
    gp = _BFP1[k] + _BFP2[k] / ((_BFP3[k] * q) ** 2 + 1.0)

    dexa = (
        math.sqrt(18e6 * path.he[0])
        + math.sqrt(18e6 * path.he[1])
        + (575.7e12 / path.wn) ** _THIRD
    )
    de = 130e3 * dist / dexa if dist < dexa else 130e3 + dist - dexa

    vmd = _curve(_BV1[k], _BV2[k], _XV1[k], _XV2[k], _XV3[k], de)
    sgtm = _curve(_BSM1[k], _BSM2[k], _XSM1[k], _XSM2[k], _XSM3[k], de) * gm
    sgtp = _curve(_BSP1[k], _BSP2[k], _XSP1[k], _XSP2[k], _XSP3[k], de) * gp
    sgtd = sgtp * _BSD1[k]
    tgtd = (sgtp - sgtd) * _BZD1[k]
    q = (1.0 - 0.8 * math.exp(-dist / 50e3)) * path.dh * path.wn
    sgl = 10.0 * q / (q + 13.0)
    vs0 = (5.0 + 3.0 * math.exp(-de / 100e3)) ** 2

    # standard normal deviates of the upper tail: higher percentages mean more loss
    zt = -float(ndtri(p.time_pct / 100.0))
    zl = -float(ndtri(p.location_pct / 100.0))
    zc = -float(ndtri(p.confidence_pct / 100.0))
    if kdv == 0:
        zt = zl = zc
    elif kdv == 1:
        zl = zc
    elif kdv == 2:
        zl = zt

    if zt < 0.0:
        sgt = sgtm
    elif zt <= _BZD1[k]:
        sgt = sgtp
    else:
        sgt = sgtd + tgtd / zt
    vs = vs0 + (sgt * zt) ** 2 / (_RT + zc * zc) + (sgl * zl) ** 2 / (_RL + zc * zc)

    if kdv == 0:
        yr = 0.0
        sgc = math.sqrt(sgt * sgt + sgl * sgl + vs)
    elif kdv == 1:
        yr = sgt * zt
        sgc = math.sqrt(sgl * sgl + vs)
    elif kdv == 2:
        yr = math.sqrt(sgt * sgt + sgl * sgl) * zt
        sgc = math.sqrt(vs)
    else:
        yr = sgt * zt + sgl * zl
        sgc = math.sqrt(vs)

    avar = aref - vmd - yr - sgc * zc
    if avar < 0.0:
        avar = avar * (29.0 - avar) / (29.0 - 10.0 * avar)
    return avar


# ── Public API ─────────────────────────────────────────────────────────────────

def validate_inputs(freq_mhz: float, h_tx: float, h_rx: float, p: ItmParams) -> None:
    """Raise DomainError naming the first parameter outside the ITM validity range."""
    checks = (
        ("freq_mhz", freq_mhz, 20.0, 20000.0),
        ("tx_height_m", h_tx, 0.5, 3000.0),
        ("rx_height_m", h_rx, 0.5, 3000.0),
        ("surface_refractivity", p.surface_refractivity, 250.0, 400.0),
        ("dielectric_constant", p.dielectric_constant, 1.0, 100.0),
        ("conductivity", p.conductivity, 1e-6, 100.0),
        ("terrain_roughness_m", p.terrain_roughness_m, 0.0, 5000.0),
    )
    for name, value, lo, hi in checks:
        if not lo <= value <= hi:
            raise DomainError(f"ITM parameter {name}={value} outside [{lo}, {hi}]")


@lru_cache(maxsize=64)
def _reference_for(freq_mhz: float, h_tx: float, h_rx: float, p: ItmParams) -> _Reference:
    validate_inputs(freq_mhz, h_tx, h_rx, p)
    ref = _fit_reference(_prepare(freq_mhz, h_tx, h_rx, p))
    if ref.path.kwx:
        logger.warning("ITM inputs flagged with warning code %d", ref.path.kwx)
    return ref


def itm_area_prediction(
    d_km: float,
    freq_mhz: float,
    h_tx_m: float,
    h_rx_m: float,
    p: ItmParams,
) -> ItmResult:
    """Area-mode transmission loss between two terminals ``d_km`` apart."""
    if not 1.0 <= d_km <= 2000.0:
        raise DomainError(f"ITM parameter d_km={d_km} outside [1.0, 2000.0]")
    ref = _reference_for(float(freq_mhz), float(h_tx_m), float(h_rx_m), p)
    dist = d_km * 1000.0
    kwx = ref.path.kwx
    if dist > 1000e3:
        kwx = max(kwx, 1)
    if dist < ref.dmin:
        kwx = max(kwx, 3)

    aref, mode = _reference_attenuation(ref, dist)
    free_space = 32.45 + 20.0 * math.log10(freq_mhz) + 20.0 * math.log10(d_km)
    loss = free_space + _variability(ref.path, dist, aref, p)
    return ItmResult(
        loss_db=loss,
        free_space_db=free_space,
        reference_attenuation_db=aref,
        mode=mode,
        warning_code=kwx,
    )
