"""Builders for the case-study cavity structures.

These are the structures exercised by the test suite and shipped as
cavity-spec files under ``structures/`` (regenerated by
``tools/write_structures.py``).  All use the default optical-constant
table at 14.413 keV.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import argrelextrema

from .fields import field_profile, resonant_angles
from .materials import (
    DEFAULT_SCALE_FE57_METAL,
    DEFAULT_SCALE_FE57_SS,
    FE57,
    FE57_HYPERFINE_33T,
    material,
)
from .stack import CavityStack, Layer, ResonantLoading

# Magnetized 57Fe layers in the two-layer cavity: the field geometry
# drives only the four Delta-m = +-1 hyperfine lines, which carry 2/3 of
# the M1 strength; with line weights normalized to one, that factor
# moves into the effective density scale.
SCALE_FE57_MAGNETIZED = DEFAULT_SCALE_FE57_METAL * 2.0 / 3.0


def single_layer_cavity(scale: float | None = DEFAULT_SCALE_FE57_SS) -> CavityStack:
    """Pt(2.2)/C(16)/57SS(0.6)/C(16)/Pt(13) on Si: one resonant layer at center."""
    Pt, C, SS, Si = material("Pt"), material("C"), material("SS"), material("Si")
    return CavityStack((
        Layer(Pt, 2.2),
        Layer(C, 16.0),
        Layer(SS, 0.6, ResonantLoading(FE57, scale)),
        Layer(C, 16.0),
        Layer(Pt, 13.0),
    ), Si)


def probe_layer_cavity(z0_nm: float, fe_thickness: float = 1.0,
                       scale: float = DEFAULT_SCALE_FE57_METAL) -> CavityStack:
    """Pt(2)/C(40)/Pt(10) on Si with a thin 57Fe layer centered at depth z0.

    ``z0_nm`` is measured from the top of the stack; the guide keeps its
    40 nm of carbon around the iron layer.
    """
    Pt, C, Fe, Si = material("Pt"), material("C"), material("Fe"), material("Si")
    c_above = z0_nm - fe_thickness / 2.0 - 2.0
    c_below = 40.0 - c_above
    if c_above < 0 or c_below < 0:
        raise ValueError(f"z0={z0_nm} nm places the layer outside the guide")
    layers = [Layer(Pt, 2.0)]
    if c_above > 0:
        layers.append(Layer(C, c_above))
    layers.append(Layer(Fe, fe_thickness, ResonantLoading(FE57, scale)))
    if c_below > 0:
        layers.append(Layer(C, c_below))
    layers.append(Layer(Pt, 10.0))
    return CavityStack(tuple(layers), Si)


def _standing_wave_extrema(stack: CavityStack, phi: float):
    """Depths of intensity nodes and antinodes of p(z) inside the guide."""
    prof = field_profile(stack, phi)
    top = stack.layers[0].thickness_nm + 0.2
    bottom = stack.total_thickness - stack.layers[-1].thickness_nm - 0.2
    zs = np.linspace(top, bottom, 6001)
    intensity = np.abs(prof.p(zs)) ** 2
    nodes = [float(zs[i]) for i in argrelextrema(intensity, np.less)[0]]
    antinodes = [float(zs[i]) for i in argrelextrema(intensity, np.greater)[0]]
    return nodes, antinodes


def _third_mode(stack: CavityStack) -> float:
    res = resonant_angles(stack, phi_range=(1e-3, 6e-3), count=3)
    if not res.found_all:
        raise RuntimeError("could not locate three guided modes")
    return res.angles[2]


def _two_layer_stack(z1_center: float, z2_center: float, fe_thickness: float,
                     scale: float, species) -> CavityStack:
    Pt, C, Fe, Si = material("Pt"), material("C"), material("Fe"), material("Si")
    load = ResonantLoading(species, scale)
    c1 = z1_center - fe_thickness / 2.0 - 3.0
    c2 = (z2_center - fe_thickness / 2.0) - (z1_center + fe_thickness / 2.0)
    c3 = 38.0 - c1 - c2
    if min(c1, c2, c3) <= 0:
        raise ValueError("layer centers do not fit in the guide")
    return CavityStack((
        Layer(Pt, 3.0),
        Layer(C, c1),
        Layer(Fe, fe_thickness, load),
        Layer(C, c2),
        Layer(Fe, fe_thickness, load),
        Layer(C, c3),
        Layer(Pt, 10.0),
    ), Si)


def two_layer_positions(order: str = "node-antinode",
                        fe_thickness: float = 2.0,
                        scale: float = SCALE_FE57_MAGNETIZED):
    """Node/antinode centers for the two-layer cavity at its third mode.

    The node-antinode pair is found self-consistently (damped fixed
    point), because the embedded iron layers themselves reshape the
    standing wave.  The inverted structure keeps the same quarter-wave
    ladder: first layer on the antinode, second one ladder step deeper.
    """
    if order not in ("node-antinode", "antinode-node"):
        raise ValueError("order must be 'node-antinode' or 'antinode-node'")
    Pt, C, Si = material("Pt"), material("C"), material("Si")
    bare = CavityStack((Layer(Pt, 3.0), Layer(C, 38.0), Layer(Pt, 10.0)), Si)
    nodes, antis = _standing_wave_extrema(bare, _third_mode(bare))
    z_n = nodes[0]
    z_a = min(a for a in antis if a > z_n)

    for _ in range(12):
        trial = _two_layer_stack(z_n, z_a, fe_thickness, scale, FE57)
        phi3 = _third_mode(trial)
        nodes, antis = _standing_wave_extrema(trial, phi3)
        t_n = min(nodes, key=lambda z: abs(z - z_n))
        t_a = min((a for a in antis if a > t_n), key=lambda z: abs(z - z_a))
        z_n += 0.5 * (t_n - z_n)
        z_a += 0.5 * (t_a - z_a)
    z_n, z_a = round(z_n, 3), round(z_a, 3)
    if order == "node-antinode":
        return z_n, z_a
    return z_a, round(2 * z_a - z_n, 3)


def two_layer_cavity(order: str = "node-antinode",
                     fe_thickness: float = 2.0,
                     scale: float = SCALE_FE57_MAGNETIZED,
                     species=FE57_HYPERFINE_33T,
                     positions: tuple | None = None) -> CavityStack:
    """Pt(3)/C(38)/Pt(10) with two 2-nm 57Fe layers at node/antinode depths.

    The 'node-antinode' order interferes into a transparency dip at each
    line center; 'antinode-node' leaves a single broad line.
    """
    if positions is None:
        positions = two_layer_positions(order, fe_thickness, scale)
    return _two_layer_stack(positions[0], positions[1], fe_thickness, scale, species)


def superlattice_cavity(n_bilayers: int = 30,
                        scale: float = DEFAULT_SCALE_FE57_METAL) -> CavityStack:
    """n x (1.12 nm 57Fe / 1.64 nm 56Fe) on Si, probed near 15-17 mrad.

    Electronically homogeneous iron; only the 57Fe sublayers scatter
    resonantly, forming a purely nuclear periodic reflector.
    """
    Fe, Si = material("Fe"), material("Si")
    load = ResonantLoading(FE57, scale)
    layers = []
    for _ in range(n_bilayers):
        layers.append(Layer(Fe, 1.12, load))
        layers.append(Layer(Fe, 1.64))
    return CavityStack(tuple(layers), Si)
