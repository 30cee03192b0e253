"""Cavity stack data model and the line-oriented cavity-spec format.

Depth coordinate: z = 0 at the ambient/stack interface, increasing
downward into the stack.  Layers are listed top to bottom; the ambient
(normally vacuum) and the substrate are semi-infinite.

Cavity-spec grammar (UTF-8, one statement per line, '#' starts a comment):

    energy_keV = <real>
    material <name> delta=<real> beta=<real>
    species <name> E0_keV=<real> gamma0_neV=<real> alpha=<real> lines=[(d1,w1),(d2,w2),...]
    layer <material> <thickness_nm> [resonant species=<name> scale=<real>]
    substrate <material>
    ambient <material>          # optional, defaults to vacuum

``energy_keV`` must appear before any material, ``substrate`` is
mandatory, the material ``vacuum`` is predefined, and unknown keys are
rejected.  ``scale`` is the resonant areal density per nm of thickness
(nm^-3); omitting it leaves the layer uncalibrated.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace

import numpy as np

from .materials import Material, NuclearSpecies, VACUUM, wavenumber


class CavitySpecError(ValueError):
    """Malformed cavity-spec document; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ResonantLoading:
    """Resonant doping of a layer: nuclear species plus areal density scale.

    ``area_density_scale`` is the effective number of resonant nuclei per
    nm^3 (per nm of thickness and per unit area); ``None`` marks an
    uncalibrated layer.
    """

    species: NuclearSpecies
    area_density_scale: float | None = None

    def __post_init__(self):
        if self.area_density_scale is not None and self.area_density_scale < 0:
            raise ValueError("area_density_scale must be >= 0")


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness_nm: float
    resonant: ResonantLoading | None = None

    def __post_init__(self):
        if not self.thickness_nm > 0:
            raise ValueError(f"layer {self.material.name!r}: thickness must be positive")


@dataclass(frozen=True)
class CavityStack:
    """Ordered stack of layers between a semi-infinite ambient and substrate."""

    layers: tuple
    substrate: Material
    ambient: Material = VACUUM
    energy_keV: float = 14.413

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a cavity stack needs at least one layer")

    @property
    def k0(self) -> float:
        """Vacuum wavenumber in 1/nm."""
        return wavenumber(self.energy_keV)

    @property
    def boundaries(self):
        """Depths of the layer bottom interfaces, ending at the substrate top."""
        return np.cumsum([lay.thickness_nm for lay in self.layers])

    @property
    def total_thickness(self) -> float:
        return float(self.boundaries[-1])

    def layer_of(self, z: float) -> int:
        """Index of the layer containing depth z, total on [0, total_thickness]."""
        if z < 0 or z > self.total_thickness:
            raise ValueError(f"z={z} outside the stack [0, {self.total_thickness}]")
        idx = int(np.searchsorted(self.boundaries, z, side="right"))
        return min(idx, len(self.layers) - 1)

    def layer_top(self, index: int) -> float:
        """Depth of the top interface of layer ``index``."""
        return 0.0 if index == 0 else float(self.boundaries[index - 1])

    def resonant_layers(self):
        """(index, layer) pairs for layers carrying a nuclear resonance."""
        return [(i, lay) for i, lay in enumerate(self.layers) if lay.resonant is not None]

    def with_scale_factor(self, factor: float, only_layer: int | None = None) -> "CavityStack":
        """Copy with resonant density scales multiplied by ``factor``."""
        new_layers = []
        for i, lay in enumerate(self.layers):
            if lay.resonant is not None and (only_layer is None or i == only_layer):
                if lay.resonant.area_density_scale is None:
                    raise ValueError(f"layer {i} is uncalibrated; set a scale first")
                res = replace(lay.resonant, area_density_scale=lay.resonant.area_density_scale * factor)
                lay = replace(lay, resonant=res)
            new_layers.append(lay)
        return replace(self, layers=tuple(new_layers))

    def content_hash(self) -> str:
        return hashlib.sha256(serialize_cavity_spec(self).encode()).hexdigest()[:12]


_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _parse_kv(tokens, allowed, lineno):
    """Parse key=value tokens, rejecting unknown or repeated keys."""
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise CavitySpecError(f"expected key=value, got {tok!r}", lineno)
        key, _, value = tok.partition("=")
        if key not in allowed:
            raise CavitySpecError(f"unknown key {key!r} (allowed: {sorted(allowed)})", lineno)
        if key in out:
            raise CavitySpecError(f"repeated key {key!r}", lineno)
        out[key] = value
    return out


def _to_float(text, what, lineno):
    try:
        return float(text)
    except ValueError:
        raise CavitySpecError(f"bad {what}: {text!r}", lineno) from None


def _parse_lines_field(text, lineno):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise CavitySpecError("lines= must look like [(d1,w1),(d2,w2),...]", lineno)
    pairs = re.findall(rf"\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)", text[1:-1])
    rebuilt = ",".join(f"({d},{w})" for d, w in pairs)
    if not pairs or re.sub(r"\s+", "", text[1:-1]).rstrip(",") != rebuilt:
        raise CavitySpecError("lines= must look like [(d1,w1),(d2,w2),...]", lineno)
    return tuple((float(d), float(w)) for d, w in pairs)


def parse_cavity_spec(text: str) -> CavityStack:
    """Parse a cavity-spec document into a validated CavityStack."""
    energy = None
    materials = {"vacuum": VACUUM}
    species = {}
    layers = []
    substrate = None
    ambient = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        m = re.fullmatch(rf"energy_keV\s*=\s*({_FLOAT})", line)
        if m:
            if energy is not None:
                raise CavitySpecError("duplicate energy_keV", lineno)
            energy = float(m.group(1))
            if energy <= 0:
                raise CavitySpecError("energy_keV must be positive", lineno)
            continue

        tokens = line.split()
        kind = tokens[0]

        if kind == "material":
            if energy is None:
                raise CavitySpecError("energy_keV must come before material lines", lineno)
            if len(tokens) < 2:
                raise CavitySpecError("material needs a name", lineno)
            name = tokens[1]
            if name in materials and name != "vacuum":
                raise CavitySpecError(f"duplicate material {name!r}", lineno)
            kv = _parse_kv(tokens[2:], {"delta", "beta"}, lineno)
            if set(kv) != {"delta", "beta"}:
                raise CavitySpecError("material needs delta= and beta=", lineno)
            try:
                materials[name] = Material(
                    name,
                    _to_float(kv["delta"], "delta", lineno),
                    _to_float(kv["beta"], "beta", lineno),
                    photon_energy_keV=energy,
                )
            except ValueError as exc:
                raise CavitySpecError(str(exc), lineno) from None

        elif kind == "species":
            if len(tokens) < 2:
                raise CavitySpecError("species needs a name", lineno)
            name = tokens[1]
            if name in species:
                raise CavitySpecError(f"duplicate species {name!r}", lineno)
            kv = _parse_kv(tokens[2:], {"E0_keV", "gamma0_neV", "alpha", "lines"}, lineno)
            missing = {"E0_keV", "gamma0_neV", "alpha", "lines"} - set(kv)
            if missing:
                raise CavitySpecError(f"species missing keys: {sorted(missing)}", lineno)
            try:
                species[name] = NuclearSpecies(
                    name,
                    transition_energy_keV=_to_float(kv["E0_keV"], "E0_keV", lineno),
                    natural_linewidth_neV=_to_float(kv["gamma0_neV"], "gamma0_neV", lineno),
                    internal_conversion_alpha=_to_float(kv["alpha"], "alpha", lineno),
                    transitions=_parse_lines_field(kv["lines"], lineno),
                )
            except ValueError as exc:
                raise CavitySpecError(str(exc), lineno) from None

        elif kind == "layer":
            if len(tokens) < 3:
                raise CavitySpecError("layer needs: layer <material> <thickness_nm>", lineno)
            mat_name = tokens[1]
            if mat_name not in materials:
                raise CavitySpecError(f"unknown material {mat_name!r}", lineno)
            thickness = _to_float(tokens[2], "thickness", lineno)
            resonant = None
            rest = tokens[3:]
            if rest:
                if rest[0] != "resonant":
                    raise CavitySpecError(f"unexpected token {rest[0]!r} after thickness", lineno)
                kv = _parse_kv(rest[1:], {"species", "scale"}, lineno)
                if "species" not in kv:
                    raise CavitySpecError("resonant layer needs species=<name>", lineno)
                if kv["species"] not in species:
                    raise CavitySpecError(f"unknown species {kv['species']!r}", lineno)
                scale = _to_float(kv["scale"], "scale", lineno) if "scale" in kv else None
                try:
                    resonant = ResonantLoading(species[kv["species"]], scale)
                except ValueError as exc:
                    raise CavitySpecError(str(exc), lineno) from None
            try:
                layers.append(Layer(materials[mat_name], thickness, resonant))
            except ValueError as exc:
                raise CavitySpecError(str(exc), lineno) from None

        elif kind == "substrate":
            if len(tokens) != 2:
                raise CavitySpecError("substrate needs exactly one material name", lineno)
            if substrate is not None:
                raise CavitySpecError("duplicate substrate", lineno)
            if tokens[1] not in materials:
                raise CavitySpecError(f"unknown material {tokens[1]!r}", lineno)
            substrate = materials[tokens[1]]

        elif kind == "ambient":
            if len(tokens) != 2:
                raise CavitySpecError("ambient needs exactly one material name", lineno)
            if ambient is not None:
                raise CavitySpecError("duplicate ambient", lineno)
            if tokens[1] not in materials:
                raise CavitySpecError(f"unknown material {tokens[1]!r}", lineno)
            ambient = materials[tokens[1]]

        else:
            raise CavitySpecError(f"unknown statement {kind!r}", lineno)

    if energy is None:
        raise CavitySpecError("missing energy_keV header")
    if not layers:
        raise CavitySpecError("stack has no layers")
    if substrate is None:
        raise CavitySpecError("missing substrate line")
    return CavityStack(tuple(layers), substrate, ambient or VACUUM, energy)


def serialize_cavity_spec(stack: CavityStack) -> str:
    """Render a stack back to the cavity-spec format (round-trip stable)."""
    out = [f"energy_keV = {stack.energy_keV!r}"]

    mats, specs = {}, {}
    for mat in [lay.material for lay in stack.layers] + [stack.substrate, stack.ambient]:
        mats.setdefault(mat.name, mat)
    for lay in stack.layers:
        if lay.resonant is not None:
            specs.setdefault(lay.resonant.species.name, lay.resonant.species)

    for name in sorted(mats):
        if name == "vacuum":
            continue
        mat = mats[name]
        out.append(f"material {name} delta={mat.delta!r} beta={mat.beta!r}")
    for name in sorted(specs):
        sp = specs[name]
        lines = ",".join(f"({d!r},{w!r})" for d, w in sp.transitions)
        out.append(
            f"species {name} E0_keV={sp.transition_energy_keV!r} "
            f"gamma0_neV={sp.natural_linewidth_neV!r} "
            f"alpha={sp.internal_conversion_alpha!r} lines=[{lines}]"
        )
    for lay in stack.layers:
        line = f"layer {lay.material.name} {lay.thickness_nm!r}"
        if lay.resonant is not None:
            line += f" resonant species={lay.resonant.species.name}"
            if lay.resonant.area_density_scale is not None:
                line += f" scale={lay.resonant.area_density_scale!r}"
        out.append(line)
    out.append(f"substrate {stack.substrate.name}")
    if stack.ambient.name != "vacuum":
        out.append(f"ambient {stack.ambient.name}")
    return "\n".join(out) + "\n"
