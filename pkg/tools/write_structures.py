#!/usr/bin/env python3
"""Regenerate the cavity-spec files under structures/ from nucavity.catalog.

Run:  python tools/write_structures.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from nucavity import catalog
from nucavity.stack import serialize_cavity_spec

HEADER = "# generated by tools/write_structures.py; edit catalog.py instead\n"

OUT = pathlib.Path(__file__).resolve().parents[1] / "structures"


def main():
    OUT.mkdir(exist_ok=True)
    files = {
        "single_layer.cavity": catalog.single_layer_cavity(),
        "probe_z02p5.cavity": catalog.probe_layer_cavity(2.5),
        "probe_z07p5.cavity": catalog.probe_layer_cavity(7.5),
        "probe_z12.cavity": catalog.probe_layer_cavity(12.0),
        "probe_z16p5.cavity": catalog.probe_layer_cavity(16.5),
        "two_layer_node_antinode.cavity": catalog.two_layer_cavity("node-antinode"),
        "two_layer_antinode_node.cavity": catalog.two_layer_cavity("antinode-node"),
        "superlattice30.cavity": catalog.superlattice_cavity(),
    }
    for name, stack in files.items():
        path = OUT / name
        path.write_text(HEADER + serialize_cavity_spec(stack))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
