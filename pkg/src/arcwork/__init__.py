"""Arc systems on punctured disks and their dual square complexes."""

from .diskmap import ArcDiagram, ArcRoute, PuncturedDisk, build_diagram, new_disk

__all__ = [
    "ArcDiagram",
    "ArcRoute",
    "PuncturedDisk",
    "build_diagram",
    "new_disk",
]
