"""Face-adjacency graph extraction and tensor export for B-rep encoders."""

from .graph import (
    DEFAULT_RESOLUTION,
    FaceGraph,
    GraphEdge,
    adjacency_graph,
    enumerate_faces,
    export_tensors,
    graph_tensors_for_program,
    read_tensors,
    sample_uv_grids,
)

__all__ = [
    "DEFAULT_RESOLUTION",
    "FaceGraph",
    "GraphEdge",
    "adjacency_graph",
    "enumerate_faces",
    "export_tensors",
    "graph_tensors_for_program",
    "read_tensors",
    "sample_uv_grids",
]
