"""Network embedding models on a small numpy autodiff engine."""
from . import depthlgp, dhne, drne, dvne, sdne
from .graph import Graph, HyperGraph, load_edge_list, load_hyperedge_list

__all__ = ["Graph", "HyperGraph", "depthlgp", "dhne", "drne", "dvne", "load_edge_list",
           "load_hyperedge_list", "sdne"]
