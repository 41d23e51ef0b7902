"""Bundled example graphs."""

from importlib import resources

from .graph import Admg, parse_graph

FIGURES = ("bow", "fig1a", "fig2", "fig3a", "fig4a", "fig4b", "fig5a", "fig5a_bi")


def figure_text(name: str) -> str:
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    return resources.files("ettid").joinpath("data", "figures", f"{name}.graph").read_text()


def load_figure(name: str) -> Admg:
    return parse_graph(figure_text(name))
