"""Shared test data and samplers."""
import math
import random

from hypcensus.errors import DegenerateTetrahedron
from hypcensus.tetshape import VertexClass, classify_vertices, is_hyperbolic

# the eight two-tetrahedron pairings with a single valence-12 edge, found by
# exhaustive enumeration and frozen here
GENUS_TWO_SIGNATURES = (
    "2090i10131i040019",
    "2090i10131m04001h",
    "2090i101c1a1d0008",
    "2090i1018191i000c",
    "2090i10181a1d000c",
    "21013171j000b0407",
    "21013171g000g0407",
    "21018171g000g0c07",
)
# minimal triangulations with boundary genus 2 plus one torus, genus 2 plus two tori
M21_SIGNATURE = "3090i10202129002d111a1i00"
M22_SIGNATURE = "410181c2000080c30383c3000282c2010"

V_OCTAHEDRON = 3.66386


def sample_tetrahedron(rng: random.Random, regime: str):
    """Random hyperbolic angle tuple whose vertices are all of one kind, or mixed."""
    while True:
        if regime == "ideal":
            # vertex 0 ideal, the rest anything
            a, b = rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)
            c = math.pi - a - b
            if c <= 0.05:
                continue
            angles = [a, b, c] + [rng.uniform(0.05, 2.0) for _ in range(3)]
        else:
            angles = [rng.uniform(0.05, 2.0) for _ in range(6)]
        try:
            if not is_hyperbolic(angles):
                continue
            kinds = set(classify_vertices(angles))
        except DegenerateTetrahedron:
            continue
        if regime == "ultra" and kinds == {VertexClass.ULTRA_IDEAL}:
            return angles
        if regime == "finite" and kinds == {VertexClass.FINITE}:
            return angles
        if regime == "mixed" and len(kinds) > 1:
            return angles
        if regime == "ideal" and VertexClass.IDEAL in kinds:
            return angles


def sample_finite_symmetric(rng: random.Random):
    """Symmetric (A, B, C, A, B, C) tuple with finite vertices and a real tan(theta)."""
    from hypcensus.errors import NotFiniteSymmetric
    from hypcensus.tetshape import symmetric_theta

    while True:
        a, b, c = (rng.uniform(0.3, 1.55) for _ in range(3))
        if a + b + c <= math.pi + 0.05:
            continue
        try:
            symmetric_theta(a, b, c)
        except NotFiniteSymmetric:
            continue
        if is_hyperbolic([a, b, c, a, b, c]):
            return a, b, c
