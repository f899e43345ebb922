"""Convex geometry, contact generation and the impulse solver."""

from .hull import Collider, ConvexHull, SphereCollider, mass_properties, quickhull
from .narrowphase import ContactManifold, detect_contacts
from .solver import (
    CollisionEvent, PhysicsEngine, RigidBody, SolverConfig, apply_impulse,
)

__all__ = [
    "Collider", "ConvexHull", "SphereCollider", "mass_properties", "quickhull",
    "ContactManifold", "detect_contacts",
    "CollisionEvent", "PhysicsEngine", "RigidBody", "SolverConfig", "apply_impulse",
]
