"""Complex hyperbolic (3,3,n) triangle groups, their limit sets, and the
boundary unipotent morphisms of cusped three-manifold groups into them."""

__version__ = "0.1.0"
