"""remkit: two-stage radio environment map estimation at desk scale.

A procedural city generator and an analytic pathloss oracle provide ground
truth; a learned image-to-elevation stage feeds a pathloss prediction stage;
evaluation, storage/energy footprint accounting, a CLI, and an HTTP
inference service sit on top.
"""

__version__ = "0.1.0"
