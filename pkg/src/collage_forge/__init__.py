"""collage-forge: story-driven cutout curation for collage composition.

The pipeline has three stages: photo preprocessing into a cutout library,
story-driven selection/clustering into an asset hierarchy, and scored grid
presentation. A scene module tracks the user's composition and exports an
interchange bundle; a REST service and a CLI drive the whole thing.
"""

__version__ = "0.1.0"
