"""Bundled label knowledge driving the mock backend's rule-based LLM.

A small world model over a fixed vocabulary: which labels are scenes vs
objects, which co-occur (for related-label suggestions), what narrative role
each plays, and how accessory-type labels group into named clusters. Labels
outside the tables fall back to category-based rules.
"""

from __future__ import annotations

# Vocabulary of detectable labels with their tag category.
VOCABULARY: dict[str, str] = {
    "boy": "object", "girl": "object", "woman": "object", "man": "object",
    "dog": "object", "cat": "object",
    "park": "scene", "sky": "scene", "sun": "object", "grass": "object",
    "flower": "object", "tree": "object", "frisbee": "object", "car": "object",
    "skirt": "object", "bank": "object", "house": "object", "building": "object",
    "street": "scene", "road": "scene", "sidewalk": "scene", "bench": "object",
    "swing": "object", "slide": "object", "ball": "object", "kite": "object",
    "umbrella": "object", "hat": "object", "sunglasses": "object",
    "cloud": "object", "moon": "object", "stars": "object",
    "mountain": "scene", "river": "scene", "lake": "scene", "ocean": "scene",
    "beach": "scene", "sand": "object", "boat": "object", "ship": "object",
    "airplane": "object", "helicopter": "object", "train": "object", "bus": "object",
}

# Attribute/action tags the mock emits so downstream filtering has work to do.
DECOY_TAGS: tuple[tuple[str, str], ...] = (
    ("sunny", "attribute"), ("cloudy", "attribute"), ("bright", "attribute"),
    ("running", "action"), ("playing", "action"), ("jumping", "action"),
)

# Labels plausibly accompanying a mentioned label (related-label suggestions).
RELATED: dict[str, tuple[str, ...]] = {
    "boy": ("frisbee", "ball", "sunglasses"),
    "girl": ("ball", "kite", "skirt"),
    "man": ("hat", "sunglasses", "car"),
    "woman": ("umbrella", "hat", "skirt"),
    "dog": ("frisbee", "ball"),
    "cat": ("ball",),
    "park": ("sky", "sun", "cloud", "grass", "tree", "flower"),
    "beach": ("sand", "ocean", "sun", "umbrella", "boat"),
    "ocean": ("boat", "ship", "sand"),
    "lake": ("boat", "tree"),
    "river": ("boat", "tree"),
    "mountain": ("river", "tree", "cloud"),
    "moon": ("stars", "sky"),
    "sky": ("sun", "cloud", "moon", "stars"),
    "street": ("car", "bus", "building", "sidewalk"),
    "house": ("tree", "street"),
    "garden": ("tree", "flower", "grass", "sky"),
}

# Narrative role per label: character | background | accessory.
_CHARACTER_LABELS = ("boy", "girl", "woman", "man", "dog", "cat")
_BACKGROUND_LABELS = ("park", "sky", "street", "road", "sidewalk", "mountain",
                      "river", "lake", "ocean", "beach", "house", "building")
ROLES: dict[str, str] = {}
for _label in VOCABULARY:
    if _label in _CHARACTER_LABELS:
        ROLES[_label] = "character"
    elif _label in _BACKGROUND_LABELS:
        ROLES[_label] = "background"
    else:
        ROLES[_label] = "accessory"

# Named sub-cluster per label; labels with no entry stay directly under the
# category root. Character and background labels intentionally stay flat.
GROUPS: dict[str, str] = {
    "frisbee": "dog toy", "ball": "dog toy",
    "sunglasses": "human belongings", "hat": "human belongings",
    "umbrella": "human belongings", "skirt": "human belongings",
    "sun": "environment", "cloud": "environment",
    "moon": "environment", "stars": "environment",
    "grass": "plant", "tree": "plant", "flower": "plant",
    "car": "vehicle", "bus": "vehicle", "train": "vehicle",
    "boat": "vehicle", "ship": "vehicle", "airplane": "vehicle",
    "helicopter": "vehicle",
    "bench": "furniture", "swing": "playground", "slide": "playground",
}

# Lexicon used by the deterministic classification fallback: labels naming
# living beings default to the character category.
LIVING_BEINGS: frozenset[str] = frozenset({
    "boy", "girl", "woman", "man", "dog", "cat", "person", "people", "child",
    "kid", "baby", "bird", "horse", "cow", "sheep", "fish", "lion", "tiger",
    "bear", "rabbit", "elephant", "monkey", "butterfly", "bee", "athlete",
    "player", "dancer", "sea lion", "duck", "chicken", "fox", "deer",
})
