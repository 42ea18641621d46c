"""Word lists shared by the synthetic generator and the heuristic extractor."""

OBJECT_NOUNS = (
    "armchair", "bathtub", "bed", "bench", "bookshelf", "bottle", "cabinet", "candle",
    "chair", "clock", "couch", "cushion", "desk", "door", "dresser", "fireplace",
    "lamp", "mirror", "ottoman", "painting", "pillow", "plant", "radiator", "rug",
    "shelf", "sink", "sofa", "stool", "table", "television", "towel", "vase",
)

ADJECTIVES = (
    "black", "blue", "brass", "brown", "ceramic", "glass", "golden", "green",
    "grey", "leather", "maroon", "orange", "red", "round", "silver", "small",
    "striped", "tall", "white", "wooden", "yellow",
)

ROOMS = (
    "bathroom", "bedroom", "dining room", "hallway", "kitchen", "laundry room",
    "living room", "lounge", "office", "family room", "entryway", "closet",
)

# nouns that appear in instructions but are never targets
PLACE_NOUNS = frozenset(
    "room bathroom bedroom kitchen hallway lounge office closet entryway floor stairs "
    "staircase level house area corridor".split()
)

ORDINALS = ("ground", "first", "second", "third", "fourth", "fifth")
