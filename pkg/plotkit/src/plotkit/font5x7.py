"""5x7 bitmap font for axis labels and legends.

Each glyph is seven row bitmasks, bit 4 the leftmost column. Uppercase
letters, digits, and the punctuation the figure labels need; text drawing is
bounds-clipped so labels near an edge degrade instead of raising.
"""

import numpy as np

__all__ = ["GLYPHS", "draw_text", "text_width"]

GLYPHS: dict[str, tuple[int, ...]] = {
    " ": (0, 0, 0, 0, 0, 0, 0),
    "A": (14, 17, 17, 31, 17, 17, 17),
    "B": (30, 17, 17, 30, 17, 17, 30),
    "C": (14, 17, 16, 16, 16, 17, 14),
    "D": (30, 17, 17, 17, 17, 17, 30),
    "E": (31, 16, 16, 30, 16, 16, 31),
    "F": (31, 16, 16, 30, 16, 16, 16),
    "G": (14, 17, 16, 23, 17, 17, 15),
    "H": (17, 17, 17, 31, 17, 17, 17),
    "I": (14, 4, 4, 4, 4, 4, 14),
    "J": (7, 2, 2, 2, 2, 18, 12),
    "K": (17, 18, 20, 24, 20, 18, 17),
    "L": (16, 16, 16, 16, 16, 16, 31),
    "M": (17, 27, 21, 21, 17, 17, 17),
    "N": (17, 25, 21, 19, 17, 17, 17),
    "O": (14, 17, 17, 17, 17, 17, 14),
    "P": (30, 17, 17, 30, 16, 16, 16),
    "Q": (14, 17, 17, 17, 21, 18, 13),
    "R": (30, 17, 17, 30, 20, 18, 17),
    "S": (15, 16, 16, 14, 1, 1, 30),
    "T": (31, 4, 4, 4, 4, 4, 4),
    "U": (17, 17, 17, 17, 17, 17, 14),
    "V": (17, 17, 17, 17, 17, 10, 4),
    "W": (17, 17, 17, 21, 21, 21, 10),
    "X": (17, 17, 10, 4, 10, 17, 17),
    "Y": (17, 17, 10, 4, 4, 4, 4),
    "Z": (31, 1, 2, 4, 8, 16, 31),
    "0": (14, 17, 19, 21, 25, 17, 14),
    "1": (4, 12, 4, 4, 4, 4, 14),
    "2": (14, 17, 1, 2, 4, 8, 31),
    "3": (31, 2, 4, 2, 1, 17, 14),
    "4": (2, 6, 10, 18, 31, 2, 2),
    "5": (31, 16, 30, 1, 1, 17, 14),
    "6": (6, 8, 16, 30, 17, 17, 14),
    "7": (31, 1, 2, 4, 8, 8, 8),
    "8": (14, 17, 17, 14, 17, 17, 14),
    "9": (14, 17, 17, 15, 1, 2, 12),
    ".": (0, 0, 0, 0, 0, 12, 12),
    ",": (0, 0, 0, 0, 12, 4, 8),
    "-": (0, 0, 0, 31, 0, 0, 0),
    "+": (0, 4, 4, 31, 4, 4, 0),
    "=": (0, 0, 31, 0, 31, 0, 0),
    "^": (4, 10, 17, 0, 0, 0, 0),
    "/": (1, 1, 2, 4, 8, 16, 16),
    "(": (2, 4, 8, 8, 8, 4, 2),
    ")": (8, 4, 2, 2, 2, 4, 8),
    "_": (0, 0, 0, 0, 0, 0, 31),
    "|": (4, 4, 4, 4, 4, 4, 4),
    ":": (0, 12, 12, 0, 12, 12, 0),
}

GLYPH_W = 5
GLYPH_H = 7
ADVANCE = 6


def text_width(text: str) -> int:
    """Pixel width of text at scale 1 (glyph plus one column of spacing)."""
    return ADVANCE * len(text) - 1 if text else 0


def draw_text(canvas: np.ndarray, x: int, y: int, text: str, color) -> None:
    """Stamp text onto an (h, w, 3) canvas, top-left at (x, y), clipping at edges."""
    h, w = canvas.shape[:2]
    col = np.asarray(color, dtype=np.uint8)
    cx = x
    for ch in text.upper():
        rows = GLYPHS.get(ch)
        if rows is None:
            rows = GLYPHS["."]
        for ry, bits in enumerate(rows):
            py = y + ry
            if py < 0 or py >= h:
                continue
            for rx in range(GLYPH_W):
                if bits & (1 << (GLYPH_W - 1 - rx)):
                    px = cx + rx
                    if 0 <= px < w:
                        canvas[py, px] = col
        cx += ADVANCE
