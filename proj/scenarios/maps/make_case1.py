"""Writes the two-corner map used by case1.json as an ASCII raster.

First line is the highest y row; '#' marks occupied cells. Resolution 0.1 m,
origin (0, 0).
"""
import sys

RES = 0.1
WIDTH, HEIGHT = 40.0, 30.0
# Axis-aligned walls (x0, y0, x1, y1) in metres.
WALLS = [
    (0.0, 9.6, 26.0, 10.4),
    (14.0, 19.6, 40.0, 20.4),
]


def occupied(x, y):
    return any(x0 <= x <= x1 and y0 <= y <= y1 for x0, y0, x1, y1 in WALLS)


def main(path):
    nx, ny = round(WIDTH / RES), round(HEIGHT / RES)
    rows = []
    for j in reversed(range(ny)):
        y = (j + 0.5) * RES
        rows.append("".join("#" if occupied((i + 0.5) * RES, y) else "." for i in range(nx)))
    with open(path, "w") as f:
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "case1_map.txt")
