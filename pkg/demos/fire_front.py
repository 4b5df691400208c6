"""Watch a grass fire run downwind.

Ignites the centre of a uniform grass landscape under a steady westerly and
prints the burned extent upwind and downwind of the origin every hour, then
writes the final perimeter as GeoJSON.

    python demos/fire_front.py [out.geojson]
"""

import json
import sys

import numpy as np

from pyrogrid.fire import FireState, Ignition, apply_ignitions, perimeter_geojson, spread_step
from pyrogrid.landscape import FuelClass, Landscape, WeatherSample


def main(out: str | None = None) -> None:
    n, cell = 201, 50.0
    land = Landscape(np.full((n, n), FuelClass.GRASS), cell)
    weather = WeatherSample(8.0, 270.0, 30.0, 30.0)  # wind from the west
    fire, _, _ = apply_ignitions(FireState.empty(land.shape), [Ignition((n // 2, n // 2), 0.0)], 0.0, land, weather)
    for step in range(6):
        fire = spread_step(fire, land, weather, 30.0)
        burned = np.isfinite(fire.arrival)[n // 2]
        cols = np.flatnonzero(burned)
        if step % 2 == 1 and cols.size:
            print(f"t={(step + 1) * 30:3d} min: upwind {(n // 2 - cols.min()) * cell:5.0f} m, "
                  f"downwind {(cols.max() - n // 2) * cell:5.0f} m, burned cells {np.isfinite(fire.arrival).sum()}")
    if out:
        with open(out, "w") as fh:
            json.dump(perimeter_geojson(fire, land), fh)
        print(f"perimeter written to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
