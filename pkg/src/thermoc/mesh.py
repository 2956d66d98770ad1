"""3D mesh topology: coordinates, ports, dimension-order routing.

Routers are numbered x-major: id = x + dims_x * (y + dims_y * z).
Ports 0-5 are the directional links (E, W, N, S, Up, Down), port 6 is the
local core port. Boundary routers simply lack the ports that would leave
the mesh.
"""

from __future__ import annotations

from enum import IntEnum
from typing import List, Tuple

Coord = Tuple[int, int, int]


class Port(IntEnum):
    E = 0      # +x
    W = 1      # -x
    N = 2      # +y
    S = 3      # -y
    UP = 4     # +z
    DOWN = 5   # -z
    LOCAL = 6


PORT_DELTAS = {
    Port.E: (1, 0, 0),
    Port.W: (-1, 0, 0),
    Port.N: (0, 1, 0),
    Port.S: (0, -1, 0),
    Port.UP: (0, 0, 1),
    Port.DOWN: (0, 0, -1),
}

OPPOSITE = {
    Port.E: Port.W,
    Port.W: Port.E,
    Port.N: Port.S,
    Port.S: Port.N,
    Port.UP: Port.DOWN,
    Port.DOWN: Port.UP,
}

DIRECTIONAL_PORTS = (Port.E, Port.W, Port.N, Port.S, Port.UP, Port.DOWN)


def route_dimension_order(current: Coord, destination: Coord) -> Port:
    """Deterministic minimal routing: resolve X offset first, then Y, then Z.

    Returns Port.LOCAL iff current == destination.
    """
    if destination[0] > current[0]:
        return Port.E
    if destination[0] < current[0]:
        return Port.W
    if destination[1] > current[1]:
        return Port.N
    if destination[1] < current[1]:
        return Port.S
    if destination[2] > current[2]:
        return Port.UP
    if destination[2] < current[2]:
        return Port.DOWN
    return Port.LOCAL


def manhattan(a: Coord, b: Coord) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) + abs(a[2] - b[2])


class Mesh:
    """Immutable mesh geometry with precomputed neighbor and port tables."""

    def __init__(self, dims: Tuple[int, int, int]):
        dx, dy, dz = dims
        if dx < 1 or dy < 1 or dz < 1:
            raise ValueError("mesh dims must be positive")
        if dx * dy * dz > 256:
            raise ValueError("mesh size must not exceed 256 routers")
        self.dims = (dx, dy, dz)
        self.n = dx * dy * dz
        self.coords: List[Coord] = [
            (i % dx, (i // dx) % dy, i // (dx * dy)) for i in range(self.n)
        ]
        # neighbor[rid][port] = neighbor id, or -1 when the port is absent
        self.neighbor: List[List[int]] = []
        self.present_ports: List[Tuple[Port, ...]] = []
        for rid in range(self.n):
            x, y, z = self.coords[rid]
            row = [-1] * 6
            present = []
            for port in DIRECTIONAL_PORTS:
                ddx, ddy, ddz = PORT_DELTAS[port]
                nx, ny, nz = x + ddx, y + ddy, z + ddz
                if 0 <= nx < dx and 0 <= ny < dy and 0 <= nz < dz:
                    row[port] = self.id_of((nx, ny, nz))
                    present.append(port)
            self.neighbor.append(row)
            self.present_ports.append(tuple(present))

    def id_of(self, coord: Coord) -> int:
        x, y, z = coord
        return x + self.dims[0] * (y + self.dims[1] * z)

    def route_port(self, current: int, destination: int) -> Port:
        return route_dimension_order(self.coords[current], self.coords[destination])

    def minimal_ports(self, current: int, destination: int) -> List[Port]:
        """All directional ports that reduce the remaining offset (DOR order)."""
        cx, cy, cz = self.coords[current]
        tx, ty, tz = self.coords[destination]
        out = []
        if tx > cx:
            out.append(Port.E)
        elif tx < cx:
            out.append(Port.W)
        if ty > cy:
            out.append(Port.N)
        elif ty < cy:
            out.append(Port.S)
        if tz > cz:
            out.append(Port.UP)
        elif tz < cz:
            out.append(Port.DOWN)
        return out

    def distance(self, a: int, b: int) -> int:
        return manhattan(self.coords[a], self.coords[b])
