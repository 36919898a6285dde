"""Grid-based nodal domain counting on the sphere and on planar disks"""

import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation
from scipy.special import roots_legendre

from app.services.basis import to_unit_vectors
from app.services.ensemble import PatchSpec, RandomField, patch_to_sphere
from app.utils.config import settings
from app.utils.errors import ConfigurationError, ResourceError
from app.utils.seeding import generator

logger = logging.getLogger(__name__)

# Oversample below which a census refuses to run unless explicitly overridden
CENSUS_MIN_OVERSAMPLE = 8

# Bytes per sphere-grid cell: value, sign mask, two label planes
_BYTES_PER_CELL = 8 + 1 + 2 * 4


class NodalCensus(BaseModel):
    """Counts and per-component statistics of one realization"""

    count_total: int = Field(..., description="Number of nodal domains")
    count_positive: int = Field(..., description="Domains where the field is positive")
    count_negative: int = Field(..., description="Domains where the field is negative")
    count_contained: Optional[int] = Field(None, description="Patch mode: domains not touching the boundary ring")
    length_estimate: Optional[float] = Field(None, description="Sphere mode: Crofton nodal length")
    zero_ties: int = Field(0, description="Grid values with |f| below tolerance, assigned positive")
    component_cells: List[int] = Field(default_factory=list)
    component_signs: List[int] = Field(default_factory=list)
    component_inner_radius: List[float] = Field(default_factory=list, description="Geodesic max distance to the nodal set")


def sign_mask(values: np.ndarray) -> Tuple[np.ndarray, int]:
    """Positive mask with |f| < tolerance counted positive, and the tie count"""
    ties = np.abs(values) < settings.ZERO_TOLERANCE
    return (values > 0) | ties, int(np.count_nonzero(ties))


class SphereGrid:
    """
    Equirectangular grid with collapsed poles

    Rows theta_i = i pi / N for i = 0..N with N = q n; rows 0 and N are single
    pole vertices adjacent to every cell of the neighbouring row. Columns
    phi_j = j pi / N for j = 0..2N-1 wrap around. Spacing at the equator is
    pi / (q n) in both directions.
    """

    def __init__(self, n: int, q: int):
        self.degree = int(n)
        self.oversample = int(q)
        self.intervals = max(q * n, 4)
        self.n_theta = self.intervals + 1
        self.n_phi = 2 * self.intervals
        self.theta = np.linspace(0.0, np.pi, self.n_theta)
        self.phi = np.arange(self.n_phi) * (np.pi / self.intervals)
        self.spacing = np.pi / self.intervals

    @property
    def cells(self) -> int:
        return (self.n_theta - 2) * self.n_phi + 2

    @property
    def memory_bytes(self) -> int:
        return self.n_theta * self.n_phi * _BYTES_PER_CELL

    def interior_unit_vectors(self) -> np.ndarray:
        theta, phi = np.meshgrid(self.theta[1:-1], self.phi, indexing="ij")
        return to_unit_vectors(theta, phi)


def build_sphere_grid(n: int, q: int = None, max_cells: int = None) -> SphereGrid:
    """Sphere grid with q samples per nodal half-wavelength pi/n"""
    q = settings.DEFAULT_OVERSAMPLE if q is None else int(q)
    max_cells = settings.MAX_GRID_CELLS if max_cells is None else max_cells
    if q < settings.MIN_OVERSAMPLE:
        raise ConfigurationError(f"oversample q={q} is below {settings.MIN_OVERSAMPLE}")
    if n < 1:
        raise ConfigurationError(f"grid degree must be >= 1, got {n}")
    grid = SphereGrid(n, q)
    if grid.cells > max_cells:
        raise ResourceError(f"sphere grid of {grid.cells} cells exceeds the budget of {max_cells}")
    logger.debug(f"Sphere grid {grid.n_theta}x{grid.n_phi} for n={n}, q={q}, ~{grid.memory_bytes / 1e6:.1f} MB")
    return grid


def _check_resolution(effective_oversample: float, allow_coarse: bool, what: str) -> None:
    if effective_oversample + 1e-9 < CENSUS_MIN_OVERSAMPLE and not allow_coarse:
        raise ConfigurationError(
            f"{what} resolution {effective_oversample:.2f} samples per half-wavelength is below "
            f"{CENSUS_MIN_OVERSAMPLE}; pass allow_coarse to override"
        )


def _label_sphere(positive: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int, np.ndarray]:
    """
    Components of a sign pattern on a SphereGrid value layout

    Returns:
        interior node labels (rows 1..N-1), pole node ids (north, south),
        number of components, component id per node
    """
    interior = positive[1:-1]
    pos_labels, n_pos = ndimage.label(interior)
    neg_labels, n_neg = ndimage.label(~interior)
    labels = np.where(interior, pos_labels - 1, neg_labels - 1 + n_pos)
    north, south = n_pos + n_neg, n_pos + n_neg + 1
    n_nodes = n_pos + n_neg + 2

    edges = []
    # Longitude seam
    seam = interior[:, 0] == interior[:, -1]
    edges.append(np.stack([labels[seam, 0], labels[seam, -1]], axis=1))
    # Polar vertices join every same-sign cell of the adjacent row
    for pole, pole_sign, row in ((north, positive[0, 0], 0), (south, positive[-1, 0], -1)):
        same = interior[row] == pole_sign
        edges.append(np.stack([np.full(np.count_nonzero(same), pole), labels[row, same]], axis=1))

    pairs = np.concatenate(edges, axis=0) if edges else np.empty((0, 2), dtype=int)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_nodes, n_nodes))
    n_components, component_of = connected_components(graph, directed=False)
    return labels, np.array([north, south]), n_components, component_of


def _inner_radii_sphere(grid: SphereGrid, positive: np.ndarray, cell_component: np.ndarray,
                        pole_component: np.ndarray, n_components: int) -> np.ndarray:
    """
    Per-component max geodesic distance from a cell to the nodal set

    The nodal set is represented by midpoints of every 4-neighbour pair of
    opposite sign; distances come from a KD-tree on unit vectors.
    """
    interior = positive[1:-1]
    xyz = grid.interior_unit_vectors()
    north = np.array([0.0, 0.0, 1.0])
    south = np.array([0.0, 0.0, -1.0])

    mids = []
    across = interior != np.roll(interior, -1, axis=1)
    mids.append((xyz + np.roll(xyz, -1, axis=1))[across])
    down = interior[:-1] != interior[1:]
    mids.append((xyz[:-1] + xyz[1:])[down])
    mids.append((xyz[0] + north)[interior[0] != positive[0, 0]])
    mids.append((xyz[-1] + south)[interior[-1] != positive[-1, 0]])
    mids = np.concatenate(mids, axis=0)

    radii = np.zeros(n_components)
    if mids.shape[0] == 0:
        radii[:] = np.pi
        return radii
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    tree = cKDTree(mids)

    points = np.concatenate([xyz.reshape(-1, 3), north[None], south[None]], axis=0)
    components = np.concatenate([cell_component.ravel(), pole_component])
    chord, _ = tree.query(points)
    geodesic = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    np.maximum.at(radii, components, geodesic)
    return radii


def census_global(
    field: RandomField,
    grid: SphereGrid,
    allow_coarse: bool = False,
    with_geometry: bool = False,
    length_circles: int = 0,
    seed: int = 0,
) -> NodalCensus:
    """
    Count the nodal domains of f on the whole sphere

    Args:
        field: the realization
        grid: sphere grid; must resolve the field's degree at q >= 8
        allow_coarse: skip the resolution guard
        with_geometry: also compute per-component inner-radius proxies
        length_circles: if positive, attach a Crofton length estimate
        seed: seed for the Crofton circles
    """
    _check_resolution(grid.intervals / field.degree, allow_coarse, "sphere grid")

    values = field.on_grid(grid.theta, grid.phi)
    # Collapse the pole rows to one value each
    values[0, :] = values[0, 0]
    values[-1, :] = values[-1, 0]
    positive, ties = sign_mask(values)

    labels, poles, n_components, component_of = _label_sphere(positive)
    cell_component = component_of[labels]
    pole_component = component_of[poles]

    cells = np.bincount(cell_component.ravel(), minlength=n_components)
    cells[pole_component] += 1

    signs = np.empty(n_components, dtype=int)
    signs[cell_component.ravel()] = np.where(positive[1:-1].ravel(), 1, -1)
    signs[pole_component] = np.where(positive[[0, -1], 0], 1, -1)

    census = NodalCensus(
        count_total=int(n_components),
        count_positive=int(np.count_nonzero(signs > 0)),
        count_negative=int(np.count_nonzero(signs < 0)),
        zero_ties=ties,
        component_cells=cells.tolist(),
        component_signs=signs.tolist(),
    )
    if with_geometry:
        radii = _inner_radii_sphere(grid, positive, cell_component, pole_component, n_components)
        census.component_inner_radius = radii.tolist()
    if length_circles:
        census.length_estimate = nodal_length_crofton(field, length_circles, seed, q=grid.oversample)
    if ties:
        logger.debug(f"census_global: {ties} grid values within tolerance of zero counted positive")
    return census


class PatchGrid:
    """
    m x m lattice over [-W, W]^2 with the disk |y| <= W as mask

    The boundary ring is the set of masked cells with a 4-neighbour outside
    the mask. Spacing is at most pi / (q k) for a field of wavenumber k,
    matching the sphere grid density.
    """

    def __init__(self, half_width: float, wavenumber: float, q: int):
        self.half_width = float(half_width)
        self.wavenumber = float(wavenumber)
        self.oversample = int(q)
        self.size = int(math.ceil(2.0 * self.half_width * q * self.wavenumber / math.pi)) + 1
        self.size = max(self.size, 5)
        self.coords = np.linspace(-self.half_width, self.half_width, self.size)
        self.spacing = float(self.coords[1] - self.coords[0])
        yy1, yy2 = np.meshgrid(self.coords, self.coords, indexing="ij")
        self.points = np.stack([yy1, yy2], axis=-1)
        self.mask = yy1 ** 2 + yy2 ** 2 <= self.half_width ** 2 * (1.0 + 1e-12)

        padded = np.pad(self.mask, 1, constant_values=False)
        outside_neighbour = (
            ~padded[:-2, 1:-1] | ~padded[2:, 1:-1] | ~padded[1:-1, :-2] | ~padded[1:-1, 2:]
        )
        self.ring = self.mask & outside_neighbour

    @property
    def oversample_achieved(self) -> float:
        """Samples per nodal half-wavelength pi / k"""
        return math.pi / (self.wavenumber * self.spacing)


def build_patch_grid(R: float, q: int = None, half_width: float = 1.0) -> PatchGrid:
    """Lattice for a patch F_x of wavenumber about R"""
    q = settings.DEFAULT_OVERSAMPLE if q is None else int(q)
    if q < settings.MIN_OVERSAMPLE:
        raise ConfigurationError(f"oversample q={q} is below {settings.MIN_OVERSAMPLE}")
    return PatchGrid(half_width, R, q)


def label_disk(values: np.ndarray, grid: PatchGrid) -> NodalCensus:
    """Components of {f != 0} inside the disk mask, and those avoiding the ring"""
    positive, ties = sign_mask(values)
    counts = {}
    touching = 0
    cells, signs = [], []
    for sign, region in ((1, positive & grid.mask), (-1, ~positive & grid.mask)):
        labels, count = ndimage.label(region)
        counts[sign] = count
        touching += np.unique(labels[grid.ring & region]).size
        cells.extend(np.bincount(labels.ravel(), minlength=count + 1)[1:].tolist())
        signs.extend([sign] * count)
    total = counts[1] + counts[-1]
    return NodalCensus(
        count_total=total,
        count_positive=counts[1],
        count_negative=counts[-1],
        count_contained=total - touching,
        zero_ties=ties,
        component_cells=cells,
        component_signs=signs,
    )


def census_patch(field: RandomField, spec: PatchSpec, grid: PatchGrid, allow_coarse: bool = False) -> NodalCensus:
    """Nodal domains of F_x fully contained in the unit disk"""
    if spec.degree != field.degree:
        raise ConfigurationError(f"patch degree {spec.degree} differs from field degree {field.degree}")
    _check_resolution(math.pi / (spec.scale_R * grid.spacing), allow_coarse, "patch grid")

    values = np.zeros(grid.mask.shape)
    theta, phi = patch_to_sphere(spec, grid.points[grid.mask])
    values[grid.mask] = field(theta, phi)
    return label_disk(values, grid)


def census_planar(field: Callable[[np.ndarray, np.ndarray], np.ndarray], R: float, q: int = None,
                  allow_coarse: bool = False) -> NodalCensus:
    """Census of a wavenumber-1 planar field on the disk of radius R"""
    q = settings.DEFAULT_OVERSAMPLE if q is None else int(q)
    grid = PatchGrid(R, 1.0, q)
    _check_resolution(grid.oversample_achieved, allow_coarse, "planar grid")
    values = np.zeros(grid.mask.shape)
    pts = grid.points[grid.mask]
    values[grid.mask] = field(pts[:, 0], pts[:, 1])
    return label_disk(values, grid)


def great_circle_normals(count: int, rng: np.random.Generator) -> np.ndarray:
    """Randomly rotated spherical Fibonacci lattice; each normal is marginally uniform"""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    golden = math.pi * (3.0 - math.sqrt(5.0))
    azimuth = golden * np.arange(count)
    r = np.sqrt(1.0 - z ** 2)
    lattice = np.stack([r * np.cos(azimuth), r * np.sin(azimuth), z], axis=1)
    rotation = Rotation.from_quat(rng.standard_normal(4))
    return rotation.apply(lattice)


def nodal_length_crofton(field: RandomField, n_circles: int, seed: int, q: int = None) -> float:
    """
    Crofton estimate of the nodal length

    A great circle meets a curve of length L on average L / pi times, so the
    estimate is pi times the mean number of sign changes along the circles.
    Each circle is sampled at 2 q n points.
    """
    q = settings.DEFAULT_OVERSAMPLE if q is None else int(q)
    if n_circles < 100:
        raise ConfigurationError(f"Crofton estimator needs at least 100 circles, got {n_circles}")
    rng = generator(seed)
    normals = great_circle_normals(n_circles, rng)

    helper = np.where(np.abs(normals[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    u = np.cross(helper, normals)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    w = np.cross(normals, u)

    samples = max(2 * q * field.degree, 16)
    t = 2.0 * math.pi * np.arange(samples) / samples
    points = np.cos(t)[None, :, None] * u[:, None, :] + np.sin(t)[None, :, None] * w[:, None, :]
    theta = np.arccos(np.clip(points[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(points[..., 1], points[..., 0]), 2 * math.pi)

    values = field(theta.ravel(), phi.ravel()).reshape(n_circles, samples)
    positive, _ = sign_mask(values)
    crossings = np.count_nonzero(positive != np.roll(positive, 1, axis=1), axis=1)
    return float(math.pi * crossings.mean())


def zonal_zero_angles(n: int) -> np.ndarray:
    """Colatitudes of the n zeros of P_n(cos theta), increasing"""
    nodes, _ = roots_legendre(n)
    return np.sort(np.arccos(nodes))


def zonal_nodal_length(n: int) -> float:
    """Exact nodal length of P_n(cos theta): one latitude circle per zero"""
    return float(np.sum(2.0 * math.pi * np.sin(zonal_zero_angles(n))))
