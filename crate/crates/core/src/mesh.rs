//! Structured orthogonal finite-volume meshes in two dimensions.
//!
//! Cells are axis-aligned rectangles on a tensor grid with some cells removed
//! (the region below the step, or the obstacle). Volumes are areas in m² and
//! face "areas" are edge lengths per unit depth.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub volume: f64,
    pub centroid: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    /// Edge normal scaled by edge length, pointing out of `owner`.
    pub area_vector: [f64; 2],
    pub center: [f64; 2],
    pub owner: usize,
    /// `None` on boundary faces.
    pub neighbor: Option<usize>,
    /// Boundary patch index, `None` on internal faces.
    pub patch: Option<usize>,
}

impl Face {
    pub fn area(&self) -> f64 {
        libm::hypot(self.area_vector[0], self.area_vector[1])
    }

    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub name: String,
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    cells: Vec<Cell>,
    faces: Vec<Face>,
    patches: Vec<Patch>,
    cell_faces: Vec<Vec<usize>>,
}

/// Backward-facing step: an upstream channel of height `inlet_height` sitting
/// on top of a step of height `step_height`, opening into a downstream
/// channel of height `inlet_height + step_height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGeometry {
    /// Zero for a downstream block only.
    pub upstream_length: f64,
    pub downstream_length: f64,
    pub inlet_height: f64,
    pub step_height: f64,
    pub nx_upstream: usize,
    pub nx_downstream: usize,
    /// Cells across the inlet height (shared by both blocks).
    pub ny_inlet: usize,
    /// Cells across the step height (downstream block only).
    pub ny_step: usize,
}

impl Default for StepGeometry {
    /// Upstream block [0, 2] x [0.5, 1], downstream block [2, 10] x [0, 1],
    /// 3000 cells.
    fn default() -> Self {
        Self {
            upstream_length: 2.0,
            downstream_length: 8.0,
            inlet_height: 0.5,
            step_height: 0.5,
            nx_upstream: 26,
            nx_downstream: 112,
            ny_inlet: 12,
            ny_step: 12,
        }
    }
}

impl StepGeometry {
    /// The 12 225-cell configuration (49x25 upstream, 220x50 downstream).
    pub fn fine() -> Self {
        Self {
            nx_upstream: 49,
            nx_downstream: 220,
            ny_inlet: 25,
            ny_step: 25,
            ..Self::default()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.nx_upstream * self.ny_inlet + self.nx_downstream * (self.ny_inlet + self.ny_step)
    }

    pub fn area(&self) -> f64 {
        self.upstream_length * self.inlet_height
            + self.downstream_length * (self.inlet_height + self.step_height)
    }
}

/// Rectangular channel with a grid-aligned rectangular obstacle removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleChannelGeometry {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// `[x0, x1, y0, y1]`
    pub obstacle: [f64; 4],
    pub nx: usize,
    pub ny: usize,
}

impl Default for ObstacleChannelGeometry {
    /// `[-4D, 30D] x [-6D, 6D]` with a unit square obstacle at the origin,
    /// 0.5 x 0.25 m cells (3256 cells).
    fn default() -> Self {
        Self {
            x_range: [-4.0, 30.0],
            y_range: [-6.0, 6.0],
            obstacle: [-0.5, 0.5, -0.5, 0.5],
            nx: 68,
            ny: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryConfig {
    Step(StepGeometry),
    ObstacleChannel(ObstacleChannelGeometry),
    /// Plain rectangle `[0, length] x [0, height]` with patches inlet, outlet
    /// and walls.
    Channel {
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
}

impl GeometryConfig {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            GeometryConfig::Step(g) => build_step_mesh(g),
            GeometryConfig::ObstacleChannel(g) => build_obstacle_channel_mesh(g),
            GeometryConfig::Channel {
                length,
                height,
                nx,
                ny,
            } => build_channel_mesh(*length, *height, *nx, *ny),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    West,
    East,
    South,
    North,
}

fn uniform_nodes(start: f64, end: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == n {
                end
            } else {
                start + (end - start) * (k as f64) / (n as f64)
            }
        })
        .collect()
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(alloc::format!("{what} must be positive, got {v}")))
    }
}

fn check_count(what: &str, n: usize) -> Result<()> {
    if n > 0 {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(alloc::format!("{what} must be at least 1")))
    }
}

/// Builds the tensor-product mesh over `xs` x `ys` keeping the cells for which
/// `active(i, j)` holds. Boundary faces are named by `classify`, and patches
/// appear in the order of `patch_names`.
fn build_tensor(
    xs: &[f64],
    ys: &[f64],
    active: impl Fn(usize, usize) -> bool,
    classify: impl Fn(Side, usize, usize) -> &'static str,
    patch_names: &[&str],
) -> Mesh {
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut id = vec![None; nx * ny];
    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if active(i, j) {
                id[j * nx + i] = Some(cells.len());
                let (dx, dy) = (xs[i + 1] - xs[i], ys[j + 1] - ys[j]);
                cells.push(Cell {
                    volume: dx * dy,
                    centroid: [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])],
                });
            }
        }
    }
    let at = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            None
        } else {
            id[j as usize * nx + i as usize]
        }
    };

    let mut faces = Vec::new();
    let mut boundary: Vec<Vec<Face>> = vec![Vec::new(); patch_names.len()];
    for j in 0..ny {
        for i in 0..nx {
            let Some(c) = at(i as isize, j as isize) else {
                continue;
            };
            let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[j], ys[j + 1]);
            let (ii, jj) = (i as isize, j as isize);
            let sides = [
                (Side::West, at(ii - 1, jj), [-(y1 - y0), 0.0], [x0, 0.5 * (y0 + y1)]),
                (Side::East, at(ii + 1, jj), [y1 - y0, 0.0], [x1, 0.5 * (y0 + y1)]),
                (Side::South, at(ii, jj - 1), [0.0, -(x1 - x0)], [0.5 * (x0 + x1), y0]),
                (Side::North, at(ii, jj + 1), [0.0, x1 - x0], [0.5 * (x0 + x1), y1]),
            ];
            for (side, nb, area_vector, center) in sides {
                match nb {
                    Some(n) => {
                        // Internal faces are created once, from the west/south cell.
                        if side == Side::East || side == Side::North {
                            faces.push(Face {
                                area_vector,
                                center,
                                owner: c,
                                neighbor: Some(n),
                                patch: None,
                            });
                        }
                    }
                    None => {
                        let name = classify(side, i, j);
                        let p = patch_names
                            .iter()
                            .position(|n| *n == name)
                            .expect("classifier returns a declared patch");
                        boundary[p].push(Face {
                            area_vector,
                            center,
                            owner: c,
                            neighbor: None,
                            patch: Some(p),
                        });
                    }
                }
            }
        }
    }
    let mut patches = Vec::with_capacity(patch_names.len());
    for (p, list) in boundary.into_iter().enumerate() {
        let start = faces.len();
        faces.extend(list);
        patches.push(Patch {
            name: patch_names[p].to_string(),
            faces: (start..faces.len()).collect(),
        });
    }
    let mut cell_faces = vec![Vec::with_capacity(4); cells.len()];
    for (f, face) in faces.iter().enumerate() {
        cell_faces[face.owner].push(f);
        if let Some(n) = face.neighbor {
            cell_faces[n].push(f);
        }
    }
    Mesh {
        cells,
        faces,
        patches,
        cell_faces,
    }
}

pub fn build_step_mesh(g: &StepGeometry) -> Result<Mesh> {
    check_positive("downstream length", g.downstream_length)?;
    check_positive("inlet height", g.inlet_height)?;
    check_positive("step height", g.step_height)?;
    check_count("downstream x cells", g.nx_downstream)?;
    check_count("inlet y cells", g.ny_inlet)?;
    check_count("step y cells", g.ny_step)?;
    let has_upstream = g.nx_upstream > 0 || g.upstream_length != 0.0;
    if has_upstream {
        check_positive("upstream length", g.upstream_length)?;
        check_count("upstream x cells", g.nx_upstream)?;
    }
    let nxu = if has_upstream { g.nx_upstream } else { 0 };
    let mut xs = if has_upstream {
        uniform_nodes(0.0, g.upstream_length, nxu)
    } else {
        vec![0.0]
    };
    let x_step = if has_upstream { g.upstream_length } else { 0.0 };
    xs.extend(uniform_nodes(x_step, x_step + g.downstream_length, g.nx_downstream).into_iter().skip(1));
    let mut ys = uniform_nodes(0.0, g.step_height, g.ny_step);
    ys.extend(
        uniform_nodes(g.step_height, g.step_height + g.inlet_height, g.ny_inlet)
            .into_iter()
            .skip(1),
    );
    let nys = g.ny_step;
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    Ok(build_tensor(
        &xs,
        &ys,
        |i, j| i >= nxu || j >= nys,
        |side, i, j| match side {
            Side::West if j >= nys && i == 0 => "inlet",
            Side::West => "step",
            Side::East => {
                debug_assert_eq!(i, nx - 1);
                "outlet"
            }
            Side::South => "bottom",
            Side::North => {
                debug_assert_eq!(j, ny - 1);
                "top"
            }
        },
        &["inlet", "outlet", "top", "bottom", "step"],
    ))
}

pub fn build_obstacle_channel_mesh(g: &ObstacleChannelGeometry) -> Result<Mesh> {
    let [xa, xb] = g.x_range;
    let [ya, yb] = g.y_range;
    let [ox0, ox1, oy0, oy1] = g.obstacle;
    check_positive("channel length", xb - xa)?;
    check_positive("channel height", yb - ya)?;
    check_count("x cells", g.nx)?;
    check_count("y cells", g.ny)?;
    if !(xa < ox0 && ox0 < ox1 && ox1 < xb && ya < oy0 && oy0 < oy1 && oy1 < yb) {
        return Err(Error::InvalidGeometry(
            "obstacle must lie strictly inside the channel".to_string(),
        ));
    }
    let dx = (xb - xa) / g.nx as f64;
    let dy = (yb - ya) / g.ny as f64;
    let snap = |v: f64, origin: f64, h: f64, what: &str| -> Result<usize> {
        let k = (v - origin) / h;
        let r = libm::round(k);
        if (k - r).abs() > 1e-9 {
            Err(Error::InvalidGeometry(alloc::format!(
                "obstacle edge {what} = {v} is not on a grid line"
            )))
        } else {
            Ok(r as usize)
        }
    };
    let i0 = snap(ox0, xa, dx, "x0")?;
    let i1 = snap(ox1, xa, dx, "x1")?;
    let j0 = snap(oy0, ya, dy, "y0")?;
    let j1 = snap(oy1, ya, dy, "y1")?;
    let xs = uniform_nodes(xa, xb, g.nx);
    let ys = uniform_nodes(ya, yb, g.ny);
    let (nx, ny) = (g.nx, g.ny);
    let inside = move |i: usize, j: usize| i >= i0 && i < i1 && j >= j0 && j < j1;
    Ok(build_tensor(
        &xs,
        &ys,
        |i, j| !inside(i, j),
        |side, i, j| match side {
            Side::West if i == 0 => "inlet",
            Side::East if i == nx - 1 => "outlet",
            Side::South if j == 0 => "walls",
            Side::North if j == ny - 1 => "walls",
            _ => "obstacle",
        },
        &["inlet", "outlet", "walls", "obstacle"],
    ))
}

pub fn build_channel_mesh(length: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh> {
    check_positive("channel length", length)?;
    check_positive("channel height", height)?;
    check_count("x cells", nx)?;
    check_count("y cells", ny)?;
    let xs = uniform_nodes(0.0, length, nx);
    let ys = uniform_nodes(0.0, height, ny);
    Ok(build_tensor(
        &xs,
        &ys,
        |_, _| true,
        |side, _, _| match side {
            Side::West => "inlet",
            Side::East => "outlet",
            Side::South | Side::North => "walls",
        },
        &["inlet", "outlet", "walls"],
    ))
}

impl Mesh {
    /// Assembles a mesh from explicit parts, checking connectivity.
    pub fn from_parts(cells: Vec<Cell>, faces: Vec<Face>, patches: Vec<Patch>) -> Result<Self> {
        let n = cells.len();
        for (c, cell) in cells.iter().enumerate() {
            if !(cell.volume > 0.0) {
                return Err(Error::NonPositiveVolume {
                    cell: c,
                    volume: cell.volume,
                });
            }
        }
        let mut cell_faces = vec![Vec::new(); n];
        for (f, face) in faces.iter().enumerate() {
            if face.owner >= n {
                return Err(Error::InvalidCell {
                    index: face.owner,
                    n_cells: n,
                });
            }
            cell_faces[face.owner].push(f);
            match (face.neighbor, face.patch) {
                (Some(nb), None) if nb < n => cell_faces[nb].push(f),
                (None, Some(p)) if p < patches.len() => {}
                _ => {
                    return Err(Error::InvalidGeometry(alloc::format!(
                        "face {f} must have exactly one of neighbor/patch"
                    )))
                }
            }
        }
        for (p, patch) in patches.iter().enumerate() {
            for &f in &patch.faces {
                if faces.get(f).and_then(|x| x.patch) != Some(p) {
                    return Err(Error::InvalidGeometry(alloc::format!(
                        "patch `{}` lists face {f} that does not belong to it",
                        patch.name
                    )));
                }
            }
        }
        Ok(Self {
            cells,
            faces,
            patches,
            cell_faces,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_faces[cell]
    }

    pub fn volume(&self, cell: usize) -> f64 {
        self.cells[cell].volume
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.volume).collect()
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    pub fn patch_id(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.name == name)
    }

    pub fn patch(&self, name: &str) -> Result<&Patch> {
        self.patch_id(name)
            .map(|p| &self.patches[p])
            .ok_or_else(|| Error::UnknownPatch(name.to_string()))
    }

    /// Cell on the other side of face `f` as seen from `cell`.
    #[inline]
    pub fn other_cell(&self, f: usize, cell: usize) -> Option<usize> {
        let face = &self.faces[f];
        match face.neighbor {
            Some(n) if face.owner == cell => Some(n),
            Some(_) => Some(face.owner),
            None => None,
        }
    }

    /// Area vector of face `f` pointing out of `cell`.
    #[inline]
    pub fn outward_area(&self, f: usize, cell: usize) -> [f64; 2] {
        let s = self.faces[f].area_vector;
        if self.faces[f].owner == cell {
            s
        } else {
            [-s[0], -s[1]]
        }
    }

    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_faces[cell]
            .iter()
            .filter_map(move |&f| self.other_cell(f, cell))
    }

    pub fn check_cell(&self, cell: usize) -> Result<()> {
        if cell < self.cells.len() {
            Ok(())
        } else {
            Err(Error::InvalidCell {
                index: cell,
                n_cells: self.cells.len(),
            })
        }
    }

    /// Owner cells of every face in the named patches, sorted and deduplicated.
    pub fn patch_owner_cells(&self, names: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for name in names {
            let patch = self.patch(name.as_ref())?;
            set.extend(patch.faces.iter().map(|&f| self.faces[f].owner));
        }
        Ok(set.into_iter().collect())
    }

    /// Largest componentwise magnitude of the summed outward area vectors of
    /// any cell. Zero for closed cells.
    pub fn max_closure_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n_cells() {
            let mut s = [0.0, 0.0];
            for &f in &self.cell_faces[c] {
                let a = self.outward_area(f, c);
                s[0] += a[0];
                s[1] += a[1];
            }
            worst = worst.max(s[0].abs()).max(s[1].abs());
        }
        worst
    }
}

/// Seeds plus every cell within `layers` face-adjacency hops, sorted.
pub fn stencil_closure(mesh: &Mesh, seeds: &[usize], layers: usize) -> Result<Vec<usize>> {
    let n = mesh.n_cells();
    let mut mark = vec![false; n];
    let mut frontier = Vec::with_capacity(seeds.len());
    for &s in seeds {
        mesh.check_cell(s)?;
        if !mark[s] {
            mark[s] = true;
            frontier.push(s);
        }
    }
    let mut out: Vec<usize> = frontier.clone();
    for _ in 0..layers {
        let mut next = Vec::new();
        for &c in &frontier {
            for nb in mesh.neighbors(c) {
                if !mark[nb] {
                    mark[nb] = true;
                    next.push(nb);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend_from_slice(&next);
        frontier = next;
    }
    out.sort_unstable();
    Ok(out)
}

/// Same as [`stencil_closure`] but without the `n_cells`-sized marker array,
/// so the cost depends only on the size of the result.
pub fn local_stencil_closure(mesh: &Mesh, seeds: &[usize], layers: usize) -> Result<Vec<usize>> {
    let mut set = BTreeSet::new();
    for &s in seeds {
        mesh.check_cell(s)?;
        set.insert(s);
    }
    let mut frontier: Vec<usize> = set.iter().copied().collect();
    for _ in 0..layers {
        let mut next = Vec::new();
        for &c in &frontier {
            for nb in mesh.neighbors(c) {
                if set.insert(nb) {
                    next.push(nb);
                }
            }
        }
        frontier = next;
    }
    Ok(set.into_iter().collect())
}
