//! Row-wise finite-volume assembly.
//!
//! Every assembler builds each requested row with the same per-cell routine,
//! whether all rows or a subset are requested, so restricted rows are bitwise
//! identical to the corresponding rows of the full operator. The cost of a
//! restricted assembly depends only on the faces of the requested cells.

use alloc::vec;
use alloc::vec::Vec;

use super::bc::{Bc, FieldBcs};
use super::field::{CellData, Field, LocalField};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;

/// Which rows (degrees of freedom) to assemble.
///
/// Vector fields are component-blocked, so DOF `d` is component
/// `d / n_cells` of cell `d % n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub enum RowSubset {
    All,
    Rows(Vec<usize>),
}

impl RowSubset {
    /// Explicit DOF list; sorted and deduplicated here.
    pub fn rows(mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        RowSubset::Rows(rows)
    }

    /// Every component of each listed cell.
    pub fn cells(cells: &[usize], components: usize, n_cells: usize) -> Self {
        let mut rows = Vec::with_capacity(cells.len() * components);
        for c in 0..components {
            rows.extend(cells.iter().map(|&cell| c * n_cells + cell));
        }
        Self::rows(rows)
    }

    fn resolve(&self, n_dofs: usize) -> Result<Vec<usize>> {
        match self {
            RowSubset::All => Ok((0..n_dofs).collect()),
            RowSubset::Rows(rows) => {
                if let Some(&bad) = rows.iter().find(|&&r| r >= n_dofs) {
                    return Err(Error::IndexOutOfRange {
                        row: bad,
                        col: 0,
                        n_rows: n_dofs,
                        n_cols: n_dofs,
                    });
                }
                Ok(rows.clone())
            }
        }
    }
}

/// Assembled rows `A[rows, :]` and `b[rows]`. For a full assembly `rows` is
/// `0..n` and `a` is square.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub rows: Vec<usize>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// Faces visited while building the rows.
    pub face_visits: u64,
}

impl LinearSystem {
    pub fn is_full(&self) -> bool {
        self.a.n_rows() == self.a.n_cols() && self.rows.len() == self.a.n_rows()
    }

    /// Coefficient of row `k` on its own DOF.
    pub fn diagonal_of(&self, k: usize) -> f64 {
        self.a.get(k, self.rows[k])
    }

    pub fn position_of(&self, dof: usize) -> Option<usize> {
        self.rows.binary_search(&dof).ok()
    }
}

/// Parameters of a convection-diffusion operator with implicit Euler in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvectionDiffusion {
    pub nu: f64,
    pub dt: f64,
    /// 0 = linear (central) face interpolation, 1 = full upwind.
    pub upwind_blend: f64,
}

/// Interpolation weight of the owner value at face `f`.
#[inline]
pub fn owner_weight(mesh: &Mesh, f: usize) -> f64 {
    let face = &mesh.faces()[f];
    match face.neighbor {
        Some(n) => {
            let xo = mesh.cells()[face.owner].centroid;
            let xn = mesh.cells()[n].centroid;
            let dn = dist(xn, face.center);
            let d_o = dist(xo, face.center);
            dn / (d_o + dn)
        }
        None => 1.0,
    }
}

/// Centroid-to-centroid distance for internal faces, centroid-to-face for
/// boundary faces.
#[inline]
pub fn face_delta(mesh: &Mesh, f: usize) -> f64 {
    let face = &mesh.faces()[f];
    let xo = mesh.cells()[face.owner].centroid;
    match face.neighbor {
        Some(n) => dist(xo, mesh.cells()[n].centroid),
        None => dist(xo, face.center),
    }
}

#[inline]
fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

#[inline]
fn bc_of(mesh: &Mesh, bcs: &FieldBcs, f: usize) -> Bc {
    let patch = mesh.faces()[f].patch.expect("boundary face carries a patch");
    bcs.get(patch)
}

/// Volumetric flux through face `f` along its owner-outward area vector.
pub fn face_flux_at(mesh: &Mesh, u: &dyn CellData, bc_u: &FieldBcs, f: usize) -> Result<f64> {
    let face = &mesh.faces()[f];
    let s = face.area_vector;
    let o = face.owner;
    let (ux, uy) = match face.neighbor {
        Some(n) => {
            let w = owner_weight(mesh, f);
            (
                w * u.value(o, 0)? + (1.0 - w) * u.value(n, 0)?,
                w * u.value(o, 1)? + (1.0 - w) * u.value(n, 1)?,
            )
        }
        None => match bc_of(mesh, bc_u, f) {
            Bc::FixedValue(v) => (v[0], v[1]),
            Bc::ZeroGradient => (u.value(o, 0)?, u.value(o, 1)?),
        },
    };
    Ok(ux * s[0] + uy * s[1])
}

/// Fluxes through every face (owner-outward), from linear interpolation of
/// the cell velocities.
pub fn face_flux(mesh: &Mesh, u: &Field, bc_u: &FieldBcs) -> Result<Vec<f64>> {
    check_components(u, 2, "face_flux velocity")?;
    (0..mesh.n_faces()).map(|f| face_flux_at(mesh, u, bc_u, f)).collect()
}

fn check_components(data: &dyn CellData, expected: usize, context: &'static str) -> Result<()> {
    if data.components() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found: data.components(),
        })
    }
}

fn finish_row(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

/// One convection-diffusion row for component `comp` of `cell`.
#[allow(clippy::too_many_arguments)]
fn convdiff_row(
    mesh: &Mesh,
    cell: usize,
    comp: usize,
    velocity: &dyn CellData,
    bc_velocity: &FieldBcs,
    bc_phi: &FieldBcs,
    scheme: &ConvectionDiffusion,
    old: &dyn CellData,
) -> Result<(Vec<(usize, f64)>, f64, u64)> {
    let n = mesh.n_cells();
    let offset = comp * n;
    let vol = mesh.volume(cell);
    let mut diag = vol / scheme.dt;
    let mut rhs = vol / scheme.dt * old.value(cell, comp)?;
    let beta = scheme.upwind_blend;
    let faces = mesh.cell_faces(cell);
    let mut entries = Vec::with_capacity(faces.len() + 1);
    for &f in faces {
        let face = &mesh.faces()[f];
        let owner_side = face.owner == cell;
        let phi_owner = face_flux_at(mesh, velocity, bc_velocity, f)?;
        let flux = if owner_side { phi_owner } else { -phi_owner };
        let area = face.area();
        match mesh.other_cell(f, cell) {
            Some(nb) => {
                let w_owner = owner_weight(mesh, f);
                let w_self = if owner_side { w_owner } else { 1.0 - w_owner };
                let up_self = if flux >= 0.0 { 1.0 } else { 0.0 };
                let c_self = (1.0 - beta) * w_self + beta * up_self;
                let c_nb = (1.0 - beta) * (1.0 - w_self) + beta * (1.0 - up_self);
                let diffusion = scheme.nu * area / face_delta(mesh, f);
                diag += flux * c_self + diffusion;
                entries.push((offset + nb, flux * c_nb - diffusion));
            }
            None => match bc_of(mesh, bc_phi, f) {
                Bc::FixedValue(v) => {
                    let diffusion = scheme.nu * area / face_delta(mesh, f);
                    diag += diffusion;
                    rhs += diffusion * v[comp] - flux * v[comp];
                }
                Bc::ZeroGradient => {
                    diag += flux;
                }
            },
        }
    }
    entries.push((offset + cell, diag));
    Ok((finish_row(entries), rhs, faces.len() as u64))
}

fn check_dt(scheme: &ConvectionDiffusion) -> Result<()> {
    if scheme.dt > 0.0 && scheme.dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTimeStep(scheme.dt))
    }
}

/// Scalar transport `dT/dt + div(u T) - nu lap(T) = 0` with the convecting
/// velocity `u` frozen over the step.
pub fn assemble_transport(
    mesh: &Mesh,
    u: &dyn CellData,
    bc_u: &FieldBcs,
    scheme: &ConvectionDiffusion,
    t_old: &dyn CellData,
    bc_t: &FieldBcs,
    rows: &RowSubset,
) -> Result<LinearSystem> {
    check_dt(scheme)?;
    check_components(u, 2, "transport velocity")?;
    check_components(t_old, 1, "transport old field")?;
    let n = mesh.n_cells();
    let rows = rows.resolve(n)?;
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut visits = 0;
    for &r in &rows {
        let (entries, rhs, v) = convdiff_row(mesh, r, 0, u, bc_u, bc_t, scheme, t_old)?;
        out_rows.push(entries);
        b.push(rhs);
        visits += v;
    }
    Ok(LinearSystem {
        rows,
        a: SparseMatrix::from_sorted_rows(n, out_rows),
        b,
        face_visits: visits,
    })
}

/// Momentum rows with the convecting flux frozen at `u_star` (Picard). The
/// two components decouple, so the matrix is block diagonal. A cell-centred
/// pressure gradient, when given, enters the right-hand side as `-V grad p`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_momentum(
    mesh: &Mesh,
    u_star: &dyn CellData,
    bc_u: &FieldBcs,
    scheme: &ConvectionDiffusion,
    u_old: &dyn CellData,
    grad_p: Option<&dyn CellData>,
    rows: &RowSubset,
) -> Result<LinearSystem> {
    check_dt(scheme)?;
    check_components(u_star, 2, "momentum convecting velocity")?;
    check_components(u_old, 2, "momentum old velocity")?;
    if let Some(g) = grad_p {
        check_components(g, 2, "pressure gradient")?;
    }
    let n = mesh.n_cells();
    let rows = rows.resolve(2 * n)?;
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut visits = 0;
    for &r in &rows {
        let (cell, comp) = (r % n, r / n);
        let (entries, mut rhs, v) = convdiff_row(mesh, cell, comp, u_star, bc_u, bc_u, scheme, u_old)?;
        if let Some(g) = grad_p {
            rhs -= mesh.volume(cell) * g.value(cell, comp)?;
        }
        out_rows.push(entries);
        b.push(rhs);
        visits += v;
    }
    Ok(LinearSystem {
        rows,
        a: SparseMatrix::from_sorted_rows(2 * n, out_rows),
        b,
        face_visits: visits,
    })
}

/// Implicit under-relaxation: `(a/alpha) x = b + (1 - alpha)/alpha * a * x_prev`
/// on each row's own DOF.
pub fn relax(sys: &mut LinearSystem, alpha: f64, prev: &dyn CellData, n_cells: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "relaxation factor must lie in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(());
    }
    let offsets = sys.a.row_offsets().to_vec();
    for (k, &dof) in sys.rows.iter().enumerate() {
        let (start, end) = (offsets[k], offsets[k + 1]);
        let pos = sys.a.col_indices()[start..end]
            .binary_search(&dof)
            .map_err(|_| Error::ZeroDiagonal(dof % n_cells))?;
        let values = sys.a.values_mut();
        let a = values[start + pos];
        values[start + pos] = a / alpha;
        sys.b[k] += (1.0 - alpha) / alpha * a * prev.value(dof % n_cells, dof / n_cells)?;
    }
    Ok(())
}

/// Green-Gauss gradient of a scalar at one cell.
pub fn gauss_gradient_at(mesh: &Mesh, p: &dyn CellData, bc_p: &FieldBcs, cell: usize) -> Result<[f64; 2]> {
    let mut g = [0.0, 0.0];
    for &f in mesh.cell_faces(cell) {
        let face = &mesh.faces()[f];
        let value = match face.neighbor {
            Some(n) => {
                let w = owner_weight(mesh, f);
                w * p.value(face.owner, 0)? + (1.0 - w) * p.value(n, 0)?
            }
            None => match bc_of(mesh, bc_p, f) {
                Bc::FixedValue(v) => v[0],
                Bc::ZeroGradient => p.value(cell, 0)?,
            },
        };
        let s = mesh.outward_area(f, cell);
        g[0] += value * s[0];
        g[1] += value * s[1];
    }
    let vol = mesh.volume(cell);
    Ok([g[0] / vol, g[1] / vol])
}

pub fn gauss_gradient(mesh: &Mesh, p: &Field, bc_p: &FieldBcs) -> Result<Field> {
    check_components(p, 1, "gradient input")?;
    let n = mesh.n_cells();
    let mut out = Field::zeros(n, 2);
    for c in 0..n {
        let g = gauss_gradient_at(mesh, p, bc_p, c)?;
        out.set(c, 0, g[0]);
        out.set(c, 1, g[1]);
    }
    Ok(out)
}

/// Gradient on the listed cells only.
pub fn gauss_gradient_local(
    mesh: &Mesh,
    p: &dyn CellData,
    bc_p: &FieldBcs,
    cells: Vec<usize>,
) -> Result<LocalField> {
    let mut out = LocalField::zeros(cells, 2)?;
    for k in 0..out.len() {
        let g = gauss_gradient_at(mesh, p, bc_p, out.cells()[k])?;
        out.set_local(k, 0, g[0]);
        out.set_local(k, 1, g[1]);
    }
    Ok(out)
}

/// Inputs of the pressure-correction equation of one SIMPLE iteration.
#[derive(Clone, Copy)]
pub struct PressureCorrectionInputs<'a> {
    /// Diagonal of the (relaxed) momentum matrix, one value per cell.
    pub a_diag: &'a dyn CellData,
    /// Momentum predictor velocity.
    pub u_star: &'a dyn CellData,
    /// Pressure used in the predictor.
    pub p: &'a dyn CellData,
    pub bc_u: &'a FieldBcs,
    pub bc_p: &'a FieldBcs,
}

/// Predicted (Rhie-Chow interpolated) flux through face `f` along the owner
/// normal, and the pressure-correction coefficient `|S| / (delta * a_f)`,
/// where `a_f` is the face-interpolated `a_diag / V`. The coefficient is zero
/// on faces where the correction is not driven (fixed velocity, or
/// zero-gradient pressure on an open boundary).
pub fn predicted_face_flux(mesh: &Mesh, inp: &PressureCorrectionInputs<'_>, f: usize) -> Result<(f64, f64)> {
    let face = &mesh.faces()[f];
    let o = face.owner;
    let s = face.area_vector;
    let area = face.area();
    let delta = face_delta(mesh, f);
    let a_over_v = |c: usize| -> Result<f64> {
        let a = inp.a_diag.value(c, 0)?;
        if a == 0.0 {
            return Err(Error::ZeroDiagonal(c));
        }
        Ok(a / mesh.volume(c))
    };
    match face.neighbor {
        Some(n) => {
            let w = owner_weight(mesh, f);
            let a_face = w * a_over_v(o)? + (1.0 - w) * a_over_v(n)?;
            let ux = w * inp.u_star.value(o, 0)? + (1.0 - w) * inp.u_star.value(n, 0)?;
            let uy = w * inp.u_star.value(o, 1)? + (1.0 - w) * inp.u_star.value(n, 1)?;
            let go = gauss_gradient_at(mesh, inp.p, inp.bc_p, o)?;
            let gn = gauss_gradient_at(mesh, inp.p, inp.bc_p, n)?;
            let gx = w * go[0] + (1.0 - w) * gn[0];
            let gy = w * go[1] + (1.0 - w) * gn[1];
            let compact = (inp.p.value(n, 0)? - inp.p.value(o, 0)?) * area / delta;
            let interpolated = gx * s[0] + gy * s[1];
            let flux = ux * s[0] + uy * s[1] - (compact - interpolated) / a_face;
            Ok((flux, area / (delta * a_face)))
        }
        None => {
            let patch = face.patch.expect("boundary face carries a patch");
            match (inp.bc_u.get(patch), inp.bc_p.get(patch)) {
                (Bc::FixedValue(v), _) => Ok((v[0] * s[0] + v[1] * s[1], 0.0)),
                (Bc::ZeroGradient, Bc::FixedValue(pb)) => {
                    let a_face = a_over_v(o)?;
                    let g = gauss_gradient_at(mesh, inp.p, inp.bc_p, o)?;
                    let compact = (pb[0] - inp.p.value(o, 0)?) * area / delta;
                    let interpolated = g[0] * s[0] + g[1] * s[1];
                    let flux = inp.u_star.value(o, 0)? * s[0] + inp.u_star.value(o, 1)? * s[1]
                        - (compact - interpolated) / a_face;
                    Ok((flux, area / (delta * a_face)))
                }
                (Bc::ZeroGradient, Bc::ZeroGradient) => Ok((
                    inp.u_star.value(o, 0)? * s[0] + inp.u_star.value(o, 1)? * s[1],
                    0.0,
                )),
            }
        }
    }
}

/// Cell whose pressure is pinned when no patch fixes the pressure level.
pub const PRESSURE_REFERENCE_CELL: usize = 0;

/// Pressure-correction rows `sum_f c_f (p'_P - p'_N) = -sum_f phi*_f`.
///
/// The operator has a positive diagonal; the right-hand side is the negated
/// mass imbalance of the predicted fluxes.
pub fn assemble_pressure_correction(
    mesh: &Mesh,
    inp: &PressureCorrectionInputs<'_>,
    rows: &RowSubset,
) -> Result<LinearSystem> {
    check_components(inp.a_diag, 1, "momentum diagonal")?;
    check_components(inp.u_star, 2, "predicted velocity")?;
    check_components(inp.p, 1, "pressure")?;
    let n = mesh.n_cells();
    let rows = rows.resolve(n)?;
    let pinned = !inp.bc_p.has_fixed_value();
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut visits = 0;
    for &cell in &rows {
        if pinned && cell == PRESSURE_REFERENCE_CELL {
            out_rows.push(vec![(cell, 1.0)]);
            b.push(0.0);
            continue;
        }
        let (entries, rhs, v) = pressure_row(mesh, inp, cell)?;
        out_rows.push(entries);
        b.push(rhs);
        visits += v;
    }
    Ok(LinearSystem {
        rows,
        a: SparseMatrix::from_sorted_rows(n, out_rows),
        b,
        face_visits: visits,
    })
}

fn pressure_row(
    mesh: &Mesh,
    inp: &PressureCorrectionInputs<'_>,
    cell: usize,
) -> Result<(Vec<(usize, f64)>, f64, u64)> {
    let faces = mesh.cell_faces(cell);
    let mut diag = 0.0;
    let mut imbalance = 0.0;
    let mut entries = Vec::with_capacity(faces.len() + 1);
    for &f in faces {
        let (flux_owner, coeff) = predicted_face_flux(mesh, inp, f)?;
        let face = &mesh.faces()[f];
        imbalance += if face.owner == cell { flux_owner } else { -flux_owner };
        diag += coeff;
        if let Some(nb) = mesh.other_cell(f, cell) {
            entries.push((nb, -coeff));
        }
    }
    entries.push((cell, diag));
    Ok((finish_row(entries), -imbalance, faces.len() as u64))
}

/// Corrected face flux `phi* - c_f (p'_N - p'_O)` along the owner normal.
pub fn corrected_face_flux(
    mesh: &Mesh,
    inp: &PressureCorrectionInputs<'_>,
    p_corr: &dyn CellData,
    f: usize,
) -> Result<f64> {
    let (flux, coeff) = predicted_face_flux(mesh, inp, f)?;
    let face = &mesh.faces()[f];
    let po = p_corr.value(face.owner, 0)?;
    let pn = match face.neighbor {
        Some(n) => p_corr.value(n, 0)?,
        // Correction coefficients are only non-zero where p' is fixed at zero.
        None => 0.0,
    };
    Ok(flux - coeff * (pn - po))
}
