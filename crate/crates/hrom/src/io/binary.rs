//! Little-endian binary containers.
//!
//! * `HFV1` sparse CSR: `n_rows, n_cols, nnz` (u64), row offsets (u64),
//!   column indices (u64), values (f64).
//! * `HFVD` dense: `n_rows, n_cols` (u64), row-major values (f64).
//! * `HFVM` mesh: `n_cells, n_faces, n_patches` (u64); per cell
//!   `volume, cx, cy`; per face `ax, ay, fx, fy` (f64) then `owner, neighbor,
//!   patch` (u64, `u64::MAX` for none); per patch name length, UTF-8 name
//!   bytes, face count and face indices (u64).

use std::io::{self, Read, Write};

use hrom_core::linalg::{DenseMatrix, SparseMatrix};
use hrom_core::mesh::{Cell, Face, Mesh, Patch};

use crate::error::{CliError, Result};

pub const SPARSE_MAGIC: &[u8; 4] = b"HFV1";
pub const DENSE_MAGIC: &[u8; 4] = b"HFVD";
pub const MESH_MAGIC: &[u8; 4] = b"HFVM";

const NONE: u64 = u64::MAX;

fn format_error(e: hrom_core::Error) -> CliError {
    CliError::Format(e.to_string())
}

fn put_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_usize(r: &mut impl Read) -> Result<usize> {
    let v = get_u64(r)?;
    usize::try_from(v).map_err(|_| CliError::Format(format!("count {v} does not fit in memory")))
}

fn get_index(r: &mut impl Read) -> Result<Option<usize>> {
    match get_u64(r)? {
        NONE => Ok(None),
        v => usize::try_from(v)
            .map(Some)
            .map_err(|_| CliError::Format(format!("index {v} out of range"))),
    }
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(CliError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&b),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

/// Upper bound on element counts read before allocation, so a corrupt header
/// cannot request absurd buffers.
fn check_len(len: usize, what: &str) -> Result<usize> {
    if len > (1 << 34) {
        return Err(CliError::Format(format!("{what} count {len} is implausible")));
    }
    Ok(len)
}

pub fn write_sparse(w: &mut impl Write, a: &SparseMatrix) -> Result<()> {
    w.write_all(SPARSE_MAGIC)?;
    put_u64(w, a.n_rows() as u64)?;
    put_u64(w, a.n_cols() as u64)?;
    put_u64(w, a.nnz() as u64)?;
    for &o in a.row_offsets() {
        put_u64(w, o as u64)?;
    }
    for &c in a.col_indices() {
        put_u64(w, c as u64)?;
    }
    for &v in a.values() {
        put_f64(w, v)?;
    }
    Ok(())
}

pub fn read_sparse(r: &mut impl Read) -> Result<SparseMatrix> {
    expect_magic(r, SPARSE_MAGIC)?;
    let n_rows = check_len(get_usize(r)?, "row")?;
    let n_cols = get_usize(r)?;
    let nnz = check_len(get_usize(r)?, "non-zero")?;
    let offsets = (0..=n_rows).map(|_| get_usize(r)).collect::<Result<Vec<_>>>()?;
    let cols = (0..nnz).map(|_| get_usize(r)).collect::<Result<Vec<_>>>()?;
    let vals = (0..nnz).map(|_| get_f64(r)).collect::<io::Result<Vec<_>>>()?;
    SparseMatrix::from_raw_parts(n_rows, n_cols, offsets, cols, vals).map_err(format_error)
}

pub fn write_dense(w: &mut impl Write, a: &DenseMatrix) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    put_u64(w, a.n_rows() as u64)?;
    put_u64(w, a.n_cols() as u64)?;
    for &v in a.values() {
        put_f64(w, v)?;
    }
    Ok(())
}

/// Writes `columns` as the `len x columns.len()` matrix whose columns they
/// are, without building it in memory.
pub fn write_dense_columns(w: &mut impl Write, len: usize, columns: &[Vec<f64>]) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    put_u64(w, len as u64)?;
    put_u64(w, columns.len() as u64)?;
    for i in 0..len {
        for c in columns {
            put_f64(w, c[i])?;
        }
    }
    Ok(())
}

pub fn read_dense(r: &mut impl Read) -> Result<DenseMatrix> {
    expect_magic(r, DENSE_MAGIC)?;
    let n_rows = get_usize(r)?;
    let n_cols = get_usize(r)?;
    let len = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| CliError::Format("dense dimensions overflow".into()))?;
    check_len(len, "dense entry")?;
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DenseMatrix::from_row_major(n_rows, n_cols, values).map_err(format_error)
}

/// Columns of a dense matrix file.
pub fn read_dense_columns(r: &mut impl Read) -> Result<(usize, Vec<Vec<f64>>)> {
    let m = read_dense(r)?;
    let cols = (0..m.n_cols()).map(|j| m.column(j)).collect();
    Ok((m.n_rows(), cols))
}

pub fn write_mesh(w: &mut impl Write, mesh: &Mesh) -> Result<()> {
    w.write_all(MESH_MAGIC)?;
    put_u64(w, mesh.n_cells() as u64)?;
    put_u64(w, mesh.n_faces() as u64)?;
    put_u64(w, mesh.patches().len() as u64)?;
    for c in mesh.cells() {
        put_f64(w, c.volume)?;
        put_f64(w, c.centroid[0])?;
        put_f64(w, c.centroid[1])?;
    }
    for f in mesh.faces() {
        for v in [f.area_vector[0], f.area_vector[1], f.center[0], f.center[1]] {
            put_f64(w, v)?;
        }
        put_u64(w, f.owner as u64)?;
        put_u64(w, f.neighbor.map_or(NONE, |n| n as u64))?;
        put_u64(w, f.patch.map_or(NONE, |p| p as u64))?;
    }
    for p in mesh.patches() {
        put_u64(w, p.name.len() as u64)?;
        w.write_all(p.name.as_bytes())?;
        put_u64(w, p.faces.len() as u64)?;
        for &f in &p.faces {
            put_u64(w, f as u64)?;
        }
    }
    Ok(())
}

pub fn read_mesh(r: &mut impl Read) -> Result<Mesh> {
    expect_magic(r, MESH_MAGIC)?;
    let n_cells = check_len(get_usize(r)?, "cell")?;
    let n_faces = check_len(get_usize(r)?, "face")?;
    let n_patches = check_len(get_usize(r)?, "patch")?;
    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let volume = get_f64(r)?;
        let centroid = [get_f64(r)?, get_f64(r)?];
        cells.push(Cell { volume, centroid });
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let area_vector = [get_f64(r)?, get_f64(r)?];
        let center = [get_f64(r)?, get_f64(r)?];
        let owner = get_usize(r)?;
        let neighbor = get_index(r)?;
        let patch = get_index(r)?;
        faces.push(Face {
            area_vector,
            center,
            owner,
            neighbor,
            patch,
        });
    }
    let mut patches = Vec::with_capacity(n_patches);
    for _ in 0..n_patches {
        let len = check_len(get_usize(r)?, "name byte")?;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| CliError::Format("patch name is not UTF-8".into()))?;
        let nf = check_len(get_usize(r)?, "patch face")?;
        let faces = (0..nf).map(|_| get_usize(r)).collect::<Result<Vec<_>>>()?;
        patches.push(Patch { name, faces });
    }
    Mesh::from_parts(cells, faces, patches).map_err(format_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hrom_core::mesh::{build_obstacle_channel_mesh, ObstacleChannelGeometry};

    #[test]
    fn sparse_round_trip() {
        let a = SparseMatrix::from_triplets(3, 4, &[(0, 1, 2.0), (2, 3, -1.5), (2, 0, 0.25)]).unwrap();
        let mut buf = Vec::new();
        write_sparse(&mut buf, &a).unwrap();
        assert_eq!(&buf[..4], b"HFV1");
        assert_eq!(buf.len(), 4 + 3 * 8 + 4 * 8 + 3 * 8 + 3 * 8);
        assert_eq!(read_sparse(&mut buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn dense_round_trip_and_columns() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![-4.0, 5.0, 6.5]];
        let mut buf = Vec::new();
        write_dense_columns(&mut buf, 3, &cols).unwrap();
        let m = read_dense(&mut buf.as_slice()).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (3, 2));
        assert_eq!(m.get(1, 1), 5.0);
        let mut again = Vec::new();
        write_dense(&mut again, &m).unwrap();
        assert_eq!(buf, again);
        assert_eq!(read_dense_columns(&mut buf.as_slice()).unwrap().1, cols);
    }

    #[test]
    fn mesh_round_trip() {
        let g = ObstacleChannelGeometry {
            x_range: [0.0, 4.0],
            y_range: [0.0, 3.0],
            obstacle: [1.0, 2.0, 1.0, 2.0],
            nx: 4,
            ny: 3,
        };
        let m = build_obstacle_channel_mesh(&g).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mut buf, &m).unwrap();
        let back = read_mesh(&mut buf.as_slice()).unwrap();
        assert_eq!(back.n_cells(), 11);
        assert_eq!(back.cells(), m.cells());
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.patches(), m.patches());
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(read_dense(&mut b"HFV1xxxxxxxx".as_slice()), Err(CliError::Format(_))));
        let mut buf = Vec::new();
        write_dense(&mut buf, &DenseMatrix::identity(3)).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_dense(&mut buf.as_slice()).is_err());
    }
}
