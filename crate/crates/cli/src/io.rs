//! JSON grids, quad-net files and OBJ meshes.
//!
//! A grid file is `{extents: [nx, ny], steps: [hx, hy], origin: [x0, y0],
//! values: [...]}` with values in row-major order (`x` fastest). Vectors are
//! arrays, complex scalars are `[re, im]`.

use std::fmt::Write as _;
use std::path::Path;

use isogauge::discretei::QuadMap;
use isogauge::grid::{Field, Grid, ScalarField, VecField};
use isogauge::loopgauge::C64;
use nalgebra::{Vector3, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile<T> {
    pub extents: [usize; 2],
    pub steps: [f64; 2],
    pub origin: [f64; 2],
    pub values: Vec<T>,
}

impl<T> GridFile<T> {
    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.extents[0], self.extents[1], self.steps[0], self.steps[1])?
            .with_origin(self.origin[0], self.origin[1]))
    }
}

fn grid_file<V, T>(field: &Field<V>, conv: impl Fn(&V) -> T) -> GridFile<T> {
    let g = field.grid();
    let (x0, y0) = g.origin();
    GridFile {
        extents: [g.nx(), g.ny()],
        steps: [g.hx(), g.hy()],
        origin: [x0, y0],
        values: field.values().iter().map(conv).collect(),
    }
}

pub fn vec_field_file(field: &VecField) -> GridFile<[f64; 3]> {
    grid_file(field, |v| [v.x, v.y, v.z])
}

pub fn scalar_field_file(field: &ScalarField) -> GridFile<f64> {
    grid_file(field, |v| *v)
}

pub fn complex_field_file(field: &Field<C64>) -> GridFile<[f64; 2]> {
    grid_file(field, |z| [z.re, z.im])
}

pub fn vec_field_from_file(file: &GridFile<[f64; 3]>) -> CliResult<VecField> {
    let values = file.values.iter().map(|v| Vector3::new(v[0], v[1], v[2])).collect();
    Ok(Field::new(file.grid()?, values)?)
}

pub fn complex_field_from_file(file: &GridFile<[f64; 2]>) -> CliResult<Field<C64>> {
    let values = file.values.iter().map(|z| C64::new(z[0], z[1])).collect();
    Ok(Field::new(file.grid()?, values)?)
}

/// A quad net as homogeneous 5-vectors, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadMapFile {
    pub extents: [usize; 2],
    pub lines: Vec<[f64; 5]>,
}

pub fn quad_map_file(map: &QuadMap) -> QuadMapFile {
    QuadMapFile {
        extents: map.dims(),
        lines: map.lines().iter().map(|v| [v[0], v[1], v[2], v[3], v[4]]).collect(),
    }
}

pub fn quad_map_from_file(file: &QuadMapFile) -> CliResult<QuadMap> {
    let lines = file.lines.iter().map(|v| Vector5::from_column_slice(v)).collect();
    Ok(QuadMap::new(file.extents, lines)?)
}

/// An OBJ mesh and the number of faces dropped because a corner had no
/// finite position.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub text: String,
    pub vertices: usize,
    pub faces: usize,
    pub masked_faces: usize,
}

/// Writes `v` lines for the finite vertices in row-major order and one
/// `f` line per grid face, corners counterclockwise from the lower left.
pub fn obj_mesh(extents: [usize; 2], points: &[Option<Vector3<f64>>]) -> CliResult<ObjMesh> {
    let [nx, ny] = extents;
    if points.len() != nx * ny {
        return Err(isogauge::Error::DimensionMismatch {
            expected: nx * ny,
            got: points.len(),
        }
        .into());
    }
    let mut text = String::new();
    let mut number = vec![0usize; points.len()];
    let mut vertices = 0;
    for (k, p) in points.iter().enumerate() {
        if let Some(p) = p.filter(|p| p.iter().all(|c| c.is_finite())) {
            vertices += 1;
            number[k] = vertices;
            writeln!(text, "v {} {} {}", p.x, p.y, p.z).expect("string write");
        }
    }
    let (mut faces, mut masked_faces) = (0, 0);
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let c = [i + nx * j, i + 1 + nx * j, i + 1 + nx * (j + 1), i + nx * (j + 1)].map(|k| number[k]);
            if c.contains(&0) {
                masked_faces += 1;
            } else {
                faces += 1;
                writeln!(text, "f {} {} {} {}", c[0], c[1], c[2], c[3]).expect("string write");
            }
        }
    }
    Ok(ObjMesh {
        text,
        vertices,
        faces,
        masked_faces,
    })
}

pub fn obj_from_field(field: &VecField) -> CliResult<ObjMesh> {
    let g = field.grid();
    let points: Vec<_> = field.values().iter().map(|v| Some(*v)).collect();
    obj_mesh([g.nx(), g.ny()], &points)
}

pub fn obj_from_quad_map(map: &QuadMap) -> CliResult<ObjMesh> {
    obj_mesh(map.dims(), &map.points())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Reads a grid file of 3-vectors or a quad-net file and meshes it.
pub fn obj_from_json(text: &str) -> CliResult<ObjMesh> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("lines").is_some() {
        let file: QuadMapFile = serde_json::from_value(value)?;
        obj_from_quad_map(&quad_map_from_file(&file)?)
    } else if value.get("values").is_some() {
        let file: GridFile<[f64; 3]> = serde_json::from_value(value)?;
        obj_from_field(&vec_field_from_file(&file)?)
    } else {
        Err(CliError::Scenario {
            key: "values".into(),
            reason: "input is neither a grid file nor a quad-net file".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_mesh() {
        let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
        let f = Field::from_fn(g, |_, _, x, y| Vector3::new(x, y, 0.0));
        let m = obj_from_field(&f).unwrap();
        let v = m.text.lines().filter(|l| l.starts_with("v ")).count();
        let faces: Vec<_> = m.text.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(v, 4);
        assert_eq!(faces, vec!["f 1 2 4 3"]);
    }

    #[test]
    fn masked_vertex_drops_its_faces() {
        let mut pts = vec![Some(Vector3::zeros()); 9];
        pts[4] = None;
        let m = obj_mesh([3, 3], &pts).unwrap();
        assert_eq!((m.vertices, m.faces, m.masked_faces), (8, 0, 4));
        pts[4] = Some(Vector3::zeros());
        pts[0] = Some(Vector3::new(f64::INFINITY, 0.0, 0.0));
        let m = obj_mesh([3, 3], &pts).unwrap();
        assert_eq!((m.vertices, m.faces, m.masked_faces), (8, 3, 1));
        assert!(m.text.contains("f 1 2 5 4") || m.text.contains("f 2 3 6 5"));
    }

    #[test]
    fn grid_file_round_trip() {
        let g = Grid::new(3, 2, 0.5, 0.25).unwrap().with_origin(-1.0, 2.0);
        let f = Field::from_fn(g, |_, _, x, y| Vector3::new(x, y, x * y));
        let text = serde_json::to_string(&vec_field_file(&f)).unwrap();
        let back = vec_field_from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), f.grid());
    }

    #[test]
    fn complex_values_are_pairs() {
        let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
        let zs = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0), C64::new(0.0, 1.0), C64::new(-3.0, 0.25)];
        let f = Field::new(g, zs).unwrap();
        let v = serde_json::to_value(complex_field_file(&f)).unwrap();
        assert_eq!(v["values"], serde_json::json!([[1.0, -2.0], [0.5, 0.0], [0.0, 1.0], [-3.0, 0.25]]));
        let back = complex_field_from_file(&serde_json::from_value(v).unwrap()).unwrap();
        assert_eq!(back.values(), f.values());
    }
}
