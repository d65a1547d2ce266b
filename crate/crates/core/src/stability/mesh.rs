use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::SpaceForm;
use crate::spaceform::Curvature;
use crate::varifold::critical_catenoid_params;

/// Smallest admissible triangle angle, in degrees.
pub const MIN_ANGLE_DEG: f64 = 1.0;
/// Tolerance for boundary vertices on `∂B_{R;K}`.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// A triangulated surface in a ball of a space-form model.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub model: SpaceForm,
    pub radius: f64,
    pub vertices: Vec<DVector<f64>>,
    /// Consistently oriented triangles.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<[usize; 2]>,
    pub is_boundary: Vec<bool>,
    /// Unit normals in `T_p M`, filled by the curvature fit.
    pub normals: Vec<DVector<f64>>,
    pub fields: BTreeMap<String, Vec<f64>>,
}

fn model_name(k: Curvature) -> &'static str {
    match k.0 {
        x if x > 0.0 => "spherical",
        x if x < 0.0 => "hyperbolic",
        _ => "euclidean",
    }
}

impl SurfaceMesh {
    /// Validates and builds a mesh; only `n = 3` models are supported.
    pub fn new(model: SpaceForm, radius: f64, vertices: Vec<DVector<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if model.dim != 3 {
            return Err(Error::Mesh(format!("surface meshes live in 3-dimensional models, got n = {}", model.dim)));
        }
        let amb = model.ambient_dim();
        if let Some(i) = vertices.iter().position(|v| v.len() != amb) {
            return Err(Error::Mesh(format!("vertex {i} has {} coordinates, model needs {amb}", vertices[i].len())));
        }
        let nv = vertices.len();
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} has invalid indices {tri:?}")));
            }
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        let mut boundary_edges = Vec::new();
        for (&(a, b), &c) in &edges {
            let back = edges.get(&(b, a)).copied().unwrap_or(0);
            if c > 1 || back > 1 {
                return Err(Error::Mesh(format!("edge ({a}, {b}) is non-manifold or inconsistently oriented")));
            }
            if back == 0 {
                boundary_edges.push([a, b]);
            }
        }
        boundary_edges.sort_unstable();
        let mut is_boundary = vec![false; nv];
        for e in &boundary_edges {
            is_boundary[e[0]] = true;
            is_boundary[e[1]] = true;
        }
        let mesh = Self {
            model,
            radius,
            vertices,
            triangles,
            boundary_edges,
            is_boundary,
            normals: Vec::new(),
            fields: BTreeMap::new(),
        };
        for (i, v) in mesh.vertices.iter().enumerate() {
            if mesh.is_boundary[i] {
                let r = model.radius_of(v);
                if (r - radius).abs() > BOUNDARY_TOL {
                    return Err(Error::Mesh(format!("boundary vertex {i} at radius {r}, expected {radius}")));
                }
            }
        }
        let min = mesh.min_angle();
        if min <= MIN_ANGLE_DEG.to_radians() {
            return Err(Error::Mesh(format!("minimum triangle angle {:.3}° below {MIN_ANGLE_DEG}°", min.to_degrees())));
        }
        Ok(mesh)
    }

    pub fn curvature(&self) -> Curvature {
        self.model.curvature
    }

    /// Geodesic edge lengths `(l₀, l₁, l₂)` opposite to the triangle's vertices.
    pub fn edge_lengths(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let d = |i: usize, j: usize| self.model.distance(&self.vertices[i], &self.vertices[j]);
        [d(b, c), d(c, a), d(a, b)]
    }

    /// Area of the flat triangle with the geodesic edge lengths.
    pub fn triangle_area(&self, t: usize) -> f64 {
        heron(self.edge_lengths(t))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.model.distance(&self.vertices[e[0]], &self.vertices[e[1]])).sum()
    }

    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let l = self.edge_lengths(t);
            for i in 0..3 {
                let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
                let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
                min = min.min(cos.acos());
            }
        }
        min
    }

    /// Geodesic distance of each vertex from the ball centre.
    pub fn radii(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| self.model.radius_of(v)).collect()
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Writes the OFF-like format:
    ///
    /// ```text
    /// OFF <model> K=<K> R=<R>
    /// <vertices> <triangles> 0
    /// <coordinates>...
    /// 3 <a> <b> <c>
    /// ```
    pub fn write_off<W: Write>(&self, mut out: W) -> Result<()> {
        let k = self.curvature();
        writeln!(out, "OFF {} K={:?} R={:?}", model_name(k), k.0, self.radius)?;
        writeln!(out, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            let coords: Vec<String> = v.iter().map(|c| format!("{c:?}")).collect();
            writeln!(out, "{}", coords.join(" "))?;
        }
        for t in &self.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn read_off<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
            other => Some((i + 1, other)),
        });
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(s))) => Ok((i, s)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::Parse { line: 0, reason: format!("unexpected end of input, expected {what}") }),
            }
        };
        let (ln, header) = next("header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad = |reason: String| Error::Parse { line: ln, reason };
        if parts.len() != 4 || parts[0] != "OFF" {
            return Err(bad(format!("expected `OFF <model> K=<K> R=<R>`, got `{header}`")));
        }
        let kv = parse_kv(parts[2], "K").map_err(&bad)?;
        let radius = parse_kv(parts[3], "R").map_err(&bad)?;
        let k = Curvature::new(kv).map_err(|e| bad(e.to_string()))?;
        if model_name(k) != parts[1] {
            return Err(bad(format!("model `{}` does not match K = {kv}", parts[1])));
        }
        let model = SpaceForm::new(3, k);
        let (ln, counts) = next("counts")?;
        let nums: Vec<usize> = counts
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse { line: ln, reason: format!("bad count `{s}`") }))
            .collect::<Result<_>>()?;
        if nums.len() < 2 {
            return Err(Error::Parse { line: ln, reason: "expected `<vertices> <triangles> 0`".into() });
        }
        let amb = model.ambient_dim();
        let mut vertices = Vec::with_capacity(nums[0]);
        for _ in 0..nums[0] {
            let (ln, l) = next("vertex")?;
            let c: Vec<f64> = l
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse { line: ln, reason: format!("bad coordinate `{s}`") }))
                .collect::<Result<_>>()?;
            if c.len() != amb {
                return Err(Error::Parse { line: ln, reason: format!("expected {amb} coordinates, got {}", c.len()) });
            }
            vertices.push(DVector::from_vec(c));
        }
        let mut triangles = Vec::with_capacity(nums[1]);
        for _ in 0..nums[1] {
            let (ln, l) = next("face")?;
            let c: Vec<usize> = l
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse { line: ln, reason: format!("bad index `{s}`") }))
                .collect::<Result<_>>()?;
            if c.len() != 4 || c[0] != 3 {
                return Err(Error::Parse { line: ln, reason: "faces must be triangles `3 a b c`".into() });
            }
            triangles.push([c[1], c[2], c[3]]);
        }
        Self::new(model, radius, vertices, triangles)
    }
}

fn parse_kv(s: &str, key: &str) -> std::result::Result<f64, String> {
    s.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("expected `{key}=<number>`, got `{s}`"))
}

/// Area from edge lengths, Kahan's stable form of Heron's formula.
pub(crate) fn heron(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|a, b| b.total_cmp(a));
    let (a, b, c) = (s[0], s[1], s[2]);
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

/// Triangles between two concentric rings of `na` and `nb` vertices whose
/// angles start at zero and increase; indices are offset by `oa`, `ob`.
fn stitch_rings(oa: usize, na: usize, ob: usize, nb: usize, out: &mut Vec<[usize; 3]>) {
    let (mut a, mut b) = (0, 0);
    while a < na || b < nb {
        let ta = (a + 1) as f64 / na as f64;
        let tb = (b + 1) as f64 / nb as f64;
        if b < nb && (tb <= ta || a == na) {
            out.push([oa + a % na, ob + b % nb, ob + (b + 1) % nb]);
            b += 1;
        } else {
            out.push([oa + a % na, ob + b % nb, oa + (a + 1) % na]);
            a += 1;
        }
    }
}

/// Totally geodesic disk of radius `R` through the centre of `B³_{R;K}`,
/// meshed by `rings` concentric rings of `6i` vertices at equal geodesic
/// radial spacing. Vertex fields `r` and `theta` hold the polar coordinates.
pub fn geodesic_disk_mesh(k: Curvature, radius: f64, rings: usize) -> Result<SurfaceMesh> {
    if rings == 0 {
        return Err(Error::InvalidInput("need at least one ring".into()));
    }
    if let Some(max) = k.max_ball_radius() {
        if radius > max + 1e-12 {
            return Err(Error::InvalidInput(format!("radius {radius} exceeds π/(2√K) = {max}")));
        }
    }
    let model = SpaceForm::new(3, k);
    let (e0, e1) = (model.axis(0), model.axis(1));
    let mut vertices = vec![model.origin()];
    let mut rs = vec![0.0];
    let mut ths = vec![0.0];
    let mut offsets = vec![0];
    for i in 1..=rings {
        offsets.push(vertices.len());
        let r = radius * i as f64 / rings as f64;
        let m = 6 * i;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            let dir = &e0 * th.cos() + &e1 * th.sin();
            vertices.push(model.polar_point(r, &dir));
            rs.push(r);
            ths.push(th);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..6 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 1..rings {
        stitch_rings(offsets[i], 6 * i, offsets[i + 1], 6 * (i + 1), &mut triangles);
    }
    let mut mesh = SurfaceMesh::new(model, radius, vertices, triangles)?;
    mesh.fields.insert("r".into(), rs);
    mesh.fields.insert("theta".into(), ths);
    Ok(mesh)
}

/// The critical catenoid in the Euclidean unit ball on its isothermal
/// `(s, θ)` grid: `rows` cells in `s`, square cells in `θ`.
pub fn catenoid_mesh(rows: usize) -> Result<SurfaceMesh> {
    if rows < 2 {
        return Err(Error::InvalidInput("need at least two rows".into()));
    }
    let p = critical_catenoid_params();
    let ds = 2.0 * p.s0 / rows as f64;
    let nt = ((2.0 * PI / ds).round() as usize).max(6);
    let mut vertices = Vec::with_capacity((rows + 1) * nt);
    let mut ss = Vec::new();
    for i in 0..=rows {
        let s = if i == rows { p.s0 } else { -p.s0 + i as f64 * ds };
        for j in 0..nt {
            let th = 2.0 * PI * (j as f64 + 0.5 * (i % 2) as f64) / nt as f64;
            vertices.push(p.point(s, th));
            ss.push(s);
        }
    }
    let mut triangles = Vec::with_capacity(2 * rows * nt);
    for i in 0..rows {
        let (lo, hi) = (i * nt, (i + 1) * nt);
        // staggered rows: the upper row is shifted by half a cell on odd i
        for j in 0..nt {
            let (a, b) = (lo + j, lo + (j + 1) % nt);
            let (c, d) = (hi + j, hi + (j + 1) % nt);
            if i % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([b, d, c]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            }
        }
    }
    let model = SpaceForm::new(3, Curvature(0.0));
    let mut mesh = SurfaceMesh::new(model, 1.0, vertices, triangles)?;
    mesh.fields.insert("s".into(), ss);
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heron_is_stable() {
        assert!((heron([3.0, 4.0, 5.0]) - 6.0).abs() < 1e-14);
        let t = heron([1.0, 1.0, 1e-9]);
        assert!((t - 0.5e-9).abs() < 1e-20);
    }

    #[test]
    fn disk_mesh_counts() {
        let m = geodesic_disk_mesh(Curvature(0.0), 1.0, 4).unwrap();
        assert_eq!(m.vertices.len(), 1 + 3 * 4 * 5);
        assert_eq!(m.triangles.len(), 6 * 16);
        assert_eq!(m.boundary_edges.len(), 24);
        assert!(m.min_angle() > 25f64.to_radians());
    }

    #[test]
    fn catenoid_mesh_is_an_annulus() {
        let m = catenoid_mesh(8).unwrap();
        let nt = m.vertices.len() / 9;
        assert_eq!(m.boundary_edges.len(), 2 * nt);
        // Euler characteristic zero
        let edges = (3 * m.triangles.len() + m.boundary_edges.len()) / 2;
        assert_eq!(m.vertices.len() + m.triangles.len(), edges);
    }

    #[test]
    fn off_round_trip() {
        let m = geodesic_disk_mesh(Curvature(-1.0), 1.0, 3).unwrap();
        let mut buf = Vec::new();
        m.write_off(&mut buf).unwrap();
        assert!(buf.starts_with(b"OFF hyperbolic K=-1.0 R=1.0\n"));
        let back = SurfaceMesh::read_off(buf.as_slice()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
    }

    #[test]
    fn malformed_off_is_rejected() {
        let bad = "OFF euclidean K=0 R=1\n3 1 0\n0 0 0\n1 0 0\n";
        assert!(matches!(SurfaceMesh::read_off(bad.as_bytes()), Err(Error::Parse { .. })));
        let wrong = "OFF spherical K=0 R=1\n0 0 0\n";
        assert!(SurfaceMesh::read_off(wrong.as_bytes()).is_err());
    }

    #[test]
    fn off_boundary_vertices_rejected() {
        let mut m = geodesic_disk_mesh(Curvature(0.0), 1.0, 3).unwrap();
        let last = m.vertices.len() - 1;
        m.vertices[last] *= 0.99;
        assert!(SurfaceMesh::new(m.model, 1.0, m.vertices, m.triangles).is_err());
    }
}
