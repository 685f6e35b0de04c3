//! Signed-distance shapes in the body frame (negative inside the solid).

use std::sync::Arc;

use crate::error::{Error, Result};

/// Signed distance sampled on a body-frame lattice, read back with
/// multilinear interpolation. Outside the lattice the distance to the
/// lattice box is added to the clamped sample, which keeps the sign right.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfGrid {
    dim: usize,
    n: [usize; 3],
    h: f64,
    origin: [f64; 3],
    data: Vec<f64>,
}

impl SdfGrid {
    /// Samples `f` on a lattice of spacing `h` covering `[lo, hi]`.
    pub fn from_fn(dim: usize, lo: [f64; 3], hi: [f64; 3], h: f64, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        if !(h > 0.0) || !(2..=3).contains(&dim) {
            return Err(Error::InvalidScene(format!("bad sampling lattice: dim {dim}, h {h}")));
        }
        let mut n = [1usize; 3];
        for a in 0..dim {
            if !(hi[a] > lo[a]) {
                return Err(Error::InvalidScene("empty sampling box".into()));
            }
            n[a] = ((hi[a] - lo[a]) / h).ceil() as usize + 1;
        }
        let mut data = Vec::with_capacity(n[0] * n[1] * n[2]);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let p = [
                        lo[0] + i as f64 * h,
                        lo[1] + j as f64 * h,
                        if dim == 3 { lo[2] + k as f64 * h } else { 0.0 },
                    ];
                    data.push(f(p));
                }
            }
        }
        Ok(SdfGrid { dim, n, h, origin: lo, data })
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Box spanned by the lattice nodes inside the solid, if any.
    pub fn solid_bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for (idx, &v) in self.data.iter().enumerate() {
            if v > 0.0 {
                continue;
            }
            any = true;
            let c = [idx % self.n[0], (idx / self.n[0]) % self.n[1], idx / (self.n[0] * self.n[1])];
            for a in 0..self.dim {
                let x = self.origin[a] + c[a] as f64 * self.h;
                lo[a] = lo[a].min(x);
                hi[a] = hi[a].max(x);
            }
        }
        if !any {
            return None;
        }
        for a in self.dim..3 {
            lo[a] = 0.0;
            hi[a] = 0.0;
        }
        Some((lo, hi))
    }

    pub fn sample(&self, p: &[f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        let mut outside = 0.0;
        for a in 0..self.dim {
            let top = self.origin[a] + (self.n[a] - 1) as f64 * self.h;
            let q = p[a].clamp(self.origin[a], top);
            outside += (p[a] - q).powi(2);
            let s = (q - self.origin[a]) / self.h;
            let b = (s.floor() as usize).min(self.n[a].saturating_sub(2));
            base[a] = b;
            t[a] = s - b as f64;
        }
        let idx = |i: usize, j: usize, k: usize| (k * self.n[1] + j) * self.n[0] + i;
        let kz = if self.dim == 3 { 2 } else { 1 };
        let mut acc = 0.0;
        for dk in 0..kz {
            for dj in 0..2 {
                for di in 0..2 {
                    let w = (if di == 1 { t[0] } else { 1.0 - t[0] })
                        * (if dj == 1 { t[1] } else { 1.0 - t[1] })
                        * if self.dim == 3 {
                            if dk == 1 { t[2] } else { 1.0 - t[2] }
                        } else {
                            1.0
                        };
                    if w != 0.0 {
                        acc += w * self.data[idx(base[0] + di, base[1] + dj, base[2] + dk)];
                    }
                }
            }
        }
        acc + outside.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RigidShape {
    /// Disk in 2D, sphere in 3D.
    Ball { radius: f64 },
    /// Axis-aligned box in the body frame.
    Box { half: [f64; 3] },
    Sampled(Arc<SdfGrid>),
    /// Solid everywhere the inner shape is not (tank walls).
    Complement(std::boxed::Box<RigidShape>),
}

fn box_sdf(p: &[f64; 3], half: &[f64; 3], dim: usize) -> f64 {
    let mut outside = 0.0;
    let mut inside = f64::NEG_INFINITY;
    for a in 0..dim {
        let q = p[a].abs() - half[a];
        outside += q.max(0.0).powi(2);
        inside = inside.max(q);
    }
    outside.sqrt() + inside.min(0.0)
}

impl RigidShape {
    pub fn signed_distance(&self, p: &[f64; 3], dim: usize) -> f64 {
        match self {
            RigidShape::Ball { radius } => p[..dim].iter().map(|v| v * v).sum::<f64>().sqrt() - radius,
            RigidShape::Box { half } => box_sdf(p, half, dim),
            RigidShape::Sampled(g) => g.sample(p),
            RigidShape::Complement(inner) => -inner.signed_distance(p, dim),
        }
    }

    /// Body-frame axis-aligned box containing the solid; `None` for
    /// unbounded shapes (complements) or empty samples.
    pub fn local_bounds(&self, dim: usize) -> Option<([f64; 3], [f64; 3])> {
        let mut ext = [0.0; 3];
        match self {
            RigidShape::Ball { radius } => ext[..dim].fill(*radius),
            RigidShape::Box { half } => ext[..dim].copy_from_slice(&half[..dim]),
            RigidShape::Sampled(g) => return g.solid_bounds(),
            RigidShape::Complement(_) => return None,
        }
        Some((ext.map(|e| -e), ext))
    }

    /// Spacing of the sampled representation, if any.
    pub fn sampling(&self) -> Option<f64> {
        match self {
            RigidShape::Sampled(g) => Some(g.spacing()),
            RigidShape::Complement(inner) => inner.sampling(),
            _ => None,
        }
    }

    /// Open cup along +y (2D) or +z (3D): outer radius, height, and wall
    /// thickness (also the bottom thickness), base at the body origin.
    /// Built by CSG and sampled at spacing `h`.
    pub fn cup(dim: usize, radius: f64, height: f64, wall: f64, h: f64) -> Result<Self> {
        if !(wall > 0.0 && wall < radius && wall < height) {
            return Err(Error::InvalidScene("cup wall must be thinner than radius and height".into()));
        }
        let up = dim - 1;
        let solid = |p: [f64; 3]| {
            // Distance in the horizontal plane(s).
            let r = (0..dim).filter(|&a| a != up).map(|a| p[a] * p[a]).sum::<f64>().sqrt();
            let z = p[up];
            let outer = (r - radius).max(-z).max(z - height);
            let inner = (r - (radius - wall)).max(wall - z);
            outer.max(-inner)
        };
        let pad = 3.0 * h;
        let mut lo = [-radius - pad; 3];
        let mut hi = [radius + pad; 3];
        lo[up] = -pad;
        hi[up] = height + pad;
        if dim == 2 {
            lo[2] = 0.0;
            hi[2] = 0.0;
        }
        Ok(RigidShape::Sampled(Arc::new(SdfGrid::from_fn(dim, lo, hi, h, solid)?)))
    }

    /// Closed triangle mesh in Wavefront OBJ form, sampled at spacing `h`.
    /// The sign comes from the generalized winding number.
    pub fn from_obj(text: &str, h: f64) -> Result<Self> {
        let mesh = Mesh::parse(text)?;
        let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for v in &mesh.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        for a in 0..3 {
            lo[a] -= 3.0 * h;
            hi[a] += 3.0 * h;
        }
        let grid = SdfGrid::from_fn(3, lo, hi, h, |p| mesh.signed_distance(&p))?;
        Ok(RigidShape::Sampled(Arc::new(grid)))
    }
}

struct Mesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
fn closest_on_triangle(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> [f64; 3] {
    let lerp = |o: &[f64; 3], d: &[f64; 3], t: f64| [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return lerp(a, &ab, d1 / (d1 - d3));
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return lerp(a, &ac, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return lerp(b, &sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ]
}

impl Mesh {
    fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, m: String| Error::Parse {
            what: "OBJ mesh".into(),
            message: format!("line {line}: {m}"),
        };
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>().map_err(|e| err(no + 1, e.to_string())))
                        .collect::<Result<_>>()?;
                    if c.len() != 3 {
                        return Err(err(no + 1, "vertex needs three coordinates".into()));
                    }
                    vertices.push([c[0], c[1], c[2]]);
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for tok in it {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| err(no + 1, format!("bad index {tok}")))?;
                        let i = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                        if i < 0 || i as usize >= vertices.len() {
                            return Err(err(no + 1, format!("index {tok} out of range")));
                        }
                        idx.push(i as usize);
                    }
                    if idx.len() < 3 {
                        return Err(err(no + 1, "face needs at least three vertices".into()));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        if triangles.is_empty() {
            return Err(err(0, "no faces".into()));
        }
        Ok(Mesh { vertices, triangles })
    }

    fn signed_distance(&self, p: &[f64; 3]) -> f64 {
        let mut best = f64::INFINITY;
        let mut winding = 0.0;
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            best = best.min(norm(&sub(p, &closest_on_triangle(p, &a, &b, &c))));
            // Solid angle (Van Oosterom and Strackee).
            let (ra, rb, rc) = (sub(&a, p), sub(&b, p), sub(&c, p));
            let (la, lb, lc) = (norm(&ra), norm(&rb), norm(&rc));
            let num = dot(&ra, &cross(&rb, &rc));
            let den = la * lb * lc + dot(&ra, &rb) * lc + dot(&ra, &rc) * lb + dot(&rb, &rc) * la;
            winding += 2.0 * num.atan2(den);
        }
        let inside = winding / (4.0 * std::f64::consts::PI) > 0.5;
        if inside {
            -best
        } else {
            best
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "\
v -1 -1 -1\nv 1 -1 -1\nv 1 1 -1\nv -1 1 -1\nv -1 -1 1\nv 1 -1 1\nv 1 1 1\nv -1 1 1
f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8
";

    #[test]
    fn analytic_shapes() {
        let ball = RigidShape::Ball { radius: 0.5 };
        assert_eq!(ball.signed_distance(&[0.0, 0.0, 0.0], 2), -0.5);
        assert!((ball.signed_distance(&[0.3, 0.4, 0.0], 2)).abs() < 1e-15);
        let b = RigidShape::Box { half: [1.0, 0.5, 0.0] };
        assert_eq!(b.signed_distance(&[0.0, 0.0, 0.0], 2), -0.5);
        assert!((b.signed_distance(&[2.0, 1.5, 0.0], 2) - 2f64.sqrt()).abs() < 1e-15);
        let walls = RigidShape::Complement(std::boxed::Box::new(b));
        assert_eq!(walls.signed_distance(&[0.0, 0.0, 0.0], 2), 0.5);
    }

    #[test]
    fn sampled_grid_reproduces_affine_and_extends_outside() {
        let g = SdfGrid::from_fn(2, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0], 0.25, |p| p[0] + 2.0 * p[1]).unwrap();
        assert!((g.sample(&[0.1, -0.3, 0.0]) - (0.1 - 0.6)).abs() < 1e-12);
        // Past the lattice: clamped value plus the distance to the box.
        assert!((g.sample(&[3.0, 0.0, 0.0]) - (1.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn mesh_cube_distance_and_sign() {
        let mesh = Mesh::parse(CUBE).unwrap();
        assert_eq!(mesh.triangles.len(), 12);
        let cases = [([0.0, 0.0, 0.0], -1.0), ([0.5, 0.2, 0.0], -0.5), ([2.0, 0.0, 0.0], 1.0), ([2.0, 2.0, 0.0], 2f64.sqrt())];
        for (p, d) in cases {
            assert!((mesh.signed_distance(&p) - d).abs() < 1e-12, "{p:?}");
        }
        let shape = RigidShape::from_obj(CUBE, 0.1).unwrap();
        let exact = RigidShape::Box { half: [1.0; 3] };
        for p in [[0.33, -0.71, 0.2], [1.2, 0.1, -0.4], [0.95, 0.95, 0.95]] {
            assert!((shape.signed_distance(&p, 3) - exact.signed_distance(&p, 3)).abs() < 0.1);
        }
    }

    #[test]
    fn bad_obj_is_rejected() {
        assert!(Mesh::parse("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(Mesh::parse("v 0 0\n").is_err());
        assert!(Mesh::parse("# nothing\n").is_err());
    }

    #[test]
    fn cup_has_a_cavity() {
        let cup = RigidShape::cup(3, 0.1, 0.15, 0.02, 0.005).unwrap();
        // Wall and bottom are solid; the cavity and the outside are not.
        assert!(cup.signed_distance(&[0.09, 0.0, 0.07], 3) < 0.0);
        assert!(cup.signed_distance(&[0.0, 0.0, 0.01], 3) < 0.0);
        assert!(cup.signed_distance(&[0.0, 0.0, 0.08], 3) > 0.0);
        assert!(cup.signed_distance(&[0.2, 0.0, 0.08], 3) > 0.0);
        let cup2 = RigidShape::cup(2, 0.1, 0.15, 0.02, 0.005).unwrap();
        assert!(cup2.signed_distance(&[0.0, 0.08, 0.0], 2) > 0.0);
        assert!(cup2.signed_distance(&[-0.09, 0.08, 0.0], 2) < 0.0);
        assert!(RigidShape::cup(2, 0.1, 0.15, 0.2, 0.005).is_err());
    }

    #[test]
    fn local_bounds_cover_the_solid() {
        let (lo, hi) = RigidShape::Box { half: [0.1, 0.2, 0.3] }.local_bounds(2).unwrap();
        assert_eq!((lo, hi), ([-0.1, -0.2, 0.0], [0.1, 0.2, 0.0]));
        let (lo, hi) = RigidShape::cup(2, 0.1, 0.15, 0.02, 0.005).unwrap().local_bounds(2).unwrap();
        assert!((lo[0] + 0.1).abs() <= 0.005 && (hi[0] - 0.1).abs() <= 0.005);
        assert!(lo[1].abs() <= 0.005 && (hi[1] - 0.15).abs() <= 0.005);
        let tank = RigidShape::Complement(Box::new(RigidShape::Ball { radius: 1.0 }));
        assert!(tank.local_bounds(3).is_none());
    }
}
