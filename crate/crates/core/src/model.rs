//! Domain types shared by every subsystem: particles, springs, faces and the
//! layered softbody aggregate, plus the small geometric queries built on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Origin of a force contribution. Each particle keeps one accumulator per source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceSource {
    Gravity,
    Spring,
    Pressure,
    Drag,
    Collision,
}

impl ForceSource {
    pub const ALL: [ForceSource; 5] =
        [ForceSource::Gravity, ForceSource::Spring, ForceSource::Pressure, ForceSource::Drag, ForceSource::Collision];
}

/// Per-source force accumulators of one particle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceAccumulators {
    pub gravity: Vec3,
    pub spring: Vec3,
    pub pressure: Vec3,
    pub drag: Vec3,
    pub collision: Vec3,
}

impl ForceAccumulators {
    pub fn get(&self, source: ForceSource) -> Vec3 {
        match source {
            ForceSource::Gravity => self.gravity,
            ForceSource::Spring => self.spring,
            ForceSource::Pressure => self.pressure,
            ForceSource::Drag => self.drag,
            ForceSource::Collision => self.collision,
        }
    }

    pub fn get_mut(&mut self, source: ForceSource) -> &mut Vec3 {
        match source {
            ForceSource::Gravity => &mut self.gravity,
            ForceSource::Spring => &mut self.spring,
            ForceSource::Pressure => &mut self.pressure,
            ForceSource::Drag => &mut self.drag,
            ForceSource::Collision => &mut self.collision,
        }
    }

    /// Sum of the five sources, always added in `ForceSource::ALL` order.
    pub fn total(&self) -> Vec3 {
        self.gravity + self.spring + self.pressure + self.drag + self.collision
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub mass: f64,
    pub forces: ForceAccumulators,
    #[serde(default)]
    pub pinned: bool,
}

impl Particle {
    pub fn new(id: usize, position: Vec3, mass: f64) -> Self {
        Self { id, position, velocity: Vec3::ZERO, mass, forces: ForceAccumulators::default(), pinned: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpringKind {
    Structural,
    Radial,
    Shear,
    Drag,
    Center,
}

impl SpringKind {
    pub const ALL: [SpringKind; 5] =
        [SpringKind::Structural, SpringKind::Radial, SpringKind::Shear, SpringKind::Drag, SpringKind::Center];

    pub fn name(self) -> &'static str {
        match self {
            SpringKind::Structural => "structural",
            SpringKind::Radial => "radial",
            SpringKind::Shear => "shear",
            SpringKind::Drag => "drag",
            SpringKind::Center => "center",
        }
    }

    pub fn from_name(name: &str) -> Option<SpringKind> {
        SpringKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Damped Hooke link between two particles of the same body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spring {
    pub id: usize,
    pub p1: usize,
    pub p2: usize,
    pub rest_length: f64,
    pub ks: f64,
    pub kd: f64,
    pub kind: SpringKind,
}

/// Pressure carrier: an edge (2 indices) in 2D or a triangle (3 indices) in 3D,
/// wound counter-clockwise when viewed from outside.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Face {
    pub indices: Vec<usize>,
}

impl Face {
    pub fn edge(a: usize, b: usize) -> Self {
        Face { indices: vec![a, b] }
    }

    pub fn triangle(a: usize, b: usize, c: usize) -> Self {
        Face { indices: vec![a, b, c] }
    }

    pub fn reversed(&self) -> Face {
        let mut indices = self.indices.clone();
        indices.reverse();
        Face { indices }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimensionality {
    D1,
    D2,
    D3,
}

impl Dimensionality {
    pub fn name(self) -> &'static str {
        match self {
            Dimensionality::D1 => "d1",
            Dimensionality::D2 => "d2",
            Dimensionality::D3 => "d3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Layers {
    pub outer: Vec<usize>,
    #[serde(default)]
    pub inner: Vec<usize>,
    #[serde(default)]
    pub center: Option<usize>,
}

/// A layered particle/spring/face aggregate.
///
/// Construct through [`SoftBody::new`], which rejects any index or coefficient
/// that would make the body invalid. Fields stay public for the integrators and
/// builders; code that rewires topology must call [`SoftBody::validate`] again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftBody {
    pub dimensionality: Dimensionality,
    pub particles: Vec<Particle>,
    pub springs: Vec<Spring>,
    pub faces: Vec<Face>,
    pub layers: Layers,
    pub gas_constant: f64,
    pub heading: Vec3,
    /// Staggered half-step velocities of the leapfrog integrator, one per
    /// particle. `None` until that integrator bootstraps.
    #[serde(default)]
    pub staggered: Option<Vec<Vec3>>,
}

impl SoftBody {
    pub fn new(
        dimensionality: Dimensionality,
        particles: Vec<Particle>,
        springs: Vec<Spring>,
        faces: Vec<Face>,
        layers: Layers,
    ) -> Result<Self> {
        let body = SoftBody {
            dimensionality,
            particles,
            springs,
            faces,
            layers,
            gas_constant: 0.0,
            heading: Vec3::X,
            staggered: None,
        };
        body.validate()?;
        Ok(body)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Checks every structural invariant of the body.
    pub fn validate(&self) -> Result<()> {
        let n = self.particles.len();
        let bad = |msg: String| Err(Error::InvalidBody(msg));

        for (i, p) in self.particles.iter().enumerate() {
            if p.id != i {
                return bad(format!("particles[{i}].id is {}", p.id));
            }
            if !(p.mass > 0.0 && p.mass.is_finite()) {
                return bad(format!("particles[{i}].mass {} must be positive", p.mass));
            }
            if !p.position.is_finite() || !p.velocity.is_finite() {
                return bad(format!("particles[{i}] has non-finite state"));
            }
        }
        for (i, s) in self.springs.iter().enumerate() {
            if s.id != i {
                return bad(format!("springs[{i}].id is {}", s.id));
            }
            if s.p1 >= n || s.p2 >= n {
                return bad(format!("springs[{i}] endpoint out of range ({}, {})", s.p1, s.p2));
            }
            if s.p1 == s.p2 {
                return bad(format!("springs[{i}] connects particle {} to itself", s.p1));
            }
            if !(s.rest_length >= 0.0 && s.ks >= 0.0 && s.kd >= 0.0)
                || !(s.rest_length.is_finite() && s.ks.is_finite() && s.kd.is_finite())
            {
                return bad(format!("springs[{i}] has a negative or non-finite coefficient"));
            }
        }
        for layer in [&self.layers.outer, &self.layers.inner] {
            if let Some(&i) = layer.iter().find(|&&i| i >= n) {
                return bad(format!("layer index {i} out of range"));
            }
        }
        if !(self.gas_constant >= 0.0 && self.gas_constant.is_finite()) {
            return bad(format!("gas_constant {} must be non-negative", self.gas_constant));
        }
        if let Some(st) = &self.staggered {
            if st.len() != n {
                return bad(format!("staggered buffer has {} entries for {n} particles", st.len()));
            }
        }

        match self.dimensionality {
            Dimensionality::D1 => {
                if !self.faces.is_empty() {
                    return bad("d1 bodies carry no faces".into());
                }
                if self.gas_constant != 0.0 {
                    return bad("d1 bodies carry no gas pressure".into());
                }
            }
            Dimensionality::D2 | Dimensionality::D3 => {
                let arity = if self.dimensionality == Dimensionality::D2 { 2 } else { 3 };
                for (i, f) in self.faces.iter().enumerate() {
                    if f.indices.len() != arity {
                        return bad(format!("faces[{i}] has {} indices, expected {arity}", f.indices.len()));
                    }
                    if f.indices.iter().any(|&k| k >= n) {
                        return bad(format!("faces[{i}] index out of range"));
                    }
                    for a in 0..arity {
                        for b in a + 1..arity {
                            if f.indices[a] == f.indices[b] {
                                return bad(format!("faces[{i}] repeats particle {}", f.indices[a]));
                            }
                        }
                    }
                }
                if !self.faces.is_empty() {
                    self.check_closed()?;
                }
            }
        }

        if let Some(c) = self.layers.center {
            if c >= n {
                return bad(format!("center index {c} out of range"));
            }
            let links =
                self.springs.iter().filter(|s| s.kind == SpringKind::Center && (s.p1 == c || s.p2 == c)).count();
            if links < 3 {
                return bad(format!("center particle has {links} center springs, need at least 3"));
            }
        }
        Ok(())
    }

    fn check_closed(&self) -> Result<()> {
        match self.dimensionality {
            Dimensionality::D2 => {
                // every vertex of the loop starts exactly one edge and ends exactly one
                let mut starts: HashMap<usize, u32> = HashMap::new();
                let mut ends: HashMap<usize, u32> = HashMap::new();
                for f in &self.faces {
                    *starts.entry(f.indices[0]).or_default() += 1;
                    *ends.entry(f.indices[1]).or_default() += 1;
                }
                if starts.len() != self.faces.len()
                    || ends.len() != self.faces.len()
                    || starts.keys().any(|k| ends.get(k) != Some(&1))
                {
                    return Err(Error::InvalidBody("2D face loop is not closed".into()));
                }
            }
            Dimensionality::D3 => {
                let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
                for f in &self.faces {
                    let t = &f.indices;
                    for k in 0..3 {
                        *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
                    }
                }
                for (&(a, b), &count) in &directed {
                    if count != 1 || directed.get(&(b, a)) != Some(&1) {
                        return Err(Error::InvalidBody(format!(
                            "3D surface edge ({a}, {b}) is not shared by exactly two consistently wound triangles"
                        )));
                    }
                }
            }
            Dimensionality::D1 => {}
        }
        Ok(())
    }

    pub fn centroid(&self) -> Vec3 {
        centroid_of(self.particles.iter().map(|p| p.position))
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    pub fn translate(&mut self, offset: Vec3) {
        for p in &mut self.particles {
            p.position += offset;
        }
    }

    /// Overwrites every particle's mass (the uniform-mass knob).
    pub fn set_uniform_mass(&mut self, mass: f64) {
        for p in &mut self.particles {
            p.mass = mass;
        }
    }
}

pub(crate) fn centroid_of(points: impl Iterator<Item = Vec3>) -> Vec3 {
    let mut sum = Vec3::ZERO;
    let mut count = 0usize;
    for p in points {
        sum += p;
        count += 1;
    }
    if count == 0 {
        Vec3::ZERO
    } else {
        sum / count as f64
    }
}

/// A spring-like pull between one particle and a free-floating anchor point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drag {
    /// Index of the body (within a session) that owns `target`.
    #[serde(default)]
    pub body: usize,
    pub target: usize,
    pub anchor: Vec3,
    pub ks: f64,
    pub kd: f64,
    pub active: bool,
}

impl Drag {
    pub fn inactive(body: usize, target: usize) -> Self {
        Drag { body, target, anchor: Vec3::ZERO, ks: 0.0, kd: 0.0, active: false }
    }
}

/// Zeroes all five force accumulators of every particle.
pub fn reset_forces(body: &mut SoftBody) {
    for p in &mut body.particles {
        p.forces = ForceAccumulators::default();
    }
}

/// Signed area (2D) or signed volume (3D) enclosed by the body's faces.
///
/// Positive when the faces are wound counter-clockwise seen from outside.
pub fn enclosed_measure(body: &SoftBody) -> Result<f64> {
    if body.layers.outer.len() < 3 || body.faces.len() < 3 {
        return Err(Error::DegenerateBody(format!(
            "{} boundary particles, {} faces",
            body.layers.outer.len(),
            body.faces.len()
        )));
    }
    let pos = |i: usize| body.particles[i].position;
    match body.dimensionality {
        Dimensionality::D1 => Err(Error::DegenerateBody("d1 bodies enclose nothing".into())),
        Dimensionality::D2 => {
            let twice: f64 = body
                .faces
                .iter()
                .map(|f| {
                    let (a, b) = (pos(f.indices[0]), pos(f.indices[1]));
                    a.x * b.y - b.x * a.y
                })
                .sum();
            Ok(0.5 * twice)
        }
        Dimensionality::D3 => {
            let six: f64 = body
                .faces
                .iter()
                .map(|f| {
                    let (a, b, c) = (pos(f.indices[0]), pos(f.indices[1]), pos(f.indices[2]));
                    a.dot(b.cross(c))
                })
                .sum();
            Ok(six / 6.0)
        }
    }
}

/// Index of the particle closest to `point`; ties go to the lowest index.
pub fn nearest_particle(body: &SoftBody, point: Vec3) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in body.particles.iter().enumerate() {
        let d = (p.position - point).length_squared();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyBody)
}

#[cfg(test)]
pub(crate) mod test_bodies {
    use super::*;

    pub fn particles(points: &[Vec3], mass: f64) -> Vec<Particle> {
        points.iter().enumerate().map(|(i, &p)| Particle::new(i, p, mass)).collect()
    }

    /// CCW unit square as a 2D loop.
    pub fn unit_square() -> SoftBody {
        let pts =
            [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let faces = (0..4).map(|i| Face::edge(i, (i + 1) % 4)).collect();
        SoftBody::new(
            Dimensionality::D2,
            particles(&pts, 1.0),
            Vec::new(),
            faces,
            Layers { outer: vec![0, 1, 2, 3], ..Default::default() },
        )
        .unwrap()
    }

    /// Regular octahedron with vertices at ±1 on each axis, outward CCW faces.
    pub fn octahedron() -> SoftBody {
        let pts = [Vec3::X, -Vec3::X, Vec3::Y, -Vec3::Y, Vec3::Z, -Vec3::Z];
        let tris = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
        SoftBody::new(
            Dimensionality::D3,
            particles(&pts, 1.0),
            Vec::new(),
            tris.iter().map(|t| Face::triangle(t[0], t[1], t[2])).collect(),
            Layers { outer: (0..6).collect(), ..Default::default() },
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_bodies::*;
    use super::*;

    fn tetra_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
        ((b - a).dot((c - a).cross(d - a))).abs() / 6.0
    }

    #[test]
    fn reset_zeroes_every_source() {
        let mut body = unit_square();
        for p in &mut body.particles {
            for s in ForceSource::ALL {
                *p.forces.get_mut(s) = Vec3::new(1.0, 2.0, 3.0);
            }
        }
        let before: Vec<_> = body.particles.iter().map(|p| (p.position, p.velocity)).collect();
        reset_forces(&mut body);
        for p in &body.particles {
            for s in ForceSource::ALL {
                assert_eq!(p.forces.get(s), Vec3::ZERO);
            }
        }
        let after: Vec<_> = body.particles.iter().map(|p| (p.position, p.velocity)).collect();
        assert_eq!(before, after);
        let once = body.clone();
        reset_forces(&mut body);
        assert_eq!(once, body);
    }

    #[test]
    fn reset_on_empty_body_is_noop() {
        let mut body = SoftBody::new(Dimensionality::D1, vec![], vec![], vec![], Layers::default()).unwrap();
        let copy = body.clone();
        reset_forces(&mut body);
        assert_eq!(body, copy);
    }

    #[test]
    fn unit_square_area_and_orientation() {
        let mut body = unit_square();
        assert_eq!(enclosed_measure(&body).unwrap(), 1.0);
        body.faces = body.faces.iter().map(Face::reversed).collect();
        assert_eq!(enclosed_measure(&body).unwrap(), -1.0);
    }

    #[test]
    fn octahedron_volume_matches_tetrahedron_decomposition() {
        let body = octahedron();
        // oracle: unsigned tetrahedra from the centroid to every face
        let c = body.centroid();
        let oracle: f64 = body
            .faces
            .iter()
            .map(|f| {
                let p = |k: usize| body.particles[f.indices[k]].position;
                tetra_volume(c, p(0), p(1), p(2))
            })
            .sum();
        assert!((oracle - 4.0 / 3.0).abs() < 1e-15);
        assert!((enclosed_measure(&body).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn degenerate_body_is_rejected() {
        let pts = [Vec3::ZERO, Vec3::X];
        let body = SoftBody::new(
            Dimensionality::D2,
            particles(&pts, 1.0),
            vec![],
            vec![Face::edge(0, 1), Face::edge(1, 0)],
            Layers { outer: vec![0, 1], ..Default::default() },
        )
        .unwrap();
        assert_eq!(enclosed_measure(&body).unwrap_err().code(), "degenerate-body");
    }

    #[test]
    fn nearest_particle_rules() {
        let pts = [Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0)];
        let body = SoftBody::new(Dimensionality::D1, particles(&pts, 1.0), vec![], vec![], Layers::default()).unwrap();
        assert_eq!(nearest_particle(&body, Vec3::new(0.4, 0.0, 0.0)).unwrap(), 0);
        assert_eq!(nearest_particle(&body, Vec3::new(1.0, 0.0, 0.0)).unwrap(), 0);
        assert_eq!(nearest_particle(&body, Vec3::new(1.9, 0.0, 0.0)).unwrap(), 1);

        let single =
            SoftBody::new(Dimensionality::D1, particles(&pts[..1], 1.0), vec![], vec![], Layers::default()).unwrap();
        assert_eq!(nearest_particle(&single, Vec3::new(-7.0, 3.0, 1.0)).unwrap(), 0);

        let empty = SoftBody::new(Dimensionality::D1, vec![], vec![], vec![], Layers::default()).unwrap();
        assert_eq!(nearest_particle(&empty, Vec3::ZERO), Err(Error::EmptyBody));
    }

    #[test]
    fn constructor_rejects_bad_indices() {
        let pts = [Vec3::ZERO, Vec3::X];
        let spring =
            |p1, p2| Spring { id: 0, p1, p2, rest_length: 1.0, ks: 1.0, kd: 0.0, kind: SpringKind::Structural };
        let err =
            SoftBody::new(Dimensionality::D1, particles(&pts, 1.0), vec![spring(0, 5)], vec![], Layers::default());
        assert_eq!(err.unwrap_err().code(), "invalid-body");
        let err =
            SoftBody::new(Dimensionality::D1, particles(&pts, 1.0), vec![spring(1, 1)], vec![], Layers::default());
        assert_eq!(err.unwrap_err().code(), "invalid-body");
        let err = SoftBody::new(Dimensionality::D1, particles(&pts, 0.0), vec![], vec![], Layers::default());
        assert_eq!(err.unwrap_err().code(), "invalid-body");
    }

    #[test]
    fn open_loop_is_rejected() {
        let mut body = unit_square();
        body.faces.pop();
        assert!(body.validate().is_err());
    }

    #[test]
    fn inconsistent_winding_is_rejected() {
        let mut body = octahedron();
        body.faces[0] = body.faces[0].reversed();
        assert!(body.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn measure_is_winding_antisymmetric(
            radii in proptest::collection::vec(0.2f64..3.0, 3..24),
            ox in -5.0f64..5.0, oy in -5.0f64..5.0,
        ) {
            let n = radii.len();
            let pts: Vec<Vec3> = radii.iter().enumerate().map(|(i, r)| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                Vec3::new(ox + r * a.cos(), oy + r * a.sin(), 0.0)
            }).collect();
            let faces: Vec<Face> = (0..n).map(|i| Face::edge(i, (i + 1) % n)).collect();
            let mut body = SoftBody::new(
                Dimensionality::D2,
                particles(&pts, 1.0),
                vec![],
                faces,
                Layers { outer: (0..n).collect(), ..Default::default() },
            ).unwrap();
            let forward = enclosed_measure(&body).unwrap();
            proptest::prop_assert!(forward > 0.0);
            body.faces = body.faces.iter().map(Face::reversed).collect();
            let backward = enclosed_measure(&body).unwrap();
            proptest::prop_assert!((forward + backward).abs() <= 1e-12 * forward.abs().max(1.0));
        }
    }
}
