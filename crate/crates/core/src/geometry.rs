//! Procedural body builders: 1D chain, 2D layered ring, 3D subdivided sphere
//! and the revolved 3D bell.
//!
//! Every builder sets spring rest lengths to the as-built distances, so a
//! fresh body is in equilibrium under its springs. Gas pressure starts at
//! zero; scenarios decide how much to pressurize.

use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::curve::BezierPath;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::model::{
    centroid_of, enclosed_measure, Dimensionality, Face, Layers, Particle, SoftBody, Spring, SpringKind,
};
use crate::params::SimParams;

/// Profile points closer than this to the revolution axis collapse to one particle.
pub const WELD_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub particles_per_layer: u32,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub center: Vec3,
    pub with_center_particle: bool,
}

impl RingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.particles_per_layer < 3 {
            return Err(Error::InvalidSpec(format!(
                "ring needs at least 3 particles per layer, got {}",
                self.particles_per_layer
            )));
        }
        if !(self.outer_radius > self.inner_radius && self.inner_radius > 0.0 && self.outer_radius.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "ring radii must satisfy outer > inner > 0, got {} and {}",
                self.outer_radius, self.inner_radius
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidSpec("ring center must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub iterations: u32,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub center: Vec3,
    pub two_layer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellSpec {
    /// Cubic Bezier profile in the (radial, height) plane; `x` is the distance
    /// from the revolution axis and `y` the height relative to `apex`.
    pub profile_control_points: Vec<Vec3>,
    pub profile_samples: u32,
    pub slices: u32,
    pub apex: Vec3,
}

impl BellSpec {
    /// Default dome profile: starts on the axis, flares out, tucks in at the rim.
    pub fn default_profile() -> Vec<Vec3> {
        vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.55, 0.0, 0.0), Vec3::new(0.9, -0.35, 0.0), Vec3::new(0.8, -0.8, 0.0)]
    }

    pub fn from_params(params: &SimParams, apex: Vec3) -> Self {
        BellSpec {
            profile_control_points: Self::default_profile(),
            profile_samples: params.geometry.bell_profile_points,
            slices: params.geometry.bell_slices,
            apex,
        }
    }
}

struct Builder {
    particles: Vec<Particle>,
    springs: Vec<Spring>,
    mass: f64,
}

impl Builder {
    fn new(params: &SimParams) -> Self {
        Builder { particles: Vec::new(), springs: Vec::new(), mass: params.default_mass }
    }

    fn particle(&mut self, position: Vec3) -> usize {
        let id = self.particles.len();
        self.particles.push(Particle::new(id, position, self.mass));
        id
    }

    fn spring(&mut self, p1: usize, p2: usize, kind: SpringKind, params: &SimParams) {
        let c = params.springs.get(kind);
        self.springs.push(Spring {
            id: self.springs.len(),
            p1,
            p2,
            rest_length: self.particles[p1].position.distance(self.particles[p2].position),
            ks: c.ks,
            kd: c.kd,
            kind,
        });
    }
}

/// `n` particles along +x from the origin, joined by `n - 1` structural springs.
pub fn build_chain_1d(n: usize, spacing: f64, params: &SimParams) -> Result<SoftBody> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("chain needs at least 2 particles, got {n}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidSpec(format!("chain spacing must be positive, got {spacing}")));
    }
    let mut b = Builder::new(params);
    for i in 0..n {
        b.particle(Vec3::new(i as f64 * spacing, 0.0, 0.0));
    }
    for i in 0..n - 1 {
        b.spring(i, i + 1, SpringKind::Structural, params);
    }
    let layers = Layers { outer: (0..n).collect(), ..Default::default() };
    SoftBody::new(Dimensionality::D1, b.particles, b.springs, Vec::new(), layers)
}

/// Two concentric rings of `N` particles each, angularly aligned.
///
/// Particles `0..N` form the outer ring, `N..2N` the inner one. Springs, in
/// order: outer ring edges, inner ring edges, radial links, then two shear
/// links per outer particle. Faces are the outer ring's CCW edges.
pub fn build_ring_2d(spec: &RingSpec, params: &SimParams) -> Result<SoftBody> {
    spec.validate()?;
    let n = spec.particles_per_layer as usize;
    let mut b = Builder::new(params);
    for radius in [spec.outer_radius, spec.inner_radius] {
        for i in 0..n {
            let a = TAU * i as f64 / n as f64;
            b.particle(spec.center + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0));
        }
    }
    for offset in [0, n] {
        for i in 0..n {
            b.spring(offset + i, offset + (i + 1) % n, SpringKind::Structural, params);
        }
    }
    for i in 0..n {
        b.spring(i, n + i, SpringKind::Radial, params);
    }
    for i in 0..n {
        b.spring(i, n + (i + 1) % n, SpringKind::Shear, params);
        b.spring(i, n + (i + n - 1) % n, SpringKind::Shear, params);
    }
    let faces = (0..n).map(|i| Face::edge(i, (i + 1) % n)).collect();
    let layers = Layers { outer: (0..n).collect(), inner: (n..2 * n).collect(), center: None };
    let mut body = SoftBody::new(Dimensionality::D2, b.particles, b.springs, faces, layers)?;
    if spec.with_center_particle {
        add_center_particle(&mut body, params)?;
    }
    Ok(body)
}

/// Appends a particle at the inner layer's centroid, tied to every inner
/// particle by a center spring.
pub fn add_center_particle(body: &mut SoftBody, params: &SimParams) -> Result<()> {
    if body.layers.center.is_some() {
        return Err(Error::CenterExists);
    }
    if body.dimensionality == Dimensionality::D1 || body.layers.inner.len() < 3 {
        return Err(Error::InvalidSpec("center particle needs a 2D/3D body with an inner layer".into()));
    }
    let centroid = centroid_of(body.layers.inner.iter().map(|&i| body.particles[i].position));
    let id = body.particles.len();
    body.particles.push(Particle::new(id, centroid, params.default_mass));
    let c = params.springs.center;
    for &i in &body.layers.inner {
        body.springs.push(Spring {
            id: body.springs.len(),
            p1: id,
            p2: i,
            rest_length: centroid.distance(body.particles[i].position),
            ks: c.ks,
            kd: c.kd,
            kind: SpringKind::Center,
        });
    }
    if let Some(st) = body.staggered.as_mut() {
        st.push(Vec3::ZERO);
    }
    body.layers.center = Some(id);
    body.validate()
}

/// Unit-sphere vertices and CCW triangles of an octahedron subdivided `k` times.
pub fn subdivided_octahedron(k: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut verts = vec![Vec3::X, -Vec3::X, Vec3::Y, -Vec3::Y, Vec3::Z, -Vec3::Z];
    let mut tris: Vec<[usize; 3]> =
        vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    for _ in 0..k {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let mut mid = |i: usize, j: usize| {
                let key = (i.min(j), i.max(j));
                *midpoints.entry(key).or_insert_with(|| {
                    let m = ((verts[i] + verts[j]) * 0.5).normalized().expect("antipodal edge");
                    verts.push(m);
                    verts.len() - 1
                })
            };
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    (verts, tris)
}

/// Unique undirected edges in first-seen order.
fn unique_edges(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if seen.insert((a.min(b), a.max(b))) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Octahedron subdivided `iterations` times and projected onto the sphere.
///
/// Outer vertices come first; with `two_layer` an inner copy at the inner
/// radius follows, tied by radial springs vertex to vertex and shear springs
/// to the inner one-ring neighbours.
pub fn build_sphere_3d(spec: &SphereSpec, params: &SimParams) -> Result<SoftBody> {
    let cap = params.geometry.subdivision_cap;
    if spec.iterations > cap {
        return Err(Error::LodCap { iterations: spec.iterations, cap });
    }
    let radii_ok = if spec.two_layer {
        spec.outer_radius > spec.inner_radius && spec.inner_radius > 0.0
    } else {
        spec.outer_radius > 0.0
    };
    if !radii_ok || !spec.outer_radius.is_finite() || !spec.center.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "sphere radii must satisfy outer > inner > 0, got {} and {}",
            spec.outer_radius, spec.inner_radius
        )));
    }
    let (unit, tris) = subdivided_octahedron(spec.iterations);
    let v = unit.len();
    let edges = unique_edges(&tris);

    let mut b = Builder::new(params);
    for &u in &unit {
        b.particle(spec.center + u * spec.outer_radius);
    }
    for &(a, c) in &edges {
        b.spring(a, c, SpringKind::Structural, params);
    }
    let mut layers = Layers { outer: (0..v).collect(), ..Default::default() };
    if spec.two_layer {
        for &u in &unit {
            b.particle(spec.center + u * spec.inner_radius);
        }
        for &(a, c) in &edges {
            b.spring(v + a, v + c, SpringKind::Structural, params);
        }
        for i in 0..v {
            b.spring(i, v + i, SpringKind::Radial, params);
        }
        for &(a, c) in &edges {
            b.spring(a, v + c, SpringKind::Shear, params);
            b.spring(c, v + a, SpringKind::Shear, params);
        }
        layers.inner = (v..2 * v).collect();
    }
    let faces = tris.iter().map(|t| Face::triangle(t[0], t[1], t[2])).collect();
    SoftBody::new(Dimensionality::D3, b.particles, b.springs, faces, layers)
}

/// Revolves a sampled Bezier profile around the vertical axis through `apex`.
///
/// Samples on the axis weld into a single particle, so the default profile
/// (which starts at the apex) yields `1 + (samples - 1) * slices` particles.
/// Rings and meridians get structural springs, quad diagonals get shear
/// springs. An open rim is closed for pressure by a fan of triangles from the
/// first rim particle.
pub fn build_bell_3d(spec: &BellSpec, params: &SimParams) -> Result<SoftBody> {
    if spec.profile_samples < 3 || spec.slices < 3 {
        return Err(Error::InvalidSpec(format!(
            "bell needs at least 3 profile samples and 3 slices, got {} and {}",
            spec.profile_samples, spec.slices
        )));
    }
    if !spec.apex.is_finite() {
        return Err(Error::InvalidSpec("bell apex must be finite".into()));
    }
    let profile = BezierPath::new(spec.profile_control_points.clone());
    let samples = spec.profile_samples as usize;
    let slices = spec.slices as usize;

    let mut b = Builder::new(params);
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(samples);
    let mut welded = Vec::with_capacity(samples);
    for j in 0..samples {
        let q = profile.point(j as f64 / (samples - 1) as f64)?;
        let r = q.x.hypot(q.z);
        if r < WELD_DISTANCE {
            let id = b.particle(spec.apex + Vec3::new(0.0, q.y, 0.0));
            rings.push(vec![id; slices]);
            welded.push(true);
        } else {
            let ring = (0..slices)
                .map(|s| {
                    let phi = TAU * s as f64 / slices as f64;
                    b.particle(spec.apex + Vec3::new(r * phi.cos(), q.y, r * phi.sin()))
                })
                .collect();
            rings.push(ring);
            welded.push(false);
        }
    }
    if welded.iter().all(|&w| w) {
        return Err(Error::InvalidSpec("bell profile lies entirely on the axis".into()));
    }

    for j in 0..samples {
        if !welded[j] {
            for s in 0..slices {
                b.spring(rings[j][s], rings[j][(s + 1) % slices], SpringKind::Structural, params);
            }
        }
    }
    for j in 0..samples - 1 {
        if welded[j] && welded[j + 1] {
            b.spring(rings[j][0], rings[j + 1][0], SpringKind::Structural, params);
            continue;
        }
        for (&a, &c) in rings[j].iter().zip(&rings[j + 1]) {
            b.spring(a, c, SpringKind::Structural, params);
        }
        if !welded[j] && !welded[j + 1] {
            for s in 0..slices {
                let t = (s + 1) % slices;
                b.spring(rings[j][s], rings[j + 1][t], SpringKind::Shear, params);
                b.spring(rings[j][t], rings[j + 1][s], SpringKind::Shear, params);
            }
        }
    }

    let mut faces = Vec::new();
    for j in 0..samples - 1 {
        if welded[j] && welded[j + 1] {
            continue;
        }
        for s in 0..slices {
            let t = (s + 1) % slices;
            let (a, bb, c, d) = (rings[j][s], rings[j][t], rings[j + 1][t], rings[j + 1][s]);
            if welded[j] {
                faces.push(Face::triangle(a, c, d));
            } else if welded[j + 1] {
                faces.push(Face::triangle(a, bb, c));
            } else {
                faces.push(Face::triangle(a, bb, c));
                faces.push(Face::triangle(a, c, d));
            }
        }
    }
    let top = &rings[0];
    if !welded[0] {
        for s in 1..slices - 1 {
            faces.push(Face::triangle(top[0], top[s + 1], top[s]));
        }
    }
    let rim = &rings[samples - 1];
    if !welded[samples - 1] {
        for s in 1..slices - 1 {
            faces.push(Face::triangle(rim[0], rim[s], rim[s + 1]));
        }
    }

    let n = b.particles.len();
    let layers = Layers { outer: (0..n).collect(), ..Default::default() };
    let mut body = SoftBody::new(Dimensionality::D3, b.particles, b.springs, faces, layers)?;
    if enclosed_measure(&body)? < 0.0 {
        body.faces = body.faces.iter().map(Face::reversed).collect();
    }
    Ok(body)
}
