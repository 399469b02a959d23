//! Per-frame CSV dumps of the full session state.
//!
//! Particle rows and spring rows go to two files. Reals are written in Rust's
//! shortest round-trip form, so parsing a dumped value gives back the exact
//! in-memory `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::model::ForceSource;
use crate::session::Session;

pub const PARTICLE_HEADER: &str =
    "frame,t,body,pid,px,py,pz,vx,vy,vz,fgx,fgy,fgz,fsx,fsy,fsz,fpx,fpy,fpz,fdx,fdy,fdz,fcx,fcy,fcz";
pub const SPRING_HEADER: &str = "frame,body,sid,kind,p1,p2,rest,len";

/// Sibling path for spring rows: `run.csv` becomes `run.springs.csv`.
pub fn springs_path(particles: &Path) -> PathBuf {
    let stem = particles.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    particles.with_file_name(format!("{stem}.springs.csv"))
}

pub struct DumpWriter<W: Write> {
    particles: W,
    springs: W,
    header_written: bool,
}

impl DumpWriter<BufWriter<File>> {
    /// Creates `path` for particle rows and its `.springs.csv` sibling.
    pub fn create(path: &Path) -> Result<Self> {
        let open =
            |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| Error::DumpIo(format!("{}: {e}", p.display())));
        Ok(DumpWriter::new(open(path)?, open(&springs_path(path))?))
    }
}

impl<W: Write> DumpWriter<W> {
    pub fn new(particles: W, springs: W) -> Self {
        DumpWriter { particles, springs, header_written: false }
    }

    /// Appends the session's current state as frame `session.clock.step`.
    pub fn dump_frame(&mut self, session: &Session) -> Result<()> {
        if !self.header_written {
            writeln!(self.particles, "{PARTICLE_HEADER}")?;
            writeln!(self.springs, "{SPRING_HEADER}")?;
            self.header_written = true;
        }
        let frame = session.clock.step;
        let t = session.clock.t;
        let mut line = String::with_capacity(512);
        for (b, body) in session.bodies.iter().enumerate() {
            for (pid, p) in body.particles.iter().enumerate() {
                line.clear();
                line.push_str(&format!("{frame},{t:?},{b},{pid}"));
                push_vec(&mut line, p.position);
                push_vec(&mut line, p.velocity);
                for source in ForceSource::ALL {
                    push_vec(&mut line, p.forces.get(source));
                }
                writeln!(self.particles, "{line}")?;
            }
            for s in &body.springs {
                let len = body.particles[s.p1].position.distance(body.particles[s.p2].position);
                writeln!(
                    self.springs,
                    "{frame},{b},{},{},{},{},{:?},{len:?}",
                    s.id,
                    s.kind.name(),
                    s.p1,
                    s.p2,
                    s.rest_length
                )?;
            }
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.particles.flush()?;
        self.springs.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> (W, W) {
        (self.particles, self.springs)
    }
}

fn push_vec(line: &mut String, v: Vec3) {
    line.push_str(&format!(",{:?},{:?},{:?}", v.x, v.y, v.z));
}

/// One parsed particle row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRow {
    pub frame: u64,
    pub t: f64,
    pub body: usize,
    pub pid: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    /// In [`ForceSource::ALL`] order.
    pub forces: [Vec3; 5],
}

/// Parses a particle dump, header included.
pub fn parse_particle_rows(text: &str) -> Result<Vec<ParticleRow>> {
    let bad = |n: usize, m: &str| Error::DumpIo(format!("line {}: {m}", n + 1));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == PARTICLE_HEADER => {}
        _ => return Err(bad(0, "missing particle header")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 25 {
            return Err(bad(n, "expected 25 columns"));
        }
        let real = |i: usize| cols[i].parse::<f64>().map_err(|_| bad(n, "bad real"));
        let int = |i: usize| cols[i].parse::<u64>().map_err(|_| bad(n, "bad integer"));
        let vec = |i: usize| -> Result<Vec3> { Ok(Vec3::new(real(i)?, real(i + 1)?, real(i + 2)?)) };
        rows.push(ParticleRow {
            frame: int(0)?,
            t: real(1)?,
            body: int(2)? as usize,
            pid: int(3)? as usize,
            position: vec(4)?,
            velocity: vec(7)?,
            forces: [vec(10)?, vec(13)?, vec(16)?, vec(19)?, vec(22)?],
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::BoxWorld;
    use crate::model::{Dimensionality, Layers, Particle, SoftBody};
    use crate::params::SimParams;
    use crate::scenario::build_scenario;

    fn dump_to_strings(session: &Session, frames: usize) -> (String, String) {
        let mut w = DumpWriter::new(Vec::new(), Vec::new());
        let mut s = session.clone();
        w.dump_frame(&s).unwrap();
        for _ in 1..frames {
            s.step().unwrap();
            w.dump_frame(&s).unwrap();
        }
        let (p, sp) = w.into_inner();
        (String::from_utf8(p).unwrap(), String::from_utf8(sp).unwrap())
    }

    #[test]
    fn one_particle_one_row() {
        let mut s = Session::new(SimParams::default(), BoxWorld::default()).unwrap();
        let body = SoftBody::new(
            Dimensionality::D1,
            vec![Particle::new(0, Vec3::new(0.1, 2.0, 0.3), 1.0)],
            vec![],
            vec![],
            Layers { outer: vec![0], ..Layers::default() },
        )
        .unwrap();
        s.add_body(body).unwrap();
        let (p, sp) = dump_to_strings(&s, 3);
        assert_eq!(p.lines().count(), 1 + 3);
        assert_eq!(sp.lines().count(), 1);
        assert_eq!(p.lines().next().unwrap(), PARTICLE_HEADER);
    }

    #[test]
    fn row_counts_match_state() {
        let s = build_scenario("ring2d-center", &SimParams::default()).unwrap();
        let (p, sp) = dump_to_strings(&s, 4);
        let body = &s.bodies[0];
        assert_eq!(p.lines().count() - 1, 4 * body.len());
        assert_eq!(sp.lines().count() - 1, 4 * body.springs.len());
    }

    #[test]
    fn dumped_values_round_trip_exactly() {
        let mut s = build_scenario("jellyfish2d", &SimParams::default()).unwrap();
        s.run(57).unwrap();
        let (p, _) = dump_to_strings(&s, 1);
        let rows = parse_particle_rows(&p).unwrap();
        let body = &s.bodies[0];
        assert_eq!(rows.len(), body.len());
        for row in rows {
            let particle = &body.particles[row.pid];
            assert_eq!(row.position, particle.position);
            assert_eq!(row.velocity, particle.velocity);
            for (k, source) in ForceSource::ALL.into_iter().enumerate() {
                assert_eq!(row.forces[k], particle.forces.get(source));
            }
            assert_eq!(row.t, s.clock.t);
        }
    }

    #[test]
    fn identical_states_give_identical_rows() {
        let s = build_scenario("sphere3d", &SimParams::default()).unwrap();
        let mut w = DumpWriter::new(Vec::new(), Vec::new());
        w.dump_frame(&s).unwrap();
        let mut later = s.clone();
        later.clock.step = 7;
        later.clock.t = 0.5;
        w.dump_frame(&later).unwrap();
        let (p, sp) = w.into_inner();
        let strip = |text: Vec<u8>, skip: usize| -> Vec<String> {
            String::from_utf8(text)
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| l.splitn(skip + 1, ',').last().unwrap().to_string())
                .collect()
        };
        let rows = strip(p, 2);
        let half = rows.len() / 2;
        assert_eq!(rows[..half], rows[half..]);
        let springs = strip(sp, 1);
        let half = springs.len() / 2;
        assert_eq!(springs[..half], springs[half..]);
    }

    #[test]
    fn sink_failure_is_dump_io() {
        struct Broken;
        impl Write for Broken {
            fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("disk full"))
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let s = build_scenario("ring2d", &SimParams::default()).unwrap();
        let mut w = DumpWriter::new(Broken, Broken);
        assert_eq!(w.dump_frame(&s).unwrap_err().code(), "dump-io");
    }

    #[test]
    fn springs_file_sits_next_to_particles() {
        assert_eq!(springs_path(Path::new("/tmp/out/run.csv")), PathBuf::from("/tmp/out/run.springs.csv"));
    }
}
