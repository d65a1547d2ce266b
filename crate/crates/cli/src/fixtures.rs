use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use widthlab::stability::{assemble_forms, catenoid_mesh, geodesic_disk_mesh, minimality_gate, MINIMALITY_TOL};
use widthlab::varifold::{doubled_disk, equatorial_disk, offcenter_disk};
use widthlab::Curvature;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    EquatorialDisk,
    OffcenterDisk,
    DoubledDisk,
    CriticalCatenoid,
    GeodesicDiskHyperbolic,
}

impl Fixture {
    pub const ALL: [Fixture; 5] = [
        Fixture::EquatorialDisk,
        Fixture::OffcenterDisk,
        Fixture::DoubledDisk,
        Fixture::CriticalCatenoid,
        Fixture::GeodesicDiskHyperbolic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::EquatorialDisk => "equatorial-disk",
            Fixture::OffcenterDisk => "offcenter-disk",
            Fixture::DoubledDisk => "doubled-disk",
            Fixture::CriticalCatenoid => "critical-catenoid",
            Fixture::GeodesicDiskHyperbolic => "geodesic-disk-hyperbolic",
        }
    }

    /// Grid cells per unit for varifolds, rows or rings for meshes.
    pub fn default_resolution(self) -> usize {
        match self {
            Fixture::CriticalCatenoid => 64,
            Fixture::GeodesicDiskHyperbolic => 16,
            _ => 100,
        }
    }
}

impl FromStr for Fixture {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown fixture `{s}`")))
    }
}

/// Writes a fixture: JSON lines of atoms for varifolds, the OFF-like mesh
/// format for surfaces. The catenoid mesh must pass the minimality gate.
pub fn export_fixture(fixture: Fixture, resolution: Option<usize>, path: &Path) -> Result<(), CliError> {
    let res = resolution.unwrap_or(fixture.default_resolution());
    if res == 0 {
        return Err(CliError::Config("resolution must be positive".into()));
    }
    let varifold = match fixture {
        Fixture::EquatorialDisk => Some(equatorial_disk(3, 2, res)?),
        Fixture::OffcenterDisk => Some(offcenter_disk(0.5, res)?),
        Fixture::DoubledDisk => Some(doubled_disk(3, 2, res)?),
        _ => None,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let out = BufWriter::new(File::create(path)?);
    if let Some(v) = varifold {
        v.write_json_lines(out)?;
        return Ok(());
    }
    let mut mesh = match fixture {
        Fixture::CriticalCatenoid => catenoid_mesh(res)?,
        _ => geodesic_disk_mesh(Curvature(-1.0), 1.0, res)?,
    };
    if fixture == Fixture::CriticalCatenoid {
        let forms = assemble_forms(&mut mesh)?;
        minimality_gate(&mesh, &forms, MINIMALITY_TOL)?;
    }
    mesh.write_off(out)?;
    Ok(())
}
