//! CSV writers. Floats use Rust's shortest round-trip formatting, so equal
//! values always print identically.

use std::io::Write;

use crate::geometry::SphericalZone;
use crate::precoding::BeamGrid;
use crate::simulation::MetricsReport;
use crate::{to_db, Result};

pub const SWEEP_HEADER: &str = "dx_m,method,avg_sinr_db,sat_prob,n_samples";
pub const CDF_HEADER: &str = "method,dx_m,sinr_db,cdf";
pub const BEAMPATTERN_HEADER: &str = "x,y,z,gain_linear,gain_db";
pub const ZONE_HEADER: &str = "user,x,y,z,radius_m,target";

/// One row per (Δx, method). `sat_prob` is the min-over-users satisfaction
/// probability averaged over trials.
pub fn write_metrics<W: Write>(out: &mut W, reports: &[MetricsReport]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in reports {
        for m in &r.methods {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.move_distance_m, m.method, m.avg_sinr_db, m.satisfaction, m.n_samples
            )?;
        }
    }
    Ok(())
}

pub fn write_cdf<W: Write>(out: &mut W, reports: &[MetricsReport]) -> Result<()> {
    writeln!(out, "{CDF_HEADER}")?;
    for r in reports {
        for m in &r.methods {
            for (db, p) in &m.cdf {
                writeln!(out, "{},{},{},{}", m.method, r.move_distance_m, db, p)?;
            }
        }
    }
    Ok(())
}

pub fn write_beampattern<W: Write>(out: &mut W, grid: &BeamGrid) -> Result<()> {
    writeln!(out, "{BEAMPATTERN_HEADER}")?;
    for (p, g) in grid.points.iter().zip(&grid.gains) {
        writeln!(out, "{},{},{},{},{}", p.x, p.y, p.z, g, to_db(*g))?;
    }
    Ok(())
}

/// Zone centers and radii for plot overlays; `user` is 1-based.
pub fn write_zones<W: Write>(out: &mut W, zones: &[SphericalZone], target: usize) -> Result<()> {
    writeln!(out, "{ZONE_HEADER}")?;
    for (k, z) in zones.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            k + 1,
            z.center.x,
            z.center.y,
            z.center.z,
            z.radius,
            u8::from(k + 1 == target)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::precoding::{BeamRegion, BeamGrid};
    use crate::simulation::{Method, MethodMetrics};

    fn report() -> MetricsReport {
        MetricsReport {
            move_distance_m: 0.056,
            methods: vec![MethodMetrics {
                method: Method::ZeroForcing,
                avg_sinr_linear: 100.0,
                avg_sinr_db: 20.0,
                satisfaction: 0.5,
                fraction_above_target: 0.5,
                n_samples: 4,
                cdf: vec![(19.5, 0.25), (20.0, 1.0)],
            }],
        }
    }

    #[test]
    fn metrics_rows() {
        let mut buf = Vec::new();
        write_metrics(&mut buf, &[report()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "dx_m,method,avg_sinr_db,sat_prob,n_samples\n0.056,zf,20,0.5,4\n"
        );
    }

    #[test]
    fn cdf_rows() {
        let mut buf = Vec::new();
        write_cdf(&mut buf, &[report()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "method,dx_m,sinr_db,cdf\nzf,0.056,19.5,0.25\nzf,0.056,20,1\n"
        );
    }

    #[test]
    fn beampattern_rows() {
        let p = Vec3::new(1.0, 0.0, 1.5);
        let grid = BeamGrid {
            region: BeamRegion { min: p, max: p, steps: [1, 1, 1] },
            points: vec![p],
            gains: vec![10.0],
        };
        let mut buf = Vec::new();
        write_beampattern(&mut buf, &grid).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,z,gain_linear,gain_db\n1,0,1.5,10,10\n");
    }

    #[test]
    fn zone_rows() {
        let zones = [
            SphericalZone::new(Vec3::new(2.0, 0.0, 1.5), 0.1).unwrap(),
            SphericalZone::new(Vec3::new(3.0, 1.0, 1.5), 0.1).unwrap(),
        ];
        let mut buf = Vec::new();
        write_zones(&mut buf, &zones, 2).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.ends_with("2,3,1,1.5,0.1,1\n"));
    }
}
