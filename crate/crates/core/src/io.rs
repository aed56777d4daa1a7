//! CSV tables and key-value reports.
//!
//! Floats are written with 17 significant digits so that reading a file back
//! reproduces every value bit for bit. Lines starting with `#` after the data
//! carry trailers such as the model selector and skipped grid points.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::eos::AnsatzSpec;
use crate::error::{Error, Result};
use crate::family::{FamilyRow, FamilyTable, SkippedPoint};
use crate::phase_plane::{PlaneSample, PlaneTrajectory};
use crate::polytrope::DominanceReport;
use crate::spiral::SpiralFit;
use crate::steady_state::{ProfileSample, RadialProfile};

pub const FAMILY_HEADER: [&str; 4] = ["gamma", "eps", "R", "M"];
pub const PROFILE_HEADER: [&str; 5] = ["r", "y", "m", "rho", "p"];
pub const TRAJECTORY_HEADER: [&str; 3] = ["X", "v1", "v2"];
pub const ORBIT_HEADER: [&str; 4] = ["X", "v1", "v2", "s"];
pub const FIT_KEYS: [&str; 11] = ["Rc", "Mc", "a11", "a12", "a21", "a22", "nu", "decay", "rms", "window_lo", "window_hi"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// A parsed CSV file: header, numeric rows, and `#` trailer lines with the
/// marker stripped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub trailers: Vec<String>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("no column {name:?} (have {})", self.header.join(","))))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Trailer fields after `tag`, for every trailer `#tag,...`.
    pub fn tagged(&self, tag: &str) -> Vec<Vec<&str>> {
        self.trailers
            .iter()
            .filter_map(|t| {
                let mut it = t.split(',');
                (it.next() == Some(tag)).then(|| it.collect())
            })
            .collect()
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(Error::Parse(format!("expected header {}, found {}", expected.join(","), self.header.join(","))));
        }
        Ok(())
    }
}

pub fn write_csv<W: Write, R: AsRef<[f64]>>(out: W, header: &[&str], rows: &[R], trailers: &[String]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != header.len() {
            return Err(Error::Domain(format!("row {i} has {} fields, header has {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|&x| format_float(x))).map_err(csv_err)?;
    }
    let mut out = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    for t in trailers {
        writeln!(out, "#{t}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(mut input: R) -> Result<CsvTable> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut data = String::new();
    let mut trailers = Vec::new();
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(t) => trailers.push(t.to_string()),
            None if line.trim().is_empty() => {}
            None => {
                data.push_str(line);
                data.push('\n');
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(data.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(Error::Parse("missing header line".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(rec.iter().map(parse_float).collect::<Result<Vec<_>>>()?);
    }
    Ok(CsvTable { header, rows, trailers })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn read_csv_file(path: &Path) -> Result<CsvTable> {
    read_csv(open(path)?)
}

pub fn write_family<W: Write>(out: W, table: &FamilyTable) -> Result<()> {
    let rows: Vec<[f64; 4]> = table.rows.iter().map(|r| [r.gamma, r.eps, r.radius, r.mass]).collect();
    let mut trailers = vec![format!("model,{}", table.spec)];
    trailers.extend(table.skipped.iter().map(|s| format!("skip,{},{}", format_float(s.gamma), s.reason.replace([',', '\n'], ";"))));
    write_csv(out, &FAMILY_HEADER, &rows, &trailers)
}

pub fn read_family<R: Read>(input: R) -> Result<FamilyTable> {
    let csv = read_csv(input)?;
    csv.expect_header(&FAMILY_HEADER)?;
    let spec = csv
        .trailers
        .iter()
        .find_map(|t| t.strip_prefix("model,"))
        .ok_or_else(|| Error::Parse("family file has no #model trailer".into()))?
        .parse::<AnsatzSpec>()?;
    let rows = csv.rows.iter().map(|r| FamilyRow { gamma: r[0], eps: r[1], radius: r[2], mass: r[3] }).collect();
    let skipped = csv
        .tagged("skip")
        .into_iter()
        .map(|f| {
            Ok(SkippedPoint {
                gamma: parse_float(f.first().copied().unwrap_or_default())?,
                reason: f.get(1..).map(|r| r.join(",")).unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyTable { spec, rows, skipped })
}

pub fn write_family_file(path: &Path, table: &FamilyTable) -> Result<()> {
    write_family(create(path)?, table)
}

pub fn read_family_file(path: &Path) -> Result<FamilyTable> {
    read_family(open(path)?)
}

pub fn write_profile<W: Write>(out: W, profile: &RadialProfile) -> Result<()> {
    let rows: Vec<[f64; 5]> = profile.samples.iter().map(|s| [s.r, s.y, s.m, s.rho, s.p]).collect();
    write_csv(out, &PROFILE_HEADER, &rows, &[])
}

pub fn read_profile<R: Read>(input: R) -> Result<Vec<ProfileSample>> {
    let csv = read_csv(input)?;
    csv.expect_header(&PROFILE_HEADER)?;
    Ok(csv.rows.iter().map(|r| ProfileSample { r: r[0], y: r[1], m: r[2], rho: r[3], p: r[4] }).collect())
}

/// Writes `X,v1,v2`, with an `s` column when every sample carries one.
pub fn write_trajectory<W: Write>(out: W, traj: &PlaneTrajectory) -> Result<()> {
    let trailers = [format!("eps,{}", format_float(traj.eps))];
    if traj.samples.iter().all(|s| s.s.is_some()) && !traj.samples.is_empty() {
        let rows: Vec<[f64; 4]> = traj.samples.iter().map(|s| [s.x, s.v1, s.v2, s.s.unwrap_or(f64::NAN)]).collect();
        write_csv(out, &ORBIT_HEADER, &rows, &trailers)
    } else {
        let rows: Vec<[f64; 3]> = traj.samples.iter().map(|s| [s.x, s.v1, s.v2]).collect();
        write_csv(out, &TRAJECTORY_HEADER, &rows, &trailers)
    }
}

pub fn read_trajectory<R: Read>(input: R) -> Result<PlaneTrajectory> {
    let csv = read_csv(input)?;
    let with_s = csv.header.len() == 4;
    csv.expect_header(if with_s { &ORBIT_HEADER } else { &TRAJECTORY_HEADER })?;
    let eps = match csv.tagged("eps").first() {
        Some(f) => parse_float(f.first().copied().unwrap_or_default())?,
        None => f64::NAN,
    };
    let samples = csv.rows.iter().map(|r| PlaneSample { x: r[0], v1: r[1], v2: r[2], s: with_s.then(|| r[3]) }).collect();
    Ok(PlaneTrajectory::from_samples(eps, samples))
}

pub fn fit_values(fit: &SpiralFit) -> [(&'static str, f64); 11] {
    let a = &fit.amp;
    let v = [
        fit.center[0],
        fit.center[1],
        a[(0, 0)],
        a[(0, 1)],
        a[(1, 0)],
        a[(1, 1)],
        fit.nu,
        fit.decay,
        fit.rms_resid,
        fit.window.lo,
        fit.window.hi,
    ];
    std::array::from_fn(|i| (FIT_KEYS[i], v[i]))
}

/// `key=value` lines.
pub fn key_value_text(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn fit_report_text(fit: &SpiralFit) -> String {
    let pairs: Vec<(&str, String)> = fit_values(fit).iter().map(|&(k, v)| (k, format_float(v))).collect();
    key_value_text(&pairs)
}

/// Trailer lines `fit,key,value` for appending to a CSV.
pub fn fit_trailers(fit: &SpiralFit) -> Vec<String> {
    fit_values(fit).iter().map(|&(k, v)| format!("fit,{k},{}", format_float(v))).collect()
}

pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("not a key=value line: {l:?}")))
        })
        .collect()
}

/// The fit keys of a report in `FIT_KEYS` order.
pub fn parse_fit_report(text: &str) -> Result<[f64; 11]> {
    let kv = parse_key_values(text)?;
    let mut out = [0.0; 11];
    for (i, key) in FIT_KEYS.iter().enumerate() {
        let v = kv.iter().find(|(k, _)| k == key).ok_or_else(|| Error::Parse(format!("fit report lacks {key}")))?;
        out[i] = parse_float(&v.1)?;
    }
    Ok(out)
}

/// `slope, slope_expected, C_fitted, verdict` report.
pub fn poly_report_text(slope: f64, slope_expected: Option<f64>, c_fitted: f64, verdict: bool) -> String {
    key_value_text(&[
        ("slope", format_float(slope)),
        ("slope_expected", slope_expected.map_or_else(|| "none".to_string(), format_float)),
        ("C_fitted", format_float(c_fitted)),
        ("verdict", verdict.to_string()),
    ])
}

pub fn dominance_report_text(rep: &DominanceReport) -> String {
    poly_report_text(rep.slope, rep.slope_expected, rep.c_fitted, rep.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    use crate::spiral::{FitMode, Window};

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv::<_, [f64; 4]>(&mut buf, &FAMILY_HEADER, &[], &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "gamma,eps,R,M\n");
    }

    #[test]
    fn arity_mismatch_rejected() {
        let mut buf = Vec::new();
        assert!(matches!(write_csv(&mut buf, &["a", "b"], &[[1.0]], &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn family_round_trip_is_bit_exact() {
        let rows = vec![
            FamilyRow { gamma: 0.1, eps: 1.0 / 3.0, radius: std::f64::consts::PI, mass: 1e-300 },
            FamilyRow { gamma: 28.0, eps: 5e-324, radius: 0.1 + 0.2, mass: f64::MAX },
        ];
        let mut t = FamilyTable::new(AnsatzSpec::KING, rows);
        t.skipped.push(SkippedPoint { gamma: 27.5, reason: "no zero, y > 0".into() });
        let mut buf = Vec::new();
        write_family(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().any(|l| l.starts_with("#skip,")));
        assert!(!text.contains("\r") && !text.lines().any(|l| l.ends_with(',')));
        let back = read_family(buf.as_slice()).unwrap();
        assert_eq!(back.spec, t.spec);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
            assert_eq!(a.eps.to_bits(), b.eps.to_bits());
            assert_eq!(a.radius.to_bits(), b.radius.to_bits());
            assert_eq!(a.mass.to_bits(), b.mass.to_bits());
        }
        assert_eq!(back.skipped[0].gamma, 27.5);
        assert_eq!(back.skipped[0].reason, "no zero; y > 0");
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn trajectory_columns() {
        let samples = vec![PlaneSample { x: 1.0, v1: 0.0, v2: 0.0, s: Some(-3.0) }, PlaneSample { x: 2.0, v1: 0.5, v2: 1.5, s: Some(-2.0) }];
        let t = PlaneTrajectory::from_samples(0.0, samples);
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t).unwrap();
        assert!(buf.starts_with(b"X,v1,v2,s\n"));
        let back = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back.samples, t.samples);
        assert_eq!(back.eps, 0.0);
    }

    #[test]
    fn fit_report_round_trip() {
        let fit = SpiralFit {
            center: [0.28, 0.13],
            amp: Matrix2::new(0.1, -0.2, 0.3, 0.05),
            nu: 0.66,
            decay: 0.25,
            rms_resid: 0.01,
            window: Window { lo: -30.0, hi: -11.0 },
            mode: FitMode::Fixed,
            iterations: 7,
        };
        let text = fit_report_text(&fit);
        let keys: Vec<String> = parse_key_values(&text).unwrap().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, FIT_KEYS);
        let v = parse_fit_report(&text).unwrap();
        assert_eq!(v[1], 0.13);
        assert_eq!(v[3], -0.2);
        assert_eq!(v[10], -11.0);
        assert!(fit_trailers(&fit)[0].starts_with("fit,Rc,"));
    }

    #[test]
    fn poly_report_keys() {
        let text = poly_report_text(0.2, None, 1.5, true);
        let kv = parse_key_values(&text).unwrap();
        let keys: Vec<&str> = kv.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["slope", "slope_expected", "C_fitted", "verdict"]);
        assert_eq!(kv[3].1, "true");
    }
}
