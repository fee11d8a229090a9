//! Station dataset type and its plain-text file format.
//!
//! The format is line-oriented: a versioned header of `key = value` pairs,
//! a `records:` marker, then one record per line as `n m x t` with `x`
//! written `+1`/`-1` and `t` printed with full round-trip precision, so
//! `read(write(dataset)) == dataset` bit-exactly.

use crate::eprb::StationConfig;
use crate::stream::StreamRole;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const FORMAT_HEADER: &str = "epsim-station-dataset v1";

/// One detection event: index, setting index (1-based), outcome, time-tag,
/// and applied rotation angle (degrees, echoed from the setting table).
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub n: u64,
    pub m: u32,
    pub x: i8,
    pub t: f64,
    pub gamma_deg: f64,
}

/// The complete log of one station: configuration echo plus records.
#[derive(Debug, Clone, PartialEq)]
pub struct StationDataset {
    pub station: u8,
    pub angles_deg: Vec<f64>,
    pub t0: f64,
    pub d: f64,
    pub seed: u64,
    pub records: Vec<EventRecord>,
}

impl StationDataset {
    pub fn for_config(station: u8, cfg: &StationConfig, seed: u64, capacity: u64) -> Self {
        StationDataset {
            station,
            angles_deg: cfg.angles_deg.clone(),
            t0: cfg.t0,
            d: cfg.d,
            seed,
            records: Vec::with_capacity(capacity.min(1 << 24) as usize),
        }
    }

    pub fn settings(&self) -> u32 {
        self.angles_deg.len() as u32
    }

    /// Setting angle for record index `m` (1-based), radians.
    pub fn angle_rad(&self, m: u32) -> f64 {
        self.angles_deg[(m - 1) as usize].to_radians()
    }
}

fn header_line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

/// Render the header block for a station configuration. Exposed so the
/// streaming writer and the in-memory writer produce identical bytes.
fn render_header(
    station: u8,
    angles_deg: &[f64],
    t0: f64,
    d: f64,
    seed: u64,
    events: u64,
    digest: Option<&str>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    header_line(&mut out, "station", station);
    header_line(&mut out, "events", events);
    header_line(&mut out, "settings", angles_deg.len());
    let angles = angles_deg
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",");
    header_line(&mut out, "angles_deg", angles);
    header_line(&mut out, "t0", t0);
    header_line(&mut out, "d", d);
    header_line(&mut out, "seed", seed);
    // Stream ids are fixed per role; echoed so a file names its sources.
    let (settings_stream, delay_stream) = if station == 1 {
        (StreamRole::SettingsStation1, StreamRole::DelaysStation1)
    } else {
        (StreamRole::SettingsStation2, StreamRole::DelaysStation2)
    };
    header_line(&mut out, "stream_source", StreamRole::Source.id());
    header_line(&mut out, "stream_settings", settings_stream.id());
    header_line(&mut out, "stream_delays", delay_stream.id());
    if let Some(dg) = digest {
        header_line(&mut out, "config_digest", dg);
    }
    out.push_str("records:\n");
    out
}

/// Incremental writer used while generating, so datasets never need to be
/// held in memory. Call [`DatasetWriter::finish`] to flush and verify the
/// record count against the header.
pub struct DatasetWriter<W: Write> {
    out: BufWriter<W>,
    expected: u64,
    written: u64,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(
        inner: W,
        station: u8,
        cfg: &StationConfig,
        seed: u64,
        events: u64,
        digest: Option<&str>,
    ) -> Result<Self> {
        let mut out = BufWriter::new(inner);
        out.write_all(
            render_header(station, &cfg.angles_deg, cfg.t0, cfg.d, seed, events, digest)
                .as_bytes(),
        )?;
        Ok(DatasetWriter {
            out,
            expected: events,
            written: 0,
        })
    }

    pub fn write_record(&mut self, r: &EventRecord) -> Result<()> {
        writeln!(self.out, "{} {} {:+} {}", r.n, r.m, r.x, r.t)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::invalid(format!(
                "wrote {} records but header promises {}",
                self.written, self.expected
            )));
        }
        self.out.flush()?;
        Ok(())
    }
}

fn with_path(e: std::io::Error, path: &Path) -> crate::Error {
    crate::Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Write a whole dataset to `path`.
pub fn write_dataset(path: impl AsRef<Path>, ds: &StationDataset) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| with_path(e, path))?;
    let cfg = StationConfig {
        angles_deg: ds.angles_deg.clone(),
        t0: ds.t0,
        d: ds.d,
    };
    let mut w = DatasetWriter::new(file, ds.station, &cfg, ds.seed, ds.records.len() as u64, None)?;
    for r in &ds.records {
        w.write_record(r)?;
    }
    w.finish()
}

struct HeaderAccumulator {
    station: Option<u8>,
    events: Option<u64>,
    settings: Option<u32>,
    angles_deg: Option<Vec<f64>>,
    t0: Option<f64>,
    d: Option<f64>,
    seed: Option<u64>,
}

fn parse_value<T: std::str::FromStr>(line_no: usize, key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("malformed value for '{key}': '{raw}'")))
}

/// Read a dataset from any reader. Errors carry the offending line number.
pub fn read_dataset_from(reader: impl Read) -> Result<StationDataset> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file"))?;
    let first = first?;
    if first.trim() != FORMAT_HEADER {
        return Err(Error::parse(
            1,
            format!("expected '{FORMAT_HEADER}', found '{}'", first.trim()),
        ));
    }

    let mut h = HeaderAccumulator {
        station: None,
        events: None,
        settings: None,
        angles_deg: None,
        t0: None,
        d: None,
        seed: None,
    };

    let mut in_records = false;
    let mut records: Vec<EventRecord> = Vec::new();
    let mut last_line = 1;
    for (idx, line) in lines {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !in_records {
            if trimmed == "records:" {
                in_records = true;
                if let Some(n) = h.events {
                    records.reserve(n.min(1 << 24) as usize);
                }
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected key = value, got '{trimmed}'")))?;
            match key.trim() {
                "station" => h.station = Some(parse_value(line_no, "station", value)?),
                "events" => h.events = Some(parse_value(line_no, "events", value)?),
                "settings" => h.settings = Some(parse_value(line_no, "settings", value)?),
                "angles_deg" => {
                    let angles = value
                        .trim()
                        .split(',')
                        .map(|a| parse_value(line_no, "angles_deg", a))
                        .collect::<Result<Vec<f64>>>()?;
                    h.angles_deg = Some(angles);
                }
                "t0" => h.t0 = Some(parse_value(line_no, "t0", value)?),
                "d" => h.d = Some(parse_value(line_no, "d", value)?),
                "seed" => h.seed = Some(parse_value(line_no, "seed", value)?),
                "stream_source" | "stream_settings" | "stream_delays" => {
                    let _: u32 = parse_value(line_no, key.trim(), value)?;
                }
                "config_digest" => {}
                other => {
                    return Err(Error::parse(line_no, format!("unknown header key '{other}'")))
                }
            }
        } else {
            let mut fields = trimmed.split_ascii_whitespace();
            let (n, m, x, t) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(n), Some(m), Some(x), Some(t)) => (n, m, x, t),
                _ => return Err(Error::parse(line_no, "record needs 4 fields: n m x t")),
            };
            if fields.next().is_some() {
                return Err(Error::parse(line_no, "record has more than 4 fields"));
            }
            let n: u64 = parse_value(line_no, "n", n)?;
            let m: u32 = parse_value(line_no, "m", m)?;
            let x: i8 = match x {
                "+1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::parse(
                        line_no,
                        format!("outcome must be +1 or -1, got '{other}'"),
                    ))
                }
            };
            let t: f64 = parse_value(line_no, "t", t)?;
            records.push(EventRecord {
                n,
                m,
                x,
                t,
                gamma_deg: 0.0, // filled from the header below
            });
        }
    }

    let station = h.station.ok_or_else(|| Error::parse(last_line, "missing 'station'"))?;
    let events = h.events.ok_or_else(|| Error::parse(last_line, "missing 'events'"))?;
    let settings = h.settings.ok_or_else(|| Error::parse(last_line, "missing 'settings'"))?;
    let angles_deg = h
        .angles_deg
        .ok_or_else(|| Error::parse(last_line, "missing 'angles_deg'"))?;
    let t0 = h.t0.ok_or_else(|| Error::parse(last_line, "missing 't0'"))?;
    let d = h.d.ok_or_else(|| Error::parse(last_line, "missing 'd'"))?;
    let seed = h.seed.ok_or_else(|| Error::parse(last_line, "missing 'seed'"))?;

    if angles_deg.len() != settings as usize {
        return Err(Error::parse(
            last_line,
            format!(
                "header lists {} settings but {} angles",
                settings,
                angles_deg.len()
            ),
        ));
    }
    if records.len() as u64 != events {
        return Err(Error::parse(
            last_line,
            format!("header promises {} records, file has {}", events, records.len()),
        ));
    }
    for (i, r) in records.iter_mut().enumerate() {
        if r.m == 0 || r.m > settings {
            return Err(Error::parse(
                i + 1,
                format!("setting index {} outside 1..={}", r.m, settings),
            ));
        }
        if !(0.0..=t0).contains(&r.t) {
            return Err(Error::parse(
                i + 1,
                format!("time-tag {} outside [0, {}]", r.t, t0),
            ));
        }
        r.gamma_deg = angles_deg[(r.m - 1) as usize];
    }

    Ok(StationDataset {
        station,
        angles_deg,
        t0,
        d,
        seed,
        records,
    })
}

/// Read a dataset from `path`.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<StationDataset> {
    let path = path.as_ref();
    read_dataset_from(std::fs::File::open(path).map_err(|e| with_path(e, path))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eprb::{run_experiment, ExperimentConfig, SourceMode};
    use crate::stream::{RandomStream, StreamRole};

    fn sample_dataset(n: u64) -> StationDataset {
        let mut s1 = RandomStream::for_role(5, StreamRole::SettingsStation1);
        let mut s2 = RandomStream::for_role(5, StreamRole::SettingsStation2);
        let cfg = ExperimentConfig {
            events: n,
            mode: SourceMode::SingletRandom,
            station1: StationConfig::with_random_angles(3, 1.0, 2.0, &mut s1).unwrap(),
            station2: StationConfig::with_random_angles(3, 1.0, 2.0, &mut s2).unwrap(),
            seed: 5,
        };
        run_experiment(&cfg).unwrap().0
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ds = sample_dataset(1000);
        let mut buf = Vec::new();
        {
            let cfg = StationConfig {
                angles_deg: ds.angles_deg.clone(),
                t0: ds.t0,
                d: ds.d,
            };
            let mut w =
                DatasetWriter::new(&mut buf, ds.station, &cfg, ds.seed, 1000, Some("abc123"))
                    .unwrap();
            for r in &ds.records {
                w.write_record(r).unwrap();
            }
            w.finish().unwrap();
        }
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        for (a, b) in ds.records.iter().zip(&back.records) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
        }
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let ds = sample_dataset(5);
        let mut buf = Vec::new();
        let cfg = StationConfig {
            angles_deg: ds.angles_deg.clone(),
            t0: ds.t0,
            d: ds.d,
        };
        let mut w = DatasetWriter::new(&mut buf, 1, &cfg, ds.seed, 5, None).unwrap();
        for r in &ds.records[..4] {
            w.write_record(r).unwrap();
        }
        assert!(w.finish().is_err());

        // Reader-side check as well.
        let mut buf = Vec::new();
        let mut w = DatasetWriter::new(&mut buf, 1, &cfg, ds.seed, 5, None).unwrap();
        for r in &ds.records[..4] {
            w.write_record(r).unwrap();
        }
        drop(w); // skip finish, leaving a short file
        let err = read_dataset_from(buf.as_slice()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn malformed_records_are_rejected_with_line_numbers() {
        let good = "epsim-station-dataset v1\nstation = 1\nevents = 1\nsettings = 1\nangles_deg = 10\nt0 = 1\nd = 2\nseed = 7\nrecords:\n";
        let cases = [
            ("1 1 0 0.5\n", "x = 0"),
            ("1 1 +1\n", "missing field"),
            ("1 1 +1 0.5 9\n", "extra field"),
            ("1 1 +1 1.5\n", "t out of range"),
            ("1 2 +1 0.5\n", "m out of range"),
        ];
        for (record, what) in cases {
            let text = format!("{good}{record}");
            let err = read_dataset_from(text.as_bytes()).unwrap_err();
            assert!(matches!(err, Error::Parse { .. }), "case: {what}");
        }
        let ok = format!("{good}1 1 +1 0.5\n");
        assert!(read_dataset_from(ok.as_bytes()).is_ok());
    }

    #[test]
    fn unknown_header_key_is_rejected() {
        let text = "epsim-station-dataset v1\nstationn = 1\n";
        assert!(read_dataset_from(text.as_bytes()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("station1.txt");
        let ds = sample_dataset(200);
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, ds);
    }
}
