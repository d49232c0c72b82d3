//! Delimited-text trace files.
//!
//! ```text
//! # diabolo=medium
//! # string_length=1.45
//! # sample_rate=1000
//! # motion_class=swinging
//! t,lx,ly,lz,rx,ry,rz,dx,dy,dz,omega,dvx,dvy,dvz,status
//! 0,0,-0.3,1.2,0,0.3,1.2,0,0,0.54,0,0,0,0,ON_STRING
//! ```
//!
//! The first ten columns are mandatory and fixed. `omega` is optional, as is
//! the ground-truth block `dvx,dvy,dvz,status` written by synthetic
//! generators. Orientation columns from motion-capture exports (`qw`, `lqx`,
//! `dqz`, ...) are accepted and ignored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{StickPair, Vec3};
use crate::predictor::ContactStatus;

pub const REQUIRED_COLUMNS: [&str; 10] = ["t", "lx", "ly", "lz", "rx", "ry", "rz", "dx", "dy", "dz"];
const TRUTH_COLUMNS: [&str; 4] = ["dvx", "dvy", "dvz", "status"];

/// Slack allowed on the stick distance before a sample is flagged (m).
pub const STRETCH_TOLERANCE: f64 = 0.02;
/// Allowed relative deviation of a sample interval from the nominal one.
pub const RATE_JITTER: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMeta {
    pub diabolo: String,
    pub string_length: Option<f64>,
    pub sample_rate: Option<f64>,
    pub motion_class: Option<String>,
    /// Any further `# key=value` entries, preserved on write.
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub left: Vec3,
    pub right: Vec3,
    pub diabolo: Vec3,
    pub omega: Option<f64>,
    /// Ground-truth diabolo velocity, present in generated traces.
    pub velocity: Option<Vec3>,
    /// Ground-truth contact status, present in generated traces.
    pub status: Option<ContactStatus>,
}

impl TraceSample {
    pub fn sticks(&self) -> StickPair {
        StickPair::new(self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub meta: TraceMeta,
    pub samples: Vec<TraceSample>,
}

/// Non-fatal findings while loading a trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadReport {
    /// Rows dropped because they held non-finite values.
    pub dropped_rows: usize,
    pub ignored_columns: Vec<String>,
    /// Sample intervals deviating from the nominal rate by more than 1%.
    pub irregular_intervals: usize,
    /// Samples whose stick distance exceeds the string length plus 2 cm.
    pub overstretched_samples: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Mean sample interval.
    pub fn mean_interval(&self) -> Option<f64> {
        (self.samples.len() >= 2).then(|| self.duration() / (self.samples.len() - 1) as f64)
    }

    pub fn has_omega(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.omega.is_some())
    }

    pub fn has_truth(&self) -> bool {
        !self.samples.is_empty()
            && self.samples.iter().all(|s| s.velocity.is_some() && s.status.is_some())
    }

    pub fn motion_class(&self) -> &str {
        self.meta.motion_class.as_deref().unwrap_or("unlabeled")
    }

    /// Applies `offset` to every recorded position.
    pub fn translated(&self, offset: &Vec3) -> Trace {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.left += offset;
            s.right += offset;
            s.diabolo += offset;
        }
        out
    }

    /// Checks the sample invariants; returns counts of tolerated irregularities.
    fn check(&self, report: &mut LoadReport) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Empty("trace has no valid samples".into()));
        }
        if let Some(i) = self.samples.windows(2).position(|w| w[1].t.partial_cmp(&w[0].t) != Some(Ordering::Greater)) {
            return Err(Error::Format {
                line: 0,
                message: format!(
                    "timestamps must be strictly increasing (sample {} at t={} follows t={})",
                    i + 1,
                    self.samples[i + 1].t,
                    self.samples[i].t
                ),
            });
        }
        let nominal = self
            .meta
            .sample_rate
            .filter(|r| *r > 0.0)
            .map(|r| 1.0 / r)
            .or_else(|| self.mean_interval());
        if let Some(h) = nominal {
            report.irregular_intervals = self
                .samples
                .windows(2)
                .filter(|w| ((w[1].t - w[0].t) - h).abs() > RATE_JITTER * h)
                .count();
        }
        if let Some(l) = self.meta.string_length {
            report.overstretched_samples = self
                .samples
                .iter()
                .filter(|s| s.sticks().distance() > l + STRETCH_TOLERANCE)
                .count();
        }
        Ok(())
    }
}

fn is_orientation_column(name: &str) -> bool {
    let b = name.as_bytes();
    let tail = match b.len() {
        2 => b,
        3 if matches!(b[0], b'l' | b'r' | b'd') => &b[1..],
        _ => return false,
    };
    tail[0] == b'q' && matches!(tail[1], b'w' | b'x' | b'y' | b'z')
}

struct Layout {
    omega: Option<usize>,
    truth: Option<[usize; 4]>,
    ignored: Vec<String>,
    width: usize,
}

fn layout(header: &csv::StringRecord, line: usize) -> Result<Layout> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.len() < REQUIRED_COLUMNS.len() || names[..REQUIRED_COLUMNS.len()] != REQUIRED_COLUMNS {
        return Err(Error::Format {
            line,
            message: format!(
                "header must start with `{}`, got `{}`",
                REQUIRED_COLUMNS.join(","),
                names.join(",")
            ),
        });
    }
    let mut omega = None;
    let mut truth = [None; 4];
    let mut ignored = Vec::new();
    for (i, name) in names.iter().enumerate().skip(REQUIRED_COLUMNS.len()) {
        if *name == "omega" {
            omega = Some(i);
        } else if let Some(j) = TRUTH_COLUMNS.iter().position(|c| c == name) {
            truth[j] = Some(i);
        } else if is_orientation_column(name) {
            ignored.push(name.to_string());
        } else {
            return Err(Error::Format {
                line,
                message: format!("unknown column `{name}`"),
            });
        }
    }
    let truth = match truth {
        [Some(a), Some(b), Some(c), Some(d)] => Some([a, b, c, d]),
        [None, None, None, None] => None,
        _ => {
            return Err(Error::Format {
                line,
                message: format!("ground-truth columns must appear together: {}", TRUTH_COLUMNS.join(",")),
            })
        }
    };
    Ok(Layout {
        omega,
        truth,
        ignored,
        width: names.len(),
    })
}

fn parse_meta(meta: &mut TraceMeta, line: &str, lineno: usize) -> Result<()> {
    let body = line.trim_start_matches('#').trim();
    if body.is_empty() {
        return Ok(());
    }
    let Some((key, value)) = body.split_once('=') else {
        // Free-form comments are allowed.
        return Ok(());
    };
    let (key, value) = (key.trim(), value.trim());
    let number = |v: &str| -> Result<f64> {
        v.parse::<f64>().map_err(|_| Error::Format {
            line: lineno,
            message: format!("metadata `{key}` is not a number: `{v}`"),
        })
    };
    match key {
        "diabolo" => meta.diabolo = value.to_string(),
        "string_length" => meta.string_length = Some(number(value)?),
        "sample_rate" => meta.sample_rate = Some(number(value)?),
        "motion_class" => meta.motion_class = Some(value.to_string()),
        _ => {
            meta.extra.insert(key.to_string(), value.to_string());
        }
    }
    Ok(())
}

/// Parses a trace from any reader.
pub fn read_trace<R: Read>(reader: R) -> Result<(Trace, LoadReport)> {
    let mut reader = BufReader::new(reader);
    let mut meta = TraceMeta::default();
    let mut line = String::new();
    let mut lineno = 0;
    // Leading comment block holds the metadata; the header follows it.
    let header_line = loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Empty("trace file has no header".into()));
        }
        lineno += 1;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            parse_meta(&mut meta, trimmed, lineno)?;
        } else if !trimmed.is_empty() {
            break trimmed.to_string();
        }
    };
    let header_lineno = lineno;

    let mut rest = String::new();
    reader.read_to_string(&mut rest)?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(rest.as_bytes());

    let header = csv::StringRecord::from(header_line.split(',').collect::<Vec<_>>());
    let layout = layout(&header, header_lineno)?;
    let mut report = LoadReport {
        ignored_columns: layout.ignored.clone(),
        ..Default::default()
    };
    if !layout.ignored.is_empty() {
        warn!("ignoring orientation columns: {}", layout.ignored.join(","));
    }

    let mut samples = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| Error::Format {
            line: header_lineno + e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row_line = header_lineno + record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != layout.width {
            return Err(Error::Format {
                line: row_line,
                message: format!("expected {} columns, found {}", layout.width, record.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|_| Error::Format {
                line: row_line,
                message: format!("column {} is not a number: `{}`", i + 1, &record[i]),
            })
        };
        let mut v = [0.0; 10];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = num(i)?;
        }
        let omega = layout.omega.map(num).transpose()?;
        let (velocity, status) = match layout.truth {
            Some([x, y, z, st]) => {
                let status = ContactStatus::parse(&record[st]).ok_or_else(|| Error::Format {
                    line: row_line,
                    message: format!("unknown status `{}`", &record[st]),
                })?;
                (Some(Vec3::new(num(x)?, num(y)?, num(z)?)), Some(status))
            }
            None => (None, None),
        };
        let finite = v.iter().all(|x| x.is_finite())
            && omega.is_none_or(f64::is_finite)
            && velocity.is_none_or(|w| w.iter().all(|x| x.is_finite()));
        if !finite {
            report.dropped_rows += 1;
            continue;
        }
        samples.push(TraceSample {
            t: v[0],
            left: Vec3::new(v[1], v[2], v[3]),
            right: Vec3::new(v[4], v[5], v[6]),
            diabolo: Vec3::new(v[7], v[8], v[9]),
            omega,
            velocity,
            status,
        });
    }
    if report.dropped_rows > 0 {
        warn!("dropped {} rows with non-finite values", report.dropped_rows);
    }

    let trace = Trace { meta, samples };
    trace.check(&mut report)?;
    if report.irregular_intervals > 0 {
        warn!("{} sample intervals deviate from the nominal rate", report.irregular_intervals);
    }
    if report.overstretched_samples > 0 {
        warn!("{} samples exceed the string length", report.overstretched_samples);
    }
    Ok((trace, report))
}

/// Loads a trace file.
pub fn load_trace(path: impl AsRef<Path>) -> Result<(Trace, LoadReport)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_trace(file)
}

/// Serializes a trace. Numbers use the shortest representation that parses
/// back to the identical `f64`.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> Result<()> {
    let m = &trace.meta;
    if !m.diabolo.is_empty() {
        writeln!(out, "# diabolo={}", m.diabolo)?;
    }
    if let Some(l) = m.string_length {
        writeln!(out, "# string_length={l}")?;
    }
    if let Some(r) = m.sample_rate {
        writeln!(out, "# sample_rate={r}")?;
    }
    if let Some(c) = &m.motion_class {
        writeln!(out, "# motion_class={c}")?;
    }
    for (k, v) in &m.extra {
        writeln!(out, "# {k}={v}")?;
    }
    let with_omega = trace.has_omega();
    let with_truth = trace.has_truth();
    let mut header = REQUIRED_COLUMNS.join(",");
    if with_omega {
        header.push_str(",omega");
    }
    if with_truth {
        header.push(',');
        header.push_str(&TRUTH_COLUMNS.join(","));
    }
    writeln!(out, "{header}")?;
    for s in &trace.samples {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.t, s.left.x, s.left.y, s.left.z, s.right.x, s.right.y, s.right.z, s.diabolo.x, s.diabolo.y, s.diabolo.z
        )?;
        if with_omega {
            write!(out, ",{}", s.omega.unwrap_or_default())?;
        }
        if with_truth {
            let v = s.velocity.unwrap_or_default();
            let st = s.status.map_or("", ContactStatus::as_str);
            write!(out, ",{},{},{},{}", v.x, v.y, v.z, st)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("trace text is ASCII")
}

fn lerp(a: &Vec3, b: &Vec3, w: f64) -> Vec3 {
    a + (b - a) * w
}

/// Linearly interpolates every channel onto a uniform grid of spacing `dt`
/// starting at the first sample. Contact status is taken from the sample at
/// or before each grid point.
pub fn resample(trace: &Trace, dt: f64) -> Result<Trace> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Input(format!("resample step must be positive, got {dt}")));
    }
    if trace.samples.len() < 2 {
        return Err(Error::Empty("resampling needs at least two samples".into()));
    }
    let s = &trace.samples;
    let t0 = s[0].t;
    let n = ((trace.duration()) / dt + 1e-9).floor() as usize;
    let with_omega = trace.has_omega();
    let with_truth = trace.has_truth();
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let t = (t0 + k as f64 * dt).min(s[s.len() - 1].t);
        while seg + 2 < s.len() && s[seg + 1].t <= t {
            seg += 1;
        }
        let (a, b) = (&s[seg], &s[seg + 1]);
        let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        let before = if w >= 1.0 { b } else { a };
        out.push(TraceSample {
            t,
            left: lerp(&a.left, &b.left, w),
            right: lerp(&a.right, &b.right, w),
            diabolo: lerp(&a.diabolo, &b.diabolo, w),
            omega: with_omega.then(|| {
                let (oa, ob) = (a.omega.unwrap(), b.omega.unwrap());
                oa + (ob - oa) * w
            }),
            velocity: with_truth.then(|| lerp(&a.velocity.unwrap(), &b.velocity.unwrap(), w)),
            status: if with_truth { before.status } else { None },
        });
    }
    let mut meta = trace.meta.clone();
    meta.sample_rate = Some(1.0 / dt);
    Ok(Trace { meta, samples: out })
}

/// Centered moving average of the stick and diabolo positions over `window`
/// samples (shrunk at the edges). A window of 0 or 1 is the identity.
pub fn moving_average(trace: &Trace, window: usize) -> Trace {
    if window <= 1 {
        return trace.clone();
    }
    let half = window / 2;
    let s = &trace.samples;
    let mut out = trace.clone();
    for (i, sample) in out.samples.iter_mut().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(s.len() - 1);
        let n = (hi - lo + 1) as f64;
        let avg = |f: fn(&TraceSample) -> Vec3| s[lo..=hi].iter().map(f).sum::<Vec3>() / n;
        sample.left = avg(|x| x.left);
        sample.right = avg(|x| x.right);
        sample.diabolo = avg(|x| x.diabolo);
    }
    out
}
