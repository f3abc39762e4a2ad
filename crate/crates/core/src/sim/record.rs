//! Recorded trajectories and their file formats.
//!
//! # CSV layout
//!
//! Metadata lines start with `# ` and hold `key=value` pairs. The header row
//! is followed by one row per recorded time:
//!
//! | column | meaning |
//! |---|---|
//! | `t` | time (post-event value convention) |
//! | `X` | customers in system |
//! | `Q` | customers in buffer |
//! | `I` | idle servers |
//! | `I_class_0..2` | idle servers per rate class (0 when no partition) |
//! | `A` | cumulative arrivals |
//! | `idle_rate_integral` | integral of `sum_k mu_k I_k(s) ds` up to `t` |
//! | `D` | cumulative departures |
//! | `R` | cumulative routings |
//!
//! # Binary layout (little-endian)
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HWPR"
//! 4       4     format version (u32, = 1)
//! 8       8     n (u64)
//! 16      8     seed (u64)
//! 24      8     x0 (u64)
//! 32      8     horizon (f64)
//! 40      1     policy code (u8: 0 PI0, 1 FSF, 2 RandomIdle, 3 LowestIndex, 4 SlowestFirst)
//! 41      7     reserved, zero
//! 48      8     row count (u64)
//! 56      64*m  rows
//! ```
//!
//! Each 64-byte row is `t: f64, X: u32, Q: u32, I: u32, I_class: [u32; 3],
//! A: u64, D: u64, R: u64, idle_rate_integral: f64`.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::PolicyKind;

const MAGIC: &[u8; 4] = b"HWPR";
const FORMAT_VERSION: u32 = 1;
pub const BINARY_ROW_BYTES: usize = 64;
const BINARY_HEADER_BYTES: usize = 56;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    pub x: u32,
    pub q: u32,
    pub i: u32,
    pub i_class: [u32; 3],
    pub a: u64,
    pub d: u64,
    pub r: u64,
    pub idle_rate_integral: f64,
}

/// Per-server class labels (0, 1, 2) and the thresholds that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLabels {
    pub epsilon: f64,
    pub alpha: f64,
    pub labels: Vec<u8>,
}

/// One job's life: arrival, routing to a single server, departure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: u64,
    /// Arrival time; 0 for jobs present initially.
    pub arrival: f64,
    pub server: Option<u32>,
    pub routed: Option<f64>,
    pub departed: Option<f64>,
    pub waited: bool,
    pub initial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub n: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub x0: usize,
    pub horizon: f64,
    pub lambda_n: f64,
    pub arrival: String,
    /// Initial idle servers were chosen by index order because the policy
    /// carries no ranking.
    pub init_fallback: bool,
    pub classes: Option<(f64, f64)>,
}

/// End-of-run totals, always available regardless of recording mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub end_time: f64,
    pub x: u64,
    pub q: u64,
    pub i: u64,
    pub arrivals: u64,
    pub departures: u64,
    pub routings: u64,
    pub arrivals_waited: u64,
    pub idle_rate_integral: f64,
    pub queue_integral: f64,
    pub x_integral: f64,
    pub initial_busy: Vec<bool>,
    pub busy_time: Vec<f64>,
    pub routings_per_server: Vec<u64>,
    pub departures_per_server: Vec<u64>,
    pub final_busy: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub meta: PathMeta,
    pub rows: Vec<PathRow>,
    pub summary: RunSummary,
    pub jobs: Option<Vec<JobRecord>>,
}

impl PathRecord {
    pub fn n(&self) -> usize {
        self.meta.n
    }

    /// Right-continuous value of `X` at `t`: the last recorded row at or before `t`.
    pub fn x_at(&self, t: f64) -> Option<u32> {
        let idx = self.rows.partition_point(|r| r.t <= t);
        idx.checked_sub(1).map(|i| self.rows[i].x)
    }

    pub fn initial(&self) -> Option<&PathRow> {
        self.rows.first()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = &self.meta;
        writeln!(out, "# n={}", m.n)?;
        writeln!(out, "# seed={}", m.seed)?;
        writeln!(out, "# policy={}", m.policy)?;
        writeln!(out, "# x0={}", m.x0)?;
        writeln!(out, "# horizon={}", m.horizon)?;
        writeln!(out, "# lambda_n={}", m.lambda_n)?;
        writeln!(out, "# arrival={}", m.arrival)?;
        writeln!(out, "# init_fallback={}", m.init_fallback)?;
        if let Some((eps, alpha)) = m.classes {
            writeln!(out, "# class_epsilon={eps}")?;
            writeln!(out, "# class_alpha={alpha}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "X",
            "Q",
            "I",
            "I_class_0",
            "I_class_1",
            "I_class_2",
            "A",
            "idle_rate_integral",
            "D",
            "R",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.x.to_string(),
                r.q.to_string(),
                r.i.to_string(),
                r.i_class[0].to_string(),
                r.i_class[1].to_string(),
                r.i_class[2].to_string(),
                r.a.to_string(),
                r.idle_rate_integral.to_string(),
                r.d.to_string(),
                r.r.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a CSV export back. Run summary and job log are not part of the
    /// format and come back empty.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut meta = PathMeta {
            n: 0,
            seed: 0,
            policy: PolicyKind::LowestIndex,
            x0: 0,
            horizon: 0.0,
            lambda_n: 0.0,
            arrival: String::new(),
            init_fallback: false,
            classes: None,
        };
        let mut class_eps = None;
        let mut class_alpha = None;
        let mut line_no = 0usize;
        let mut header = String::new();
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            line_no += 1;
            let Some(body) = line.strip_prefix('#') else {
                header = line;
                break;
            };
            let Some((key, value)) = body.trim().split_once('=') else {
                continue;
            };
            let bad = |what: &str| Error::Parse {
                line: line_no,
                message: format!("bad {what} '{value}'"),
            };
            match key {
                "n" => meta.n = value.parse().map_err(|_| bad("n"))?,
                "seed" => meta.seed = value.parse().map_err(|_| bad("seed"))?,
                "policy" => meta.policy = value.parse().map_err(|_| bad("policy"))?,
                "x0" => meta.x0 = value.parse().map_err(|_| bad("x0"))?,
                "horizon" => meta.horizon = value.parse().map_err(|_| bad("horizon"))?,
                "lambda_n" => meta.lambda_n = value.parse().map_err(|_| bad("lambda_n"))?,
                "arrival" => meta.arrival = value.to_string(),
                "init_fallback" => {
                    meta.init_fallback = value.parse().map_err(|_| bad("init_fallback"))?
                }
                "class_epsilon" => class_eps = Some(value.parse().map_err(|_| bad("epsilon"))?),
                "class_alpha" => class_alpha = Some(value.parse().map_err(|_| bad("alpha"))?),
                _ => {}
            }
        }
        if let (Some(e), Some(a)) = (class_eps, class_alpha) {
            meta.classes = Some((e, a));
        }
        let rest = header.as_bytes().chain(reader);
        let mut rdr = csv::Reader::from_reader(rest);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row_line = line_no + 1 + i;
            let field = |j: usize| -> Result<&str> {
                rec.get(j).ok_or_else(|| Error::Parse {
                    line: row_line,
                    message: format!("missing column {j}"),
                })
            };
            let num = |j: usize| -> Result<u64> {
                field(j)?.parse::<u64>().map_err(|e| Error::Parse {
                    line: row_line,
                    message: e.to_string(),
                })
            };
            let real = |j: usize| -> Result<f64> {
                field(j)?.parse::<f64>().map_err(|e| Error::Parse {
                    line: row_line,
                    message: e.to_string(),
                })
            };
            rows.push(PathRow {
                t: real(0)?,
                x: num(1)? as u32,
                q: num(2)? as u32,
                i: num(3)? as u32,
                i_class: [num(4)? as u32, num(5)? as u32, num(6)? as u32],
                a: num(7)?,
                idle_rate_integral: real(8)?,
                d: num(9)?,
                r: num(10)?,
            });
        }
        Ok(PathRecord {
            meta,
            rows,
            summary: RunSummary::default(),
            jobs: None,
        })
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let m = &self.meta;
        let mut head = Vec::with_capacity(BINARY_HEADER_BYTES);
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        head.extend_from_slice(&(m.n as u64).to_le_bytes());
        head.extend_from_slice(&m.seed.to_le_bytes());
        head.extend_from_slice(&(m.x0 as u64).to_le_bytes());
        head.extend_from_slice(&m.horizon.to_le_bytes());
        head.push(m.policy.code());
        head.extend_from_slice(&[0u8; 7]);
        head.extend_from_slice(&(self.rows.len() as u64).to_le_bytes());
        debug_assert_eq!(head.len(), BINARY_HEADER_BYTES);
        out.write_all(&head)?;
        let mut buf = [0u8; BINARY_ROW_BYTES];
        for r in &self.rows {
            buf[0..8].copy_from_slice(&r.t.to_le_bytes());
            buf[8..12].copy_from_slice(&r.x.to_le_bytes());
            buf[12..16].copy_from_slice(&r.q.to_le_bytes());
            buf[16..20].copy_from_slice(&r.i.to_le_bytes());
            for c in 0..3 {
                buf[20 + 4 * c..24 + 4 * c].copy_from_slice(&r.i_class[c].to_le_bytes());
            }
            buf[32..40].copy_from_slice(&r.a.to_le_bytes());
            buf[40..48].copy_from_slice(&r.d.to_le_bytes());
            buf[48..56].copy_from_slice(&r.r.to_le_bytes());
            buf[56..64].copy_from_slice(&r.idle_rate_integral.to_le_bytes());
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut head = [0u8; BINARY_HEADER_BYTES];
        input.read_exact(&mut head)?;
        if &head[0..4] != MAGIC {
            return Err(Error::Argument("not a path record (bad magic)".into()));
        }
        let u64_at = |b: &[u8], o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let u32_at = |b: &[u8], o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let f64_at = |b: &[u8], o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let version = u32_at(&head, 4);
        if version != FORMAT_VERSION {
            return Err(Error::Argument(format!(
                "unsupported path record version {version}"
            )));
        }
        let policy = PolicyKind::from_code(head[40])
            .ok_or_else(|| Error::Argument(format!("unknown policy code {}", head[40])))?;
        let count = u64_at(&head, 48) as usize;
        let mut rows = Vec::with_capacity(count);
        let mut buf = [0u8; BINARY_ROW_BYTES];
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            rows.push(PathRow {
                t: f64_at(&buf, 0),
                x: u32_at(&buf, 8),
                q: u32_at(&buf, 12),
                i: u32_at(&buf, 16),
                i_class: [u32_at(&buf, 20), u32_at(&buf, 24), u32_at(&buf, 28)],
                a: u64_at(&buf, 32),
                d: u64_at(&buf, 40),
                r: u64_at(&buf, 48),
                idle_rate_integral: f64_at(&buf, 56),
            });
        }
        Ok(PathRecord {
            meta: PathMeta {
                n: u64_at(&head, 8) as usize,
                seed: u64_at(&head, 16),
                policy,
                x0: u64_at(&head, 24) as usize,
                horizon: f64_at(&head, 32),
                lambda_n: f64::NAN,
                arrival: String::new(),
                init_fallback: false,
                classes: None,
            },
            rows,
            summary: RunSummary::default(),
            jobs: None,
        })
    }
}
