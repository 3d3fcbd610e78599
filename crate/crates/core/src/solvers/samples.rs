use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::qubo::{Bitstring, QuboInstance};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    #[serde(serialize_with = "as_string")]
    pub bits: Bitstring,
    pub energy: f64,
    pub count: u64,
}

fn as_string<S: serde::Serializer>(b: &Bitstring, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(b)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverMeta {
    pub solver: String,
    pub config_digest: String,
    pub seed: u64,
    /// Wall time in seconds of each run that produced these samples.
    pub wall_times: Vec<f64>,
}

/// Multiset of solver outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleSet {
    pub records: Vec<SampleRecord>,
    pub meta: SolverMeta,
}

impl SampleSet {
    pub fn total_count(&self) -> u64 {
        self.records.iter().map(|r| r.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_count() == 0
    }

    /// Lowest-energy record; ties go to the lexicographically smallest bits.
    pub fn best(&self) -> Option<&SampleRecord> {
        self.records
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)))
    }

    /// Merges identical bitstrings and sorts by `(energy, bits)`.
    pub fn aggregated(&self) -> SampleSet {
        let mut merged: BTreeMap<&Bitstring, (f64, u64)> = BTreeMap::new();
        for r in &self.records {
            merged.entry(&r.bits).or_insert((r.energy, 0)).1 += r.count;
        }
        let mut records: Vec<SampleRecord> = merged
            .into_iter()
            .map(|(bits, (energy, count))| SampleRecord {
                bits: bits.clone(),
                energy,
                count,
            })
            .collect();
        records.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)));
        SampleSet {
            records,
            meta: self.meta.clone(),
        }
    }

    /// Concatenates the records of several runs of the same solver.
    pub fn concat(sets: Vec<SampleSet>) -> SampleSet {
        let mut out = SampleSet::default();
        for (k, s) in sets.into_iter().enumerate() {
            if k == 0 {
                out.meta = SolverMeta {
                    wall_times: Vec::new(),
                    ..s.meta.clone()
                };
            }
            out.meta.wall_times.extend(s.meta.wall_times);
            out.records.extend(s.records);
        }
        out
    }

    /// Largest deviation between a reported energy and its re-evaluation.
    pub fn max_energy_error(&self, instance: &QuboInstance) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in &self.records {
            let e = crate::qubo::qubo_energy(instance, r.bits.as_slice())?;
            worst = worst.max((e - r.energy).abs());
        }
        Ok(worst)
    }
}

/// Writes `bits,energy,count`, preceded by `#` metadata lines. Timing and
/// timestamp lines are left out when `deterministic` is set.
pub fn write_samples_to<W: Write>(samples: &SampleSet, mut w: W, deterministic: bool) -> Result<()> {
    if !deterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        writeln!(w, "# generated {now}")?;
    }
    writeln!(w, "# solver {}", samples.meta.solver)?;
    writeln!(w, "# config {}", samples.meta.config_digest)?;
    writeln!(w, "# seed {}", samples.meta.seed)?;
    if !deterministic {
        let times: Vec<String> = samples.meta.wall_times.iter().map(|t| t.to_string()).collect();
        writeln!(w, "# wall_times {}", times.join(" "))?;
    }
    writeln!(w, "bits,energy,count")?;
    for r in &samples.records {
        writeln!(w, "{},{},{}", r.bits, r.energy, r.count)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples(samples: &SampleSet, path: impl AsRef<Path>, deterministic: bool) -> Result<()> {
    write_samples_to(samples, BufWriter::new(File::create(path)?), deterministic)
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<SampleSet> {
    read_samples_from(BufReader::new(File::open(path)?))
}

pub fn read_samples_from<R: BufRead>(reader: R) -> Result<SampleSet> {
    let mut set = SampleSet::default();
    let mut header_seen = false;
    for (k, line) in reader.lines().enumerate() {
        let no = k + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.trim().splitn(2, ' ');
            match (parts.next(), parts.next()) {
                (Some("solver"), Some(v)) => set.meta.solver = v.to_string(),
                (Some("config"), Some(v)) => set.meta.config_digest = v.to_string(),
                (Some("seed"), Some(v)) => set.meta.seed = v.parse().map_err(|_| Error::format(no, "bad seed"))?,
                (Some("wall_times"), Some(v)) => {
                    set.meta.wall_times = v
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| Error::format(no, "bad wall time")))
                        .collect::<Result<_>>()?
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            if line != "bits,energy,count" {
                return Err(Error::format(no, format!("expected header 'bits,energy,count', found '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [bits, energy, count] = fields[..] else {
            return Err(Error::format(no, "expected three comma-separated fields"));
        };
        let bits: Bitstring = bits.parse().map_err(|e: Error| Error::format(no, e.to_string()))?;
        let energy: f64 = energy.parse().map_err(|_| Error::format(no, "bad energy"))?;
        let count: u64 = count.parse().map_err(|_| Error::format(no, "bad count"))?;
        if count == 0 {
            return Err(Error::format(no, "counts must be positive"));
        }
        set.records.push(SampleRecord { bits, energy, count });
    }
    if !header_seen {
        return Err(Error::format(0, "missing 'bits,energy,count' header"));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(bits: &str, energy: f64, count: u64) -> SampleRecord {
        SampleRecord {
            bits: bits.parse().unwrap(),
            energy,
            count,
        }
    }

    #[test]
    fn aggregation_merges_counts() {
        let set = SampleSet {
            records: vec![rec("01", -1.0, 1), rec("10", 0.5, 2), rec("01", -1.0, 3)],
            meta: SolverMeta::default(),
        };
        let agg = set.aggregated();
        assert_eq!(agg.records, vec![rec("01", -1.0, 4), rec("10", 0.5, 2)]);
        assert_eq!(agg.total_count(), set.total_count());
        assert_eq!(set.best().unwrap().bits.to_string(), "01");
    }

    #[test]
    fn csv_round_trip() {
        let set = SampleSet {
            records: vec![rec("0110", -0.375, 7), rec("1111", 1e-20, 1)],
            meta: SolverMeta {
                solver: "sa".into(),
                config_digest: "abc".into(),
                seed: 9,
                wall_times: vec![0.25],
            },
        };
        let mut buf = Vec::new();
        write_samples_to(&set, &mut buf, false).unwrap();
        assert_eq!(read_samples_from(buf.as_slice()).unwrap(), set);

        let mut det = Vec::new();
        write_samples_to(&set, &mut det, true).unwrap();
        let text = String::from_utf8(det).unwrap();
        assert!(!text.contains("generated") && !text.contains("wall_times"));
        assert!(text.contains("bits,energy,count\n0110,-0.375,7\n"));
    }

    #[test]
    fn csv_errors() {
        assert!(read_samples_from("01,1,1\n".as_bytes()).is_err());
        assert!(read_samples_from("bits,energy,count\n01,1\n".as_bytes()).is_err());
        assert!(read_samples_from("bits,energy,count\n0x,1,1\n".as_bytes()).is_err());
        assert!(read_samples_from("bits,energy,count\n01,1,0\n".as_bytes()).is_err());
    }
}
