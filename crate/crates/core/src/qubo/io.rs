//! Text instance format.
//!
//! ```text
//! paraqube-qubo v1
//! system H1
//! L 2
//! N 2
//! R 2
//! D 0
//! layout part-major
//! nbits 16
//! offset 1.5
//! meta dt 1
//! lin 0 -0.5
//! quad 0 1 2
//! ```
//!
//! The header lines are mandatory and ordered. Optional `meta <key> <value>`
//! lines follow, then `lin` and `quad` lines in any order (`i < j` for
//! couplings, missing `lin` lines mean zero). Floats use the shortest
//! decimal form that round-trips.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{FixedPointCode, InstanceMeta, QuboInstance};
use crate::clock::ComponentLayout;
use crate::{Error, Result};

pub const FILE_MAGIC: &str = "paraqube-qubo v1";

pub fn write_instance_to<W: Write>(instance: &QuboInstance, mut w: W) -> Result<()> {
    let layout = instance
        .meta
        .layout
        .ok_or_else(|| Error::Unsupported("only instances with a clock layout can be written".into()))?;
    let code = instance.code();
    writeln!(w, "{FILE_MAGIC}")?;
    writeln!(w, "system {}", instance.meta.system)?;
    writeln!(w, "L {}", layout.l)?;
    writeln!(w, "N {}", layout.n_points)?;
    writeln!(w, "R {}", code.bits())?;
    writeln!(w, "D {}", code.range_exp())?;
    writeln!(w, "layout {}", ComponentLayout::NAME)?;
    writeln!(w, "nbits {}", instance.n_bits())?;
    writeln!(w, "offset {}", instance.offset)?;
    for (k, v) in &instance.meta.extra {
        writeln!(w, "meta {k} {v}")?;
    }
    for (i, a) in instance.linear.iter().enumerate() {
        writeln!(w, "lin {i} {a}")?;
    }
    for &(i, j, v) in &instance.couplings {
        writeln!(w, "quad {i} {j} {v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_instance(instance: &QuboInstance, path: impl AsRef<Path>) -> Result<()> {
    write_instance_to(instance, BufWriter::new(File::create(path)?))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<QuboInstance> {
    read_instance_from(BufReader::new(File::open(path)?))
}

fn parse<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::format(line, format!("cannot parse {what} from '{s}'")))
}

pub fn read_instance_from<R: BufRead>(reader: R) -> Result<QuboInstance> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut next_header = |key: &str| -> Result<(usize, String)> {
        loop {
            let Some((no, line)) = lines.next() else {
                return Err(Error::format(0, format!("unexpected end of file, expected '{key}'")));
            };
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if key == FILE_MAGIC {
                return if line == FILE_MAGIC {
                    Ok((no, String::new()))
                } else {
                    Err(Error::format(no, format!("expected '{FILE_MAGIC}', found '{line}'")))
                };
            }
            return match line.split_once(char::is_whitespace) {
                Some((k, v)) if k == key => Ok((no, v.trim().to_string())),
                _ => Err(Error::format(no, format!("expected '{key} <value>', found '{line}'"))),
            };
        }
    };

    next_header(FILE_MAGIC)?;
    let (_, system) = next_header("system")?;
    let (ln, l) = next_header("L")?;
    let l: usize = parse(ln, "L", &l)?;
    let (ln, n) = next_header("N")?;
    let n: usize = parse(ln, "N", &n)?;
    let (ln, r) = next_header("R")?;
    let r: u32 = parse(ln, "R", &r)?;
    let (ln, d) = next_header("D")?;
    let d: i32 = parse(ln, "D", &d)?;
    let code = FixedPointCode::new(r, d).map_err(|e| Error::format(ln, e.to_string()))?;
    let (ln, layout_name) = next_header("layout")?;
    if layout_name != ComponentLayout::NAME {
        return Err(Error::format(ln, format!("unknown layout '{layout_name}'")));
    }
    let (ln, nbits) = next_header("nbits")?;
    let nbits: usize = parse(ln, "nbits", &nbits)?;
    let layout = ComponentLayout::new(l, n);
    if nbits != layout.len() * r as usize {
        return Err(Error::format(
            ln,
            format!("nbits {nbits} does not match 2 * L * N * R = {}", layout.len() * r as usize),
        ));
    }
    let (ln, offset) = next_header("offset")?;
    let offset: f64 = parse(ln, "offset", &offset)?;

    let mut extra = BTreeMap::new();
    let mut linear = vec![0.0; nbits];
    let mut seen_linear = vec![false; nbits];
    let mut couplings = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let mut fields = line.split_whitespace();
        match fields.next() {
            None => continue,
            Some("meta") => {
                let key = fields.next().ok_or_else(|| Error::format(no, "meta line without key"))?;
                let value = fields.collect::<Vec<_>>().join(" ");
                extra.insert(key.to_string(), value);
            }
            Some("lin") => {
                let (Some(i), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                    return Err(Error::format(no, "expected 'lin <bit> <value>'"));
                };
                let i: usize = parse(no, "bit index", i)?;
                let v: f64 = parse(no, "value", v)?;
                if i >= nbits {
                    return Err(Error::format(no, format!("bit {i} out of range")));
                }
                if std::mem::replace(&mut seen_linear[i], true) {
                    return Err(Error::format(no, format!("duplicate linear term for bit {i}")));
                }
                linear[i] = v;
            }
            Some("quad") => {
                let (Some(i), Some(j), Some(v), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
                    return Err(Error::format(no, "expected 'quad <bit_i> <bit_j> <value>'"));
                };
                let i: usize = parse(no, "bit index", i)?;
                let j: usize = parse(no, "bit index", j)?;
                let v: f64 = parse(no, "value", v)?;
                if i >= j || j >= nbits {
                    return Err(Error::format(no, format!("coupling ({i}, {j}) must satisfy i < j < nbits")));
                }
                couplings.push((i, j, v));
            }
            Some(other) => return Err(Error::format(no, format!("unknown record '{other}'"))),
        }
    }
    let meta = InstanceMeta {
        system,
        components: layout.len(),
        layout: Some(layout),
        code,
        extra,
    };
    QuboInstance::new(linear, couplings, offset, meta).map_err(|e| Error::format(0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{build_clock_operator, build_system};
    use crate::models::{build_hamiltonian, build_propagators, SystemId, SystemSpec, TimeGrid};
    use crate::numerics::ComplexVector;
    use crate::qubo::encode_qubo_with_budget;

    fn h1_instance() -> QuboInstance {
        let h = build_hamiltonian(&SystemSpec::new(SystemId::H1)).unwrap().matrix;
        let grid = TimeGrid::with_step(0.0, 1.0, 2).unwrap();
        let props = build_propagators(&h, &grid).unwrap();
        let sys = build_system(&build_clock_operator(&props), &ComplexVector::basis(2, 0).unwrap()).unwrap();
        let mut inst = encode_qubo_with_budget(&sys, FixedPointCode::new(2, 0).unwrap(), 1 << 20, "H1").unwrap();
        inst.meta.extra.insert("dt".into(), "1".into());
        inst
    }

    #[test]
    fn round_trip() {
        let inst = h1_instance();
        let mut buf = Vec::new();
        write_instance_to(&inst, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("paraqube-qubo v1\nsystem H1\nL 2\nN 2\nR 2\nD 0\nlayout part-major\nnbits 16\n"));
        let back = read_instance_from(buf.as_slice()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn unknown_layout_is_rejected() {
        let mut buf = Vec::new();
        write_instance_to(&h1_instance(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("layout part-major", "layout interleaved");
        let err = read_instance_from(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 7, .. }), "{err}");
    }

    #[test]
    fn malformed_records() {
        let mut buf = Vec::new();
        write_instance_to(&h1_instance(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for bad in [
            text.replace("nbits 16", "nbits 12"),
            format!("{text}quad 3 1 1.0\n"),
            format!("{text}lin 0 1.0\n"),
            format!("{text}bogus 1\n"),
            text.replace("paraqube-qubo v1", "qubo v2"),
        ] {
            assert!(read_instance_from(bad.as_bytes()).is_err());
        }
    }
}
