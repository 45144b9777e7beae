//! Column format for fields.
//!
//! ```text
//! # kdv-field 1
//! # max_mode = 4
//! # real_valued = true
//! # mean_zero = true
//! # generation = {"s":0.4,"epsilon":0.01,"amplitude":0.05,"seed":1,"max_mode":4}
//! xi,re,im
//! -4,1.5e-1,-2e-2
//! ...
//! ```
//!
//! One row per frequency from `-K` to `K`. Floats are written in shortest
//! round-trip form, so reading a file back reproduces the field bit for bit.
//! `generation` is free-form JSON (or `null`) describing how the field was made.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::SpectralField;
use crate::error::{Error, Result};

const MAGIC: &str = "# kdv-field 1";

pub fn write_field<W: Write>(
    mut w: W,
    field: &SpectralField,
    generation: Option<&serde_json::Value>,
) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# max_mode = {}", field.max_mode())?;
    writeln!(w, "# real_valued = {}", field.is_real_valued())?;
    writeln!(w, "# mean_zero = {}", field.is_mean_zero())?;
    let gen = generation.map_or_else(|| "null".to_string(), |g| g.to_string());
    writeln!(w, "# generation = {gen}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["xi", "re", "im"])?;
    for (xi, c) in field.frequencies().zip(field.coeffs()) {
        csv.write_record([xi.to_string(), format!("{:e}", c.re), format!("{:e}", c.im)])?;
    }
    csv.flush()?;
    Ok(())
}

/// Parsed field plus its `generation` header.
pub struct FieldFile {
    pub field: SpectralField,
    pub generation: serde_json::Value,
}

pub fn read_field<R: Read>(r: R) -> Result<FieldFile> {
    let mut reader = BufReader::new(r);
    let mut header = Vec::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Format("missing column header".into()));
        }
        let line = line.trim_end().to_string();
        if let Some(rest) = line.strip_prefix('#') {
            header.push(rest.trim().to_string());
        } else if line.trim() == "xi,re,im" {
            break;
        } else {
            return Err(Error::Format(format!("unexpected line before columns: {line}")));
        }
    }
    if header.first().map(String::as_str) != Some(&MAGIC[2..]) {
        return Err(Error::Format("missing kdv-field magic line".into()));
    }
    let value = |key: &str| -> Result<&str> {
        header
            .iter()
            .find_map(|h| {
                let (k, v) = h.split_once('=')?;
                (k.trim() == key).then(|| v.trim())
            })
            .ok_or_else(|| Error::Format(format!("missing header key {key}")))
    };
    let parse_bool = |key: &str| -> Result<bool> {
        value(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad boolean for {key}")))
    };
    let max_mode: usize = value("max_mode")?
        .parse()
        .map_err(|_| Error::Format("bad max_mode".into()))?;
    let real_valued = parse_bool("real_valued")?;
    let mean_zero = parse_bool("mean_zero")?;
    let generation: serde_json::Value = serde_json::from_str(value("generation")?)?;

    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut coeffs = Vec::with_capacity(2 * max_mode + 1);
    for (row, rec) in csv.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("bad number in row {row}")))
        };
        let xi = rec
            .get(0)
            .and_then(|s| s.trim().parse::<i64>().ok())
            .ok_or_else(|| Error::Format(format!("bad frequency in row {row}")))?;
        if xi != row as i64 - max_mode as i64 {
            return Err(Error::Format(format!("row {row} has frequency {xi}, out of order")));
        }
        coeffs.push(Complex64::new(num(1)?, num(2)?));
    }
    let mut field = SpectralField::from_coeffs(max_mode, coeffs)?;
    if real_valued {
        if field.conjugate_symmetry_defect() != 0.0 {
            return Err(Error::Format("flagged real-valued but not conjugate-symmetric".into()));
        }
        field.symmetrize_in_place();
    }
    if mean_zero {
        if field.coeff(0) != Complex64::new(0.0, 0.0) {
            return Err(Error::Format("flagged mean-zero but coeff(0) != 0".into()));
        }
        field.set_flags(real_valued, true);
    }
    Ok(FieldFile { field, generation })
}

pub fn save_field(path: &Path, field: &SpectralField, generation: Option<&serde_json::Value>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(file, field, generation)
}

pub fn load_field(path: &Path) -> Result<FieldFile> {
    read_field(std::fs::File::open(path)?)
}
