use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_theorem6_family, GrowthTable, Preset, SequenceFamily, SequenceValues};
use crate::error::{Error, Result};
use crate::numerics::Slr;

/// Family definition file (TOML). Exactly one of `preset`, `table`, `f_table` is set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub name: Option<String>,
    pub preset: Option<String>,
    /// Tabulation CSV of the four sequences.
    pub table: Option<PathBuf>,
    /// Two-column CSV `(x, f(x))` for the growth-function builder.
    pub f_table: Option<PathBuf>,
    pub k_max: Option<u64>,
    pub nu: Option<u64>,
    pub k_min: Option<u64>,
}

impl FamilyFile {
    pub fn resolve(&self, base: &Path) -> Result<SequenceFamily> {
        let chosen = [self.preset.is_some(), self.table.is_some(), self.f_table.is_some()];
        if chosen.iter().filter(|c| **c).count() != 1 {
            return Err(Error::Parse("family file needs exactly one of preset, table, f_table".into()));
        }
        let mut fam = if let Some(p) = &self.preset {
            SequenceFamily::preset(Preset::from_name(p)?)
        } else if let Some(t) = &self.table {
            let file = std::fs::File::open(base.join(t))?;
            let (start, rows) = read_tabulation(file)?;
            let start = self.k_min.unwrap_or(start).max(start);
            SequenceFamily::from_table("table", start, rows, start)?
        } else {
            let path = base.join(self.f_table.as_ref().expect("checked above"));
            let f = read_growth_table(std::fs::File::open(path)?)?;
            let k_max = self.k_max.ok_or_else(|| Error::Parse("f_table needs k_max".into()))?;
            build_theorem6_family(&f, k_max)?
        };
        if let Some(name) = &self.name {
            fam.name = name.clone();
        }
        if let Some(nu) = self.nu {
            if nu < fam.k_min {
                return Err(Error::Domain(format!("nu = {nu} below k_min = {}", fam.k_min)));
            }
            fam.nu = nu;
        }
        Ok(fam)
    }
}

pub fn load_family(path: &Path) -> Result<SequenceFamily> {
    let text = std::fs::read_to_string(path)?;
    let spec: FamilyFile = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    spec.resolve(base)
}

const TAB_HEADER: [&str; 9] =
    ["k", "a1_sign", "a1_logmag", "a2_sign", "a2_logmag", "r_sign", "r_logmag", "R_sign", "R_logmag"];

pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_tabulation<W: Write>(out: W, fam: &SequenceFamily, lo: u64, hi: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TAB_HEADER).map_err(csv_err)?;
    for k in lo..=hi {
        let v = fam.values(k)?;
        let mut rec = vec![k.to_string()];
        for x in [v.a1, v.a2, v.r, v.big_r] {
            rec.push(x.sign().to_string());
            rec.push(fmt_f64(x.logmag()));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a tabulation; indices must be consecutive. Returns the first index and the rows.
pub fn read_tabulation<R: Read>(input: R) -> Result<(u64, Vec<SequenceValues>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut start = None;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != TAB_HEADER.len() {
            return Err(Error::Parse(format!("tabulation row has {} fields", rec.len())));
        }
        let k: u64 = parse(&rec[0])?;
        let expected = start.map(|s: u64| s + rows.len() as u64);
        if let Some(e) = expected {
            if k != e {
                return Err(Error::Parse(format!("tabulation index {k}, expected {e}")));
            }
        } else {
            start = Some(k);
        }
        let mut vals = [Slr::ZERO; 4];
        for (i, v) in vals.iter_mut().enumerate() {
            let sign: i8 = parse(&rec[1 + 2 * i])?;
            let logmag: f64 = parse(&rec[2 + 2 * i])?;
            *v = Slr::new(sign, logmag)?;
        }
        rows.push(SequenceValues { a1: vals[0], a2: vals[1], r: vals[2], big_r: vals[3] });
    }
    let start = start.ok_or_else(|| Error::Parse("empty tabulation".into()))?;
    Ok((start, rows))
}

pub fn read_growth_table<R: Read>(input: R) -> Result<GrowthTable> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::Parse("growth table rows need two fields".into()));
        }
        xs.push(parse(&rec[0])?);
        ys.push(parse(&rec[1])?);
    }
    GrowthTable::new(xs, ys)
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulation_round_trip() {
        let fam = SequenceFamily::preset(Preset::LogSlow);
        let mut buf = Vec::new();
        write_tabulation(&mut buf, &fam, 5, 30).unwrap();
        let (start, rows) = read_tabulation(buf.as_slice()).unwrap();
        assert_eq!(start, 5);
        assert_eq!(rows.len(), 26);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(*r, fam.values(5 + i as u64).unwrap());
        }
    }

    #[test]
    fn family_file_variants() {
        let spec: FamilyFile = toml::from_str("preset = \"double_exp\"\nnu = 4\n").unwrap();
        let fam = spec.resolve(Path::new(".")).unwrap();
        assert_eq!(fam.nu, 4);
        let both: FamilyFile = toml::from_str("preset = \"double_exp\"\ntable = \"x.csv\"\n").unwrap();
        assert!(both.resolve(Path::new(".")).is_err());
        assert!(toml::from_str::<FamilyFile>("colour = 3").is_err());
    }

    #[test]
    fn gaps_in_tabulation_rejected() {
        let text = "k,a1_sign,a1_logmag,a2_sign,a2_logmag,r_sign,r_logmag,R_sign,R_logmag\n\
                    3,1,0,1,1,1,-2,1,-1\n5,1,2,1,3,1,-2,1,-1\n";
        assert!(read_tabulation(text.as_bytes()).is_err());
    }
}
