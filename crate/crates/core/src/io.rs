//! File formats: JSON with 17 significant digits, behaviour files and the
//! bipartite trial CSV.

use std::io::{self, Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::bell::{Behaviour, BehaviourFile, Scenario, SettingsDistribution};
use crate::error::{domain, Result};
use crate::protocol::TrialRecord;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Pretty JSON formatter that writes floats with 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

pub fn read_behaviour(path: &Path) -> Result<(Behaviour, SettingsDistribution)> {
    read_json::<BehaviourFile>(path)?.into_parts()
}

pub fn write_behaviour(path: &Path, b: &Behaviour, s: Option<&SettingsDistribution>) -> Result<()> {
    std::fs::write(path, to_json(&BehaviourFile::from_parts(b, s))?)?;
    Ok(())
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn require_bipartite(sc: Scenario) -> Result<()> {
    if sc.parties == 2 {
        Ok(())
    } else {
        Err(domain(format!("trial CSV covers bipartite scenarios only, got {sc}")))
    }
}

/// Writes `trial,x,y,a,b[,e]` rows; `labels` names the `e` column values.
pub fn write_trials<W: Write>(w: W, sc: Scenario, trials: &[TrialRecord], labels: Option<&[String]>) -> Result<()> {
    require_bipartite(sc)?;
    let mut out = csv::Writer::from_writer(w);
    let with_e = labels.is_some();
    if with_e {
        out.write_record(["trial", "x", "y", "a", "b", "e"])?;
    } else {
        out.write_record(["trial", "x", "y", "a", "b"])?;
    }
    for t in trials {
        let z = sc.settings_tuple(t.z);
        let c = sc.outcome_tuple(t.c);
        let mut row = vec![t.index.to_string(), z[0].to_string(), z[1].to_string(), c[0].to_string(), c[1].to_string()];
        if let Some(labels) = labels {
            let e = t.e.ok_or_else(|| domain(format!("trial {} has no label", t.index)))?;
            row.push(labels.get(e).cloned().ok_or_else(|| domain(format!("label index {e} out of range")))?);
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads trials written by [`write_trials`]; `e` labels are looked up in
/// `labels` when given.
pub fn read_trials<R: Read>(r: R, sc: Scenario, labels: Option<&[String]>) -> Result<Vec<TrialRecord>> {
    require_bipartite(sc)?;
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let expected = ["trial", "x", "y", "a", "b"];
    if headers.len() < 5 || headers.iter().take(5).ne(expected) {
        return Err(domain(format!("unexpected trial CSV header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<usize> {
            rec.get(i)
                .ok_or_else(|| domain(format!("row {} is missing column {i}", row + 1)))?
                .trim()
                .parse::<usize>()
                .map_err(|e| domain(format!("row {}: {e}", row + 1)))
        };
        let index = field(0)? as u64;
        if index != row as u64 + 1 {
            return Err(domain(format!("trial indices must be contiguous from 1 (row {} has {index})", row + 1)));
        }
        let (x, y, a, b) = (field(1)?, field(2)?, field(3)?, field(4)?);
        if x >= sc.settings || y >= sc.settings || a >= sc.outcomes || b >= sc.outcomes {
            return Err(domain(format!("row {}: symbol outside the scenario alphabet", row + 1)));
        }
        let e = match (rec.get(5), labels) {
            (Some(s), Some(labels)) => Some(
                labels
                    .iter()
                    .position(|l| l == s)
                    .ok_or_else(|| domain(format!("row {}: unknown label {s:?}", row + 1)))?,
            ),
            _ => None,
        };
        out.push(TrialRecord { index, z: sc.settings_index(&[x, y]), c: sc.outcome_index(&[a, b]), e });
    }
    Ok(out)
}
