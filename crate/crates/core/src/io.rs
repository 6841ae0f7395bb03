//! JSON tensor files.
//!
//! ```json
//! { "dims": [n1, n2, n3],
//!   "entries": [ {"i": 0, "j": 0, "k": 1, "num": "1", "den": "1"}, ... ] }
//! ```
//!
//! Indices are 0-based; `num` and `den` are decimal strings of arbitrary
//! length with `den > 0`. Writers emit reduced fractions sorted by `(i, j, k)`.

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Rational, Tensor};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    dims: [usize; 3],
    entries: Vec<EntryFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    i: usize,
    j: usize,
    k: usize,
    num: String,
    den: String,
}

fn parse_int(s: &str, what: &str) -> Result<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("{what} {s:?} is not a decimal integer")));
    }
    s.parse().map_err(|e| Error::Parse(format!("{what} {s:?}: {e}")))
}

/// Parses a tensor file. Structural problems are reported as [`Error::Parse`];
/// violations of tensor invariants (duplicates, zeros, simple tensors) as
/// [`Error::InvalidArgument`].
pub fn read_tensor(json: &str) -> Result<Tensor> {
    let file: TensorFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    let mut entries = Vec::with_capacity(file.entries.len());
    for e in file.entries {
        let num = parse_int(&e.num, "numerator")?;
        let den = parse_int(&e.den, "denominator")?;
        if !den.is_positive() {
            return Err(Error::Parse(format!("denominator must be positive at ({},{},{})", e.i, e.j, e.k)));
        }
        entries.push(([e.i, e.j, e.k], Rational::new(num, den)));
    }
    Tensor::new(file.dims, entries)
}

/// Serializes `t` as pretty-printed JSON with a trailing newline.
pub fn write_tensor(t: &Tensor) -> String {
    let file = TensorFile {
        dims: t.dims(),
        entries: t
            .entries()
            .map(|(&[i, j, k], c)| EntryFile {
                i,
                j,
                k,
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("tensor files always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_families() {
        for t in [
            Tensor::unit(3).unwrap(),
            Tensor::matmul(2, 1, 3).unwrap(),
            Tensor::big_cw(2).unwrap(),
            Tensor::group_z3(),
        ] {
            assert_eq!(read_tensor(&write_tensor(&t)).unwrap(), t);
        }
    }

    #[test]
    fn big_fractions_survive() {
        let json = r#"{"dims":[2,2,2],"entries":[
            {"i":0,"j":0,"k":0,"num":"-123456789012345678901234567890","den":"7"},
            {"i":1,"j":1,"k":1,"num":"6","den":"4"}]}"#;
        let t = read_tensor(json).unwrap();
        assert_eq!(t.get(&[1, 1, 1]).unwrap(), &Rational::new(3.into(), 2.into()));
        let out = write_tensor(&t);
        assert!(out.contains(r#""den": "2""#));
        assert_eq!(read_tensor(&out).unwrap(), t);
    }

    #[test]
    fn writer_sorts_entries() {
        let out = write_tensor(&Tensor::w_state());
        let a = out.find(r#""k": 1"#).unwrap();
        let b = out.find(r#""i": 1"#).unwrap();
        assert!(a < b);
    }

    #[test]
    fn malformed_files() {
        let parse = |s: &str| read_tensor(s).unwrap_err();
        assert!(matches!(parse("{"), Error::Parse(_)));
        assert!(matches!(parse(r#"{"dims":[2,2],"entries":[]}"#), Error::Parse(_)));
        let entry = |num: &str, den: &str| {
            format!(
                r#"{{"dims":[2,2,2],"entries":[{{"i":0,"j":0,"k":0,"num":"{num}","den":"{den}"}},{{"i":1,"j":1,"k":1,"num":"1","den":"1"}}]}}"#
            )
        };
        assert!(matches!(parse(&entry("1", "0")), Error::Parse(_)));
        assert!(matches!(parse(&entry("1", "-2")), Error::Parse(_)));
        assert!(matches!(parse(&entry("1.5", "1")), Error::Parse(_)));
        assert!(matches!(parse(&entry("0", "1")), Error::InvalidArgument(_)));
        let dup = r#"{"dims":[2,2,2],"entries":[
            {"i":0,"j":0,"k":0,"num":"1","den":"1"},
            {"i":0,"j":0,"k":0,"num":"2","den":"1"},
            {"i":1,"j":1,"k":1,"num":"1","den":"1"}]}"#;
        assert!(matches!(parse(dup), Error::InvalidArgument(_)));
        let out_of_range = r#"{"dims":[2,2,2],"entries":[{"i":2,"j":0,"k":0,"num":"1","den":"1"}]}"#;
        assert!(matches!(parse(out_of_range), Error::InvalidArgument(_)));
    }
}
