//! Reading 2×2 counts from JSON (`{"n11":..,"n01":..,"n10":..,"n00":..}`,
//! extra keys ignored) or CSV with header `t,r,count`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::probability::CellCounts;

pub fn counts_from_json(text: &str) -> Result<CellCounts> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Deserialize)]
struct Row {
    t: u8,
    r: u8,
    count: u64,
}

pub fn counts_from_csv(text: &str) -> Result<CellCounts> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut cells: [Option<u64>; 4] = [None; 4];
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let idx = match (row.t, row.r) {
            (1, 1) => 0,
            (0, 1) => 1,
            (1, 0) => 2,
            (0, 0) => 3,
            (t, r) => return Err(Error::invalid(format!("cell ({t},{r}) is not binary"))),
        };
        if cells[idx].replace(row.count).is_some() {
            return Err(Error::invalid(format!("cell ({},{}) listed twice", row.t, row.r)));
        }
    }
    match cells {
        [Some(a), Some(b), Some(c), Some(d)] => Ok(CellCounts::new(a, b, c, d)),
        _ => Err(Error::invalid("CSV must list all four (t,r) cells")),
    }
}

/// Format is chosen by extension; anything other than `.csv` is read as JSON.
pub fn read_counts(path: &Path) -> Result<CellCounts> {
    let text = std::fs::read_to_string(path)?;
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        counts_from_csv(&text)
    } else {
        counts_from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::estimate_joint;
    use proptest::prelude::*;

    #[test]
    fn json_ignores_extra_fields() {
        let c = counts_from_json(r#"{"source": "somewhere", "n11": 99, "n01": 18, "n10": 5, "n00": 338}"#).unwrap();
        assert_eq!(c, CellCounts::new(99, 18, 5, 338));
        assert!(counts_from_json(r#"{"n11": 1}"#).is_err());
    }

    #[test]
    fn csv_in_any_row_order() {
        let c = counts_from_csv("t,r,count\n0,0,338\n1,1,99\n1,0,5\n0,1,18\n").unwrap();
        assert_eq!(c, CellCounts::new(99, 18, 5, 338));
        assert!(counts_from_csv("t,r,count\n1,1,3\n").is_err());
        assert!(counts_from_csv("t,r,count\n1,1,3\n1,1,4\n0,1,1\n0,0,1\n").is_err());
        assert!(counts_from_csv("t,r,count\n2,1,3\n").is_err());
    }

    #[test]
    fn read_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let j = dir.path().join("c.json");
        std::fs::write(&j, r#"{"n11":1,"n01":2,"n10":3,"n00":4}"#).unwrap();
        let c = dir.path().join("c.csv");
        std::fs::write(&c, "t,r,count\n1,1,1\n0,1,2\n1,0,3\n0,0,4\n").unwrap();
        assert_eq!(read_counts(&j).unwrap(), read_counts(&c).unwrap());
        assert!(read_counts(&dir.path().join("missing.json")).is_err());
    }

    proptest! {
        #[test]
        fn frequencies_reconstruct_counts(a in 0u64..5000, b in 0u64..5000, c in 0u64..5000, d in 1u64..5000) {
            let counts = CellCounts::new(a, b, c, d);
            let n = counts.total() as f64;
            let p = estimate_joint(&counts).unwrap();
            let back = p.as_array().map(|x| (x * n).round() as u64);
            prop_assert_eq!(CellCounts::from_array(back), counts);
        }
    }
}
