//! CSV helpers shared by the library and the command-line tool.
//!
//! Floats are written in scientific notation with 17 significant digits, which
//! is enough for an exact round trip through `str::parse::<f64>`.

use std::io::{self, Write};

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
        }
    }
}

/// Writes a header line followed by one line per row.
pub fn write_csv<W, I, R>(out: &mut W, header: &[String], rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: AsRef<[Cell]>,
{
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(Cell::render).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let header = vec!["a".to_string(), "n".to_string()];
        write_csv(&mut buf, &header, [[Cell::Float(0.5), Cell::Int(3)]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,n\n5.0000000000000000e-1,3\n");
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
