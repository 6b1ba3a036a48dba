//! Text formatting shared by every exporter.

/// Seventeen significant digits in scientific notation; round-trips every
/// `f64` exactly and never depends on the locale.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Joins already formatted fields into one CSV line (no quoting needed,
/// fields never contain commas).
pub fn csv_line<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = fields
        .into_iter()
        .map(|s| s.as_ref().to_owned())
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, -1.618033988749895, 1e-300, 2.0 / 3.0, f64::MAX] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
    }
}
