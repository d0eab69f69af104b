//! Number formatting and provenance headers shared by the CSV writers.

/// 17 significant digits, enough to round-trip any `f64`.
pub fn full(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Three significant digits for human-readable tables.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let digits = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

/// Leading `#` comment line for CSV artifacts; the crate's CSV reader skips it.
pub fn provenance_line(seed: u64, config_hash: &str) -> String {
    format!(
        "# s2net {} seed={seed} config={config_hash}\n",
        crate::VERSION
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(full(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(sig3(0.5512), "0.551");
        assert_eq!(sig3(61.64), "61.6");
        assert_eq!(sig3(120.4), "120");
        assert_eq!(sig3(5.556), "5.56");
    }
}
