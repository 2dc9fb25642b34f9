/// Minimal CSV builder: comma separated, LF line endings, header first.
pub struct Csv {
    out: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            out: header.join(",") + "\n",
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.width);
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Shortest round-trip representation, switching to exponent notation
/// outside [1e-4, 1e6).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
