use std::fmt::Write;

/// Whitespace table with a `#` column header; numbers use 17 significant
/// digits so a reread reproduces them bit for bit.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# {}", columns.join(" "));
        Self { text }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(self.text, "{}", cells.join(" "));
    }

    /// `# key = value` line after the rows.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key} = {value}");
    }

    pub fn finish(self) -> String {
        self.text
    }
}
