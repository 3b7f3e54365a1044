use sfgsim::protocols::format_sig;

/// A numeric column and its unit.
#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
}

pub fn col(name: impl Into<String>, unit: &'static str) -> Column {
    Column {
        name: name.into(),
        unit,
    }
}

/// Result of one run: a numeric table plus report-only annotations.
#[derive(Clone, Debug, Default)]
pub struct Output {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub notes: Vec<(String, String)>,
}

impl Output {
    pub fn single(columns: Vec<Column>, row: Vec<f64>) -> Self {
        Output {
            columns,
            rows: vec![row],
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    pub fn csv(&self) -> String {
        let mut s = self
            .columns
            .iter()
            .map(|c| format!("{} [{}]", c.name, c.unit))
            .collect::<Vec<_>>()
            .join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(
                &row.iter()
                    .map(|&x| format_sig(x))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            s.push('\n');
        }
        s
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.notes {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if self.rows.len() > 1 {
                s.push_str(&format!("\n[point {}]\n", i + 1));
            }
            for (c, x) in self.columns.iter().zip(row) {
                let unit = if c.unit == "1" {
                    String::new()
                } else {
                    format!(" {}", c.unit)
                };
                s.push_str(&format!("{} = {}{unit}\n", c.name, report_number(*x)));
            }
        }
        s
    }
}

fn report_number(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.6e}")
    } else {
        format!("{x:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_units_and_twelve_digits() {
        let o = Output::single(
            vec![col("V_Z", "1"), col("angle", "rad")],
            vec![0.5, 1.0 / 3.0],
        );
        let csv = o.csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("V_Z [1],angle [rad]"));
        assert_eq!(lines.next(), Some("5.00000000000e-1,3.33333333333e-1"));
    }

    #[test]
    fn report_lists_notes_then_values() {
        let o = Output::single(vec![col("S", "1"), col("p", "1")], vec![2.5, 1e-9])
            .note("experiment", "bell");
        assert_eq!(
            o.report(),
            "experiment = bell\nS = 2.500000\np = 1.000000e-9\n"
        );
    }
}
