//! CSV assembly with `#` metadata lines.
//!
//! Floats are printed in shortest round-trip exponent form, so the text is a
//! pure function of the computed values.

use std::fmt::Write as _;

use crate::config::RunConfig;

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let mut csv = Self {
            text: String::new(),
        };
        csv.meta("memphase", env!("CARGO_PKG_VERSION"));
        csv.meta("command", command);
        csv.meta("config_sha256", config.hash());
        csv.meta("seed", config.seed);
        csv
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.text, "# {key}: {value}").expect("writing to a String");
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.text.push_str(&columns.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    /// Two blank lines start a new table (a new gnuplot `index`).
    pub fn next_table(&mut self) {
        self.text.push_str("\n\n");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(true) => "feasible".into(),
            Cell::Flag(false) => "infeasible".into(),
        }
    }
}

pub fn float(x: f64) -> String {
    if x == 0.0 {
        // one spelling for both signed zeros
        "0e0".into()
    } else {
        format!("{x:e}")
    }
}
