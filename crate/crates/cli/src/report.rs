use std::fmt::Write as _;
use std::time::Duration;

use ci_engine::rational::{self, Q};
use ci_engine::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Human,
    Records,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Text(String),
    List(Vec<String>),
    /// Rows of already formatted entries.
    Matrix(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: Vec<String>,
    pub items: Vec<(String, Payload)>,
    pub elapsed: Option<Duration>,
}

impl Report {
    pub fn new(command: &[String]) -> Self {
        Report {
            command: command.to_vec(),
            ..Report::default()
        }
    }

    pub fn text(&mut self, key: &str, value: impl ToString) {
        self.items.push((key.into(), Payload::Text(value.to_string())));
    }

    pub fn list(&mut self, key: &str, values: Vec<String>) {
        self.items.push((key.into(), Payload::List(values)));
    }

    pub fn rows(&mut self, key: &str, rows: Vec<Vec<String>>) {
        self.items.push((key.into(), Payload::Matrix(rows)));
    }

    pub fn exact(&mut self, key: &str, m: &Matrix<Q>) {
        self.rows(key, rows_of(m, rational::format));
    }

    pub fn approx(&mut self, key: &str, m: &Matrix<f64>) {
        self.rows(key, rows_of(m, |x| float(*x)));
    }

    pub fn get(&self, key: &str) -> Option<&Payload> {
        self.items.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Human => {
                let _ = writeln!(out, "command: {}", self.command.join(" "));
                for (k, v) in &self.items {
                    match v {
                        Payload::Text(t) => {
                            let _ = writeln!(out, "{k}: {t}");
                        }
                        Payload::List(xs) => {
                            let _ = writeln!(out, "{k}: [{}]", xs.join(", "));
                        }
                        Payload::Matrix(rows) => {
                            let cols = rows.first().map_or(0, Vec::len);
                            let _ = writeln!(out, "{k} ({}x{cols}):", rows.len());
                            let width = rows.iter().flatten().map(String::len).max().unwrap_or(0);
                            for r in rows {
                                let cells: Vec<String> = r.iter().map(|c| format!("{c:>width$}")).collect();
                                let _ = writeln!(out, "  {}", cells.join(" "));
                            }
                        }
                    }
                }
                if let Some(d) = self.elapsed {
                    let _ = writeln!(out, "elapsed: {:.3} ms", d.as_secs_f64() * 1e3);
                }
            }
            Format::Records => {
                let _ = writeln!(out, "command\t{}", self.command.join(" "));
                for (k, v) in &self.items {
                    match v {
                        Payload::Text(t) => {
                            let _ = writeln!(out, "{k}\t{t}");
                        }
                        Payload::List(xs) => {
                            let _ = writeln!(out, "{k}\t{}", xs.join("\t"));
                        }
                        Payload::Matrix(rows) => {
                            for (i, r) in rows.iter().enumerate() {
                                let _ = writeln!(out, "{k}\t{i}\t{}", r.join("\t"));
                            }
                        }
                    }
                }
                if let Some(d) = self.elapsed {
                    let _ = writeln!(out, "elapsed_ms\t{:.3}", d.as_secs_f64() * 1e3);
                }
            }
        }
        out
    }
}

fn rows_of<S>(m: &Matrix<S>, f: impl Fn(&S) -> String) -> Vec<Vec<String>> {
    (0..m.rows)
        .map(|r| (0..m.cols).map(|c| f(&m.data[r * m.cols + c])).collect())
        .collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn rationals(xs: &[Q]) -> Vec<String> {
    xs.iter().map(rational::format).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ci_engine::rational::q;

    #[test]
    fn records_are_one_per_line() {
        let mut r = Report::new(&["eval".into(), "x".into()]);
        r.text("theory", "fs");
        r.exact(
            "m",
            &Matrix {
                rows: 2,
                cols: 1,
                data: vec![q(1, 3), q(2, 3)],
            },
        );
        let s = r.render(Format::Records);
        assert_eq!(s, "command\teval x\ntheory\tfs\nm\t0\t1/3\nm\t1\t2/3\n");
        assert!(r.render(Format::Human).contains("m (2x1):"));
    }
}
