use std::io::{Read, Write};

use super::HarnessError;

pub const CSV_HEADER: [&str; 6] = ["method", "n", "mu", "metric", "value", "seed"];

/// One measurement, one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub method: String,
    pub n: u64,
    pub mu: f64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

impl BenchRecord {
    pub fn new(method: &str, n: usize, mu: f64, metric: &str, value: f64, seed: u64) -> Self {
        Self {
            method: method.to_owned(),
            n: n as u64,
            mu,
            metric: metric.to_owned(),
            value,
            seed,
        }
    }

    fn fields(&self) -> [String; 6] {
        [
            self.method.clone(),
            self.n.to_string(),
            format_g6(self.mu),
            self.metric.clone(),
            format_g6(self.value),
            self.seed.to_string(),
        ]
    }
}

/// `printf("%g")`: six significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 <= |x| < 1e6`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Record(format!("unexpected header {header:?}")));
    }
    let bad = |what: &str, row: &csv::StringRecord| HarnessError::Record(format!("bad {what} in {row:?}"));
    let mut records = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 6 {
            return Err(bad("field count", &row));
        }
        records.push(BenchRecord {
            method: row[0].to_owned(),
            n: row[1].parse().map_err(|_| bad("n", &row))?,
            mu: row[2].parse().map_err(|_| bad("mu", &row))?,
            metric: row[3].to_owned(),
            value: row[4].parse().map_err(|_| bad("value", &row))?,
            seed: row[5].parse().map_err(|_| bad("seed", &row))?,
        });
    }
    Ok(records)
}
