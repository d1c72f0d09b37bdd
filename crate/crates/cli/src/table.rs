//! CSV tables with locale-independent 12-significant-digit numbers.

use std::io::Write;

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// exponent form outside `1e-4 <= |x| < 1e12`. Always uses `.` as separator.
pub fn fmt_num(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }
}

/// Row builder that formats numbers and leaves unavailable cells empty.
#[derive(Default)]
pub struct Row(Vec<String>);

impl Row {
    pub fn new() -> Self {
        Row(Vec::new())
    }

    pub fn num(mut self, x: f64) -> Self {
        self.0.push(fmt_num(x));
        self
    }

    pub fn nums<'a>(mut self, xs: impl IntoIterator<Item = &'a f64>) -> Self {
        self.0.extend(xs.into_iter().map(|x| fmt_num(*x)));
        self
    }

    /// `width` cells from `xs`, or `width` empty cells.
    pub fn opt_nums<'a>(
        mut self,
        width: usize,
        xs: Option<impl IntoIterator<Item = &'a f64>>,
    ) -> Self {
        match xs {
            Some(xs) => {
                let before = self.0.len();
                self = self.nums(xs);
                debug_assert_eq!(self.0.len() - before, width);
            }
            None => self.0.extend(std::iter::repeat_n(String::new(), width)),
        }
        self
    }

    pub fn text(mut self, s: impl Into<String>) -> Self {
        self.0.push(s.into());
        self
    }

    pub fn finish(self) -> Vec<String> {
        self.0
    }
}
