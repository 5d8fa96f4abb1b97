//! Row-oriented output shared by every command.

use std::io::{self, Write};

use archlab::report::fmt_f64;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    /// Non-finite numbers become `null`.
    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => Value::Number(fmt_f64(*x).parse::<Number>().expect("formatted float is valid JSON")),
            Cell::Num(_) => Value::Null,
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    fn object(&self, row: &[Cell]) -> Value {
        let map: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
        Value::Object(map)
    }

    /// Array of row objects, keys in column order.
    pub fn to_json(&self) -> Value {
        Value::Array(self.rows.iter().map(|r| self.object(r)).collect())
    }

    /// The single row of a one-row report as an object.
    pub fn record_json(&self) -> Value {
        assert_eq!(self.rows.len(), 1, "record tables hold one row");
        self.object(&self.rows[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "n", "label", "ok"]);
        t.push(vec![0.1.into(), 3u64.into(), "a".into(), true.into()]);
        t.push(vec![f64::NAN.into(), 0u64.into(), "b".into(), false.into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,n,label,ok\n1.0000000000000001e-1,3,a,true\nNaN,0,b,false\n"
        );
    }

    #[test]
    fn json_keeps_digits_and_order() {
        let text = serde_json::to_string(&sample().to_json()).unwrap();
        assert_eq!(
            text,
            r#"[{"x":1.0000000000000001e-1,"n":3,"label":"a","ok":true},{"x":null,"n":0,"label":"b","ok":false}]"#
        );
        let back: Vec<Map<String, Value>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back[0]["x"].as_f64(), Some(0.1));
    }
}
