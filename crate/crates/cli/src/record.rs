//! Result rows and their CSV / JSON renderings.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Experiment, ScenarioConfig};
use crate::experiments::columns;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    Float(f64),
    Empty,
}

impl Cell {
    pub fn opt_int(v: Option<usize>) -> Cell {
        v.map_or(Cell::Empty, |x| Cell::Int(x as i64))
    }

    /// 17 significant digits in scientific notation for floats.
    pub fn csv(&self) -> String {
        match self {
            Cell::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format!("{f:.16e}"),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            // NaN and infinities become null
            Cell::Float(f) => serde_json::Number::from_f64(*f).map_or(Value::Null, Value::Number),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment: Experiment,
    /// one cell per column, scenario_id first
    pub cells: Vec<Cell>,
    /// None when the experiment has no pass/fail check for this row
    pub pass: Option<bool>,
}

impl ResultRecord {
    pub fn new(id: &str, experiment: Experiment, values: Vec<Cell>, pass: Option<bool>) -> Self {
        let mut cells = Vec::with_capacity(values.len() + 1);
        cells.push(Cell::Str(id.to_string()));
        cells.extend(values);
        debug_assert_eq!(cells.len(), columns(experiment).len());
        ResultRecord { experiment, cells, pass }
    }

    fn json(&self) -> Value {
        let mut m = Map::new();
        for (k, c) in columns(self.experiment).iter().zip(&self.cells) {
            m.insert(k.to_string(), c.json());
        }
        m.insert("pass".into(), self.pass.map_or(Value::Null, Value::Bool));
        Value::Object(m)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PassCounts {
    pub pass: usize,
    pub fail: usize,
    pub unchecked: usize,
}

impl PassCounts {
    pub fn of(records: &[ResultRecord]) -> Self {
        let mut p = PassCounts::default();
        for r in records {
            match r.pass {
                Some(true) => p.pass += 1,
                Some(false) => p.fail += 1,
                None => p.unchecked += 1,
            }
        }
        p
    }
}

pub fn build_id() -> String {
    format!("dbgibbs-cli {}", env!("CARGO_PKG_VERSION"))
}

/// Header plus one line per record.
pub fn to_csv(experiment: Experiment, records: &[ResultRecord]) -> String {
    let mut s = columns(experiment).join(",");
    s.push('\n');
    for r in records {
        s.push_str(&r.cells.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

pub fn to_json_summary(config: &ScenarioConfig, records: &[ResultRecord]) -> String {
    let v = json!({
        "scenario": config,
        "scenario_id": config.id(),
        "experiment": config.experiment.name(),
        "build_id": build_id(),
        "seed": config.seed,
        "columns": columns(config.experiment),
        "records": records.iter().map(ResultRecord::json).collect::<Vec<_>>(),
        "pass_counts": PassCounts::of(records),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(Cell::Float(0.1).csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(2.0).csv(), "2.0000000000000000e0");
        assert_eq!(Cell::Empty.csv(), "");
        assert_eq!(Cell::Str("a,b".into()).csv(), "\"a,b\"");
    }

    #[test]
    fn header_matches_schema() {
        let r = ResultRecord::new(
            "x",
            Experiment::Cmi,
            vec![Cell::Int(1), Cell::Float(0.5), Cell::Empty, Cell::Empty],
            None,
        );
        let csv = to_csv(Experiment::Cmi, &[r]);
        assert_eq!(csv.lines().next().unwrap(), "scenario_id,dist_AC,qcmi_nats,fit_slope,fit_r2");
        assert_eq!(csv.lines().nth(1).unwrap(), "x,1,5.0000000000000000e-1,,");
    }

    #[test]
    fn counts() {
        let mk = |p| ResultRecord::new("x", Experiment::Verify, vec![Cell::Str("c".into()), Cell::Float(0.0), Cell::Float(1.0)], p);
        let c = PassCounts::of(&[mk(Some(true)), mk(Some(false)), mk(None), mk(Some(true))]);
        assert_eq!(c, PassCounts { pass: 2, fail: 1, unchecked: 1 });
    }
}
