//! Result rows and their CSV / JSON encodings.

use std::io::Write;

use serde::Deserialize;

use crate::CliError;

pub const COLUMNS: [&str; 11] = [
    "experiment",
    "input",
    "N",
    "lambda",
    "param_name",
    "param_value",
    "epsilon",
    "fidelity",
    "mean",
    "std",
    "diagnostics",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub input: String,
    pub n_qubits: Option<usize>,
    pub lambda: Option<f64>,
    pub param_name: String,
    pub param_value: Option<f64>,
    pub epsilon: Option<f64>,
    pub fidelity: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub diagnostics: String,
}

impl ResultRow {
    pub fn new(experiment: &str, input: impl Into<String>) -> Self {
        Self {
            experiment: experiment.to_string(),
            input: input.into(),
            ..Self::default()
        }
    }
}

/// 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn round12(x: f64) -> f64 {
    fmt_float(x).parse().expect("formatted float parses")
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(COLUMNS)?;
    for r in rows {
        wr.write_record([
            r.experiment.clone(),
            r.input.clone(),
            r.n_qubits.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(r.lambda),
            r.param_name.clone(),
            fmt_opt(r.param_value),
            fmt_opt(r.epsilon),
            fmt_opt(r.fidelity),
            fmt_opt(r.mean),
            fmt_opt(r.std),
            r.diagnostics.clone(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn to_json(rows: &[ResultRow]) -> serde_json::Value {
    use serde_json::{json, Value};
    let num = |x: Option<f64>| x.map_or(Value::Null, |v| json!(round12(v)));
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "experiment": r.experiment,
                    "input": r.input,
                    "N": r.n_qubits,
                    "lambda": num(r.lambda),
                    "param_name": r.param_name,
                    "param_value": num(r.param_value),
                    "epsilon": num(r.epsilon),
                    "fidelity": num(r.fidelity),
                    "mean": num(r.mean),
                    "std": num(r.std),
                    "diagnostics": r.diagnostics,
                })
            })
            .collect(),
    )
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut w: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, &to_json(rows))?;
    writeln!(w)
}

#[derive(Deserialize)]
struct CsvRecord {
    experiment: String,
    input: String,
    #[serde(rename = "N")]
    n: Option<usize>,
    lambda: Option<f64>,
    param_name: String,
    param_value: Option<f64>,
    epsilon: Option<f64>,
    fidelity: Option<f64>,
    mean: Option<f64>,
    std: Option<f64>,
    diagnostics: String,
}

/// Parses a table written by [`write_csv`].
pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<ResultRow>, CliError> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| CliError::Config(format!("csv header: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    if header != COLUMNS {
        return Err(CliError::Config(format!("unexpected csv header {header:?}")));
    }
    rd.deserialize::<CsvRecord>()
        .map(|rec| {
            let c = rec.map_err(|e| CliError::Config(format!("csv row: {e}")))?;
            Ok(ResultRow {
                experiment: c.experiment,
                input: c.input,
                n_qubits: c.n,
                lambda: c.lambda,
                param_name: c.param_name,
                param_value: c.param_value,
                epsilon: c.epsilon,
                fidelity: c.fidelity,
                mean: c.mean,
                std: c.std,
                diagnostics: c.diagnostics,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ResultRow {
        ResultRow {
            experiment: "sweep-lambda".into(),
            input: "fock:1".into(),
            n_qubits: Some(4),
            lambda: Some(0.151_234_567_890_123),
            param_name: "p_z".into(),
            param_value: Some(0.025),
            epsilon: Some(0.115_5),
            fidelity: None,
            mean: None,
            std: Some(1.0 / 3.0),
            diagnostics: "edge=1.0e-9, warn".into(),
        }
    }

    fn csv_string(rows: &[ResultRow]) -> String {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        let s = csv_string(&[]);
        assert_eq!(s, format!("{}\n", COLUMNS.join(",")));
        assert!(read_csv(s.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let row = sample();
        let back = read_csv(csv_string(&[row.clone()]).as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!(b.experiment, row.experiment);
        assert_eq!(b.diagnostics, row.diagnostics);
        assert_eq!(b.n_qubits, Some(4));
        assert_eq!(b.fidelity, None);
        assert_eq!(b.lambda, Some(round12(row.lambda.unwrap())));
        assert_eq!(b.std, Some(round12(1.0 / 3.0)));
        // a second trip is exact
        assert_eq!(read_csv(csv_string(&back).as_bytes()).unwrap(), back);
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(0.1), "1.00000000000e-1");
        assert_eq!(fmt_float(-1234.5), "-1.23450000000e3");
    }

    #[test]
    fn json_keys_and_nulls() {
        let v = to_json(&[sample()]);
        let obj = v[0].as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut want = COLUMNS.to_vec();
        keys.sort_unstable();
        want.sort_unstable();
        assert_eq!(keys, want);
        assert!(obj["fidelity"].is_null());
        assert_eq!(obj["N"], 4);
        assert_eq!(obj["std"].as_f64().unwrap(), round12(1.0 / 3.0));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn floats_survive_csv(x in -1e6f64..1e6, y in 1e-300f64..1.0) {
            let mut row = sample();
            row.epsilon = Some(x);
            row.mean = Some(y);
            let back = read_csv(csv_string(&[row]).as_bytes()).unwrap();
            prop_assert_eq!(back[0].epsilon, Some(round12(x)));
            prop_assert_eq!(back[0].mean, Some(round12(y)));
        }
    }
}
