//! Rendering of command results with a provenance block.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use slh_core::{Error, Result};

use crate::args::{Cli, Format};

/// A command's result in every representation it supports.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub json: Value,
    pub latex: Option<String>,
    pub csv: Option<String>,
    /// Internal defaults that influenced the numbers.
    pub defaults: Vec<(&'static str, Value)>,
    /// Set when the command ran but its checks did not pass.
    pub failed: bool,
    /// Exit status for `failed`; 1 when unset.
    pub fail_code: Option<u8>,
}

impl Output {
    pub fn new(text: String, json: Value) -> Self {
        Output { text, json, ..Default::default() }
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    pub fn with_latex(mut self, latex: String) -> Self {
        self.latex = Some(latex);
        self
    }

    pub fn with_default(mut self, key: &'static str, v: impl Into<Value>) -> Self {
        self.defaults.push((key, v.into()));
        self
    }
}

/// Compact JSON with every float written with 17 significant digits.
pub fn render_json(v: &Value) -> String {
    let mut s = String::new();
    write_json(v, &mut s);
    s
}

fn write_json(v: &Value, s: &mut String) {
    match v {
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => s.push_str(&i.to_string()),
            (_, Some(u), _) => s.push_str(&u.to_string()),
            (_, _, Some(f)) => s.push_str(&format!("{f:.16e}")),
            _ => s.push_str("null"),
        },
        Value::Array(a) => {
            s.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write_json(x, s);
            }
            s.push(']');
        }
        Value::Object(o) => {
            s.push('{');
            for (i, (k, x)) in o.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&Value::String(k.clone()).to_string());
                s.push(':');
                write_json(x, s);
            }
            s.push('}');
        }
        other => s.push_str(&other.to_string()),
    }
}

fn provenance(cli: &Cli, out: &Output) -> Value {
    let config = serde_json::to_value(cli).unwrap_or(Value::Null);
    let hash = Sha256::digest(render_json(&config).as_bytes());
    let mut defaults = Map::new();
    for (k, v) in &out.defaults {
        defaults.insert((*k).to_string(), v.clone());
    }
    let mut p = Map::new();
    p.insert("tool".into(), "slh".into());
    p.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    p.insert("config".into(), config);
    p.insert("config_sha256".into(), hash.iter().map(|b| format!("{b:02x}")).collect::<String>().into());
    p.insert("defaults".into(), Value::Object(defaults));
    Value::Object(p)
}

/// The final document for the chosen format.
pub fn render(cli: &Cli, out: &Output) -> Result<String> {
    let prov = provenance(cli, out);
    let header = |prefix: &str| -> String {
        render_json(&prov).lines().map(|l| format!("{prefix} provenance {l}\n")).collect()
    };
    match cli.format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("provenance".into(), prov.clone());
            doc.insert("result".into(), out.json.clone());
            Ok(render_json(&Value::Object(doc)) + "\n")
        }
        Format::Text => Ok(header("#") + &out.text + if out.text.ends_with('\n') { "" } else { "\n" }),
        Format::Csv => out.csv.as_ref().map(|c| header("#") + c).ok_or_else(|| Error::UnsupportedFormat("csv".into())),
        Format::Latex => out.latex.as_ref().map(|l| header("%") + l + "\n").ok_or_else(|| Error::UnsupportedFormat("latex".into())),
    }
}

/// A gnuplot script plotting every CSV column against the first.
pub fn gnuplot_script(csv_path: &str, csv: &str) -> String {
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap_or("");
    let cols: Vec<&str> = header.split(',').collect();
    let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{}'\n", cols.first().copied().unwrap_or("x")));
    let plots: Vec<String> = (2..=cols.len()).map(|c| format!("'{csv_path}' using 1:{c} with lines")).collect();
    s.push_str(&format!("plot {}\npause -1\n", plots.join(", \\\n     ")));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_use_seventeen_digits() {
        let v = json!({"a": 0.1, "b": [1, -2.5e-300], "c": "x"});
        assert_eq!(render_json(&v), r#"{"a":1.0000000000000001e-1,"b":[1,-2.5000000000000000e-300],"c":"x"}"#);
    }

    #[test]
    fn gnuplot_uses_all_columns() {
        let s = gnuplot_script("out.csv", "# provenance\nx,a,b\n1,2,3\n");
        assert!(s.contains("using 1:2") && s.contains("using 1:3") && s.contains("set xlabel 'x'"));
    }
}
