//! JSON interchange:
//! `{"qubits": n, "gates": [{"name", "targets", "params"?, "matrix_re"?, "matrix_im"?}]}`.
//! Custom unitaries use the name `unitary` and row-major real/imaginary parts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use super::{position_of, ErrorKind, ParseError};
use crate::circuit::{Circuit, GateKind, GateOp};
use crate::matrix::Matrix;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonCircuit {
    qubits: u64,
    gates: Vec<JsonGate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGate {
    name: String,
    targets: Vec<u64>,
    #[serde(default)]
    params: Option<Vec<f64>>,
    #[serde(default)]
    matrix_re: Option<Vec<f64>>,
    #[serde(default)]
    matrix_im: Option<Vec<f64>>,
}

/// Integral values print without a fraction; everything else uses the
/// shortest representation that reads back to the same double.
fn number(v: f64) -> Value {
    const EXACT_INT: f64 = 9_007_199_254_740_992.0;
    if v.fract() == 0.0 && v.abs() < EXACT_INT && !(v == 0.0 && v.is_sign_negative()) {
        Value::Number(Number::from(v as i64))
    } else {
        Number::from_f64(v).map_or(Value::Null, Value::Number)
    }
}

fn numbers(vs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(vs.into_iter().map(number).collect())
}

#[derive(Serialize)]
struct OutCircuit {
    qubits: usize,
    gates: Vec<OutGate>,
}

#[derive(Serialize)]
struct OutGate {
    name: &'static str,
    targets: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix_re: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix_im: Option<Value>,
}

/// Compact, deterministic JSON for a valid circuit. Keys appear in schema
/// order.
pub fn to_json(circuit: &Circuit) -> String {
    let out = OutCircuit {
        qubits: circuit.num_qubits,
        gates: circuit
            .gates
            .iter()
            .map(|op| OutGate {
                name: op.kind.name(),
                targets: op.targets.clone(),
                params: (!op.params.is_empty()).then(|| numbers(op.params.iter().copied())),
                matrix_re: op.matrix.as_ref().map(|m| numbers(m.as_slice().iter().map(|z| z.re))),
                matrix_im: op.matrix.as_ref().map(|m| numbers(m.as_slice().iter().map(|z| z.im))),
            })
            .collect(),
    };
    serde_json::to_string(&out).expect("circuit serialization cannot fail")
}

/// Byte offset of the `index`-th gate entry, for error positions.
fn gate_offset(text: &str, index: usize) -> usize {
    let Some(gates) = text.find("\"gates\"") else {
        return 0;
    };
    text[gates..]
        .match_indices("\"name\"")
        .nth(index)
        .map_or(gates, |(i, _)| gates + i)
}

pub(crate) fn parse_json(text: &str) -> Result<Circuit, Vec<ParseError>> {
    let raw: JsonCircuit = serde_json::from_str(text).map_err(|e| {
        let kind = if e.is_syntax() || e.is_eof() {
            ErrorKind::Syntax
        } else {
            ErrorKind::Semantic
        };
        let msg = e.to_string();
        // serde_json appends " at line L column C"; the position is ours to report.
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        vec![ParseError::new(kind, (e.line().max(1), e.column().max(1)), msg)]
    })?;

    let mut errors = Vec::new();
    let mut gates = Vec::with_capacity(raw.gates.len());
    for (i, g) in raw.gates.into_iter().enumerate() {
        match build_gate(g, raw.qubits) {
            Ok(op) => gates.push(op),
            Err(msg) => errors.push(ParseError::new(
                ErrorKind::Semantic,
                position_of(text, gate_offset(text, i)),
                format!("gate {i}: {msg}"),
            )),
        }
    }
    if raw.qubits == 0 || raw.qubits > super::parser::MAX_REGISTER_SIZE {
        errors.insert(
            0,
            ParseError::new(
                ErrorKind::Semantic,
                position_of(text, text.find("\"qubits\"").unwrap_or(0)),
                format!("qubits must be between 1 and {}", super::parser::MAX_REGISTER_SIZE),
            ),
        );
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Circuit {
        num_qubits: raw.qubits as usize,
        gates,
        name: String::new(),
    })
}

fn build_gate(g: JsonGate, qubits: u64) -> Result<GateOp, String> {
    let targets: Vec<usize> = g
        .targets
        .iter()
        .map(|&t| {
            if t < qubits {
                Ok(t as usize)
            } else {
                Err(format!("target {t} out of range for {qubits} qubits"))
            }
        })
        .collect::<Result<_, _>>()?;
    if targets.is_empty() {
        return Err("no targets".into());
    }
    let mut sorted = targets.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err("duplicate target".into());
    }
    let params = g.params.unwrap_or_default();
    if params.iter().any(|p| !p.is_finite()) {
        return Err("parameter is not finite".into());
    }
    if g.name == GateKind::Custom.name() {
        let (re, im) = match (g.matrix_re, g.matrix_im) {
            (Some(re), Some(im)) => (re, im),
            _ => return Err("unitary needs matrix_re and matrix_im".into()),
        };
        if targets.len() > 10 {
            return Err("unitary acts on too many qubits".into());
        }
        let expected = 1usize << (2 * targets.len());
        if re.len() != expected || im.len() != expected {
            return Err(format!("matrix must have {expected} entries for {} target(s)", targets.len()));
        }
        if !params.is_empty() {
            return Err("unitary takes no params".into());
        }
        let data: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let matrix = Matrix::from_row_major(data).ok_or("matrix is not square")?;
        let op = GateOp::custom(matrix, targets);
        if let Some(v) = op.violations(qubits as usize).first() {
            return Err(v.to_string());
        }
        return Ok(op);
    }
    let kind = GateKind::from_name(&g.name).ok_or_else(|| format!("unknown gate {}", g.name))?;
    if g.matrix_re.is_some() || g.matrix_im.is_some() {
        return Err(format!("gate {} does not take a matrix", g.name));
    }
    if params.len() != kind.param_count() {
        return Err(format!(
            "gate {} takes {} parameter(s), got {}",
            g.name,
            kind.param_count(),
            params.len()
        ));
    }
    if Some(targets.len()) != kind.arity() {
        return Err(format!(
            "gate {} acts on {} qubit(s), got {}",
            g.name,
            kind.arity().unwrap_or(0),
            targets.len()
        ));
    }
    Ok(GateOp::with_params(kind, params, targets))
}
