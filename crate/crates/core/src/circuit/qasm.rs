//! OpenQASM 3.0 emission and the matching reader.
//!
//! Two-site rotations are not standard gates, so each is written as a
//! CX–RZ–CX block (with Hadamard frames for the X axes) preceded by a
//! comment naming the logical gate. The reader uses those comments to
//! reassemble the original gates.

use std::fmt::Write;

use thiserror::Error;

use super::{CircuitError, Gate, GateSequence};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing qubit register declaration")]
    MissingRegister,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn angle(theta: f64) -> String {
    format!("{theta:.16e}")
}

/// Renders a sequence as an OpenQASM 3.0 program over register `q`.
pub fn export_qasm(seq: &GateSequence) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
    let _ = writeln!(out, "qubit[{}] q;", seq.num_sites());
    for gate in seq.gates() {
        for line in gate_lines(gate) {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

fn zz_block(a: usize, b: usize, theta: f64) -> [String; 3] {
    [
        format!("cx q[{a}], q[{b}];"),
        format!("rz({}) q[{b}];", angle(theta)),
        format!("cx q[{a}], q[{b}];"),
    ]
}

fn gate_lines(gate: &Gate) -> Vec<String> {
    match *gate {
        Gate::Rx { site, angle: t } => vec![format!("rx({}) q[{site}];", angle(t))],
        Gate::Ry { site, angle: t } => vec![format!("ry({}) q[{site}];", angle(t))],
        Gate::H { site } => vec![format!("h q[{site}];")],
        Gate::Cz { a, b } => vec![format!("cz q[{a}], q[{b}];")],
        Gate::Rzz { a, b, angle: t } => {
            let mut lines = vec![format!("// rzz({}) q[{a}], q[{b}]", angle(t))];
            lines.extend(zz_block(a, b, t));
            lines
        }
        Gate::Rzx {
            z_site,
            x_site,
            angle: t,
        } => {
            let mut lines = vec![
                format!("// rzx({}) q[{z_site}], q[{x_site}]", angle(t)),
                format!("h q[{x_site}];"),
            ];
            lines.extend(zz_block(z_site, x_site, t));
            lines.push(format!("h q[{x_site}];"));
            lines
        }
        Gate::Rxx { a, b, angle: t } => {
            let mut lines = vec![
                format!("// rxx({}) q[{a}], q[{b}]", angle(t)),
                format!("h q[{a}];"),
                format!("h q[{b}];"),
            ];
            lines.extend(zz_block(a, b, t));
            lines.push(format!("h q[{a}];"));
            lines.push(format!("h q[{b}];"));
            lines
        }
    }
}

/// Reads a program produced by [`export_qasm`] back into a gate list.
pub fn parse_qasm(text: &str) -> Result<GateSequence, QasmError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut seq: Option<GateSequence> = None;
    let mut i = 0;
    while i < lines.len() {
        let (line_no, line) = lines[i];
        let err = |message: &str| QasmError::Syntax {
            line: line_no,
            message: message.to_string(),
        };
        i += 1;
        if line.starts_with("OPENQASM") || line.starts_with("include") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("qubit[") {
            let size = rest
                .split(']')
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| err("bad qubit register"))?;
            seq = Some(GateSequence::new(size, "qasm"));
            continue;
        }
        let seq = seq.as_mut().ok_or(QasmError::MissingRegister)?;
        if let Some(marker) = line.strip_prefix("//") {
            let gate = match parse_statement(marker.trim()) {
                Some(Statement::Gate(
                    gate @ (Gate::Rzz { .. } | Gate::Rzx { .. } | Gate::Rxx { .. }),
                )) => gate,
                _ => return Err(err("bad gate marker")),
            };
            let expected = gate_lines(&gate);
            let body = &expected[1..];
            if i + body.len() > lines.len() {
                return Err(err("truncated decomposition"));
            }
            for (offset, want) in body.iter().enumerate() {
                let (got_no, got) = lines[i + offset];
                if parse_statement(got.trim_end_matches(';')) != parse_statement(want.trim_end_matches(';')) {
                    return Err(QasmError::Syntax {
                        line: got_no,
                        message: format!("expected `{want}` in decomposition"),
                    });
                }
            }
            i += body.len();
            seq.push(gate)?;
            continue;
        }
        let statement = line
            .strip_suffix(';')
            .ok_or_else(|| err("missing semicolon"))?;
        match parse_statement(statement) {
            Some(Statement::Gate(
                gate @ (Gate::Rx { .. } | Gate::Ry { .. } | Gate::H { .. } | Gate::Cz { .. }),
            )) => seq.push(gate)?,
            Some(_) => return Err(err("statement only valid inside a marked block")),
            None => return Err(err("unsupported statement")),
        }
    }
    seq.ok_or(QasmError::MissingRegister)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Statement {
    Gate(Gate),
    // Only valid inside a marked decomposition.
    Rz { site: usize, angle: f64 },
    Cx { a: usize, b: usize },
}

// Parses `name(args) q[a], q[b]` without the trailing semicolon.
fn parse_statement(statement: &str) -> Option<Statement> {
    let (head, operands) = statement.split_once(' ')?;
    let (name, param) = match head.split_once('(') {
        Some((name, rest)) => (name, Some(rest.strip_suffix(')')?.parse::<f64>().ok()?)),
        None => (head, None),
    };
    let qubits: Vec<usize> = operands
        .split(',')
        .map(|q| {
            q.trim()
                .strip_prefix("q[")?
                .strip_suffix(']')?
                .parse()
                .ok()
        })
        .collect::<Option<_>>()?;
    let gate = match (name, param, qubits.as_slice()) {
        ("rz", Some(angle), &[site]) => return Some(Statement::Rz { site, angle }),
        ("cx", None, &[a, b]) => return Some(Statement::Cx { a, b }),
        ("rx", Some(angle), &[site]) => Gate::Rx { site, angle },
        ("ry", Some(angle), &[site]) => Gate::Ry { site, angle },
        ("h", None, &[site]) => Gate::H { site },
        ("cz", None, &[a, b]) => Gate::Cz { a, b },
        ("rzz", Some(angle), &[a, b]) => Gate::Rzz { a, b, angle },
        ("rzx", Some(angle), &[z_site, x_site]) => Gate::Rzx {
            z_site,
            x_site,
            angle,
        },
        ("rxx", Some(angle), &[a, b]) => Gate::Rxx { a, b, angle },
        _ => return None,
    };
    Some(Statement::Gate(gate))
}
