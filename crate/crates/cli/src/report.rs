//! Report envelope and output emission.

use std::io::Write;
use std::path::Path;

use imflow_core::mlp::ESTIMATOR;
use imflow_core::Analysis;
use serde::Serialize;

use crate::args::{Format, OutputArgs};
use crate::dataset::write_csv;
use crate::error::{CliError, Result};

pub const TOOL: &str = "imflow";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Metadata<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub estimator: &'static str,
    pub units: &'static str,
    pub command: CommandEcho<'a, A>,
}

#[derive(Debug, Serialize)]
pub struct CommandEcho<'a, A: Serialize> {
    pub name: &'static str,
    pub args: &'a A,
}

#[derive(Debug, Serialize)]
pub struct Report<'a, A: Serialize, B: Serialize> {
    pub metadata: Metadata<'a, A>,
    pub body: B,
}

impl<'a, A: Serialize, B: Serialize> Report<'a, A, B> {
    pub fn new(name: &'static str, args: &'a A, body: B) -> Self {
        Report {
            metadata: Metadata {
                tool: TOOL,
                version: VERSION,
                estimator: ESTIMATOR,
                units: "bits",
                command: CommandEcho { name, args },
            },
            body,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Everything a command produces; written by [`emit`].
#[derive(Debug, Clone)]
pub struct Output {
    pub json: String,
    /// The report's tabular form for `--format csv`.
    pub table: Table,
    /// Extra files written into `--out`, by file name.
    pub files: Vec<(&'static str, Table)>,
    pub exit_code: i32,
}

pub fn emit(output: &Output, args: &OutputArgs, stdout: &mut dyn Write) -> Result<()> {
    let Some(dir) = &args.out else {
        if !output.files.is_empty() {
            log::warn!(
                "no --out directory given; skipping {} extra file(s)",
                output.files.len()
            );
        }
        return match args.format {
            Format::Json => stdout
                .write_all(output.json.as_bytes())
                .map_err(|e| CliError::io("cannot write to stdout", e)),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(stdout);
                w.write_record(&output.table.headers)?;
                for row in &output.table.rows {
                    w.write_record(row)?;
                }
                w.flush().map_err(|e| CliError::io("cannot write to stdout", e))
            }
        };
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    match args.format {
        Format::Json => write_file(&dir.join("report.json"), &output.json)?,
        Format::Csv => write_table(&dir.join("report.csv"), &output.table)?,
    }
    for (name, table) in &output.files {
        write_table(&dir.join(name), table)?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    write_csv(path, &table.headers, &table.rows)
}

pub const ANALYSIS_HEADERS: [&str; 22] = [
    "a_bits",
    "b_bits",
    "c_bits",
    "d_bits",
    "pattern",
    "oracle",
    "x_bits",
    "y_bits",
    "ixx_bits",
    "h_x",
    "h_y",
    "h_f",
    "n_xy",
    "l_xy",
    "n_xxf",
    "l_xxf",
    "n_xyf",
    "l_xyf",
    "i_xy",
    "i_xxf",
    "i_xyf",
    "constraints_passed",
];

pub fn analysis_row(a: &Analysis) -> Vec<String> {
    let q = &a.quantities;
    let m = &a.matrix;
    let mut row: Vec<String> = [m.a, m.b, m.c, m.d].iter().map(f64::to_string).collect();
    row.push(a.pattern.kind.to_string());
    row.push(a.pattern.oracle.to_string());
    row.extend(
        [a.point.x_bits, a.point.y_bits, a.ixx_from_point]
            .iter()
            .map(f64::to_string),
    );
    row.extend(
        [
            q.h_x, q.h_y, q.h_f, q.n_xy, q.l_xy, q.n_xxf, q.l_xxf, q.n_xyf, q.l_xyf, q.i_xy, q.i_xxf, q.i_xyf,
        ]
        .iter()
        .map(f64::to_string),
    );
    row.push(a.constraints.all_passed().to_string());
    row
}
