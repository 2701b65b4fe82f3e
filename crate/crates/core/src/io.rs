//! On-disk formats: matrix and wealth JSON, transaction and wealth CSV,
//! trajectory and support-curve CSV output.
//!
//! Parse and filesystem failures surface as [`IoError`]; content that
//! parses but violates a model invariant surfaces as a domain
//! [`Error`](crate::Error) when the parsed file is built into a value.

use crate::dynamics::SupportExperimentResult;
use crate::error::Result as DomainResult;
use crate::graph::CirculationGraph;
use crate::ingest::TransactionRecord;
use crate::matrix::{
    AgentId, IncomeCirculationMatrix, Trajectory, WealthVector, DEFAULT_TOLERANCE,
};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
}

impl IoError {
    /// Stable tag for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::Io(_) => "io",
            IoError::Json(_) => "json",
            IoError::Csv(_) => "csv",
            IoError::Format(_) => "format",
        }
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

/// Serialized circulation matrix: `{"n": 3, "tolerance": 1e-9,
/// "entries": [[row, col, value], ...]}`.  The tolerance key may be
/// omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

impl MatrixFile {
    pub fn from_matrix(f: &IncomeCirculationMatrix) -> Self {
        Self {
            n: f.n(),
            tolerance: f.tolerance(),
            entries: f.entries().collect(),
        }
    }

    pub fn build(&self) -> DomainResult<IncomeCirculationMatrix> {
        IncomeCirculationMatrix::validate(self.n, &self.entries, self.tolerance)
    }
}

/// Serialized wealth state: `{"time": 0, "values": [...]}`.  The time key
/// may be omitted and defaults to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WealthFile {
    #[serde(default)]
    pub time: usize,
    pub values: Vec<f64>,
}

impl WealthFile {
    pub fn from_state(x: &WealthVector) -> Self {
        Self {
            time: x.time_index(),
            values: x.values().to_vec(),
        }
    }

    pub fn build(&self) -> DomainResult<WealthVector> {
        WealthVector::new(self.values.clone(), self.time)
    }
}

pub fn read_matrix_json(path: &Path) -> Result<MatrixFile, IoError> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn write_matrix_json<W: Write>(mut w: W, f: &IncomeCirculationMatrix) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut w, &MatrixFile::from_matrix(f))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_wealth_json(path: &Path) -> Result<WealthFile, IoError> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn write_wealth_json<W: Write>(mut w: W, x: &WealthVector) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut w, &WealthFile::from_state(x))?;
    writeln!(w)?;
    Ok(())
}

#[derive(Deserialize)]
struct WealthRow {
    agent: usize,
    wealth: f64,
}

/// Reads an `agent,wealth` table.  Every agent `0..n-1` must appear
/// exactly once, in any order; the state's time index is zero.
pub fn read_wealth_csv(path: &Path) -> Result<WealthFile, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows: Vec<WealthRow> = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    let n = rows.len();
    let mut values = vec![f64::NAN; n];
    for row in &rows {
        if row.agent >= n {
            return Err(IoError::Format(format!(
                "agent {} out of range for {} rows",
                row.agent, n
            )));
        }
        if !values[row.agent].is_nan() {
            return Err(IoError::Format(format!("agent {} listed twice", row.agent)));
        }
        values[row.agent] = row.wealth;
    }
    Ok(WealthFile { time: 0, values })
}

/// Dispatches on the file extension: `.csv` uses the `agent,wealth` table
/// format, anything else is parsed as JSON.
pub fn read_wealth_file(path: &Path) -> Result<WealthFile, IoError> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        read_wealth_csv(path)
    } else {
        read_wealth_json(path)
    }
}

#[derive(Serialize, Deserialize)]
struct TxRow {
    t: usize,
    payer: usize,
    payee: usize,
    amount: f64,
}

/// Reads a `t,payer,payee,amount` table.  Only parsing is checked here;
/// self-payments, bad amounts and overspending are rejected when the
/// records are fed to estimation.
pub fn read_transactions_csv(path: &Path) -> Result<Vec<TransactionRecord>, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        let row: TxRow = row?;
        records.push(TransactionRecord {
            time: row.t,
            payer: AgentId(row.payer),
            payee: AgentId(row.payee),
            amount: row.amount,
        });
    }
    Ok(records)
}

pub fn write_transactions_csv<W: Write>(
    mut w: W,
    records: &[TransactionRecord],
) -> Result<(), IoError> {
    writeln!(w, "t,payer,payee,amount")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:.11e}",
            r.time, r.payer.0, r.payee.0, r.amount
        )?;
    }
    Ok(())
}

/// Writes `t,agent_0,...,agent_{n-1}` rows, one per trajectory state, with
/// twelve significant digits per value.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<(), IoError> {
    let n = traj.final_state().len();
    write!(w, "t")?;
    for j in 0..n {
        write!(w, ",agent_{j}")?;
    }
    writeln!(w)?;
    for state in traj.states() {
        write!(w, "{}", state.time_index())?;
        for v in state.values() {
            write!(w, ",{v:.11e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes `k,deviation,bound,h_group_delta,l_group_delta` rows for a
/// support experiment.  The bound column is empty when no envelope applies.
/// Group deltas are the supported-minus-baseline wealth surplus summed over
/// the given sets at each step.
pub fn write_support_csv<W: Write>(
    mut w: W,
    result: &SupportExperimentResult,
    h_group: &[AgentId],
    l_group: &[AgentId],
) -> Result<(), IoError> {
    writeln!(w, "k,deviation,bound,h_group_delta,l_group_delta")?;
    let baseline = result.baseline.states();
    let supported = result.supported.states();
    for (k, d) in result.deviation.iter().enumerate() {
        let delta = |group: &[AgentId]| -> f64 {
            group
                .iter()
                .map(|&a| supported[k].get(a) - baseline[k].get(a))
                .sum()
        };
        write!(w, "{k},{d:.11e},")?;
        if let Some(bound) = &result.bound {
            write!(w, "{:.11e}", bound[k])?;
        }
        writeln!(w, ",{:.11e},{:.11e}", delta(h_group), delta(l_group))?;
    }
    Ok(())
}

/// Writes one `src,dst` row per circulation edge, indices 0-based.
pub fn write_edges_csv<W: Write>(mut w: W, graph: &CirculationGraph) -> Result<(), IoError> {
    writeln!(w, "src,dst")?;
    for u in 0..graph.n() {
        for &v in graph.out_neighbors(u) {
            writeln!(w, "{u},{v}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{support_experiment, SupportEvent, SupportOptions};
    use crate::matrix::tests::ring3;

    #[test]
    fn matrix_file_round_trips() {
        let f = crate::matrix::tests::random_icm(6, 9, 0.4);
        let mut buf = Vec::new();
        write_matrix_json(&mut buf, &f).unwrap();
        let parsed: MatrixFile = serde_json::from_slice(&buf).unwrap();
        let rebuilt = parsed.build().unwrap();
        // JSON floats parse back bit-exactly; revalidation may renormalize
        // columns by one ulp.
        assert!(rebuilt.same_pattern(&f));
        for (a, b) in f.entries().zip(rebuilt.entries()) {
            assert!((a.2 - b.2).abs() <= 4.0 * f64::EPSILON * a.2);
        }
        assert_eq!(rebuilt.tolerance(), f.tolerance());
    }

    #[test]
    fn matrix_file_tolerance_defaults() {
        let parsed: MatrixFile =
            serde_json::from_str(r#"{"n": 1, "entries": [[0, 0, 1.0]]}"#).unwrap();
        assert_eq!(parsed.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(parsed.build().unwrap().n(), 1);
    }

    #[test]
    fn matrix_file_reports_domain_errors_on_build() {
        let parsed: MatrixFile =
            serde_json::from_str(r#"{"n": 2, "entries": [[0, 0, 0.5]]}"#).unwrap();
        assert!(matches!(
            parsed.build(),
            Err(crate::Error::ColumnSumViolation { col: 0, .. })
        ));
    }

    #[test]
    fn wealth_json_round_trips_with_time() {
        let x = WealthVector::new(vec![1.0, 2.5], 7).unwrap();
        let mut buf = Vec::new();
        write_wealth_json(&mut buf, &x).unwrap();
        let parsed: WealthFile = serde_json::from_slice(&buf).unwrap();
        let rebuilt = parsed.build().unwrap();
        assert_eq!(rebuilt.time_index(), 7);
        assert_eq!(rebuilt.values(), x.values());
    }

    #[test]
    fn wealth_time_defaults_to_zero() {
        let parsed: WealthFile = serde_json::from_str(r#"{"values": [1.0]}"#).unwrap();
        assert_eq!(parsed.time, 0);
    }

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("icm-io-test-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn wealth_csv_reads_any_row_order() {
        let path = temp_path("wealth-order.csv");
        std::fs::write(&path, "agent,wealth\n1,2.0\n0,5.0\n2,1.5\n").unwrap();
        let parsed = read_wealth_csv(&path).unwrap();
        assert_eq!(parsed.values, vec![5.0, 2.0, 1.5]);
        assert_eq!(parsed.time, 0);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn wealth_csv_rejects_gaps_and_duplicates() {
        let dup = temp_path("wealth-dup.csv");
        std::fs::write(&dup, "agent,wealth\n0,1.0\n0,2.0\n").unwrap();
        assert!(matches!(read_wealth_csv(&dup), Err(IoError::Format(_))));
        std::fs::remove_file(&dup).unwrap();

        let gap = temp_path("wealth-gap.csv");
        std::fs::write(&gap, "agent,wealth\n0,1.0\n2,2.0\n").unwrap();
        assert!(matches!(read_wealth_csv(&gap), Err(IoError::Format(_))));
        std::fs::remove_file(&gap).unwrap();
    }

    #[test]
    fn wealth_dispatch_picks_format_by_extension() {
        let csv = temp_path("dispatch.csv");
        std::fs::write(&csv, "agent,wealth\n0,3.0\n").unwrap();
        assert_eq!(read_wealth_file(&csv).unwrap().values, vec![3.0]);
        std::fs::remove_file(&csv).unwrap();

        let json = temp_path("dispatch.json");
        std::fs::write(&json, r#"{"values": [4.0]}"#).unwrap();
        assert_eq!(read_wealth_file(&json).unwrap().values, vec![4.0]);
        std::fs::remove_file(&json).unwrap();
    }

    #[test]
    fn transactions_csv_round_trips() {
        let records = vec![
            TransactionRecord {
                time: 0,
                payer: AgentId(0),
                payee: AgentId(1),
                amount: 2.5,
            },
            TransactionRecord {
                time: 1,
                payer: AgentId(2),
                payee: AgentId(0),
                amount: 0.125,
            },
        ];
        let mut buf = Vec::new();
        write_transactions_csv(&mut buf, &records).unwrap();
        let path = temp_path("tx.csv");
        std::fs::write(&path, &buf).unwrap();
        let parsed = read_transactions_csv(&path).unwrap();
        assert_eq!(parsed, records);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn trajectory_csv_is_pinned() {
        let f = ring3();
        let x = WealthVector::new(vec![1.0, 2.0, 3.0], 0).unwrap();
        let traj = crate::matrix::evolve_constant(&f, &x, 1).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,agent_0,agent_1,agent_2\n\
             0,1.00000000000e0,2.00000000000e0,3.00000000000e0\n\
             1,2.00000000000e0,3.00000000000e0,1.00000000000e0\n"
        );
    }

    #[test]
    fn support_csv_has_bound_and_group_columns() {
        let f = crate::graph::tests::ring3_with_savings();
        let x = WealthVector::new(vec![4.0, 1.0, 1.0], 0).unwrap();
        let event = SupportEvent::new(0, AgentId(0), AgentId(1), 0.01).unwrap();
        let result = support_experiment(&f, &x, &event, &SupportOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_support_csv(&mut buf, &result, &[AgentId(0)], &[AgentId(1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("k,deviation,bound,h_group_delta,l_group_delta")
        );
        let first = lines.next().unwrap();
        let cells: Vec<&str> = first.split(',').collect();
        assert_eq!(cells.len(), 5);
        assert_eq!(cells[0], "0");
        assert_eq!(cells[1], "2.00000000000e-2");
        assert!(!cells[2].is_empty());
        assert_eq!(cells[3], "-1.00000000000e-2");
        assert_eq!(cells[4], "1.00000000000e-2");
        assert_eq!(text.lines().count(), result.deviation.len() + 1);
    }

    #[test]
    fn support_csv_leaves_bound_empty_when_absent() {
        let f = ring3();
        let x = WealthVector::new(vec![1.0, 1.0, 1.0], 0).unwrap();
        let event = SupportEvent::new(0, AgentId(0), AgentId(1), 0.01).unwrap();
        let options = SupportOptions {
            horizon: Some(3),
            ..SupportOptions::default()
        };
        let result = support_experiment(&f, &x, &event, &options).unwrap();
        assert!(result.bound.is_none());
        let mut buf = Vec::new();
        write_support_csv(&mut buf, &result, &[AgentId(0)], &[AgentId(1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[2], "");
    }

    #[test]
    fn edges_csv_lists_every_arc_zero_based() {
        let graph = CirculationGraph::from_matrix(&ring3());
        let mut buf = Vec::new();
        write_edges_csv(&mut buf, &graph).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "src,dst\n0,1\n1,2\n2,0\n");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_matrix_json(Path::new("/definitely/not/here.json")).unwrap_err();
        assert_eq!(err.kind(), "io");
    }
}
