//! Output writers. Every file embeds (version, command, resolved config) so
//! that reruns with the same config are byte-identical; worker counts are
//! execution detail and deliberately excluded.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use infogeo_core::{AsymmetryTable, DistanceMatrix, Embedding, Infodesic, SolveResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    result: T,
}

pub fn write_json<T: Serialize>(
    path: &Path,
    command: &str,
    config: &Value,
    result: T,
) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(
        &mut writer,
        &Envelope {
            version: VERSION,
            command,
            config,
            result,
        },
    )?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Starts a CSV file with the provenance header comments.
pub fn csv_writer(path: &Path, command: &str, config: &Value) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    writeln!(writer, "# version: {VERSION}")?;
    writeln!(writer, "# command: {command}")?;
    writeln!(writer, "# config: {config}")?;
    Ok(writer)
}

#[derive(Serialize)]
pub struct SolveJson {
    pub beta: f64,
    pub goal: usize,
    #[serde(rename = "F")]
    pub free_energy: Vec<f64>,
    #[serde(rename = "I_D")]
    pub decision_information: Vec<f64>,
    #[serde(rename = "V")]
    pub value: Vec<f64>,
    pub policy: Vec<Vec<f64>>,
    pub prior: Vec<f64>,
    pub live: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveJson {
    pub fn new(beta: f64, goal: usize, result: &SolveResult) -> Self {
        Self {
            beta,
            goal,
            free_energy: result.free_energy.clone(),
            decision_information: result.decision_information.clone(),
            value: result.value.clone(),
            policy: (0..result.policy.n_states())
                .map(|s| result.policy.row(s).to_vec())
                .collect(),
            prior: result.action_prior.as_slice().to_vec(),
            live: result.live.probs.clone(),
            iterations: result.iterations,
            converged: result.converged,
        }
    }
}

pub fn write_solve_csv(
    path: &Path,
    command: &str,
    config: &Value,
    result: &SolveResult,
) -> anyhow::Result<()> {
    let mut w = csv_writer(path, command, config)?;
    writeln!(w, "state,F,I_D,V,live")?;
    for s in 0..result.free_energy.len() {
        writeln!(
            w,
            "{s},{},{},{},{}",
            result.free_energy[s],
            result.decision_information[s],
            result.value[s],
            result.live.probs[s]
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
pub struct MatrixJson {
    pub n: usize,
    pub beta: f64,
    /// Row-major rows: entry (from, to).
    pub entries: Vec<Vec<f64>>,
    pub converged: bool,
    /// (from, to) pairs whose solves did not converge.
    pub unconverged_pairs: Vec<(usize, usize)>,
}

impl MatrixJson {
    pub fn new(d: &DistanceMatrix) -> Self {
        let n = d.n();
        let mut unconverged_pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !d.is_converged(i, j) {
                    unconverged_pairs.push((i, j));
                }
            }
        }
        Self {
            n,
            beta: d.beta,
            entries: (0..n).map(|i| d.row(i).to_vec()).collect(),
            converged: d.fully_converged(),
            unconverged_pairs,
        }
    }
}

/// Matrix CSV: one row per from-state, columns to_0..to_{n-1}.
pub fn write_matrix_csv(
    path: &Path,
    command: &str,
    config: &Value,
    d: &DistanceMatrix,
) -> anyhow::Result<()> {
    let mut w = csv_writer(path, command, config)?;
    let header: Vec<String> = (0..d.n()).map(|j| format!("to_{j}")).collect();
    writeln!(w, "from,{}", header.join(","))?;
    for i in 0..d.n() {
        let row: Vec<String> = d.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{i},{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_asymmetry_csv(
    path: &Path,
    command: &str,
    config: &Value,
    table: &AsymmetryTable,
) -> anyhow::Result<()> {
    let mut w = csv_writer(path, command, config)?;
    let header: Vec<String> = (0..table.n).map(|j| format!("to_{j}")).collect();
    writeln!(w, "from,{}", header.join(","))?;
    for i in 0..table.n {
        let row: Vec<String> = (0..table.n).map(|j| table.get(i, j).to_string()).collect();
        writeln!(w, "{i},{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
pub struct EmbeddingJson {
    pub dims: usize,
    pub seed: u64,
    pub stress: f64,
    pub coords: Vec<Vec<f64>>,
}

impl EmbeddingJson {
    pub fn new(e: &Embedding) -> Self {
        Self {
            dims: e.dims,
            seed: e.seed,
            stress: e.stress,
            coords: (0..e.n_points()).map(|i| e.point(i).to_vec()).collect(),
        }
    }
}

#[derive(Serialize)]
struct InfodesicRecord<'a> {
    seq: &'a [usize],
    segments: &'a [f64],
    direct: f64,
    deviation: f64,
}

/// JSON-lines: one header object, then one record per infodesic.
pub fn write_infodesics_jsonl(
    path: &Path,
    command: &str,
    config: &Value,
    infodesics: &[Infodesic],
) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let header = serde_json::json!({
        "version": VERSION,
        "command": command,
        "config": config,
    });
    writeln!(w, "{header}")?;
    for i in infodesics {
        let record = InfodesicRecord {
            seq: &i.sequence,
            segments: &i.segment_free_energies,
            direct: i.direct_free_energy,
            deviation: i.normalized_deviation,
        };
        writeln!(w, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}
