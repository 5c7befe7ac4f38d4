//! Matrix CSV formats and atomic-ish output batches.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail};
use ndarray::Array2;

/// Fixed-point CSV rendering; `decimals = 6` for theta-like matrices, 9 for
/// phi so that topic columns still sum to 1 within 1e-5 at large
/// vocabularies.
pub fn matrix_to_csv(m: &Array2<f64>, decimals: usize) -> String {
    let mut out = String::new();
    for row in m.outer_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v:.decimals$}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: bad number {f:?}", path.display(), i + 1))
            })
            .collect::<Result<_>>()?;
        if let Some(prev) = rows.first()
            && prev.len() != row.len()
        {
            bail!("{}:{}: ragged row", path.display(), i + 1);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: empty matrix", path.display());
    }
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / cols;
    Ok(Array2::from_shape_vec((nrows, cols), flat).expect("rectangular by construction"))
}

/// Writes every file or none: on a failed write, files already written in
/// this batch are removed again.
pub fn write_all_or_clean_up(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        written.push(path);
    }
    Ok(())
}
