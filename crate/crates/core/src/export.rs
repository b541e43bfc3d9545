//! CSV and JSON renderings of solver and simulation output.

use std::path::Path;

use serde::Serialize;

use crate::deterministic::RiccatiSolution;
use crate::error::Result;
use crate::simulation::{MCEstimate, PathBundle};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn table(header: &str, columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = String::with_capacity(rows * columns.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for r in 0..rows {
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&num(col[r]));
        }
        out.push('\n');
    }
    out
}

pub fn riccati_csv(ric: &RiccatiSolution) -> String {
    table(
        "t,S,k,l,phi1_t0,phi2_t0,phi3_Tt",
        &[
            ric.grid.values(),
            &ric.s,
            &ric.k,
            &ric.l,
            &ric.phi1_t0,
            &ric.phi2_t0,
            &ric.phi3_tt,
        ],
    )
}

pub fn equilibrium_csv(t: &[f64], beta: &[f64], s_closed: &[f64], j_contrib: &[f64], foc: &[f64]) -> String {
    table("t,beta,S_closed,J_contrib,foc_residual", &[t, beta, s_closed, j_contrib, foc])
}

pub fn path_csv(path: &PathBundle) -> String {
    let t = path.grid.values();
    match &path.log_l {
        Some(l) => table("t,V,Y,P,logL", &[t, &path.v, &path.y, &path.p, l]),
        None => table("t,V,Y,P", &[t, &path.v, &path.y, &path.p]),
    }
}

#[derive(Serialize)]
struct EstimateRecord<'a> {
    quantity: &'a str,
    mean: f64,
    stderr: f64,
    n_paths: usize,
    seed: u64,
}

pub fn estimate_json(quantity: &str, est: &MCEstimate) -> String {
    to_json(&EstimateRecord {
        quantity,
        mean: est.mean,
        stderr: est.stderr,
        n_paths: est.n_paths,
        seed: est.master_seed,
    })
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Generic CSV from named columns.
pub fn columns_csv(names: &[&str], columns: &[&[f64]]) -> String {
    table(&names.join(","), columns)
}

pub fn write(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_layout() {
        let s = columns_csv(&["a", "b"], &[&[1.0, 2.0], &[3.0, 4.0]]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1.0000000000000000e0,"));
    }
}
