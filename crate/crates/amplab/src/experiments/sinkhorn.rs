//! Biwhitening: scale a variance matrix so rows sum to n and columns to m,
//! then check that the result is a valid white-noise variance profile.

use amplab_core::ensembles::{sinkhorn_scale, validate_variance_profile, ProfileReport, ProfileSide};
use amplab_core::linalg::Mat;
use amplab_core::rng::{normal, stream_rng, streams};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::Ctx;
use crate::config::SinkhornStudy;
use crate::io::{ArtifactDir, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkhornSummary {
    pub m: usize,
    pub n: usize,
    pub iterations: usize,
    pub deviation: f64,
    pub profile: ProfileReport,
    pub pass: bool,
}

pub fn run(study: &SinkhornStudy, ctx: &Ctx<'_>, dir: &mut ArtifactDir) -> Result<SinkhornSummary> {
    let v = match &study.variances {
        Some(rows) => Mat::from_rows(rows)?,
        None => {
            let mut rng = stream_rng(ctx.seed, 0, streams::MATRIX);
            Mat::from_fn(study.m, study.n, |_, _| normal(&mut rng).exp())
        }
    };
    dir.write_table("variances.csv", &Table::from_matrix(&v))?;
    let r = sinkhorn_scale(&v, study.tol, study.max_iter).context("Sinkhorn scaling")?;
    let profile = validate_variance_profile(&r.s, ProfileSide::Rectangular, study.tol, None);
    dir.write_table("scaled.csv", &Table::from_matrix(&r.s))?;
    dir.write_table("d1.csv", &Table::from_columns(&["d1".into()], &[&r.d1]))?;
    dir.write_table("d2.csv", &Table::from_columns(&["d2".into()], &[&r.d2]))?;
    Ok(SinkhornSummary {
        m: v.rows,
        n: v.cols,
        iterations: r.iterations,
        deviation: r.deviation,
        pass: profile.pass,
        profile,
    })
}
