use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::{archived_purity, mean_purity, purity_csv, ExperimentArchive, ResultRow};
use crate::error::{Error, Result};
use crate::protocols::Protocol;

/// `|log10(r_est / r_tomo)|` above which an estimate counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 0.5;

pub const FIGURE_COLUMNS: [&str; 9] = [
    "series",
    "noise_kind",
    "strength",
    "value",
    "ci_low",
    "ci_high",
    "log10_ratio",
    "divergent",
    "first_divergence",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: String,
    /// `(file stem, csv text)` per figure family.
    pub tables: Vec<(String, String)>,
}

impl Report {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, text) in &self.tables {
            let path = dir.join(format!("{name}.csv"));
            std::fs::write(&path, text)?;
            written.push(path);
        }
        let path = dir.join("summary.txt");
        std::fs::write(&path, &self.summary)?;
        written.push(path);
        Ok(written)
    }
}

pub fn log10_ratio(row: &ResultRow) -> Option<f64> {
    match (row.r_estimate, row.r_tomography) {
        (Some(e), Some(t)) if e > 0.0 && t > 0.0 => Some((e / t).log10()),
        _ => None,
    }
}

fn is_depolarizing(label: &str) -> bool {
    matches!(label, "depolarizing" | "depol")
}

fn parts(label: &str) -> Vec<&str> {
    label.split('+').map(str::trim).collect()
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format table: one line per protocol row plus a tomography series
/// holding the mean reference at each noise point.
fn figure_table(rows: &[&ResultRow], protocols: Option<&[Protocol]>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(FIGURE_COLUMNS).map_err(io)?;

    let mut first_seen: BTreeMap<(Protocol, &str), bool> = BTreeMap::new();
    let mut reference: Vec<(&str, f64, f64, usize)> = Vec::new();
    let mut ordered: Vec<&&ResultRow> = rows.iter().collect();
    ordered.sort_by(|a, b| {
        (a.noise_kind.as_str(), a.protocol)
            .cmp(&(b.noise_kind.as_str(), b.protocol))
            .then(a.strength.total_cmp(&b.strength))
    });
    for row in ordered {
        if let Some(t) = row.r_tomography {
            match reference
                .iter_mut()
                .find(|r| r.0 == row.noise_kind && r.1 == row.strength)
            {
                Some(r) => {
                    r.2 += t;
                    r.3 += 1;
                }
                None => reference.push((&row.noise_kind, row.strength, t, 1)),
            }
        }
        if protocols.is_some_and(|ps| !ps.contains(&row.protocol)) {
            continue;
        }
        let ratio = log10_ratio(row);
        let divergent = ratio.map(|r| r.abs() > DIVERGENCE_THRESHOLD);
        let seen = first_seen.entry((row.protocol, &row.noise_kind)).or_insert(false);
        let first = divergent == Some(true) && !*seen;
        if first {
            *seen = true;
        }
        w.write_record([
            row.protocol.label().to_string(),
            row.noise_kind.clone(),
            row.strength.to_string(),
            fmt(row.r_estimate),
            fmt(row.r_ci_low),
            fmt(row.r_ci_high),
            fmt(ratio),
            divergent.map(|d| d.to_string()).unwrap_or_default(),
            first.to_string(),
        ])
        .map_err(io)?;
    }
    reference.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
    for (label, strength, sum, n) in reference {
        w.write_record([
            "tomography".to_string(),
            label.to_string(),
            strength.to_string(),
            (sum / n as f64).to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn summary(archive: &ExperimentArchive) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "experiment {:?} (config {}), {} result rows",
        archive.config.name,
        archive.config_hash,
        archive.rows.len()
    );
    if archive.rows.is_empty() {
        let _ = writeln!(s, "zero rows: nothing to compare against tomography");
        return s;
    }
    let mut worst: BTreeMap<(&str, Protocol), (f64, f64, usize, usize)> = BTreeMap::new();
    for row in &archive.rows {
        let e = worst.entry((&row.noise_kind, row.protocol)).or_insert((0.0, 0.0, 0, 0));
        e.3 += 1;
        match log10_ratio(row) {
            Some(r) => {
                e.0 = e.0.max(r.abs());
                e.1 = e.1.max((10f64.powf(r) - 1.0).abs());
            }
            None => e.2 += 1,
        }
    }
    let _ = writeln!(s, "max deviation from tomography per noise kind:");
    for ((kind, protocol), (log_dev, rel_dev, missing, n)) in worst {
        let _ = write!(
            s,
            "  {kind:<24} {protocol}: max |log10(r/r_tomo)| = {log_dev:.4}, max relative = {rel_dev:.4}"
        );
        if missing > 0 {
            let _ = write!(s, " ({missing} of {n} rows without a comparable estimate)");
        }
        let _ = writeln!(s);
    }
    for row in archive.rows.iter().filter(|r| r.failure.is_some()) {
        let _ = writeln!(
            s,
            "  failed: {} {} {}: {}",
            row.protocol,
            row.noise_kind,
            row.strength,
            row.failure.as_deref().unwrap_or_default()
        );
    }
    let purity = mean_purity(&archived_purity(archive));
    if !purity.is_empty() {
        let _ = writeln!(s, "mean purity (after preparation, final):");
        for (kind, strength, prep, fin) in purity {
            let _ = writeln!(s, "  {kind:<24} {strength:<10} {prep:.6} {fin:.6}");
        }
    }
    s
}

/// Plot-ready tables per figure family and a textual summary.
pub fn report(archive: &ExperimentArchive) -> Result<Report> {
    let rows: Vec<&ResultRow> = archive.rows.iter().collect();
    let select = |f: &dyn Fn(&str) -> bool| -> Vec<&ResultRow> {
        rows.iter().copied().filter(|r| f(&r.noise_kind)).collect()
    };
    let depolarizing = select(&is_depolarizing);
    let single = select(&|l: &str| parts(l).len() == 1 && !is_depolarizing(l));
    let combined = select(&|l: &str| parts(l).len() > 1);
    let t1_family = select(&|l: &str| {
        let p = parts(l);
        p.iter().all(|k| matches!(*k, "t1" | "coherent1q" | "coherent2q" | "coherent"))
    });
    let tables = vec![
        ("fig2_depolarizing".to_string(), figure_table(&depolarizing, None)?),
        ("fig3_single_noise".to_string(), figure_table(&single, None)?),
        ("fig3_combined".to_string(), figure_table(&combined, None)?),
        (
            "fig5_t1_dominance".to_string(),
            figure_table(&t1_family, Some(&[Protocol::DRB]))?,
        ),
        ("fig6_purity".to_string(), purity_csv(&archived_purity(archive))?),
    ];
    Ok(Report {
        summary: summary(archive),
        tables,
    })
}

pub fn report_from_path(path: &Path) -> Result<Report> {
    report(&ExperimentArchive::load(path)?)
}
