//! One function per subcommand, each returning its tables.

use std::io::Write;
use std::path::Path;

use bfree_core::bset::{bfree_segment, count_bfree, count_semigroup, estimate_index, SievingSet};
use bfree_core::constants::{
    a_alpha, a_squarefree, density, gamma_alpha, quadrature_check, v_moment_closed,
};
use bfree_core::fbm::{covariance_report, fbm_reference, full_covariance, path_ensemble, CovarianceReport};
use bfree_core::stats::{
    clt_sample, empirical_moments, gap_moment_inequality, weighted_moments, window_histograms,
    Center, MomentReport, StepFunction, WindowHistogram,
};
use bfree_core::theory::{c2_exact, c2_weighted};
use bfree_core::Approximation;

use crate::config::{Command, RunConfig};
use crate::output::{sibling, Report, Table, Value};
use crate::{verify, CliError};

/// Index limit used by the `constants` semigroup estimate.
const INDEX_LIMIT: u64 = 10_000_000_000;
/// Points of the reference fBm path written by `fbm`.
const REFERENCE_POINTS: usize = 101;

pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.command == Command::Verify {
        return verify::run(cfg);
    }
    let set = cfg.set.load()?;
    match cfg.command {
        Command::Constants => constants(cfg, &set),
        Command::Sieve => sieve(cfg, &set),
        Command::Moments => moments(cfg, &set),
        Command::VarianceCompare => variance_compare(cfg, &set),
        Command::Clt => clt(cfg, &set),
        Command::Fbm => fbm(cfg, &set),
        Command::Verify => unreachable!("handled above"),
    }
}

fn alpha_for(cfg: &RunConfig, set: &SievingSet) -> Option<f64> {
    cfg.alpha.or_else(|| set.natural_index())
}

/// Target error for `C₂(H)`; its tail shrinks like `H/√D`.
pub fn c2_eps(h: u64) -> f64 {
    1e-5 * (h as f64).sqrt().max(1.0)
}

fn load_phi(cfg: &RunConfig) -> Result<Option<StepFunction>, CliError> {
    cfg.phi
        .as_ref()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(StepFunction::parse(&text)?)
        })
        .transpose()
}

fn note_all(notes: &mut Vec<String>, label: &str, a: &Approximation) {
    notes.extend(a.notes.iter().map(|n| format!("{label}: {n}")));
}

fn approx_row(t: &mut Table, name: &str, a: &Approximation) {
    t.push(vec![
        name.into(),
        a.value.into(),
        a.abs_error.into(),
        a.rigor.to_string().into(),
        a.truncation.clone().into(),
    ]);
}

fn constants(cfg: &RunConfig, set: &SievingSet) -> Result<Report, CliError> {
    let mut t = Table::new("constants", &["quantity", "value", "abs_error", "rigor", "truncation"]);
    let mut notes = Vec::new();
    let d = density(set, cfg.cutoff)?;
    approx_row(&mut t, "density", &d);
    note_all(&mut notes, "density", &d);
    if set.power() == Some(2) {
        let a = a_squarefree(cfg.cutoff)?;
        approx_row(&mut t, "a_squarefree", &a);
        note_all(&mut notes, "a_squarefree", &a);
    }
    match alpha_for(cfg, set) {
        Some(alpha) => {
            let g = gamma_alpha(alpha)?;
            t.push(vec![
                "gamma_alpha".into(),
                g.into(),
                (8.0 * f64::EPSILON * g.abs()).into(),
                "heuristic".into(),
                "closed form, rounding estimate".into(),
            ]);
            let a = a_alpha(set, alpha, cfg.cutoff)?;
            approx_row(&mut t, "a_alpha", &a);
            note_all(&mut notes, "a_alpha", &a);
            let v = v_moment_closed(alpha)?;
            t.push(vec![
                "v_moment_closed".into(),
                v.into(),
                (16.0 * f64::EPSILON * v.abs()).into(),
                "heuristic".into(),
                "closed form, rounding estimate".into(),
            ]);
            let q = quadrature_check(alpha, 1e-9)?;
            t.push(vec![
                "v_moment_quadrature".into(),
                q.numeric.into(),
                q.numeric_error.into(),
                "heuristic".into(),
                format!("adaptive Gauss-Kronrod on [0, {}] plus analytic tail", q.split).into(),
            ]);
        }
        None => notes.push("no index for this set; pass --alpha for the alpha-dependent constants".into()),
    }
    match estimate_index(set, INDEX_LIMIT) {
        Ok(est) => {
            let spread = est.drift.iter().map(|d| (d.2 - est.alpha).abs()).fold(0.0, f64::max);
            t.push(vec![
                "semigroup_index".into(),
                est.alpha.into(),
                spread.into(),
                "heuristic".into(),
                format!("log N(x)/log x at x = {} (N = {}); error is the drift to x/16", est.limit, est.count).into(),
            ]);
        }
        Err(e) => notes.push(format!("semigroup_index: {e}")),
    }
    Ok(Report { tables: vec![t], notes, passed: None })
}

fn sieve(cfg: &RunConfig, set: &SievingSet) -> Result<Report, CliError> {
    let count = count_bfree(set, cfg.x);
    let d = density(set, cfg.cutoff)?;
    let ratio = count as f64 / cfg.x as f64;
    let mut t = Table::new("sieve", &["set", "X", "count", "ratio", "density", "deviation"]);
    t.push(vec![
        set.label().into(),
        cfg.x.into(),
        count.into(),
        ratio.into(),
        d.value.into(),
        (ratio - d.value).into(),
    ]);
    let mut tables = vec![t];
    if let Some(path) = &cfg.bitmap {
        let len = cfg.len.unwrap_or(cfg.x);
        let seg = bfree_segment(set, cfg.start, len)?;
        let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        seg.write_bitmap(&mut w)?;
        w.flush()?;
        let mut b = Table::new("bitmap", &["start", "len", "count", "path"]);
        b.push(vec![seg.start().into(), seg.len().into(), seg.count_ones().into(), path.display().to_string().into()]);
        tables.push(b);
    }
    Ok(Report { tables, notes: Vec::new(), passed: None })
}

/// `(k − 1)!!` for even `k`, zero for odd `k`.
fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..k).step_by(2).map(|i| i as f64).product()
    }
}

fn write_histogram(path: &Path, hist: &WindowHistogram) -> Result<(), CliError> {
    let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    writeln!(w, "j,count")?;
    for (j, c) in hist.counts.iter().enumerate() {
        writeln!(w, "{j},{c}")?;
    }
    w.flush()?;
    Ok(())
}

fn dump_histograms(cfg: &RunConfig, hists: &[WindowHistogram]) -> Result<(), CliError> {
    let Some(path) = &cfg.histogram else { return Ok(()) };
    if let [one] = hists {
        return write_histogram(path, one);
    }
    for hist in hists {
        write_histogram(&sibling(path, &format!("h{}", hist.h)), hist)?;
    }
    Ok(())
}

/// Moment reports for every `H`, unweighted from one sieve pass or
/// weighted per `H`.
fn moment_reports(
    cfg: &RunConfig,
    set: &SievingSet,
    ks: &[u32],
) -> Result<(Vec<MomentReport>, Vec<WindowHistogram>), CliError> {
    match load_phi(cfg)? {
        None => {
            let hists = window_histograms(set, cfg.x, &cfg.h)?;
            let reports = hists
                .iter()
                .map(|hist| Ok(empirical_moments(hist, Center::density_window(set, hist.h)?, ks)?))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((reports, hists))
        }
        Some(phi) => {
            let reports = cfg
                .h
                .iter()
                .map(|&h| Ok(weighted_moments(set, cfg.x, h, &phi, ks)?))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok((reports, Vec::new()))
        }
    }
}

fn with_second(ks: &[u32]) -> Vec<u32> {
    let mut all = ks.to_vec();
    if !all.contains(&2) {
        all.push(2);
    }
    all
}

fn moments(cfg: &RunConfig, set: &SievingSet) -> Result<Report, CliError> {
    let mut notes = Vec::new();
    let a = alpha_for(cfg, set).map(|al| a_alpha(set, al, cfg.cutoff).map(|a| (al, a))).transpose()?;
    if let Some((_, a)) = &a {
        note_all(&mut notes, "a_alpha", a);
    }
    let (reports, hists) = moment_reports(cfg, set, &with_second(&cfg.k))?;
    dump_histograms(cfg, &hists)?;
    let mut t = Table::new(
        "moments",
        &["H", "k", "moment", "center_sensitivity", "standardized", "normalized", "gaussian"],
    );
    for rep in &reports {
        notes.push(format!("H = {}: centre {} from {}", rep.h, rep.center.value, rep.center.provenance));
        let m2 = rep.get(2).unwrap_or(f64::NAN);
        let scale = a.as_ref().map_or(f64::NAN, |(al, a)| a.value * (rep.h as f64).powf(*al));
        for &k in &cfg.k {
            let e = rep.moments.iter().find(|m| m.k == k).expect("requested order");
            let half = k as f64 / 2.0;
            t.push(vec![
                rep.h.into(),
                k.into(),
                e.value.into(),
                e.center_sensitivity.into(),
                (e.value / m2.powf(half)).into(),
                (e.value / scale.powf(half)).into(),
                gaussian_moment(k).into(),
            ]);
        }
    }
    Ok(Report { tables: vec![t], notes, passed: None })
}

fn variance_compare(cfg: &RunConfig, set: &SievingSet) -> Result<Report, CliError> {
    let mut notes = Vec::new();
    let alpha = alpha_for(cfg, set)
        .ok_or_else(|| CliError::Config("variance-compare needs --alpha for this set".into()))?;
    let a = a_alpha(set, alpha, cfg.cutoff)?;
    note_all(&mut notes, "a_alpha", &a);
    let phi = load_phi(cfg)?;
    let (reports, hists) = moment_reports(cfg, set, &[2])?;
    dump_histograms(cfg, &hists)?;
    let mut t = Table::new(
        "variance",
        &[
            "H", "m2", "m2_center_sensitivity", "c2", "c2_abs_error", "c2_rigor", "a_alpha",
            "a_scaled", "semigroup_count", "a_count", "m2_over_c2", "c2_over_a_scaled",
            "m2_over_a_scaled", "gap_inequality",
        ],
    );
    for (i, rep) in reports.iter().enumerate() {
        let h = rep.h;
        let m2 = rep.moments[0].value;
        let c2 = match &phi {
            None => c2_exact(set, h, c2_eps(h))?,
            Some(phi) => c2_weighted(set, h, phi, cfg.cutoff)?,
        };
        note_all(&mut notes, &format!("c2(H = {h})"), &c2);
        let a_scaled = a.value * (h as f64).powf(alpha);
        let n_h = count_semigroup(set, h, false);
        let a_count = a.value * n_h as f64;
        let gap: Value = match hists.get(i) {
            Some(hist) => gap_moment_inequality(hist, rep.center.value, 1)?.into(),
            None => "n/a".into(),
        };
        t.push(vec![
            h.into(),
            m2.into(),
            rep.moments[0].center_sensitivity.into(),
            c2.value.into(),
            c2.abs_error.into(),
            c2.rigor.to_string().into(),
            a.value.into(),
            a_scaled.into(),
            n_h.into(),
            a_count.into(),
            (m2 / c2.value).into(),
            (c2.value / a_scaled).into(),
            (m2 / a_scaled).into(),
            gap,
        ]);
    }
    Ok(Report { tables: vec![t], notes, passed: None })
}

fn clt(cfg: &RunConfig, set: &SievingSet) -> Result<Report, CliError> {
    let hists = window_histograms(set, cfg.x, &cfg.h)?;
    dump_histograms(cfg, &hists)?;
    let mut summary = Table::new(
        "clt",
        &["H", "X", "center", "scale", "m2", "skewness", "kurtosis", "ks", "ks_midpoint"],
    );
    let mut cdf = Table::new("cdf", &["H", "z", "empirical", "normal"]);
    let mut notes = Vec::new();
    for hist in &hists {
        let center = Center::density_window(set, hist.h)?;
        let c = center.value;
        let rep = empirical_moments(hist, center, &[2, 3, 4])?;
        let m2 = rep.get(2).expect("k = 2");
        let c2 = c2_exact(set, hist.h, c2_eps(hist.h))?;
        let scale = c2.value.sqrt();
        let sample = clt_sample(hist, c, scale)?;
        summary.push(vec![
            hist.h.into(),
            hist.x.into(),
            c.into(),
            scale.into(),
            m2.into(),
            (rep.get(3).expect("k = 3") / m2.powf(1.5)).into(),
            (rep.get(4).expect("k = 4") / (m2 * m2)).into(),
            sample.ks.into(),
            sample.ks_midpoint.into(),
        ]);
        for (z, f) in sample.cdf {
            cdf.push(vec![hist.h.into(), z.into(), f.into(), bfree_core::stats::normal_cdf(z).into()]);
        }
        notes.push(format!("H = {}: scale is sqrt(C2(H)), {}", hist.h, c2.truncation));
    }
    notes.push("ks_midpoint compares the lattice CDF with the normal CDF at half-integer points".into());
    Ok(Report { tables: vec![summary, cdf], notes, passed: None })
}

fn covariance_tables(rep: &CovarianceReport) -> (Table, Table) {
    let mut cov = Table::new("covariance", &["s", "t", "empirical", "theoretical", "stderr", "deviation"]);
    for c in &rep.cells {
        cov.push(vec![
            c.s.into(),
            c.t.into(),
            c.empirical.into(),
            c.theoretical.into(),
            c.stderr.into(),
            c.deviation().into(),
        ]);
    }
    let mut means = Table::new("means", &["t", "mean", "stderr"]);
    for &(t, m, se) in &rep.means {
        means.push(vec![t.into(), m.into(), se.into()]);
    }
    (cov, means)
}

fn fbm(cfg: &RunConfig, set: &SievingSet) -> Result<Report, CliError> {
    let alpha = alpha_for(cfg, set).ok_or_else(|| CliError::Config("fbm needs --alpha for this set".into()))?;
    let h = cfg.h[0];
    let mut notes = Vec::new();
    if cfg.h.len() > 1 {
        notes.push(format!("fbm uses the first H only ({h})"));
    }
    let full = cfg.samples.is_none_or(|s| s >= cfg.x);
    let mut tables;
    if full {
        let (rep, norm) = full_covariance(set, cfg.x, h, &cfg.grid, alpha)?;
        note_all(&mut notes, "a_alpha", &norm.constant);
        notes.push(format!("normalisation sqrt(A_alpha N(H)) = {}, N(H) = {}", norm.scale, norm.semigroup_count));
        notes.push(format!("all {} starting points enumerated", rep.samples));
        let (cov, means) = covariance_tables(&rep);
        tables = vec![cov, means];
    } else {
        let samples = cfg.samples.expect("sampled run");
        let ens = path_ensemble(set, cfg.x, h, &cfg.grid, samples, cfg.seed, alpha)?;
        notes.extend(ens.warnings.iter().cloned());
        notes.push(format!(
            "normalisation sqrt(A_alpha N(H)) = {}, N(H) = {}",
            ens.normalization.scale, ens.normalization.semigroup_count
        ));
        let rep = covariance_report(&ens)?;
        let (cov, means) = covariance_tables(&rep);
        let mut paths = Table::new("paths", &["n", "t", "w"]);
        for p in &ens.paths {
            for (&t, &w) in ens.grid.iter().zip(&p.values) {
                paths.push(vec![p.n.into(), t.into(), w.into()]);
            }
        }
        tables = vec![cov, means, paths];
    }
    if (h as f64).ln() / (cfg.x as f64).ln() > 0.5 && full {
        notes.push("log H / log X exceeds 0.5; far from the small-window regime".into());
    }
    let grid: Vec<f64> = (0..REFERENCE_POINTS).map(|i| i as f64 / (REFERENCE_POINTS - 1) as f64).collect();
    let values = fbm_reference(alpha / 2.0, &grid, cfg.seed)?;
    let mut reference = Table::new("reference", &["t", "value"]);
    for (&t, &v) in grid.iter().zip(&values) {
        reference.push(vec![t.into(), v.into()]);
    }
    tables.push(reference);
    Ok(Report { tables, notes, passed: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_moment(0), 1.0);
        assert_eq!(gaussian_moment(2), 1.0);
        assert_eq!(gaussian_moment(3), 0.0);
        assert_eq!(gaussian_moment(4), 3.0);
        assert_eq!(gaussian_moment(6), 15.0);
    }
}
