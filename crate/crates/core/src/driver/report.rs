use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::Diagonal;
use crate::schemes::{ElementPair, SchemeConfig, SchemeKind, Timings};
use crate::verify::{observed_order, ErrorSeries, NormKind, NormSummary};

use super::run::InvariantRecord;

pub const CSV_HEADER: &str = "scheme,pair,n,k,norm,value,order";

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn pair_label(k_coarse: f64, k_fine: f64) -> String {
    format!("{k_coarse}-{k_fine}")
}

/// Errors and observed orders of a ladder of runs on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: SchemeKind,
    pub pair: ElementPair,
    pub n: usize,
    /// Not part of the CSV schema; reports parsed from CSV carry the default.
    pub diagonal: Diagonal,
    pub ks: Vec<f64>,
    pub summaries: Vec<NormSummary>,
    /// Per-run timings, empty when parsed from CSV.
    pub timings: Vec<Timings>,
}

impl ConvergenceReport {
    pub fn new(base: &SchemeConfig, ks: Vec<f64>, summaries: Vec<NormSummary>) -> Result<Self> {
        if ks.len() != summaries.len() {
            return Err(Error::Dimension(
                "one summary per time step expected".into(),
            ));
        }
        Ok(ConvergenceReport {
            scheme: base.scheme,
            pair: base.pair,
            n: base.n,
            diagonal: base.diagonal,
            ks,
            summaries,
            timings: Vec::new(),
        })
    }

    /// Observed orders between consecutive time steps; `NaN` where an error
    /// vanishes.
    pub fn orders(&self) -> Vec<NormSummary> {
        self.ks
            .windows(2)
            .zip(self.summaries.windows(2))
            .map(|(k, s)| {
                let mut o = [f64::NAN; 6];
                for kind in NormKind::ALL {
                    o[kind as usize] = observed_order(s[0].get(kind), s[1].get(kind), k[0], k[1])
                        .unwrap_or(f64::NAN);
                }
                NormSummary(o)
            })
            .collect()
    }

    pub fn pair_labels(&self) -> Vec<String> {
        self.ks.windows(2).map(|w| pair_label(w[0], w[1])).collect()
    }

    /// Observed order of `kind` at the finest pair.
    pub fn finest_order(&self, kind: NormKind) -> f64 {
        self.orders().last().map_or(f64::NAN, |o| o.get(kind))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let prefix = format!("{},{},{}", self.scheme, self.pair.key(), self.n);
        for (k, s) in self.ks.iter().zip(&self.summaries) {
            for kind in NormKind::ALL {
                let _ = writeln!(
                    out,
                    "{prefix},{k},{},{},",
                    kind.key(),
                    fmt_float(s.get(kind))
                );
            }
        }
        for (label, o) in self.pair_labels().iter().zip(self.orders()) {
            for kind in NormKind::ALL {
                let _ = writeln!(
                    out,
                    "{prefix},{label},{},,{}",
                    kind.key(),
                    fmt_float(o.get(kind))
                );
            }
        }
        out
    }

    /// Rebuilds a report from [`Self::to_csv`] output; order rows are checked
    /// against the orders recomputed from the values.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_csv(text)?;
        let first = rows
            .first()
            .ok_or_else(|| Error::Config("empty CSV".into()))?;
        let scheme: SchemeKind = first.scheme.parse()?;
        let pair: ElementPair = first.pair.parse()?;
        let n = first.n;
        let mut ks: Vec<f64> = Vec::new();
        let mut summaries: Vec<NormSummary> = Vec::new();
        let mut orders = Vec::new();
        for row in &rows {
            if row.scheme != first.scheme || row.pair != first.pair || row.n != n {
                return Err(Error::Config("CSV mixes several runs".into()));
            }
            let kind = NormKind::from_key(&row.norm)
                .ok_or_else(|| Error::Config(format!("unknown norm '{}'", row.norm)))?;
            match (row.value, row.order) {
                (Some(v), None) => {
                    let k: f64 = row
                        .k
                        .parse()
                        .map_err(|_| Error::Config(format!("bad time step '{}'", row.k)))?;
                    if ks.last() != Some(&k) {
                        ks.push(k);
                        summaries.push(NormSummary::default());
                    }
                    summaries.last_mut().expect("pushed above").0[kind as usize] = v;
                }
                (None, Some(o)) => orders.push((row.k.clone(), kind, o)),
                _ => {
                    return Err(Error::Config(
                        "each row carries exactly one of value and order".into(),
                    ))
                }
            }
        }
        let report = ConvergenceReport {
            scheme,
            pair,
            n,
            diagonal: Diagonal::default(),
            ks,
            summaries,
            timings: Vec::new(),
        };
        let expected = report.orders();
        let labels = report.pair_labels();
        for (label, kind, o) in orders {
            let i = labels
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| Error::Config(format!("order row for unknown pair '{label}'")))?;
            let e = expected[i].get(kind);
            if fmt_float(e) != fmt_float(o) {
                return Err(Error::Config(format!(
                    "order row {label} {kind} disagrees with the values"
                )));
            }
        }
        Ok(report)
    }

    /// Order and error tables: one row per norm,
    /// one column per pair of consecutive time steps.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scheme={} pair={} n={} diagonal={}",
            self.scheme,
            self.pair.key(),
            self.n,
            self.diagonal
        );
        let _ = writeln!(out, "\nError orders in time");
        let _ = write!(out, "{:<22}", "");
        for l in self.pair_labels() {
            let _ = write!(out, "{l:>12}");
        }
        out.push('\n');
        let orders = self.orders();
        for kind in NormKind::ALL {
            let _ = write!(out, "{:<22}", kind.label());
            for o in &orders {
                let _ = write!(out, "{:>12.3}", o.get(kind));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "\nErrors");
        let _ = write!(out, "{:<22}", "");
        for k in &self.ks {
            let _ = write!(out, "{:>12}", format!("k={k}"));
        }
        out.push('\n');
        for kind in NormKind::ALL {
            let _ = write!(out, "{:<22}", kind.label());
            for s in &self.summaries {
                let _ = write!(out, "{:>12.4e}", s.get(kind));
            }
            out.push('\n');
        }
        if self.timings.len() == self.ks.len() {
            let _ = writeln!(out, "\nTime (s)");
            for (label, f) in [("assembly", 0), ("solve", 1)] {
                let _ = write!(out, "{label:<22}");
                for t in &self.timings {
                    let d = if f == 0 { t.assembly } else { t.solve };
                    let _ = write!(out, "{:>12.3}", d.as_secs_f64());
                }
                out.push('\n');
            }
        }
        out
    }
}

/// One line of the tidy CSV schema.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: String,
    pub pair: String,
    pub n: usize,
    /// A time step, or the pair label `coarse-fine` on order rows.
    pub k: String,
    pub norm: String,
    pub value: Option<f64>,
    pub order: Option<f64>,
}

fn parse_opt(field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Config(format!("bad number '{field}'")))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let bad = |e: csv::Error| Error::Config(format!("malformed CSV: {e}"));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(bad)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Config(format!("expected header '{CSV_HEADER}'")));
    }
    reader
        .records()
        .map(|record| {
            let f = record.map_err(bad)?;
            Ok(CsvRow {
                scheme: f[0].to_string(),
                pair: f[1].to_string(),
                n: f[2]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad mesh size '{}'", &f[2])))?,
                k: f[3].to_string(),
                norm: f[4].to_string(),
                value: parse_opt(&f[5])?,
                order: parse_opt(&f[6])?,
            })
        })
        .collect()
}

/// One scheme of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareEntry {
    pub scheme: SchemeKind,
    pub summary: NormSummary,
    pub timings: Timings,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub base: SchemeConfig,
    pub entries: Vec<CompareEntry>,
}

impl CompareReport {
    /// Total time of the incremental entry, or of the first entry when the
    /// incremental scheme is absent.
    fn baseline(&self) -> f64 {
        let e = self
            .entries
            .iter()
            .find(|e| e.scheme == SchemeKind::Incremental)
            .or(self.entries.first());
        e.map_or(f64::NAN, |e| total(&e.timings))
    }

    /// Total time of each entry divided by the baseline.
    pub fn relative_costs(&self) -> Vec<f64> {
        let b = self.baseline();
        self.entries.iter().map(|e| total(&e.timings) / b).collect()
    }

    /// Error rows in the tidy schema, one block per scheme.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            for kind in NormKind::ALL {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},",
                    e.scheme,
                    self.base.pair.key(),
                    self.base.n,
                    self.base.k,
                    kind.key(),
                    fmt_float(e.summary.get(kind))
                );
            }
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("scheme,steps,assembly_s,solve_s,total_s,relative_cost\n");
        for (e, c) in self.entries.iter().zip(self.relative_costs()) {
            let _ = writeln!(
                out,
                "{},{},{:.3},{:.3},{:.3},{:.3}",
                e.scheme,
                e.steps,
                e.timings.assembly.as_secs_f64(),
                e.timings.solve.as_secs_f64(),
                total(&e.timings),
                c
            );
        }
        out
    }

    /// Errors and cost side by side, one column per scheme.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let b = &self.base;
        let steps = self.entries.first().map_or(0, |e| e.steps);
        let _ = writeln!(
            out,
            "pair={} n={} k={} ({steps} time iterations) diagonal={}",
            b.pair.key(),
            b.n,
            b.k,
            b.diagonal
        );
        let _ = write!(out, "{:<22}", "");
        for e in &self.entries {
            let _ = write!(out, "{:>14}", e.scheme.name());
        }
        out.push('\n');
        for kind in NormKind::ALL {
            let _ = write!(out, "{:<22}", kind.label());
            for e in &self.entries {
                let _ = write!(out, "{:>14.4e}", e.summary.get(kind));
            }
            out.push('\n');
        }
        let rows: [(&str, Column); 3] = [
            ("assembly (s)", |t| t.assembly.as_secs_f64()),
            ("solve (s)", |t| t.solve.as_secs_f64()),
            ("CPU time (s)", total),
        ];
        for (label, f) in rows {
            let _ = write!(out, "{label:<22}");
            for e in &self.entries {
                let _ = write!(out, "{:>14.3}", f(&e.timings));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<22}", "relative cost");
        for c in self.relative_costs() {
            let _ = write!(out, "{c:>14.3}");
        }
        out.push('\n');
        out
    }
}

type Column = fn(&Timings) -> f64;

fn total(t: &Timings) -> f64 {
    (t.assembly + t.solve).as_secs_f64()
}

/// Per-step errors, one row per time level.
pub fn series_csv(series: &ErrorSeries) -> String {
    let mut out = String::from("step,t,u1_l2,u1_h1semi,u2_l2,u2_h1semi,p_l2\n");
    for m in 0..series.len() {
        let _ = writeln!(
            out,
            "{m},{},{},{},{},{},{}",
            series.times[m],
            fmt_float(series.u1_l2[m]),
            fmt_float(series.u1_h1[m]),
            fmt_float(series.u2_l2[m]),
            fmt_float(series.u2_h1[m]),
            fmt_float(series.p_l2[m])
        );
    }
    out
}

/// Per-step solver statistics and projection invariants.
pub fn invariants_csv(records: &[InvariantRecord]) -> String {
    let mut out = String::from(
        "step,t,velocity_iterations,velocity_residual,pressure_iterations,pressure_residual,\
         identity_defect,orthogonality,energy\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            r.time,
            r.velocity_iterations,
            fmt_float(r.velocity_residual),
            r.pressure_iterations,
            fmt_float(r.pressure_residual),
            fmt_opt(r.identity_defect),
            fmt_opt(r.orthogonality),
            fmt_opt(r.energy)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn linear_report() -> ConvergenceReport {
        let ks = vec![0.2, 0.1, 0.05];
        let summaries = ks
            .iter()
            .map(|&k| NormSummary([3.0 * k, k, 0.5 * k, 2.0 * k, k, 7.0 * k]))
            .collect();
        ConvergenceReport::new(&SchemeConfig::default(), ks, summaries).unwrap()
    }

    #[test]
    fn linear_errors_give_unit_orders() {
        let r = linear_report();
        let orders = r.orders();
        assert_eq!(orders.len(), 2);
        for o in orders {
            for v in o.0 {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(r.pair_labels(), vec!["0.2-0.1", "0.1-0.05"]);
    }

    #[test]
    fn csv_layout() {
        let csv = linear_report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 3 * 6 + 2 * 6);
        assert_eq!(
            lines[1],
            "incremental,th,16,0.2,u1_linf_l2,6.0000000000000009e-1,"
        );
        assert!(lines[19].starts_with("incremental,th,16,0.2-0.1,u1_linf_l2,,"));
    }

    #[test]
    fn csv_round_trip() {
        let mut r = linear_report();
        r.summaries[1].0[2] = std::f64::consts::PI * 1e-7;
        let csv = r.to_csv();
        let back = ConvergenceReport::from_csv(&csv).unwrap();
        assert_eq!(back.ks, r.ks);
        assert_eq!(back.summaries, r.summaries);
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn csv_rejects_tampering() {
        let csv = linear_report().to_csv().replacen(",,1.0", ",,2.0", 1);
        assert!(ConvergenceReport::from_csv(&csv).is_err());
        assert!(parse_csv("a,b\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\nx,y\n")).is_err());
    }

    #[test]
    fn pretty_table_shape() {
        let text = linear_report().pretty();
        assert!(text.contains("diagonal=right"));
        assert!(text.contains("0.1-0.05"));
        assert_eq!(
            text.matches("1.000 ").count() + text.matches("1.000\n").count(),
            12
        );
    }

    #[test]
    fn relative_cost_uses_incremental() {
        let t = |s| Timings {
            assembly: Duration::from_secs(s),
            solve: Duration::from_secs(s),
        };
        let entry = |scheme, s| CompareEntry {
            scheme,
            summary: NormSummary::default(),
            timings: t(s),
            steps: 4,
        };
        let report = CompareReport {
            base: SchemeConfig::default(),
            entries: vec![
                entry(SchemeKind::Penalty, 3),
                entry(SchemeKind::Incremental, 2),
            ],
        };
        assert_eq!(report.relative_costs(), vec![1.5, 1.0]);
        assert!(report
            .timing_csv()
            .contains("penalty,4,3.000,3.000,6.000,1.500"));
        assert!(report.pretty().contains("relative cost"));
        assert_eq!(report.to_csv().lines().count(), 13);
    }
}
