//! CSV and manifest rendering. Headers are fixed; every row ends with the
//! cert column naming the solver certificate it depends on; floats are
//! printed as {:.12e} so reruns are byte-identical. Timestamps belong to
//! the manifest only.

use crate::excess::ExcessReport;
use crate::probes::ProbeRow;
use crate::rates::RateReport;

/// Fixed float format for CSV bodies.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

/// rates.csv: one row per measured error datum.
pub fn rates_csv(reports: &[RateReport]) -> String {
    let mut out = String::from("experiment,eps,norm_kind,error,slope_group,cert\n");
    for rep in reports {
        for row in &rep.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rep.experiment,
                fmt_f64(row.eps),
                row.norm_kind,
                fmt_f64(row.error),
                row.slope_group,
                row.cert
            ));
        }
    }
    out
}

/// excess.csv: one row per (eps, r, delta) certificate check. The H_r and
/// H_delta_r columns are the excess functional; h_r is the top-coefficient
/// functional of the minimizing polynomial.
pub fn excess_csv(reports: &[ExcessReport], cert: &str) -> String {
    let mut out = String::from("eps,r,delta,H_r,H_delta_r,I_2r,h_r,pass,cert\n");
    for rep in reports {
        for row in &rep.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(rep.eps),
                fmt_f64(row.r),
                fmt_f64(row.delta),
                fmt_f64(row.h_r),
                fmt_f64(row.h_delta_r),
                fmt_f64(row.i_2r),
                fmt_f64(row.coeff_h_r),
                row.pass,
                cert
            ));
        }
    }
    out
}

/// probes.csv: one row per measured probe value.
pub fn probes_csv(rows: &[ProbeRow], cert: &str) -> String {
    let mut out = String::from("probe,eps,p_or_r,value,cert\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.probe,
            fmt_f64(row.eps),
            fmt_f64(row.p_or_r),
            fmt_f64(row.value),
            cert
        ));
    }
    out
}

/// Sectioned key-value manifest. Rendering is deterministic in insertion
/// order; the caller decides whether to include a timestamp entry.
#[derive(Debug, Default)]
pub struct Manifest {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest::default()
    }

    pub fn push(&mut self, section: &str, key: &str, value: String) {
        if let Some((_, entries)) = self.sections.iter_mut().find(|(s, _)| s == section) {
            entries.push((key.to_string(), value));
        } else {
            self.sections
                .push((section.to_string(), vec![(key.to_string(), value)]));
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (section, entries) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excess::ExcessRow;
    use crate::rates::{RateFit, RateRow};

    #[test]
    fn float_format_is_pinned() {
        assert_eq!(fmt_f64(1.0 / 3.0), "3.333333333333e-1");
        assert_eq!(fmt_f64(0.125), "1.250000000000e-1");
        assert_eq!(fmt_f64(0.0), "0.000000000000e0");
    }

    #[test]
    fn rates_csv_golden() {
        let rep = RateReport {
            experiment: "demo".into(),
            rows: vec![RateRow {
                eps: 0.125,
                error: 0.5,
                norm_kind: "L2".into(),
                slope_group: "g".into(),
                cert: "1.000e-2".into(),
            }],
            fits: vec![(
                "g".into(),
                RateFit {
                    slope: 1.0,
                    intercept: 0.0,
                    r2: 1.0,
                },
            )],
        };
        assert_eq!(
            rates_csv(&[rep]),
            "experiment,eps,norm_kind,error,slope_group,cert\n\
             demo,1.250000000000e-1,L2,5.000000000000e-1,g,1.000e-2\n"
        );
    }

    #[test]
    fn excess_csv_golden() {
        let rep = ExcessReport {
            eps: 0.25,
            rows: vec![ExcessRow {
                r: 0.5,
                delta: 0.125,
                h_r: 1.0,
                h_delta_r: 0.25,
                i_2r: 2.0,
                coeff_h_r: 3.0,
                needed_c: 0.0,
                pass: true,
            }],
            c_hat: 1e-6,
            skipped: vec![],
        };
        assert_eq!(
            excess_csv(&[rep], "kernel"),
            "eps,r,delta,H_r,H_delta_r,I_2r,h_r,pass,cert\n\
             2.500000000000e-1,5.000000000000e-1,1.250000000000e-1,\
             1.000000000000e0,2.500000000000e-1,2.000000000000e0,\
             3.000000000000e0,true,kernel\n"
        );
    }

    #[test]
    fn probes_csv_golden() {
        let rows = vec![ProbeRow {
            probe: "lipschitz_sup".into(),
            eps: 0.0625,
            p_or_r: 0.0,
            value: 2.5,
        }];
        assert_eq!(
            probes_csv(&rows, "kernel"),
            "probe,eps,p_or_r,value,cert\n\
             lipschitz_sup,6.250000000000e-2,0.000000000000e0,2.500000000000e0,kernel\n"
        );
    }

    #[test]
    fn manifest_sections_render_in_order() {
        let mut m = Manifest::new();
        m.push("run", "kind", "cell".into());
        m.push("results", "A_bar[0,0,0,0]", fmt_f64(3.0f64.sqrt()));
        m.push("run", "seed", "0".into());
        assert_eq!(
            m.render(),
            "[run]\nkind = cell\nseed = 0\n\n[results]\nA_bar[0,0,0,0] = 1.732050807569e0\n\n"
        );
    }
}
