//! Human-readable rendering of experiment reports; the JSON twin is written
//! by the pipeline.

use std::fmt::Write;

use crate::pipeline::{GateMassRow, RunReport, SweepReport};

pub fn render_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "experiment report (base seed {}, {} runs, {} experts)",
        report.base_seed, report.repeat_count, report.expert_count
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<5} {:<12} {:>10} {:>10} {:>10} {:>10}",
        "run", "seed", "argue_auc", "argue_ap", "ae_auc", "ae_ap"
    );
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{:<5} {:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.run, r.seed, r.argue.auc, r.argue.ap, r.baseline.auc, r.baseline.ap
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "argue    AUC {:.4} +/- {:.4}   AP {:.4} +/- {:.4}",
        report.argue.auc_mean, report.argue.auc_std, report.argue.ap_mean, report.argue.ap_std
    );
    let _ = writeln!(
        out,
        "baseline AUC {:.4} +/- {:.4}   AP {:.4} +/- {:.4}",
        report.baseline.auc_mean,
        report.baseline.auc_std,
        report.baseline.ap_mean,
        report.baseline.ap_std
    );
    match report.wilcoxon_p_auc {
        Some(p) => {
            let _ = writeln!(out, "signed-rank p (argue vs baseline AUC): {p:.4}");
        }
        None => {
            let _ = writeln!(out, "signed-rank p: n/a (single run)");
        }
    }
    let _ = writeln!(out);
    out.push_str(&render_gate_table(&report.gate_ablation));
    out
}

pub fn render_gate_table(rows: &[GateMassRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        return out;
    }
    let experts = rows[0].mean_gate.len() - 1;
    let mut header = format!("{:<22} {:>7}", "gate mass by group", "count");
    for j in 0..experts {
        let _ = write!(header, " {:>9}", format!("expert_{j}"));
    }
    let _ = write!(header, " {:>9}", "short_cut");
    let _ = writeln!(out, "{header}");
    for row in rows {
        let mut line = format!("{:<22} {:>7}", row.group, row.count);
        for v in &row.mean_gate {
            let _ = write!(line, " {v:>9.4}");
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn render_sweep(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>10} {:>10} {:>10} {:>10}",
        "classes", "argue_auc", "auc_std", "ae_auc", "ae_std"
    );
    for point in &report.points {
        let _ = writeln!(
            out,
            "{:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            point.class_limit,
            point.report.argue.auc_mean,
            point.report.argue.auc_std,
            point.report.baseline.auc_mean,
            point.report.baseline.auc_std
        );
    }
    out
}
