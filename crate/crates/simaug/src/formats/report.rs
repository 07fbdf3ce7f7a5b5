//! CSV outputs: loss curves, per-class metrics and confusion matrices.

use std::fmt::Write as _;

use simaug_core::harness::Metrics;
use simaug_core::learn::LossRecord;

/// `step,phase,L_cls,L_adv`; `L_adv` is empty where no discriminator runs.
pub fn write_loss_csv(curve: &[LossRecord]) -> String {
    let mut out = String::from("step,phase,L_cls,L_adv\n");
    for r in curve {
        let adv = r.l_adv.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.step, r.phase.as_str(), r.l_cls, adv);
    }
    out
}

/// `class,precision,recall,f1`, one row per class, then a `micro` row.
/// Micro-averaged precision, recall and F1 all equal accuracy for
/// single-label predictions.
pub fn write_report_csv(classes: &[String], m: &Metrics) -> String {
    let mut out = String::from("class,precision,recall,f1\n");
    for (name, c) in classes.iter().zip(&m.per_class) {
        let _ = writeln!(out, "{name},{:.6},{:.6},{:.6}", c.precision, c.recall, c.f1);
    }
    let _ = writeln!(out, "micro,{0:.6},{0:.6},{0:.6}", m.accuracy);
    out
}

/// Rows are actual classes, columns predicted.
pub fn write_confusion_csv(classes: &[String], m: &Metrics) -> String {
    let mut out = String::from("actual\\predicted");
    for c in classes {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (name, row) in classes.iter().zip(&m.confusion) {
        out.push_str(name);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use simaug_core::learn::Phase;

    #[test]
    fn report_layout() {
        let m = Metrics::from_confusion(vec![vec![3, 1], vec![1, 5]]);
        let classes = vec!["a".to_string(), "b".to_string()];
        let r = write_report_csv(&classes, &m);
        let lines: Vec<&str> = r.lines().collect();
        assert_eq!(lines[0], "class,precision,recall,f1");
        assert_eq!(lines[1], "a,0.750000,0.750000,0.750000");
        assert_eq!(lines[3], "micro,0.800000,0.800000,0.800000");
        assert_eq!(
            write_confusion_csv(&classes, &m),
            "actual\\predicted,a,b\na,3,1\nb,1,5\n"
        );
    }

    #[test]
    fn loss_rows() {
        let curve = [
            LossRecord {
                step: 0,
                phase: Phase::Train,
                l_cls: 0.5,
                l_adv: None,
            },
            LossRecord {
                step: 1,
                phase: Phase::Classifier,
                l_cls: 0.25,
                l_adv: Some(-1.5),
            },
        ];
        assert_eq!(
            write_loss_csv(&curve),
            "step,phase,L_cls,L_adv\n0,train,0.5,\n1,model,0.25,-1.5\n"
        );
    }
}
