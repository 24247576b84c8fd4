use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product-limit survival curve. Entry `i` describes the step at `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl KmCurve {
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Survival probability at time `t` (right-continuous step function).
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            1.0
        } else {
            self.survival[idx - 1]
        }
    }
}

/// Kaplan-Meier estimator over distinct event times.
pub fn km_curve(times: &[f64], events: &[bool]) -> Result<KmCurve> {
    if times.len() != events.len() {
        return Err(Error::dim("km_curve", format!("{} times, {} events", times.len(), events.len())));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Range(format!("survival time {t} must be finite and non-negative")));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut curve = KmCurve { times: Vec::new(), survival: Vec::new(), at_risk: Vec::new(), events: Vec::new() };
    let mut remaining = times.len();
    let mut s = 1.0;
    let mut start = 0;
    while start < order.len() {
        let t = times[order[start]];
        let mut end = start;
        while end < order.len() && times[order[end]] == t {
            end += 1;
        }
        let deaths = order[start..end].iter().filter(|&&i| events[i]).count();
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / remaining as f64;
            curve.times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(remaining);
            curve.events.push(deaths);
        }
        remaining -= end - start;
        start = end;
    }
    Ok(curve)
}

/// CSV rows `group,time,survival,at_risk,events`, each group starting with a
/// time-zero row at survival 1.
pub fn km_csv(curves: &[(String, usize, KmCurve)]) -> String {
    let mut out = String::from("group,time,survival,at_risk,events\n");
    for (name, n, curve) in curves {
        let _ = writeln!(out, "{name},0,1,{n},0");
        for i in 0..curve.times.len() {
            let _ = writeln!(
                out,
                "{name},{},{},{},{}",
                curve.times[i], curve.survival[i], curve.at_risk[i], curve.events[i]
            );
        }
    }
    out
}

/// Minimal SVG step plot of up to three curves.
pub fn km_svg(curves: &[(String, usize, KmCurve)]) -> Result<String> {
    const COLORS: [&str; 3] = ["#2b8a3e", "#e67700", "#c92a2a"];
    if curves.len() > COLORS.len() {
        return Err(Error::Range(format!("SVG rendering supports up to 3 curves, got {}", curves.len())));
    }
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let t_max = curves.iter().flat_map(|c| c.2.times.last().copied()).fold(1.0f64, f64::max);
    let x = |t: f64| pad + (w - 2.0 * pad) * t / t_max;
    let y = |s: f64| h - pad - (h - 2.0 * pad) * s;

    let mut svg =
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    let _ = writeln!(
        svg,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#868e96\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for (i, (name, _, curve)) in curves.iter().enumerate() {
        let mut d = format!("M{:.2},{:.2}", x(0.0), y(1.0));
        let mut s = 1.0;
        for (&t, &next) in curve.times.iter().zip(&curve.survival) {
            let _ = write!(d, " H{:.2} V{:.2}", x(t), y(next));
            s = next;
        }
        let _ = write!(d, " H{:.2} V{:.2}", x(t_max), y(s));
        let _ = writeln!(
            svg,
            "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"><title>{name}</title></path>",
            COLORS[i]
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{name}</text>",
            w - pad - 60.0,
            pad + 16.0 * (i as f64 + 1.0),
            COLORS[i]
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_events_stays_at_one() {
        let c = km_curve(&[1.0, 2.0, 3.0], &[false; 3]).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.survival_at(10.0), 1.0);
    }

    #[test]
    fn hand_computed_steps() {
        let c = km_curve(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        assert_eq!(c.times, vec![1.0, 3.0]);
        assert!((c.survival_at(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.survival_at(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.survival_at(3.0), 0.0);
        assert_eq!(c.at_risk, vec![3, 1]);
    }

    #[test]
    fn death_after_last_censoring_drops_to_zero() {
        let c = km_curve(&[1.0, 4.0, 6.0, 9.0], &[true, false, false, true]).unwrap();
        assert_eq!(*c.survival.last().unwrap(), 0.0);
        let kept = km_curve(&[1.0, 4.0, 6.0, 9.0], &[true, false, true, false]).unwrap();
        assert!(*kept.survival.last().unwrap() > 0.0);
    }

    #[test]
    fn empty_input_gives_empty_curve() {
        assert!(km_curve(&[], &[]).unwrap().is_empty());
    }

    #[test]
    fn negative_time_rejected() {
        assert!(km_curve(&[-1.0], &[true]).is_err());
    }

    #[test]
    fn csv_starts_each_group_at_time_zero() {
        let c = km_curve(&[1.0, 2.0], &[true, true]).unwrap();
        let text = km_csv(&[("Low".into(), 2, c)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "Low,0,1,2,0");
        assert_eq!(lines[2], "Low,1,0.5,2,1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn svg_has_one_path_per_curve() {
        let c = km_curve(&[1.0, 2.0], &[true, true]).unwrap();
        let svg = km_svg(&[("Low".into(), 2, c.clone()), ("High".into(), 2, c)]).unwrap();
        assert_eq!(svg.matches("<path").count(), 2);
    }
}
