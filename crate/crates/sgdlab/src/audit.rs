//! Numerical certification that standard convergence assumptions from the
//! stochastic-optimization literature fail on the toy-net objective, each
//! with concrete witness points and measured values.
//!
//! "Unbounded" claims are certified by monotone growth over a finite sweep
//! together with the fitted growth exponent; no finite computation can prove
//! unboundedness, so the sweep range is part of the report.

use crate::landscapes::{l2_norm, numerical_hessian, StochasticObjective, ToyNetObjective};
use serde::Serialize;

pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Violated,
    NotViolatedHere,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub measured: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub assumption: String,
    pub witnesses: Vec<Witness>,
    pub verdict: Verdict,
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{}: {}",
            self.assumption,
            match self.verdict {
                Verdict::Violated => "VIOLATED",
                Verdict::NotViolatedHere => "not violated here",
            }
        )?;
        for w in &self.witnesses {
            writeln!(f, "  at {:?}: {:.6e}  ({})", w.point, w.measured, w.note)?;
        }
        Ok(())
    }
}

fn frobenius(h: &[Vec<f64>]) -> f64 {
    h.iter()
        .flat_map(|row| row.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Sweep point for a 1-D or 2-D objective: `w1` in the first coordinate,
/// zeros elsewhere.
fn sweep_point(dim: usize, w1: f64) -> Vec<f64> {
    let mut p = vec![0.0; dim];
    p[0] = w1;
    p
}

/// Hessian-Lipschitz audit: for each `w1` in the sweep, measures
/// `‖H(w1,0) − H(w1+1,0)‖ / ‖Δw‖` with numerical Hessians. Violated when the
/// ratio grows monotonically and by at least 10x across the sweep, which
/// rules out any finite Lipschitz constant on the sweep range.
pub fn audit_hessian_lipschitz(
    obj: &dyn StochasticObjective,
    w1_values: &[f64],
    fd_step: f64,
) -> AuditReport {
    assert!(
        w1_values.windows(2).all(|w| w[0] < w[1]) && w1_values.iter().all(|&v| v > 0.0),
        "w1 sweep must be increasing and positive"
    );
    let mut witnesses = Vec::new();
    let mut ratios = Vec::new();
    for &w1 in w1_values {
        let p = sweep_point(obj.dim(), w1);
        let q = sweep_point(obj.dim(), w1 + 1.0);
        let hp = numerical_hessian(obj, &p, fd_step);
        let hq = numerical_hessian(obj, &q, fd_step);
        let diff: Vec<Vec<f64>> = hp
            .iter()
            .zip(&hq)
            .map(|(rp, rq)| rp.iter().zip(rq).map(|(a, b)| a - b).collect())
            .collect();
        let ratio = frobenius(&diff); // / ||Δw|| = 1
        ratios.push(ratio);
        witnesses.push(Witness {
            point: p,
            measured: ratio,
            note: format!("||H(w1,0) - H(w1+1,0)|| / ||dw|| at w1 = {w1}"),
        });
    }
    let increasing = ratios.windows(2).all(|r| r[1] > r[0]);
    let first = ratios.first().copied().unwrap_or(0.0);
    let last = ratios.last().copied().unwrap_or(0.0);
    let grows = increasing && first >= 0.0 && last >= 10.0 * first.max(1e-12);
    if grows {
        // Fitted growth exponent of ratio ~ w1^k over the sweep ends.
        let k = (last / first.max(1e-300)).ln()
            / (w1_values.last().unwrap() / w1_values.first().unwrap()).ln();
        witnesses.push(Witness {
            point: vec![],
            measured: k,
            note: format!(
                "fitted growth exponent over w1 in [{}, {}]; no finite Lipschitz constant fits",
                w1_values.first().unwrap(),
                w1_values.last().unwrap()
            ),
        });
    }
    AuditReport {
        assumption: "rho-Hessian-Lipschitz".into(),
        witnesses,
        verdict: if grows {
            Verdict::Violated
        } else {
            Verdict::NotViolatedHere
        },
    }
}

/// PL-condition audit on the toy net: at the saddle `(0,0)` the gradient
/// vanishes while `L − L* = 0.25`, so no `μ > 0` can satisfy
/// `‖∇L‖² ≥ μ(L − L*)`.
pub fn audit_pl(obj: &ToyNetObjective) -> AuditReport {
    let l_star = 2.25;
    let mut witnesses = Vec::new();
    let mut violated = false;
    for point in [vec![0.0, 0.0], vec![1.0, 0.5], vec![0.0, -1.0]] {
        let g2 = l2_norm(&obj.mean_grad(&point).unwrap()).powi(2);
        let gap = obj.mean_loss(&point) - l_star;
        if g2 <= 1e-20 && gap >= 0.1 {
            violated = true;
        }
        witnesses.push(Witness {
            point,
            measured: g2,
            note: format!("||grad L||^2 with L - L* = {gap:.6}"),
        });
    }
    AuditReport {
        assumption: "PL-condition".into(),
        witnesses,
        verdict: if violated {
            Verdict::Violated
        } else {
            Verdict::NotViolatedHere
        },
    }
}

/// Closed-form eigendecomposition of a symmetric 2x2 matrix; returns
/// (lambda_min, v_min, lambda_max).
fn symmetric_eig_min_2x2(h: &[Vec<f64>]) -> (f64, [f64; 2], f64) {
    let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l_min = half_tr - disc;
    let l_max = half_tr + disc;
    let v = if b.abs() > 1e-14 {
        let v = [b, l_min - a];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    } else if a <= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    (l_min, v, l_max)
}

/// Correlated-negative-curvature audit: measures
/// `E_x[⟨v_min, ∇L̂(x, w)⟩²]` at the saddle, where `v_min` is the
/// minimum-eigenvalue direction of the (numerical) Hessian. The sampled
/// gradient vanishes for every atom at `(0,0)`, so the expectation is exactly
/// zero and no `γ > 0` exists.
pub fn audit_cnc(obj: &ToyNetObjective, fd_step: f64) -> AuditReport {
    let mut witnesses = Vec::new();
    let mut measured_at_saddle = f64::NAN;
    for point in [vec![0.0, 0.0], vec![0.5, 0.5]] {
        let h = numerical_hessian(obj, &point, fd_step);
        let (l_min, v_min, _) = symmetric_eig_min_2x2(&h);
        // Eigen identity check: <v, H v> = lambda_min.
        let hv = [
            h[0][0] * v_min[0] + h[0][1] * v_min[1],
            h[1][0] * v_min[0] + h[1][1] * v_min[1],
        ];
        let rayleigh = v_min[0] * hv[0] + v_min[1] * hv[1];
        debug_assert!((rayleigh - l_min).abs() < 1e-8);

        let mut expectation = 0.0;
        for (x, p) in obj.noise().atoms() {
            let g = obj.sample_grad(&point, x).unwrap();
            let dot = v_min[0] * g[0] + v_min[1] * g[1];
            expectation += p * dot * dot;
        }
        if point == [0.0, 0.0] {
            measured_at_saddle = expectation;
        }
        witnesses.push(Witness {
            point,
            measured: expectation,
            note: format!("E[<v_min, grad Lhat>^2], lambda_min = {l_min:.4}"),
        });
    }
    AuditReport {
        assumption: "correlated-negative-curvature".into(),
        witnesses,
        verdict: if measured_at_saddle == 0.0 {
            Verdict::Violated
        } else {
            Verdict::NotViolatedHere
        },
    }
}

/// One-point strong convexity audit: every candidate where the sampled
/// gradient vanishes for all atoms is a stationary point of the
/// noise-convolved landscape; two or more distinct such points rule the
/// condition out.
///
/// Candidates are built from `w2_values`: `(0, w2)` for 2-D objectives, `(v)`
/// for 1-D ones.
pub fn audit_one_point_convexity(
    obj: &dyn StochasticObjective,
    w2_values: &[f64],
) -> AuditReport {
    assert!(w2_values.iter().all(|&v| v <= 0.0), "candidates must have w2 <= 0");
    let mut witnesses = Vec::new();
    let mut stationary = 0usize;
    for &v in w2_values {
        let point = if obj.dim() == 2 { vec![0.0, v] } else { vec![v] };
        let worst = obj
            .noise()
            .atoms()
            .iter()
            .map(|&(x, _)| l2_norm(&obj.sample_grad(&point, x).unwrap()))
            .fold(0.0f64, f64::max);
        let is_stationary = worst <= 1e-15;
        if is_stationary {
            stationary += 1;
        }
        witnesses.push(Witness {
            point,
            measured: worst,
            note: if is_stationary {
                "max over atoms of ||grad Lhat||: stationary under the noise convolution".into()
            } else {
                "max over atoms of ||grad Lhat||".into()
            },
        });
    }
    AuditReport {
        assumption: "one-point-strong-convexity".into(),
        witnesses,
        verdict: if stationary >= 2 {
            Verdict::Violated
        } else {
            Verdict::NotViolatedHere
        },
    }
}

/// The four audits on the toy net plus the two controls on a convex
/// quadratic, bundled for the CLI.
pub fn full_audit(fd_step: f64) -> Vec<AuditReport> {
    let toynet = ToyNetObjective::new();
    let control = crate::landscapes::QuadraticObjective::new(2.0);
    vec![
        audit_hessian_lipschitz(&toynet, &[1.0, 2.0, 4.0, 8.0, 16.0], fd_step),
        audit_pl(&toynet),
        audit_cnc(&toynet, fd_step),
        audit_one_point_convexity(&toynet, &[0.0, -0.5, -1.0]),
        audit_hessian_lipschitz(&control, &[1.0, 2.0, 4.0, 8.0, 16.0], fd_step),
        audit_one_point_convexity(&control, &[0.0, -0.5, -1.0]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::QuadraticObjective;

    #[test]
    fn hessian_lipschitz_violated_on_toynet() {
        let tn = ToyNetObjective::new();
        let report = audit_hessian_lipschitz(&tn, &[1.0, 2.0, 4.0, 8.0, 16.0], DEFAULT_FD_STEP);
        assert_eq!(report.verdict, Verdict::Violated);
        let ratios: Vec<f64> = report
            .witnesses
            .iter()
            .filter(|w| !w.point.is_empty())
            .map(|w| w.measured)
            .collect();
        assert!(ratios.windows(2).all(|r| r[1] > r[0]), "{ratios:?}");
        assert!(ratios[4] >= 10.0 * ratios[0]);
    }

    #[test]
    fn hessian_lipschitz_control_on_quadratic() {
        let quad = QuadraticObjective::new(2.0);
        let report = audit_hessian_lipschitz(&quad, &[1.0, 2.0, 4.0, 8.0, 16.0], DEFAULT_FD_STEP);
        assert_eq!(report.verdict, Verdict::NotViolatedHere);
        for w in &report.witnesses {
            assert!(w.measured.abs() < 1e-8, "constant Hessian: {w:?}");
        }
    }

    #[test]
    fn pl_violated_with_witness_values() {
        let report = audit_pl(&ToyNetObjective::new());
        assert_eq!(report.verdict, Verdict::Violated);
        let saddle = &report.witnesses[0];
        assert_eq!(saddle.point, vec![0.0, 0.0]);
        assert_eq!(saddle.measured, 0.0);
        assert!(saddle.note.contains("0.25"));
        // A global-minimum point is consistent with PL: grad = 0 and gap = 0.
        let global = &report.witnesses[1];
        assert!(global.measured.abs() < 1e-20);
    }

    #[test]
    fn cnc_violated_at_saddle_positive_elsewhere() {
        let report = audit_cnc(&ToyNetObjective::new(), DEFAULT_FD_STEP);
        assert_eq!(report.verdict, Verdict::Violated);
        assert_eq!(report.witnesses[0].measured, 0.0);
        assert!(report.witnesses[1].measured > 1e-6);
    }

    #[test]
    fn one_point_convexity_violated_on_toynet_only() {
        let report = audit_one_point_convexity(&ToyNetObjective::new(), &[0.0, -0.5, -1.0]);
        assert_eq!(report.verdict, Verdict::Violated);
        for w in &report.witnesses {
            assert_eq!(w.measured, 0.0);
        }

        let quad = QuadraticObjective::new(2.0);
        let report = audit_one_point_convexity(&quad, &[0.0, -0.5, -1.0]);
        assert_eq!(report.verdict, Verdict::NotViolatedHere);
    }

    #[test]
    fn verdicts_stable_under_fd_step() {
        let tn = ToyNetObjective::new();
        for step in [1e-3, 1e-5] {
            assert_eq!(
                audit_hessian_lipschitz(&tn, &[1.0, 2.0, 4.0, 8.0, 16.0], step).verdict,
                Verdict::Violated
            );
            assert_eq!(audit_cnc(&tn, step).verdict, Verdict::Violated);
        }
        let reports_a = full_audit(1e-3);
        let reports_b = full_audit(1e-5);
        for (a, b) in reports_a.iter().zip(&reports_b) {
            assert_eq!(a.verdict, b.verdict, "{}", a.assumption);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = full_audit(DEFAULT_FD_STEP);
        let b = full_audit(DEFAULT_FD_STEP);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
