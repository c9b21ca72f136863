use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Worst analytic/numeric disagreement found by [`grad_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (parameter index, flat entry) where the maximum occurred.
    pub worst: Option<(usize, usize)>,
    pub entries_checked: usize,
}

/// Compares reverse-mode gradients of a scalar program against central
/// differences `(f(θ+ε) − f(θ−ε)) / 2ε`, entry by entry.
///
/// `program` receives a fresh tape and one trainable leaf per entry of
/// `params` and must return a scalar node. The relative error per entry is
/// `|a − n| / max(1e-12, |a| + |n|)`.
pub fn grad_check<F>(program: F, params: &[Tensor], epsilon: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Contract(format!("epsilon must be positive, got {epsilon}")));
    }

    let eval = |values: &[Tensor]| -> Result<(Tape, Vec<Var>, Var)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.param(t.clone())).collect();
        let out = program(&mut tape, &vars)?;
        if let Some((id, op)) = tape.first_non_finite() {
            return Err(Error::NonFinite {
                context: format!("node {id} ({op}) during gradient check"),
            });
        }
        Ok((tape, vars, out))
    };

    let (tape, vars, out) = eval(params)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(params)
        .map(|(&v, p)| grads.get(v).cloned().unwrap_or_else(|| Tensor::zeros(p.shape().to_vec())))
        .collect();
    drop(tape);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    let mut probe: Vec<Tensor> = params.to_vec();
    for (pi, p) in params.iter().enumerate() {
        for k in 0..p.numel() {
            let orig = p.data()[k];
            probe[pi].data_mut()[k] = orig + epsilon;
            let (t_plus, _, o_plus) = eval(&probe)?;
            let f_plus = t_plus.value(o_plus).item();
            probe[pi].data_mut()[k] = orig - epsilon;
            let (t_minus, _, o_minus) = eval(&probe)?;
            let f_minus = t_minus.value(o_minus).item();
            probe[pi].data_mut()[k] = orig;

            let numeric = (f_plus - f_minus) / (2.0 * epsilon);
            let a = analytic[pi].data()[k];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            report.entries_checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((pi, k));
            }
        }
    }
    Ok(report)
}
