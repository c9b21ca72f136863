use crate::diffcore::{Tape, Var};
use crate::error::{Error, Result};

/// Forward-direction loss: mean over frames and joints of the squared joint
/// error (`squared = true`) or of the plain Euclidean joint error.
pub fn loss_forward(tape: &mut Tape, pred: Var, target: Var, squared: bool) -> Result<Var> {
    if squared {
        tape.mean_sq_norm(pred, target)
    } else {
        tape.mean_norm(pred, target)
    }
}

/// Reverse-direction loss; the same formula applied to the reversed pair.
pub fn loss_reverse(tape: &mut Tape, pred: Var, target: Var, squared: bool) -> Result<Var> {
    loss_forward(tape, pred, target, squared)
}

/// `L = L_f + L_r` over whichever terms are active. A single active term is
/// returned as is.
pub fn loss_total(tape: &mut Tape, forward: Option<Var>, reverse: Option<Var>) -> Result<Var> {
    match (forward, reverse) {
        (Some(f), Some(r)) => tape.add(f, r),
        (Some(f), None) => Ok(f),
        (None, Some(r)) => Ok(r),
        (None, None) => Err(Error::Config("no loss terms are active".into())),
    }
}
