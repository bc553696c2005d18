use super::{Graph, ParamId, ParamStore, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter, flat index, analytic and numeric gradient of the worst
    /// coordinate.
    pub worst: Option<(String, usize, f64, f64)>,
    pub coords_checked: usize,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares backward gradients of every trainable parameter with central
/// differences of step `eps`. The fourth-order stencil keeps truncation error
/// small at steps large enough that rounding does not swamp small gradients.
/// `stride` > 1 samples every `stride`-th coordinate.
pub fn grad_check<T, F>(
    store: &ParamStore<T>,
    f: F,
    eps: f64,
    stride: usize,
) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&mut Graph<'_, T>) -> Result<Var>,
{
    let eval = |s: &ParamStore<T>| -> Result<f64> {
        let mut g = Graph::new(s, false);
        let loss = f(&mut g)?;
        let v = g.scalar(loss).as_f64();
        if !v.is_finite() {
            return Err(Error::NonFinite("grad_check objective".into()));
        }
        Ok(v)
    };

    let mut g = Graph::new(store, false);
    let loss = f(&mut g)?;
    g.backward(loss)?;
    let analytic: Vec<(ParamId, Vec<T>)> = g
        .param_grads()
        .into_iter()
        .map(|(id, gr)| (id, gr.to_vec()))
        .collect();
    let analytic_of = |id: ParamId| analytic.iter().find(|(p, _)| *p == id).map(|(_, g)| g);

    let mut work = store.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coords_checked: 0,
    };
    let stride = stride.max(1);
    for id in store.ids() {
        if !store.is_trainable(id) {
            continue;
        }
        let len = store.get(id).len();
        for j in (0..len).step_by(stride) {
            let orig = store.get(id).data()[j];
            let mut at = |offset: f64| -> Result<f64> {
                work.get_mut(id).data_mut()[j] = orig + T::lit(offset);
                let v = eval(&work);
                work.get_mut(id).data_mut()[j] = orig;
                v
            };
            let numeric = (8.0 * (at(eps)? - at(-eps)?) - (at(2.0 * eps)? - at(-2.0 * eps)?))
                / (12.0 * eps);
            let a = analytic_of(id).map_or(0.0, |g| g[j].as_f64());
            if !a.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", store.name(id))));
            }
            let err = relative_error(a, numeric);
            report.coords_checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((store.name(id).to_string(), j, a, numeric));
            }
        }
    }
    Ok(report)
}
