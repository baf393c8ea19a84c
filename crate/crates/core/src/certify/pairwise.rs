use crate::edit_metrics::EditDecomposition;

/// Range the smoothed score of `x` can take given `p_y` at a neighbour `x̃`,
/// where `dec` counts the operations turning `x̃` into `x`.
///
/// Not clipped to `[0, 1]`.
pub fn pairwise_bounds(p_y: f64, dec: &EditDecomposition, p_del: f64) -> (f64, f64) {
    let (del, ins, sub) = (dec.n_del as i32, dec.n_ins as i32, dec.n_sub as i32);
    let scale = p_del.powi(del - ins);
    // grouped so that zero edits return p_y exactly
    let lower = scale * (p_y - (1.0 - p_del.powi(sub + ins)));
    let upper = scale * p_y + (1.0 - p_del.powi(sub + del));
    (lower, upper)
}
